//! Synthetic rosters, voter files, ground-truth links, and planted causal
//! effects, plus the brute-force all-pairs matcher used as a blocking and
//! scoring oracle.
//!
//! Generation is seed-deterministic and runs per state with derived
//! sub-seeds, so output is independent of thread count. Each true-linked
//! booking derives its identity fields from its voter record through a
//! per-character typo model and per-field missingness; turnout comes from a
//! linear probability model embedding the planted effects, so planted
//! coefficients equal the estimands of the study regressions.

use crate::blocking::{Block, BlockSet};
use crate::calendar::{fips_prefix_for_state, VotingCalendar, ELECTION_DAY_2012, ELECTION_DAY_2016, ELECTION_DAY_2020};
use crate::error::{Error, Result};
use crate::identity;
use crate::linkage::{link, ExclusionAudit, FSParameters, LinkConfig, LinkedRecord};
use crate::rng::{stage_rng, sub_seed};
use crate::roster::{expand_to_snapshots, BookingSpell, ChargeCategory, Gender, RosterSnapshot};
use crate::voter::{Party, Race, VoterRecord};
use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const FIRST_NAMES_CSV: &str = include_str!("../data/first_names.csv");
const SURNAMES_CSV: &str = include_str!("../data/surnames.csv");

/// First day of the roster observation window.
pub const WINDOW_START: NaiveDate = match NaiveDate::from_ymd_opt(2020, 8, 5) {
    Some(d) => d,
    None => unreachable!(),
};
/// Last booking entry date generated.
pub const WINDOW_END: NaiveDate = match NaiveDate::from_ymd_opt(2021, 2, 1) {
    Some(d) => d,
    None => unreachable!(),
};
/// Last roster observation date; later exits are censored.
pub const OBSERVATION_END: NaiveDate = match NaiveDate::from_ymd_opt(2021, 2, 15) {
    Some(d) => d,
    None => unreachable!(),
};

/// Per-character corruption rates applied to booking-side names.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TypoModel {
    pub substitution: f64,
    pub transposition: f64,
    pub deletion: f64,
}

impl Default for TypoModel {
    fn default() -> Self {
        TypoModel {
            substitution: 0.005,
            transposition: 0.003,
            deletion: 0.002,
        }
    }
}

impl TypoModel {
    pub fn none() -> Self {
        TypoModel {
            substitution: 0.0,
            transposition: 0.0,
            deletion: 0.0,
        }
    }
}

/// Per-field missingness rates on the booking side.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MissingnessRates {
    pub booking_age: f64,
    pub booking_gender: f64,
    pub booking_middle: f64,
    pub charges: f64,
}

impl Default for MissingnessRates {
    fn default() -> Self {
        MissingnessRates {
            booking_age: 0.03,
            booking_gender: 0.05,
            booking_middle: 0.35,
            charges: 0.04,
        }
    }
}

/// Planted causal parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlantedEffects {
    /// Turnout shift from any confinement during voting days.
    pub ate_binary: f64,
    /// Turnout slope in the proportion of voting days confined.
    pub slope_proportion: f64,
    /// Additional proportion slope for Black registered voters.
    pub black_extra_slope: f64,
    /// Registration-probability shift from confinement during voting days.
    pub registration_effect: f64,
}

impl Default for PlantedEffects {
    fn default() -> Self {
        PlantedEffects {
            ate_binary: -0.03,
            slope_proportion: -0.12,
            black_extra_slope: -0.05,
            registration_effect: -0.02,
        }
    }
}

impl PlantedEffects {
    pub fn null() -> Self {
        PlantedEffects {
            ate_binary: 0.0,
            slope_proportion: 0.0,
            black_extra_slope: 0.0,
            registration_effect: 0.0,
        }
    }
}

/// Baseline turnout structure of the linear probability model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BaseTurnout {
    pub intercept: f64,
    pub black_shift: f64,
    pub other_shift: f64,
    pub democrat_shift: f64,
    pub republican_shift: f64,
    /// Per year of age over 40.
    pub age_slope: f64,
    pub jail_sd: f64,
    pub week_sd: f64,
}

impl Default for BaseTurnout {
    fn default() -> Self {
        BaseTurnout {
            intercept: 0.38,
            black_shift: -0.08,
            other_shift: -0.03,
            democrat_shift: 0.02,
            republican_shift: 0.03,
            age_slope: 0.002,
            jail_sd: 0.02,
            week_sd: 0.004,
        }
    }
}

/// Optional covariate drift for entries earlier than a cutoff, used to
/// plant imbalance for the window-search checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CovariateDrift {
    /// Drift applies to bookings entering more than this many days before
    /// Election Day.
    pub days_before_election: i64,
    pub age_shift: f64,
    pub charges_shift: f64,
}

/// Full generator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_voters: usize,
    pub n_bookings: usize,
    pub states: Vec<String>,
    pub counties_per_state: usize,
    pub typo: TypoModel,
    pub missing: MissingnessRates,
    /// Probability a booked person is a registered voter (before the
    /// planted registration effect).
    pub true_match_rate: f64,
    /// Probability a booking slot is a repeat booking of the previous
    /// person.
    pub repeat_booking_rate: f64,
    /// Probability a repeat booking overlaps the previous spell.
    pub overlap_rate: f64,
    pub effects: PlantedEffects,
    pub base_turnout: BaseTurnout,
    pub drift: Option<CovariateDrift>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_voters: 100_000,
            n_bookings: 10_000,
            states: [
                "NC", "WA", "TX", "GA", "PA", "OH", "FL", "MI", "WI", "AZ", "CA", "NY", "IL",
                "VA", "CO", "MN",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            counties_per_state: 12,
            typo: TypoModel::default(),
            missing: MissingnessRates::default(),
            true_match_rate: 0.35,
            repeat_booking_rate: 0.02,
            overlap_rate: 0.1,
            effects: PlantedEffects::default(),
            base_turnout: BaseTurnout::default(),
            drift: None,
        }
    }
}

/// One ground-truth link between a generated booking and a voter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthLink {
    /// Booking id as it appears after spell reconstruction.
    pub booking_id: String,
    pub voter_id: String,
}

/// Sidecar truth: planted parameters plus realized generation counts. Read
/// only by test harnesses, never by the pipeline under test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthEffects {
    pub effects: PlantedEffects,
    pub n_true_links: usize,
    pub n_bookings: usize,
    pub n_voters: usize,
}

/// Generator output.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub snapshots: Vec<RosterSnapshot>,
    pub voters: Vec<VoterRecord>,
    /// Ground-truth spells behind the snapshots (entry/exit as generated).
    pub truth_spells: Vec<BookingSpell>,
    pub truth_links: Vec<TruthLink>,
    pub truth: TruthEffects,
}

/// Booking id assigned by spell reconstruction to a contiguous generated
/// booking.
pub fn expected_ingested_id(facility_id: &str, original_booking_id: &str) -> String {
    format!("{facility_id}:bn:{original_booking_id}:0")
}

struct NamePool {
    names: Vec<String>,
    cumulative: Vec<f64>,
}

impl NamePool {
    fn parse(csv_text: &str) -> NamePool {
        let mut names = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0.0f64;
        for line in csv_text.lines().skip(1) {
            let (name, weight) = line.split_once(',').expect("name,weight");
            total += weight.parse::<f64>().expect("weight");
            names.push(name.to_string());
            cumulative.push(total);
        }
        NamePool { names, cumulative }
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> &str {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen_range(0.0..total);
        let idx = self.cumulative.partition_point(|&c| c <= x);
        &self.names[idx.min(self.names.len() - 1)]
    }
}

/// Draw the booking's most severe charge from the observed top-charge
/// shares, then pad with categories no more severe than it.
fn draw_charges(n: usize, rng: &mut ChaCha12Rng) -> Vec<ChargeCategory> {
    use ChargeCategory::*;
    let x: f64 = rng.gen();
    let top = if x < 0.28 {
        Violent
    } else if x < 0.48 {
        Property
    } else if x < 0.61 {
        Drug
    } else if x < 0.91 {
        PublicOrder
    } else if x < 0.97 {
        Dui
    } else {
        CriminalTraffic
    };
    let mut charges = vec![top];
    let lesser: Vec<ChargeCategory> = ChargeCategory::ALL
        .iter()
        .copied()
        .filter(|c| *c <= top)
        .collect();
    for _ in 1..n {
        charges.push(lesser[rng.gen_range(0..lesser.len())]);
    }
    charges
}

fn apply_typos(name: &str, typo: &TypoModel, rng: &mut ChaCha12Rng) -> String {
    let mut chars: Vec<char> = name.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let roll: f64 = rng.gen();
        if roll < typo.substitution {
            chars[i] = rng.gen_range(b'A'..=b'Z') as char;
        } else if roll < typo.substitution + typo.transposition && i + 1 < chars.len() {
            chars.swap(i, i + 1);
            i += 1;
        } else if roll < typo.substitution + typo.transposition + typo.deletion && chars.len() > 1 {
            chars.remove(i);
            continue;
        }
        i += 1;
    }
    chars.into_iter().collect()
}

struct Person {
    first: String,
    middle: String,
    last: String,
    age: i64,
    gender: Gender,
    race: Race,
    party: Party,
    fips: String,
}

fn draw_person(
    firsts: &NamePool,
    surnames: &NamePool,
    counties: &[String],
    rng: &mut ChaCha12Rng,
) -> Person {
    let first = firsts.draw(rng).to_string();
    // voter files carry full middle names; rosters may truncate to initials
    let middle = if rng.gen_bool(0.6) {
        firsts.draw(rng).to_string()
    } else {
        String::new()
    };
    let last = surnames.draw(rng).to_string();
    let age = rng.gen_range(18..=75);
    let gender = if rng.gen_bool(0.78) { Gender::Male } else { Gender::Female };
    let race = {
        let x: f64 = rng.gen();
        if x < 0.60 {
            Race::White
        } else if x < 0.87 {
            Race::Black
        } else {
            Race::Other
        }
    };
    let party = {
        let x: f64 = rng.gen();
        if x < 0.41 {
            Party::Democratic
        } else if x < 0.61 {
            Party::Republican
        } else {
            Party::Other
        }
    };
    let fips = counties[rng.gen_range(0..counties.len())].clone();
    Person {
        first,
        middle,
        last,
        age,
        gender,
        race,
        party,
        fips,
    }
}

fn length_of_stay(rng: &mut ChaCha12Rng) -> i64 {
    // exponential-ish with mean near 44 days, floored at 1
    let u: f64 = rng.gen_range(1e-9..1.0);
    ((-44.0 * u.ln()).ceil() as i64).clamp(1, 400)
}

/// Booking entry date: a uniform background over the whole window plus
/// components concentrated around Election Day and in early fall, so both
/// the boundary weeks and the long-exposure region carry desk-scale mass.
fn entry_date(rng: &mut ChaCha12Rng, normal: &Normal<f64>) -> NaiveDate {
    let x: f64 = rng.gen();
    let date = if x < 0.35 {
        let span = (WINDOW_END - WINDOW_START).num_days();
        return WINDOW_START + Duration::days(rng.gen_range(0..=span));
    } else if x < 0.85 {
        let offset = (normal.sample(rng) * 24.0).round() as i64;
        ELECTION_DAY_2020 + Duration::days(offset)
    } else {
        let offset = (normal.sample(rng) * 15.0).round() as i64;
        NaiveDate::from_ymd_opt(2020, 9, 25).unwrap() + Duration::days(offset)
    };
    date.clamp(WINDOW_START, WINDOW_END)
}

fn registration_date(rng: &mut ChaCha12Rng) -> NaiveDate {
    let x: f64 = rng.gen();
    if x < 0.86 {
        // long-standing registration
        let days = rng.gen_range(0..10_000);
        NaiveDate::from_ymd_opt(1992, 1, 1).unwrap() + Duration::days(days)
    } else if x < 0.985 {
        // registered during 2020, before Election Day
        let days = rng.gen_range(0..300);
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Duration::days(days.min(306))
    } else {
        // registered after Election Day
        ELECTION_DAY_2020 + Duration::days(rng.gen_range(1..50))
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.02, 0.98)
}

struct StateOutput {
    snapshots: Vec<RosterSnapshot>,
    voters: Vec<VoterRecord>,
    truth_spells: Vec<BookingSpell>,
    truth_links: Vec<TruthLink>,
}

/// Generate synthetic data for the whole configuration.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<SynthOutput> {
    if config.states.is_empty() {
        return Err(Error::InfeasibleConfig("no states configured".into()));
    }
    if config.n_voters < config.n_bookings {
        return Err(Error::InfeasibleConfig(format!(
            "{} voters cannot host links for {} bookings",
            config.n_voters, config.n_bookings
        )));
    }
    for s in &config.states {
        if fips_prefix_for_state(s).is_none() {
            return Err(Error::InfeasibleConfig(format!("unknown state {s:?}")));
        }
    }
    let calendar = VotingCalendar::default_2020();
    for s in &config.states {
        calendar.window(s)?;
    }

    let firsts = NamePool::parse(FIRST_NAMES_CSV);
    let surnames = NamePool::parse(SURNAMES_CSV);

    let n_states = config.states.len();
    let per_state: Vec<(usize, usize)> = (0..n_states)
        .map(|i| {
            let voters = config.n_voters / n_states + usize::from(i < config.n_voters % n_states);
            let bookings = config.n_bookings / n_states + usize::from(i < config.n_bookings % n_states);
            (voters, bookings)
        })
        .collect();

    let outputs: Vec<Result<StateOutput>> = config
        .states
        .par_iter()
        .enumerate()
        .map(|(i, state)| {
            generate_state(
                config,
                state,
                per_state[i].0,
                per_state[i].1,
                &firsts,
                &surnames,
                &calendar,
                sub_seed(seed, "synth-state", i as u64),
            )
        })
        .collect();

    let mut snapshots = Vec::new();
    let mut voters = Vec::new();
    let mut truth_spells = Vec::new();
    let mut truth_links = Vec::new();
    for out in outputs {
        let out = out?;
        snapshots.extend(out.snapshots);
        voters.extend(out.voters);
        truth_spells.extend(out.truth_spells);
        truth_links.extend(out.truth_links);
    }

    let truth = TruthEffects {
        effects: config.effects,
        n_true_links: truth_links.len(),
        n_bookings: truth_spells.len(),
        n_voters: voters.len(),
    };
    Ok(SynthOutput {
        snapshots,
        voters,
        truth_spells,
        truth_links,
        truth,
    })
}

#[allow(clippy::too_many_arguments)]
fn generate_state(
    config: &SynthConfig,
    state: &str,
    n_voters: usize,
    n_bookings: usize,
    firsts: &NamePool,
    surnames: &NamePool,
    calendar: &VotingCalendar,
    seed: u64,
) -> Result<StateOutput> {
    let mut rng = stage_rng(seed, "state");
    let prefix = fips_prefix_for_state(state).expect("validated state");
    let window = calendar.window(state)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let counties: Vec<String> = (0..config.counties_per_state)
        .map(|i| format!("{prefix}{:03}", 2 * i + 1))
        .collect();
    let jail_effects: Vec<f64> = counties
        .iter()
        .map(|c| {
            let mut r = stage_rng(seed, &format!("jail-effect:{c}"));
            normal.sample(&mut r) * config.base_turnout.jail_sd
        })
        .collect();
    let week_effect = |entry: NaiveDate| -> f64 {
        let iso = chrono::Datelike::iso_week(&entry);
        let mut r = stage_rng(seed, &format!("week-effect:{}-{}", iso.year(), iso.week()));
        normal.sample(&mut r) * config.base_turnout.week_sd
    };

    struct BookedPerson {
        person: Person,
        bookings: Vec<(NaiveDate, NaiveDate)>, // entry, exit (uncensored)
        treated: bool,
        proportion: f64,
        registered: bool,
        registration: NaiveDate,
        voter_idx: Option<usize>,
    }

    // 1. booked persons with booking slots
    let mut booked: Vec<BookedPerson> = Vec::new();
    let mut slots = 0usize;
    while slots < n_bookings {
        let repeat = !booked.is_empty() && rng.gen_bool(config.repeat_booking_rate);
        if repeat {
            let last = booked.last_mut().unwrap();
            let (prev_entry, prev_exit) = *last.bookings.last().unwrap();
            let overlap = rng.gen_bool(config.overlap_rate);
            let entry = if overlap && prev_exit > prev_entry {
                prev_entry + Duration::days(rng.gen_range(1..=(prev_exit - prev_entry).num_days()))
            } else {
                prev_exit + Duration::days(rng.gen_range(2..40))
            };
            if entry <= WINDOW_END {
                let exit = entry + Duration::days(length_of_stay(&mut rng) - 1);
                last.bookings.push((entry, exit));
                slots += 1;
            } else {
                // out of window; fall through to a fresh person next round
            }
            continue;
        }

        let mut person = draw_person(firsts, surnames, &counties, &mut rng);
        let entry = entry_date(&mut rng, &normal);
        let exit = entry + Duration::days(length_of_stay(&mut rng) - 1);

        // planted covariate drift for early entries
        if let Some(drift) = config.drift {
            let cutoff = ELECTION_DAY_2020 - Duration::days(drift.days_before_election);
            if entry < cutoff {
                person.age = (person.age as f64 + drift.age_shift).round() as i64;
            }
        }

        let treated = entry >= window.first_voting_day && entry <= ELECTION_DAY_2020;
        let proportion = if treated {
            crate::calendar::proportion_for_dates(entry, exit, state, calendar)?
        } else {
            0.0
        };

        // a small share of booked persons are under 18 and never registered
        let underage = rng.gen_bool(0.01);
        if underage {
            person.age = rng.gen_range(15..18);
        }
        let reg_prob = (config.true_match_rate
            + config.effects.registration_effect * f64::from(treated))
        .clamp(0.0, 1.0);
        let registered = !underage && rng.gen_bool(reg_prob);
        let registration = registration_date(&mut rng);

        booked.push(BookedPerson {
            person,
            bookings: vec![(entry, exit)],
            treated,
            proportion,
            registered,
            registration,
            voter_idx: None,
        });
        slots += 1;
    }

    // 2. voter records: registered booked persons first, then fillers
    let mut voters: Vec<VoterRecord> = Vec::new();
    let race_reported = {
        // roughly 60 percent of states report race; keyed off the state seed
        let mut r = stage_rng(seed, "race-reported");
        r.gen_bool(0.6)
    };
    for bp in booked.iter_mut() {
        if !bp.registered {
            continue;
        }
        let p = &bp.person;
        let name = identity::from_components(&p.first, &p.middle, &p.last)?;
        let race_known = rng.gen_bool(0.97);
        bp.voter_idx = Some(voters.len());
        voters.push(VoterRecord {
            voter_id: format!("{state}-V{:06}", voters.len()),
            state: state.to_string(),
            fips: p.fips.clone(),
            name,
            age: Some(p.age),
            gender: p.gender,
            race: race_known.then_some(p.race),
            race_reported,
            party: Some(p.party),
            registration_date: Some(bp.registration),
            voted_2020: false,
            voted_2016: false,
            voted_2012: false,
        });
    }
    while voters.len() < n_voters {
        let p = draw_person(firsts, surnames, &counties, &mut rng);
        let name = identity::from_components(&p.first, &p.middle, &p.last)?;
        let race_known = rng.gen_bool(0.97);
        voters.push(VoterRecord {
            voter_id: format!("{state}-V{:06}", voters.len()),
            state: state.to_string(),
            fips: p.fips.clone(),
            name,
            age: Some(p.age),
            gender: p.gender,
            race: race_known.then_some(p.race),
            race_reported,
            party: Some(p.party),
            registration_date: Some(registration_date(&mut rng)),
            voted_2020: false,
            voted_2016: false,
            voted_2012: false,
        });
    }

    // 3. turnout from the linear probability model
    let county_index = |fips: &str| counties.iter().position(|c| c == fips).unwrap_or(0);
    let voter_to_booked: std::collections::HashMap<usize, usize> = booked
        .iter()
        .enumerate()
        .filter_map(|(bi, b)| b.voter_idx.map(|vi| (vi, bi)))
        .collect();
    let base = &config.base_turnout;
    for (vi, voter) in voters.iter_mut().enumerate() {
        let race = voter.race.unwrap_or(Race::Other);
        let party = voter.party.unwrap_or(Party::Other);
        let age = voter.age.unwrap_or(40) as f64;
        let mut p = base.intercept
            + match race {
                Race::Black => base.black_shift,
                Race::Other => base.other_shift,
                Race::White => 0.0,
            }
            + match party {
                Party::Democratic => base.democrat_shift,
                Party::Republican => base.republican_shift,
                Party::Other => 0.0,
            }
            + base.age_slope * (age - 40.0);

        // booking terms for booked registered voters; the planted treatment
        // effects touch 2020 turnout only, earlier elections see just the
        // persistent individual and facility terms
        let mut p_2020 = p;
        if let Some(&bi) = voter_to_booked.get(&vi) {
            let bp = &booked[bi];
            let (entry, _) = bp.bookings[0];
            let shared = jail_effects[county_index(&bp.person.fips)] + week_effect(entry);
            p += shared;
            p_2020 = p;
            if bp.treated {
                let black = f64::from(race == Race::Black);
                p_2020 += config.effects.ate_binary
                    + config.effects.slope_proportion * bp.proportion
                    + config.effects.black_extra_slope * bp.proportion * black;
            }
        }

        let reg = voter.registration_date.unwrap();
        voter.voted_2020 = reg <= ELECTION_DAY_2020 && rng.gen_bool(clamp_prob(p_2020));
        voter.voted_2016 = reg <= ELECTION_DAY_2016 && rng.gen_bool(clamp_prob(p + 0.06));
        voter.voted_2012 = reg <= ELECTION_DAY_2012 && rng.gen_bool(clamp_prob(p + 0.12));
    }

    // 4. booking spells with corrupted identity fields, then snapshots
    let mut truth_spells = Vec::new();
    let mut truth_links = Vec::new();
    let mut booking_seq = 0usize;
    for bp in &booked {
        let p = &bp.person;
        let facility = format!("J{}", p.fips);

        for &(entry, exit) in &bp.bookings {
            let booking_id = format!("{state}-B{booking_seq:06}");
            booking_seq += 1;

            let first = apply_typos(&p.first, &config.typo, &mut rng);
            let last = apply_typos(&p.last, &config.typo, &mut rng);
            let middle = if p.middle.is_empty() || rng.gen_bool(config.missing.booking_middle) {
                String::new()
            } else if p.middle.len() > 1 && rng.gen_bool(0.4) {
                p.middle[..1].to_string()
            } else {
                apply_typos(&p.middle, &config.typo, &mut rng)
            };
            let name = match identity::from_components(&first, &middle, &last) {
                Ok(n) => n,
                Err(_) => identity::from_components(&p.first, &p.middle, &p.last)?,
            };

            let age = if rng.gen_bool(config.missing.booking_age) {
                None
            } else {
                let err: f64 = rng.gen();
                let shift = if err < 0.80 {
                    0
                } else if err < 0.98 {
                    if rng.gen_bool(0.5) {
                        1
                    } else {
                        -1
                    }
                } else if rng.gen_bool(0.5) {
                    2
                } else {
                    -2
                };
                Some(p.age + shift)
            };
            let gender = if rng.gen_bool(config.missing.booking_gender) {
                Gender::Unknown
            } else {
                p.gender
            };

            let charges: Vec<ChargeCategory> = if rng.gen_bool(config.missing.charges) {
                Vec::new()
            } else {
                let mut n = 1 + rng.gen_range(0..4) + rng.gen_range(0..3);
                if let Some(drift) = config.drift {
                    let cutoff = ELECTION_DAY_2020 - Duration::days(drift.days_before_election);
                    if entry < cutoff {
                        n = (n as f64 + drift.charges_shift).round().max(1.0) as usize;
                    }
                }
                draw_charges(n.min(8), &mut rng)
            };

            let exit_observed = exit.min(OBSERVATION_END);
            let spell = BookingSpell {
                booking_id: booking_id.clone(),
                person_key: booking_id.clone(),
                facility_id: facility.clone(),
                fips: p.fips.clone(),
                entry_date: entry,
                exit_date: exit_observed,
                censored: exit > OBSERVATION_END,
                length_of_stay_days: (exit_observed - entry).num_days() + 1,
                age,
                gender,
                charge_count: charges.len(),
                top_charge: crate::roster::top_charge(&charges),
                name,
            };
            if let Some(vi) = bp.voter_idx {
                truth_links.push(TruthLink {
                    booking_id: expected_ingested_id(&facility, &booking_id),
                    voter_id: voters[vi].voter_id.clone(),
                });
            }
            truth_spells.push(spell);
        }
    }

    let snapshots = expand_to_snapshots(&truth_spells);
    Ok(StateOutput {
        snapshots,
        voters,
        truth_spells,
        truth_links,
    })
}

/// All-pairs within-state blocks: every booking against every in-state
/// voter. The brute-force counterpart of the soundex/age blocking.
pub fn state_cross_blocks(spells: &[BookingSpell], voters: &[VoterRecord]) -> BlockSet {
    let mut by_state: std::collections::BTreeMap<&str, (Vec<u32>, Vec<u32>)> =
        std::collections::BTreeMap::new();
    for (i, s) in spells.iter().enumerate() {
        if let Some(state) = crate::calendar::state_for_fips(&s.fips) {
            by_state.entry(state).or_default().0.push(i as u32);
        }
    }
    for (i, v) in voters.iter().enumerate() {
        by_state.entry(v.state.as_str()).or_default().1.push(i as u32);
    }
    let blocks: Vec<Block> = by_state
        .into_iter()
        .filter(|(_, (b, v))| !b.is_empty() && !v.is_empty())
        .map(|(state, (bookings, voters))| Block {
            state: state.to_string(),
            age_center: None,
            soundex: String::new(),
            bookings,
            voters,
        })
        .collect();
    BlockSet::from_parts(blocks)
}

/// Score every within-state pair with the same parameters and exclusion
/// pipeline as the blocked matcher. Oracle for blocking completeness.
pub fn brute_force_link(
    spells: &[BookingSpell],
    voters: &[VoterRecord],
    params: &FSParameters,
    config: &LinkConfig,
) -> Result<(Vec<LinkedRecord>, ExclusionAudit)> {
    if spells.len() > 500 || voters.len() > 5_000 {
        return Err(Error::BruteForceTooLarge(spells.len(), voters.len()));
    }
    let blocks = state_cross_blocks(spells, voters);
    Ok(link(&blocks, spells, voters, params, config))
}

/// Precision and recall of a link table against the truth sidecar.
/// Returns `(precision, recall)`; precision is NaN when nothing was linked.
pub fn precision_recall(links: &[LinkedRecord], truth: &[TruthLink]) -> (f64, f64) {
    use std::collections::HashSet;
    let truth_set: HashSet<(&str, &str)> = truth
        .iter()
        .map(|t| (t.booking_id.as_str(), t.voter_id.as_str()))
        .collect();
    let hits = links
        .iter()
        .filter(|l| truth_set.contains(&(l.booking_id.as_str(), l.voter_id.as_str())))
        .count();
    let precision = if links.is_empty() {
        f64::NAN
    } else {
        hits as f64 / links.len() as f64
    };
    let recall = if truth.is_empty() {
        f64::NAN
    } else {
        hits as f64 / truth.len() as f64
    };
    (precision, recall)
}
