//! Study orchestration: balanced-window selection, treatment-effect
//! estimation, placebo tests, race-interaction models, and the
//! registration/unconditional-turnout variants.
//!
//! The treatment group contains bookings beginning during a state's voting
//! days, restricted to the last `treatment_days` calendar days before
//! Election Day; the control group contains bookings beginning in the
//! `control_days` days right after Election Day. A treatment window labeled
//! `T` starts `T` days before Election Day, so `T = 60` opens on
//! September 4 and `T = 17` on October 17.

pub mod effects;
pub mod windows;

use crate::calendar::{proportion_for_dates, VotingCalendar, ELECTION_DAY_2020};
use crate::econometrics::Column;
use crate::error::{Error, Result};
use crate::linkage::LinkedRecord;
use crate::roster::{BookingSpell, ChargeCategory, Gender};
use crate::voter::{Party, Race};
use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Which population the sample covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Linked registered voters only.
    RegisteredOnly,
    /// Every booking, registered or not, with booking-side covariates.
    AllIndividuals,
}

/// One study design: control window width, treatment window label, link
/// threshold, and sample kind.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StudyDesign {
    pub control_days: i64,
    pub treatment_days: i64,
    pub threshold: f64,
    pub sample_kind: SampleKind,
}

impl StudyDesign {
    /// First entry date admitted to the treatment window.
    pub fn treatment_cutoff(&self) -> NaiveDate {
        ELECTION_DAY_2020 - Duration::days(self.treatment_days)
    }

    /// Last entry date admitted to the control window.
    pub fn control_end(&self) -> NaiveDate {
        ELECTION_DAY_2020 + Duration::days(self.control_days)
    }
}

/// The standard post-election control window widths.
pub const CONTROL_WINDOWS: [i64; 6] = [7, 14, 21, 28, 35, 42];

/// Smallest treatment window considered by the balance search.
pub const MIN_TREATMENT_DAYS: i64 = 7;

/// One analysis row: a booking classified into treatment or control with
/// its outcomes and covariates.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub jail: u32,
    pub week: u32,
    pub treated: f64,
    pub proportion: f64,
    pub voted_2020: f64,
    pub voted_2016: f64,
    pub voted_2012: f64,
    pub registered: f64,
    // voter-file covariates (zeroed for all-individuals samples)
    pub age: f64,
    pub black: f64,
    pub white: f64,
    pub male: f64,
    pub democrat: f64,
    pub republican: f64,
    // booking-side covariates
    pub jdi_age: f64,
    pub jdi_male: f64,
    pub n_charges: f64,
    pub top_dui: f64,
    pub top_drug: f64,
    pub top_property: f64,
    pub top_public_order: f64,
    pub top_violent: f64,
    pub top_criminal_traffic: f64,
    pub length_of_stay: f64,
    // restriction metadata
    pub race: Option<Race>,
    pub race_reported: bool,
    pub registration_date: Option<NaiveDate>,
    pub entry_date: NaiveDate,
    pub state: String,
}

/// Dense id interner for facility and week fixed effects.
#[derive(Default)]
struct Interner<K> {
    map: HashMap<K, u32>,
}

impl<K: std::hash::Hash + Eq> Interner<K> {
    fn get(&mut self, key: K) -> u32 {
        let next = self.map.len() as u32;
        *self.map.entry(key).or_insert(next)
    }
}

fn week_key(date: NaiveDate) -> (i32, u32) {
    let iso = date.iso_week();
    (iso.year(), iso.week())
}

enum WindowClass {
    Treated,
    Control,
    Outside,
}

fn classify(
    entry: NaiveDate,
    state: &str,
    design: &StudyDesign,
    calendar: &VotingCalendar,
) -> Result<WindowClass> {
    if entry > ELECTION_DAY_2020 {
        return Ok(if entry <= design.control_end() {
            WindowClass::Control
        } else {
            WindowClass::Outside
        });
    }
    let window = calendar.window(state)?;
    let open = window.first_voting_day.max(design.treatment_cutoff());
    Ok(if entry >= open {
        WindowClass::Treated
    } else {
        WindowClass::Outside
    })
}

/// Build the registered-voter analysis sample from linked records.
///
/// Rows with any missing voter covariate (age, gender, race, party) or
/// without parseable charges are listwise deleted, as are registrations
/// after Election Day.
pub fn build_registered_sample(
    links: &[LinkedRecord],
    design: &StudyDesign,
    calendar: &VotingCalendar,
) -> Result<Vec<StudyRow>> {
    let mut jail_ids = Interner::default();
    let mut week_ids = Interner::default();
    let mut rows = Vec::new();

    for rec in links {
        // listwise deletion on covariates
        let (Some(age), Some(race), Some(party)) = (rec.voter_age, rec.race, rec.party) else {
            continue;
        };
        if rec.voter_gender == Gender::Unknown {
            continue;
        }
        let Some(top) = rec.top_charge else { continue };
        if rec.charge_count == 0 {
            continue;
        }
        if rec.registration_date.map_or(false, |d| d > ELECTION_DAY_2020) {
            continue;
        }

        let class = classify(rec.entry_date, &rec.state, design, calendar)?;
        let treated = match class {
            WindowClass::Treated => 1.0,
            WindowClass::Control => 0.0,
            WindowClass::Outside => continue,
        };
        let proportion = if treated == 1.0 {
            proportion_for_dates(rec.entry_date, rec.exit_date, &rec.state, calendar)?
        } else {
            0.0
        };

        rows.push(StudyRow {
            jail: jail_ids.get(rec.facility_id.clone()),
            week: week_ids.get(week_key(rec.entry_date)),
            treated,
            proportion,
            voted_2020: f64::from(rec.voted_2020),
            voted_2016: f64::from(rec.voted_2016),
            voted_2012: f64::from(rec.voted_2012),
            registered: 1.0,
            age: age as f64,
            black: f64::from(race == Race::Black),
            white: f64::from(race == Race::White),
            male: f64::from(rec.voter_gender == Gender::Male),
            democrat: f64::from(party == Party::Democratic),
            republican: f64::from(party == Party::Republican),
            jdi_age: rec.booking_age.map(|a| a as f64).unwrap_or(f64::NAN),
            jdi_male: f64::from(rec.booking_gender == Gender::Male),
            n_charges: rec.charge_count as f64,
            top_dui: f64::from(top == ChargeCategory::Dui),
            top_drug: f64::from(top == ChargeCategory::Drug),
            top_property: f64::from(top == ChargeCategory::Property),
            top_public_order: f64::from(top == ChargeCategory::PublicOrder),
            top_violent: f64::from(top == ChargeCategory::Violent),
            top_criminal_traffic: f64::from(top == ChargeCategory::CriminalTraffic),
            length_of_stay: rec.length_of_stay_days as f64,
            race: Some(race),
            race_reported: rec.race_reported,
            registration_date: rec.registration_date,
            entry_date: rec.entry_date,
            state: rec.state.clone(),
        });
    }
    Ok(rows)
}

/// Build the all-individuals sample from booking spells plus the
/// 0.95-threshold link table.
///
/// Covariates come from the booking side only; rows missing booking age,
/// gender, or charges are listwise deleted.
pub fn build_all_individuals_sample(
    spells: &[BookingSpell],
    links_095: &HashMap<String, LinkedRecord>,
    design: &StudyDesign,
    calendar: &VotingCalendar,
) -> Result<Vec<StudyRow>> {
    let mut jail_ids = Interner::default();
    let mut week_ids = Interner::default();
    let mut rows = Vec::new();

    for spell in spells {
        let Some(age) = spell.age else { continue };
        if spell.gender == Gender::Unknown {
            continue;
        }
        let Some(top) = spell.top_charge else { continue };
        if spell.charge_count == 0 {
            continue;
        }
        let Some(state) = crate::calendar::state_for_fips(&spell.fips) else {
            continue;
        };

        let class = classify(spell.entry_date, state, design, calendar)?;
        let treated = match class {
            WindowClass::Treated => 1.0,
            WindowClass::Control => 0.0,
            WindowClass::Outside => continue,
        };
        let proportion = if treated == 1.0 {
            proportion_for_dates(spell.entry_date, spell.exit_date, state, calendar)?
        } else {
            0.0
        };

        let link = links_095.get(&spell.booking_id);
        let registered = link
            .map(|l| l.registration_date.map_or(true, |d| d <= ELECTION_DAY_2020))
            .unwrap_or(false);

        rows.push(StudyRow {
            jail: jail_ids.get(spell.facility_id.clone()),
            week: week_ids.get(week_key(spell.entry_date)),
            treated,
            proportion,
            voted_2020: link.map(|l| f64::from(l.voted_2020)).unwrap_or(0.0),
            voted_2016: link.map(|l| f64::from(l.voted_2016)).unwrap_or(0.0),
            voted_2012: link.map(|l| f64::from(l.voted_2012)).unwrap_or(0.0),
            registered: f64::from(registered),
            age: f64::NAN,
            black: f64::NAN,
            white: f64::NAN,
            male: f64::NAN,
            democrat: f64::NAN,
            republican: f64::NAN,
            jdi_age: age as f64,
            jdi_male: f64::from(spell.gender == Gender::Male),
            n_charges: spell.charge_count as f64,
            top_dui: f64::from(top == ChargeCategory::Dui),
            top_drug: f64::from(top == ChargeCategory::Drug),
            top_property: f64::from(top == ChargeCategory::Property),
            top_public_order: f64::from(top == ChargeCategory::PublicOrder),
            top_violent: f64::from(top == ChargeCategory::Violent),
            top_criminal_traffic: f64::from(top == ChargeCategory::CriminalTraffic),
            length_of_stay: spell.length_of_stay_days as f64,
            race: None,
            race_reported: false,
            registration_date: link.and_then(|l| l.registration_date),
            entry_date: spell.entry_date,
            state: state.to_string(),
        });
    }
    Ok(rows)
}

/// Covariate sets for balance tests and adjusted models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateSet {
    /// The twelve voter-file/booking covariates of the registered-voter
    /// analyses.
    Registered,
    /// The booking-side covariates available for all individuals.
    BookingOnly,
    /// [`CovariateSet::Registered`] without the white indicator, for the
    /// Black/white interaction models where white is collinear.
    RegisteredNoWhite,
}

pub fn covariate_columns(rows: &[StudyRow], set: CovariateSet) -> Vec<Column> {
    let mut cols: Vec<(&str, fn(&StudyRow) -> f64)> = Vec::new();
    match set {
        CovariateSet::Registered | CovariateSet::RegisteredNoWhite => {
            cols.push(("age", |r| r.age));
            cols.push(("black", |r| r.black));
            if set == CovariateSet::Registered {
                cols.push(("white", |r| r.white));
            }
            cols.push(("male", |r| r.male));
            cols.push(("democrat", |r| r.democrat));
            cols.push(("republican", |r| r.republican));
        }
        CovariateSet::BookingOnly => {
            cols.push(("jdi_age", |r| r.jdi_age));
            cols.push(("jdi_male", |r| r.jdi_male));
        }
    }
    cols.push(("n_charges", |r| r.n_charges));
    cols.push(("top_dui", |r| r.top_dui));
    cols.push(("top_drug", |r| r.top_drug));
    cols.push(("top_property", |r| r.top_property));
    cols.push(("top_public_order", |r| r.top_public_order));
    cols.push(("top_violent", |r| r.top_violent));
    cols.into_iter()
        .map(|(name, get)| Column::new(name, rows.iter().map(get).collect()))
        .collect()
}

pub(crate) fn column(rows: &[StudyRow], name: &str, get: impl Fn(&StudyRow) -> f64) -> Column {
    Column::new(name, rows.iter().map(get).collect())
}

pub(crate) fn jails(rows: &[StudyRow]) -> Vec<u32> {
    rows.iter().map(|r| r.jail).collect()
}

pub(crate) fn weeks(rows: &[StudyRow]) -> Vec<u32> {
    rows.iter().map(|r| r.week).collect()
}

pub(crate) fn require_nonempty(rows: &[StudyRow], what: &str) -> Result<()> {
    if rows.is_empty() {
        Err(Error::EmptySample(what.to_string()))
    } else {
        Ok(())
    }
}

fn mean_where(rows: &[StudyRow], pick: impl Fn(&StudyRow) -> bool, get: impl Fn(&StudyRow) -> f64) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in rows.iter().filter(|r| pick(r)) {
        total += get(r);
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        total / count as f64
    }
}

/// Mean outcome among control rows.
pub fn mean_control(rows: &[StudyRow], get: impl Fn(&StudyRow) -> f64) -> f64 {
    mean_where(rows, |r| r.treated == 0.0, get)
}

/// Mean of a field among treated rows.
pub fn mean_treated(rows: &[StudyRow], get: impl Fn(&StudyRow) -> f64) -> f64 {
    mean_where(rows, |r| r.treated == 1.0, get)
}

/// One summary-statistics row: means by treatment and control group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub stat: String,
    pub treated: f64,
    pub control: f64,
}

/// Group means mirroring the descriptive table: covariates, exposure, and
/// turnout, plus group sizes.
pub fn summary_stats(rows: &[StudyRow], kind: SampleKind) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    let mut push = |stat: &str, get: &dyn Fn(&StudyRow) -> f64| {
        out.push(SummaryRow {
            stat: stat.to_string(),
            treated: mean_where(rows, |r| r.treated == 1.0, get),
            control: mean_where(rows, |r| r.treated == 0.0, get),
        });
    };
    if kind == SampleKind::RegisteredOnly {
        push("age", &|r| r.age);
        push("black", &|r| r.black);
        push("white", &|r| r.white);
        push("male", &|r| r.male);
        push("democrat", &|r| r.democrat);
        push("republican", &|r| r.republican);
        push("nonpartisan_or_other", &|r| 1.0 - r.democrat - r.republican);
    } else {
        push("jdi_age", &|r| r.jdi_age);
        push("jdi_male", &|r| r.jdi_male);
        push("registered", &|r| r.registered);
    }
    push("n_charges", &|r| r.n_charges);
    push("top_violent", &|r| r.top_violent);
    push("top_property", &|r| r.top_property);
    push("top_drug", &|r| r.top_drug);
    push("top_public_order", &|r| r.top_public_order);
    push("top_dui", &|r| r.top_dui);
    push("top_criminal_traffic", &|r| r.top_criminal_traffic);
    push("length_of_stay_days", &|r| r.length_of_stay);
    push("confined_during_voting_days", &|r| r.treated);
    push("proportion_voting_days_confined", &|r| r.proportion);
    push("turnout_2020", &|r| r.voted_2020);
    out.push(SummaryRow {
        stat: "observations".to_string(),
        treated: rows.iter().filter(|r| r.treated == 1.0).count() as f64,
        control: rows.iter().filter(|r| r.treated == 0.0).count() as f64,
    });
    out
}
