//! Fellegi-Sunter parameter estimation, posterior scoring, term-frequency
//! re-weighting, and the exclusion ledger producing the final linked sample.
//!
//! The model is the standard field-independent (naive Bayes) mixture: a pair
//! is a match with prior `lambda`, and each agreement code is drawn from the
//! per-field `m` distribution for matches and `u` for non-matches. EM is run
//! on pattern counts (the 486-cell contingency table), so iteration cost is
//! independent of sample size. All likelihood products live in log space
//! with probabilities floored at 1e-6.

use crate::blocking::{compare_pair, sample_pairs, BlockSet};
use crate::error::{Error, Result};
use crate::rng::sub_seed;
use crate::roster::{BookingSpell, ChargeCategory, Gender};
use crate::similarity::{AgreementVector, CandidatePair, FIELD_LEVELS, N_FIELDS, N_PATTERNS};
use crate::voter::{Party, Race, VoterRecord};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Probability floor preventing log-domain underflow.
pub const PROB_FLOOR: f64 = 1e-6;

/// Fellegi-Sunter model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSParameters {
    /// Prior match probability.
    pub lambda: f64,
    /// m[field][level]: P(gamma_field = level | match).
    pub m: [[f64; 3]; N_FIELDS],
    /// u[field][level]: P(gamma_field = level | non-match).
    pub u: [[f64; 3]; N_FIELDS],
}

impl FSParameters {
    /// Floor every probability at [`PROB_FLOOR`] and renormalize each
    /// per-field distribution.
    pub fn floor_and_renormalize(&mut self) {
        for k in 0..N_FIELDS {
            for table in [&mut self.m, &mut self.u] {
                let levels = FIELD_LEVELS[k];
                let mut total = 0.0;
                for l in 0..levels {
                    table[k][l] = table[k][l].max(PROB_FLOOR);
                    total += table[k][l];
                }
                for l in 0..levels {
                    table[k][l] /= total;
                }
                for l in levels..3 {
                    table[k][l] = 0.0;
                }
            }
        }
    }

    /// Check per-field distributions sum to one within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (0..N_FIELDS).all(|k| {
            let levels = FIELD_LEVELS[k];
            let ms: f64 = self.m[k][..levels].iter().sum();
            let us: f64 = self.u[k][..levels].iter().sum();
            (ms - 1.0).abs() <= tol && (us - 1.0).abs() <= tol
        })
    }

    fn log_tables(&self) -> LogTables {
        let mut lm = [[f64::NEG_INFINITY; 3]; N_FIELDS];
        let mut lu = [[f64::NEG_INFINITY; 3]; N_FIELDS];
        for k in 0..N_FIELDS {
            for l in 0..FIELD_LEVELS[k] {
                lm[k][l] = self.m[k][l].ln();
                lu[k][l] = self.u[k][l].ln();
            }
        }
        LogTables {
            ln_lambda: self.lambda.ln(),
            ln_one_minus_lambda: (1.0 - self.lambda).ln(),
            ln_m: lm,
            ln_u: lu,
        }
    }
}

struct LogTables {
    ln_lambda: f64,
    ln_one_minus_lambda: f64,
    ln_m: [[f64; 3]; N_FIELDS],
    ln_u: [[f64; 3]; N_FIELDS],
}

impl LogTables {
    /// (log match component, log non-match component) for a pattern.
    fn log_components(&self, gamma: &AgreementVector) -> (f64, f64) {
        let codes = gamma.as_array();
        let mut lm = self.ln_lambda;
        let mut lu = self.ln_one_minus_lambda;
        for k in 0..N_FIELDS {
            lm += self.ln_m[k][codes[k] as usize];
            lu += self.ln_u[k][codes[k] as usize];
        }
        (lm, lu)
    }
}

/// Posterior match probability of an agreement pattern under the model.
pub fn posterior(gamma: &AgreementVector, params: &FSParameters) -> f64 {
    posterior_from(&params.log_tables(), gamma)
}

fn posterior_from(tables: &LogTables, gamma: &AgreementVector) -> f64 {
    let (lm, lu) = tables.log_components(gamma);
    sigmoid(lm - lu)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Aggregated agreement-pattern counts for a pair sample.
#[derive(Debug, Clone)]
pub struct PatternCounts {
    counts: Vec<f64>,
    total: f64,
}

impl PatternCounts {
    pub fn from_pairs(pairs: &[CandidatePair]) -> Self {
        let mut counts = vec![0.0; N_PATTERNS];
        for p in pairs {
            counts[p.gamma.pattern_index()] += 1.0;
        }
        PatternCounts {
            counts,
            total: pairs.len() as f64,
        }
    }

    pub fn from_gammas(gammas: &[AgreementVector]) -> Self {
        let mut counts = vec![0.0; N_PATTERNS];
        for g in gammas {
            counts[g.pattern_index()] += 1.0;
        }
        PatternCounts {
            counts,
            total: gammas.len() as f64,
        }
    }
}

/// Frequency-based parameter initialization from the binary init-match flag.
pub fn initialize_params(sample: &[CandidatePair]) -> Result<FSParameters> {
    let n = sample.len() as f64;
    let flagged = sample.iter().filter(|p| p.init_match_flag).count() as f64;
    if flagged == 0.0 || flagged == n {
        return Err(Error::InitializationDegenerate(format!(
            "{flagged} of {n} pairs flagged as matches"
        )));
    }

    let mut m = [[0.0; 3]; N_FIELDS];
    let mut u = [[0.0; 3]; N_FIELDS];
    for p in sample {
        let codes = p.gamma.as_array();
        let table = if p.init_match_flag { &mut m } else { &mut u };
        for k in 0..N_FIELDS {
            table[k][codes[k] as usize] += 1.0;
        }
    }
    let mut params = FSParameters {
        lambda: flagged / n,
        m,
        u,
    };
    params.floor_and_renormalize();
    Ok(params)
}

/// Convergence trace of one EM run.
#[derive(Debug, Clone)]
pub struct EmTrace {
    /// Mean log-likelihood per pair at the start of each iteration.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
}

/// EM configuration. The reference procedure draws 50 resamples of one
/// million pairs each; the desk-scale default keeps the 50 resamples but
/// samples 50k pairs, which exceeds the pair universe of small runs anyway.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmConfig {
    pub resamples: usize,
    pub sample_size: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            resamples: 50,
            sample_size: 50_000,
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

/// Run EM to convergence on one aggregated sample.
///
/// Returns the fitted parameters and the log-likelihood trace. The trace is
/// checked to be non-decreasing (up to a 1e-9 slack for the probability
/// floor projection) every iteration.
pub fn em_one(
    counts: &PatternCounts,
    init: FSParameters,
    config: &EmConfig,
) -> Result<(FSParameters, EmTrace)> {
    let mut params = init;
    let mut lls: Vec<f64> = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iter {
        let tables = params.log_tables();

        // E-step over patterns, accumulating the M-step sufficient
        // statistics in one fixed-order pass.
        let mut ll = 0.0;
        let mut w_total = 0.0;
        let mut m_acc = [[0.0f64; 3]; N_FIELDS];
        let mut u_acc = [[0.0f64; 3]; N_FIELDS];
        for (idx, &c) in counts.counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let gamma = AgreementVector::from_pattern_index(idx);
            let (lm, lu) = tables.log_components(&gamma);
            ll += c * log_add_exp(lm, lu);
            let w = sigmoid(lm - lu);
            w_total += c * w;
            let codes = gamma.as_array();
            for k in 0..N_FIELDS {
                m_acc[k][codes[k] as usize] += c * w;
                u_acc[k][codes[k] as usize] += c * (1.0 - w);
            }
        }
        let mean_ll = ll / counts.total;
        if let Some(&prev) = lls.last() {
            let slack = 1e-9 * (1.0 + prev.abs());
            if mean_ll < prev - slack {
                return Err(Error::InvalidInput(format!(
                    "EM log-likelihood decreased: {prev} -> {mean_ll}"
                )));
            }
            if (mean_ll - prev).abs() < config.tol {
                lls.push(mean_ll);
                converged = true;
                break;
            }
        }
        lls.push(mean_ll);

        // M-step
        let lambda = w_total / counts.total;
        if !(PROB_FLOOR..=1.0 - PROB_FLOOR).contains(&lambda) {
            return Err(Error::EmDegenerate(lambda));
        }
        let u_total = counts.total - w_total;
        for k in 0..N_FIELDS {
            for l in 0..FIELD_LEVELS[k] {
                m_acc[k][l] /= w_total;
                u_acc[k][l] /= u_total;
            }
        }
        params = FSParameters {
            lambda,
            m: m_acc,
            u: u_acc,
        };
        params.floor_and_renormalize();
    }

    if !converged {
        log::warn!(
            "EM did not converge after {} iterations; using last iterate",
            config.max_iter
        );
    }
    Ok((
        params,
        EmTrace {
            log_likelihood: lls,
            converged,
        },
    ))
}

/// Fit stabilized parameters: run EM on `resamples` independent pair
/// samples and average the resulting parameters.
///
/// Deterministic given the seed; resamples run in parallel and are reduced
/// in fixed order.
pub fn em_fit(
    blocks: &BlockSet,
    spells: &[BookingSpell],
    voters: &[VoterRecord],
    config: &EmConfig,
    seed: u64,
) -> Result<FSParameters> {
    if blocks.pair_universe() == 0 {
        return Err(Error::EmptySample("pair universe is empty".to_string()));
    }
    let fits: Vec<Result<FSParameters>> = (0..config.resamples)
        .into_par_iter()
        .map(|r| {
            let sample = sample_pairs(blocks, spells, voters, config.sample_size, sub_seed(seed, "em-resample", r as u64));
            let init = initialize_params(&sample)?;
            let counts = PatternCounts::from_pairs(&sample);
            em_one(&counts, init, config).map(|(p, _)| p)
        })
        .collect();

    let mut acc: Option<FSParameters> = None;
    let mut n_ok = 0.0;
    for fit in fits {
        let fit = fit?;
        n_ok += 1.0;
        match &mut acc {
            None => acc = Some(fit),
            Some(a) => {
                a.lambda += fit.lambda;
                for k in 0..N_FIELDS {
                    for l in 0..3 {
                        a.m[k][l] += fit.m[k][l];
                        a.u[k][l] += fit.u[k][l];
                    }
                }
            }
        }
    }
    let mut avg = acc.expect("at least one resample");
    avg.lambda /= n_ok;
    for k in 0..N_FIELDS {
        for l in 0..3 {
            avg.m[k][l] /= n_ok;
            avg.u[k][l] /= n_ok;
        }
    }
    avg.floor_and_renormalize();
    Ok(avg)
}

/// Per-state relative frequencies of voter first and last names, used for
/// term-frequency re-weighting.
#[derive(Debug, Clone, Default)]
pub struct NameFrequencyTable {
    by_state: HashMap<String, StateFreqs>,
}

#[derive(Debug, Clone, Default)]
struct StateFreqs {
    first: HashMap<String, f64>,
    last: HashMap<String, f64>,
    mean_first: f64,
    mean_last: f64,
    min_first: f64,
    min_last: f64,
}

fn build_freqs(names: impl Iterator<Item = String>) -> (HashMap<String, f64>, f64, f64) {
    let mut counts: HashMap<String, f64> = HashMap::new();
    let mut total = 0.0;
    for n in names {
        if n.is_empty() {
            continue;
        }
        *counts.entry(n).or_insert(0.0) += 1.0;
        total += 1.0;
    }
    if total == 0.0 {
        return (counts, 0.0, 0.0);
    }
    for v in counts.values_mut() {
        *v /= total;
    }
    let mean = 1.0 / counts.len() as f64;
    let min = counts.values().copied().fold(f64::INFINITY, f64::min);
    (counts, mean, min)
}

impl NameFrequencyTable {
    pub fn from_voters(voters: &[VoterRecord]) -> Self {
        let mut states: BTreeMap<&str, Vec<&VoterRecord>> = BTreeMap::new();
        for v in voters {
            states.entry(v.state.as_str()).or_default().push(v);
        }
        let mut by_state = HashMap::new();
        for (state, vs) in states {
            let (first, mean_first, min_first) =
                build_freqs(vs.iter().map(|v| v.name.first.clone()));
            let (last, mean_last, min_last) = build_freqs(vs.iter().map(|v| v.name.last.clone()));
            by_state.insert(
                state.to_string(),
                StateFreqs {
                    first,
                    last,
                    mean_first,
                    mean_last,
                    min_first,
                    min_last,
                },
            );
        }
        NameFrequencyTable { by_state }
    }

    /// Log-scale adjustment for one agreeing name: `ln(min(1, mean/f))`.
    /// Common names shrink the likelihood ratio; rare names keep it intact.
    fn log_adjust(freqs: &HashMap<String, f64>, mean: f64, min: f64, name: &str) -> f64 {
        if mean == 0.0 {
            return 0.0;
        }
        let f = freqs.get(name).copied().unwrap_or(min.max(PROB_FLOOR));
        (mean / f).min(1.0).ln()
    }

    fn adjustment(&self, state: &str, gamma: &AgreementVector, voter: &VoterRecord) -> f64 {
        let Some(s) = self.by_state.get(state) else {
            return 0.0;
        };
        let mut adj = 0.0;
        if gamma.first == 2 {
            adj += Self::log_adjust(&s.first, s.mean_first, s.min_first, &voter.name.first);
        }
        if gamma.last == 2 {
            adj += Self::log_adjust(&s.last, s.mean_last, s.min_last, &voter.name.last);
        }
        adj
    }
}

/// A scored candidate link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub booking: u32,
    pub voter: u32,
    pub gamma: AgreementVector,
    pub posterior: f64,
    pub reweighted: f64,
}

/// Apply term-frequency re-weighting to one scored match.
///
/// Exact agreement (code 2) on a first or last name whose voter-side
/// relative frequency `f` exceeds the state mean scales that field's
/// likelihood ratio by `mean/f` before the posterior is recomputed; rarer
/// names are left at their full ratio.
pub fn tf_reweight(
    m: &ScoredMatch,
    params: &FSParameters,
    freqs: &NameFrequencyTable,
    state: &str,
    voter: &VoterRecord,
) -> f64 {
    let tables = params.log_tables();
    let (lm, lu) = tables.log_components(&m.gamma);
    let adj = freqs.adjustment(state, &m.gamma, voter);
    sigmoid(lm + adj - lu)
}

/// Final merged record for one linked booking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkedRecord {
    pub booking_id: String,
    pub voter_id: String,
    pub posterior: f64,
    pub reweighted: f64,
    pub state: String,
    pub fips: String,
    pub facility_id: String,
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub length_of_stay_days: i64,
    pub booking_age: Option<i64>,
    pub booking_gender: Gender,
    pub charge_count: usize,
    pub top_charge: Option<ChargeCategory>,
    pub voter_age: Option<i64>,
    pub voter_gender: Gender,
    pub race: Option<Race>,
    pub race_reported: bool,
    pub party: Option<Party>,
    pub registration_date: Option<NaiveDate>,
    pub voted_2020: bool,
    pub voted_2016: bool,
    pub voted_2012: bool,
}

/// Per-rule exclusion counts, in application order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExclusionAudit {
    pub scored_pairs: u64,
    /// Rows surviving the per-booking argmax and the 0.5 posterior floor.
    pub top_rows: u64,
    pub below_threshold: u64,
    pub multiple_voters_per_booking: u64,
    pub voter_overlapping_bookings: u64,
    pub booking_age_under_18: u64,
    pub registered_after_election_day: u64,
    pub kept: u64,
}

impl ExclusionAudit {
    pub fn rows(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("scored_pairs", self.scored_pairs),
            ("top_rows", self.top_rows),
            ("below_threshold", self.below_threshold),
            ("multiple_voters_per_booking", self.multiple_voters_per_booking),
            ("voter_overlapping_bookings", self.voter_overlapping_bookings),
            ("booking_age_under_18", self.booking_age_under_18),
            ("registered_after_election_day", self.registered_after_election_day),
            ("kept", self.kept),
        ]
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Re-weighted probability threshold: 0.75 for the primary sample, 0.95
    /// for the replication sample.
    pub threshold: f64,
    pub election_day: NaiveDate,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            threshold: 0.75,
            election_day: crate::calendar::ELECTION_DAY_2020,
        }
    }
}

/// Probability scores are compared after rounding to 12 decimal digits when
/// deciding per-booking ties.
fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Score every block pair and apply the exclusion pipeline.
///
/// Pipeline: per-booking argmax (ties kept) with posterior floor 0.5, then
/// term-frequency re-weighting, then the five exclusions in order: below
/// threshold, bookings matched to multiple voters, voters matched to
/// temporally overlapping bookings, booking age under 18, and registration
/// after Election Day.
pub fn link(
    blocks: &BlockSet,
    spells: &[BookingSpell],
    voters: &[VoterRecord],
    params: &FSParameters,
    config: &LinkConfig,
) -> (Vec<LinkedRecord>, ExclusionAudit) {
    let mut audit = ExclusionAudit::default();
    let tables = params.log_tables();

    // Score all pairs, grouped per booking within each block.
    let per_block: Vec<Vec<ScoredMatch>> = blocks
        .blocks
        .par_iter()
        .map(|block| {
            let mut rows = Vec::new();
            for &bk in &block.bookings {
                let spell = &spells[bk as usize];
                let mut best: Vec<ScoredMatch> = Vec::new();
                let mut best_score = f64::NEG_INFINITY;
                for &vt in &block.voters {
                    let (gamma, _) = compare_pair(spell, &voters[vt as usize]);
                    let p = posterior_from(&tables, &gamma);
                    let rounded = round12(p);
                    if rounded > best_score {
                        best_score = rounded;
                        best.clear();
                    }
                    if rounded == best_score {
                        best.push(ScoredMatch {
                            booking: bk,
                            voter: vt,
                            gamma,
                            posterior: p,
                            reweighted: p,
                        });
                    }
                }
                if best_score >= 0.5 {
                    rows.extend(best);
                }
            }
            rows
        })
        .collect();

    audit.scored_pairs = blocks.pair_universe();
    let mut rows: Vec<ScoredMatch> = per_block.into_iter().flatten().collect();
    audit.top_rows = rows.len() as u64;

    // Term-frequency re-weighting on the retained rows.
    let freqs = NameFrequencyTable::from_voters(voters);
    for row in &mut rows {
        let spell = &spells[row.booking as usize];
        let state = crate::calendar::state_for_fips(&spell.fips).unwrap_or("");
        row.reweighted = tf_reweight(row, params, &freqs, state, &voters[row.voter as usize]);
    }

    // Rule 1: re-weighted probability below threshold.
    let before = rows.len();
    rows.retain(|r| r.reweighted >= config.threshold);
    audit.below_threshold = (before - rows.len()) as u64;

    // Rule 2: bookings matched to more than one unique voter id.
    let mut voters_per_booking: HashMap<u32, Vec<u32>> = HashMap::new();
    for r in &rows {
        let list = voters_per_booking.entry(r.booking).or_default();
        if !list.contains(&r.voter) {
            list.push(r.voter);
        }
    }
    let before = rows.len();
    rows.retain(|r| voters_per_booking[&r.booking].len() == 1);
    audit.multiple_voters_per_booking = (before - rows.len()) as u64;

    // Rule 3: voter ids matched to temporally overlapping bookings.
    let mut bookings_per_voter: HashMap<u32, Vec<u32>> = HashMap::new();
    for r in &rows {
        bookings_per_voter.entry(r.voter).or_default().push(r.booking);
    }
    let mut overlapping_voters: Vec<u32> = Vec::new();
    for (&vt, bks) in &bookings_per_voter {
        let mut intervals: Vec<(NaiveDate, NaiveDate)> = bks
            .iter()
            .map(|&b| (spells[b as usize].entry_date, spells[b as usize].exit_date))
            .collect();
        intervals.sort();
        if intervals.windows(2).any(|w| w[1].0 <= w[0].1) {
            overlapping_voters.push(vt);
        }
    }
    let before = rows.len();
    rows.retain(|r| !overlapping_voters.contains(&r.voter));
    audit.voter_overlapping_bookings = (before - rows.len()) as u64;

    // Rule 4: booking-reported age under 18.
    let before = rows.len();
    rows.retain(|r| spells[r.booking as usize].age.map_or(true, |a| a >= 18));
    audit.booking_age_under_18 = (before - rows.len()) as u64;

    // Rule 5: voter registration date after Election Day.
    let before = rows.len();
    rows.retain(|r| {
        voters[r.voter as usize]
            .registration_date
            .map_or(true, |d| d <= config.election_day)
    });
    audit.registered_after_election_day = (before - rows.len()) as u64;

    audit.kept = rows.len() as u64;
    rows.sort_by(|a, b| (a.booking, a.voter).cmp(&(b.booking, b.voter)));
    debug_assert_eq!(audit.top_rows, audit.kept + audit.below_threshold + audit.multiple_voters_per_booking + audit.voter_overlapping_bookings + audit.booking_age_under_18 + audit.registered_after_election_day);

    let records = rows
        .into_iter()
        .map(|r| {
            let spell = &spells[r.booking as usize];
            let voter = &voters[r.voter as usize];
            LinkedRecord {
                booking_id: spell.booking_id.clone(),
                voter_id: voter.voter_id.clone(),
                posterior: r.posterior,
                reweighted: r.reweighted,
                state: voter.state.clone(),
                fips: spell.fips.clone(),
                facility_id: spell.facility_id.clone(),
                entry_date: spell.entry_date,
                exit_date: spell.exit_date,
                length_of_stay_days: spell.length_of_stay_days,
                booking_age: spell.age,
                booking_gender: spell.gender,
                charge_count: spell.charge_count,
                top_charge: spell.top_charge,
                voter_age: voter.age,
                voter_gender: voter.gender,
                race: voter.race,
                race_reported: voter.race_reported,
                party: voter.party,
                registration_date: voter.registration_date,
                voted_2020: voter.voted_2020,
                voted_2016: voter.voted_2016,
                voted_2012: voter.voted_2012,
            }
        })
        .collect();

    (records, audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::build_blocks;
    use crate::identity::parse_name;
    use crate::rng::stage_rng;
    use rand::Rng;

    fn gamma(codes: [u8; 6]) -> AgreementVector {
        AgreementVector::from_array(codes)
    }

    /// Sharp parameters: agreement strongly favors matches.
    fn sharp_params() -> FSParameters {
        let mut p = FSParameters {
            lambda: 0.01,
            m: [
                [0.05, 0.95, 0.0],
                [0.02, 0.03, 0.95],
                [0.02, 0.03, 0.95],
                [0.02, 0.03, 0.95],
                [0.02, 0.03, 0.95],
                [0.02, 0.03, 0.95],
            ],
            u: [
                [0.90, 0.10, 0.0],
                [0.85, 0.10, 0.05],
                [0.85, 0.10, 0.05],
                [0.85, 0.10, 0.05],
                [0.85, 0.10, 0.05],
                [0.85, 0.10, 0.05],
            ],
        };
        p.floor_and_renormalize();
        p
    }

    #[test]
    fn posterior_symmetric_when_uninformative() {
        let mut p = sharp_params();
        p.lambda = 0.5;
        p.u = p.m;
        for idx in [0usize, 100, 485] {
            let g = AgreementVector::from_pattern_index(idx);
            assert!((posterior(&g, &p) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_hand_evaluations() {
        // all-agree and all-disagree under simple two-point fields,
        // evaluated directly from the mixture formula
        let mut p = FSParameters {
            lambda: 0.01,
            m: [[0.1, 0.9, 0.0]; 6],
            u: [[0.9, 0.1, 0.0]; 6],
        };
        for k in 1..6 {
            p.m[k] = [0.08, 0.02, 0.9];
            p.u[k] = [0.82, 0.08, 0.1];
        }
        let agree = gamma([1, 2, 2, 2, 2, 2]);
        let num = 0.01 * 0.9 * 0.9f64.powi(5);
        let den = num + 0.99 * 0.1 * 0.1f64.powi(5);
        assert!((posterior(&agree, &p) - num / den).abs() < 1e-12);

        let disagree = gamma([0, 0, 0, 0, 0, 0]);
        let num = 0.01 * 0.1 * 0.08f64.powi(5);
        let den = num + 0.99 * 0.9 * 0.82f64.powi(5);
        let got = posterior(&disagree, &p);
        assert!((got - num / den).abs() < 1e-12, "{got}");
        assert!(got < 1e-4);
    }

    #[test]
    fn posterior_monotone_in_likelihood_ratio() {
        let base = sharp_params();
        let g = gamma([1, 2, 1, 0, 2, 2]);
        let p0 = posterior(&g, &base);
        // raising m at the observed level of any field never lowers it
        for k in 0..N_FIELDS {
            let mut bumped = base.clone();
            let level = g.as_array()[k] as usize;
            bumped.m[k][level] = (bumped.m[k][level] * 1.5).min(0.999);
            // renormalize the rest down
            let levels = FIELD_LEVELS[k];
            let rest: f64 = (0..levels).filter(|&l| l != level).map(|l| bumped.m[k][l]).sum();
            let target = 1.0 - bumped.m[k][level];
            for l in 0..levels {
                if l != level {
                    bumped.m[k][l] *= target / rest;
                }
            }
            assert!(posterior(&g, &bumped) >= p0 - 1e-12, "field {k}");
        }
    }

    fn pair_with(codes: [u8; 6], flag: bool) -> CandidatePair {
        CandidatePair {
            booking: 0,
            voter: 0,
            gamma: gamma(codes),
            avg_name_jw: if flag { 0.95 } else { 0.5 },
            init_match_flag: flag,
        }
    }

    #[test]
    fn initialization_frequencies() {
        let sample = vec![
            pair_with([1, 2, 2, 2, 2, 2], true),
            pair_with([1, 2, 2, 2, 1, 2], true),
            pair_with([0, 0, 1, 0, 1, 0], false),
            pair_with([1, 0, 0, 0, 1, 0], false),
        ];
        let p = initialize_params(&sample).unwrap();
        assert!((p.lambda - 0.5).abs() < 1e-12);
        // all flagged pairs agree on last: m[last][2] ~ 1 - 2 floors
        assert!(p.m[5][2] > 0.999_99);
        assert!(p.is_normalized(1e-12));
    }

    #[test]
    fn initialization_degenerate_errors() {
        let all_flagged = vec![pair_with([1, 2, 2, 2, 2, 2], true); 3];
        assert!(matches!(
            initialize_params(&all_flagged),
            Err(Error::InitializationDegenerate(_))
        ));
        let none_flagged = vec![pair_with([0, 0, 0, 0, 0, 0], false); 3];
        assert!(matches!(
            initialize_params(&none_flagged),
            Err(Error::InitializationDegenerate(_))
        ));
    }

    /// Draw gammas from planted parameters; shared with the acceptance EM
    /// recovery criterion at larger scale.
    pub(crate) fn draw_planted(
        params: &FSParameters,
        n: usize,
        seed: u64,
    ) -> (Vec<AgreementVector>, Vec<bool>) {
        let mut rng = stage_rng(seed, "planted-gammas");
        let mut gammas = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        for _ in 0..n {
            let is_match = rng.gen_bool(params.lambda);
            let table = if is_match { &params.m } else { &params.u };
            let mut codes = [0u8; N_FIELDS];
            for k in 0..N_FIELDS {
                let draw: f64 = rng.gen();
                let mut acc = 0.0;
                for l in 0..FIELD_LEVELS[k] {
                    acc += table[k][l];
                    if draw < acc {
                        codes[k] = l as u8;
                        break;
                    }
                    codes[k] = (FIELD_LEVELS[k] - 1) as u8;
                }
            }
            gammas.push(AgreementVector::from_array(codes));
            truth.push(is_match);
        }
        (gammas, truth)
    }

    #[test]
    fn em_recovers_planted_parameters_smoke() {
        let truth = FSParameters {
            lambda: 0.05,
            m: [
                [0.05, 0.95, 0.0],
                [0.05, 0.10, 0.85],
                [0.03, 0.17, 0.80],
                [0.08, 0.07, 0.85],
                [0.10, 0.50, 0.40],
                [0.05, 0.08, 0.87],
            ],
            u: [
                [0.90, 0.10, 0.0],
                [0.70, 0.10, 0.20],
                [0.45, 0.17, 0.38],
                [0.90, 0.06, 0.04],
                [0.55, 0.42, 0.03],
                [0.93, 0.05, 0.02],
            ],
        };
        let (gammas, flags) = draw_planted(&truth, 20_000, 11);
        let sample: Vec<CandidatePair> = gammas
            .iter()
            .zip(&flags)
            .enumerate()
            .map(|(i, (g, &f))| CandidatePair {
                booking: i as u32,
                voter: i as u32,
                gamma: *g,
                avg_name_jw: 0.0,
                init_match_flag: f, // oracle initialization for the smoke test
            })
            .collect();
        let init = initialize_params(&sample).unwrap();
        let counts = PatternCounts::from_pairs(&sample);
        let (fitted, trace) = em_one(&counts, init, &EmConfig::default()).unwrap();
        assert!(trace.converged);
        assert!((fitted.lambda - truth.lambda).abs() < 0.01);
        for k in 0..N_FIELDS {
            for l in 0..FIELD_LEVELS[k] {
                assert!((fitted.m[k][l] - truth.m[k][l]).abs() < 0.05, "m[{k}][{l}]");
                assert!((fitted.u[k][l] - truth.u[k][l]).abs() < 0.05, "u[{k}][{l}]");
            }
        }
        // log-likelihood trace is non-decreasing
        for w in trace.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn em_uninformative_fields_keep_prior() {
        // m = u for every field: the posterior equals lambda everywhere
        let mut p = sharp_params();
        p.u = p.m;
        p.lambda = 0.3;
        let g = gamma([1, 2, 0, 1, 2, 0]);
        assert!((posterior(&g, &p) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn tf_reweight_orders_rare_above_common() {
        let params = sharp_params();
        let mut voters: Vec<VoterRecord> = Vec::new();
        for i in 0..9 {
            voters.push(test_voter(&format!("v{i}"), "TX", "48001", "John Smith", 30));
        }
        voters.push(test_voter("vz", "TX", "48001", "John Zelenka", 30));
        let freqs = NameFrequencyTable::from_voters(&voters);

        let g = gamma([1, 2, 2, 2, 1, 2]);
        let base = ScoredMatch {
            booking: 0,
            voter: 0,
            gamma: g,
            posterior: posterior(&g, &params),
            reweighted: 0.0,
        };
        let smith = tf_reweight(&base, &params, &freqs, "TX", &voters[0]);
        let zelenka = tf_reweight(&base, &params, &freqs, "TX", &voters[9]);
        assert!(zelenka > smith, "{zelenka} vs {smith}");
        // the common surname is down-weighted relative to the raw posterior
        assert!(smith < base.posterior);
    }

    #[test]
    fn tf_reweight_neutral_at_mean_frequency() {
        let params = sharp_params();
        // two names, each at frequency 0.5 = mean
        let voters = vec![
            test_voter("v0", "TX", "48001", "John Smith", 30),
            test_voter("v1", "TX", "48001", "Jane Jones", 31),
        ];
        let freqs = NameFrequencyTable::from_voters(&voters);
        let g = gamma([1, 2, 2, 2, 1, 2]);
        let base = ScoredMatch {
            booking: 0,
            voter: 0,
            gamma: g,
            posterior: posterior(&g, &params),
            reweighted: 0.0,
        };
        let rw = tf_reweight(&base, &params, &freqs, "TX", &voters[0]);
        assert!((rw - base.posterior).abs() < 1e-12);
    }

    fn test_voter(id: &str, state: &str, fips: &str, name: &str, age: i64) -> VoterRecord {
        VoterRecord {
            voter_id: id.into(),
            state: state.into(),
            fips: fips.into(),
            name: parse_name(name).unwrap(),
            age: Some(age),
            gender: Gender::Male,
            race: None,
            race_reported: false,
            party: None,
            registration_date: Some(NaiveDate::from_ymd_opt(2010, 1, 1).unwrap()),
            voted_2020: false,
            voted_2016: false,
            voted_2012: false,
        }
    }

    fn test_spell(id: &str, fips: &str, name: &str, age: i64, entry: &str, exit: &str) -> BookingSpell {
        let entry: NaiveDate = entry.parse().unwrap();
        let exit: NaiveDate = exit.parse().unwrap();
        BookingSpell {
            booking_id: id.into(),
            person_key: id.into(),
            facility_id: "F1".into(),
            fips: fips.into(),
            entry_date: entry,
            exit_date: exit,
            censored: false,
            length_of_stay_days: (exit - entry).num_days() + 1,
            age: Some(age),
            gender: Gender::Male,
            charge_count: 1,
            top_charge: Some(ChargeCategory::Drug),
            name: parse_name(name).unwrap(),
        }
    }

    fn run_link(
        spells: &[BookingSpell],
        voters: &[VoterRecord],
        params: &FSParameters,
    ) -> (Vec<LinkedRecord>, ExclusionAudit) {
        let blocks = build_blocks(spells, voters);
        link(&blocks, spells, voters, params, &LinkConfig::default())
    }

    #[test]
    fn exclusion_rule_1_below_threshold() {
        // weak parameters put the all-agree posterior in [0.5, 0.75):
        // odds = 0.25 * 1.5 * 1.25^5 = 1.14, p = 0.53
        let mut weak = FSParameters {
            lambda: 0.2,
            m: [[0.4, 0.6, 0.0], [0.25, 0.25, 0.5], [0.25, 0.25, 0.5], [0.25, 0.25, 0.5], [0.25, 0.25, 0.5], [0.25, 0.25, 0.5]],
            u: [[0.6, 0.4, 0.0], [0.3, 0.3, 0.4], [0.3, 0.3, 0.4], [0.3, 0.3, 0.4], [0.3, 0.3, 0.4], [0.3, 0.3, 0.4]],
        };
        weak.floor_and_renormalize();
        let spells = vec![test_spell("b1", "48001", "John Adam Smith", 30, "2020-10-01", "2020-10-05")];
        let voters = vec![test_voter("v1", "TX", "48001", "John Adam Smith", 30)];
        let g = gamma([1, 2, 2, 2, 2, 2]);
        let p = posterior(&g, &weak);
        assert!((0.5..0.75).contains(&p), "fixture posterior {p}");
        let (records, audit) = run_link(&spells, &voters, &weak);
        assert!(records.is_empty());
        assert_eq!(audit.below_threshold, 1);
    }

    #[test]
    fn exclusion_rule_2_multiple_voters() {
        let params = sharp_params();
        let spells = vec![test_spell("b1", "48001", "John Adam Smith", 30, "2020-10-01", "2020-10-05")];
        let voters = vec![
            test_voter("v1", "TX", "48001", "John Adam Smith", 30),
            test_voter("v2", "TX", "48001", "John Adam Smith", 30),
        ];
        let (records, audit) = run_link(&spells, &voters, &params);
        assert!(records.is_empty());
        assert_eq!(audit.multiple_voters_per_booking, 2);
    }

    #[test]
    fn exclusion_rule_3_overlapping_bookings() {
        let params = sharp_params();
        let spells = vec![
            test_spell("b1", "48001", "John Adam Smith", 30, "2020-11-01", "2020-11-10"),
            test_spell("b2", "48001", "John Adam Smith", 30, "2020-11-05", "2020-11-08"),
        ];
        let voters = vec![test_voter("v1", "TX", "48001", "John Adam Smith", 30)];
        let (records, audit) = run_link(&spells, &voters, &params);
        assert!(records.is_empty());
        assert_eq!(audit.voter_overlapping_bookings, 2);

        // disjoint bookings for the same voter are both kept
        let spells = vec![
            test_spell("b1", "48001", "John Adam Smith", 30, "2020-11-01", "2020-11-03"),
            test_spell("b2", "48001", "John Adam Smith", 30, "2020-12-01", "2020-12-03"),
        ];
        let (records, audit) = run_link(&spells, &voters, &params);
        assert_eq!(records.len(), 2);
        assert_eq!(audit.voter_overlapping_bookings, 0);
    }

    #[test]
    fn exclusion_rule_4_underage_booking() {
        let params = sharp_params();
        let spells = vec![test_spell("b1", "48001", "John Adam Smith", 17, "2020-10-01", "2020-10-05")];
        let voters = vec![test_voter("v1", "TX", "48001", "John Adam Smith", 18)];
        let (records, audit) = run_link(&spells, &voters, &params);
        assert!(records.is_empty());
        assert_eq!(audit.booking_age_under_18, 1);
    }

    #[test]
    fn exclusion_rule_5_late_registration() {
        let params = sharp_params();
        let spells = vec![test_spell("b1", "48001", "John Adam Smith", 30, "2020-10-01", "2020-10-05")];
        let mut voter = test_voter("v1", "TX", "48001", "John Adam Smith", 30);
        voter.registration_date = Some(NaiveDate::from_ymd_opt(2020, 11, 10).unwrap());
        let (records, audit) = run_link(&spells, &[voter], &params);
        assert!(records.is_empty());
        assert_eq!(audit.registered_after_election_day, 1);
    }

    #[test]
    fn clean_pair_links() {
        let params = sharp_params();
        let spells = vec![test_spell("b1", "48001", "John Adam Smith", 30, "2020-10-01", "2020-10-05")];
        let voters = vec![test_voter("v1", "TX", "48001", "John Adam Smith", 30)];
        let (records, audit) = run_link(&spells, &voters, &params);
        assert_eq!(records.len(), 1);
        assert_eq!(audit.kept, 1);
        assert_eq!(records[0].voter_id, "v1");
        assert!(records[0].reweighted >= 0.75);
    }

    #[test]
    fn threshold_095_subset_of_075() {
        let params = sharp_params();
        let mut spells = Vec::new();
        let mut voters = Vec::new();
        let names = ["John Smith", "Jane Jones", "Bob Brown", "Ann Adams", "Carl Clark"];
        for (i, n) in names.iter().enumerate() {
            spells.push(test_spell(&format!("b{i}"), "48001", n, 25 + i as i64, "2020-10-01", "2020-10-05"));
            voters.push(test_voter(&format!("v{i}"), "TX", "48001", n, 25 + i as i64));
        }
        let blocks = build_blocks(&spells, &voters);
        let lo = link(&blocks, &spells, &voters, &params, &LinkConfig { threshold: 0.75, ..Default::default() }).0;
        let hi = link(&blocks, &spells, &voters, &params, &LinkConfig { threshold: 0.95, ..Default::default() }).0;
        let lo_set: std::collections::HashSet<(String, String)> =
            lo.iter().map(|r| (r.booking_id.clone(), r.voter_id.clone())).collect();
        for r in &hi {
            assert!(lo_set.contains(&(r.booking_id.clone(), r.voter_id.clone())));
        }
    }
}
