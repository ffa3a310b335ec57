//! Balanced-window search: for one control window, find the largest
//! treatment window whose balance test and all smaller windows' balance
//! tests clear the 0.10 joint p-value bar.

use super::{
    build_all_individuals_sample, build_registered_sample, covariate_columns, jails, CovariateSet,
    SampleKind, StudyDesign, StudyRow, MIN_TREATMENT_DAYS,
};
use crate::calendar::{VotingCalendar, ELECTION_DAY_2020};
use crate::econometrics::balance_test;
use crate::error::{Error, Result};
use crate::linkage::LinkedRecord;
use crate::roster::BookingSpell;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// The joint p-value bar a balanced window must clear.
pub const BALANCE_P_BAR: f64 = 0.10;

/// One point of the balance p-value curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PCurvePoint {
    pub treatment_days: i64,
    /// Joint F-test p-value; `None` when the balance regression failed
    /// (for example a covariate absorbed by the fixed effects), which
    /// counts as imbalanced.
    pub joint_p: Option<f64>,
    pub joint_f: Option<f64>,
    pub n_obs: usize,
}

/// Full search output for one control window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSearchResult {
    pub control_days: i64,
    pub curve: Vec<PCurvePoint>,
    /// Largest admissible treatment window, `None` when even the smallest
    /// window fails.
    pub chosen: Option<i64>,
}

/// Search over treatment windows for the registered-voter sample.
pub fn window_search_registered(
    links: &[LinkedRecord],
    control_days: i64,
    threshold: f64,
    calendar: &VotingCalendar,
    cluster_robust_wald: bool,
) -> Result<WindowSearchResult> {
    let states: Vec<&str> = links.iter().map(|l| l.state.as_str()).collect();
    let t_max = max_treatment_days(states, calendar)?;
    let build = |t: i64| -> Result<Vec<StudyRow>> {
        let design = StudyDesign {
            control_days,
            treatment_days: t,
            threshold,
            sample_kind: SampleKind::RegisteredOnly,
        };
        build_registered_sample(links, &design, calendar)
    };
    search(control_days, t_max, CovariateSet::Registered, cluster_robust_wald, build)
}

/// Search over treatment windows for the all-individuals sample with
/// booking-side covariates.
pub fn window_search_all(
    spells: &[BookingSpell],
    links_095: &HashMap<String, LinkedRecord>,
    control_days: i64,
    calendar: &VotingCalendar,
    cluster_robust_wald: bool,
) -> Result<WindowSearchResult> {
    let states: Vec<&str> = spells
        .iter()
        .filter_map(|s| crate::calendar::state_for_fips(&s.fips))
        .collect();
    let t_max = max_treatment_days(states, calendar)?;
    let build = |t: i64| -> Result<Vec<StudyRow>> {
        let design = StudyDesign {
            control_days,
            treatment_days: t,
            threshold: 0.95,
            sample_kind: SampleKind::AllIndividuals,
        };
        build_all_individuals_sample(spells, links_095, &design, calendar)
    };
    search(control_days, t_max, CovariateSet::BookingOnly, cluster_robust_wald, build)
}

/// Widest sensible treatment window: days from the earliest first voting
/// day among the sample's states to Election Day.
fn max_treatment_days<'a>(states: Vec<&'a str>, calendar: &VotingCalendar) -> Result<i64> {
    let earliest = calendar
        .earliest_first_day(states)
        .ok_or_else(|| Error::EmptySample("no sample states with calendar entries".to_string()))?;
    Ok((ELECTION_DAY_2020 - earliest).num_days())
}

fn search(
    control_days: i64,
    t_max: i64,
    covset: CovariateSet,
    cluster_robust_wald: bool,
    build: impl Fn(i64) -> Result<Vec<StudyRow>> + Sync,
) -> Result<WindowSearchResult> {
    let ts: Vec<i64> = (MIN_TREATMENT_DAYS..=t_max.max(MIN_TREATMENT_DAYS)).collect();
    let curve: Vec<PCurvePoint> = ts
        .par_iter()
        .map(|&t| {
            let point = build(t).and_then(|rows| {
                let treated: Vec<f64> = rows.iter().map(|r| r.treated).collect();
                let covs = covariate_columns(&rows, covset);
                let facilities = jails(&rows);
                balance_test(&treated, &covs, &facilities, cluster_robust_wald)
                    .map(|b| (b, rows.len()))
            });
            match point {
                Ok((balance, n)) => PCurvePoint {
                    treatment_days: t,
                    joint_p: Some(balance.joint_p),
                    joint_f: Some(balance.joint_f),
                    n_obs: n,
                },
                Err(_) => PCurvePoint {
                    treatment_days: t,
                    joint_p: None,
                    joint_f: None,
                    n_obs: 0,
                },
            }
        })
        .collect();

    // largest T whose whole prefix of smaller windows stays balanced
    let mut chosen = None;
    for point in &curve {
        if point.joint_p.map_or(false, |p| p > BALANCE_P_BAR) {
            chosen = Some(point.treatment_days);
        } else {
            break;
        }
    }

    Ok(WindowSearchResult {
        control_days,
        curve,
        chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chosen_window_is_prefix_closed() {
        // synthetic curve scan: the selection rule alone
        let curve = vec![
            (7, Some(0.5)),
            (8, Some(0.3)),
            (9, Some(0.09)), // fails here
            (10, Some(0.9)),
        ];
        let mut chosen = None;
        for (t, p) in &curve {
            if p.map_or(false, |p: f64| p > BALANCE_P_BAR) {
                chosen = Some(*t);
            } else {
                break;
            }
        }
        assert_eq!(chosen, Some(8));
    }
}
