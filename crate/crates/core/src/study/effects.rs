//! Effect estimation on a built study sample: the four turnout
//! specifications, placebo outcomes, race interactions, and the
//! registration/unconditional variants.

use super::{
    column, covariate_columns, jails, mean_control, mean_treated, require_nonempty, weeks,
    CovariateSet, StudyRow,
};
use crate::calendar::{ELECTION_DAY_2012, ELECTION_DAY_2016};
use crate::econometrics::{cluster_vcov, coef_inference, ols_fe, Column, EffectEstimate};
use crate::error::{Error, Result};
use crate::voter::Race;
use serde::{Deserialize, Serialize};

/// Clustering/fixed-effect structure of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Structure {
    /// Jail and week-of-year fixed effects, two-way clustered errors.
    JailWeek,
    /// Jail fixed effects only, jail-clustered errors.
    JailOnly,
}

/// Fit one model and report the leading `n_terms` coefficients.
fn fe_regression(
    rows: &[StudyRow],
    label: &str,
    outcome: impl Fn(&StudyRow) -> f64,
    treatments: Vec<Column>,
    covariates: Option<CovariateSet>,
    structure: Structure,
    n_terms: usize,
    mean_control_outcome: f64,
) -> Result<Vec<EffectEstimate>> {
    require_nonempty(rows, label)?;
    let y: Vec<f64> = rows.iter().map(&outcome).collect();
    let mut x = treatments;
    if let Some(set) = covariates {
        x.extend(covariate_columns(rows, set));
    }
    let jail_ids = jails(rows);
    let week_ids = weeks(rows);

    let fit = match structure {
        Structure::JailWeek => ols_fe(&y, &x, &[&jail_ids, &week_ids])?,
        Structure::JailOnly => ols_fe(&y, &x, &[&jail_ids])?,
    };
    let vcov = match structure {
        Structure::JailWeek => cluster_vcov(&fit, &[&jail_ids, &week_ids])?,
        Structure::JailOnly => cluster_vcov(&fit, &[&jail_ids])?,
    };
    let inference = coef_inference(&fit.coef, &vcov);

    Ok((0..n_terms)
        .map(|i| EffectEstimate {
            label: label.to_string(),
            term: fit.names[i].clone(),
            coef: fit.coef[i],
            se: inference[i].0,
            t: inference[i].1,
            p: inference[i].2,
            n_obs: fit.n,
            n_clusters: vcov.n_clusters.clone(),
            mean_control_outcome,
        })
        .collect())
}

/// The four turnout specifications plus exposure summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnoutEffects {
    pub estimates: Vec<EffectEstimate>,
    pub mean_prop_confined: f64,
    pub max_prop_confined: f64,
    pub mean_control_outcome: f64,
    pub n_obs: usize,
}

/// Estimate the effect of (1) any confinement during voting days and
/// (2) the proportion of voting days confined, each with and without
/// covariates. Jail and week fixed effects, two-way clustered errors.
pub fn estimate_effects(
    rows: &[StudyRow],
    covset: CovariateSet,
    outcome: impl Fn(&StudyRow) -> f64 + Copy,
    outcome_name: &str,
) -> Result<TurnoutEffects> {
    require_nonempty(rows, "effect estimation sample")?;
    let mean_ctrl = mean_control(rows, outcome);
    let mut estimates = Vec::new();

    for (label, covs) in [
        (format!("{outcome_name}_binary"), None),
        (format!("{outcome_name}_binary_covariates"), Some(covset)),
    ] {
        let treatments = vec![column(rows, "confined", |r| r.treated)];
        estimates.extend(fe_regression(
            rows,
            &label,
            outcome,
            treatments,
            covs,
            Structure::JailWeek,
            1,
            mean_ctrl,
        )?);
    }
    for (label, covs) in [
        (format!("{outcome_name}_proportion"), None),
        (format!("{outcome_name}_proportion_covariates"), Some(covset)),
    ] {
        let treatments = vec![column(rows, "proportion_confined", |r| r.proportion)];
        estimates.extend(fe_regression(
            rows,
            &label,
            outcome,
            treatments,
            covs,
            Structure::JailWeek,
            1,
            mean_ctrl,
        )?);
    }

    Ok(TurnoutEffects {
        estimates,
        mean_prop_confined: mean_treated(rows, |r| r.proportion),
        max_prop_confined: rows.iter().map(|r| r.proportion).fold(0.0, f64::max),
        mean_control_outcome: mean_ctrl,
        n_obs: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaceboYear {
    Y2016,
    Y2012,
}

impl PlaceboYear {
    pub fn label(&self) -> &'static str {
        match self {
            PlaceboYear::Y2016 => "2016",
            PlaceboYear::Y2012 => "2012",
        }
    }
}

/// Placebo estimates: the placebo-year outcome and the 2020 outcome on the
/// sample of voters registered by the placebo election day. Jail fixed
/// effects and jail-clustered errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaceboResult {
    pub year: String,
    pub placebo: EffectEstimate,
    pub current: EffectEstimate,
    pub n_obs: usize,
}

pub fn placebo_test(rows: &[StudyRow], year: PlaceboYear) -> Result<PlaceboResult> {
    let placebo_day = match year {
        PlaceboYear::Y2016 => ELECTION_DAY_2016,
        PlaceboYear::Y2012 => ELECTION_DAY_2012,
    };
    let restricted: Vec<StudyRow> = rows
        .iter()
        .filter(|r| r.registration_date.map_or(true, |d| d <= placebo_day))
        .cloned()
        .collect();
    require_nonempty(&restricted, "placebo sample")?;

    let placebo_outcome = move |r: &StudyRow| match year {
        PlaceboYear::Y2016 => r.voted_2016,
        PlaceboYear::Y2012 => r.voted_2012,
    };
    let placebo = fe_regression(
        &restricted,
        &format!("placebo_{}", year.label()),
        placebo_outcome,
        vec![column(&restricted, "confined", |r| r.treated)],
        None,
        Structure::JailOnly,
        1,
        mean_control(&restricted, placebo_outcome),
    )?
    .remove(0);
    let current = fe_regression(
        &restricted,
        &format!("turnout_2020_given_registered_{}", year.label()),
        |r| r.voted_2020,
        vec![column(&restricted, "confined", |r| r.treated)],
        None,
        Structure::JailOnly,
        1,
        mean_control(&restricted, |r| r.voted_2020),
    )?
    .remove(0);

    Ok(PlaceboResult {
        year: year.label().to_string(),
        placebo,
        current,
        n_obs: restricted.len(),
    })
}

/// Race-interaction estimates on the Black/white subsample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RaceInteraction {
    pub binary_main: EffectEstimate,
    pub binary_interaction: EffectEstimate,
    pub proportion_main: EffectEstimate,
    pub proportion_interaction: EffectEstimate,
    pub mean_prop_black: f64,
    pub max_prop_black: f64,
    pub mean_prop_white: f64,
    pub max_prop_white: f64,
    pub mean_control_turnout_black: f64,
    pub mean_control_turnout_white: f64,
    pub n_obs: usize,
    pub race_reported_only: bool,
}

/// Interact both treatment variables with the Black indicator on the sample
/// of Black and non-Hispanic white voters, with full covariates, jail and
/// week fixed effects, and two-way clustered errors.
pub fn heterogeneity(rows: &[StudyRow], race_reported_only: bool) -> Result<RaceInteraction> {
    let sub: Vec<StudyRow> = rows
        .iter()
        .filter(|r| {
            matches!(r.race, Some(Race::Black) | Some(Race::White))
                && (!race_reported_only || r.race_reported)
        })
        .cloned()
        .collect();
    require_nonempty(&sub, "race interaction sample")?;
    let n_black = sub.iter().filter(|r| r.black == 1.0).count();
    if n_black == 0 || n_black == sub.len() {
        return Err(Error::EmptySample(format!(
            "race interaction needs both groups, got {n_black} Black of {}",
            sub.len()
        )));
    }

    let mean_ctrl = mean_control(&sub, |r| r.voted_2020);
    let binary = fe_regression(
        &sub,
        "race_binary",
        |r| r.voted_2020,
        vec![
            column(&sub, "confined", |r| r.treated),
            column(&sub, "confined_x_black", |r| r.treated * r.black),
        ],
        Some(CovariateSet::RegisteredNoWhite),
        Structure::JailWeek,
        2,
        mean_ctrl,
    )?;
    let proportion = fe_regression(
        &sub,
        "race_proportion",
        |r| r.voted_2020,
        vec![
            column(&sub, "proportion_confined", |r| r.proportion),
            column(&sub, "proportion_x_black", |r| r.proportion * r.black),
        ],
        Some(CovariateSet::RegisteredNoWhite),
        Structure::JailWeek,
        2,
        mean_ctrl,
    )?;

    let black_rows: Vec<&StudyRow> = sub.iter().filter(|r| r.race == Some(Race::Black)).collect();
    let white_rows: Vec<&StudyRow> = sub.iter().filter(|r| r.race == Some(Race::White)).collect();

    let mean_max = |rows: &[&StudyRow]| -> (f64, f64, f64) {
        let treated: Vec<&&StudyRow> = rows.iter().filter(|r| r.treated == 1.0).collect();
        let mean_prop = if treated.is_empty() {
            f64::NAN
        } else {
            treated.iter().map(|r| r.proportion).sum::<f64>() / treated.len() as f64
        };
        let max_prop = rows.iter().map(|r| r.proportion).fold(0.0, f64::max);
        let controls: Vec<&&StudyRow> = rows.iter().filter(|r| r.treated == 0.0).collect();
        let ctrl_turnout = if controls.is_empty() {
            f64::NAN
        } else {
            controls.iter().map(|r| r.voted_2020).sum::<f64>() / controls.len() as f64
        };
        (mean_prop, max_prop, ctrl_turnout)
    };
    let (mean_prop_black, max_prop_black, ctrl_black) = mean_max(&black_rows);
    let (mean_prop_white, max_prop_white, ctrl_white) = mean_max(&white_rows);

    let mut binary = binary;
    let mut proportion = proportion;
    Ok(RaceInteraction {
        binary_interaction: binary.remove(1),
        binary_main: binary.remove(0),
        proportion_interaction: proportion.remove(1),
        proportion_main: proportion.remove(0),
        mean_prop_black,
        max_prop_black,
        mean_prop_white,
        max_prop_white,
        mean_control_turnout_black: ctrl_black,
        mean_control_turnout_white: ctrl_white,
        n_obs: sub.len(),
        race_reported_only,
    })
}

/// Registration and unconditional-turnout estimates on the all-individuals
/// sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixOutcomes {
    pub registration: TurnoutEffects,
    pub unconditional_turnout: TurnoutEffects,
}

/// Outcome 1: registered to vote by Election Day (a 0.95-threshold link
/// with registration on time). Outcome 2: voted in 2020 unconditional on
/// registration, with unlinked bookings counted as non-voters. Covariates
/// come from the booking side only.
pub fn registration_and_unconditional(rows: &[StudyRow]) -> Result<AppendixOutcomes> {
    require_nonempty(rows, "all-individuals sample")?;
    let registration = estimate_effects(rows, CovariateSet::BookingOnly, |r| r.registered, "registered")?;
    let unconditional =
        estimate_effects(rows, CovariateSet::BookingOnly, |r| r.voted_2020, "unconditional_turnout")?;
    Ok(AppendixOutcomes {
        registration,
        unconditional_turnout: unconditional,
    })
}
