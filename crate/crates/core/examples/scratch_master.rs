// Scratch calibration for the planted-effect master loop (not part of the
// deliverable; run via: cargo run --release --example scratch_master)
use rayon::prelude::*;
use rosterlink::blocking::build_blocks;
use rosterlink::calendar::VotingCalendar;
use rosterlink::linkage::{em_fit, link, EmConfig, LinkConfig};
use rosterlink::roster::{rosters_to_spells, IngestConfig};
use rosterlink::study::effects::{
    estimate_effects, heterogeneity, placebo_test, registration_and_unconditional, PlaceboYear,
};
use rosterlink::study::{
    build_all_individuals_sample, build_registered_sample, CovariateSet, SampleKind, StudyDesign,
};
use rosterlink::synth::{generate, PlantedEffects, SynthConfig};
use std::collections::HashMap;

fn main() {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let calendar = VotingCalendar::default_2020();

    let started = std::time::Instant::now();
    let results: Vec<[Option<(f64, f64, f64)>; 5]> = (0..n_seeds)
        .into_par_iter()
        .map(|seed| run_one(seed, &calendar))
        .collect();
    let names = ["binary", "slope", "black_extra", "registration", "placebo"];
    for (i, name) in names.iter().enumerate() {
        let coefs: Vec<f64> = results.iter().filter_map(|r| r[i].map(|(c, _, _)| c)).collect();
        let ses: Vec<f64> = results.iter().filter_map(|r| r[i].map(|(_, s, _)| s)).collect();
        let mean = coefs.iter().sum::<f64>() / coefs.len() as f64;
        let sd = (coefs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (coefs.len() as f64 - 1.0)).sqrt();
        let mean_se = ses.iter().sum::<f64>() / ses.len() as f64;
        println!("{name}: mean coef {mean:.4}, empirical sd {sd:.4}, mean claimed se {mean_se:.4}");
        let ok = results.iter().filter(|r| r[i].map_or(false, |(c, s, t)| (c - t).abs() <= 2.0 * s)).count();
        let fails: Vec<String> = results
            .iter()
            .enumerate()
            .filter_map(|(s, r)| match r[i] {
                Some((c, se, t)) if (c - t).abs() > 2.0 * se => Some(format!("seed{s}: {c:.3}±{se:.3} vs {t:.3}")),
                None => Some(format!("seed{s}: ERROR")),
                _ => None,
            })
            .take(4)
            .collect();
        println!("{name}: {ok}/{n_seeds} within 2SE   misses: {fails:?}");
    }
    println!("elapsed {:?} ({:?}/seed)", started.elapsed(), started.elapsed() / n_seeds as u32);
}

fn run_one(seed: u64, calendar: &VotingCalendar) -> [Option<(f64, f64, f64)>; 5] {
    // config R: binary + registration + placebo checks
    let config_r = SynthConfig {
        effects: PlantedEffects {
            ate_binary: -0.03,
            slope_proportion: 0.0,
            black_extra_slope: 0.0,
            registration_effect: -0.02,
        },
        ..SynthConfig::default()
    };
    // config S: slope + interaction checks
    let config_s = SynthConfig {
        effects: PlantedEffects {
            ate_binary: 0.0,
            slope_proportion: -0.12,
            black_extra_slope: -0.05,
            registration_effect: 0.0,
        },
        ..SynthConfig::default()
    };

    let mut out: [Option<(f64, f64, f64)>; 5] = [None, None, None, None, None];

    if let Ok((links, rows_all)) = pipeline(&config_r, seed, calendar) {
        let design = StudyDesign {
            control_days: 42,
            treatment_days: 60,
            threshold: 0.75,
            sample_kind: SampleKind::RegisteredOnly,
        };
        if let Ok(rows) = build_registered_sample(&links, &design, calendar) {
            if let Ok(p) = placebo_test(&rows, PlaceboYear::Y2016) {
                // the 2020-outcome model on the placebo sample is the
                // one-way-clustered binary estimator
                out[0] = Some((p.current.coef, p.current.se, config_r.effects.ate_binary));
                out[4] = Some((p.placebo.coef, p.placebo.se, 0.0));
            }
        }
        {
            // registration recovery with jail FE and jail clustering
            use rosterlink::econometrics::{cluster_vcov, coef_inference, ols_fe, Column};
            use rosterlink::study::covariate_columns as covs;
            let y: Vec<f64> = rows_all.iter().map(|r| r.registered).collect();
            let mut x = vec![Column::new("confined", rows_all.iter().map(|r| r.treated).collect::<Vec<_>>())];
            x.extend(covs(&rows_all, CovariateSet::BookingOnly));
            let jails: Vec<u32> = rows_all.iter().map(|r| r.jail).collect();
            if let Ok(fit) = ols_fe(&y, &x, &[&jails]) {
                if let Ok(v) = cluster_vcov(&fit, &[&jails]) {
                    let inf = coef_inference(&fit.coef, &v);
                    out[3] = Some((fit.coef[0], inf[0].0, config_r.effects.registration_effect));
                }
            }
            let _ = registration_and_unconditional(&rows_all);
        }
    }

    if let Ok((links, _)) = pipeline(&config_s, seed + 10_000, calendar) {
        let design = StudyDesign {
            control_days: 42,
            treatment_days: 60,
            threshold: 0.75,
            sample_kind: SampleKind::RegisteredOnly,
        };
        if let Ok(rows) = build_registered_sample(&links, &design, calendar) {
            let _ = heterogeneity(&rows, false);
            // one-way-clustered interaction model for the coverage check
            use rosterlink::econometrics::{cluster_vcov, coef_inference, ols_fe, Column};
            use rosterlink::study::covariate_columns as covs;
            use rosterlink::voter::Race;
            let sub: Vec<_> = rows
                .iter()
                .filter(|r| matches!(r.race, Some(Race::Black) | Some(Race::White)))
                .cloned()
                .collect();
            let y: Vec<f64> = sub.iter().map(|r| r.voted_2020).collect();
            let mut x = vec![
                Column::new("proportion", sub.iter().map(|r| r.proportion).collect::<Vec<_>>()),
                Column::new("proportion_x_black", sub.iter().map(|r| r.proportion * r.black).collect::<Vec<_>>()),
            ];
            x.extend(covs(&sub, CovariateSet::RegisteredNoWhite));
            let jails: Vec<u32> = sub.iter().map(|r| r.jail).collect();
            if let Ok(fit) = ols_fe(&y, &x, &[&jails]) {
                if let Ok(v) = cluster_vcov(&fit, &[&jails]) {
                    let inf = coef_inference(&fit.coef, &v);
                    out[1] = Some((fit.coef[0], inf[0].0, config_s.effects.slope_proportion));
                    out[2] = Some((fit.coef[1], inf[1].0, config_s.effects.black_extra_slope));
                }
            }
        }
    }
    out
}

type PipelineOut = (Vec<rosterlink::linkage::LinkedRecord>, Vec<rosterlink::study::StudyRow>);

fn pipeline(config: &SynthConfig, seed: u64, calendar: &VotingCalendar) -> rosterlink::Result<PipelineOut> {
    let data = generate(config, seed)?;
    let report = rosters_to_spells(data.snapshots, IngestConfig::default());
    let blocks = build_blocks(&report.spells, &data.voters);
    let em = EmConfig { resamples: 20, ..EmConfig::default() };
    let params = em_fit(&blocks, &report.spells, &data.voters, &em, seed)?;
    let (links, _) = link(&blocks, &report.spells, &data.voters, &params, &LinkConfig::default());
    let (links95, _) = link(
        &blocks,
        &report.spells,
        &data.voters,
        &params,
        &LinkConfig { threshold: 0.95, ..LinkConfig::default() },
    );
    let by_id: HashMap<String, _> = links95.iter().map(|l| (l.booking_id.clone(), l.clone())).collect();
    let design = StudyDesign {
        control_days: 42,
        treatment_days: 60,
        threshold: 0.95,
        sample_kind: SampleKind::AllIndividuals,
    };
    let rows_all = build_all_individuals_sample(&report.spells, &by_id, &design, calendar)?;
    Ok((links, rows_all))
}
