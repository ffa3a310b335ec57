// Diagnose two-way vcov pieces for the boundary-identified binary effect.
use rosterlink::blocking::build_blocks;
use rosterlink::calendar::VotingCalendar;
use rosterlink::econometrics::{cluster_vcov, ols_fe};
use rosterlink::linkage::{em_fit, link, EmConfig, LinkConfig};
use rosterlink::roster::{rosters_to_spells, IngestConfig};
use rosterlink::study::{build_registered_sample, covariate_columns, CovariateSet, SampleKind, StudyDesign};
use rosterlink::synth::{generate, PlantedEffects, SynthConfig};

fn main() {
    let calendar = VotingCalendar::default_2020();
    for seed in [0u64, 2, 4, 5] {
        let config = SynthConfig {
            effects: PlantedEffects { ate_binary: -0.03, slope_proportion: 0.0, black_extra_slope: 0.0, registration_effect: -0.02 },
            ..SynthConfig::default()
        };
        let data = generate(&config, seed).unwrap();
        let report = rosters_to_spells(data.snapshots, IngestConfig::default());
        let blocks = build_blocks(&report.spells, &data.voters);
        let em = EmConfig { resamples: 10, ..EmConfig::default() };
        let params = em_fit(&blocks, &report.spells, &data.voters, &em, seed).unwrap();
        let (links, _) = link(&blocks, &report.spells, &data.voters, &params, &LinkConfig::default());
        let design = StudyDesign { control_days: 42, treatment_days: 60, threshold: 0.75, sample_kind: SampleKind::RegisteredOnly };
        let rows = build_registered_sample(&links, &design, &calendar).unwrap();

        let y: Vec<f64> = rows.iter().map(|r| r.voted_2020).collect();
        let mut x = vec![rosterlink::econometrics::Column::new("confined", rows.iter().map(|r| r.treated).collect::<Vec<_>>())];
        x.extend(covariate_columns(&rows, CovariateSet::Registered));
        let jails: Vec<u32> = rows.iter().map(|r| r.jail).collect();
        let weeks: Vec<u32> = rows.iter().map(|r| r.week).collect();
        let fit = ols_fe(&y, &x, &[&jails, &weeks]).unwrap();
        let v2 = cluster_vcov(&fit, &[&jails, &weeks]).unwrap();
        let v1 = cluster_vcov(&fit, &[&jails]).unwrap();
        // rows in the boundary week (week of Nov 3)
        let boundary_week = rows.iter().find(|r| r.entry_date.to_string() == "2020-11-03").map(|r| r.week);
        let n45 = rows.iter().filter(|r| Some(r.week) == boundary_week).count();
        let n45t = rows.iter().filter(|r| Some(r.week) == boundary_week && r.treated == 1.0).count();
        println!(
            "seed {seed}: n={} n45={n45} (treated {n45t}) coef={:.4} | 2w se={:.4} (VA={:.6} VB={:.6} VAB={:.6} repaired={}) | 1w se={:.4}",
            rows.len(), fit.coef[0],
            v2.v[(0,0)].sqrt(),
            v2.pieces[0][(0,0)], v2.pieces[1][(0,0)], v2.pieces[2][(0,0)],
            v2.repaired,
            v1.v[(0,0)].sqrt(),
        );
    }
}
