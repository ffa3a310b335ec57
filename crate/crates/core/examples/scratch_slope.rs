// Trace the slope signal: truth-side vs linked-sample regression per seed.
use rosterlink::blocking::build_blocks;
use rosterlink::calendar::VotingCalendar;
use rosterlink::econometrics::{cluster_vcov, coef_inference, ols_fe, Column};
use rosterlink::linkage::{em_fit, link, EmConfig, LinkConfig};
use rosterlink::roster::{rosters_to_spells, IngestConfig};
use rosterlink::study::{build_registered_sample, covariate_columns, CovariateSet, SampleKind, StudyDesign};
use rosterlink::synth::{generate, PlantedEffects, SynthConfig};
use rosterlink::voter::Race;

fn main() {
    let calendar = VotingCalendar::default_2020();
    for seed in [10013u64, 10015, 10026, 10037, 10000, 10001] {
        let config = SynthConfig {
            effects: PlantedEffects { ate_binary: 0.0, slope_proportion: -0.12, black_extra_slope: -0.05, registration_effect: 0.0 },
            ..SynthConfig::default()
        };
        let data = generate(&config, seed).unwrap();
        let report = rosters_to_spells(data.snapshots, IngestConfig::default());
        let blocks = build_blocks(&report.spells, &data.voters);
        let em = EmConfig { resamples: 20, ..EmConfig::default() };
        let params = em_fit(&blocks, &report.spells, &data.voters, &em, seed).unwrap();
        let (links, _) = link(&blocks, &report.spells, &data.voters, &params, &LinkConfig::default());
        let design = StudyDesign { control_days: 42, treatment_days: 60, threshold: 0.75, sample_kind: SampleKind::RegisteredOnly };
        let rows = build_registered_sample(&links, &design, &calendar).unwrap();

        let sub: Vec<_> = rows.iter().filter(|r| matches!(r.race, Some(Race::Black) | Some(Race::White))).cloned().collect();
        let y: Vec<f64> = sub.iter().map(|r| r.voted_2020).collect();
        let mut x = vec![
            Column::new("prop", sub.iter().map(|r| r.proportion).collect::<Vec<_>>()),
            Column::new("prop_x_black", sub.iter().map(|r| r.proportion * r.black).collect::<Vec<_>>()),
        ];
        x.extend(covariate_columns(&sub, CovariateSet::RegisteredNoWhite));
        let jails: Vec<u32> = sub.iter().map(|r| r.jail).collect();
        let weeks: Vec<u32> = sub.iter().map(|r| r.week).collect();
        let fit = ols_fe(&y, &x, &[&jails]).unwrap();
        let v = cluster_vcov(&fit, &[&jails, &weeks]).unwrap();
        let inf = coef_inference(&fit.coef, &v);

        // truth-side: regress voted_2020 on TRUE prop among truth-linked bookings in the sample windows
        let truth_ids: std::collections::HashMap<&str, &str> =
            data.truth_links.iter().map(|t| (t.booking_id.as_str(), t.voter_id.as_str())).collect();
        let voters_by_id: std::collections::HashMap<&str, &rosterlink::voter::VoterRecord> =
            data.voters.iter().map(|v| (v.voter_id.as_str(), v)).collect();
        let mut ty = Vec::new();
        let mut tprop = Vec::new();
        let mut tblack = Vec::new();
        for s in &report.spells {
            let Some(state) = rosterlink::calendar::state_for_fips(&s.fips) else { continue };
            let w = calendar.window(state).unwrap();
            let treated = s.entry_date >= w.first_voting_day && s.entry_date <= rosterlink::calendar::ELECTION_DAY_2020;
            let control = s.entry_date > rosterlink::calendar::ELECTION_DAY_2020 && s.entry_date <= design.control_end();
            if !treated && !control { continue; }
            let Some(vid) = truth_ids.get(s.booking_id.as_str()) else { continue };
            let voter = voters_by_id[vid];
            let Some(race) = voter.race else { continue };
            if race == Race::Other { continue; }
            let prop = if treated {
                rosterlink::calendar::proportion_for_dates(s.entry_date, s.exit_date, state, &calendar).unwrap()
            } else { 0.0 };
            ty.push(f64::from(voter.voted_2020));
            tprop.push(prop);
            tblack.push(f64::from(race == Race::Black));
        }
        let tx = vec![
            Column::new("prop", tprop.clone()),
            Column::new("prop_x_black", tprop.iter().zip(&tblack).map(|(p, b)| p * b).collect::<Vec<_>>()),
            Column::new("black", tblack.clone()),
        ];
        let tfe = vec![0u32; ty.len()];
        let tfit = ols_fe(&ty, &tx, &[&tfe]).unwrap();

        let hi = sub.iter().filter(|r| r.proportion > 0.5).count();
        let thi = tprop.iter().filter(|&&p| p > 0.5).count();
        println!(
            "seed {seed}: linked slope {:.3}±{:.3} (n={}, hi-prop {}) | truth slope {:.3} (n={}, hi-prop {})",
            fit.coef[0], inf[0].0, sub.len(), hi, tfit.coef[0], ty.len(), thi
        );
    }
}
