//! End-to-end pipeline checks on synthetic data: generate, ingest, block,
//! fit, link, and estimate, with the truth sidecar as the yardstick.

use rosterlink::blocking::build_blocks;
use rosterlink::calendar::VotingCalendar;
use rosterlink::linkage::{em_fit, link, EmConfig, LinkConfig};
use rosterlink::roster::{rosters_to_spells, IngestConfig};
use rosterlink::study::effects::{estimate_effects, placebo_test, PlaceboYear};
use rosterlink::study::{build_registered_sample, CovariateSet, SampleKind, StudyDesign};
use rosterlink::synth::{generate, precision_recall, SynthConfig};

fn small_config() -> SynthConfig {
    SynthConfig {
        n_voters: 20_000,
        n_bookings: 3_000,
        states: ["NC", "WA", "TX", "GA"].iter().map(|s| s.to_string()).collect(),
        ..SynthConfig::default()
    }
}

#[test]
fn generation_is_seed_deterministic() {
    let config = SynthConfig {
        n_voters: 2_000,
        n_bookings: 300,
        states: vec!["NC".into(), "TX".into()],
        ..SynthConfig::default()
    };
    let a = generate(&config, 42).unwrap();
    let b = generate(&config, 42).unwrap();
    assert_eq!(a.snapshots.len(), b.snapshots.len());
    assert_eq!(a.voters.len(), b.voters.len());
    for (x, y) in a.voters.iter().zip(&b.voters) {
        assert_eq!(x.voter_id, y.voter_id);
        assert_eq!(x.name.full, y.name.full);
        assert_eq!(x.voted_2020, y.voted_2020);
    }
    let c = generate(&config, 43).unwrap();
    let same = a
        .voters
        .iter()
        .zip(&c.voters)
        .filter(|(x, y)| x.name.full == y.name.full)
        .count();
    assert!(same < a.voters.len());
}

#[test]
fn zero_typo_rates_give_high_recall() {
    let mut config = small_config();
    config.typo = rosterlink::synth::TypoModel::none();
    config.n_voters = 5_000;
    config.n_bookings = 800;
    config.states = vec!["NC".into(), "TX".into()];
    let out = generate(&config, 7).unwrap();

    let report = rosters_to_spells(out.snapshots, IngestConfig::default());
    assert!(report.rejected.is_empty());
    let blocks = build_blocks(&report.spells, &out.voters);
    let params = em_fit(&blocks, &report.spells, &out.voters, &EmConfig::default(), 7).unwrap();
    let (links, _) = link(&blocks, &report.spells, &out.voters, &params, &LinkConfig::default());

    let (precision, recall) = precision_recall(&links, &out.truth_links);
    assert!(precision > 0.97, "precision {precision}");
    assert!(recall > 0.93, "recall {recall}");
}

#[test]
fn full_pipeline_recovers_linkage_and_effects() {
    let started = std::time::Instant::now();
    let config = small_config();
    let out = generate(&config, 11).unwrap();

    let report = rosters_to_spells(out.snapshots, IngestConfig::default());
    assert_eq!(report.spells.len(), out.truth_spells.len());

    let blocks = build_blocks(&report.spells, &out.voters);
    let params = em_fit(&blocks, &report.spells, &out.voters, &EmConfig::default(), 11).unwrap();
    let (links, audit) = link(&blocks, &report.spells, &out.voters, &params, &LinkConfig::default());
    eprintln!(
        "linked {} of {} bookings in {:?}; audit {:?}",
        links.len(),
        report.spells.len(),
        started.elapsed(),
        audit.rows()
    );

    let (precision, recall) = precision_recall(&links, &out.truth_links);
    eprintln!("precision {precision:.4} recall {recall:.4}");
    assert!(precision > 0.95, "precision {precision}");
    assert!(recall > 0.85, "recall {recall}");

    // effect estimation at a fixed design
    let calendar = VotingCalendar::default_2020();
    let design = StudyDesign {
        control_days: 42,
        treatment_days: 60,
        threshold: 0.75,
        sample_kind: SampleKind::RegisteredOnly,
    };
    let rows = build_registered_sample(&links, &design, &calendar).unwrap();
    assert!(rows.len() > 300, "study sample {}", rows.len());

    let effects = estimate_effects(&rows, CovariateSet::Registered, |r| r.voted_2020, "turnout").unwrap();
    let binary = effects
        .estimates
        .iter()
        .find(|e| e.label == "turnout_binary_covariates")
        .unwrap();
    let truth = out.truth.effects.ate_binary;
    // the binary model also absorbs the planted proportion slope; 4 SE of
    // slack keeps this smoke check loose, the master acceptance test is
    // the strict one
    let prop_effect = out.truth.effects.slope_proportion * effects.mean_prop_confined;
    assert!(
        (binary.coef - (truth + prop_effect)).abs() < 4.0 * binary.se,
        "binary {} vs planted {truth}+{prop_effect} (se {})",
        binary.coef,
        binary.se
    );

    let placebo = placebo_test(&rows, PlaceboYear::Y2016).unwrap();
    assert!(
        placebo.placebo.coef.abs() < 4.0 * placebo.placebo.se,
        "placebo {} se {}",
        placebo.placebo.coef,
        placebo.placebo.se
    );
    eprintln!("total {:?}", started.elapsed());
}
