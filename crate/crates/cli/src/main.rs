//! Pipeline driver: each subcommand reads and writes the documented
//! delimited formats, records a manifest entry with content hashes, and
//! exits nonzero with a machine-readable error on any validation failure.

mod manifest;
mod report;
mod settings;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use manifest::ManifestWriter;
use rosterlink::blocking::{block_stats, build_blocks};
use rosterlink::calendar::VotingCalendar;
use rosterlink::econometrics::balance_test;
use rosterlink::io;
use rosterlink::linkage::{em_fit, link, EmConfig, LinkConfig};
use rosterlink::roster::{rosters_to_spells, IngestConfig};
use rosterlink::study::effects::{
    estimate_effects, heterogeneity, placebo_test, registration_and_unconditional, PlaceboYear,
};
use rosterlink::study::windows::{window_search_all, window_search_registered};
use rosterlink::study::{
    build_all_individuals_sample, build_registered_sample, covariate_columns, summary_stats,
    CovariateSet, SampleKind, StudyDesign, CONTROL_WINDOWS,
};
use rosterlink::synth::{generate, SynthConfig};
use settings::Settings;
use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "rosterlink", version, about = "Probabilistic jail-roster to voter-file linkage and booking-timing turnout analysis")]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; every stage derives its own named sub-stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: available cores). Results do not depend on
    /// the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the shipped per-state voting calendar.
    #[arg(long, global = true)]
    calendar: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic rosters, a voter file, and truth sidecars.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_voters: Option<usize>,
        #[arg(long)]
        n_bookings: Option<usize>,
        /// Comma-separated state postal codes.
        #[arg(long, value_delimiter = ',')]
        states: Option<Vec<String>>,
    },
    /// Convert daily roster snapshots into booking spells.
    Ingest {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Unobserved days bridged inside one spell.
        #[arg(long)]
        gap_tolerance: Option<i64>,
    },
    /// Report candidate-block statistics.
    Block {
        #[arg(long)]
        spells: PathBuf,
        #[arg(long)]
        voters: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit linkage model parameters by expectation maximization.
    Fit {
        #[arg(long)]
        spells: PathBuf,
        #[arg(long)]
        voters: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        sample_size: Option<u64>,
    },
    /// Score, re-weight, and apply exclusions to produce linked records.
    Link {
        #[arg(long)]
        spells: PathBuf,
        #[arg(long)]
        voters: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Re-weighted probability threshold (0.75 or 0.95).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Balance test for one control/treatment design.
    Balance {
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        control_days: Option<i64>,
        #[arg(long)]
        treatment_days: Option<i64>,
    },
    /// Search treatment windows for balance; emits the p-value curve.
    Windows {
        #[arg(long)]
        links: PathBuf,
        /// Booking spells, required for --sample all.
        #[arg(long)]
        spells: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Single control width; defaults to the standard set 7..42.
        #[arg(long)]
        control_days: Option<i64>,
        /// registered (default) or all.
        #[arg(long, default_value = "registered")]
        sample: String,
    },
    /// Turnout effect estimates for one design.
    Estimate {
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        control_days: Option<i64>,
        #[arg(long)]
        treatment_days: Option<i64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Placebo outcomes (2016 and 2012) for one design.
    Placebo {
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        control_days: Option<i64>,
        #[arg(long)]
        treatment_days: Option<i64>,
    },
    /// Race-interaction models on the Black/white subsample.
    Heterogeneity {
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        control_days: Option<i64>,
        #[arg(long)]
        treatment_days: Option<i64>,
        /// Keep only states that report race.
        #[arg(long)]
        race_reported_only: bool,
    },
    /// Registration and unconditional-turnout outcomes on all bookings.
    AppendixB {
        #[arg(long)]
        spells: PathBuf,
        /// Linked records at the 0.95 threshold.
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        control_days: Option<i64>,
        #[arg(long)]
        treatment_days: Option<i64>,
    },
    /// Render every table in an output directory into one report.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        // machine-readable error on stderr, then a human-readable trace
        eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing thread pool")?;
    }
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.get("seed", cli.seed, 0u64)?;
    let calendar = match &cli.calendar {
        Some(path) => VotingCalendar::from_path(path)?,
        None => VotingCalendar::default_2020(),
    };

    match cli.command {
        Command::Synth {
            out,
            n_voters,
            n_bookings,
            states,
        } => {
            let mut config = SynthConfig::default();
            config.n_voters = settings.get("n_voters", n_voters, config.n_voters)?;
            config.n_bookings = settings.get("n_bookings", n_bookings, config.n_bookings)?;
            let default_states: Vec<&str> = config.states.iter().map(|s| s.as_str()).collect();
            config.states = settings.get_list("states", states, &default_states);
            config.true_match_rate = settings.get("true_match_rate", None, config.true_match_rate)?;
            config.typo.substitution = settings.get("typo_substitution", None, config.typo.substitution)?;
            config.typo.transposition = settings.get("typo_transposition", None, config.typo.transposition)?;
            config.typo.deletion = settings.get("typo_deletion", None, config.typo.deletion)?;
            config.effects.ate_binary = settings.get("ate_binary", None, config.effects.ate_binary)?;
            config.effects.slope_proportion =
                settings.get("slope_proportion", None, config.effects.slope_proportion)?;
            config.effects.black_extra_slope =
                settings.get("black_extra_slope", None, config.effects.black_extra_slope)?;
            config.effects.registration_effect =
                settings.get("registration_effect", None, config.effects.registration_effect)?;

            let data = generate(&config, seed)?;
            let snapshots = out.join("snapshots.csv");
            let voters = out.join("voters.csv");
            let truth_links = out.join("truth_links.csv");
            let truth_effects = out.join("truth_effects.csv");
            io::write_snapshots(&snapshots, &data.snapshots)?;
            io::write_voters(&voters, &data.voters)?;
            io::write_truth_links(&truth_links, &data.truth_links)?;
            io::write_truth_effects(&truth_effects, &data.truth)?;

            let mut m = ManifestWriter::new(&out, "synth", Some(seed));
            m.config("n_voters", config.n_voters)
                .config("n_bookings", config.n_bookings)
                .config("states", config.states.join(","));
            m.output(&snapshots, None)?
                .output(&voters, None)?
                .output(&truth_links, Some("truth_sidecar"))?
                .output(&truth_effects, Some("truth_sidecar"))?;
            m.finish()?;
            println!("synth: {} snapshots, {} voters, {} true links", data.snapshots.len(), data.voters.len(), data.truth_links.len());
        }

        Command::Ingest {
            snapshots,
            out,
            gap_tolerance,
        } => {
            let gap = settings.get("gap_tolerance", gap_tolerance, 0i64)?;
            let (snaps, mut rejected) = io::read_snapshots(&snapshots)?;
            let report = rosters_to_spells(snaps, IngestConfig { gap_tolerance: gap });
            rejected.extend(report.rejected.clone());

            let spells_path = out.join("spells.csv");
            io::write_spells(&spells_path, &report.spells)?;
            let rejects_path = out.join("ingest_rejects.csv");
            write_rejects(&rejects_path, &rejected)?;

            let mut m = ManifestWriter::new(&out, "ingest", Some(seed));
            m.config("gap_tolerance", gap);
            m.input(&snapshots)?;
            m.output(&spells_path, None)?.output(&rejects_path, None)?;
            m.finish()?;
            println!(
                "ingest: {} rows in, {} spells, {} rejected",
                report.rows_in,
                report.spells.len(),
                rejected.len()
            );
        }

        Command::Block { spells, voters, out } => {
            let spells_data = io::read_spells(&spells)?;
            let voters_data = io::read_voters(&voters)?;
            let blocks = build_blocks(&spells_data, &voters_data);
            let stats = block_stats(&blocks);
            let stats_path = out.join("block_stats.csv");
            io::write_block_stats(&stats_path, &stats)?;

            let mut m = ManifestWriter::new(&out, "block", Some(seed));
            m.input(&spells)?.input(&voters)?;
            m.output(&stats_path, None)?;
            m.finish()?;
            println!(
                "block: {} blocks, pair universe {}, max block {} pairs",
                stats.len(),
                blocks.pair_universe(),
                stats.iter().map(|s| s.n_pairs).max().unwrap_or(0)
            );
        }

        Command::Fit {
            spells,
            voters,
            out,
            resamples,
            sample_size,
        } => {
            let mut config = EmConfig::default();
            config.resamples = settings.get("resamples", resamples, config.resamples)?;
            config.sample_size = settings.get("sample_size", sample_size, config.sample_size)?;
            config.tol = settings.get("tol", None, config.tol)?;
            config.max_iter = settings.get("max_iter", None, config.max_iter)?;

            let spells_data = io::read_spells(&spells)?;
            let voters_data = io::read_voters(&voters)?;
            let blocks = build_blocks(&spells_data, &voters_data);
            let params = em_fit(&blocks, &spells_data, &voters_data, &config, seed)?;
            let params_path = out.join("params.csv");
            io::write_params(&params_path, &params)?;

            let mut m = ManifestWriter::new(&out, "fit", Some(seed));
            m.config("resamples", config.resamples)
                .config("sample_size", config.sample_size);
            m.input(&spells)?.input(&voters)?;
            m.output(&params_path, None)?;
            m.finish()?;
            println!("fit: lambda = {:.6}", params.lambda);
        }

        Command::Link {
            spells,
            voters,
            params,
            out,
            threshold,
        } => {
            let threshold = settings.get("threshold", threshold, 0.75)?;
            if threshold != 0.75 && threshold != 0.95 {
                bail!("threshold must be 0.75 or 0.95, got {threshold}");
            }
            let spells_data = io::read_spells(&spells)?;
            let voters_data = io::read_voters(&voters)?;
            let fitted = io::read_params(&params)?;
            let blocks = build_blocks(&spells_data, &voters_data);
            let config = LinkConfig {
                threshold,
                election_day: rosterlink::calendar::ELECTION_DAY_2020,
            };
            let (links, audit) = link(&blocks, &spells_data, &voters_data, &fitted, &config);

            let links_path = out.join("links.csv");
            io::write_links(&links_path, &links)?;
            let audit_path = out.join("exclusions.csv");
            io::write_exclusion_audit(&audit_path, &audit)?;

            let mut m = ManifestWriter::new(&out, "link", Some(seed));
            m.config("threshold", threshold);
            m.input(&spells)?.input(&voters)?.input(&params)?;
            m.output(&links_path, None)?
                .output(&audit_path, Some("exclusion_audit"))?;
            m.finish()?;
            println!("link: kept {} of {} top rows", audit.kept, audit.top_rows);
        }

        Command::Balance {
            links,
            out,
            control_days,
            treatment_days,
        } => {
            let control = settings.get("control_days", control_days, 7i64)?;
            let treatment = settings.get("treatment_days", treatment_days, 60i64)?;
            let records = io::read_links(&links)?;
            let design = StudyDesign {
                control_days: control,
                treatment_days: treatment,
                threshold: 0.0,
                sample_kind: SampleKind::RegisteredOnly,
            };
            let rows = build_registered_sample(&records, &design, &calendar)?;
            let treated: Vec<f64> = rows.iter().map(|r| r.treated).collect();
            let covs = covariate_columns(&rows, CovariateSet::Registered);
            let facilities: Vec<u32> = rows.iter().map(|r| r.jail).collect();
            let robust = settings.get("cluster_robust_wald", None, true)?;
            let result = balance_test(&treated, &covs, &facilities, robust)?;

            let path = out.join(format!("balance_{control}_{treatment}.csv"));
            io::write_balance(&path, &result)?;
            let mut m = ManifestWriter::new(&out, "balance", Some(seed));
            m.config("control_days", control).config("treatment_days", treatment);
            m.input(&links)?;
            m.output(&path, Some("balance_tests"))?;
            m.finish()?;
            println!("balance: joint p = {:.4} over {} rows", result.joint_p, result.n_obs);
        }

        Command::Windows {
            links,
            spells,
            out,
            control_days,
            sample,
        } => {
            let controls: Vec<i64> = match settings.get_opt("control_days", control_days)? {
                Some(c) => vec![c],
                None => CONTROL_WINDOWS.to_vec(),
            };
            let robust = settings.get("cluster_robust_wald", None, true)?;
            let records = io::read_links(&links)?;
            let mut results = Vec::new();
            for control in controls {
                let res = match sample.as_str() {
                    "registered" => window_search_registered(&records, control, 0.75, &calendar, robust)?,
                    "all" => {
                        let spells_path = spells
                            .as_ref()
                            .ok_or_else(|| anyhow::anyhow!("--sample all requires --spells"))?;
                        let spells_data = io::read_spells(spells_path)?;
                        let by_id: HashMap<String, _> =
                            records.iter().map(|l| (l.booking_id.clone(), l.clone())).collect();
                        window_search_all(&spells_data, &by_id, control, &calendar, robust)?
                    }
                    other => bail!("unknown sample kind {other:?}"),
                };
                println!(
                    "windows: control {} days -> chosen {:?}",
                    res.control_days, res.chosen
                );
                results.push(res);
            }
            let path = out.join("windows.csv");
            io::write_pcurve(&path, &results)?;
            let mut m = ManifestWriter::new(&out, "windows", Some(seed));
            m.config("sample", &sample);
            m.input(&links)?;
            m.output(&path, Some("balance_pcurve"))?;
            m.finish()?;
        }

        Command::Estimate {
            links,
            out,
            control_days,
            treatment_days,
            threshold,
        } => {
            let control = settings.get("control_days", control_days, 7i64)?;
            let treatment = settings.get("treatment_days", treatment_days, 60i64)?;
            let threshold = settings.get("threshold", threshold, 0.75)?;
            let records = io::read_links(&links)?;
            let design = StudyDesign {
                control_days: control,
                treatment_days: treatment,
                threshold,
                sample_kind: SampleKind::RegisteredOnly,
            };
            let rows = build_registered_sample(&records, &design, &calendar)?;
            let effects = estimate_effects(&rows, CovariateSet::Registered, |r| r.voted_2020, "turnout")?;
            let stats = summary_stats(&rows, SampleKind::RegisteredOnly);

            let turnout_path = out.join("turnout.csv");
            io::write_effects(&turnout_path, &effects)?;
            let stats_path = out.join("summary_stats.csv");
            io::write_summary_stats(&stats_path, &stats)?;

            let mut m = ManifestWriter::new(&out, "estimate", Some(seed));
            m.config("control_days", control)
                .config("treatment_days", treatment)
                .config("threshold", threshold);
            m.input(&links)?;
            m.output(&turnout_path, Some("turnout_effects"))?
                .output(&stats_path, Some("summary_statistics"))?;
            m.finish()?;
            for e in &effects.estimates {
                println!("estimate: {} {} = {:.4}{} (se {:.4})", e.label, e.term, e.coef, e.stars(), e.se);
            }
        }

        Command::Placebo {
            links,
            out,
            control_days,
            treatment_days,
        } => {
            let control = settings.get("control_days", control_days, 7i64)?;
            let treatment = settings.get("treatment_days", treatment_days, 60i64)?;
            let records = io::read_links(&links)?;
            let design = StudyDesign {
                control_days: control,
                treatment_days: treatment,
                threshold: 0.75,
                sample_kind: SampleKind::RegisteredOnly,
            };
            let rows = build_registered_sample(&records, &design, &calendar)?;
            let results = vec![
                placebo_test(&rows, PlaceboYear::Y2016)?,
                placebo_test(&rows, PlaceboYear::Y2012)?,
            ];
            let path = out.join("placebo.csv");
            io::write_placebo(&path, &results)?;
            let mut m = ManifestWriter::new(&out, "placebo", Some(seed));
            m.config("control_days", control).config("treatment_days", treatment);
            m.input(&links)?;
            m.output(&path, Some("placebo_tests"))?;
            m.finish()?;
            for r in &results {
                println!(
                    "placebo {}: {:.4} (se {:.4}); 2020 on same sample: {:.4}{}",
                    r.year, r.placebo.coef, r.placebo.se, r.current.coef, r.current.stars()
                );
            }
        }

        Command::Heterogeneity {
            links,
            out,
            control_days,
            treatment_days,
            race_reported_only,
        } => {
            let control = settings.get("control_days", control_days, 7i64)?;
            let treatment = settings.get("treatment_days", treatment_days, 60i64)?;
            let records = io::read_links(&links)?;
            let design = StudyDesign {
                control_days: control,
                treatment_days: treatment,
                threshold: 0.75,
                sample_kind: SampleKind::RegisteredOnly,
            };
            let rows = build_registered_sample(&records, &design, &calendar)?;
            let result = heterogeneity(&rows, race_reported_only)?;
            let (file, label) = if race_reported_only {
                ("race_reporting.csv", "race_interactions_reporting_states")
            } else {
                ("race.csv", "race_interactions")
            };
            let path = out.join(file);
            io::write_race(&path, &result)?;
            let mut m = ManifestWriter::new(&out, "heterogeneity", Some(seed));
            m.config("control_days", control)
                .config("treatment_days", treatment)
                .config("race_reported_only", race_reported_only);
            m.input(&links)?;
            m.output(&path, Some(label))?;
            m.finish()?;
            println!(
                "heterogeneity: proportion x black = {:.4}{} (se {:.4})",
                result.proportion_interaction.coef,
                result.proportion_interaction.stars(),
                result.proportion_interaction.se
            );
        }

        Command::AppendixB {
            spells,
            links,
            out,
            control_days,
            treatment_days,
        } => {
            let control = settings.get("control_days", control_days, 7i64)?;
            let treatment = settings.get("treatment_days", treatment_days, 60i64)?;
            let spells_data = io::read_spells(&spells)?;
            let records = io::read_links(&links)?;
            let by_id: HashMap<String, _> =
                records.iter().map(|l| (l.booking_id.clone(), l.clone())).collect();
            let design = StudyDesign {
                control_days: control,
                treatment_days: treatment,
                threshold: 0.95,
                sample_kind: SampleKind::AllIndividuals,
            };
            let rows = build_all_individuals_sample(&spells_data, &by_id, &design, &calendar)?;
            let outcomes = registration_and_unconditional(&rows)?;
            io::write_appendix_outcomes(&out, &outcomes)?;
            let stats = summary_stats(&rows, SampleKind::AllIndividuals);
            let stats_path = out.join("summary_stats_all.csv");
            io::write_summary_stats(&stats_path, &stats)?;

            let mut m = ManifestWriter::new(&out, "appendix-b", Some(seed));
            m.config("control_days", control).config("treatment_days", treatment);
            m.input(&spells)?.input(&links)?;
            m.output(&out.join("registration.csv"), Some("registration_effects"))?
                .output(&out.join("unconditional_turnout.csv"), Some("unconditional_turnout_effects"))?
                .output(&stats_path, Some("summary_statistics_all_individuals"))?;
            m.finish()?;
            println!("appendix-b: {} rows", rows.len());
        }

        Command::Report { dir, out } => {
            let out_path = out.unwrap_or_else(|| dir.join("report.md"));
            report::render(&dir, &out_path)?;
            println!("report: {}", out_path.display());
        }
    }
    Ok(())
}

fn write_rejects(path: &std::path::Path, rejected: &[rosterlink::roster::RejectedRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new().from_path(path)?;
    w.write_record(["row", "reason"])?;
    for r in rejected {
        w.write_record([r.row.to_string(), r.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}
