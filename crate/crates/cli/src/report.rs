//! Render every table produced by the pipeline stages in a directory into
//! one markdown report, using the manifest to label files.

use anyhow::{Context, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Known output files in render order, with section titles.
const SECTIONS: &[(&str, &str)] = &[
    ("windows.csv", "Balance search (joint F-test p-values by treatment window)"),
    ("balance", "Balance tests"),
    ("summary_stats.csv", "Summary statistics"),
    ("turnout.csv", "Effect of confinement on turnout"),
    ("placebo.csv", "Placebo tests"),
    ("race.csv", "Racial heterogeneity"),
    ("race_reporting.csv", "Racial heterogeneity (race-reporting states)"),
    ("registration.csv", "Effect on registration (all individuals)"),
    ("unconditional_turnout.csv", "Effect on turnout unconditional on registration"),
    ("summary_stats_all.csv", "Summary statistics (all individuals)"),
    ("exclusions.csv", "Linkage exclusion audit"),
];

fn render_csv(path: &Path) -> Result<String> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let mut out = String::new();
    writeln!(out, "| {} |", headers.iter().collect::<Vec<_>>().join(" | "))?;
    writeln!(out, "|{}|", headers.iter().map(|_| "---").collect::<Vec<_>>().join("|"))?;
    for record in rdr.records() {
        let r = record?;
        writeln!(out, "| {} |", r.iter().collect::<Vec<_>>().join(" | "))?;
    }
    Ok(out)
}

fn manifest_labels(dir: &Path) -> BTreeMap<String, String> {
    let mut labels = BTreeMap::new();
    let Ok(text) = std::fs::read_to_string(dir.join("manifest.jsonl")) else {
        return labels;
    };
    for line in text.lines() {
        let Ok(entry) = serde_json::from_str::<serde_json::Value>(line) else {
            continue;
        };
        for output in entry["outputs"].as_array().into_iter().flatten() {
            if let (Some(path), Some(label)) = (output["path"].as_str(), output["label"].as_str()) {
                if let Some(name) = Path::new(path).file_name() {
                    labels.insert(name.to_string_lossy().to_string(), label.to_string());
                }
            }
        }
    }
    labels
}

pub fn render(dir: &Path, out_path: &Path) -> Result<()> {
    let labels = manifest_labels(dir);
    let mut doc = String::new();
    writeln!(doc, "# Linkage and turnout analysis report\n")?;
    writeln!(doc, "Source directory: `{}`\n", dir.display())?;

    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map_or(false, |e| e == "csv"))
        .collect();
    files.sort();

    let mut rendered = std::collections::HashSet::new();
    // known sections first, in a stable narrative order
    for &(pattern, title) in SECTIONS {
        for file in &files {
            let name = file.file_name().unwrap().to_string_lossy().to_string();
            if name.starts_with(pattern.trim_end_matches(".csv")) && !rendered.contains(&name) {
                rendered.insert(name.clone());
                writeln!(doc, "## {title}\n")?;
                if let Some(label) = labels.get(&name) {
                    writeln!(doc, "*Table label: `{label}`; file: `{name}`*\n")?;
                } else {
                    writeln!(doc, "*File: `{name}`*\n")?;
                }
                doc.push_str(&render_csv(file)?);
                doc.push('\n');
            }
        }
    }
    // anything else (truth sidecars excluded: they are not analysis outputs)
    for file in &files {
        let name = file.file_name().unwrap().to_string_lossy().to_string();
        if rendered.contains(&name) || name.starts_with("truth_") {
            continue;
        }
        writeln!(doc, "## {name}\n")?;
        doc.push_str(&render_csv(file)?);
        doc.push('\n');
    }

    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out_path, doc)?;
    Ok(())
}
