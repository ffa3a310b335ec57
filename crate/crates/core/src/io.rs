//! Delimited-text interfaces: snapshot, spell, voter, parameter, link, and
//! study-output tables, plus the flat key=value config format.
//!
//! All tables are comma-delimited with RFC-4180 quoting, ISO-8601 dates,
//! and UTF-8 text. Readers are strict about schema but collect per-row
//! failures (for example malformed dates) as rejections with reasons
//! instead of aborting the run.

use crate::econometrics::EffectEstimate;
use crate::error::{Error, Result};
use crate::linkage::{ExclusionAudit, FSParameters, LinkedRecord};
use crate::roster::{
    name_from_row, standardize_gender, BookingSpell, ChargeCategory, RejectedRow,
    RosterSnapshot,
};
use crate::similarity::{FIELD_LEVELS, FIELD_NAMES, N_FIELDS};
use crate::study::effects::{AppendixOutcomes, PlaceboResult, RaceInteraction, TurnoutEffects};
use crate::study::windows::WindowSearchResult;
use crate::study::SummaryRow;
use crate::synth::{TruthEffects, TruthLink};
use crate::voter::{Party, Race, VoterRecord};
use chrono::NaiveDate;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::MissingInput(path.display().to_string()),
        _ => Error::Csv(e),
    })
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| Error::InvalidInput(format!("bad {what}: {s:?}")))
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        // shortest representation that round-trips
        format!("{v}")
    }
}

// ---------------------------------------------------------------- snapshots

pub const SNAPSHOT_HEADER: [&str; 13] = [
    "facility_id",
    "fips",
    "observed_date",
    "booking_number",
    "person_id",
    "full_name",
    "first_name",
    "middle_name",
    "last_name",
    "age",
    "dob",
    "sex",
    "charges",
];

pub fn write_snapshots(path: &Path, snapshots: &[RosterSnapshot]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SNAPSHOT_HEADER)?;
    for s in snapshots {
        w.write_record([
            s.facility_id.as_str(),
            s.fips.as_str(),
            &s.observed_date.to_string(),
            &opt_str(&s.booking_number),
            &opt_str(&s.person_id),
            "",
            s.name.first.as_str(),
            s.name.middle.as_str(),
            s.name.last.as_str(),
            &opt_str(&s.age),
            &opt_str(&s.dob),
            s.gender.as_str(),
            &s.charges.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read snapshots, rejecting malformed rows (bad dates, unknown charge
/// codes, unparseable names) with reasons.
pub fn read_snapshots(path: &Path) -> Result<(Vec<RosterSnapshot>, Vec<RejectedRow>)> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers()?.clone();
    let idx = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("snapshot file missing column {name:?}")))
    };
    let cols: Vec<usize> = SNAPSHOT_HEADER.iter().map(|h| idx(h)).collect::<Result<_>>()?;

    let mut out = Vec::new();
    let mut rejected = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let get = |i: usize| record.get(cols[i]).unwrap_or("").trim();
        let parse_row = || -> std::result::Result<RosterSnapshot, String> {
            let observed_date: NaiveDate = get(2)
                .parse()
                .map_err(|_| format!("malformed date {:?}", get(2)))?;
            let dob = if get(10).is_empty() {
                None
            } else {
                Some(get(10).parse().map_err(|_| format!("malformed dob {:?}", get(10)))?)
            };
            let age = if get(9).is_empty() {
                None
            } else {
                Some(get(9).parse::<i64>().map_err(|_| format!("malformed age {:?}", get(9)))?)
            };
            let name = name_from_row(get(5), get(6), get(7), get(8))
                .map_err(|e| format!("unparseable name: {e}"))?;
            let mut charges = Vec::new();
            for code in get(12).split(';').filter(|c| !c.is_empty()) {
                charges.push(code.parse::<ChargeCategory>().map_err(|e| e.to_string())?);
            }
            Ok(RosterSnapshot {
                facility_id: get(0).to_string(),
                fips: get(1).to_string(),
                observed_date,
                booking_number: (!get(3).is_empty()).then(|| get(3).to_string()),
                person_id: (!get(4).is_empty()).then(|| get(4).to_string()),
                name,
                age,
                dob,
                gender: standardize_gender(get(11)),
                charges,
            })
        };
        match parse_row() {
            Ok(snap) => out.push(snap),
            Err(reason) => rejected.push(RejectedRow { row: row_no, reason }),
        }
    }
    Ok((out, rejected))
}

// ------------------------------------------------------------------- spells

pub const SPELL_HEADER: [&str; 16] = [
    "booking_id",
    "person_key",
    "facility_id",
    "fips",
    "entry_date",
    "exit_date",
    "censored",
    "length_of_stay_days",
    "age",
    "gender",
    "charge_count",
    "top_charge",
    "first_name",
    "middle_name",
    "last_name",
    "surname_soundex",
];

pub fn write_spells(path: &Path, spells: &[BookingSpell]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SPELL_HEADER)?;
    for s in spells {
        w.write_record([
            s.booking_id.as_str(),
            s.person_key.as_str(),
            s.facility_id.as_str(),
            s.fips.as_str(),
            &s.entry_date.to_string(),
            &s.exit_date.to_string(),
            &s.censored.to_string(),
            &s.length_of_stay_days.to_string(),
            &opt_str(&s.age),
            s.gender.as_str(),
            &s.charge_count.to_string(),
            &s.top_charge.map(|c| c.as_str().to_string()).unwrap_or_default(),
            s.name.first.as_str(),
            s.name.middle.as_str(),
            s.name.last.as_str(),
            s.name.surname_soundex.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spells(path: &Path) -> Result<Vec<BookingSpell>> {
    let mut rdr = open_reader(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let r = record?;
        let get = |i: usize| r.get(i).unwrap_or("").trim();
        let name = name_from_row("", get(12), get(13), get(14))?;
        out.push(BookingSpell {
            booking_id: get(0).to_string(),
            person_key: get(1).to_string(),
            facility_id: get(2).to_string(),
            fips: get(3).to_string(),
            entry_date: get(4).parse().map_err(|_| Error::InvalidInput(format!("bad entry_date {:?}", get(4))))?,
            exit_date: get(5).parse().map_err(|_| Error::InvalidInput(format!("bad exit_date {:?}", get(5))))?,
            censored: get(6) == "true",
            length_of_stay_days: get(7).parse().map_err(|_| Error::InvalidInput("bad length_of_stay".into()))?,
            age: parse_opt(get(8), "age")?,
            gender: standardize_gender(get(9)),
            charge_count: get(10).parse().map_err(|_| Error::InvalidInput("bad charge_count".into()))?,
            top_charge: if get(11).is_empty() { None } else { Some(get(11).parse()?) },
            name,
        });
    }
    Ok(out)
}

// ------------------------------------------------------------------- voters

pub const VOTER_HEADER: [&str; 15] = [
    "voter_id",
    "state",
    "fips",
    "first_name",
    "middle_name",
    "last_name",
    "age",
    "gender",
    "race",
    "race_reported",
    "party",
    "registration_date",
    "voted_2020",
    "voted_2016",
    "voted_2012",
];

pub fn write_voters(path: &Path, voters: &[VoterRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(VOTER_HEADER)?;
    for v in voters {
        w.write_record([
            v.voter_id.as_str(),
            v.state.as_str(),
            v.fips.as_str(),
            v.name.first.as_str(),
            v.name.middle.as_str(),
            v.name.last.as_str(),
            &opt_str(&v.age),
            v.gender.as_str(),
            &v.race.map(|r| r.as_str().to_string()).unwrap_or_default(),
            &v.race_reported.to_string(),
            &v.party.map(|p| p.as_str().to_string()).unwrap_or_default(),
            &opt_str(&v.registration_date),
            &v.voted_2020.to_string(),
            &v.voted_2016.to_string(),
            &v.voted_2012.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_voters(path: &Path) -> Result<Vec<VoterRecord>> {
    let mut rdr = open_reader(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let r = record?;
        let get = |i: usize| r.get(i).unwrap_or("").trim();
        let name = name_from_row("", get(3), get(4), get(5))?;
        out.push(VoterRecord {
            voter_id: get(0).to_string(),
            state: get(1).to_string(),
            fips: get(2).to_string(),
            name,
            age: parse_opt(get(6), "age")?,
            gender: standardize_gender(get(7)),
            race: if get(8).is_empty() { None } else { Some(get(8).parse::<Race>()?) },
            race_reported: get(9) == "true",
            party: if get(10).is_empty() { None } else { Some(get(10).parse::<Party>()?) },
            registration_date: parse_opt(get(11), "registration_date")?,
            voted_2020: get(12) == "true",
            voted_2016: get(13) == "true",
            voted_2012: get(14) == "true",
        });
    }
    Ok(out)
}

// --------------------------------------------------------------- parameters

/// Serialize fitted model parameters: one `lambda` row plus one row per
/// (field, level) with the m and u probabilities.
pub fn write_params(path: &Path, params: &FSParameters) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["param", "field", "level", "m", "u"])?;
    w.write_record(["lambda", "", "", &fmt_f64(params.lambda), ""])?;
    for k in 0..N_FIELDS {
        for l in 0..FIELD_LEVELS[k] {
            w.write_record([
                "field",
                FIELD_NAMES[k],
                &l.to_string(),
                &fmt_f64(params.m[k][l]),
                &fmt_f64(params.u[k][l]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<FSParameters> {
    let mut rdr = open_reader(path)?;
    let mut params = FSParameters {
        lambda: f64::NAN,
        m: [[0.0; 3]; N_FIELDS],
        u: [[0.0; 3]; N_FIELDS],
    };
    for record in rdr.records() {
        let r = record?;
        let get = |i: usize| r.get(i).unwrap_or("").trim();
        match get(0) {
            "lambda" => {
                params.lambda = get(3).parse().map_err(|_| Error::InvalidInput("bad lambda".into()))?
            }
            "field" => {
                let k = FIELD_NAMES
                    .iter()
                    .position(|n| *n == get(1))
                    .ok_or_else(|| Error::InvalidInput(format!("unknown field {:?}", get(1))))?;
                let l: usize = get(2).parse().map_err(|_| Error::InvalidInput("bad level".into()))?;
                params.m[k][l] = get(3).parse().map_err(|_| Error::InvalidInput("bad m".into()))?;
                params.u[k][l] = get(4).parse().map_err(|_| Error::InvalidInput("bad u".into()))?;
            }
            other => return Err(Error::InvalidInput(format!("unknown param row {other:?}"))),
        }
    }
    if !params.lambda.is_finite() {
        return Err(Error::InvalidInput("params file missing lambda".into()));
    }
    Ok(params)
}

// -------------------------------------------------------------------- links

pub const LINK_HEADER: [&str; 22] = [
    "booking_id",
    "voter_id",
    "posterior",
    "reweighted",
    "state",
    "fips",
    "facility_id",
    "entry_date",
    "exit_date",
    "length_of_stay_days",
    "booking_age",
    "booking_gender",
    "charge_count",
    "top_charge",
    "voter_age",
    "voter_gender",
    "race",
    "race_reported",
    "party",
    "registration_date",
    "voted_2020",
    "voted_2016",
];

pub fn write_links(path: &Path, links: &[LinkedRecord]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<&str> = LINK_HEADER.to_vec();
    header.push("voted_2012");
    w.write_record(&header)?;
    for l in links {
        w.write_record([
            l.booking_id.as_str(),
            l.voter_id.as_str(),
            &fmt_f64(l.posterior),
            &fmt_f64(l.reweighted),
            l.state.as_str(),
            l.fips.as_str(),
            l.facility_id.as_str(),
            &l.entry_date.to_string(),
            &l.exit_date.to_string(),
            &l.length_of_stay_days.to_string(),
            &opt_str(&l.booking_age),
            l.booking_gender.as_str(),
            &l.charge_count.to_string(),
            &l.top_charge.map(|c| c.as_str().to_string()).unwrap_or_default(),
            &opt_str(&l.voter_age),
            l.voter_gender.as_str(),
            &l.race.map(|r| r.as_str().to_string()).unwrap_or_default(),
            &l.race_reported.to_string(),
            &l.party.map(|p| p.as_str().to_string()).unwrap_or_default(),
            &opt_str(&l.registration_date),
            &l.voted_2020.to_string(),
            &l.voted_2016.to_string(),
            &l.voted_2012.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_links(path: &Path) -> Result<Vec<LinkedRecord>> {
    let mut rdr = open_reader(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let r = record?;
        let get = |i: usize| r.get(i).unwrap_or("").trim();
        out.push(LinkedRecord {
            booking_id: get(0).to_string(),
            voter_id: get(1).to_string(),
            posterior: get(2).parse().map_err(|_| Error::InvalidInput("bad posterior".into()))?,
            reweighted: get(3).parse().map_err(|_| Error::InvalidInput("bad reweighted".into()))?,
            state: get(4).to_string(),
            fips: get(5).to_string(),
            facility_id: get(6).to_string(),
            entry_date: get(7).parse().map_err(|_| Error::InvalidInput("bad entry_date".into()))?,
            exit_date: get(8).parse().map_err(|_| Error::InvalidInput("bad exit_date".into()))?,
            length_of_stay_days: get(9).parse().map_err(|_| Error::InvalidInput("bad length_of_stay".into()))?,
            booking_age: parse_opt(get(10), "booking_age")?,
            booking_gender: standardize_gender(get(11)),
            charge_count: get(12).parse().map_err(|_| Error::InvalidInput("bad charge_count".into()))?,
            top_charge: if get(13).is_empty() { None } else { Some(get(13).parse()?) },
            voter_age: parse_opt(get(14), "voter_age")?,
            voter_gender: standardize_gender(get(15)),
            race: if get(16).is_empty() { None } else { Some(get(16).parse::<Race>()?) },
            race_reported: get(17) == "true",
            party: if get(18).is_empty() { None } else { Some(get(18).parse::<Party>()?) },
            registration_date: parse_opt(get(19), "registration_date")?,
            voted_2020: get(20) == "true",
            voted_2016: get(21) == "true",
            voted_2012: get(22) == "true",
        });
    }
    Ok(out)
}

// ---------------------------------------------------------- study outputs

pub fn write_exclusion_audit(path: &Path, audit: &ExclusionAudit) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["rule", "count"])?;
    for (rule, count) in audit.rows() {
        w.write_record([rule, &count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_block_stats(path: &Path, stats: &[crate::blocking::BlockStat]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["state", "soundex", "age_center", "n_bookings", "n_voters", "n_pairs"])?;
    for s in stats {
        w.write_record([
            s.state.as_str(),
            s.soundex.as_str(),
            &opt_str(&s.age_center),
            &s.n_bookings.to_string(),
            &s.n_voters.to_string(),
            &s.n_pairs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth_links(path: &Path, links: &[TruthLink]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["booking_id", "voter_id"])?;
    for l in links {
        w.write_record([l.booking_id.as_str(), l.voter_id.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_links(path: &Path) -> Result<Vec<TruthLink>> {
    let mut rdr = open_reader(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let r = record?;
        out.push(TruthLink {
            booking_id: r.get(0).unwrap_or("").to_string(),
            voter_id: r.get(1).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

pub fn write_truth_effects(path: &Path, truth: &TruthEffects) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["key", "value"])?;
    let rows = [
        ("ate_binary", fmt_f64(truth.effects.ate_binary)),
        ("slope_proportion", fmt_f64(truth.effects.slope_proportion)),
        ("black_extra_slope", fmt_f64(truth.effects.black_extra_slope)),
        ("registration_effect", fmt_f64(truth.effects.registration_effect)),
        ("n_true_links", truth.n_true_links.to_string()),
        ("n_bookings", truth.n_bookings.to_string()),
        ("n_voters", truth.n_voters.to_string()),
    ];
    for (k, v) in rows {
        w.write_record([k, &v])?;
    }
    w.flush()?;
    Ok(())
}

fn effect_record(e: &EffectEstimate) -> [String; 10] {
    [
        e.label.clone(),
        e.term.clone(),
        fmt_f64(e.coef),
        fmt_f64(e.se),
        fmt_f64(e.t),
        fmt_f64(e.p),
        e.stars().to_string(),
        e.n_obs.to_string(),
        e.n_clusters.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"),
        fmt_f64(e.mean_control_outcome),
    ]
}

const EFFECT_HEADER: [&str; 10] = [
    "label", "term", "coef", "se", "t", "p", "stars", "n_obs", "n_clusters", "mean_control_outcome",
];

pub fn write_effects(path: &Path, effects: &TurnoutEffects) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(EFFECT_HEADER)?;
    for e in &effects.estimates {
        w.write_record(effect_record(e))?;
    }
    for (k, v) in [
        ("mean_prop_confined", effects.mean_prop_confined),
        ("max_prop_confined", effects.max_prop_confined),
        ("mean_control_outcome", effects.mean_control_outcome),
        ("n_obs", effects.n_obs as f64),
    ] {
        w.write_record(["_summary", k, &fmt_f64(v), "", "", "", "", "", "", ""])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_placebo(path: &Path, results: &[PlaceboResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(EFFECT_HEADER)?;
    for r in results {
        w.write_record(effect_record(&r.placebo))?;
        w.write_record(effect_record(&r.current))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_race(path: &Path, r: &RaceInteraction) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(EFFECT_HEADER)?;
    for e in [&r.binary_main, &r.binary_interaction, &r.proportion_main, &r.proportion_interaction] {
        w.write_record(effect_record(e))?;
    }
    for (k, v) in [
        ("mean_prop_confined_black", r.mean_prop_black),
        ("max_prop_confined_black", r.max_prop_black),
        ("mean_prop_confined_white", r.mean_prop_white),
        ("max_prop_confined_white", r.max_prop_white),
        ("mean_control_turnout_black", r.mean_control_turnout_black),
        ("mean_control_turnout_white", r.mean_control_turnout_white),
        ("n_obs", r.n_obs as f64),
        ("race_reported_only", f64::from(r.race_reported_only)),
    ] {
        w.write_record(["_summary", k, &fmt_f64(v), "", "", "", "", "", "", ""])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_appendix_outcomes(dir: &Path, out: &AppendixOutcomes) -> Result<()> {
    write_effects(&dir.join("registration.csv"), &out.registration)?;
    write_effects(&dir.join("unconditional_turnout.csv"), &out.unconditional_turnout)?;
    Ok(())
}

pub fn write_balance(path: &Path, balance: &crate::econometrics::BalanceResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["covariate", "coef", "se", "p"])?;
    for c in &balance.coefs {
        w.write_record([c.name.as_str(), &fmt_f64(c.coef), &fmt_f64(c.se), &fmt_f64(c.p)])?;
    }
    w.write_record(["_joint_f", &fmt_f64(balance.joint_f), "", ""])?;
    w.write_record(["_joint_p", &fmt_f64(balance.joint_p), "", ""])?;
    w.write_record(["_n_obs", &balance.n_obs.to_string(), "", ""])?;
    w.write_record(["_n_clusters", &balance.n_clusters.to_string(), "", ""])?;
    w.flush()?;
    Ok(())
}

pub fn write_pcurve(path: &Path, results: &[WindowSearchResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["control_days", "treatment_days", "joint_f", "joint_p", "n_obs", "chosen"])?;
    for res in results {
        for point in &res.curve {
            w.write_record([
                res.control_days.to_string(),
                point.treatment_days.to_string(),
                point.joint_f.map(fmt_f64).unwrap_or_default(),
                point.joint_p.map(fmt_f64).unwrap_or_default(),
                point.n_obs.to_string(),
                (res.chosen == Some(point.treatment_days)).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_stats(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["stat", "treated", "control"])?;
    for r in rows {
        w.write_record([r.stat.as_str(), &fmt_f64(r.treated), &fmt_f64(r.control)])?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------- config

/// Parse a flat `key=value` config file. `#` starts a comment; blank lines
/// are skipped.
pub fn parse_kv<R: Read>(mut reader: R) -> Result<BTreeMap<String, String>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("config line {} is not key=value", no + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_kv_path(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = std::fs::File::open(path).map_err(|_| Error::MissingInput(path.display().to_string()))?;
    parse_kv(file)
}

pub fn write_kv(path: &Path, entries: &BTreeMap<String, String>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    for (k, v) in entries {
        writeln!(f, "{k}={v}")?;
    }
    Ok(())
}
