//! Daily roster snapshots and their reconstruction into booking spells.
//!
//! One spell is a maximal run of consecutive observed dates for one person
//! within one facility. Identity within a facility is resolved by booking
//! number first, then person id, then exact normalized name plus date of
//! birth or age. A gap of more than `gap_tolerance` unobserved days closes a
//! spell (default 0: any missing day splits).

use crate::error::{Error, Result};
use crate::identity::{self, PersonName};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Top-level charge category. Severity order is total:
/// violent > property > drug > public order > DUI > criminal traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeCategory {
    CriminalTraffic,
    Dui,
    PublicOrder,
    Drug,
    Property,
    Violent,
}

impl ChargeCategory {
    pub const ALL: [ChargeCategory; 6] = [
        ChargeCategory::Violent,
        ChargeCategory::Property,
        ChargeCategory::Drug,
        ChargeCategory::PublicOrder,
        ChargeCategory::Dui,
        ChargeCategory::CriminalTraffic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ChargeCategory::Violent => "violent",
            ChargeCategory::Property => "property",
            ChargeCategory::Drug => "drug",
            ChargeCategory::PublicOrder => "public_order",
            ChargeCategory::Dui => "dui",
            ChargeCategory::CriminalTraffic => "criminal_traffic",
        }
    }
}

impl FromStr for ChargeCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "violent" => Ok(ChargeCategory::Violent),
            "property" => Ok(ChargeCategory::Property),
            "drug" => Ok(ChargeCategory::Drug),
            "public_order" | "public order" => Ok(ChargeCategory::PublicOrder),
            "dui" => Ok(ChargeCategory::Dui),
            "criminal_traffic" | "criminal traffic" => Ok(ChargeCategory::CriminalTraffic),
            other => Err(Error::InvalidInput(format!("unknown charge code {other:?}"))),
        }
    }
}

impl fmt::Display for ChargeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Most severe category present; `None` for an empty charge list.
pub fn top_charge(charges: &[ChargeCategory]) -> Option<ChargeCategory> {
    charges.iter().copied().max()
}

/// Standardized sex-gender. Trans and non-binary report values are
/// re-categorized as unknown for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    #[default]
    Unknown,
}

impl Gender {
    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case-insensitive table lookup of raw sex-gender strings.
pub fn standardize_gender(raw: &str) -> Gender {
    let cleaned: String = raw
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    match cleaned.as_str() {
        "m" | "male" | "man" => Gender::Male,
        "f" | "female" | "fem" | "woman" | "w" => Gender::Female,
        // trans / non-binary re-categorized as unknown for matching
        _ => Gender::Unknown,
    }
}

/// One roster row: a person observed in a facility on one date.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RosterSnapshot {
    pub facility_id: String,
    /// 5-digit county FIPS code.
    pub fips: String,
    pub observed_date: NaiveDate,
    pub booking_number: Option<String>,
    pub person_id: Option<String>,
    pub name: PersonName,
    pub age: Option<i64>,
    pub dob: Option<NaiveDate>,
    pub gender: Gender,
    pub charges: Vec<ChargeCategory>,
}

/// One continuous jail stay reconstructed from daily snapshots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BookingSpell {
    pub booking_id: String,
    pub person_key: String,
    pub facility_id: String,
    pub fips: String,
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    /// Exit is the last observed date in the facility's data; the person may
    /// still have been present when observation ended.
    pub censored: bool,
    pub length_of_stay_days: i64,
    pub age: Option<i64>,
    pub gender: Gender,
    pub charge_count: usize,
    pub top_charge: Option<ChargeCategory>,
    pub name: PersonName,
}

impl BookingSpell {
    /// True when two spells share at least one day.
    pub fn overlaps(&self, other: &BookingSpell) -> bool {
        self.entry_date <= other.exit_date && other.entry_date <= self.exit_date
    }
}

/// A rejected snapshot row and why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: String,
}

/// Output of spell reconstruction.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub spells: Vec<BookingSpell>,
    pub rejected: Vec<RejectedRow>,
    pub rows_in: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct IngestConfig {
    /// Number of unobserved days bridged inside one spell. 0 means any
    /// missing day closes the spell.
    pub gap_tolerance: i64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { gap_tolerance: 0 }
    }
}

fn validate(snap: &RosterSnapshot, row: usize) -> std::result::Result<(), RejectedRow> {
    if snap.fips.len() != 5 || !snap.fips.bytes().all(|b| b.is_ascii_digit()) {
        return Err(RejectedRow {
            row,
            reason: format!("fips must be exactly 5 digits, got {:?}", snap.fips),
        });
    }
    if snap.name.last.is_empty() && snap.name.first.is_empty() {
        return Err(RejectedRow {
            row,
            reason: "record has no usable name".to_string(),
        });
    }
    Ok(())
}

/// Identity resolution precedence: booking number, else person id, else
/// exact normalized name plus dob/age.
fn person_key(snap: &RosterSnapshot) -> String {
    if let Some(b) = snap.booking_number.as_deref().filter(|s| !s.is_empty()) {
        return format!("bn:{b}");
    }
    if let Some(p) = snap.person_id.as_deref().filter(|s| !s.is_empty()) {
        return format!("pid:{p}");
    }
    let birth = snap
        .dob
        .map(|d| d.to_string())
        .or_else(|| snap.age.map(|a| format!("age{a}")))
        .unwrap_or_default();
    format!("nm:{}|{}", snap.name.full, birth)
}

fn majority<T: Clone + Eq + std::hash::Hash + Ord>(values: &[T]) -> Option<T> {
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    let best = counts.values().copied().max()?;
    let winners: Vec<&T> = counts
        .iter()
        .filter(|(_, &c)| c == best)
        .map(|(v, _)| *v)
        .collect();
    if winners.len() == 1 {
        Some(winners[0].clone())
    } else {
        None // tie -> unknown
    }
}

fn build_spell(
    facility_id: &str,
    key: &str,
    run: &[&RosterSnapshot],
    seq: usize,
    facility_last_date: NaiveDate,
) -> BookingSpell {
    let entry = run[0].observed_date;
    let exit = run[run.len() - 1].observed_date;

    let ages: Vec<i64> = run.iter().filter_map(|s| s.age).collect();
    let age = majority(&ages);
    let genders: Vec<Gender> = run
        .iter()
        .map(|s| s.gender)
        .filter(|g| *g != Gender::Unknown)
        .collect();
    let gender = match majority_gender(&genders) {
        Some(g) => g,
        None => Gender::Unknown,
    };
    let names: Vec<String> = run.iter().map(|s| s.name.full.clone()).collect();
    let name = match majority(&names) {
        Some(full) => run
            .iter()
            .find(|s| s.name.full == full)
            .map(|s| s.name.clone())
            .unwrap_or_else(|| run[0].name.clone()),
        None => run[0].name.clone(),
    };

    // Charges: take the longest charge list observed during the spell,
    // breaking ties toward the latest date.
    let charges = run
        .iter()
        .rev()
        .max_by_key(|s| s.charges.len())
        .map(|s| s.charges.clone())
        .unwrap_or_default();

    BookingSpell {
        booking_id: format!("{facility_id}:{key}:{seq}"),
        person_key: format!("{facility_id}:{key}"),
        facility_id: facility_id.to_string(),
        fips: run[0].fips.clone(),
        entry_date: entry,
        exit_date: exit,
        censored: exit == facility_last_date,
        length_of_stay_days: (exit - entry).num_days() + 1,
        age,
        gender,
        charge_count: charges.len(),
        top_charge: top_charge(&charges),
        name,
    }
}

fn majority_gender(values: &[Gender]) -> Option<Gender> {
    let male = values.iter().filter(|g| **g == Gender::Male).count();
    let female = values.iter().filter(|g| **g == Gender::Female).count();
    match male.cmp(&female) {
        std::cmp::Ordering::Greater => Some(Gender::Male),
        std::cmp::Ordering::Less => Some(Gender::Female),
        std::cmp::Ordering::Equal => None,
    }
}

/// Reconstruct booking spells from daily snapshots.
///
/// Facilities are processed in parallel; output is sorted by
/// (facility, person key, entry date) so results are deterministic.
pub fn rosters_to_spells(snapshots: Vec<RosterSnapshot>, config: IngestConfig) -> IngestReport {
    let rows_in = snapshots.len();
    let mut rejected = Vec::new();
    let mut by_facility: BTreeMap<String, Vec<RosterSnapshot>> = BTreeMap::new();
    for (row, snap) in snapshots.into_iter().enumerate() {
        match validate(&snap, row) {
            Ok(()) => by_facility.entry(snap.facility_id.clone()).or_default().push(snap),
            Err(rej) => rejected.push(rej),
        }
    }

    let facilities: Vec<(String, Vec<RosterSnapshot>)> = by_facility.into_iter().collect();
    let mut spells: Vec<BookingSpell> = facilities
        .into_par_iter()
        .map(|(facility_id, snaps)| facility_spells(&facility_id, snaps, config))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    spells.sort_by(|a, b| {
        (&a.facility_id, &a.person_key, a.entry_date).cmp(&(
            &b.facility_id,
            &b.person_key,
            b.entry_date,
        ))
    });

    IngestReport {
        spells,
        rejected,
        rows_in,
    }
}

fn facility_spells(
    facility_id: &str,
    snaps: Vec<RosterSnapshot>,
    config: IngestConfig,
) -> Vec<BookingSpell> {
    let facility_last_date = snaps.iter().map(|s| s.observed_date).max().unwrap();
    let mut by_person: BTreeMap<String, Vec<&RosterSnapshot>> = BTreeMap::new();
    for snap in &snaps {
        by_person.entry(person_key(snap)).or_default().push(snap);
    }

    let mut out = Vec::new();
    for (key, mut rows) in by_person {
        rows.sort_by_key(|s| s.observed_date);
        rows.dedup_by_key(|s| s.observed_date);
        let mut seq = 0usize;
        let mut run_start = 0usize;
        for i in 1..=rows.len() {
            let closes = if i == rows.len() {
                true
            } else {
                let gap = (rows[i].observed_date - rows[i - 1].observed_date).num_days() - 1;
                gap > config.gap_tolerance
            };
            if closes {
                out.push(build_spell(facility_id, &key, &rows[run_start..i], seq, facility_last_date));
                seq += 1;
                run_start = i;
            }
        }
    }
    out
}

/// Expand spells back into one synthetic snapshot per observed day. Used by
/// the idempotence check and by the synthetic data generator.
pub fn expand_to_snapshots(spells: &[BookingSpell]) -> Vec<RosterSnapshot> {
    let mut out = Vec::new();
    for spell in spells {
        let mut date = spell.entry_date;
        while date <= spell.exit_date {
            out.push(RosterSnapshot {
                facility_id: spell.facility_id.clone(),
                fips: spell.fips.clone(),
                observed_date: date,
                booking_number: Some(spell.booking_id.clone()),
                person_id: None,
                name: spell.name.clone(),
                age: spell.age,
                dob: None,
                gender: spell.gender,
                charges: charges_of(spell),
            });
            date = date.succ_opt().expect("date overflow");
        }
    }
    out
}

/// Reconstruct a representative charge list: the top charge first, padded
/// with the least severe category to preserve the count.
fn charges_of(spell: &BookingSpell) -> Vec<ChargeCategory> {
    let mut charges = Vec::with_capacity(spell.charge_count);
    if let Some(top) = spell.top_charge {
        charges.push(top);
        while charges.len() < spell.charge_count {
            charges.push(ChargeCategory::CriminalTraffic);
        }
    }
    charges
}

/// Convenience: parse one raw name-or-components row into a [`PersonName`].
pub fn name_from_row(full: &str, first: &str, middle: &str, last: &str) -> Result<PersonName> {
    if !last.is_empty() || !first.is_empty() {
        identity::from_components(first, middle, last)
    } else {
        identity::parse_name(full)
    }
}
