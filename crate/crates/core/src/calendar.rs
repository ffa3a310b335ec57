//! Per-state 2020 voting-day windows and treatment-exposure computation.
//!
//! Each state's window runs from its first legal voting day (the earlier of
//! mail-ballot return start and early in-person voting) through Election Day.
//! The number of voting days per state is shipped data, not a derived count:
//! North Carolina is recorded as 60 days even though its inclusive span
//! Sep 4 - Nov 3 covers 61 calendar days, so exposure proportions are
//! clamped to 1.

use crate::error::{Error, Result};
use crate::roster::BookingSpell;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

pub const ELECTION_DAY_2020: NaiveDate = match NaiveDate::from_ymd_opt(2020, 11, 3) {
    Some(d) => d,
    None => unreachable!(),
};
pub const ELECTION_DAY_2016: NaiveDate = match NaiveDate::from_ymd_opt(2016, 11, 8) {
    Some(d) => d,
    None => unreachable!(),
};
pub const ELECTION_DAY_2012: NaiveDate = match NaiveDate::from_ymd_opt(2012, 11, 6) {
    Some(d) => d,
    None => unreachable!(),
};

const CALENDAR_2020_CSV: &str = include_str!("../data/voting_calendar_2020.csv");

/// FIPS state prefix to postal code, per FIPS publication 6-4.
const STATE_FIPS: [(&str, &str); 51] = [
    ("01", "AL"), ("02", "AK"), ("04", "AZ"), ("05", "AR"), ("06", "CA"),
    ("08", "CO"), ("09", "CT"), ("10", "DE"), ("11", "DC"), ("12", "FL"),
    ("13", "GA"), ("15", "HI"), ("16", "ID"), ("17", "IL"), ("18", "IN"),
    ("19", "IA"), ("20", "KS"), ("21", "KY"), ("22", "LA"), ("23", "ME"),
    ("24", "MD"), ("25", "MA"), ("26", "MI"), ("27", "MN"), ("28", "MS"),
    ("29", "MO"), ("30", "MT"), ("31", "NE"), ("32", "NV"), ("33", "NH"),
    ("34", "NJ"), ("35", "NM"), ("36", "NY"), ("37", "NC"), ("38", "ND"),
    ("39", "OH"), ("40", "OK"), ("41", "OR"), ("42", "PA"), ("44", "RI"),
    ("45", "SC"), ("46", "SD"), ("47", "TN"), ("48", "TX"), ("49", "UT"),
    ("50", "VT"), ("51", "VA"), ("53", "WA"), ("54", "WV"), ("55", "WI"),
    ("56", "WY"),
];

/// Resolve a 5-digit county FIPS code to its state postal code.
pub fn state_for_fips(fips: &str) -> Option<&'static str> {
    let prefix = fips.get(0..2)?;
    STATE_FIPS.iter().find(|(p, _)| *p == prefix).map(|(_, s)| *s)
}

/// Postal code back to FIPS state prefix (used by the synthetic generator).
pub fn fips_prefix_for_state(state: &str) -> Option<&'static str> {
    STATE_FIPS.iter().find(|(_, s)| *s == state).map(|(p, _)| *p)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateWindow {
    pub first_voting_day: NaiveDate,
    pub n_voting_days: i64,
}

/// Per-state 2020 voting windows.
#[derive(Debug, Clone)]
pub struct VotingCalendar {
    states: BTreeMap<String, StateWindow>,
}

impl VotingCalendar {
    /// The shipped 2020 calendar.
    pub fn default_2020() -> VotingCalendar {
        Self::from_reader(CALENDAR_2020_CSV.as_bytes()).expect("embedded calendar parses")
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<VotingCalendar> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut states = BTreeMap::new();
        for row in rdr.deserialize() {
            let (state, first_voting_day, n_voting_days): (String, NaiveDate, i64) = row?;
            if first_voting_day > ELECTION_DAY_2020 {
                return Err(Error::InvalidInput(format!(
                    "{state}: first voting day {first_voting_day} is after Election Day"
                )));
            }
            if n_voting_days < 1 {
                return Err(Error::InvalidInput(format!(
                    "{state}: n_voting_days must be >= 1"
                )));
            }
            states.insert(state, StateWindow { first_voting_day, n_voting_days });
        }
        Ok(VotingCalendar { states })
    }

    pub fn from_path(path: &Path) -> Result<VotingCalendar> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn window(&self, state: &str) -> Result<StateWindow> {
        self.states
            .get(state)
            .copied()
            .ok_or_else(|| Error::MissingCalendar(state.to_string()))
    }

    pub fn states(&self) -> impl Iterator<Item = (&str, StateWindow)> {
        self.states.iter().map(|(s, w)| (s.as_str(), *w))
    }

    /// Earliest first voting day among the given states (the start of the
    /// full treatment window for a sample covering those states).
    pub fn earliest_first_day<'a, I: IntoIterator<Item = &'a str>>(&self, states: I) -> Option<NaiveDate> {
        states
            .into_iter()
            .filter_map(|s| self.states.get(s))
            .map(|w| w.first_voting_day)
            .min()
    }
}

fn spell_state(spell: &BookingSpell) -> Result<&'static str> {
    state_for_fips(&spell.fips).ok_or_else(|| Error::UnknownState(spell.fips.clone()))
}

/// Inclusive day count of the intersection of [entry, exit] with the
/// state's voting window; 0 when disjoint.
fn overlap_days(entry: NaiveDate, exit: NaiveDate, window: &StateWindow) -> i64 {
    let start = entry.max(window.first_voting_day);
    let end = exit.min(ELECTION_DAY_2020);
    if start > end {
        0
    } else {
        (end - start).num_days() + 1
    }
}

/// True iff the spell intersects the state's voting window for any length
/// of time.
pub fn confined_during_voting(spell: &BookingSpell, calendar: &VotingCalendar) -> Result<bool> {
    let window = calendar.window(spell_state(spell)?)?;
    Ok(overlap_days(spell.entry_date, spell.exit_date, &window) > 0)
}

/// Share of the state's voting days covered by the spell, in [0, 1].
///
/// The inclusive overlap is divided by the state's recorded number of voting
/// days and clamped at 1 (the recorded count can undershoot the calendar
/// span by one day).
pub fn proportion_confined(spell: &BookingSpell, calendar: &VotingCalendar) -> Result<f64> {
    proportion_for_dates(spell.entry_date, spell.exit_date, spell_state(spell)?, calendar)
}

/// [`proportion_confined`] on raw dates, for callers holding merged records
/// rather than spells.
pub fn proportion_for_dates(
    entry: NaiveDate,
    exit: NaiveDate,
    state: &str,
    calendar: &VotingCalendar,
) -> Result<f64> {
    let window = calendar.window(state)?;
    let days = overlap_days(entry, exit, &window);
    Ok((days as f64 / window.n_voting_days as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::parse_name;
    use crate::roster::Gender;

    fn spell(fips: &str, entry: &str, exit: &str) -> BookingSpell {
        let entry: NaiveDate = entry.parse().unwrap();
        let exit: NaiveDate = exit.parse().unwrap();
        BookingSpell {
            booking_id: "b".into(),
            person_key: "p".into(),
            facility_id: "f".into(),
            fips: fips.into(),
            entry_date: entry,
            exit_date: exit,
            censored: false,
            length_of_stay_days: (exit - entry).num_days() + 1,
            age: Some(30),
            gender: Gender::Male,
            charge_count: 1,
            top_charge: None,
            name: parse_name("Jane Doe").unwrap(),
        }
    }

    #[test]
    fn anchors_match_shipped_table() {
        let cal = VotingCalendar::default_2020();
        let nc = cal.window("NC").unwrap();
        assert_eq!(nc.first_voting_day, NaiveDate::from_ymd_opt(2020, 9, 4).unwrap());
        assert_eq!(nc.n_voting_days, 60);
        let wa = cal.window("WA").unwrap();
        assert_eq!(wa.first_voting_day, NaiveDate::from_ymd_opt(2020, 10, 16).unwrap());
        assert_eq!(wa.n_voting_days, 19);
    }

    #[test]
    fn confinement_boundaries() {
        let cal = VotingCalendar::default_2020();
        // post-election booking
        assert!(!confined_during_voting(&spell("53001", "2020-11-04", "2020-11-20"), &cal).unwrap());
        // inside the WA window
        assert!(confined_during_voting(&spell("53001", "2020-10-20", "2020-10-21"), &cal).unwrap());
        // before the NC window opens on Sep 4
        assert!(!confined_during_voting(&spell("37001", "2020-09-01", "2020-09-02"), &cal).unwrap());
        assert!(confined_during_voting(&spell("37001", "2020-09-01", "2020-09-04"), &cal).unwrap());
    }

    #[test]
    fn proportion_worked_values() {
        let cal = VotingCalendar::default_2020();
        // NC full span: clamped to exactly 1.0
        let p = proportion_confined(&spell("37001", "2020-09-04", "2021-01-01"), &cal).unwrap();
        assert_eq!(p, 1.0);
        // WA Nov 3 - Dec 10: one voting day out of 19
        let p = proportion_confined(&spell("53001", "2020-11-03", "2020-12-10"), &cal).unwrap();
        assert!((p - 1.0 / 19.0).abs() < 1e-15);
        assert_eq!(format!("{p:.3}"), "0.053");
        // entirely after Election Day
        let p = proportion_confined(&spell("53001", "2020-11-04", "2020-12-10"), &cal).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn proportion_positive_iff_confined() {
        let cal = VotingCalendar::default_2020();
        for (entry, exit) in [
            ("2020-08-10", "2020-09-03"),
            ("2020-08-10", "2020-09-04"),
            ("2020-10-01", "2020-10-02"),
            ("2020-11-03", "2020-11-03"),
            ("2020-11-04", "2020-11-05"),
        ] {
            let s = spell("37001", entry, exit);
            let confined = confined_during_voting(&s, &cal).unwrap();
            let prop = proportion_confined(&s, &cal).unwrap();
            assert_eq!(prop > 0.0, confined, "{entry}..{exit}");
        }
    }

    #[test]
    fn proportion_monotone_in_exit() {
        let cal = VotingCalendar::default_2020();
        let mut prev = 0.0;
        for exit_day in 1..=30 {
            let exit = NaiveDate::from_ymd_opt(2020, 10, exit_day).unwrap();
            let s = spell("53001", "2020-10-01", &exit.to_string());
            let p = proportion_confined(&s, &cal).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn unknown_state_errors() {
        let cal = VotingCalendar::default_2020();
        let err = confined_during_voting(&spell("99001", "2020-11-01", "2020-11-02"), &cal);
        assert!(matches!(err, Err(Error::UnknownState(_))));
    }

    #[test]
    fn fips_round_trip() {
        assert_eq!(state_for_fips("37183"), Some("NC"));
        assert_eq!(state_for_fips("53033"), Some("WA"));
        assert_eq!(fips_prefix_for_state("NC"), Some("37"));
        assert_eq!(state_for_fips("99999"), None);
    }
}
