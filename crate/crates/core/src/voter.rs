//! Registered-voter records: identity fields, registration date, and
//! turnout flags for the 2020, 2016, and 2012 general elections.

use crate::error::Error;
use crate::identity::PersonName;
use crate::roster::Gender;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Race {
    White,
    Black,
    Other,
}

impl Race {
    pub fn as_str(&self) -> &'static str {
        match self {
            Race::White => "white",
            Race::Black => "black",
            Race::Other => "other",
        }
    }
}

impl FromStr for Race {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "white" => Ok(Race::White),
            "black" => Ok(Race::Black),
            "other" => Ok(Race::Other),
            other => Err(Error::InvalidInput(format!("unknown race {other:?}"))),
        }
    }
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Democratic,
    Republican,
    Other,
}

impl Party {
    pub fn as_str(&self) -> &'static str {
        match self {
            Party::Democratic => "democratic",
            Party::Republican => "republican",
            Party::Other => "other",
        }
    }
}

impl FromStr for Party {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "democratic" | "democrat" | "dem" => Ok(Party::Democratic),
            "republican" | "rep" => Ok(Party::Republican),
            "other" | "nonpartisan" | "non-partisan" => Ok(Party::Other),
            other => Err(Error::InvalidInput(format!("unknown party {other:?}"))),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One registered voter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoterRecord {
    pub voter_id: String,
    /// 2-letter state postal code.
    pub state: String,
    /// 5-digit county FIPS code.
    pub fips: String,
    pub name: PersonName,
    pub age: Option<i64>,
    pub gender: Gender,
    pub race: Option<Race>,
    /// True when race was reported by the state rather than predicted.
    pub race_reported: bool,
    pub party: Option<Party>,
    pub registration_date: Option<NaiveDate>,
    pub voted_2020: bool,
    pub voted_2016: bool,
    pub voted_2012: bool,
}
