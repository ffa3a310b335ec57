//! Probabilistic record linkage of jail-roster booking spells to voter-file
//! records, and the booking-timing natural-experiment machinery built on top
//! of it: balanced treatment/control window selection, fixed-effects turnout
//! regressions with clustered inference, placebo tests, and race-interaction
//! models.
//!
//! The pipeline stages are:
//!
//! 1. [`roster`] — daily snapshots into deduplicated booking spells.
//! 2. [`identity`] / [`similarity`] — name parsing, soundex, Jaro-Winkler,
//!    and the per-pair agreement vector.
//! 3. [`blocking`] — within-state candidate blocks by surname soundex and
//!    age band.
//! 4. [`linkage`] — Fellegi-Sunter EM, posterior scoring, term-frequency
//!    re-weighting, exclusions.
//! 5. [`calendar`] — per-state 2020 voting windows and exposure.
//! 6. [`econometrics`] — fixed-effects OLS, cluster-robust variance, joint
//!    Wald tests.
//! 7. [`study`] — window search, effect estimation, placebo and
//!    heterogeneity analyses.
//! 8. [`synth`] — synthetic rosters and voter files with planted effects,
//!    plus brute-force oracles.

pub mod blocking;
pub mod calendar;
pub mod econometrics;
pub mod error;
pub mod identity;
pub mod io;
pub mod linkage;
pub mod rng;
pub mod roster;
pub mod similarity;
pub mod study;
pub mod synth;
pub mod voter;

pub use error::{Error, Result};
