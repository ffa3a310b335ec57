//! String similarity and the per-pair field-agreement vector.
//!
//! The agreement codes use the strict thresholds 0.88 and 0.94 on
//! Jaro-Winkler similarity: a similarity of exactly 0.94 codes 1 (mid band),
//! anything above codes 2. Comparisons assume identity-normalized strings
//! (uppercase ASCII, punctuation stripped).

use crate::roster::Gender;
use serde::{Deserialize, Serialize};

const STACK_LEN: usize = 128;

fn jaro_bytes(a: &[u8], b: &[u8]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);

    let mut a_stack = [false; STACK_LEN];
    let mut b_stack = [false; STACK_LEN];
    let mut a_heap;
    let mut b_heap;
    let (a_matched, b_matched): (&mut [bool], &mut [bool]) =
        if a.len() <= STACK_LEN && b.len() <= STACK_LEN {
            (&mut a_stack[..a.len()], &mut b_stack[..b.len()])
        } else {
            a_heap = vec![false; a.len()];
            b_heap = vec![false; b.len()];
            (&mut a_heap[..], &mut b_heap[..])
        };

    let mut matches = 0usize;
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_matched[j] && b[j] == ca {
                a_matched[i] = true;
                b_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }

    // Half the number of positions at which the matched sequences disagree.
    let mut mismatches = 0usize;
    let mut j = 0usize;
    for (i, &ca) in a.iter().enumerate() {
        if !a_matched[i] {
            continue;
        }
        while !b_matched[j] {
            j += 1;
        }
        if ca != b[j] {
            mismatches += 1;
        }
        j += 1;
    }
    let m = matches as f64;
    let t = mismatches as f64 / 2.0;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro similarity in [0, 1]. Both inputs empty gives 1, exactly one empty
/// gives 0.
pub fn jaro(a: &str, b: &str) -> f64 {
    jaro_bytes(a.as_bytes(), b.as_bytes())
}

/// Jaro-Winkler similarity: `jaro + l * 0.1 * (1 - jaro)` where `l` is the
/// common prefix length capped at 4.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let j = jaro(a, b);
    let prefix = a
        .bytes()
        .zip(b.bytes())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    j + prefix as f64 * 0.1 * (1.0 - j)
}

/// Ternary band for first/last-name similarity: 2 above 0.94, 1 in
/// (0.88, 0.94], 0 otherwise. Boundaries are strict per the match logic.
pub fn name_band(jw: f64) -> u8 {
    if jw > 0.94 {
        2
    } else if jw > 0.88 {
        1
    } else {
        0
    }
}

/// Per-pair field-agreement codes. `fips` is binary; the rest are ternary
/// where 1 marks missingness except for first/last, where 1 is the mid
/// similarity band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgreementVector {
    pub fips: u8,
    pub age: u8,
    pub gender: u8,
    pub first: u8,
    pub middle: u8,
    pub last: u8,
}

/// Number of comparison fields.
pub const N_FIELDS: usize = 6;
/// Levels per field, in canonical order fips, age, gender, first, middle, last.
pub const FIELD_LEVELS: [usize; N_FIELDS] = [2, 3, 3, 3, 3, 3];
/// Field names in canonical order.
pub const FIELD_NAMES: [&str; N_FIELDS] = ["fips", "age", "gender", "first", "middle", "last"];
/// Total number of distinct agreement patterns (2 * 3^5).
pub const N_PATTERNS: usize = 486;

impl AgreementVector {
    pub fn as_array(&self) -> [u8; N_FIELDS] {
        [self.fips, self.age, self.gender, self.first, self.middle, self.last]
    }

    pub fn from_array(a: [u8; N_FIELDS]) -> Self {
        AgreementVector {
            fips: a[0],
            age: a[1],
            gender: a[2],
            first: a[3],
            middle: a[4],
            last: a[5],
        }
    }

    /// Dense index into the 486-pattern space, used to aggregate samples
    /// before EM so iteration cost is independent of sample size.
    pub fn pattern_index(&self) -> usize {
        let mut idx = 0usize;
        for (code, levels) in self.as_array().into_iter().zip(FIELD_LEVELS) {
            debug_assert!((code as usize) < levels);
            idx = idx * levels + code as usize;
        }
        idx
    }

    pub fn from_pattern_index(mut idx: usize) -> Self {
        let mut a = [0u8; N_FIELDS];
        for k in (0..N_FIELDS).rev() {
            a[k] = (idx % FIELD_LEVELS[k]) as u8;
            idx /= FIELD_LEVELS[k];
        }
        AgreementVector::from_array(a)
    }
}

/// The six comparison fields of one record side.
#[derive(Debug, Clone, Copy)]
pub struct MatchFields<'a> {
    pub fips: &'a str,
    pub age: Option<i64>,
    pub gender: Gender,
    pub first: &'a str,
    pub middle: &'a str,
    pub last: &'a str,
    pub full: &'a str,
}

fn middle_code(a: &str, b: &str) -> u8 {
    if a.is_empty() || b.is_empty() {
        return 1;
    }
    let a_initial = a.len() == 1;
    let b_initial = b.len() == 1;
    match (a_initial, b_initial) {
        (true, false) => {
            if a.as_bytes()[0] == b.as_bytes()[0] {
                2
            } else {
                0
            }
        }
        (false, true) => {
            if b.as_bytes()[0] == a.as_bytes()[0] {
                2
            } else {
                0
            }
        }
        (false, false) => {
            let jw = jaro_winkler(a, b);
            if jw > 0.94 {
                2
            } else if jw > 0.88 {
                1
            } else {
                0
            }
        }
        // Two bare initials fall outside the initial-vs-full and
        // full-vs-full branches of the match logic and code 0.
        (true, true) => 0,
    }
}

/// Compute the agreement vector for a booking/voter field pair.
pub fn agreement_vector(booking: &MatchFields, voter: &MatchFields) -> AgreementVector {
    let fips = u8::from(!booking.fips.is_empty() && booking.fips == voter.fips);
    let age = match (booking.age, voter.age) {
        (Some(a), Some(b)) => {
            if (a - b).abs() <= 1 {
                2
            } else {
                0
            }
        }
        _ => 1,
    };
    let gender = match (booking.gender, voter.gender) {
        (Gender::Unknown, _) | (_, Gender::Unknown) => 1,
        (a, b) => {
            if a == b {
                2
            } else {
                0
            }
        }
    };
    let first = name_band(jaro_winkler(booking.first, voter.first));
    let middle = middle_code(booking.middle, voter.middle);
    let last = name_band(jaro_winkler(booking.last, voter.last));
    AgreementVector {
        fips,
        age,
        gender,
        first,
        middle,
        last,
    }
}

/// Average of the Jaro-Winkler similarities of first name, last name, and
/// full name. A component missing on both sides is excluded from the mean;
/// missing on one side only contributes its similarity against the empty
/// string, which is 0.
pub fn avg_name_similarity(booking: &MatchFields, voter: &MatchFields) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, b) in [
        (booking.first, voter.first),
        (booking.last, voter.last),
        (booking.full, voter.full),
    ] {
        if a.is_empty() && b.is_empty() {
            continue;
        }
        total += jaro_winkler(a, b);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Threshold on the average name similarity used for parametric
/// initialization of the linkage model.
pub const INIT_MATCH_THRESHOLD: f64 = 0.88;

/// One sampled match-candidate pair: indexes into the booking and voter
/// tables plus its agreement vector and initialization score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub booking: u32,
    pub voter: u32,
    pub gamma: AgreementVector,
    pub avg_name_jw: f64,
    pub init_match_flag: bool,
}

impl CandidatePair {
    pub fn new(booking: u32, voter: u32, gamma: AgreementVector, avg_name_jw: f64) -> Self {
        CandidatePair {
            booking,
            voter,
            gamma,
            avg_name_jw,
            init_match_flag: avg_name_jw > INIT_MATCH_THRESHOLD,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jaro_identity_and_disjoint() {
        assert_eq!(jaro("ABC", "ABC"), 1.0);
        assert_eq!(jaro("ABC", "XYZ"), 0.0);
        assert_eq!(jaro("", ""), 1.0);
        assert_eq!(jaro("A", ""), 0.0);
    }

    #[test]
    fn jaro_martha() {
        // m = 6, t = 1: (1 + 1 + 5/6) / 3 = 17/18
        let j = jaro("MARTHA", "MARHTA");
        assert!((j - 17.0 / 18.0).abs() < 1e-15, "{j}");
        // prefix MAR: jw = j + 0.3 * (1 - j)
        let jw = jaro_winkler("MARTHA", "MARHTA");
        let want = 17.0 / 18.0 + 0.3 * (1.0 - 17.0 / 18.0);
        assert!((jw - want).abs() < 1e-15, "{jw}");
    }

    #[test]
    fn winkler_without_prefix_equals_jaro() {
        assert_eq!(jaro_winkler("ABCD", "XBCD"), jaro("ABCD", "XBCD"));
        assert_eq!(jaro_winkler("KLM", "QRS"), 0.0);
        assert_eq!(jaro_winkler("SAME", "SAME"), 1.0);
    }

    #[test]
    fn band_boundaries_are_strict() {
        assert_eq!(name_band(0.88), 0);
        assert_eq!(name_band(0.88 + 1e-12), 1);
        assert_eq!(name_band(0.94), 1);
        assert_eq!(name_band(0.94 + 1e-12), 2);
        assert_eq!(name_band(1.0), 2);
    }

    fn fields<'a>(
        fips: &'a str,
        age: Option<i64>,
        gender: Gender,
        first: &'a str,
        middle: &'a str,
        last: &'a str,
        full: &'a str,
    ) -> MatchFields<'a> {
        MatchFields {
            fips,
            age,
            gender,
            first,
            middle,
            last,
            full,
        }
    }

    #[test]
    fn worked_example_vector() {
        // Booking: fips 11217, age 30, no gender, Jane A Doe
        // Voter:   fips 11217, age 29, male,      John Adam Doe
        let b = fields("11217", Some(30), Gender::Unknown, "JANE", "A", "DOE", "JANE A DOE");
        let v = fields("11217", Some(29), Gender::Male, "JOHN", "ADAM", "DOE", "JOHN ADAM DOE");
        let gamma = agreement_vector(&b, &v);
        assert_eq!(gamma.as_array(), [1, 2, 1, 0, 2, 2]);
        let avg = avg_name_similarity(&b, &v);
        assert!((avg - 0.83).abs() <= 0.005, "avg = {avg}");
    }

    #[test]
    fn all_agree_vector() {
        let b = fields("11217", Some(30), Gender::Female, "JANE", "ANN", "DOE", "JANE ANN DOE");
        let gamma = agreement_vector(&b, &b);
        assert_eq!(gamma.as_array(), [1, 2, 2, 2, 2, 2]);
        assert_eq!(avg_name_similarity(&b, &b), 1.0);
    }

    #[test]
    fn missingness_codes_one() {
        let b = fields("11217", None, Gender::Unknown, "", "", "DOE", "DOE");
        let v = fields("99999", None, Gender::Unknown, "", "", "ROE", "ROE");
        let gamma = agreement_vector(&b, &v);
        // different county; age/gender/middle missing; first missing on both
        // sides compares 1.0 via empty-vs-empty jaro, which bands to 2
        assert_eq!(gamma.fips, 0);
        assert_eq!(gamma.age, 1);
        assert_eq!(gamma.gender, 1);
        assert_eq!(gamma.first, 2);
        assert_eq!(gamma.middle, 1);
        assert_eq!(gamma.last, 0);
    }

    #[test]
    fn middle_initial_rules() {
        assert_eq!(middle_code("A", "ADAM"), 2);
        assert_eq!(middle_code("ADAM", "A"), 2);
        assert_eq!(middle_code("B", "ADAM"), 0);
        assert_eq!(middle_code("", "ADAM"), 1);
        assert_eq!(middle_code("ADAM", ""), 1);
        assert_eq!(middle_code("ADAM", "ADAM"), 2);
        assert_eq!(middle_code("ANNE", "ANNA"), 1); // jw = 0.8933
        // two bare initials are neither initial-vs-full nor full-vs-full
        assert_eq!(middle_code("A", "A"), 0);
    }

    #[test]
    fn pattern_index_round_trips() {
        for idx in 0..N_PATTERNS {
            let gamma = AgreementVector::from_pattern_index(idx);
            assert_eq!(gamma.pattern_index(), idx);
        }
    }

    proptest! {
        #[test]
        fn jaro_symmetric_and_bounded(a in "[A-Z]{0,12}", b in "[A-Z]{0,12}") {
            let j = jaro(&a, &b);
            let jw = jaro_winkler(&a, &b);
            prop_assert!((jaro(&b, &a) - j).abs() < 1e-15);
            prop_assert!((jaro_winkler(&b, &a) - jw).abs() < 1e-15);
            prop_assert!(j >= 0.0 && j <= 1.0);
            prop_assert!(jw >= j - 1e-15 && jw <= 1.0 + 1e-15);
            if !a.is_empty() && !b.is_empty() && a.as_bytes()[0] != b.as_bytes()[0] {
                prop_assert!((jw - j).abs() < 1e-15);
            }
        }
    }
}
