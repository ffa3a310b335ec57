//! Candidate blocks: within-state pools keyed by surname soundex and
//! booking-age band.
//!
//! Blocks are keyed by the booking-side age value; each block admits voters
//! whose age differs by at most 2 years (a 5-year band). Bookings with
//! unknown age block against every in-state voter sharing the soundex code.
//! No cross-state pair is ever emitted.

use crate::rng::stage_rng;
use crate::roster::BookingSpell;
use crate::similarity::{agreement_vector, avg_name_similarity, CandidatePair, MatchFields};
use crate::voter::VoterRecord;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// Comparison fields of a booking spell.
pub fn booking_fields(spell: &BookingSpell) -> MatchFields<'_> {
    MatchFields {
        fips: &spell.fips,
        age: spell.age,
        gender: spell.gender,
        first: &spell.name.first,
        middle: &spell.name.middle,
        last: &spell.name.last,
        full: &spell.name.full,
    }
}

/// Comparison fields of a voter record.
pub fn voter_fields(voter: &VoterRecord) -> MatchFields<'_> {
    MatchFields {
        fips: &voter.fips,
        age: voter.age,
        gender: voter.gender,
        first: &voter.name.first,
        middle: &voter.name.middle,
        last: &voter.name.last,
        full: &voter.name.full,
    }
}

/// Compare one booking/voter pair: agreement vector plus average name
/// similarity.
pub fn compare_pair(spell: &BookingSpell, voter: &VoterRecord) -> (crate::similarity::AgreementVector, f64) {
    let b = booking_fields(spell);
    let v = voter_fields(voter);
    (agreement_vector(&b, &v), avg_name_similarity(&b, &v))
}

/// One candidate block.
#[derive(Debug, Clone)]
pub struct Block {
    pub state: String,
    /// Booking-side age value; `None` blocks across all in-state ages.
    pub age_center: Option<i64>,
    pub soundex: String,
    pub bookings: Vec<u32>,
    pub voters: Vec<u32>,
}

impl Block {
    pub fn n_pairs(&self) -> u64 {
        self.bookings.len() as u64 * self.voters.len() as u64
    }
}

/// All blocks for a dataset, with prefix sums over the implied pair
/// universe so pairs can be addressed by a single global index.
#[derive(Debug, Clone)]
pub struct BlockSet {
    pub blocks: Vec<Block>,
    offsets: Vec<u64>,
}

impl BlockSet {
    /// Assemble a block set from explicit blocks, computing the pair-index
    /// prefix sums.
    pub fn from_parts(blocks: Vec<Block>) -> BlockSet {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0u64);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.n_pairs());
        }
        BlockSet { blocks, offsets }
    }

    pub fn pair_universe(&self) -> u64 {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Map a global pair index to (booking index, voter index).
    pub fn pair_at(&self, idx: u64) -> (u32, u32) {
        debug_assert!(idx < self.pair_universe());
        let block_pos = match self.offsets.binary_search(&idx) {
            Ok(p) => p + 1,
            Err(p) => p,
        };
        let block = &self.blocks[block_pos - 1];
        let local = idx - self.offsets[block_pos - 1];
        let n_voters = block.voters.len() as u64;
        let booking = block.bookings[(local / n_voters) as usize];
        let voter = block.voters[(local % n_voters) as usize];
        (booking, voter)
    }

    /// Iterate every pair in deterministic block order.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.blocks.iter().flat_map(|b| {
            b.bookings
                .iter()
                .flat_map(move |&bk| b.voters.iter().map(move |&v| (bk, v)))
        })
    }
}

/// Construct within-state blocks from spells and voters.
///
/// Block order is deterministic: sorted by (state, soundex, age with the
/// unknown-age block first).
pub fn build_blocks(spells: &[BookingSpell], voters: &[VoterRecord]) -> BlockSet {
    // (state, soundex) -> voters sorted by age; unknown-age voters kept
    // separately and only reachable from unknown-age bookings.
    let mut voter_index: BTreeMap<(&str, &str), Vec<(Option<i64>, u32)>> = BTreeMap::new();
    for (i, v) in voters.iter().enumerate() {
        if v.name.surname_soundex.is_empty() {
            continue;
        }
        voter_index
            .entry((v.state.as_str(), v.name.surname_soundex.as_str()))
            .or_default()
            .push((v.age, i as u32));
    }
    for list in voter_index.values_mut() {
        list.sort();
    }

    // (state, soundex, age key) -> bookings; age key None sorts first.
    let mut booking_groups: BTreeMap<(String, String, Option<i64>), Vec<u32>> = BTreeMap::new();
    for (i, s) in spells.iter().enumerate() {
        let Some(state) = crate::calendar::state_for_fips(&s.fips) else {
            continue;
        };
        if s.name.surname_soundex.is_empty() {
            continue;
        }
        booking_groups
            .entry((state.to_string(), s.name.surname_soundex.clone(), s.age))
            .or_default()
            .push(i as u32);
    }

    let mut blocks = Vec::new();
    for ((state, soundex, age), bookings) in booking_groups {
        let Some(candidates) = voter_index.get(&(state.as_str(), soundex.as_str())) else {
            continue;
        };
        let block_voters: Vec<u32> = match age {
            Some(a) => candidates
                .iter()
                .filter(|(va, _)| va.map(|va| (va - a).abs() <= 2).unwrap_or(false))
                .map(|&(_, i)| i)
                .collect(),
            None => candidates.iter().map(|&(_, i)| i).collect(),
        };
        if block_voters.is_empty() {
            continue;
        }
        blocks.push(Block {
            state,
            age_center: age,
            soundex,
            bookings,
            voters: block_voters,
        });
    }

    let mut offsets = Vec::with_capacity(blocks.len() + 1);
    offsets.push(0u64);
    for b in &blocks {
        offsets.push(offsets.last().unwrap() + b.n_pairs());
    }
    BlockSet { blocks, offsets }
}

/// Sample `n` distinct pairs uniformly from the pair universe.
///
/// Deterministic given the seed and independent of thread count. Requests
/// larger than the universe return every pair.
pub fn sample_pairs(
    blocks: &BlockSet,
    spells: &[BookingSpell],
    voters: &[VoterRecord],
    n: u64,
    seed: u64,
) -> Vec<CandidatePair> {
    let universe = blocks.pair_universe();
    let indices: Vec<u64> = if n >= universe {
        (0..universe).collect()
    } else {
        // Floyd's algorithm: n distinct draws from [0, universe).
        let mut rng = stage_rng(seed, "sample-pairs");
        let mut chosen: HashSet<u64> = HashSet::with_capacity(n as usize);
        for j in (universe - n)..universe {
            let t = rng.gen_range(0..=j);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        let mut v: Vec<u64> = chosen.into_iter().collect();
        v.sort_unstable();
        v
    };

    indices
        .into_iter()
        .map(|idx| {
            let (bk, vt) = blocks.pair_at(idx);
            let (gamma, avg) = compare_pair(&spells[bk as usize], &voters[vt as usize]);
            CandidatePair::new(bk, vt, gamma, avg)
        })
        .collect()
}

/// One row of the optional block-statistics report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockStat {
    pub state: String,
    pub soundex: String,
    pub age_center: Option<i64>,
    pub n_bookings: usize,
    pub n_voters: usize,
    pub n_pairs: u64,
}

pub fn block_stats(blocks: &BlockSet) -> Vec<BlockStat> {
    blocks
        .blocks
        .iter()
        .map(|b| BlockStat {
            state: b.state.clone(),
            soundex: b.soundex.clone(),
            age_center: b.age_center,
            n_bookings: b.bookings.len(),
            n_voters: b.voters.len(),
            n_pairs: b.n_pairs(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::parse_name;
    use crate::roster::Gender;
    use chrono::NaiveDate;

    fn spell(fips: &str, name: &str, age: Option<i64>) -> BookingSpell {
        BookingSpell {
            booking_id: format!("b-{name}-{age:?}"),
            person_key: "p".into(),
            facility_id: "f".into(),
            fips: fips.into(),
            entry_date: NaiveDate::from_ymd_opt(2020, 11, 1).unwrap(),
            exit_date: NaiveDate::from_ymd_opt(2020, 11, 2).unwrap(),
            censored: false,
            length_of_stay_days: 2,
            age,
            gender: Gender::Male,
            charge_count: 1,
            top_charge: None,
            name: parse_name(name).unwrap(),
        }
    }

    fn voter(id: &str, state: &str, fips: &str, name: &str, age: i64) -> VoterRecord {
        VoterRecord {
            voter_id: id.into(),
            state: state.into(),
            fips: fips.into(),
            name: parse_name(name).unwrap(),
            age: Some(age),
            gender: Gender::Male,
            race: None,
            race_reported: false,
            party: None,
            registration_date: None,
            voted_2020: false,
            voted_2016: false,
            voted_2012: false,
        }
    }

    fn texas_voters() -> Vec<VoterRecord> {
        (26..=34)
            .map(|age| voter(&format!("v{age}"), "TX", "48001", "John Doe", age))
            .collect()
    }

    #[test]
    fn age_band_is_five_years() {
        let spells = vec![spell("48001", "John Doe", Some(30))];
        let voters = texas_voters();
        let blocks = build_blocks(&spells, &voters);
        assert_eq!(blocks.blocks.len(), 1);
        let ages: Vec<i64> = blocks.blocks[0]
            .voters
            .iter()
            .map(|&i| voters[i as usize].age.unwrap())
            .collect();
        assert_eq!(ages, vec![28, 29, 30, 31, 32]);
    }

    #[test]
    fn no_cross_state_pairs() {
        // booked in Alabama, registered in Wyoming
        let spells = vec![spell("01001", "John Doe", Some(30))];
        let voters = vec![voter("v1", "WY", "56001", "John Doe", 30)];
        let blocks = build_blocks(&spells, &voters);
        assert_eq!(blocks.pair_universe(), 0);
    }

    #[test]
    fn unknown_age_blocks_against_all_in_state() {
        let spells = vec![spell("48001", "John Doe", None)];
        let voters = texas_voters();
        let blocks = build_blocks(&spells, &voters);
        assert_eq!(blocks.blocks.len(), 1);
        assert_eq!(blocks.blocks[0].voters.len(), voters.len());
        assert_eq!(blocks.blocks[0].age_center, None);
    }

    #[test]
    fn pair_universe_matches_enumeration() {
        let spells = vec![
            spell("48001", "John Doe", Some(30)),
            spell("48001", "Jane Doe", Some(50)),
            spell("48001", "Al Smith", Some(30)),
        ];
        let mut voters = texas_voters();
        voters.push(voter("vs", "TX", "48001", "Ann Smith", 29));
        let blocks = build_blocks(&spells, &voters);

        // brute force: count pairs satisfying the block predicates
        let mut expected = 0u64;
        for s in &spells {
            for v in &voters {
                let same_sx = s.name.surname_soundex == v.name.surname_soundex;
                let in_band = match s.age {
                    Some(a) => v.age.map(|va| (va - a).abs() <= 2).unwrap_or(false),
                    None => true,
                };
                if same_sx && in_band {
                    expected += 1;
                }
            }
        }
        assert_eq!(blocks.pair_universe(), expected);

        // pair_at covers each pair exactly once
        let mut seen = HashSet::new();
        for idx in 0..blocks.pair_universe() {
            assert!(seen.insert(blocks.pair_at(idx)));
        }
        assert_eq!(seen.len() as u64, expected);
    }

    #[test]
    fn sampling_is_deterministic_and_exhaustive() {
        let spells = vec![
            spell("48001", "John Doe", Some(30)),
            spell("48001", "Jane Doe", Some(31)),
        ];
        let voters = texas_voters();
        let blocks = build_blocks(&spells, &voters);
        let u = blocks.pair_universe();

        let a = sample_pairs(&blocks, &spells, &voters, 5, 42);
        let b = sample_pairs(&blocks, &spells, &voters, 5, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let distinct: HashSet<(u32, u32)> = a.iter().map(|p| (p.booking, p.voter)).collect();
        assert_eq!(distinct.len(), 5);

        // n = universe returns every pair exactly once
        let all = sample_pairs(&blocks, &spells, &voters, u, 42);
        assert_eq!(all.len() as u64, u);
        // n > universe also returns the full universe
        let over = sample_pairs(&blocks, &spells, &voters, u + 100, 1);
        assert_eq!(over.len() as u64, u);
    }
}
