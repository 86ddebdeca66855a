//! Reduced words in the free group of rank `d` and balls of such words.
//!
//! A letter is a nonzero `i32`: `+i` is the `i`-th generator (1-based) and
//! `-i` its inverse. Words print with `a..d` for generators, `A..D` for their
//! inverses and `e` for the identity.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::marked::KernelOracle;
use crate::{Error, Result};

/// Largest supported rank. Letters `a..d`; `e` is reserved for the identity.
pub const MAX_RANK: usize = 4;

/// Default cap on the number of words in an enumerated ball.
pub const DEFAULT_BALL_CAP: usize = 1_000_000;

fn letter_key(l: i32) -> (i32, bool) {
    (l.abs(), l < 0)
}

fn cmp_letters(a: &[i32], b: &[i32]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .map(|&l| letter_key(l))
            .cmp(b.iter().map(|&l| letter_key(l)))
    })
}

fn check_rank(rank: usize) -> Result<()> {
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::InvalidArgument(format!(
            "rank must lie in 1..={MAX_RANK}, got {rank}"
        )));
    }
    Ok(())
}

/// A freely reduced word over a fixed rank.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ReducedWord {
    rank: usize,
    letters: Vec<i32>,
}

impl ReducedWord {
    /// Freely reduces `letters`, rejecting letters outside `±1..=±rank`.
    pub fn reduce(rank: usize, letters: &[i32]) -> Result<Self> {
        check_rank(rank)?;
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for &l in letters {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(Error::InvalidLetter { letter: l, rank });
            }
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(Self { rank, letters: out })
    }

    pub fn identity(rank: usize) -> Self {
        Self {
            rank,
            letters: Vec::new(),
        }
    }

    /// The word consisting of a single letter.
    pub fn letter(rank: usize, l: i32) -> Result<Self> {
        Self::reduce(rank, &[l])
    }

    pub(crate) fn from_reduced_unchecked(rank: usize, letters: Vec<i32>) -> Self {
        Self { rank, letters }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        let mut out = self.letters.clone();
        for &l in &other.letters {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(Self {
            rank: self.rank,
            letters: out,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// `self^n`, with negative exponents meaning powers of the inverse.
    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Self::identity(self.rank);
        for _ in 0..n.unsigned_abs() {
            out = out.multiply(&base).expect("same rank");
        }
        out
    }

    /// Parses the string form (`e`, or letters from `a..` / `A..`).
    pub fn parse(rank: usize, s: &str) -> Result<Self> {
        check_rank(rank)?;
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Self::identity(rank));
        }
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = match c {
                'a'..='d' => (c as i32) - ('a' as i32) + 1,
                'A'..='D' => -((c as i32) - ('A' as i32) + 1),
                _ => return Err(Error::Parse(format!("unexpected character {c:?} in word {s:?}"))),
            };
            letters.push(l);
        }
        Self::reduce(rank, &letters)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for &l in &self.letters {
            let idx = (l.unsigned_abs() - 1) as u8;
            let c = if l > 0 { b'a' + idx } else { b'A' + idx };
            write!(f, "{}", c as char)?;
        }
        Ok(())
    }
}

/// Length-lexicographic order with `a < A < b < B < ...`.
impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then_with(|| cmp_letters(&self.letters, &other.letters))
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `1 + sum_{k=1..r} 2d (2d-1)^(k-1)`, saturating.
pub fn ball_size(rank: usize, radius: usize) -> u128 {
    let d = rank as u128;
    let mut total: u128 = 1;
    let mut layer: u128 = 2 * d;
    for _ in 0..radius {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(2 * d - 1);
    }
    total
}

/// All reduced words of length at most `radius`, in length-lex order.
#[derive(Clone, Debug)]
pub struct Ball {
    rank: usize,
    radius: usize,
    words: Vec<ReducedWord>,
    // (parent index, last letter); None for the identity
    parents: Vec<Option<(usize, i32)>>,
    index: HashMap<Vec<i32>, usize>,
}

impl Ball {
    pub fn enumerate(rank: usize, radius: usize) -> Result<Self> {
        Self::enumerate_with_cap(rank, radius, DEFAULT_BALL_CAP)
    }

    pub fn enumerate_with_cap(rank: usize, radius: usize, cap: usize) -> Result<Self> {
        check_rank(rank)?;
        let size = ball_size(rank, radius);
        if size > cap as u128 {
            return Err(Error::Resource(format!(
                "ball of rank {rank} and radius {radius} has {size} words, cap is {cap}"
            )));
        }
        let size = size as usize;
        let alphabet: Vec<i32> = (1..=rank as i32).flat_map(|g| [g, -g]).collect();
        let mut words = Vec::with_capacity(size);
        let mut parents = Vec::with_capacity(size);
        words.push(ReducedWord::identity(rank));
        parents.push(None);
        let mut layer_start = 0;
        for _ in 0..radius {
            let layer_end = words.len();
            for p in layer_start..layer_end {
                let last = words[p].letters.last().copied();
                for &l in &alphabet {
                    if last == Some(-l) {
                        continue;
                    }
                    let mut letters = words[p].letters.clone();
                    letters.push(l);
                    words.push(ReducedWord::from_reduced_unchecked(rank, letters));
                    parents.push(Some((p, l)));
                }
            }
            layer_start = layer_end;
        }
        debug_assert_eq!(words.len(), size);
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.letters.clone(), i))
            .collect();
        Ok(Self {
            rank,
            radius,
            words,
            parents,
            index,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn words(&self) -> &[ReducedWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, i: usize) -> &ReducedWord {
        &self.words[i]
    }

    /// Parent index and final letter, so word `i` = word `parent` · letter.
    pub fn parent(&self, i: usize) -> Option<(usize, i32)> {
        self.parents[i]
    }

    pub fn index_of(&self, w: &ReducedWord) -> Option<usize> {
        if w.rank != self.rank {
            return None;
        }
        self.index.get(&w.letters).copied()
    }

    /// Evaluates every word of the ball by extending its parent's value.
    pub fn evaluate_all<E, F>(&self, identity: E, mut step: F) -> Vec<E>
    where
        E: Clone,
        F: FnMut(&E, i32) -> E,
    {
        let mut out: Vec<E> = Vec::with_capacity(self.len());
        out.push(identity);
        for i in 1..self.len() {
            let (p, l) = self.parents[i].expect("non-identity word has a parent");
            let v = step(&out[p], l);
            out.push(v);
        }
        out
    }

    /// One word per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for w in &self.words {
            s.push_str(&w.to_string());
            s.push('\n');
        }
        s
    }
}

/// A set of reduced words, all of length at most `radius`, kept sorted.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct WordSet {
    radius: usize,
    members: Vec<ReducedWord>,
}

impl WordSet {
    pub fn new(radius: usize, words: impl IntoIterator<Item = ReducedWord>) -> Result<Self> {
        let mut members: Vec<ReducedWord> = words.into_iter().collect();
        if let Some(w) = members.iter().find(|w| w.len() > radius) {
            return Err(Error::InvalidArgument(format!(
                "word {w} is longer than radius {radius}"
            )));
        }
        members.sort();
        members.dedup();
        Ok(Self { radius, members })
    }

    pub fn empty(radius: usize) -> Self {
        Self {
            radius,
            members: Vec::new(),
        }
    }

    /// The words of `ball` selected by `mask`.
    pub fn from_mask(ball: &Ball, mask: &[bool]) -> Self {
        // ball order is already the sort order
        let members = ball
            .words()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w.clone())
            .collect();
        Self {
            radius: ball.radius(),
            members,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn members(&self) -> &[ReducedWord] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, w: &ReducedWord) -> bool {
        self.members.binary_search(w).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReducedWord> {
        self.members.iter()
    }

    /// Members of length at most `radius` (which must not exceed the current one).
    pub fn restrict(&self, radius: usize) -> Self {
        Self {
            radius: radius.min(self.radius),
            members: self
                .members
                .iter()
                .filter(|w| w.len() <= radius)
                .cloned()
                .collect(),
        }
    }

    pub fn contains_identity(&self) -> bool {
        self.members.first().is_some_and(|w| w.is_identity())
    }

    pub fn is_inverse_closed(&self) -> bool {
        self.members.iter().all(|w| self.contains(&w.inverse()))
    }

    /// `w, v` in the set with `len(wv) <= radius` implies `wv` in the set.
    pub fn is_product_closed(&self) -> bool {
        for w in &self.members {
            for v in &self.members {
                let wv = w.multiply(v).expect("same rank");
                if wv.len() <= self.radius && !self.contains(&wv) {
                    return false;
                }
            }
        }
        true
    }
}

/// `{ w in B(r) : w evaluates to the identity }`.
pub fn kernel_fingerprint(oracle: &dyn KernelOracle, radius: usize) -> Result<WordSet> {
    let ball = Ball::enumerate(oracle.rank(), radius)?;
    let mask = oracle.identity_mask(&ball)?;
    Ok(WordSet::from_mask(&ball, &mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(2, s).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert!(ReducedWord::reduce(2, &[1, -1]).unwrap().is_identity());
        assert_eq!(ReducedWord::reduce(2, &[1, 2, -2, 1]).unwrap().letters(), &[1, 1]);
        assert_eq!(ReducedWord::reduce(2, &[1, -1, 1]).unwrap().letters(), &[1]);
        assert!(matches!(
            ReducedWord::reduce(2, &[3]),
            Err(Error::InvalidLetter { letter: 3, rank: 2 })
        ));
        assert!(ReducedWord::reduce(2, &[0]).is_err());
    }

    #[test]
    fn multiply_and_invert() {
        let e = ReducedWord::identity(2);
        assert_eq!(e.multiply(&w("abA")).unwrap(), w("abA"));
        assert!(w("abA").multiply(&w("abA").inverse()).unwrap().is_identity());
        assert_eq!(w("ab").inverse().letters(), &[-2, -1]);
        let other = ReducedWord::identity(3);
        assert!(matches!(e.multiply(&other), Err(Error::RankMismatch { .. })));
    }

    #[test]
    fn string_round_trip() {
        for s in ["e", "a", "AbBa", "abAB", "ddcC"] {
            let word = ReducedWord::parse(4, s).unwrap();
            let again = ReducedWord::parse(4, &word.to_string()).unwrap();
            assert_eq!(word, again);
        }
        assert_eq!(w("aBba").to_string(), "aa");
        assert!(ReducedWord::parse(2, "ac").is_err());
        assert!(ReducedWord::parse(2, "x").is_err());
    }

    #[test]
    fn ball_sizes_small() {
        assert_eq!(Ball::enumerate(2, 0).unwrap().len(), 1);
        assert_eq!(Ball::enumerate(2, 1).unwrap().len(), 5);
        assert_eq!(Ball::enumerate(2, 3).unwrap().len(), 53);
    }

    #[test]
    fn ball_sizes_closed_form() {
        for d in 1..=3usize {
            for r in 0..=6usize {
                let ball = Ball::enumerate(d, r).unwrap();
                let mut expected = 1usize;
                for k in 1..=r {
                    expected += 2 * d * (2 * d - 1).pow(k as u32 - 1);
                }
                assert_eq!(ball.len(), expected, "d={d} r={r}");
            }
        }
    }

    #[test]
    fn ball_order_and_closure() {
        let ball = Ball::enumerate(2, 3).unwrap();
        let words = ball.words();
        assert_eq!(words[1].to_string(), "a");
        assert_eq!(words[2].to_string(), "A");
        assert_eq!(words[3].to_string(), "b");
        assert_eq!(words[4].to_string(), "B");
        assert!(words.windows(2).all(|p| p[0] < p[1]));
        for word in words {
            assert!(ball.index_of(&word.inverse()).is_some());
        }
        let mut sorted = words.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), words.len());
    }

    #[test]
    fn ball_cap_is_enforced() {
        assert!(matches!(
            Ball::enumerate_with_cap(2, 10, 1000),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn wordset_rejects_long_words() {
        assert!(WordSet::new(1, [w("ab")]).is_err());
        let set = WordSet::new(2, [w("ab"), w("e"), w("ab")]).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains_identity());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word() -> impl Strategy<Value = ReducedWord> {
            prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..12)
                .prop_map(|l| ReducedWord::reduce(2, &l).unwrap())
        }

        proptest! {
            #[test]
            fn associativity(u in word(), v in word(), x in word()) {
                let left = u.multiply(&v).unwrap().multiply(&x).unwrap();
                let right = u.multiply(&v.multiply(&x).unwrap()).unwrap();
                prop_assert_eq!(left, right);
            }

            #[test]
            fn inverse_of_product(u in word(), v in word()) {
                let uv = u.multiply(&v).unwrap();
                prop_assert_eq!(uv.inverse(), v.inverse().multiply(&u.inverse()).unwrap());
            }

            #[test]
            fn reduced_has_no_cancelling_pair(u in word()) {
                prop_assert!(u.letters().windows(2).all(|p| p[0] != -p[1]));
            }
        }
    }
}
