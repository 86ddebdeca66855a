//! Permutations of `[k] = {0, .., k-1}`, the normalized Hamming metric and
//! the almost-solution / separation checkers.
//!
//! Composition follows the left-action convention: `a.compose(&b)` is the
//! map `x -> a(b(x))`, and a word `l1 l2 .. ln` evaluates to
//! `g(l1) ∘ g(l2) ∘ .. ∘ g(ln)`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::words::{ReducedWord, WordSet};
use crate::{ratio, Error, Rational, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Perm {
    images: Vec<u32>,
}

impl TryFrom<Vec<u32>> for Perm {
    type Error = Error;

    fn try_from(images: Vec<u32>) -> Result<Self> {
        Perm::from_images(images)
    }
}

impl From<Perm> for Vec<u32> {
    fn from(p: Perm) -> Self {
        p.images
    }
}

impl Perm {
    pub fn identity(k: usize) -> Self {
        Self {
            images: (0..k as u32).collect(),
        }
    }

    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &x in &images {
            let x = x as usize;
            if x >= k || seen[x] {
                return Err(Error::NotPermutation(format!("{images:?}")));
            }
            seen[x] = true;
        }
        Ok(Self { images })
    }

    /// Builds a permutation of degree `k` from disjoint or overlapping cycles,
    /// applied right to left as in composition.
    pub fn from_cycles(k: usize, cycles: &[Vec<u32>]) -> Result<Self> {
        let mut p = Self::identity(k);
        for cycle in cycles.iter().rev() {
            let mut c = Self::identity(k);
            for (i, &x) in cycle.iter().enumerate() {
                let y = cycle[(i + 1) % cycle.len()];
                if x as usize >= k || y as usize >= k {
                    return Err(Error::NotPermutation(format!("cycle {cycle:?} exceeds degree {k}")));
                }
                c.images[x as usize] = y;
            }
            let c = Self::from_images(c.images)?;
            p = c.compose(&p);
        }
        Ok(p)
    }

    /// Parses `[2,0,1]` (image array) or `(0 1 2)(3 4)` (cycles, needs `degree`).
    pub fn parse(s: &str, degree: Option<usize>) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            let images: Vec<u32> = serde_json::from_str(s)
                .map_err(|e| Error::Parse(format!("bad image array {s:?}: {e}")))?;
            if let Some(k) = degree {
                if images.len() != k {
                    return Err(Error::DegreeMismatch {
                        left: images.len(),
                        right: k,
                    });
                }
            }
            return Self::from_images(images);
        }
        let k = degree.ok_or_else(|| Error::Parse("cycle notation needs a degree".into()))?;
        let mut cycles = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected '(' in {s:?}")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unclosed cycle in {s:?}")))?;
            let cycle = open[..close]
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            cycles.push(cycle);
            rest = open[close + 1..].trim_start();
        }
        Self::from_cycles(k, &cycles)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    pub fn apply(&self, x: usize) -> usize {
        self.images[x] as usize
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        debug_assert_eq!(self.degree(), other.degree());
        Self {
            images: other.images.iter().map(|&x| self.images[x as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.degree()];
        for (x, &y) in self.images.iter().enumerate() {
            images[y as usize] = x as u32;
        }
        Self { images }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Self::identity(self.degree());
        for _ in 0..n.unsigned_abs() {
            out = out.compose(&base);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    pub fn fixed_points(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|(i, &x)| *i as u32 == x)
            .count()
    }

    pub fn moved_points(&self) -> usize {
        self.degree() - self.fixed_points()
    }

    pub fn cycles(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x as u32);
                x = self.images[x] as usize;
            }
            out.push(cycle);
        }
        out
    }

    pub fn order(&self) -> u64 {
        self.cycles()
            .iter()
            .fold(1u64, |acc, c| num_integer::lcm(acc, c.len() as u64))
    }

    pub fn is_even(&self) -> bool {
        let transpositions: usize = self.cycles().iter().map(|c| c.len() - 1).sum();
        transpositions.is_multiple_of(2)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, x) in self.images.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("]")
    }
}

/// `d_k(s, t) = 1 - |{i : s(i) = t(i)}| / k`, exactly.
pub fn hamming_distance(s: &Perm, t: &Perm) -> Result<Rational> {
    if s.degree() != t.degree() {
        return Err(Error::DegreeMismatch {
            left: s.degree(),
            right: t.degree(),
        });
    }
    let k = s.degree();
    if k == 0 {
        return Ok(Rational::zero());
    }
    let disagree = s.images.iter().zip(&t.images).filter(|(a, b)| a != b).count();
    Ok(ratio(disagree, k))
}

/// A `d`-tuple of permutations of a common degree: a point of `Sym(k)^d`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct GenTuple {
    degree: usize,
    perms: Vec<Perm>,
}

impl GenTuple {
    pub fn new(perms: Vec<Perm>) -> Result<Self> {
        let degree = perms
            .first()
            .map(Perm::degree)
            .ok_or_else(|| Error::InvalidArgument("a generator tuple needs at least one permutation".into()))?;
        if let Some(p) = perms.iter().find(|p| p.degree() != degree) {
            return Err(Error::DegreeMismatch {
                left: degree,
                right: p.degree(),
            });
        }
        Ok(Self { degree, perms })
    }

    pub fn identity(rank: usize, degree: usize) -> Self {
        Self {
            degree,
            perms: vec![Perm::identity(degree); rank],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[Perm] {
        &self.perms
    }

    /// The permutation assigned to a signed letter.
    pub fn letter(&self, l: i32) -> Perm {
        let p = &self.perms[(l.unsigned_abs() - 1) as usize];
        if l > 0 {
            p.clone()
        } else {
            p.inverse()
        }
    }

    /// Conjugates every generator by `rho`: relabels points via `rho`.
    pub fn conjugate(&self, rho: &Perm) -> Self {
        let inv = rho.inverse();
        Self {
            degree: self.degree,
            perms: self.perms.iter().map(|p| rho.compose(p).compose(&inv)).collect(),
        }
    }
}

/// `w(s)`: substitute the tuple into the word.
pub fn word_eval(w: &ReducedWord, tuple: &GenTuple) -> Result<Perm> {
    if w.rank() != tuple.rank() {
        return Err(Error::RankMismatch {
            left: w.rank(),
            right: tuple.rank(),
        });
    }
    let mut out = Perm::identity(tuple.degree());
    for &l in w.letters() {
        out = out.compose(&tuple.letter(l));
    }
    Ok(out)
}

/// Per-word distances from the identity and the pass flag of a checker.
#[derive(Clone, Debug, PartialEq)]
pub struct WordCheckReport {
    pub distances: Vec<(ReducedWord, Rational)>,
    pub max: Rational,
    pub min: Rational,
    pub pass: bool,
}

fn distances_to_identity(tuple: &GenTuple, words: &WordSet) -> Result<Vec<(ReducedWord, Rational)>> {
    let id = Perm::identity(tuple.degree());
    words
        .iter()
        .map(|w| Ok((w.clone(), hamming_distance(&word_eval(w, tuple)?, &id)?)))
        .collect()
}

fn check_delta(delta: &Rational) -> Result<()> {
    if *delta <= Rational::zero() || *delta > Rational::one() {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1], got {delta}")));
    }
    Ok(())
}

fn report(distances: Vec<(ReducedWord, Rational)>, pass: impl Fn(&Rational) -> bool) -> WordCheckReport {
    let max = distances.iter().map(|(_, d)| d.clone()).max().unwrap_or_else(Rational::zero);
    let min = distances.iter().map(|(_, d)| d.clone()).min().unwrap_or_else(Rational::one);
    let pass = distances.iter().all(|(_, d)| pass(d));
    WordCheckReport {
        distances,
        max,
        min,
        pass,
    }
}

/// Passes iff `d_k(r(s), id) < delta` for every relator `r`.
pub fn check_almost_solution(tuple: &GenTuple, relators: &WordSet, delta: &Rational) -> Result<WordCheckReport> {
    check_delta(delta)?;
    let distances = distances_to_identity(tuple, relators)?;
    Ok(report(distances, |d| d < delta))
}

/// Passes iff `d_k(w(s), id) > 1 - delta` for every `w`.
pub fn check_separating(tuple: &GenTuple, words: &WordSet, delta: &Rational) -> Result<WordCheckReport> {
    check_delta(delta)?;
    let threshold = Rational::one() - delta;
    let distances = distances_to_identity(tuple, words)?;
    Ok(report(distances, |d| *d > threshold))
}

/// `sum_s d_k(s(i), t(i))`.
pub fn tuple_distance(s: &GenTuple, t: &GenTuple) -> Result<Rational> {
    if s.rank() != t.rank() {
        return Err(Error::RankMismatch {
            left: s.rank(),
            right: t.rank(),
        });
    }
    let mut total = Rational::zero();
    for (a, b) in s.perms.iter().zip(&t.perms) {
        total += hamming_distance(a, b)?;
    }
    Ok(total)
}

/// The elements of `<tuple>` found by breadth-first search.
#[derive(Clone, Debug)]
pub struct Closure {
    pub elements: Vec<Perm>,
    pub truncated: bool,
    index: HashMap<Vec<u32>, usize>,
}

impl Closure {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, p: &Perm) -> Option<usize> {
        self.index.get(p.images()).copied()
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.index.contains_key(p.images())
    }
}

/// BFS closure of `<tuple>`. Stops (flagging `truncated`) after `cap` elements.
pub fn generate_closure(tuple: &GenTuple, cap: usize) -> Result<Closure> {
    if cap == 0 {
        return Err(Error::InvalidArgument("closure cap must be at least 1".into()));
    }
    let id = Perm::identity(tuple.degree());
    let mut elements = vec![id.clone()];
    let mut index = HashMap::new();
    index.insert(id.images.clone(), 0usize);
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;
    'bfs: while let Some(i) = queue.pop_front() {
        for g in tuple.perms() {
            let next = g.compose(&elements[i]);
            if index.contains_key(&next.images) {
                continue;
            }
            if elements.len() == cap {
                truncated = true;
                break 'bfs;
            }
            index.insert(next.images.clone(), elements.len());
            queue.push_back(elements.len());
            elements.push(next);
        }
    }
    Ok(Closure {
        elements,
        truncated,
        index,
    })
}

/// The full cycle and the central 3-cycle on `[[r]] = {-r..r}`, with points
/// relabeled `n -> n + r` (0-based). Requires `r >= 1`.
pub(crate) fn alt_marking_any(r: usize) -> GenTuple {
    let k = 2 * r + 1;
    let alpha: Vec<u32> = (0..k as u32).map(|x| (x + 1) % k as u32).collect();
    let mut beta: Vec<u32> = (0..k as u32).collect();
    let c = r as u32;
    // (-1 0 1) -> (c-1 c c+1)
    beta[(c - 1) as usize] = c;
    beta[c as usize] = c + 1;
    beta[(c + 1) as usize] = c - 1;
    GenTuple {
        degree: k,
        perms: vec![Perm { images: alpha }, Perm { images: beta }],
    }
}

/// The 2-marking `(alpha_r, beta_r)` of `Alt([[r]])`.
pub fn alt_marking(r: usize) -> Result<GenTuple> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("alt_marking needs r >= 2, got {r}")));
    }
    Ok(alt_marking_any(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(2, s).unwrap()
    }

    #[test]
    fn hamming_examples() {
        let id = Perm::identity(5);
        let t = Perm::parse("(0 1)", Some(5)).unwrap();
        let c = Perm::parse("(0 1 2 3 4)", Some(5)).unwrap();
        assert_eq!(hamming_distance(&t, &t).unwrap(), q(0, 1));
        assert_eq!(hamming_distance(&t, &id).unwrap(), q(2, 5));
        assert_eq!(hamming_distance(&c, &id).unwrap(), q(1, 1));
        assert!(hamming_distance(&c, &Perm::identity(4)).is_err());
    }

    #[test]
    fn parse_forms_agree() {
        let a = Perm::parse("[1,2,0,3]", None).unwrap();
        let b = Perm::parse("(0 1 2)", Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "[1,2,0,3]");
        assert!(Perm::parse("[0,0]", None).is_err());
        assert!(Perm::parse("(0 1", Some(3)).is_err());
    }

    #[test]
    fn alt_marking_shape() {
        let t = alt_marking(2).unwrap();
        assert_eq!(t.degree(), 5);
        assert_eq!(t.perms()[0].order(), 5);
        assert_eq!(t.perms()[1].order(), 3);
        // beta = (-1 0 1) fixes the two outer points
        assert_eq!(t.perms()[1].fixed_points(), 2);
        assert_eq!(alt_marking(3).unwrap().degree(), 7);
        assert!(alt_marking(1).is_err());
    }

    #[test]
    fn word_eval_examples() {
        let t = alt_marking(2).unwrap();
        assert!(word_eval(&ReducedWord::identity(2), &t).unwrap().is_identity());
        assert!(word_eval(&ReducedWord::reduce(2, &[1, -1]).unwrap(), &t).unwrap().is_identity());
        assert!(word_eval(&w("aaaaa"), &t).unwrap().is_identity());
        assert!(word_eval(&ReducedWord::identity(3), &t).is_err());
    }

    #[test]
    fn almost_solution_examples() {
        let t = alt_marking(2).unwrap();
        let e_only = WordSet::new(0, [ReducedWord::identity(2)]).unwrap();
        let r = check_almost_solution(&t, &e_only, &q(1, 100)).unwrap();
        assert!(r.pass);
        assert_eq!(r.max, q(0, 1));

        // exact solution: a^5 and b^3 are trivial in Alt(5)
        let rel = WordSet::new(5, [w("aaaaa"), w("bbb")]).unwrap();
        assert!(check_almost_solution(&t, &rel, &q(1, 1_000_000)).unwrap().pass);

        let a7 = WordSet::new(7, [w("aaaaaaa")]).unwrap();
        let r = check_almost_solution(&t, &a7, &q(1, 10)).unwrap();
        assert!(!r.pass);
        assert_eq!(r.max, q(1, 1));

        assert!(check_almost_solution(&t, &a7, &q(0, 1)).is_err());
        assert!(check_almost_solution(&t, &a7, &q(3, 2)).is_err());
    }

    #[test]
    fn separating_examples() {
        let t = alt_marking(2).unwrap();
        assert!(check_separating(&t, &WordSet::empty(3), &q(1, 2)).unwrap().pass);
        let a = WordSet::new(1, [w("a")]).unwrap();
        assert!(check_separating(&t, &a, &q(1, 1000)).unwrap().pass);
        // beta moves 3 of 5 points: 3/5 > 1 - 1/2
        let b = WordSet::new(1, [w("b")]).unwrap();
        let r = check_separating(&t, &b, &q(1, 2)).unwrap();
        assert_eq!(r.distances[0].1, q(3, 5));
        assert!(r.pass);
        // but not (1 - 1/5)-separating: 3/5 <= 4/5
        assert!(!check_separating(&t, &b, &q(1, 5)).unwrap().pass);
    }

    #[test]
    fn tuple_distance_examples() {
        let t = alt_marking(2).unwrap();
        assert_eq!(tuple_distance(&t, &t).unwrap(), q(0, 1));
        let swap = Perm::parse("(0 1)", Some(5)).unwrap();
        let other = GenTuple::new(vec![t.perms()[0].clone(), t.perms()[1].compose(&swap)]).unwrap();
        assert_eq!(tuple_distance(&t, &other).unwrap(), q(2, 5));
        let swapped = GenTuple::new(vec![t.perms()[1].clone(), t.perms()[0].clone()]).unwrap();
        assert_eq!(tuple_distance(&t, &swapped).unwrap(), tuple_distance(&swapped, &t).unwrap());
    }

    #[test]
    fn closure_examples() {
        let id = GenTuple::identity(2, 4);
        assert_eq!(generate_closure(&id, 10).unwrap().len(), 1);
        let c2 = generate_closure(&alt_marking(2).unwrap(), 10_000).unwrap();
        assert_eq!(c2.len(), 60);
        assert!(!c2.truncated);
        assert!(c2.elements.iter().all(Perm::is_even));
        let c3 = generate_closure(&alt_marking(3).unwrap(), 10_000).unwrap();
        assert_eq!(c3.len(), 2520);
        assert!(c3.elements.iter().all(Perm::is_even));
        let cut = generate_closure(&alt_marking(3).unwrap(), 100).unwrap();
        assert!(cut.truncated);
        assert_eq!(cut.len(), 100);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        fn perm(k: usize) -> impl Strategy<Value = Perm> {
            any::<u64>().prop_map(move |seed| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut images: Vec<u32> = (0..k as u32).collect();
                images.shuffle(&mut rng);
                Perm::from_images(images).unwrap()
            })
        }

        proptest! {
            #[test]
            fn metric_axioms(a in perm(9), b in perm(9), c in perm(9)) {
                let dab = hamming_distance(&a, &b).unwrap();
                prop_assert_eq!(dab.is_zero(), a == b);
                prop_assert_eq!(&dab, &hamming_distance(&b, &a).unwrap());
                prop_assert!(hamming_distance(&a, &c).unwrap() <= dab + hamming_distance(&b, &c).unwrap());
            }

            #[test]
            fn bi_invariance(a in perm(8), b in perm(8), r in perm(8)) {
                let d = hamming_distance(&a, &b).unwrap();
                prop_assert_eq!(&d, &hamming_distance(&r.compose(&a), &r.compose(&b)).unwrap());
                prop_assert_eq!(&d, &hamming_distance(&a.compose(&r), &b.compose(&r)).unwrap());
            }

            #[test]
            fn word_eval_is_multiplicative(
                u in prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..10),
                v in prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..10),
                g in perm(6), h in perm(6),
            ) {
                let t = GenTuple::new(vec![g, h]).unwrap();
                let u = ReducedWord::reduce(2, &u).unwrap();
                let v = ReducedWord::reduce(2, &v).unwrap();
                let uv = word_eval(&u.multiply(&v).unwrap(), &t).unwrap();
                prop_assert_eq!(uv, word_eval(&u, &t).unwrap().compose(&word_eval(&v, &t).unwrap()));
            }
        }
    }
}
