//! Substitution subshifts: exact languages, clopen-set algebra over
//! admissible words, letter and block frequencies, return words and
//! Kakutani-Rokhlin partitions.
//!
//! Letters are bytes. `T` is the left shift, `(Tx)_i = x_{i+1}`.

mod clopen;
mod kr;
mod measure;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use crate::{Error, Result};

pub use clopen::ClopenSet;
pub use kr::{KrPartition, KrReport, Tower};
pub(crate) use clopen::check_partition;

/// Resolutions (window half-widths) above this are refused.
pub const DEFAULT_MAX_RESOLUTION: usize = 400;
/// Default absolute tolerance carried by measure outputs.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Longest return word explored before giving up.
pub const DEFAULT_RETURN_DEPTH: usize = 10_000;

/// A substitution on a finite byte alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    images: BTreeMap<u8, Vec<u8>>,
}

impl Substitution {
    /// Validates images, then checks primitivity.
    pub fn new(images: BTreeMap<u8, Vec<u8>>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidArgument("empty alphabet".into()));
        }
        for (&a, img) in &images {
            if img.is_empty() {
                return Err(Error::InvalidArgument(format!("image of {} is empty", a as char)));
            }
            if let Some(&b) = img.iter().find(|b| !images.contains_key(b)) {
                return Err(Error::InvalidArgument(format!(
                    "image of {} uses {} outside the alphabet",
                    a as char, b as char
                )));
            }
        }
        let s = Self { images };
        if !s.is_primitive() {
            return Err(Error::InvalidArgument(format!("substitution {s} is not primitive")));
        }
        Ok(s)
    }

    pub fn fibonacci() -> Self {
        "a->ab;b->a".parse().expect("valid")
    }

    pub fn thue_morse() -> Self {
        "a->ab;b->ba".parse().expect("valid")
    }

    /// Primitive three-letter presentation of the Chacon subshift.
    pub fn chacon() -> Self {
        "a->aabc;b->bc;c->abc".parse().expect("valid")
    }

    /// `fibonacci`, `thue-morse`, `chacon`, or explicit rules.
    pub fn named_or_parse(s: &str) -> Result<Self> {
        match s.trim() {
            "fibonacci" => Ok(Self::fibonacci()),
            "thue-morse" | "thue_morse" => Ok(Self::thue_morse()),
            "chacon" => Ok(Self::chacon()),
            other => other.parse(),
        }
    }

    pub fn alphabet(&self) -> Vec<u8> {
        self.images.keys().copied().collect()
    }

    pub fn image(&self, a: u8) -> &[u8] {
        &self.images[&a]
    }

    pub fn apply(&self, w: &[u8]) -> Vec<u8> {
        w.iter().flat_map(|a| self.images[a].iter().copied()).collect()
    }

    pub fn iterate(&self, w: &[u8], k: usize) -> Vec<u8> {
        (0..k).fold(w.to_vec(), |v, _| self.apply(&v))
    }

    /// `self ∘ other`.
    fn compose(&self, other: &Self) -> Self {
        Self {
            images: other.images.iter().map(|(&a, img)| (a, self.apply(img))).collect(),
        }
    }

    /// `M[i][j]` = occurrences of letter `i` in the image of letter `j`.
    pub fn incidence_matrix(&self) -> Vec<Vec<u64>> {
        let alphabet = self.alphabet();
        alphabet
            .iter()
            .map(|i| {
                alphabet
                    .iter()
                    .map(|j| self.images[j].iter().filter(|&&b| b == *i).count() as u64)
                    .collect()
            })
            .collect()
    }

    /// Some power `M^k`, `k <= 2|A|^2`, is entrywise positive.
    pub fn is_primitive(&self) -> bool {
        let m: Vec<Vec<bool>> = self
            .incidence_matrix()
            .iter()
            .map(|r| r.iter().map(|&x| x > 0).collect())
            .collect();
        let n = m.len();
        let mut p = m.clone();
        for _ in 0..2 * n * n {
            if p.iter().all(|r| r.iter().all(|&x| x)) {
                return true;
            }
            p = (0..n)
                .map(|i| (0..n).map(|j| (0..n).any(|k| p[i][k] && m[k][j])).collect())
                .collect();
        }
        false
    }
}

impl FromStr for Substitution {
    type Err = Error;

    /// Rules like `a->ab;b->a`.
    fn from_str(s: &str) -> Result<Self> {
        let mut images = BTreeMap::new();
        for rule in s.split(';').map(str::trim).filter(|r| !r.is_empty()) {
            let (lhs, rhs) = rule
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("rule {rule:?} lacks '->'")))?;
            let lhs = lhs.trim().as_bytes();
            let rhs = rhs.trim().as_bytes();
            if lhs.len() != 1 || !lhs[0].is_ascii_graphic() || rhs.iter().any(|b| !b.is_ascii_graphic()) {
                return Err(Error::Parse(format!("bad rule {rule:?}")));
            }
            if images.insert(lhs[0], rhs.to_vec()).is_some() {
                return Err(Error::Parse(format!("letter {} defined twice", lhs[0] as char)));
            }
        }
        Self::new(images)
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rules: Vec<String> = self
            .images
            .iter()
            .map(|(&a, img)| format!("{}->{}", a as char, String::from_utf8_lossy(img)))
            .collect();
        f.write_str(&rules.join(";"))
    }
}

pub(crate) fn word_str(w: &[u8]) -> String {
    String::from_utf8_lossy(w).into_owned()
}

type Words = Arc<Vec<Vec<u8>>>;

/// The subshift of a primitive aperiodic substitution, with memoized
/// languages and block frequencies.
#[derive(Debug)]
pub struct Subshift {
    sub: Substitution,
    /// A power of `sub` whose images all have length >= 2.
    expanding: Substitution,
    max_resolution: usize,
    tolerance: f64,
    languages: RwLock<HashMap<usize, Words>>,
    frequencies: RwLock<HashMap<usize, Arc<Vec<f64>>>>,
}

impl Subshift {
    pub fn new(sub: Substitution) -> Result<Self> {
        let mut expanding = sub.clone();
        for _ in 0..=sub.images.len() {
            if expanding.images.values().all(|v| v.len() >= 2) {
                break;
            }
            expanding = sub.compose(&expanding);
        }
        if expanding.images.values().any(|v| v.len() < 2) {
            return Err(Error::InvalidArgument(format!("substitution {sub} does not grow")));
        }
        let s = Self {
            sub,
            expanding,
            max_resolution: DEFAULT_MAX_RESOLUTION,
            tolerance: DEFAULT_TOLERANCE,
            languages: RwLock::new(HashMap::new()),
            frequencies: RwLock::new(HashMap::new()),
        };
        // Morse-Hedlund: a periodic subshift has p(n) <= n for some n
        for n in 1..=24 {
            if s.language(n)?.len() <= n {
                return Err(Error::InvalidArgument(format!(
                    "substitution {} looks periodic: {} factors of length {n}",
                    s.sub,
                    s.language(n)?.len()
                )));
            }
        }
        Ok(s)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_resolution(mut self, max_resolution: usize) -> Self {
        self.max_resolution = max_resolution;
        self
    }

    pub fn substitution(&self) -> &Substitution {
        &self.sub
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_resolution(&self) -> usize {
        self.max_resolution
    }

    /// The admissible words of length `n`, sorted.
    pub fn language(&self, n: usize) -> Result<Words> {
        if n > 2 * self.max_resolution + 1 {
            return Err(Error::Resource(format!(
                "words of length {n} exceed the resolution cap {}",
                self.max_resolution
            )));
        }
        if let Some(w) = self.languages.read().expect("lock").get(&n) {
            return Ok(w.clone());
        }
        let words = Arc::new(self.compute_language(n)?);
        self.languages.write().expect("lock").insert(n, words.clone());
        Ok(words)
    }

    fn compute_language(&self, n: usize) -> Result<Vec<Vec<u8>>> {
        if n == 0 {
            return Ok(vec![Vec::new()]);
        }
        let mut found: BTreeSet<Vec<u8>> = BTreeSet::new();
        if n <= 2 {
            // fixpoint: length-n factors of σ(v), v admissible of length n
            for a in self.sub.alphabet() {
                let mut w = vec![a];
                while w.len() < n {
                    w = self.sub.apply(&w);
                }
                found.extend(w.windows(n).map(<[u8]>::to_vec));
            }
            let mut frontier: Vec<Vec<u8>> = found.iter().cloned().collect();
            while let Some(v) = frontier.pop() {
                for f in self.sub.apply(&v).windows(n) {
                    if found.insert(f.to_vec()) {
                        frontier.push(f.to_vec());
                    }
                }
            }
        } else {
            // a length-n factor sits inside the image of at most k letters
            let k = (n - 1).div_ceil(2) + 1;
            let mut seen: HashSet<Vec<u8>> = HashSet::new();
            for v in self.language(k)?.iter() {
                for f in self.expanding.apply(v).windows(n) {
                    if !seen.contains(f) {
                        seen.insert(f.to_vec());
                    }
                }
            }
            found.extend(seen);
        }
        Ok(found.into_iter().collect())
    }

    pub fn is_admissible(&self, w: &[u8]) -> Result<bool> {
        Ok(self.language(w.len())?.binary_search(&w.to_vec()).is_ok())
    }

    /// Index of an admissible word in `language(|w|)`.
    pub(crate) fn word_index(&self, w: &[u8]) -> Result<Option<usize>> {
        Ok(self.language(w.len())?.binary_search_by(|v| v.as_slice().cmp(w)).ok())
    }

    /// Return words of `u`: `w` with `wu` admissible, `u` a prefix of `wu`,
    /// and `u` occurring in `wu` only at `0` and `|w|`.
    pub fn return_words(&self, u: &[u8]) -> Result<Vec<Vec<u8>>> {
        if u.is_empty() || !self.is_admissible(u)? {
            return Err(Error::InvalidArgument(format!("{} is not an admissible nonempty word", word_str(u))));
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![u.to_vec()];
        while let Some(v) = stack.pop() {
            if v.len() > DEFAULT_RETURN_DEPTH + u.len() {
                return Err(Error::Resource(format!(
                    "return words of {} longer than {DEFAULT_RETURN_DEPTH}",
                    word_str(u)
                )));
            }
            for a in self.sub.alphabet() {
                let mut next = v.clone();
                next.push(a);
                if next.len() > 2 * self.max_resolution + 1 {
                    return Err(Error::Resource(format!(
                        "return words of {} exceed the resolution cap",
                        word_str(u)
                    )));
                }
                if !self.is_admissible(&next)? {
                    continue;
                }
                if next.ends_with(u) {
                    out.insert(next[..next.len() - u.len()].to_vec());
                } else {
                    stack.push(next);
                }
            }
        }
        Ok(out.into_iter().collect())
    }
}
