//! Clopen subsets of the subshift as sets of admissible central windows.
//!
//! A set at resolution `L` is a list of admissible words of length `2L + 1`;
//! a point `x` belongs to it iff `x[-L..=L]` is a member. Sets are kept at
//! their minimal resolution, which makes structural equality set equality.

use std::fmt;

use serde_json::json;

use super::{word_str, Subshift};
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ClopenSet {
    resolution: usize,
    members: Vec<Vec<u8>>,
}

fn merge_sorted<F: Fn(bool, bool) -> bool>(a: &[Vec<u8>], b: &[Vec<u8>], keep: F) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        let (w, ina, inb) = match ord {
            std::cmp::Ordering::Less => {
                i += 1;
                (&a[i - 1], true, false)
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                (&b[j - 1], false, true)
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                (&a[i - 1], true, true)
            }
        };
        if keep(ina, inb) {
            out.push(w.clone());
        }
    }
    out
}

impl ClopenSet {
    pub fn empty() -> Self {
        Self {
            resolution: 0,
            members: Vec::new(),
        }
    }

    pub fn full(x: &Subshift) -> Self {
        Self {
            resolution: 0,
            members: x.substitution().alphabet().into_iter().map(|a| vec![a]).collect(),
        }
    }

    /// Validates and normalizes a member list at resolution `resolution`.
    pub fn from_members(x: &Subshift, resolution: usize, members: Vec<Vec<u8>>) -> Result<Self> {
        let n = 2 * resolution + 1;
        let mut members = members;
        members.sort();
        members.dedup();
        for m in &members {
            if m.len() != n || !x.is_admissible(m)? {
                return Err(Error::InvalidArgument(format!(
                    "{} is not an admissible word of length {n}",
                    word_str(m)
                )));
            }
        }
        Self::normalized(x, resolution, members)
    }

    /// `{ x : x[start .. start + |u|) = u }`.
    pub fn cylinder(x: &Subshift, u: &[u8], start: i64) -> Result<Self> {
        if u.is_empty() {
            return Ok(Self::full(x));
        }
        let end = start + u.len() as i64 - 1;
        let resolution = start.unsigned_abs().max(end.unsigned_abs()) as usize;
        let offset = (start + resolution as i64) as usize;
        let members = x
            .language(2 * resolution + 1)?
            .iter()
            .filter(|w| &w[offset..offset + u.len()] == u)
            .cloned()
            .collect();
        Self::normalized(x, resolution, members)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn members(&self) -> &[Vec<u8>] {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Membership of a point given by its window `x[-r..=r]`, `r >= resolution`.
    pub fn contains_window(&self, window: &[u8]) -> bool {
        let r = (window.len() - 1) / 2;
        debug_assert!(r >= self.resolution);
        let mid = &window[r - self.resolution..=r + self.resolution];
        self.members.binary_search_by(|m| m.as_slice().cmp(mid)).is_ok()
    }

    /// Members re-expressed at resolution `resolution >= self.resolution`.
    pub fn members_at(&self, x: &Subshift, resolution: usize) -> Result<Vec<Vec<u8>>> {
        if resolution < self.resolution {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen from {} to {resolution}",
                self.resolution
            )));
        }
        if resolution > x.max_resolution() {
            return Err(Error::Resource(format!(
                "resolution {resolution} exceeds the cap {}",
                x.max_resolution()
            )));
        }
        if resolution == self.resolution {
            return Ok(self.members.clone());
        }
        if self.members.is_empty() {
            return Ok(Vec::new());
        }
        let d = resolution - self.resolution;
        let width = 2 * self.resolution + 1;
        Ok(x.language(2 * resolution + 1)?
            .iter()
            .filter(|w| self.members.binary_search_by(|m| m.as_slice().cmp(&w[d..d + width])).is_ok())
            .cloned()
            .collect())
    }

    fn normalized(x: &Subshift, mut resolution: usize, mut members: Vec<Vec<u8>>) -> Result<Self> {
        if members.is_empty() {
            return Ok(Self::empty());
        }
        while resolution > 0 {
            let mut coarse: Vec<Vec<u8>> = members.iter().map(|w| w[1..w.len() - 1].to_vec()).collect();
            coarse.sort();
            coarse.dedup();
            let candidate = Self {
                resolution: resolution - 1,
                members: coarse,
            };
            // the coarse set always contains ours; equal sizes mean equal sets
            if candidate.members_at(x, resolution)?.len() != members.len() {
                break;
            }
            resolution -= 1;
            members = candidate.members;
        }
        Ok(Self { resolution, members })
    }

    fn combine(&self, x: &Subshift, other: &Self, keep: impl Fn(bool, bool) -> bool) -> Result<Self> {
        let r = self.resolution.max(other.resolution);
        let a = self.members_at(x, r)?;
        let b = other.members_at(x, r)?;
        Self::normalized(x, r, merge_sorted(&a, &b, keep))
    }

    pub fn intersect(&self, x: &Subshift, other: &Self) -> Result<Self> {
        self.combine(x, other, |a, b| a && b)
    }

    pub fn union(&self, x: &Subshift, other: &Self) -> Result<Self> {
        self.combine(x, other, |a, b| a || b)
    }

    pub fn difference(&self, x: &Subshift, other: &Self) -> Result<Self> {
        self.combine(x, other, |a, b| a && !b)
    }

    pub fn complement(&self, x: &Subshift) -> Result<Self> {
        Self::full(x).difference(x, self)
    }

    pub fn is_subset(&self, x: &Subshift, other: &Self) -> Result<bool> {
        Ok(self.difference(x, other)?.is_empty())
    }

    pub fn is_disjoint(&self, x: &Subshift, other: &Self) -> Result<bool> {
        Ok(self.intersect(x, other)?.is_empty())
    }

    /// `T^i(C) = { y : T^{-i} y ∈ C } = { y : y[-L-i ..= L-i] ∈ C }`.
    pub fn shift(&self, x: &Subshift, i: i64) -> Result<Self> {
        if self.members.is_empty() || i == 0 {
            return Ok(self.clone());
        }
        let resolution = self.resolution + i.unsigned_abs() as usize;
        if resolution > x.max_resolution() {
            return Err(Error::Resource(format!(
                "shifting by {i} needs resolution {resolution}, cap is {}",
                x.max_resolution()
            )));
        }
        let offset = (resolution as i64 - self.resolution as i64 - i) as usize;
        let width = 2 * self.resolution + 1;
        let members = x
            .language(2 * resolution + 1)?
            .iter()
            .filter(|w| {
                self.members
                    .binary_search_by(|m| m.as_slice().cmp(&w[offset..offset + width]))
                    .is_ok()
            })
            .cloned()
            .collect();
        Self::normalized(x, resolution, members)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "resolution": self.resolution,
            "words": self.members.iter().map(|m| word_str(m)).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self.members.iter().map(|m| word_str(m)).collect();
        write!(f, "L{}{{{}}}", self.resolution, words.join(","))
    }
}

/// Checks that `parts` are pairwise disjoint and cover `X`.
pub(crate) fn check_partition(x: &Subshift, parts: &[ClopenSet]) -> Result<()> {
    let r = parts.iter().map(ClopenSet::resolution).max().unwrap_or(0);
    let all = x.language(2 * r + 1)?;
    let mut hits = vec![0usize; all.len()];
    for (k, p) in parts.iter().enumerate() {
        for m in p.members_at(x, r)? {
            let i = all.binary_search(&m).expect("admissible");
            hits[i] += 1;
            if hits[i] > 1 {
                return Err(Error::NotPartition(format!(
                    "part {k} overlaps an earlier part at window {}",
                    word_str(&m)
                )));
            }
        }
    }
    if let Some(i) = hits.iter().position(|&h| h == 0) {
        return Err(Error::NotPartition(format!(
            "window {} is not covered",
            word_str(&all[i])
        )));
    }
    Ok(())
}
