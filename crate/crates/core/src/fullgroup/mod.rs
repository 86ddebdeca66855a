//! Elements of the topological full group `[[T]]` of a substitution subshift,
//! stored as orbit-cocycle tables `g|_C = T^a|_C`.

mod embed;
mod irs;

use std::collections::HashMap;

use serde_json::json;

use crate::subshift::{ClopenSet, Subshift};
use crate::words::{Ball, ReducedWord, MAX_RANK};
use crate::{Error, Result};

pub use embed::{adapted_partition, atom_action, local_embedding, AtomPerm, EmbeddingReport};
pub use irs::{fullgroup_irs, fullgroup_irs_limit_check, joint_fullgroup_irs, LimitReport, LimitRow};

/// Elements allowed in a ball before giving up.
pub const DEFAULT_ELEMENT_CAP: usize = 10_000;

/// A full-group element as `(C_i, a_i)` with `g = T^{a_i}` on `C_i`. Parts are
/// nonempty, sorted by exponent and merged, so equality is element equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TableElement {
    parts: Vec<(ClopenSet, i64)>,
}

impl TableElement {
    /// Validates that the parts and their images both partition `X`.
    pub fn new(x: &Subshift, parts: Vec<(ClopenSet, i64)>) -> Result<Self> {
        let sets: Vec<ClopenSet> = parts.iter().map(|(c, _)| c.clone()).collect();
        crate::subshift::check_partition(x, &sets)?;
        let g = Self::merged(x, parts)?;
        let images = g
            .parts
            .iter()
            .map(|(c, a)| c.shift(x, *a))
            .collect::<Result<Vec<_>>>()?;
        crate::subshift::check_partition(x, &images).map_err(|e| match e {
            Error::NotPartition(m) => Error::NotBijective(format!("image sets fail to partition X: {m}")),
            other => other,
        })?;
        Ok(g)
    }

    fn merged(x: &Subshift, parts: Vec<(ClopenSet, i64)>) -> Result<Self> {
        let mut by_exp: Vec<(ClopenSet, i64)> = Vec::new();
        let mut sorted = parts;
        sorted.sort_by_key(|(_, a)| *a);
        for (c, a) in sorted {
            if c.is_empty() {
                continue;
            }
            match by_exp.last_mut() {
                Some((d, b)) if *b == a => *d = d.union(x, &c)?,
                _ => by_exp.push((c, a)),
            }
        }
        Ok(Self { parts: by_exp })
    }

    pub fn identity(x: &Subshift) -> Self {
        Self {
            parts: vec![(ClopenSet::full(x), 0)],
        }
    }

    /// `T^k`.
    pub fn shift_power(x: &Subshift, k: i64) -> Self {
        Self {
            parts: vec![(ClopenSet::full(x), k)],
        }
    }

    pub fn parts(&self) -> &[(ClopenSet, i64)] {
        &self.parts
    }

    pub fn is_identity(&self) -> bool {
        self.parts.len() == 1 && self.parts[0].1 == 0
    }

    /// `max |f_g|`.
    pub fn max_abs_exponent(&self) -> i64 {
        self.parts.iter().map(|(_, a)| a.abs()).max().unwrap_or(0)
    }

    /// The cocycle partition `{ f_g = a }`.
    pub fn cocycle_partition(&self) -> Vec<ClopenSet> {
        self.parts.iter().map(|(c, _)| c.clone()).collect()
    }

    /// `g ∘ h`: on `C_h ∩ T^{-b} C_g` the exponent is `a + b`.
    pub fn compose(&self, x: &Subshift, h: &Self) -> Result<Self> {
        let mut parts = Vec::new();
        for (ch, b) in &h.parts {
            for (cg, a) in &self.parts {
                let c = ch.intersect(x, &cg.shift(x, -b)?)?;
                if !c.is_empty() {
                    parts.push((c, a + b));
                }
            }
        }
        Self::merged(x, parts)
    }

    /// Parts `(T^a C, -a)`.
    pub fn inverse(&self, x: &Subshift) -> Result<Self> {
        let parts = self
            .parts
            .iter()
            .map(|(c, a)| Ok((c.shift(x, *a)?, -a)))
            .collect::<Result<Vec<_>>>()?;
        Self::merged(x, parts)
    }

    /// `f_g` at the point whose coordinates are `word[pos + j]`, or `None`
    /// when the word is too short around `pos`.
    pub fn exponent_at(&self, word: &[u8], pos: usize) -> Option<i64> {
        for (c, a) in &self.parts {
            let r = c.resolution();
            if pos < r || pos + r >= word.len() {
                return None;
            }
            if c.contains_window(&word[pos - r..=pos + r]) {
                return Some(*a);
            }
        }
        None
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!(self
            .parts
            .iter()
            .map(|(c, a)| json!({ "exponent": a, "set": c.to_json() }))
            .collect::<Vec<_>>())
    }
}

/// Free-function form of [`TableElement::new`].
pub fn make_element(x: &Subshift, parts: Vec<(ClopenSet, i64)>) -> Result<TableElement> {
    TableElement::new(x, parts)
}

/// `U -> TU -> T²U -> U`, identity elsewhere.
pub fn three_cycle(x: &Subshift, u: &ClopenSet) -> Result<TableElement> {
    if u.is_empty() {
        return Ok(TableElement::identity(x));
    }
    let tu = u.shift(x, 1)?;
    let t2u = u.shift(x, 2)?;
    for (p, q, what) in [(u, &tu, "U and TU"), (u, &t2u, "U and T²U"), (&tu, &t2u, "TU and T²U")] {
        if !p.is_disjoint(x, q)? {
            return Err(Error::Precondition(format!("{what} intersect for U = {u}")));
        }
    }
    let rest = u.union(x, &tu)?.union(x, &t2u)?.complement(x)?;
    TableElement::new(x, vec![(u.clone(), 1), (tu, 1), (t2u, -2), (rest, 0)])
}

/// Support `U ∪ TU ∪ T²U` of a three-cycle gadget.
pub fn gadget_support(x: &Subshift, u: &ClopenSet) -> Result<ClopenSet> {
    u.union(x, &u.shift(x, 1)?)?.union(x, &u.shift(x, 2)?)
}

/// Cylinders `[w]` (at position 0) of admissible words of length `len`
/// whose three-cycle supports are pairwise disjoint, chosen greedily in
/// lexicographic order.
pub fn disjoint_gadget_bases(x: &Subshift, count: usize, len: usize) -> Result<Vec<ClopenSet>> {
    let mut chosen: Vec<(ClopenSet, ClopenSet)> = Vec::new();
    for w in x.language(len)?.iter() {
        if chosen.len() == count {
            break;
        }
        let u = ClopenSet::cylinder(x, w, 0)?;
        if three_cycle(x, &u).is_err() {
            continue;
        }
        let support = gadget_support(x, &u)?;
        let mut free = true;
        for (_, s) in &chosen {
            if !s.is_disjoint(x, &support)? {
                free = false;
                break;
            }
        }
        if free {
            chosen.push((u, support));
        }
    }
    if chosen.len() < count {
        return Err(Error::Precondition(format!(
            "only {} disjoint gadgets over words of length {len}",
            chosen.len()
        )));
    }
    Ok(chosen.into_iter().map(|(u, _)| u).collect())
}

/// `B_S(n)`: one representative word (first in length-lex order) per element.
pub fn ball_elements(x: &Subshift, gens: &[TableElement], n: usize) -> Result<Vec<(ReducedWord, TableElement)>> {
    ball_elements_with_cap(x, gens, n, DEFAULT_ELEMENT_CAP)
}

pub fn ball_elements_with_cap(
    x: &Subshift,
    gens: &[TableElement],
    n: usize,
    cap: usize,
) -> Result<Vec<(ReducedWord, TableElement)>> {
    let d = gens.len();
    if d == 0 || d > MAX_RANK {
        return Err(Error::InvalidArgument(format!("need 1..={MAX_RANK} generators, got {d}")));
    }
    let inverses = gens.iter().map(|g| g.inverse(x)).collect::<Result<Vec<_>>>()?;
    let letter = |l: i32| {
        let i = (l.unsigned_abs() - 1) as usize;
        if l > 0 {
            &gens[i]
        } else {
            &inverses[i]
        }
    };
    let words = Ball::enumerate(d, n)?;
    // evaluate by parent, keeping the first word for each element
    let mut values: Vec<TableElement> = Vec::with_capacity(words.len());
    let mut seen: HashMap<TableElement, usize> = HashMap::new();
    let mut out = Vec::new();
    for i in 0..words.len() {
        let g = match words.parent(i) {
            None => TableElement::identity(x),
            Some((p, l)) => values[p].compose(x, letter(l))?,
        };
        if !seen.contains_key(&g) {
            if out.len() == cap {
                return Err(Error::Resource(format!("ball B_S({n}) has more than {cap} elements")));
            }
            seen.insert(g.clone(), out.len());
            out.push((words.get(i).clone(), g.clone()));
        }
        values.push(g);
    }
    Ok(out)
}

/// An admissible word of at least `len` letters to host sample points.
pub fn sample_word(x: &Subshift, len: usize) -> Vec<u8> {
    let sub = x.substitution();
    let mut w = vec![sub.alphabet()[0]];
    while w.len() < len {
        w = sub.apply(&w);
    }
    w
}
