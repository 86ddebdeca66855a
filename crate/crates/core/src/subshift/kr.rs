//! Kakutani-Rokhlin partitions built from return words.

use serde::Serialize;
use serde_json::json;

use super::clopen::check_partition;
use super::{word_str, ClopenSet, Subshift};
use crate::{Error, Result};

/// The tower `B, TB, ..., T^{h-1}B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    pub base: ClopenSet,
    pub height: usize,
    /// Return word (plus refinement path) naming the tower.
    pub label: String,
}

/// A clopen partition of `X` into towers; atom `(v, i)` is `T^i B_v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KrPartition {
    pub towers: Vec<Tower>,
}

impl KrPartition {
    pub fn atom_count(&self) -> usize {
        self.towers.iter().map(|t| t.height).sum()
    }

    /// `h(Ξ)`.
    pub fn min_height(&self) -> usize {
        self.towers.iter().map(|t| t.height).min().unwrap_or(0)
    }

    pub fn max_height(&self) -> usize {
        self.towers.iter().map(|t| t.height).max().unwrap_or(0)
    }

    /// Atom indices `(v, i)` in tower-major order.
    pub fn atom_indices(&self) -> Vec<(usize, usize)> {
        self.towers
            .iter()
            .enumerate()
            .flat_map(|(v, t)| (0..t.height).map(move |i| (v, i)))
            .collect()
    }

    pub fn atom(&self, x: &Subshift, v: usize, i: usize) -> Result<ClopenSet> {
        self.towers[v].base.shift(x, i as i64)
    }

    /// Every atom as a clopen set, in [`KrPartition::atom_indices`] order.
    pub fn atoms(&self, x: &Subshift) -> Result<Vec<ClopenSet>> {
        self.atom_indices().into_iter().map(|(v, i)| self.atom(x, v, i)).collect()
    }

    /// `B(Ξ)`.
    pub fn base(&self, x: &Subshift) -> Result<ClopenSet> {
        self.towers
            .iter()
            .try_fold(ClopenSet::empty(), |acc, t| acc.union(x, &t.base))
    }

    /// `H(Ξ) = ⊔ T^{h_v - 1} B_v`.
    pub fn roof(&self, x: &Subshift) -> Result<ClopenSet> {
        self.towers.iter().try_fold(ClopenSet::empty(), |acc, t| {
            acc.union(x, &t.base.shift(x, t.height as i64 - 1)?)
        })
    }

    pub fn to_json(&self, x: &Subshift) -> Result<serde_json::Value> {
        let towers = self
            .towers
            .iter()
            .map(|t| {
                Ok(json!({
                    "label": t.label,
                    "height": t.height,
                    "base": t.base.to_json(),
                    "base_measure": x.measure(&t.base)?,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(json!({
            "towers": towers,
            "atoms": self.atom_count(),
            "min_height": self.min_height(),
        }))
    }
}

/// Outcome of the exact partition checks plus the measure identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KrReport {
    pub atom_count: usize,
    pub min_height: usize,
    pub atoms_partition: bool,
    pub roof_maps_to_base: bool,
    /// `Σ_v h_v ν(B_v)`.
    pub measure_sum: f64,
    pub measure_ok: bool,
    pub failure: Option<String>,
}

impl KrReport {
    pub fn passed(&self) -> bool {
        self.atoms_partition && self.roof_maps_to_base && self.measure_ok
    }
}

impl Subshift {
    /// KR partition over the cylinder `[u]` at position 0.
    pub fn kr_partition(&self, u: &[u8]) -> Result<KrPartition> {
        self.kr_partition_at(u, 0)
    }

    /// Towers over `B = { x : x[-p .. -p+|u|) = u }`, one per return word `w`:
    /// `B_w = { x : x[-p .. -p+|wu|) = wu }` with height `|w|`.
    pub fn kr_partition_at(&self, u: &[u8], p: usize) -> Result<KrPartition> {
        let towers = self
            .return_words(u)?
            .into_iter()
            .map(|w| {
                let mut wu = w.clone();
                wu.extend_from_slice(u);
                Ok(Tower {
                    base: ClopenSet::cylinder(self, &wu, -(p as i64))?,
                    height: w.len(),
                    label: word_str(&w),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KrPartition { towers })
    }

    /// Splits every base by the itinerary `B ∩ T^{-i} P`, `0 <= i < h`,
    /// through the parts of `pi`, keeping heights.
    pub fn refine_kr(&self, xi: &KrPartition, pi: &[ClopenSet]) -> Result<KrPartition> {
        check_partition(self, pi)?;
        let mut towers = Vec::new();
        for t in &xi.towers {
            let mut pieces: Vec<(ClopenSet, Vec<usize>)> = vec![(t.base.clone(), Vec::new())];
            for i in 0..t.height {
                let pulled = pi
                    .iter()
                    .map(|p| p.shift(self, -(i as i64)))
                    .collect::<Result<Vec<_>>>()?;
                let mut next = Vec::new();
                for (q, path) in pieces {
                    for (j, p) in pulled.iter().enumerate() {
                        let r = q.intersect(self, p)?;
                        if !r.is_empty() {
                            let mut path = path.clone();
                            path.push(j);
                            next.push((r, path));
                        }
                    }
                }
                pieces = next;
            }
            let single = pieces.len() == 1;
            for (base, path) in pieces {
                let label = if single {
                    t.label.clone()
                } else {
                    let path: Vec<String> = path.iter().map(ToString::to_string).collect();
                    format!("{}/{}", t.label, path.join("."))
                };
                towers.push(Tower {
                    base,
                    height: t.height,
                    label,
                });
            }
        }
        Ok(KrPartition { towers })
    }

    /// Every atom of `xi` lies inside a single part of `pi`.
    pub fn refines(&self, xi: &KrPartition, pi: &[ClopenSet]) -> Result<bool> {
        for atom in xi.atoms(self)? {
            let mut inside = 0;
            for p in pi {
                if atom.is_subset(self, p)? {
                    inside += 1;
                }
            }
            if inside != 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn check_kr(&self, xi: &KrPartition) -> Result<KrReport> {
        let atoms = xi.atoms(self)?;
        let (atoms_partition, failure) = match check_partition(self, &atoms) {
            Ok(()) => (true, None),
            Err(Error::NotPartition(m)) => (false, Some(m)),
            Err(e) => return Err(e),
        };
        let top = xi.towers.iter().try_fold(ClopenSet::empty(), |acc, t| {
            acc.union(self, &t.base.shift(self, t.height as i64)?)
        })?;
        let roof_maps_to_base = top == xi.base(self)?;
        let mut measure_sum = 0.0;
        for t in &xi.towers {
            measure_sum += t.height as f64 * self.measure(&t.base)?;
        }
        let measure_ok = (measure_sum - 1.0).abs() <= xi.atom_count() as f64 * self.tolerance();
        Ok(KrReport {
            atom_count: xi.atom_count(),
            min_height: xi.min_height(),
            atoms_partition,
            roof_maps_to_base,
            measure_sum,
            measure_ok,
            failure,
        })
    }
}
