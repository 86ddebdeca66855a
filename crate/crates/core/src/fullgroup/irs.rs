//! The `k`-point stabilizer IRS pushed forward through atom actions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::embed::{atom_action, local_embedding};
use super::TableElement;
use crate::irs::{ball_perms, irs_distance, EmpiricalIrs, Fingerprint};
use crate::perms::GenTuple;
use crate::subshift::{word_str, KrPartition, Subshift};
use crate::words::{Ball, WordSet};
use crate::{Error, Result};

type Classes = Vec<(Vec<bool>, f64)>;

/// Atoms grouped by their radius-`r` fixer mask, with summed measure.
fn fixation_classes(x: &Subshift, xi: &KrPartition, gens: &[TableElement], r: usize) -> Result<(Ball, Classes)> {
    let rep = local_embedding(x, gens, r, xi)?;
    if !rep.passed {
        let why = rep.precondition.clone().unwrap_or_else(|| rep.witnesses.join("; "));
        return Err(Error::Precondition(format!("local embedding at radius {r} failed: {why}")));
    }
    let phis = gens
        .iter()
        .map(|g| atom_action(x, g, xi).map(|a| a.perm))
        .collect::<Result<Vec<_>>>()?;
    let tuple = GenTuple::new(phis)?;
    let ball = Ball::enumerate(gens.len(), r)?;
    let perms = ball_perms(&tuple, &ball)?;
    let mut classes: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
    for (k, (v, _)) in xi.atom_indices().into_iter().enumerate() {
        let mask: Vec<bool> = perms.iter().map(|p| p.apply(k) == k).collect();
        // ν(T^i B_v) = ν(B_v)
        *classes.entry(mask).or_insert(0.0) += x.measure(&xi.towers[v].base)?;
    }
    Ok((ball, classes.into_iter().collect()))
}

/// All `k`-tuples of class indices, with the first coordinate split across
/// threads and results kept in tuple order.
fn class_tuples(classes: usize, k: usize) -> Vec<Vec<usize>> {
    let rest = classes.pow(k as u32 - 1);
    (0..classes)
        .into_par_iter()
        .flat_map_iter(|first| {
            (0..rest).map(move |mut code| {
                let mut t = vec![first];
                for _ in 1..k {
                    t.push(code % classes);
                    code /= classes;
                }
                t
            })
        })
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(())
}

/// `Stab_*(ν^{⊗k})` at radius `r`: the fingerprint of a tuple of atoms is
/// the set of ball words whose atom action fixes all of them, weighted by
/// the product of atom measures. Atoms with equal fixer masks are merged
/// before forming tuples, which changes only the summation order.
pub fn fullgroup_irs(x: &Subshift, xi: &KrPartition, gens: &[TableElement], k: usize, r: usize) -> Result<EmpiricalIrs> {
    check_k(k)?;
    let (ball, classes) = fixation_classes(x, xi, gens, r)?;
    let weighted: Vec<(Vec<bool>, f64)> = class_tuples(classes.len(), k)
        .into_par_iter()
        .map(|t| {
            let mut mask = classes[t[0]].0.clone();
            let mut mass = classes[t[0]].1;
            for &c in &t[1..] {
                mask.iter_mut().zip(&classes[c].0).for_each(|(m, b)| *m &= *b);
                mass *= classes[c].1;
            }
            (mask, mass)
        })
        .collect();
    let mut masses: BTreeMap<Fingerprint, f64> = BTreeMap::new();
    for (mask, mass) in weighted {
        *masses.entry(WordSet::from_mask(&ball, &mask)).or_insert(0.0) += mass;
    }
    let tolerance = k as f64 * x.tolerance();
    EmpiricalIrs::approximate(r, masses, tolerance)
}

/// Joint law of the per-coordinate fingerprints of a `ν^{⊗k}`-random tuple.
pub fn joint_fullgroup_irs(
    x: &Subshift,
    xi: &KrPartition,
    gens: &[TableElement],
    k: usize,
    r: usize,
) -> Result<BTreeMap<Vec<Fingerprint>, f64>> {
    check_k(k)?;
    let (ball, classes) = fixation_classes(x, xi, gens, r)?;
    let prints: Vec<Fingerprint> = classes.iter().map(|(m, _)| WordSet::from_mask(&ball, m)).collect();
    let mut out = BTreeMap::new();
    for t in class_tuples(classes.len(), k) {
        let key: Vec<Fingerprint> = t.iter().map(|&c| prints[c].clone()).collect();
        let mass: f64 = t.iter().map(|&c| classes[c].1).product();
        *out.entry(key).or_insert(0.0) += mass;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub seed: String,
    pub atoms: usize,
    pub min_height: usize,
    pub fingerprints: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitRow {
    pub left: usize,
    pub right: usize,
    pub tv: f64,
    /// `2 k |atoms| tolerance`, with the larger atom count of the pair.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub k: usize,
    pub r: usize,
    pub levels: Vec<LevelSummary>,
    pub rows: Vec<LimitRow>,
    #[serde(skip)]
    pub irs: Vec<EmpiricalIrs>,
}

impl LimitReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Computes [`fullgroup_irs`] on the adapted partition of every seed and
/// compares all pairs.
pub fn fullgroup_irs_limit_check(
    x: &Subshift,
    gens: &[TableElement],
    k: usize,
    r: usize,
    levels: &[Vec<u8>],
) -> Result<LimitReport> {
    let mut summaries = Vec::new();
    let mut irs = Vec::new();
    for seed in levels {
        let xi = super::adapted_partition(x, gens, r, seed)?;
        let mu = fullgroup_irs(x, &xi, gens, k, r)?;
        summaries.push(LevelSummary {
            seed: word_str(seed),
            atoms: xi.atom_count(),
            min_height: xi.min_height(),
            fingerprints: mu.len(),
        });
        irs.push(mu);
    }
    let mut rows = Vec::new();
    for i in 0..irs.len() {
        for j in i + 1..irs.len() {
            let tv = irs_distance(&irs[i], &irs[j])?;
            let atoms = summaries[i].atoms.max(summaries[j].atoms);
            let bound = 2.0 * k as f64 * atoms as f64 * x.tolerance();
            rows.push(LimitRow {
                left: i,
                right: j,
                tv,
                bound,
                passed: tv <= bound,
            });
        }
    }
    Ok(LimitReport {
        k,
        r,
        levels: summaries,
        rows,
        irs,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{adapted_partition, disjoint_gadget_bases, three_cycle};
    use super::*;
    use crate::irs::is_valid_fingerprint;
    use crate::subshift::Substitution;
    const GADGET_LEN: usize = 5;

    fn setup() -> (Subshift, Vec<TableElement>) {
        let x = Subshift::new(Substitution::fibonacci()).unwrap();
        let gens = disjoint_gadget_bases(&x, 2, GADGET_LEN)
            .unwrap()
            .iter()
            .map(|u| three_cycle(&x, u).unwrap())
            .collect();
        (x, gens)
    }

    #[test]
    fn identity_generator_gives_full_ball() {
        let (x, _) = setup();
        let id = vec![TableElement::identity(&x)];
        let xi = adapted_partition(&x, &id, 2, b"a").unwrap();
        for k in 1..4 {
            let mu = fullgroup_irs(&x, &xi, &id, k, 2).unwrap();
            assert_eq!(mu.len(), 1);
            let w = mu.fingerprints()[0].clone();
            assert_eq!(w.len(), Ball::enumerate(1, 2).unwrap().len());
            assert!((mu.mass(&w) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn free_action_gives_trivial_fingerprint() {
        let (x, _) = setup();
        let t = vec![TableElement::shift_power(&x, 1)];
        let xi = adapted_partition(&x, &t, 1, b"a").unwrap();
        let mu = fullgroup_irs(&x, &xi, &t, 1, 1).unwrap();
        assert_eq!(mu.len(), 1);
        assert_eq!(mu.fingerprints()[0].len(), 1);
    }

    #[test]
    fn gadget_masses_match_atom_scan() {
        let (x, gens) = setup();
        let xi = adapted_partition(&x, &gens, 1, b"a").unwrap();
        let mu = fullgroup_irs(&x, &xi, &gens, 1, 1).unwrap();
        assert!(mu.fingerprints().iter().all(|w| is_valid_fingerprint(w)));
        // scan atoms directly through the tables
        let ball = Ball::enumerate(2, 1).unwrap();
        let mut expected: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for (v, i) in xi.atom_indices() {
            let atom = xi.atom(&x, v, i).unwrap();
            let mask: Vec<bool> = ball
                .words()
                .iter()
                .map(|w| match w.letters() {
                    [] => true,
                    [l] => {
                        let g = &gens[(l.unsigned_abs() - 1) as usize];
                        g.parts().iter().any(|(c, e)| *e == 0 && atom.is_subset(&x, c).unwrap())
                    }
                    _ => unreachable!(),
                })
                .collect();
            *expected.entry(mask).or_default() += x.measure(&xi.towers[v].base).unwrap();
        }
        assert_eq!(mu.len(), expected.len());
        for (mask, m) in expected {
            assert!((mu.mass(&WordSet::from_mask(&ball, &mask)) - m).abs() < 1e-9);
        }
    }

    #[test]
    fn k2_marginal_and_limit() {
        let (x, gens) = setup();
        let xi = adapted_partition(&x, &gens, 1, b"a").unwrap();
        let one = fullgroup_irs(&x, &xi, &gens, 1, 1).unwrap();
        let joint = joint_fullgroup_irs(&x, &xi, &gens, 2, 1).unwrap();
        let mut marginal: BTreeMap<Fingerprint, f64> = BTreeMap::new();
        for (key, m) in &joint {
            *marginal.entry(key[0].clone()).or_default() += m;
        }
        assert_eq!(marginal.keys().collect::<Vec<_>>(), one.fingerprints());
        for (w, m) in &marginal {
            assert!((one.mass(w) - m).abs() < 1e-9);
        }
        let rep = fullgroup_irs_limit_check(&x, &gens, 2, 1, &[b"a".to_vec(), b"a".to_vec()]).unwrap();
        assert_eq!(rep.rows[0].tv, 0.0);
        let rep = fullgroup_irs_limit_check(&x, &gens, 1, 1, &[b"a".to_vec(), b"b".to_vec()]).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(fullgroup_irs(&x, &xi, &gens, 0, 1).is_err());
    }
}
