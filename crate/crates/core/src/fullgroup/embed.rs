//! Atom actions of full-group elements on adapted KR partitions.
//!
//! On an adapted partition every ball element has constant exponent `c` on
//! each atom. Atom `(v, i)` goes to `(v, i + c)` inside its tower; when
//! `i + c` leaves `0..h_v` the atom wraps around to `(v, (i + c) mod h_v)`.
//! The wrap is where the roof-crossing part of `g` is cut out, and it is
//! only consistent when every ball element looks the same just below and
//! just above the base in all towers. [`adapted_partition`] therefore
//! deepens the seed until each cocycle is constant on `T^j B` for
//! `-(M+1) <= j <= M`, besides reaching `h(Ξ) >= 2M + 2`.

use std::collections::HashMap;

use serde::Serialize;

use super::{ball_elements, TableElement};
use crate::perms::Perm;
use crate::subshift::{word_str, ClopenSet, KrPartition, Subshift};
use crate::words::ReducedWord;
use crate::{Error, Result};

/// Seed extensions tried before giving up.
pub const MAX_DEEPENING: usize = 64;

/// `φ(g)`: a permutation of the atoms of a KR partition, atoms numbered in
/// tower-major order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomPerm {
    pub perm: Perm,
    pub tower_preserving: bool,
}

impl AtomPerm {
    pub fn identity(atoms: usize) -> Self {
        Self {
            perm: Perm::identity(atoms),
            tower_preserving: true,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            perm: self.perm.compose(&other.perm),
            tower_preserving: self.tower_preserving && other.tower_preserving,
        }
    }

    pub fn fixes(&self, atom: usize) -> bool {
        self.perm.apply(atom) == atom
    }
}

fn max_exponent(elems: &[&TableElement]) -> i64 {
    elems.iter().map(|g| g.max_abs_exponent()).max().unwrap_or(0)
}

/// Every element's exponent is constant on `T^j B` for `-(m+1) <= j <= m`.
fn base_uniform(x: &Subshift, xi: &KrPartition, elems: &[&TableElement], m: i64) -> Result<bool> {
    let base = xi.base(x)?;
    for j in -(m + 1)..=m {
        let shifted = base.shift(x, j)?;
        for g in elems {
            let mut inside = false;
            for (c, _) in g.parts() {
                if shifted.is_subset(x, c)? {
                    inside = true;
                    break;
                }
            }
            if !inside {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn common_refinement(x: &Subshift, partitions: &[Vec<ClopenSet>]) -> Result<Vec<ClopenSet>> {
    let mut parts = vec![ClopenSet::full(x)];
    for p in partitions {
        let mut next = Vec::new();
        for a in &parts {
            for b in p {
                let c = a.intersect(x, b)?;
                if !c.is_empty() {
                    next.push(c);
                }
            }
        }
        next.sort();
        next.dedup();
        parts = next;
    }
    Ok(parts)
}

/// A KR partition with `h(Ξ) >= 2 max|f_g| + 2` on which every `f_g`,
/// `g ∈ B_S(n)`, is constant on atoms.
///
/// The seed `u` is extended one letter at a time, alternating right and
/// left (the first admissible letter), keeping the original occurrence of
/// `u` at position 0.
pub fn adapted_partition(x: &Subshift, gens: &[TableElement], n: usize, u: &[u8]) -> Result<KrPartition> {
    if u.is_empty() || !x.is_admissible(u)? {
        return Err(Error::InvalidArgument(format!("seed {} is not admissible", word_str(u))));
    }
    let ball = ball_elements(x, gens, n)?;
    let elems: Vec<&TableElement> = ball.iter().map(|(_, g)| g).collect();
    let m = max_exponent(&elems);
    let need = 2 * m as usize + 2;
    let mut word = u.to_vec();
    let mut p = 0usize;
    let mut last = (0usize, false);
    for depth in 0..=MAX_DEEPENING {
        let xi = x.kr_partition_at(&word, p)?;
        let tall = xi.min_height() >= need;
        let uniform = tall && base_uniform(x, &xi, &elems, m)?;
        last = (xi.min_height(), uniform);
        if uniform {
            let partitions: Vec<Vec<ClopenSet>> = elems.iter().map(|g| g.cocycle_partition()).collect();
            let refined = x.refine_kr(&xi, &common_refinement(x, &partitions)?)?;
            if refined.min_height() < need {
                return Err(Error::Precondition("refinement lowered the minimum height".into()));
            }
            for (w, g) in &ball {
                if !x.refines(&refined, &g.cocycle_partition())? {
                    return Err(Error::Precondition(format!("exponent of {w} not constant on atoms")));
                }
            }
            return Ok(refined);
        }
        if depth == MAX_DEEPENING {
            break;
        }
        let alphabet = x.substitution().alphabet();
        let mut extended = None;
        for a in alphabet {
            let cand = if depth % 2 == 0 {
                let mut c = word.clone();
                c.push(a);
                c
            } else {
                let mut c = vec![a];
                c.extend_from_slice(&word);
                c
            };
            if x.is_admissible(&cand)? {
                extended = Some(cand);
                break;
            }
        }
        word = extended.ok_or_else(|| Error::InvalidArgument("seed has no admissible extension".into()))?;
        if depth % 2 == 1 {
            p += 1;
        }
    }
    Err(Error::Precondition(format!(
        "after {MAX_DEEPENING} seed extensions: min height {} (required {need}), base uniformity {}",
        last.0,
        if last.1 { "met" } else { "not met" }
    )))
}

/// The exponent of `g` on each atom, if constant.
fn atom_exponents(x: &Subshift, g: &TableElement, atoms: &[ClopenSet]) -> Result<std::result::Result<Vec<i64>, usize>> {
    let mut out = Vec::with_capacity(atoms.len());
    for (k, a) in atoms.iter().enumerate() {
        let mut found = None;
        for (c, e) in g.parts() {
            if a.is_subset(x, c)? {
                found = Some(*e);
                break;
            }
        }
        match found {
            Some(e) => out.push(e),
            None => return Ok(Err(k)),
        }
    }
    Ok(Ok(out))
}

fn action_from_exponents(xi: &KrPartition, exps: &[i64]) -> Result<AtomPerm> {
    let mut offsets = Vec::with_capacity(xi.towers.len());
    let mut total = 0usize;
    for t in &xi.towers {
        offsets.push(total);
        total += t.height;
    }
    let mut images = vec![0u32; total];
    let mut source: HashMap<usize, (usize, usize)> = HashMap::new();
    for (k, (v, i)) in xi.atom_indices().into_iter().enumerate() {
        let h = xi.towers[v].height as i64;
        let target = (i as i64 + exps[k]).rem_euclid(h) as usize;
        let idx = offsets[v] + target;
        if let Some((v0, i0)) = source.insert(idx, (v, i)) {
            return Err(Error::NotBijective(format!(
                "atoms ({v0},{i0}) and ({v},{i}) both map to ({v},{target})"
            )));
        }
        images[k] = idx as u32;
    }
    Ok(AtomPerm {
        perm: Perm::from_images(images)?,
        tower_preserving: true,
    })
}

/// `φ(g)` on the atoms of `xi`.
pub fn atom_action(x: &Subshift, g: &TableElement, xi: &KrPartition) -> Result<AtomPerm> {
    let atoms = xi.atoms(x)?;
    match atom_exponents(x, g, &atoms)? {
        Ok(exps) => action_from_exponents(xi, &exps),
        Err(k) => {
            let (v, i) = xi.atom_indices()[k];
            Err(Error::Precondition(format!("exponent not constant on atom ({v},{i})")))
        }
    }
}

/// Verification of `φ` on `B_S(n)`.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub n: usize,
    pub ball_size: usize,
    pub atom_count: usize,
    pub min_height: usize,
    pub required_min_height: usize,
    /// Set when the partition is not adapted to `B_S(n)`; no map is built.
    pub precondition: Option<String>,
    pub injective: bool,
    pub multiplicative: bool,
    pub pairs_checked: usize,
    pub block_stab: bool,
    pub witnesses: Vec<String>,
    pub passed: bool,
    #[serde(skip)]
    pub images: Vec<(ReducedWord, TableElement, AtomPerm)>,
}

impl EmbeddingReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

const MAX_WITNESSES: usize = 10;

/// Builds `φ` on `B_S(n)` and checks injectivity, multiplicativity and the
/// fixation equivalence on every atom. Failures are report outcomes.
pub fn local_embedding(x: &Subshift, gens: &[TableElement], n: usize, xi: &KrPartition) -> Result<EmbeddingReport> {
    let ball = ball_elements(x, gens, n)?;
    let elems: Vec<&TableElement> = ball.iter().map(|(_, g)| g).collect();
    let m = max_exponent(&elems);
    let mut report = EmbeddingReport {
        n,
        ball_size: ball.len(),
        atom_count: xi.atom_count(),
        min_height: xi.min_height(),
        required_min_height: 2 * m as usize + 2,
        precondition: None,
        injective: false,
        multiplicative: false,
        pairs_checked: 0,
        block_stab: false,
        witnesses: Vec::new(),
        passed: false,
        images: Vec::new(),
    };
    if report.min_height < report.required_min_height {
        report.precondition = Some(format!(
            "min height {} below {}; use a deeper partition",
            report.min_height, report.required_min_height
        ));
        return Ok(report);
    }
    let atoms = xi.atoms(x)?;
    let indices = xi.atom_indices();
    let mut exponents = Vec::with_capacity(ball.len());
    for (w, g) in &ball {
        match atom_exponents(x, g, &atoms)? {
            Ok(e) => exponents.push(e),
            Err(k) => {
                let (v, i) = indices[k];
                report.precondition = Some(format!(
                    "exponent of {w} not constant on atom ({v},{i}); use a deeper partition"
                ));
                return Ok(report);
            }
        }
    }
    for ((w, g), e) in ball.iter().zip(&exponents) {
        match action_from_exponents(xi, e) {
            Ok(phi) => report.images.push((w.clone(), g.clone(), phi)),
            Err(err) => {
                report.witnesses.push(format!("{w}: {err}"));
                report.witnesses.push("deepen the partition".into());
                return Ok(report);
            }
        }
    }

    let mut by_perm: HashMap<&AtomPerm, usize> = HashMap::new();
    report.injective = true;
    for (k, (w, _, phi)) in report.images.iter().enumerate() {
        if let Some(&j) = by_perm.get(phi) {
            report.injective = false;
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(format!("{} and {w} have the same atom action", report.images[j].0));
            }
        } else {
            by_perm.insert(phi, k);
        }
    }

    let index: HashMap<&TableElement, usize> = report.images.iter().enumerate().map(|(k, (_, g, _))| (g, k)).collect();
    let mut multiplicative = true;
    let mut pairs = 0;
    let mut witnesses = Vec::new();
    for (wg, g, pg) in &report.images {
        for (wh, h, ph) in &report.images {
            let gh = g.compose(x, h)?;
            if let Some(&k) = index.get(&gh) {
                pairs += 1;
                if report.images[k].2 != pg.compose(ph) {
                    multiplicative = false;
                    if witnesses.len() < MAX_WITNESSES {
                        witnesses.push(format!("φ({wg}·{wh}) != φ({wg})φ({wh})"));
                    }
                }
            }
        }
    }
    report.multiplicative = multiplicative;
    report.pairs_checked = pairs;
    report.witnesses.extend(witnesses);

    let mut block_stab = true;
    for ((w, g, phi), e) in report.images.iter().zip(&exponents) {
        for (k, a) in atoms.iter().enumerate() {
            let r = g.parts().iter().map(|(c, _)| c.resolution()).max().unwrap_or(0).max(a.resolution());
            let windows = a.members_at(x, r)?;
            let samples = [windows.first(), windows.last()];
            let point_fixed = samples.iter().flatten().all(|win| {
                g.parts()
                    .iter()
                    .find(|(c, _)| c.contains_window(win))
                    .is_some_and(|(_, ex)| *ex == 0)
            });
            let pointwise = e[k] == 0;
            let atom_fixed = phi.fixes(k);
            if point_fixed != pointwise || pointwise != atom_fixed {
                block_stab = false;
                if report.witnesses.len() < MAX_WITNESSES {
                    let (v, i) = indices[k];
                    report.witnesses.push(format!(
                        "{w} on atom ({v},{i}): sample fixed {point_fixed}, pointwise {pointwise}, atom fixed {atom_fixed}"
                    ));
                }
            }
        }
    }
    report.block_stab = block_stab;
    report.passed = report.injective && report.multiplicative && report.block_stab;
    if !report.passed {
        report.witnesses.push("deepen the partition".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{disjoint_gadget_bases, three_cycle};
    use super::*;
    use crate::subshift::Substitution;
    const GADGET_LEN: usize = 5;

    fn fib() -> Subshift {
        Subshift::new(Substitution::fibonacci()).unwrap()
    }

    fn gadgets(x: &Subshift) -> Vec<TableElement> {
        disjoint_gadget_bases(x, 2, GADGET_LEN)
            .unwrap()
            .iter()
            .map(|u| three_cycle(x, u).unwrap())
            .collect()
    }

    #[test]
    fn identity_generator() {
        let x = fib();
        let id = TableElement::identity(&x);
        let xi = adapted_partition(&x, std::slice::from_ref(&id), 1, b"a").unwrap();
        assert!(xi.min_height() >= 2);
        assert_eq!(atom_action(&x, &id, &xi).unwrap(), AtomPerm::identity(xi.atom_count()));
        assert!(local_embedding(&x, &[id], 3, &xi).unwrap().passed);
    }

    #[test]
    fn single_three_cycle_height() {
        let x = fib();
        let g = three_cycle(&x, &ClopenSet::cylinder(&x, b"aab", 0).unwrap()).unwrap();
        let xi = adapted_partition(&x, std::slice::from_ref(&g), 1, b"a").unwrap();
        assert!(xi.min_height() >= 6);
        assert!(x.check_kr(&xi).unwrap().passed());
    }

    #[test]
    fn shift_inside_towers() {
        let x = fib();
        let xi = adapted_partition(&x, &[TableElement::identity(&x)], 0, b"aba").unwrap();
        // T acts on atoms as the rotation of each tower
        let phi = atom_action(&x, &TableElement::shift_power(&x, 1), &xi).unwrap();
        let mut k = 0;
        for t in &xi.towers {
            for i in 0..t.height {
                assert_eq!(phi.perm.apply(k), k - i + (i + 1) % t.height);
                k += 1;
            }
        }
    }

    #[test]
    fn gadgets_embed() {
        let x = fib();
        let gens = gadgets(&x);
        for n in [0, 1, 2] {
            let xi = adapted_partition(&x, &gens, n, b"a").unwrap();
            assert!(x.check_kr(&xi).unwrap().passed());
            let rep = local_embedding(&x, &gens, n, &xi).unwrap();
            assert!(rep.passed, "{}", rep.to_json());
            if n == 1 {
                // generator images are products of disjoint 3-cycles on atoms
                let a = &rep.images[1].2.perm;
                let b = &rep.images[3].2.perm;
                let moved: Vec<Vec<u32>> = a.cycles().into_iter().filter(|c| c.len() > 1).collect();
                assert!(!moved.is_empty());
                assert!(moved.iter().all(|c| c.len() == 3));
                for c in moved {
                    assert!(c.iter().all(|&p| b.apply(p as usize) == p as usize));
                }
            }
        }
    }

    #[test]
    fn unrefined_partition_is_reported() {
        let x = fib();
        let gens = gadgets(&x);
        let xi = x.kr_partition(b"abaababaabaab").unwrap();
        let rep = local_embedding(&x, &gens, 2, &xi).unwrap();
        assert!(!rep.passed);
        assert!(rep.precondition.is_some());
        assert!(matches!(atom_action(&x, &gens[0], &x.kr_partition(b"a").unwrap()), Err(Error::Precondition(_))));
    }
}
