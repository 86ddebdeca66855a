//! Invariant random subgroups observed through radius-`r` stabilizer
//! fingerprints `W = Stab(x) ∩ B(r)`.
//!
//! An IRS is only ever represented by its radius-`r` marginal: a probability
//! distribution over fingerprints. Exact marginals carry rational masses;
//! sampled ones carry counts, so every reported mass comes with `n_samples`
//! and a standard error.

mod sample;
mod vershik;

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::perms::{generate_closure, Closure, GenTuple, Perm};
use crate::words::{Ball, WordSet};
use crate::{rational_to_f64, ratio, Error, Rational, Result};

pub use sample::{sample_irs, SAMPLE_STREAMS};
pub use vershik::{vershik_irs, ColorDistribution, VershikMode, VershikTarget};

/// A radius-`r` stabilizer fingerprint.
pub type Fingerprint = WordSet;

/// True iff `w` contains `e`, is inverse-closed and product-closed in its ball.
pub fn is_valid_fingerprint(w: &Fingerprint) -> bool {
    w.contains_identity() && w.is_inverse_closed() && w.is_product_closed()
}

/// A finite set with an action of the free group, given by one permutation
/// per generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GSetJson", into = "GSetJson")]
pub struct FiniteGSet {
    action: GenTuple,
}

#[derive(Serialize, Deserialize)]
struct GSetJson {
    size: usize,
    generators: Vec<Vec<u32>>,
}

impl TryFrom<GSetJson> for FiniteGSet {
    type Error = Error;

    fn try_from(j: GSetJson) -> Result<Self> {
        let perms = j
            .generators
            .into_iter()
            .map(Perm::from_images)
            .collect::<Result<Vec<_>>>()?;
        let action = GenTuple::new(perms)?;
        if action.degree() != j.size {
            return Err(Error::DegreeMismatch {
                left: j.size,
                right: action.degree(),
            });
        }
        Ok(Self { action })
    }
}

impl From<FiniteGSet> for GSetJson {
    fn from(x: FiniteGSet) -> Self {
        Self {
            size: x.size(),
            generators: x.action.perms().iter().map(|p| p.images().to_vec()).collect(),
        }
    }
}

impl FiniteGSet {
    pub fn new(action: GenTuple) -> Self {
        Self { action }
    }

    /// `m` points fixed by every generator.
    pub fn trivial(rank: usize, m: usize) -> Result<Self> {
        if m == 0 || rank == 0 {
            return Err(Error::InvalidArgument("a G-set needs at least one point and one generator".into()));
        }
        Ok(Self::new(GenTuple::identity(rank, m)))
    }

    pub fn size(&self) -> usize {
        self.action.degree()
    }

    pub fn rank(&self) -> usize {
        self.action.rank()
    }

    pub fn action(&self) -> &GenTuple {
        &self.action
    }

    /// The same action transported along the relabeling `rho`.
    pub fn relabel(&self, rho: &Perm) -> Result<Self> {
        if rho.degree() != self.size() {
            return Err(Error::DegreeMismatch {
                left: self.size(),
                right: rho.degree(),
            });
        }
        Ok(Self::new(self.action.conjugate(rho)))
    }

    /// Points of `parts[0]` first, then `parts[1]` shifted past them, and so on.
    pub fn disjoint_union(parts: &[&FiniteGSet]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("disjoint union of no G-sets".into()))?;
        let rank = first.rank();
        if let Some(p) = parts.iter().find(|p| p.rank() != rank) {
            return Err(Error::RankMismatch {
                left: rank,
                right: p.rank(),
            });
        }
        let mut images: Vec<Vec<u32>> = vec![Vec::new(); rank];
        let mut offset = 0u32;
        for part in parts {
            for (s, p) in part.action.perms().iter().enumerate() {
                images[s].extend(p.images().iter().map(|&y| y + offset));
            }
            offset += part.size() as u32;
        }
        let perms = images
            .into_iter()
            .map(Perm::from_images)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(GenTuple::new(perms)?))
    }
}

/// Every ball word evaluated in `action`.
pub(crate) fn ball_perms(action: &GenTuple, ball: &Ball) -> Result<Vec<Perm>> {
    if action.rank() != ball.rank() {
        return Err(Error::RankMismatch {
            left: action.rank(),
            right: ball.rank(),
        });
    }
    let letters: HashMap<i32, Perm> = (1..=action.rank() as i32)
        .flat_map(|i| [i, -i])
        .map(|l| (l, action.letter(l)))
        .collect();
    Ok(ball.evaluate_all(Perm::identity(action.degree()), |p, l| p.compose(&letters[&l])))
}

fn fixer_mask(perms: &[Perm], x: usize) -> Vec<bool> {
    perms.iter().map(|p| p.apply(x) == x).collect()
}

/// `{ w in ball : w(x) = x }`.
pub fn fingerprint(action: &GenTuple, x: usize, ball: &Ball) -> Result<Fingerprint> {
    if x >= action.degree() {
        return Err(Error::InvalidArgument(format!(
            "point {x} outside [0, {})",
            action.degree()
        )));
    }
    let perms = ball_perms(action, ball)?;
    Ok(WordSet::from_mask(ball, &fixer_mask(&perms, x)))
}

/// Fingerprint masses of an IRS marginal.
#[derive(Clone, Debug, PartialEq)]
pub enum Masses {
    Exact(BTreeMap<Fingerprint, Rational>),
    Sampled {
        counts: BTreeMap<Fingerprint, u64>,
        n_samples: u64,
    },
    /// Floating masses known up to `tolerance` each.
    Approximate {
        masses: BTreeMap<Fingerprint, f64>,
        tolerance: f64,
    },
}

/// The radius-`r` marginal of an IRS.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalIrs {
    radius: usize,
    masses: Masses,
}

const FLOAT_SUM_SLACK: f64 = 1e-12;

impl EmpiricalIrs {
    pub fn exact(radius: usize, masses: BTreeMap<Fingerprint, Rational>) -> Result<Self> {
        check_radii(radius, masses.keys())?;
        if masses.values().any(Signed::is_negative) {
            return Err(Error::InvalidArgument("negative mass".into()));
        }
        let total: Rational = masses.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!("masses sum to {total}, not 1")));
        }
        let masses = masses.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        Ok(Self {
            radius,
            masses: Masses::Exact(masses),
        })
    }

    pub fn sampled(radius: usize, counts: BTreeMap<Fingerprint, u64>) -> Result<Self> {
        check_radii(radius, counts.keys())?;
        let n_samples: u64 = counts.values().sum();
        if n_samples == 0 {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        let counts = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        Ok(Self {
            radius,
            masses: Masses::Sampled { counts, n_samples },
        })
    }

    pub fn approximate(radius: usize, masses: BTreeMap<Fingerprint, f64>, tolerance: f64) -> Result<Self> {
        check_radii(radius, masses.keys())?;
        if masses.values().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::InvalidArgument("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.values().sum();
        let slack = FLOAT_SUM_SLACK + tolerance * masses.len() as f64;
        if (total - 1.0).abs() > slack {
            return Err(Error::InvalidArgument(format!("masses sum to {total}, not 1 within {slack}")));
        }
        Ok(Self {
            radius,
            masses: Masses::Approximate { masses, tolerance },
        })
    }

    pub fn point_mass(w: Fingerprint) -> Self {
        let radius = w.radius();
        Self {
            radius,
            masses: Masses::Exact(BTreeMap::from([(w, Rational::one())])),
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn masses(&self) -> &Masses {
        &self.masses
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.masses, Masses::Exact(_))
    }

    pub fn exact_masses(&self) -> Option<&BTreeMap<Fingerprint, Rational>> {
        match &self.masses {
            Masses::Exact(m) => Some(m),
            _ => None,
        }
    }

    pub fn n_samples(&self) -> Option<u64> {
        match self.masses {
            Masses::Sampled { n_samples, .. } => Some(n_samples),
            _ => None,
        }
    }

    /// Fingerprints with positive mass, in canonical order.
    pub fn fingerprints(&self) -> Vec<&Fingerprint> {
        match &self.masses {
            Masses::Exact(m) => m.keys().collect(),
            Masses::Sampled { counts, .. } => counts.keys().collect(),
            Masses::Approximate { masses, .. } => masses.keys().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.fingerprints().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mass(&self, w: &Fingerprint) -> f64 {
        match &self.masses {
            Masses::Exact(m) => m.get(w).map_or(0.0, rational_to_f64),
            Masses::Sampled { counts, n_samples } => {
                counts.get(w).map_or(0.0, |&c| c as f64 / *n_samples as f64)
            }
            Masses::Approximate { masses, .. } => masses.get(w).copied().unwrap_or(0.0),
        }
    }

    /// `sqrt(p(1-p)/N)` for sampled marginals.
    pub fn stderr(&self, w: &Fingerprint) -> Option<f64> {
        let n = self.n_samples()? as f64;
        let p = self.mass(w);
        Some((p * (1.0 - p) / n).sqrt())
    }

    pub fn float_masses(&self) -> BTreeMap<Fingerprint, f64> {
        self.fingerprints()
            .into_iter()
            .map(|w| (w.clone(), self.mass(w)))
            .collect()
    }

    /// Per-fingerprint uncertainty: tolerance, standard error, or 0.
    pub fn uncertainty(&self, w: &Fingerprint) -> f64 {
        match &self.masses {
            Masses::Exact(_) => 0.0,
            Masses::Sampled { .. } => self.stderr(w).unwrap_or(0.0),
            Masses::Approximate { tolerance, .. } => *tolerance,
        }
    }

    /// The marginal at a smaller radius.
    pub fn restrict(&self, radius: usize) -> Result<Self> {
        if radius > self.radius {
            return Err(Error::RadiusMismatch {
                left: radius,
                right: self.radius,
            });
        }
        fn merge<V: Clone + std::ops::AddAssign>(m: &BTreeMap<Fingerprint, V>, r: usize) -> BTreeMap<Fingerprint, V> {
            let mut out: BTreeMap<Fingerprint, V> = BTreeMap::new();
            for (w, v) in m {
                match out.entry(w.restrict(r)) {
                    std::collections::btree_map::Entry::Occupied(mut e) => *e.get_mut() += v.clone(),
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(v.clone());
                    }
                }
            }
            out
        }
        let masses = match &self.masses {
            Masses::Exact(m) => Masses::Exact(merge(m, radius)),
            Masses::Sampled { counts, n_samples } => Masses::Sampled {
                counts: merge(counts, radius),
                n_samples: *n_samples,
            },
            Masses::Approximate { masses, tolerance } => Masses::Approximate {
                masses: merge(masses, radius),
                tolerance: *tolerance,
            },
        };
        Ok(Self { radius, masses })
    }

    /// One JSON object per fingerprint.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for w in self.fingerprints() {
            let words: Vec<String> = w.iter().map(ToString::to_string).collect();
            let mut obj = serde_json::Map::new();
            obj.insert("r".into(), self.radius.into());
            obj.insert("W".into(), words.into());
            match &self.masses {
                Masses::Exact(m) => {
                    obj.insert("mass".into(), m[w].to_string().into());
                }
                Masses::Sampled { n_samples, .. } => {
                    obj.insert("mass".into(), self.mass(w).into());
                    obj.insert("stderr".into(), self.stderr(w).into());
                    obj.insert("n_samples".into(), (*n_samples).into());
                }
                Masses::Approximate { tolerance, .. } => {
                    obj.insert("mass".into(), self.mass(w).into());
                    obj.insert("tolerance".into(), (*tolerance).into());
                }
            }
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

fn check_radii<'a>(radius: usize, keys: impl Iterator<Item = &'a Fingerprint>) -> Result<()> {
    for w in keys {
        if w.radius() != radius {
            return Err(Error::RadiusMismatch {
                left: radius,
                right: w.radius(),
            });
        }
    }
    Ok(())
}

/// The exact IRS of a finite G-set: fingerprint of a uniform random point.
pub fn irs_of_gset(x: &FiniteGSet, radius: usize) -> Result<EmpiricalIrs> {
    let ball = Ball::enumerate(x.rank(), radius)?;
    let perms = ball_perms(x.action(), &ball)?;
    let mut counts: BTreeMap<Fingerprint, usize> = BTreeMap::new();
    for p in 0..x.size() {
        *counts.entry(WordSet::from_mask(&ball, &fixer_mask(&perms, p))).or_default() += 1;
    }
    let masses = counts.into_iter().map(|(w, c)| (w, ratio(c, x.size()))).collect();
    EmpiricalIrs::exact(radius, masses)
}

/// Pointwise convex combination. Exact when every part is exact.
pub fn mixture(parts: &[(&EmpiricalIrs, Rational)]) -> Result<EmpiricalIrs> {
    let (first, _) = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("mixture of no parts".into()))?;
    let radius = first.radius();
    for (p, lambda) in parts {
        if p.radius() != radius {
            return Err(Error::RadiusMismatch {
                left: radius,
                right: p.radius(),
            });
        }
        if lambda.is_negative() {
            return Err(Error::InvalidArgument(format!("negative weight {lambda}")));
        }
    }
    let total: Rational = parts.iter().map(|(_, l)| l).sum();
    if !total.is_one() {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
    }
    if parts.iter().all(|(p, _)| p.is_exact()) {
        let mut out: BTreeMap<Fingerprint, Rational> = BTreeMap::new();
        for (p, lambda) in parts {
            for (w, m) in p.exact_masses().expect("exact part") {
                *out.entry(w.clone()).or_insert_with(Rational::zero) += lambda * m;
            }
        }
        return EmpiricalIrs::exact(radius, out);
    }
    let mut out: BTreeMap<Fingerprint, f64> = BTreeMap::new();
    let mut tolerance = 0.0;
    for (p, lambda) in parts {
        let l = rational_to_f64(lambda);
        for w in p.fingerprints() {
            *out.entry(w.clone()).or_default() += l * p.mass(w);
        }
        if let Masses::Approximate { tolerance: t, .. } = p.masses() {
            tolerance += l * t;
        }
    }
    EmpiricalIrs::approximate(radius, out, tolerance)
}

/// `q` copies of `x` followed by `m_k mod |x|` fixed points, `m_k = q|x| + r`.
pub fn pad_gset(x: &FiniteGSet, m_k: usize) -> Result<FiniteGSet> {
    let m = x.size();
    if m_k < m {
        return Err(Error::InvalidArgument(format!("target size {m_k} below |X| = {m}")));
    }
    let (q, r) = m_k.div_rem(&m);
    let filler;
    let mut parts: Vec<&FiniteGSet> = vec![x; q];
    if r > 0 {
        filler = FiniteGSet::trivial(x.rank(), r)?;
        parts.push(&filler);
    }
    FiniteGSet::disjoint_union(&parts)
}

/// Total variation `1/2 Σ |μ(F) − ν(F)|`, exact.
pub fn irs_distance_exact(a: &EmpiricalIrs, b: &EmpiricalIrs) -> Result<Rational> {
    same_radius(a, b)?;
    let (Some(ma), Some(mb)) = (a.exact_masses(), b.exact_masses()) else {
        return Err(Error::InvalidArgument("exact distance needs two exact IRS".into()));
    };
    let zero = Rational::zero();
    let mut total = Rational::zero();
    for w in ma.keys().chain(mb.keys().filter(|w| !ma.contains_key(*w))) {
        let d = ma.get(w).unwrap_or(&zero) - mb.get(w).unwrap_or(&zero);
        total += d.abs();
    }
    Ok(total / Rational::from_integer(2.into()))
}

/// Total variation distance in floating point.
pub fn irs_distance(a: &EmpiricalIrs, b: &EmpiricalIrs) -> Result<f64> {
    same_radius(a, b)?;
    let ma = a.float_masses();
    let mb = b.float_masses();
    let mut total = 0.0;
    for w in ma.keys().chain(mb.keys().filter(|w| !ma.contains_key(*w))) {
        total += (ma.get(w).unwrap_or(&0.0) - mb.get(w).unwrap_or(&0.0)).abs();
    }
    Ok(total / 2.0)
}

/// `1/2 Σ_F sqrt(u_a(F)^2 + u_b(F)^2)`: the uncertainty scale of [`irs_distance`].
pub fn combined_uncertainty(a: &EmpiricalIrs, b: &EmpiricalIrs) -> f64 {
    let mut keys: Vec<&Fingerprint> = a.fingerprints();
    keys.extend(b.fingerprints());
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|w| a.uncertainty(w).hypot(b.uncertainty(w)))
        .sum::<f64>()
        / 2.0
}

fn same_radius(a: &EmpiricalIrs, b: &EmpiricalIrs) -> Result<()> {
    if a.radius() != b.radius() {
        return Err(Error::RadiusMismatch {
            left: a.radius(),
            right: b.radius(),
        });
    }
    Ok(())
}

/// A subgroup `H` of a finite marked group, with the weight of the atom
/// "uniform over conjugates of `H`".
#[derive(Clone, Debug)]
pub struct SubgroupAtom {
    pub generators: Vec<Perm>,
    pub weight: Rational,
}

fn subgroup_elements(closure: &Closure, degree: usize, generators: &[Perm]) -> Result<Vec<Perm>> {
    if closure.truncated {
        return Err(Error::Precondition("the ambient group closure is truncated".into()));
    }
    for g in generators {
        if !closure.contains(g) {
            return Err(Error::InvalidArgument(format!("{g} is not an element of the group")));
        }
    }
    if generators.is_empty() {
        return Ok(vec![Perm::identity(degree)]);
    }
    let h = generate_closure(&GenTuple::new(generators.to_vec())?, closure.len())?;
    Ok(h.elements)
}

fn check_weights(atoms: &[SubgroupAtom]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("no atoms".into()));
    }
    if atoms.iter().any(|a| a.weight.is_negative()) {
        return Err(Error::InvalidArgument("negative atom weight".into()));
    }
    let total: Rational = atoms.iter().map(|a| &a.weight).sum();
    if !total.is_one() {
        return Err(Error::InvalidArgument(format!("atom weights sum to {total}, not 1")));
    }
    Ok(())
}

/// The left coset action `Γ/H`, points ordered by first coset representative.
fn coset_action(tuple: &GenTuple, closure: &Closure, h: &[Perm]) -> Result<FiniteGSet> {
    let mut coset_of = vec![usize::MAX; closure.len()];
    let mut reps = Vec::new();
    for (i, g) in closure.elements.iter().enumerate() {
        if coset_of[i] != usize::MAX {
            continue;
        }
        for x in h {
            let j = closure.index_of(&g.compose(x)).expect("closed under products");
            coset_of[j] = reps.len();
        }
        reps.push(i);
    }
    let perms = tuple
        .perms()
        .iter()
        .map(|s| {
            let images = reps
                .iter()
                .map(|&i| {
                    let j = closure.index_of(&s.compose(&closure.elements[i])).expect("closed");
                    coset_of[j] as u32
                })
                .collect();
            Perm::from_images(images)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiniteGSet::new(GenTuple::new(perms)?))
}

/// A finite G-set whose IRS is `Σ λ_i · (uniform conjugate of H_i)`: a
/// disjoint union of coset actions `Γ/H_i` with multiplicities clearing
/// denominators. Its size is the least common multiple of `idx_i · den(λ_i)`.
pub fn realize_irs_as_gset(
    tuple: &GenTuple,
    closure: &Closure,
    atoms: &[SubgroupAtom],
    cap: usize,
) -> Result<FiniteGSet> {
    check_weights(atoms)?;
    let mut pieces = Vec::new();
    let mut size = BigInt::one();
    for atom in atoms.iter().filter(|a| !a.weight.is_zero()) {
        let h = subgroup_elements(closure, tuple.degree(), &atom.generators)?;
        let x = coset_action(tuple, closure, &h)?;
        let index = BigInt::from(x.size());
        size = size.lcm(&(&index * atom.weight.denom()));
        pieces.push((x, index, &atom.weight));
    }
    if size > BigInt::from(cap) {
        return Err(Error::Resource(format!("realization needs {size} points, cap is {cap}")));
    }
    let mut parts = Vec::new();
    for (x, index, lambda) in &pieces {
        let copies = (lambda.numer() * &size) / (lambda.denom() * index);
        let copies = copies.to_usize().expect("bounded by cap");
        parts.extend(std::iter::repeat_n(x, copies));
    }
    FiniteGSet::disjoint_union(&parts)
}

/// `Σ λ_i · (uniform over gH_ig⁻¹, g ∈ Γ)` at radius `r`, straight from conjugates.
pub fn atomic_irs(tuple: &GenTuple, closure: &Closure, atoms: &[SubgroupAtom], radius: usize) -> Result<EmpiricalIrs> {
    check_weights(atoms)?;
    let ball = Ball::enumerate(tuple.rank(), radius)?;
    let perms = ball_perms(tuple, &ball)?;
    let order = closure.len();
    let mut masses: BTreeMap<Fingerprint, Rational> = BTreeMap::new();
    for atom in atoms.iter().filter(|a| !a.weight.is_zero()) {
        let h = subgroup_elements(closure, tuple.degree(), &atom.generators)?;
        let share = &atom.weight / Rational::from_integer(order.into());
        for g in &closure.elements {
            let gi = g.inverse();
            let conj: std::collections::HashSet<Vec<u32>> = h
                .iter()
                .map(|x| g.compose(x).compose(&gi).images().to_vec())
                .collect();
            let mask: Vec<bool> = perms.iter().map(|p| conj.contains(p.images())).collect();
            *masses
                .entry(WordSet::from_mask(&ball, &mask))
                .or_insert_with(Rational::zero) += &share;
        }
    }
    EmpiricalIrs::exact(radius, masses)
}
