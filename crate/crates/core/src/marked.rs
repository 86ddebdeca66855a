//! Marked groups as word oracles, and the metric `d = 2^-nu` on them.
//!
//! A marked group is anything that can evaluate words in its generators and
//! decide whether the result is trivial. Concrete instances: permutation
//! groups given by a [`GenTuple`], the alternating enrichment `A(Z)`, and
//! (truncated) diagonal products.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::perms::{alt_marking, GenTuple, Perm};
use crate::words::{Ball, ReducedWord};
use crate::{Error, Result};

/// A group with an ordered generating tuple of length `rank`.
pub trait MarkedGroup {
    type Element: Clone;

    fn rank(&self) -> usize;
    fn identity(&self) -> Self::Element;
    /// The generator for a signed letter (`-i` is the inverse of `i`).
    fn letter(&self, l: i32) -> Self::Element;
    /// Group product; `mul(g, h)` acts as `g ∘ h`.
    fn mul(&self, g: &Self::Element, h: &Self::Element) -> Self::Element;
    fn is_identity(&self, g: &Self::Element) -> bool;

    fn evaluate(&self, w: &ReducedWord) -> Result<Self::Element> {
        if w.rank() != self.rank() {
            return Err(Error::RankMismatch {
                left: w.rank(),
                right: self.rank(),
            });
        }
        let mut g = self.identity();
        for &l in w.letters() {
            g = self.mul(&g, &self.letter(l));
        }
        Ok(g)
    }
}

/// Object-safe face of a marked group: which ball words die.
pub trait KernelOracle: Sync {
    fn rank(&self) -> usize;
    fn describe(&self) -> String;
    /// `mask[i]` is true iff word `i` of `ball` evaluates to the identity.
    fn identity_mask(&self, ball: &Ball) -> Result<Vec<bool>>;
    fn kills(&self, w: &ReducedWord) -> Result<bool>;
}

fn identity_mask_of<G: MarkedGroup>(g: &G, ball: &Ball) -> Result<Vec<bool>> {
    if ball.rank() != g.rank() {
        return Err(Error::RankMismatch {
            left: ball.rank(),
            right: g.rank(),
        });
    }
    let letters: BTreeMap<i32, G::Element> = (1..=g.rank() as i32)
        .flat_map(|i| [i, -i])
        .map(|l| (l, g.letter(l)))
        .collect();
    let values = ball.evaluate_all(g.identity(), |prev, l| g.mul(prev, &letters[&l]));
    Ok(values.iter().map(|v| g.is_identity(v)).collect())
}

macro_rules! kernel_oracle_via_marked {
    ($ty:ty) => {
        impl KernelOracle for $ty {
            fn rank(&self) -> usize {
                MarkedGroup::rank(self)
            }
            fn describe(&self) -> String {
                self.to_string()
            }
            fn identity_mask(&self, ball: &Ball) -> Result<Vec<bool>> {
                identity_mask_of(self, ball)
            }
            fn kills(&self, w: &ReducedWord) -> Result<bool> {
                let g = self.evaluate(w)?;
                Ok(self.is_identity(&g))
            }
        }
    };
}

/// The trivial group with `rank` generators.
#[derive(Clone, Debug)]
pub struct TrivialGroup {
    pub rank: usize,
}

impl MarkedGroup for TrivialGroup {
    type Element = ();
    fn rank(&self) -> usize {
        self.rank
    }
    fn identity(&self) {}
    fn letter(&self, _: i32) {}
    fn mul(&self, _: &(), _: &()) {}
    fn is_identity(&self, _: &()) -> bool {
        true
    }
}

impl fmt::Display for TrivialGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trivial:{}", self.rank)
    }
}

/// The free group evaluated into itself.
#[derive(Clone, Debug)]
pub struct FreeGroup {
    pub rank: usize,
}

impl MarkedGroup for FreeGroup {
    type Element = ReducedWord;
    fn rank(&self) -> usize {
        self.rank
    }
    fn identity(&self) -> ReducedWord {
        ReducedWord::identity(self.rank)
    }
    fn letter(&self, l: i32) -> ReducedWord {
        ReducedWord::letter(self.rank, l).expect("letter within rank")
    }
    fn mul(&self, g: &ReducedWord, h: &ReducedWord) -> ReducedWord {
        g.multiply(h).expect("same rank")
    }
    fn is_identity(&self, g: &ReducedWord) -> bool {
        g.is_identity()
    }
}

impl fmt::Display for FreeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "free:{}", self.rank)
    }
}

/// The permutation group generated by a tuple, marked by that tuple.
#[derive(Clone, Debug)]
pub struct PermGroup {
    tuple: GenTuple,
    name: String,
}

impl PermGroup {
    pub fn new(tuple: GenTuple) -> Self {
        let name = format!("perm:{}:{}", tuple.rank(), tuple.degree());
        Self { tuple, name }
    }

    pub fn tuple(&self) -> &GenTuple {
        &self.tuple
    }
}

impl MarkedGroup for PermGroup {
    type Element = Perm;
    fn rank(&self) -> usize {
        self.tuple.rank()
    }
    fn identity(&self) -> Perm {
        Perm::identity(self.tuple.degree())
    }
    fn letter(&self, l: i32) -> Perm {
        self.tuple.letter(l)
    }
    fn mul(&self, g: &Perm, h: &Perm) -> Perm {
        g.compose(h)
    }
    fn is_identity(&self, g: &Perm) -> bool {
        g.is_identity()
    }
}

impl fmt::Display for PermGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `(Alt([[r]]), T(r))`.
pub fn alt_oracle(r: usize) -> Result<PermGroup> {
    let mut g = PermGroup::new(alt_marking(r)?);
    g.name = format!("alt:{r}");
    Ok(g)
}

/// An element `(sigma, t)` of `A(Z) = FAlt(Z) ⋊ Z`, acting on `Z` as
/// `n -> sigma(n + t)`. `sigma` stores only its moved points.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct AzElement {
    sigma: BTreeMap<i64, i64>,
    shift: i64,
}

impl AzElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn shift_by(t: i64) -> Self {
        Self {
            sigma: BTreeMap::new(),
            shift: t,
        }
    }

    /// A finitary permutation given by a cycle, with zero shift.
    pub fn cycle(points: &[i64]) -> Self {
        let mut sigma = BTreeMap::new();
        for (i, &x) in points.iter().enumerate() {
            let y = points[(i + 1) % points.len()];
            if x != y {
                sigma.insert(x, y);
            }
        }
        Self { sigma, shift: 0 }
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn sigma(&self) -> &BTreeMap<i64, i64> {
        &self.sigma
    }

    fn sigma_at(&self, n: i64) -> i64 {
        self.sigma.get(&n).copied().unwrap_or(n)
    }

    /// The image of `n ∈ Z`.
    pub fn apply(&self, n: i64) -> i64 {
        self.sigma_at(n + self.shift)
    }

    /// `(s, t)(u, v) = (s ∘ (t·u), t + v)` with `(t·u)(n) = u(n - t) + t`.
    pub fn mul(&self, other: &Self) -> Self {
        let t = self.shift;
        let mut points: Vec<i64> = self.sigma.keys().copied().collect();
        points.extend(other.sigma.keys().map(|&n| n + t));
        let mut sigma = BTreeMap::new();
        for n in points {
            let inner = other.sigma_at(n - t) + t;
            let image = self.sigma_at(inner);
            if image != n {
                sigma.insert(n, image);
            }
        }
        Self {
            sigma,
            shift: t + other.shift,
        }
    }

    pub fn inverse(&self) -> Self {
        // (s, t)^-1 = (u, -t) with u = (-t)·s^-1, i.e. u(n) = s^-1(n + t) - t
        let t = self.shift;
        let sigma = self.sigma.iter().map(|(&x, &y)| (y - t, x - t)).collect();
        Self { sigma, shift: -t }
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.sigma.is_empty()
    }

    pub fn is_even(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        let mut transpositions = 0usize;
        for &start in self.sigma.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut len = 0usize;
            let mut x = start;
            while seen.insert(x) {
                len += 1;
                x = self.sigma_at(x);
            }
            transpositions += len - 1;
        }
        transpositions.is_multiple_of(2)
    }

    /// Largest `|n|` over the support of `sigma` (0 when empty).
    pub fn support_radius(&self) -> i64 {
        self.sigma.keys().map(|n| n.abs()).max().unwrap_or(0)
    }
}

/// `A(Z)` marked by `((id, 1), ((-1 0 1), 0))`.
#[derive(Clone, Debug, Default)]
pub struct AzGroup;

impl MarkedGroup for AzGroup {
    type Element = AzElement;
    fn rank(&self) -> usize {
        2
    }
    fn identity(&self) -> AzElement {
        AzElement::identity()
    }
    fn letter(&self, l: i32) -> AzElement {
        let g = match l.abs() {
            1 => AzElement::shift_by(1),
            2 => AzElement::cycle(&[-1, 0, 1]),
            _ => panic!("A(Z) has rank 2, got letter {l}"),
        };
        if l > 0 {
            g
        } else {
            g.inverse()
        }
    }
    fn mul(&self, g: &AzElement, h: &AzElement) -> AzElement {
        g.mul(h)
    }
    fn is_identity(&self, g: &AzElement) -> bool {
        g.is_identity()
    }
}

impl fmt::Display for AzGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("az")
    }
}

pub fn az_oracle() -> AzGroup {
    AzGroup
}

/// The subgroup of `prod_m Gamma_m` generated by the diagonal tuple,
/// truncated to finitely many factors.
#[derive(Clone, Debug)]
pub struct DiagonalGroup {
    factors: Vec<GenTuple>,
    name: String,
}

impl DiagonalGroup {
    pub fn new(factors: Vec<GenTuple>) -> Result<Self> {
        let rank = factors
            .first()
            .map(GenTuple::rank)
            .ok_or_else(|| Error::InvalidArgument("a diagonal product needs at least one factor".into()))?;
        if let Some(f) = factors.iter().find(|f| f.rank() != rank) {
            return Err(Error::RankMismatch {
                left: rank,
                right: f.rank(),
            });
        }
        let name = format!("diag[{}]", factors.len());
        Ok(Self { factors, name })
    }

    pub fn factors(&self) -> &[GenTuple] {
        &self.factors
    }

    /// The `i`-th diagonal generator, projected onto factor `m`.
    pub fn project_generator(&self, m: usize, i: usize) -> Perm {
        self.factors[m].perms()[i].clone()
    }
}

impl MarkedGroup for DiagonalGroup {
    type Element = Vec<Perm>;
    fn rank(&self) -> usize {
        self.factors[0].rank()
    }
    fn identity(&self) -> Vec<Perm> {
        self.factors.iter().map(|f| Perm::identity(f.degree())).collect()
    }
    fn letter(&self, l: i32) -> Vec<Perm> {
        self.factors.iter().map(|f| f.letter(l)).collect()
    }
    fn mul(&self, g: &Vec<Perm>, h: &Vec<Perm>) -> Vec<Perm> {
        g.iter().zip(h).map(|(a, b)| a.compose(b)).collect()
    }
    fn is_identity(&self, g: &Vec<Perm>) -> bool {
        g.iter().all(Perm::is_identity)
    }
}

impl fmt::Display for DiagonalGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

kernel_oracle_via_marked!(TrivialGroup);
kernel_oracle_via_marked!(FreeGroup);
kernel_oracle_via_marked!(PermGroup);
kernel_oracle_via_marked!(AzGroup);
kernel_oracle_via_marked!(DiagonalGroup);

pub fn diagonal_oracle(factors: Vec<GenTuple>) -> Result<DiagonalGroup> {
    DiagonalGroup::new(factors)
}

/// Coordinates at which a word that is trivial in the target survives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TailDefect {
    pub word: String,
    pub factors: usize,
    /// Factor indices where the word evaluates nontrivially.
    pub defect: Vec<usize>,
}

impl TailDefect {
    /// First index after which every factor kills the word.
    pub fn tail_start(&self) -> usize {
        self.defect.last().map_or(0, |m| m + 1)
    }
}

/// For `w` trivial in `target`, the factors of `diag` where `w` is nontrivial.
pub fn tail_defect(w: &ReducedWord, diag: &DiagonalGroup, target: &dyn KernelOracle) -> Result<TailDefect> {
    if !target.kills(w)? {
        return Err(Error::Precondition(format!(
            "word {w} is not trivial in {}",
            target.describe()
        )));
    }
    let g = diag.evaluate(w)?;
    let defect = g
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_identity())
        .map(|(m, _)| m)
        .collect();
    Ok(TailDefect {
        word: w.to_string(),
        factors: diag.factors.len(),
        defect,
    })
}

/// Default base schedule `r0(m) = m + 2`.
pub fn default_r0(m: usize) -> usize {
    m + 2
}

/// The truncation `Alt([[r0(m+n)]])`, `m < len`, of the Neumann group `G(r_n)`.
#[derive(Clone, Debug)]
pub struct TruncatedDiagonalProduct {
    pub offset: usize,
    pub radii: Vec<usize>,
    pub group: DiagonalGroup,
}

pub fn neumann_truncation(offset: usize, len: usize, r0: &dyn Fn(usize) -> usize) -> Result<TruncatedDiagonalProduct> {
    if len == 0 {
        return Err(Error::InvalidArgument("truncation length M must be positive".into()));
    }
    let radii: Vec<usize> = (0..len).map(|m| r0(m + offset)).collect();
    if radii[0] < 2 || radii.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument(format!(
            "r0 must be strictly increasing with values >= 2, got {radii:?}"
        )));
    }
    let factors = radii.iter().map(|&r| alt_marking(r)).collect::<Result<Vec<_>>>()?;
    let mut group = DiagonalGroup::new(factors)?;
    group.name = format!("neumann:{offset}:{len}");
    Ok(TruncatedDiagonalProduct { offset, radii, group })
}

/// `nu(O1, O2)` capped at the largest radius examined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nu {
    Exact(usize),
    AtLeast(usize),
}

impl Nu {
    /// `nu` itself, or the cap when the kernels agree on the whole ball.
    pub fn value(&self) -> usize {
        match *self {
            Nu::Exact(n) | Nu::AtLeast(n) => n,
        }
    }

    /// `2^-nu`; for `AtLeast` this is an upper bound.
    pub fn distance(&self) -> f64 {
        0.5f64.powi(self.value() as i32)
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nu::Exact(n) => write!(f, "{n}"),
            Nu::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

/// Largest `n <= r_max` with equal kernels on `B(n)`.
pub fn marked_nu(a: &dyn KernelOracle, b: &dyn KernelOracle, r_max: usize) -> Result<Nu> {
    if a.rank() != b.rank() {
        return Err(Error::RankMismatch {
            left: a.rank(),
            right: b.rank(),
        });
    }
    let ball = Ball::enumerate(a.rank(), r_max)?;
    let ma = a.identity_mask(&ball)?;
    let mb = b.identity_mask(&ball)?;
    Ok(nu_from_masks(&ball, &ma, &mb))
}

fn nu_from_masks(ball: &Ball, ma: &[bool], mb: &[bool]) -> Nu {
    match (0..ball.len()).find(|&i| ma[i] != mb[i]) {
        Some(i) => Nu::Exact(ball.get(i).len() - 1),
        None => Nu::AtLeast(ball.radius()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuRow {
    pub n: usize,
    pub name: String,
    pub nu: Nu,
}

/// `nu(O_n, target)` for every oracle of the sequence.
pub fn convergence_table(seq: &[&dyn KernelOracle], target: &dyn KernelOracle, r_max: usize) -> Result<Vec<NuRow>> {
    let ball = Ball::enumerate(target.rank(), r_max)?;
    let mt = target.identity_mask(&ball)?;
    seq.iter()
        .enumerate()
        .map(|(n, o)| {
            if o.rank() != target.rank() {
                return Err(Error::RankMismatch {
                    left: o.rank(),
                    right: target.rank(),
                });
            }
            let mo = o.identity_mask(&ball)?;
            Ok(NuRow {
                n,
                name: o.describe(),
                nu: nu_from_masks(&ball, &mo, &mt),
            })
        })
        .collect()
}

/// Oracle names accepted on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleSpec {
    Az,
    Alt(usize),
    Neumann { offset: usize, len: usize },
    Trivial(usize),
    Free(usize),
}

impl FromStr for OracleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad number {t:?} in oracle {s:?}: {e}")))
        };
        match parts.as_slice() {
            ["az"] => Ok(Self::Az),
            ["alt", r] => Ok(Self::Alt(num(r)?)),
            ["neumann", n, m] => Ok(Self::Neumann {
                offset: num(n)?,
                len: num(m)?,
            }),
            ["trivial", d] => Ok(Self::Trivial(num(d)?)),
            ["free", d] => Ok(Self::Free(num(d)?)),
            _ => Err(Error::Parse(format!(
                "unknown oracle {s:?} (expected az, alt:r, neumann:n:M, trivial:d, free:d)"
            ))),
        }
    }
}

impl OracleSpec {
    pub fn build(&self) -> Result<Box<dyn KernelOracle>> {
        Ok(match *self {
            Self::Az => Box::new(AzGroup),
            Self::Alt(r) => Box::new(alt_oracle(r)?),
            Self::Neumann { offset, len } => Box::new(neumann_truncation(offset, len, &default_r0)?.group),
            Self::Trivial(d) => Box::new(TrivialGroup { rank: d }),
            Self::Free(d) => Box::new(FreeGroup { rank: d }),
        })
    }
}
