//! Stabilizer IRS of random colorings.
//!
//! A group element `g` fixes a coloring `c` iff `c ∘ g⁻¹ = c`, i.e.
//! `c(g(x)) = c(x)` for every point `x`. Colors are i.i.d. with law `alpha`.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use num_traits::{One, Signed, Zero};

use super::{ball_perms, sample_irs, EmpiricalIrs, Fingerprint};
use crate::marked::{AzElement, AzGroup, MarkedGroup};
use crate::perms::alt_marking_any;
use crate::words::{Ball, WordSet};
use crate::{rational_to_f64, Error, Rational, Result};

/// A probability vector on colors `0..k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorDistribution {
    weights: Vec<Rational>,
}

impl ColorDistribution {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(Signed::is_negative) {
            return Err(Error::InvalidArgument("color weights must be nonnegative and nonempty".into()));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!("color weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("need at least one color".into()));
        }
        Self::new(vec![Rational::new(1.into(), k.into()); k])
    }

    pub fn colors(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// A single color carries all the mass.
    pub fn is_degenerate(&self) -> bool {
        self.weights.iter().filter(|w| !w.is_zero()).count() == 1
    }
}

/// Which action the colorings live on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VershikTarget {
    /// `A(Z)` acting on `Z`; colorings are inspected on `[-window, window]`.
    Az { window: usize },
    /// `Alt([[n]])` with its marking acting on `2n + 1` points.
    Alt(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VershikMode {
    /// Enumerate every coloring of the relevant points, at most `cap` of them.
    Exact { cap: usize },
    Sampled { n: u64, seed: u64 },
}

/// How a ball element decides fixation.
enum Fixation {
    /// `c(y) = c(x)` for every pair.
    Pairs(Vec<(usize, usize)>),
    Always,
    Never,
}

impl Fixation {
    fn holds(&self, c: &[u8]) -> bool {
        match self {
            Fixation::Pairs(p) => p.iter().all(|&(x, y)| c[x] == c[y]),
            Fixation::Always => true,
            Fixation::Never => false,
        }
    }
}

/// Fixation rules per ball word, over the points `0..points`.
fn fixation_rules(target: VershikTarget, alpha: &ColorDistribution, ball: &Ball) -> Result<(Vec<Fixation>, usize)> {
    match target {
        VershikTarget::Alt(n) => {
            if n == 0 {
                return Err(Error::InvalidArgument("alt target needs n >= 1".into()));
            }
            let perms = ball_perms(&alt_marking_any(n), ball)?;
            let rules = perms
                .iter()
                .map(|p| {
                    Fixation::Pairs(
                        (0..p.degree())
                            .filter(|&x| p.apply(x) != x)
                            .map(|x| (x, p.apply(x)))
                            .collect(),
                    )
                })
                .collect();
            Ok((rules, 2 * n + 1))
        }
        VershikTarget::Az { window } => {
            let az = AzGroup;
            let elements = ball.evaluate_all(AzElement::identity(), |g, l| g.mul(&az.letter(l)));
            let needed = elements
                .iter()
                .filter(|g| g.shift() == 0)
                .map(AzElement::support_radius)
                .max()
                .unwrap_or(0);
            if (window as i64) < needed {
                return Err(Error::InvalidArgument(format!(
                    "window {window} is smaller than the support radius {needed} of the radius-{} ball",
                    ball.radius()
                )));
            }
            let w = window as i64;
            let rules = elements
                .iter()
                .map(|g| {
                    if g.shift() != 0 {
                        // an i.i.d. coloring of Z is almost surely not periodic
                        if alpha.is_degenerate() {
                            Fixation::Always
                        } else {
                            Fixation::Never
                        }
                    } else {
                        Fixation::Pairs(
                            g.sigma()
                                .iter()
                                .map(|(&x, &y)| ((x + w) as usize, (y + w) as usize))
                                .collect(),
                        )
                    }
                })
                .collect();
            Ok((rules, 2 * window + 1))
        }
    }
}

/// The radius-`r` marginal of the coloring stabilizer IRS.
pub fn vershik_irs(alpha: &ColorDistribution, target: VershikTarget, mode: VershikMode, radius: usize) -> Result<EmpiricalIrs> {
    if alpha.colors() > u8::MAX as usize {
        return Err(Error::InvalidArgument("at most 255 colors".into()));
    }
    let ball = Ball::enumerate(2, radius)?;
    let (rules, points) = fixation_rules(target, alpha, &ball)?;
    // only points some rule looks at matter
    let relevant: Vec<usize> = rules
        .iter()
        .filter_map(|r| match r {
            Fixation::Pairs(p) => Some(p.iter().flat_map(|&(x, y)| [x, y])),
            _ => None,
        })
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    match mode {
        VershikMode::Exact { cap } => exact(alpha, &ball, &rules, points, &relevant, cap),
        VershikMode::Sampled { n, seed } => {
            let dist = WeightedIndex::new(alpha.weights().iter().map(rational_to_f64))
                .map_err(|e| Error::InvalidArgument(format!("color weights: {e}")))?;
            sample_irs(
                &ball,
                n,
                seed,
                |rng| {
                    let mut c = vec![0u8; points];
                    for &x in &relevant {
                        c[x] = dist.sample(rng) as u8;
                    }
                    Ok(c)
                },
                |w, c| rules[w].holds(c),
            )
        }
    }
}

fn exact(
    alpha: &ColorDistribution,
    ball: &Ball,
    rules: &[Fixation],
    points: usize,
    relevant: &[usize],
    cap: usize,
) -> Result<EmpiricalIrs> {
    let k = alpha.colors();
    let total = (k as u128).checked_pow(relevant.len() as u32);
    if total.is_none_or(|t| t > cap as u128) {
        return Err(Error::Resource(format!(
            "{k}^{} colorings exceed the cap {cap}",
            relevant.len()
        )));
    }
    let mut masses: BTreeMap<Fingerprint, Rational> = BTreeMap::new();
    let mut digits = vec![0usize; relevant.len()];
    let mut c = vec![0u8; points];
    loop {
        let mut weight = Rational::one();
        for (d, &x) in digits.iter().zip(relevant) {
            c[x] = *d as u8;
            weight *= &alpha.weights()[*d];
        }
        if !weight.is_zero() {
            let mask: Vec<bool> = rules.iter().map(|r| r.holds(&c)).collect();
            *masses
                .entry(WordSet::from_mask(ball, &mask))
                .or_insert_with(Rational::zero) += weight;
        }
        // odometer step
        let mut i = 0;
        while i < digits.len() && digits[i] + 1 == k {
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
        digits[i] += 1;
    }
    EmpiricalIrs::exact(ball.radius(), masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irs::{irs_distance, is_valid_fingerprint};
    use crate::perms::Perm;
    use crate::words::ReducedWord;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(2, s).unwrap()
    }

    const EXACT: VershikMode = VershikMode::Exact { cap: 1 << 20 };

    #[test]
    fn single_color_is_full_ball() {
        let one = ColorDistribution::uniform(1).unwrap();
        for target in [VershikTarget::Az { window: 3 }, VershikTarget::Alt(3)] {
            let i = vershik_irs(&one, target, EXACT, 2).unwrap();
            assert_eq!(i.len(), 1);
            assert_eq!(i.fingerprints()[0].len(), 17);
        }
    }

    #[test]
    fn alt1_matches_enumeration() {
        // α₁ = (0 1 2), β₁ = (0 1 2) as well: both generators act as the same 3-cycle
        let two = ColorDistribution::uniform(2).unwrap();
        let i = vershik_irs(&two, VershikTarget::Alt(1), EXACT, 1).unwrap();
        let cyc = Perm::from_cycles(3, &[vec![0, 1, 2]]).unwrap();
        let mut expected: BTreeMap<Fingerprint, Rational> = BTreeMap::new();
        let ball = Ball::enumerate(2, 1).unwrap();
        for bits in 0..8u32 {
            let c: Vec<u32> = (0..3).map(|x| (bits >> x) & 1).collect();
            let fixed = (0..3).all(|x| c[cyc.apply(x)] == c[x]);
            let mask: Vec<bool> = (0..ball.len()).map(|j| j == 0 || fixed).collect();
            *expected.entry(WordSet::from_mask(&ball, &mask)).or_insert_with(Rational::zero) += q(1, 8);
        }
        assert_eq!(i.exact_masses().unwrap(), &expected);
    }

    #[test]
    fn az_radius_two_exact() {
        let two = ColorDistribution::uniform(2).unwrap();
        let i = vershik_irs(&two, VershikTarget::Az { window: 2 }, EXACT, 2).unwrap();
        let m = i.exact_masses().unwrap();
        assert_eq!(m.len(), 2);
        let trivial = WordSet::new(2, [ReducedWord::identity(2)]).unwrap();
        assert_eq!(m[&trivial], q(3, 4));
        let fixed = WordSet::new(2, ["e", "b", "B", "bb", "BB"].map(w)).unwrap();
        assert_eq!(m[&fixed], q(1, 4));
    }

    #[test]
    fn az_shift_words_never_fix() {
        let three = ColorDistribution::new(vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let i = vershik_irs(&three, VershikTarget::Az { window: 4 }, VershikMode::Sampled { n: 2000, seed: 5 }, 3).unwrap();
        let az = AzGroup;
        for f in i.fingerprints() {
            assert!(is_valid_fingerprint(f));
            for word in f.iter() {
                assert_eq!(az.evaluate(word).unwrap().shift(), 0, "{word}");
            }
        }
    }

    #[test]
    fn window_validity() {
        let two = ColorDistribution::uniform(2).unwrap();
        assert!(vershik_irs(&two, VershikTarget::Az { window: 1 }, EXACT, 3).is_err());
        assert!(vershik_irs(&two, VershikTarget::Az { window: 3 }, EXACT, 3).is_ok());
        // a larger window does not change the answer
        let a = vershik_irs(&two, VershikTarget::Az { window: 3 }, EXACT, 3).unwrap();
        let b = vershik_irs(&two, VershikTarget::Az { window: 6 }, EXACT, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_agrees_with_exact() {
        let two = ColorDistribution::uniform(2).unwrap();
        let exact = vershik_irs(&two, VershikTarget::Alt(3), EXACT, 2).unwrap();
        let sampled = vershik_irs(&two, VershikTarget::Alt(3), VershikMode::Sampled { n: 20_000, seed: 1 }, 2).unwrap();
        assert_eq!(sampled.n_samples(), Some(20_000));
        assert!(irs_distance(&exact, &sampled).unwrap() < 0.03);
        let again = vershik_irs(&two, VershikTarget::Alt(3), VershikMode::Sampled { n: 20_000, seed: 1 }, 2).unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn sampled_one_draw() {
        let two = ColorDistribution::uniform(2).unwrap();
        let i = vershik_irs(&two, VershikTarget::Az { window: 2 }, VershikMode::Sampled { n: 1, seed: 0 }, 2).unwrap();
        assert_eq!(i.len(), 1);
    }

    #[test]
    fn exact_cap_enforced() {
        let two = ColorDistribution::uniform(2).unwrap();
        assert!(matches!(
            vershik_irs(&two, VershikTarget::Alt(10), VershikMode::Exact { cap: 1000 }, 1),
            Err(Error::Resource(_))
        ));
        assert!(ColorDistribution::new(vec![q(1, 2)]).is_err());
    }
}
