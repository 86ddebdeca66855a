//! Stability challenges and the generator distance `d_gen` between finite
//! actions of equal size.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::irs::{ball_perms, FiniteGSet};
use crate::perms::{word_eval, Perm};
use crate::words::{Ball, ReducedWord, WordSet};
use crate::{ratio, Error, Rational, Result};

/// Largest size `d_gen_exact` will enumerate by default (8! bijections).
pub const DEFAULT_EXACT_CAP: usize = 8;

/// Restarts used by `d_gen_bound` callers that have no preference.
pub const DEFAULT_RESTARTS: usize = 8;

/// Two finite actions of the same size; the JSON instance format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FSetPair {
    pub x: FiniteGSet,
    pub y: FiniteGSet,
}

impl FSetPair {
    pub fn new(x: FiniteGSet, y: FiniteGSet) -> Result<Self> {
        check_pair(&x, &y)?;
        Ok(Self { x, y })
    }
}

fn check_pair(x: &FiniteGSet, y: &FiniteGSet) -> Result<()> {
    if x.size() != y.size() {
        return Err(Error::DegreeMismatch {
            left: x.size(),
            right: y.size(),
        });
    }
    if x.rank() != y.rank() {
        return Err(Error::RankMismatch {
            left: x.rank(),
            right: y.rank(),
        });
    }
    Ok(())
}

/// Number of `(s, x)` with `f(s x) != s f(x)`.
fn defect_count(f: &[u32], x: &FiniteGSet, y: &FiniteGSet) -> usize {
    let mut bad = 0;
    for (sx, sy) in x.action().perms().iter().zip(y.action().perms()) {
        for p in 0..f.len() {
            if f[sx.apply(p)] != sy.images()[f[p] as usize] {
                bad += 1;
            }
        }
    }
    bad
}

/// `||f||_gen = (1/|S|) Σ_s Prob_x[f(s x) != s f(x)]`.
pub fn gen_norm(f: &Perm, x: &FiniteGSet, y: &FiniteGSet) -> Result<Rational> {
    check_pair(x, y)?;
    if f.degree() != x.size() {
        return Err(Error::NotBijective(format!(
            "map of degree {} between sets of size {}",
            f.degree(),
            x.size()
        )));
    }
    Ok(ratio(defect_count(f.images(), x, y), x.rank() * x.size()))
}

/// Minimum of `||f||_gen` over all bijections, with a minimizer.
pub fn d_gen_exact(x: &FiniteGSet, y: &FiniteGSet) -> Result<(Rational, Perm)> {
    d_gen_exact_with_cap(x, y, DEFAULT_EXACT_CAP)
}

pub fn d_gen_exact_with_cap(x: &FiniteGSet, y: &FiniteGSet, cap: usize) -> Result<(Rational, Perm)> {
    check_pair(x, y)?;
    let m = x.size();
    if m > cap {
        return Err(Error::Resource(format!(
            "exhaustive d_gen over {m}! bijections exceeds the size cap {cap}; use d_gen_bound"
        )));
    }
    // split on f(0) and search each branch in parallel
    let (best, f) = (0..m as u32)
        .into_par_iter()
        .map(|first| {
            let mut rest: Vec<u32> = (0..m as u32).filter(|&v| v != first).collect();
            let mut best = (usize::MAX, Vec::new());
            let mut f = vec![first];
            permute(&mut rest, 0, &mut f, &mut |f| {
                let c = defect_count(f, x, y);
                if c < best.0 {
                    best = (c, f.to_vec());
                }
            });
            best
        })
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least one point");
    Ok((ratio(best, x.rank() * m), Perm::from_images(f)?))
}

fn permute(rest: &mut [u32], k: usize, prefix: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
    if k == rest.len() {
        visit(prefix);
        return;
    }
    for i in k..rest.len() {
        rest.swap(k, i);
        prefix.push(rest[k]);
        permute(rest, k + 1, prefix, visit);
        prefix.pop();
        rest.swap(k, i);
    }
}

/// Local data of each point: orbit length under every generator and the
/// radius-2 fixer set.
fn signatures(x: &FiniteGSet) -> Result<Vec<Vec<usize>>> {
    let ball = Ball::enumerate(x.rank(), 2)?;
    let perms = ball_perms(x.action(), &ball)?;
    Ok((0..x.size())
        .map(|p| {
            let mut sig: Vec<usize> = x
                .action()
                .perms()
                .iter()
                .map(|s| {
                    let mut len = 1;
                    let mut q = s.apply(p);
                    while q != p {
                        q = s.apply(q);
                        len += 1;
                    }
                    len
                })
                .collect();
            sig.extend(perms.iter().map(|g| usize::from(g.apply(p) == p)));
            sig
        })
        .collect())
}

fn greedy(sx: &[Vec<usize>], sy: &[Vec<usize>], rng: Option<&mut ChaCha8Rng>) -> Vec<u32> {
    let m = sx.len();
    let mut pairs: Vec<(usize, usize, usize)> = Vec::with_capacity(m * m);
    for (i, a) in sx.iter().enumerate() {
        for (j, b) in sy.iter().enumerate() {
            let sim = a.iter().zip(b).filter(|(u, v)| u == v).count();
            pairs.push((sim, i, j));
        }
    }
    if let Some(rng) = rng {
        pairs.shuffle(rng);
        pairs.sort_by_key(|p| std::cmp::Reverse(p.0));
    } else {
        pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    }
    let mut f = vec![u32::MAX; m];
    let mut used = vec![false; m];
    for (_, i, j) in pairs {
        if f[i] == u32::MAX && !used[j] {
            f[i] = j as u32;
            used[j] = true;
        }
    }
    f
}

/// Swaps pairs of images while that strictly lowers the defect.
fn two_swap(f: &mut [u32], x: &FiniteGSet, y: &FiniteGSet) -> usize {
    let mut cost = defect_count(f, x, y);
    loop {
        let mut improved = false;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                f.swap(i, j);
                let c = defect_count(f, x, y);
                if c < cost {
                    cost = c;
                    improved = true;
                } else {
                    f.swap(i, j);
                }
            }
        }
        if !improved {
            return cost;
        }
    }
}

/// Upper bound on `d_gen` with a witnessing bijection: greedy signature
/// matching, then 2-swap descent; each further restart starts from a
/// randomized greedy matching, so more restarts never raise the bound.
pub fn d_gen_bound(x: &FiniteGSet, y: &FiniteGSet, restarts: usize, seed: u64) -> Result<(Rational, Perm)> {
    check_pair(x, y)?;
    let sx = signatures(x)?;
    let sy = signatures(y)?;
    let (best, f) = (0..=restarts as u64)
        .into_par_iter()
        .map(|i| {
            let mut f = if i == 0 {
                greedy(&sx, &sy, None)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                if rng.gen_bool(0.5) {
                    greedy(&sx, &sy, Some(&mut rng))
                } else {
                    let mut f: Vec<u32> = (0..x.size() as u32).collect();
                    f.shuffle(&mut rng);
                    f
                }
            };
            let c = two_swap(&mut f, x, y);
            (c, i, f)
        })
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(c, _, f)| (c, f))
        .expect("at least one start");
    Ok((ratio(best, x.rank() * x.size()), Perm::from_images(f)?))
}

/// For each word, the exact fraction of points it moves.
pub fn challenge_defect(x: &FiniteGSet, words: &WordSet) -> Result<Vec<(ReducedWord, Rational)>> {
    words
        .iter()
        .map(|w| {
            let p = word_eval(w, x.action())?;
            Ok((w.clone(), ratio(p.moved_points(), x.size())))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MGoodReport {
    pub m: usize,
    /// The `d_gen` bound used (exact when the size allows it).
    pub d_gen: String,
    pub d_gen_is_exact: bool,
    pub distance_ok: bool,
    /// Kernel words of length `<= m` that move some point of `Y`.
    pub violations: Vec<String>,
    pub good: bool,
}

/// `d_gen(X, Y) < 1/m` and every kernel word of length `<= m` acts trivially on `Y`.
pub fn is_m_good(x: &FiniteGSet, y: &FiniteGSet, kernel: &WordSet, m: usize, restarts: usize, seed: u64) -> Result<MGoodReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    check_pair(x, y)?;
    let (d, exact) = if x.size() <= DEFAULT_EXACT_CAP {
        (d_gen_exact(x, y)?.0, true)
    } else {
        (d_gen_bound(x, y, restarts, seed)?.0, false)
    };
    let distance_ok = d < ratio(1, m);
    let mut violations = Vec::new();
    for w in kernel.iter().filter(|w| w.len() <= m) {
        if !word_eval(w, y.action())?.is_identity() {
            violations.push(w.to_string());
        }
    }
    let good = distance_ok && violations.is_empty();
    Ok(MGoodReport {
        m,
        d_gen: d.to_string(),
        d_gen_is_exact: exact,
        distance_ok,
        violations,
        good,
    })
}

/// A random action of the given rank on `m` points.
pub fn random_gset(rank: usize, m: usize, rng: &mut impl Rng) -> Result<FiniteGSet> {
    let perms = (0..rank)
        .map(|_| {
            let mut v: Vec<u32> = (0..m as u32).collect();
            v.shuffle(rng);
            Perm::from_images(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiniteGSet::new(crate::perms::GenTuple::new(perms)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perms::GenTuple;
    use num_traits::Zero;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn cycle(k: usize) -> Perm {
        Perm::from_images((0..k as u32).map(|x| (x + 1) % k as u32).collect()).unwrap()
    }

    #[test]
    fn gen_norm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_gset(2, 5, &mut rng).unwrap();
        assert!(gen_norm(&Perm::identity(5), &x, &x).unwrap().is_zero());
        let t = FiniteGSet::trivial(2, 5).unwrap();
        let f = Perm::from_cycles(5, &[vec![0, 3, 1]]).unwrap();
        assert!(gen_norm(&f, &t, &t).unwrap().is_zero());
        // a = 5-cycle, b = transposition against the trivial action
        let c = FiniteGSet::new(GenTuple::new(vec![cycle(5), Perm::from_cycles(5, &[vec![0, 1]]).unwrap()]).unwrap());
        let expected = (q(5, 5) + q(2, 5)) / q(2, 1);
        assert_eq!(gen_norm(&f, &c, &t).unwrap(), expected);
        assert!(gen_norm(&Perm::identity(4), &c, &t).is_err());
    }

    #[test]
    fn gen_norm_zero_iff_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_gset(2, 6, &mut rng).unwrap();
        let mut v: Vec<u32> = (0..6).collect();
        v.shuffle(&mut rng);
        let rho = Perm::from_images(v).unwrap();
        let y = x.relabel(&rho).unwrap();
        // rho intertwines x with its relabeling
        assert!(gen_norm(&rho, &x, &y).unwrap().is_zero());
        assert!(d_gen_exact(&x, &y).unwrap().0.is_zero());
    }

    #[test]
    fn exact_examples() {
        let t1 = FiniteGSet::trivial(2, 1).unwrap();
        assert!(d_gen_exact(&t1, &t1).unwrap().0.is_zero());
        let big = FiniteGSet::trivial(2, 9).unwrap();
        assert!(matches!(d_gen_exact(&big, &big), Err(Error::Resource(_))));
        assert!(d_gen_exact_with_cap(&big, &big, 9).unwrap().0.is_zero());
        let t2 = FiniteGSet::trivial(2, 2).unwrap();
        assert!(d_gen_exact(&t1, &t2).is_err());
        let sw = FiniteGSet::new(GenTuple::new(vec![cycle(2), cycle(2)]).unwrap());
        assert_eq!(d_gen_exact(&sw, &t2).unwrap().0, q(1, 1));
    }

    #[test]
    fn exact_below_any_map_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = random_gset(2, 6, &mut rng).unwrap();
            let y = random_gset(2, 6, &mut rng).unwrap();
            let (d, f) = d_gen_exact(&x, &y).unwrap();
            assert_eq!(gen_norm(&f, &x, &y).unwrap(), d);
            assert_eq!(d_gen_exact(&y, &x).unwrap().0, d);
            let mut v: Vec<u32> = (0..6).collect();
            v.shuffle(&mut rng);
            assert!(d <= gen_norm(&Perm::from_images(v).unwrap(), &x, &y).unwrap());
            let (b, g) = d_gen_bound(&x, &y, 4, 9).unwrap();
            assert!(b >= d);
            assert_eq!(gen_norm(&g, &x, &y).unwrap(), b);
        }
    }

    #[test]
    fn bound_monotone_in_restarts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_gset(2, 10, &mut rng).unwrap();
        let y = random_gset(2, 10, &mut rng).unwrap();
        let mut prev = d_gen_bound(&x, &y, 0, 17).unwrap().0;
        for r in 1..8 {
            let b = d_gen_bound(&x, &y, r, 17).unwrap().0;
            assert!(b <= prev);
            prev = b;
        }
        assert!(d_gen_bound(&x, &x, 0, 0).unwrap().0.is_zero());
    }

    #[test]
    fn defect_examples() {
        let x = FiniteGSet::new(crate::perms::alt_marking(2).unwrap());
        let e = WordSet::new(5, [ReducedWord::identity(2)]).unwrap();
        assert!(challenge_defect(&x, &e).unwrap().iter().all(|(_, d)| d.is_zero()));
        let a5 = ReducedWord::parse(2, "aaaaa").unwrap();
        let a = ReducedWord::parse(2, "a").unwrap();
        let r = WordSet::new(5, [a5.clone(), a]).unwrap();
        let d = challenge_defect(&x, &r).unwrap();
        assert!(d.iter().any(|(w, v)| *w == a5 && v.is_zero()));
        assert!(d.iter().any(|(w, v)| w.len() == 1 && *v == q(1, 1)));
        let t = FiniteGSet::trivial(2, 4).unwrap();
        assert!(challenge_defect(&t, &r).unwrap().iter().all(|(_, d)| d.is_zero()));
    }

    #[test]
    fn m_good_examples() {
        let t = FiniteGSet::trivial(2, 3).unwrap();
        let kernel = WordSet::new(2, [ReducedWord::identity(2)]).unwrap();
        assert!(is_m_good(&t, &t, &kernel, 1, 0, 0).unwrap().good);
        let x = FiniteGSet::new(GenTuple::new(vec![cycle(3), Perm::identity(3)]).unwrap());
        let kernel = WordSet::new(1, [ReducedWord::identity(2), ReducedWord::parse(2, "a").unwrap(), ReducedWord::parse(2, "A").unwrap()]).unwrap();
        let rep = is_m_good(&x, &x, &kernel, 1, 0, 0).unwrap();
        assert!(!rep.good);
        assert_eq!(rep.violations, vec!["a".to_string(), "A".to_string()]);
        // d_gen exactly 1/2 with m = 2 is not good
        let t2 = FiniteGSet::trivial(2, 2).unwrap();
        let half = FiniteGSet::new(GenTuple::new(vec![cycle(2), Perm::identity(2)]).unwrap());
        assert_eq!(d_gen_exact(&half, &t2).unwrap().0, q(1, 2));
        let rep = is_m_good(&half, &t2, &WordSet::empty(2), 2, 0, 0).unwrap();
        assert!(!rep.distance_ok && !rep.good);
        assert!(is_m_good(&half, &t2, &WordSet::empty(2), 1, 0, 0).unwrap().good);
    }

    #[test]
    fn instance_json() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = FSetPair::new(random_gset(2, 4, &mut rng).unwrap(), random_gset(2, 4, &mut rng).unwrap()).unwrap();
        let s = serde_json::to_string(&pair).unwrap();
        assert_eq!(serde_json::from_str::<FSetPair>(&s).unwrap(), pair);
        assert!(FSetPair::new(FiniteGSet::trivial(2, 2).unwrap(), FiniteGSet::trivial(2, 3).unwrap()).is_err());
    }
}
