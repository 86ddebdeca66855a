use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::EmpiricalIrs;
use crate::words::{Ball, WordSet};
use crate::{Error, Result};

/// Number of independent random streams a sampling run is split across.
/// Sample `i` is drawn from stream `i mod SAMPLE_STREAMS`, so results do not
/// depend on the thread count.
pub const SAMPLE_STREAMS: u64 = 64;

struct StreamTally {
    counts: HashMap<Vec<bool>, u64>,
    failure: Option<(u64, String)>,
}

/// Empirical stabilizer IRS: draws `n` points with `sampler` and records
/// `{ w in ball : fixes(index of w, point) }` for each.
pub fn sample_irs<P, S, F>(ball: &Ball, n: u64, seed: u64, sampler: S, fixes: F) -> Result<EmpiricalIrs>
where
    S: Fn(&mut ChaCha8Rng) -> Result<P> + Sync,
    F: Fn(usize, &P) -> bool + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("sample count N must be at least 1".into()));
    }
    let streams = SAMPLE_STREAMS.min(n);
    let tallies: Vec<StreamTally> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let mut tally = StreamTally {
                counts: HashMap::new(),
                failure: None,
            };
            let mut i = s;
            while i < n {
                match sampler(&mut rng) {
                    Ok(p) => {
                        let mask: Vec<bool> = (0..ball.len()).map(|w| fixes(w, &p)).collect();
                        *tally.counts.entry(mask).or_default() += 1;
                    }
                    Err(e) => {
                        tally.failure = Some((i, e.to_string()));
                        break;
                    }
                }
                i += streams;
            }
            tally
        })
        .collect();
    if let Some((index, message)) = tallies.iter().filter_map(|t| t.failure.clone()).min_by_key(|f| f.0) {
        return Err(Error::Sampler { index, message });
    }
    let mut counts: BTreeMap<WordSet, u64> = BTreeMap::new();
    for t in tallies {
        for (mask, c) in t.counts {
            *counts.entry(WordSet::from_mask(ball, &mask)).or_default() += c;
        }
    }
    EmpiricalIrs::sampled(ball.radius(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irs::{ball_perms, irs_of_gset, irs_distance, FiniteGSet};
    use crate::perms::alt_marking;
    use rand::Rng;

    #[test]
    fn single_sample_is_a_point_mass() {
        let ball = Ball::enumerate(2, 2).unwrap();
        let i = sample_irs(&ball, 1, 7, |_| Ok(()), |_, _| true).unwrap();
        assert_eq!(i.len(), 1);
        assert_eq!(i.n_samples(), Some(1));
        assert_eq!(i.mass(i.fingerprints()[0]), 1.0);
    }

    #[test]
    fn deterministic_sampler_matches_exact() {
        // cycling through every point exactly once reproduces the exact IRS
        let t = alt_marking(2).unwrap();
        let ball = Ball::enumerate(2, 2).unwrap();
        let perms = ball_perms(&t, &ball).unwrap();
        let counter = std::sync::atomic::AtomicUsize::new(0);
        let draws = 5 * 64;
        let sampled = sample_irs(
            &ball,
            draws,
            0,
            |_| Ok(counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) % 5),
            |w, &x| perms[w].apply(x) == x,
        )
        .unwrap();
        let exact = irs_of_gset(&FiniteGSet::new(t), 2).unwrap();
        assert_eq!(irs_distance(&sampled, &exact).unwrap(), 0.0);
    }

    #[test]
    fn reproducible_and_failures_named() {
        let ball = Ball::enumerate(2, 1).unwrap();
        let run = |seed| {
            sample_irs(&ball, 1000, seed, |rng| Ok(rng.gen::<bool>()), |w, &p| w == 0 || p).unwrap()
        };
        assert_eq!(run(3), run(3));
        let err = sample_irs(
            &ball,
            500,
            1,
            |rng| if rng.gen_range(0..100) == 0 { Err(Error::Parse("boom".into())) } else { Ok(()) },
            |_, _| true,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Sampler { .. }));
        assert!(sample_irs(&ball, 0, 1, |_| Ok(()), |_, _| true).is_err());
    }

    #[test]
    fn standard_errors_reported() {
        let ball = Ball::enumerate(1, 1).unwrap();
        let i = sample_irs(&ball, 10_000, 11, |rng| Ok(rng.gen::<bool>()), |w, &p| w == 0 || p).unwrap();
        for w in i.fingerprints() {
            let p = i.mass(w);
            assert!((p - 0.5).abs() < 0.03);
            let se = i.stderr(w).unwrap();
            assert!((se - (p * (1.0 - p) / 10_000.0).sqrt()).abs() < 1e-15);
        }
    }
}
