//! The unique invariant measure through block frequencies.
//!
//! The frequencies of length-`n` words form the normalized Perron vector of
//! the `n`-block substitution: a word `w` maps to the `|σ(w_0)|` factors of
//! length `n` of `σ(w)` that start inside `σ(w_0)`.

use std::sync::Arc;

use super::{ClopenSet, Subshift};
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 100_000;
const CONVERGED: f64 = 1e-15;
// accepted when rounding noise keeps the step above CONVERGED
const ACCEPTABLE: f64 = 1e-12;

impl Subshift {
    /// Frequencies of `language(n)`, in the same order.
    pub fn frequencies(&self, n: usize) -> Result<Arc<Vec<f64>>> {
        if let Some(f) = self.frequencies.read().expect("lock").get(&n) {
            return Ok(f.clone());
        }
        let f = Arc::new(self.compute_frequencies(n)?);
        self.frequencies.write().expect("lock").insert(n, f.clone());
        Ok(f)
    }

    fn compute_frequencies(&self, n: usize) -> Result<Vec<f64>> {
        let words = self.language(n)?;
        if n == 0 {
            return Ok(vec![1.0]);
        }
        // column j lists the row of every block in the image of word j
        let mut columns: Vec<Vec<usize>> = Vec::with_capacity(words.len());
        for w in words.iter() {
            let image = self.sub.apply(w);
            let starts = self.sub.image(w[0]).len();
            let rows = (0..starts)
                .map(|i| {
                    self.word_index(&image[i..i + n])?
                        .ok_or_else(|| Error::InvalidArgument("block image left the language".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            columns.push(rows);
        }
        // power iteration on I + M, which is primitive with the same Perron vector
        let k = words.len();
        let mut v = vec![1.0 / k as f64; k];
        let mut delta = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let mut next = v.clone();
            for (j, rows) in columns.iter().enumerate() {
                for &i in rows {
                    next[i] += v[j];
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            if delta < CONVERGED {
                return Ok(v);
            }
        }
        if delta < ACCEPTABLE {
            return Ok(v);
        }
        Err(Error::Resource(format!("frequencies of length {n} did not converge")))
    }

    /// Frequency of a single admissible word (0 for inadmissible words).
    pub fn frequency(&self, w: &[u8]) -> Result<f64> {
        Ok(match self.word_index(w)? {
            Some(i) => self.frequencies(w.len())?[i],
            None => 0.0,
        })
    }

    /// `ν(C)`, accurate to [`Subshift::tolerance`].
    pub fn measure(&self, c: &ClopenSet) -> Result<f64> {
        let n = 2 * c.resolution() + 1;
        let words = self.language(n)?;
        let freq = self.frequencies(n)?;
        let mut total = 0.0;
        for m in c.members() {
            let i = words
                .binary_search(m)
                .map_err(|_| Error::InvalidArgument("clopen member is not admissible".into()))?;
            total += freq[i];
        }
        Ok(total)
    }

    /// Normalized Perron vector of the incidence matrix, by power iteration.
    pub fn letter_perron_vector(&self) -> Vec<f64> {
        let m = self.sub.incidence_matrix();
        let k = m.len();
        let mut v = vec![1.0 / k as f64; k];
        for _ in 0..MAX_ITERATIONS {
            let mut next: Vec<f64> = (0..k)
                .map(|i| v[i] + (0..k).map(|j| m[i][j] as f64 * v[j]).sum::<f64>())
                .collect();
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            if delta < CONVERGED {
                break;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::super::Substitution;
    use super::*;

    fn empirical(sub: &Substitution, w: &[u8]) -> f64 {
        let mut s = sub.iterate(b"a", 1);
        while s.len() < 400_000 {
            s = sub.apply(&s);
        }
        let hits = s.windows(w.len()).filter(|v| *v == w).count();
        hits as f64 / (s.len() - w.len() + 1) as f64
    }

    #[test]
    fn fibonacci_letter_frequency() {
        let x = Subshift::new(Substitution::fibonacci()).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let a = ClopenSet::cylinder(&x, b"a", 0).unwrap();
        assert!((x.measure(&a).unwrap() - golden).abs() < 1e-12);
        let p = x.letter_perron_vector();
        assert!((p[0] - golden).abs() < 1e-12);
        assert!((x.measure(&ClopenSet::full(&x)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(x.measure(&ClopenSet::empty()).unwrap(), 0.0);
    }

    #[test]
    fn letters_match_perron() {
        for sub in [Substitution::fibonacci(), Substitution::thue_morse(), Substitution::chacon()] {
            let x = Subshift::new(sub).unwrap();
            let f = x.frequencies(1).unwrap();
            let p = x.letter_perron_vector();
            for (a, b) in f.iter().zip(&p) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blocks_match_empirical_counts() {
        for sub in [Substitution::fibonacci(), Substitution::thue_morse(), Substitution::chacon()] {
            let x = Subshift::new(sub.clone()).unwrap();
            for n in [2usize, 3, 5] {
                for (w, f) in x.language(n).unwrap().iter().zip(x.frequencies(n).unwrap().iter()) {
                    assert!((empirical(&sub, w) - f).abs() < 2e-3, "{sub} {w:?}");
                    assert!(*f > 0.0);
                }
            }
        }
    }

    #[test]
    fn marginals_consistent() {
        for sub in [Substitution::fibonacci(), Substitution::thue_morse(), Substitution::chacon()] {
            let x = Subshift::new(sub).unwrap();
            for n in 1..12 {
                let l = x.language(n).unwrap();
                let f = x.frequencies(n).unwrap();
                let l1 = x.language(n + 1).unwrap();
                let f1 = x.frequencies(n + 1).unwrap();
                for (w, fw) in l.iter().zip(f.iter()) {
                    let right: f64 = l1.iter().zip(f1.iter()).filter(|(v, _)| v.starts_with(w)).map(|(_, g)| g).sum();
                    let left: f64 = l1.iter().zip(f1.iter()).filter(|(v, _)| v.ends_with(w)).map(|(_, g)| g).sum();
                    assert!((right - fw).abs() < 1e-12);
                    assert!((left - fw).abs() < 1e-12);
                }
            }
        }
    }
}
