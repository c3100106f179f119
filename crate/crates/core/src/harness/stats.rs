use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Hypergeometric, Normal};

use crate::error::{Error, Result};

/// Nearest-rank quantile of sorted data: the `ceil(q k)`-th smallest value.
pub fn quantile(sorted: &[u64], q: f64) -> u64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QuerySummary {
    pub p50: u64,
    pub p90: u64,
    pub max: u64,
}

pub fn summarize(values: &[u64]) -> QuerySummary {
    let mut v = values.to_vec();
    v.sort_unstable();
    QuerySummary { p50: quantile(&v, 0.5), p90: quantile(&v, 0.9), max: *v.last().expect("nonempty") }
}

/// Two-sided normal quantile for confidence `level`.
pub fn z_score(level: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + level / 2.0)
}

/// Wilson score interval for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64, level: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z = z_score(level);
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Tail statistics of `|S ∩ T|` at one threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub threshold: u64,
    pub hits: u64,
    pub frequency: f64,
    pub upper99: f64,
    /// `Pr[|S ∩ T| >= threshold]` under the hypergeometric law.
    pub exact: f64,
    /// `(e alpha / t)^t`, or 1 when `t <= alpha`.
    pub chernoff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub n: u64,
    pub k: u64,
    pub l: u64,
    pub trials: u64,
    pub alpha: f64,
    pub mean: f64,
    pub tails: Vec<TailRow>,
}

impl OverlapReport {
    pub fn tail(&self, threshold: u64) -> Option<&TailRow> {
        self.tails.iter().find(|t| t.threshold == threshold)
    }

    pub fn pass(&self) -> bool {
        self.tails.iter().all(|t| t.pass)
    }
}

/// `Pr[X >= t]` for `X` hypergeometric: population `n`, `k` marked, `l` draws.
pub fn hypergeometric_tail(n: u64, k: u64, l: u64, t: u64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    let h = Hypergeometric::new(n, k, l).expect("valid hypergeometric parameters");
    h.sf(t - 1)
}

fn chernoff(alpha: f64, t: f64) -> f64 {
    if t <= alpha {
        1.0
    } else {
        (std::f64::consts::E * alpha / t).powf(t).min(1.0)
    }
}

/// Sample uniform `S, T ⊆ [n]` of sizes `k, l` and record `|S ∩ T|`.
///
/// By symmetry `S` is fixed to `{0, …, k-1}`. Thresholds are `4 alpha` and
/// `8 alpha` rounded up, `alpha = k l / n`; a threshold passes when the 99%
/// Wilson upper bound on its tail frequency stays below the Chernoff bound.
pub fn overlap_check(n: u64, k: u64, l: u64, trials: u64, seed: u64) -> Result<OverlapReport> {
    if k > n || l > n || n == 0 || trials == 0 {
        return Err(Error::InvalidParameter(format!("overlap_check needs k,l <= n, got n={n} k={k} l={l}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = (k * l) as f64 / n as f64;
    let thresholds: Vec<u64> = [4.0 * alpha, 8.0 * alpha].iter().map(|t| t.ceil().max(1.0) as u64).collect();
    let mut hits = vec![0u64; thresholds.len()];
    let mut total = 0u64;
    for _ in 0..trials {
        let c = overlap_once(n, k, l, &mut rng);
        total += c;
        for (h, &t) in hits.iter_mut().zip(&thresholds) {
            *h += (c >= t) as u64;
        }
    }
    let tails = thresholds
        .iter()
        .zip(&hits)
        .map(|(&t, &h)| {
            let upper99 = wilson_interval(h, trials, 0.99).1;
            let bound = chernoff(alpha, t as f64);
            TailRow {
                threshold: t,
                hits: h,
                frequency: h as f64 / trials as f64,
                upper99,
                exact: hypergeometric_tail(n, k, l, t),
                chernoff: bound,
                pass: upper99 <= bound,
            }
        })
        .collect();
    Ok(OverlapReport { n, k, l, trials, alpha, mean: total as f64 / trials as f64, tails })
}

fn overlap_once<R: Rng + ?Sized>(n: u64, k: u64, l: u64, rng: &mut R) -> u64 {
    sample(rng, n as usize, l as usize).iter().filter(|&x| (x as u64) < k).count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
        assert_eq!(quantile(&v, 0.5), 5);
        assert_eq!(quantile(&v, 0.9), 9);
        assert_eq!(quantile(&[7], 0.9), 7);
        let s = summarize(&[5, 1, 3]);
        assert_eq!((s.p50, s.p90, s.max), (3, 5, 5));
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 0.99);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 100, 0.99).0, 0.0);
    }

    #[test]
    fn overlap_trivial_cases() {
        let r = overlap_check(20, 20, 20, 50, 1).unwrap();
        assert_eq!(r.mean, 20.0);
        assert!((hypergeometric_tail(50, 1, 1, 1) - 1.0 / 50.0).abs() < 1e-12);
        assert!(overlap_check(5, 6, 1, 10, 0).is_err());
    }
}
