//! Persistence checking and the preprocessing pipeline that strips
//! variables with many bichromatic half-flips, plus the samplers built on it.
//!
//! Draw order per persistence round is fixed: the random point, then one
//! fair coin choosing between sizes `floor(|S|/2)` and `floor(|S|/2)+1`, then
//! the positions of `T` inside the current ordering. Sampling positions
//! (rather than names) keeps runs on `S` and on `Sub(S, i)` aligned when they
//! share a random stream.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hypercube::{Ordering, Point, VarSet};
use crate::oracle::OracleHandle;
use crate::search::{binary_search, binary_search_bound, PathEdge};
use crate::util::{ceil_log2_clamped, loop_count};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessParams {
    pub xi: f64,
    pub round_multiplier: f64,
}

impl PreprocessParams {
    pub fn new(xi: f64) -> Result<PreprocessParams> {
        PreprocessParams { xi, round_multiplier: 1.0 }.validated()
    }

    pub fn validated(self) -> Result<PreprocessParams> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidParameter(format!("xi={} must lie in (0,1)", self.xi)));
        }
        if !(self.round_multiplier > 0.0 && self.round_multiplier.is_finite()) {
            return Err(Error::InvalidParameter("round multiplier must be positive".into()));
        }
        Ok(self)
    }

    /// Rounds per persistence check: `ceil(mult * max(ceil(log2 n),1)^4 / xi)`.
    pub fn rounds(&self, n: usize) -> u64 {
        let l = ceil_log2_clamped(n) as f64;
        loop_count(self.round_multiplier * l.powi(4) / self.xi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessOutcome {
    pub initial: VarSet,
    pub survivors: VarSet,
    /// Ordering of the survivors inherited from the initial ordering.
    pub ordering: Ordering,
    /// Removed variables in removal order, each with the edge that exposed it.
    pub removals: Vec<PathEdge>,
}

/// Query bound of a single [`check_persistence`] call on a set of size `len`.
pub fn check_persistence_bound(n: usize, len: usize, params: &PreprocessParams) -> u64 {
    params.rounds(n).saturating_mul(binary_search_bound(len))
}

/// Query bound of [`preprocess`] started from a set of size `len`.
pub fn preprocess_bound(n: usize, len: usize, params: &PreprocessParams) -> u64 {
    (len as u64).saturating_mul(check_persistence_bound(n, len, params))
}

/// Look for a variable of `pi`'s domain whose half-size flips change `f`.
/// Returns the first hit together with the bichromatic edge found.
pub fn check_persistence<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    pi: &Ordering,
    params: &PreprocessParams,
    rng: &mut R,
) -> Result<Option<PathEdge>> {
    let len = pi.len();
    if len == 0 {
        return Err(Error::EmptySet);
    }
    let n = h.n();
    for _ in 0..params.rounds(n) {
        let x = Point::random(n, rng);
        let size = len / 2 + rng.random_bool(0.5) as usize;
        let mut positions = sample(rng, len, size).into_vec();
        if positions.is_empty() {
            continue;
        }
        positions.sort_unstable();
        let tau = pi.select_positions(&positions);
        if let Some(hit) = binary_search(h, &x, &tau)? {
            return Ok(Some(hit));
        }
    }
    Ok(None)
}

/// Repeatedly check persistence, dropping each variable found, until a check
/// comes back empty or nothing is left.
pub fn preprocess<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    pi: &Ordering,
    params: &PreprocessParams,
    rng: &mut R,
) -> Result<PreprocessOutcome> {
    if pi.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut tau = pi.clone();
    let mut removals = Vec::new();
    while !tau.is_empty() {
        match check_persistence(h, &tau, params, rng)? {
            Some(hit) => {
                tau = tau.remove(hit.variable);
                removals.push(hit);
            }
            None => break,
        }
    }
    Ok(PreprocessOutcome {
        initial: pi.over().clone(),
        survivors: tau.over().clone(),
        ordering: tau,
        removals,
    })
}

fn draw_initial<R: Rng + ?Sized>(
    n: usize,
    pool: &[usize],
    forced: Option<usize>,
    m: usize,
    rng: &mut R,
) -> Result<VarSet> {
    let need = m - forced.is_some() as usize;
    if need > pool.len() {
        return Err(Error::InvalidParameter(format!("m={m} exceeds the available pool")));
    }
    let picks = sample(rng, pool.len(), need);
    VarSet::new(n, forced.into_iter().chain(picks.iter().map(|k| pool[k])))
}

/// Draw `S0 ⊆ pool` of size `m` uniformly (plus `forced`, counted in `m`),
/// a uniform ordering of it, and preprocess.
pub fn sample_preprocessed<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    pool: &[usize],
    forced: Option<usize>,
    m: usize,
    params: &PreprocessParams,
    rng: &mut R,
) -> Result<PreprocessOutcome> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let s0 = draw_initial(h.n(), pool, forced, m, rng)?;
    let pi = Ordering::random(&s0, rng);
    preprocess(h, &pi, params, rng)
}

fn check_m(n: usize, m: usize, max: usize) -> Result<()> {
    if m == 0 || m > max {
        return Err(Error::InvalidParameter(format!("m={m} out of range 1..={max} for n={n}")));
    }
    Ok(())
}

/// `S ~ D_{xi,m}`: `S0 ⊆ [n]` uniform of size `m`.
pub fn sample_d<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    params: &PreprocessParams,
    m: usize,
    rng: &mut R,
) -> Result<PreprocessOutcome> {
    let n = h.n();
    check_m(n, m, n)?;
    let pool: Vec<usize> = (1..=n).collect();
    sample_preprocessed(h, &pool, None, m, params, rng)
}

/// `D_{xi,m,i}`: as [`sample_d`] with `i ∈ S0`.
pub fn sample_d_conditioned<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    params: &PreprocessParams,
    m: usize,
    i: usize,
    rng: &mut R,
) -> Result<PreprocessOutcome> {
    let n = h.n();
    if i == 0 || i > n {
        return Err(Error::VariableOutOfRange { index: i, n });
    }
    check_m(n, m, n)?;
    let pool: Vec<usize> = (1..=n).filter(|&j| j != i).collect();
    sample_preprocessed(h, &pool, Some(i), m, params, rng)
}

/// `H_{xi,m}`: `S0 ⊆ [n+1]` of size `m` containing the placeholder.
pub fn sample_h<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    params: &PreprocessParams,
    m: usize,
    rng: &mut R,
) -> Result<PreprocessOutcome> {
    let n = h.n();
    check_m(n, m, n + 1)?;
    let pool: Vec<usize> = (1..=n).collect();
    sample_preprocessed(h, &pool, Some(n + 1), m, params, rng)
}

/// `H_{xi,m,i}`: `S0 ⊆ [n+1] \ {i}` of size `m` containing the placeholder.
pub fn sample_h_conditioned<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    params: &PreprocessParams,
    m: usize,
    i: usize,
    rng: &mut R,
) -> Result<PreprocessOutcome> {
    let n = h.n();
    if i == 0 || i > n {
        return Err(Error::VariableOutOfRange { index: i, n });
    }
    check_m(n, m, n)?;
    let pool: Vec<usize> = (1..=n).filter(|&j| j != i).collect();
    sample_preprocessed(h, &pool, Some(n + 1), m, params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{make_oracle, FunctionSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_count() {
        let p = PreprocessParams::new(0.5).unwrap();
        assert_eq!(p.rounds(64), 6u64.pow(4) * 2);
        assert_eq!(p.rounds(2), 2);
        assert!(PreprocessParams::new(1.0).is_err());
    }

    #[test]
    fn constant_keeps_everything() {
        let mut h = make_oracle(&FunctionSpec::constant(8, true)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = PreprocessParams::new(0.5).unwrap();
        let out = sample_d(&mut h, &p, 4, &mut rng).unwrap();
        assert_eq!(out.survivors, out.initial);
        assert!(out.removals.is_empty());
        let out = sample_h(&mut h, &p, 3, &mut rng).unwrap();
        assert!(out.survivors.has_placeholder());
        assert_eq!(out.survivors.len(), 3);
    }

    #[test]
    fn dictator_is_removed() {
        let mut h = make_oracle(&FunctionSpec::dictator(16, 5).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PreprocessParams::new(0.5).unwrap();
        let out = sample_d_conditioned(&mut h, &p, 4, 5, &mut rng).unwrap();
        assert!(!out.survivors.contains(5));
        assert_eq!(out.removals.len(), 1);
        assert_eq!(out.removals[0].variable, 5);
    }

    #[test]
    fn empty_rejected() {
        let mut h = make_oracle(&FunctionSpec::constant(4, true)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = PreprocessParams::new(0.5).unwrap();
        let empty = Ordering::ascending(&VarSet::empty(4));
        assert_eq!(preprocess(&mut h, &empty, &p, &mut rng), Err(Error::EmptySet));
        assert!(sample_d(&mut h, &p, 5, &mut rng).is_err());
    }
}
