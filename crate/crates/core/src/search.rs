//! Edge-finding primitives: binary search along a flip path, and adaptive
//! edge search around a fixed point.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hypercube::{path_point, Ordering, Point, VarSet};
use crate::oracle::{EdgeFinding, OracleHandle};

/// A bichromatic edge `(point, point^{(variable)})` found on a flip path,
/// with `value = f(point)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathEdge {
    pub variable: usize,
    pub point: Point,
    pub value: bool,
}

impl PathEdge {
    pub fn finding(&self) -> EdgeFinding {
        EdgeFinding::from_values(&self.point, self.variable, self.value, !self.value)
            .expect("path edges are bichromatic along a real variable")
    }
}

/// Exact query bound of [`binary_search`]: `ceil(log2 |S|) + 2`.
pub fn binary_search_bound(len: usize) -> u64 {
    let exact = if len <= 1 { 0 } else { 64 - ((len - 1) as u64).leading_zeros() as u64 };
    exact + 2
}

/// Binary search on the path `x = x_0, …, x_m = x^{(S)}` defined by `pi`.
///
/// Returns `None` when `f(x) = f(x^{(S)})`; otherwise a bichromatic edge on
/// the path along a real variable of `S`.
pub fn binary_search(h: &mut OracleHandle, x: &Point, pi: &Ordering) -> Result<Option<PathEdge>> {
    search_impl(h, x, pi, None)
}

/// [`binary_search`] that also appends one `t=<idx> f=<bit>` line per probe.
pub fn binary_search_traced(
    h: &mut OracleHandle,
    x: &Point,
    pi: &Ordering,
    trace: &mut Vec<String>,
) -> Result<Option<PathEdge>> {
    search_impl(h, x, pi, Some(trace))
}

fn search_impl(
    h: &mut OracleHandle,
    x: &Point,
    pi: &Ordering,
    mut trace: Option<&mut Vec<String>>,
) -> Result<Option<PathEdge>> {
    let m = pi.len();
    if m == 0 {
        return Err(Error::EmptySet);
    }
    if x.n() != h.n() || pi.over().n() != h.n() {
        return Err(Error::DimensionMismatch { expected: h.n(), found: x.n() });
    }
    let start = h.queries();
    let mut probe = |h: &mut OracleHandle, t: usize| -> Result<bool> {
        let v = h.query(&path_point(x, pi, t)?)?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(format!("t={t} f={}", v as u8));
        }
        Ok(v)
    };
    let f0 = probe(h, 0)?;
    let fm = probe(h, m)?;
    if f0 == fm {
        return Ok(None);
    }
    let (mut l, mut r) = (0usize, m);
    let mut fl = f0;
    while r - l > 1 {
        let t = (l + r).div_ceil(2);
        let ft = probe(h, t)?;
        if ft != fl {
            r = t;
        } else {
            l = t;
            fl = ft;
        }
    }
    debug_assert!(h.queries() - start <= binary_search_bound(m));
    let variable = pi.step(r);
    debug_assert!(variable <= h.n(), "placeholder steps never separate values");
    Ok(Some(PathEdge { variable, point: path_point(x, pi, l)?, value: fl }))
}

/// Number of random subsets drawn by [`ae_search`]: `ceil(4 log2 n)`, at least 1.
pub fn ae_search_rounds(n: usize) -> u64 {
    ((4.0 * (n as f64).log2()).ceil() as u64).max(1)
}

/// Exact query bound of [`ae_search`].
pub fn ae_search_bound(n: usize) -> u64 {
    ae_search_rounds(n) + 2
}

/// Adaptive edge search for a bichromatic edge at `x` along a variable of
/// `s` (which may contain the placeholder; it is never returned).
pub fn ae_search<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    x: &Point,
    s: &VarSet,
    rng: &mut R,
) -> Result<Option<EdgeFinding>> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = h.n();
    if x.n() != n || s.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.n() });
    }
    let start = h.queries();
    let members = s.members();
    let size = (members.len() - 1) / 2 + 1;
    let b = h.query(x)?;
    // candidates[k]: members[k] lies in every subset whose flip changed f.
    let mut candidates = vec![true; members.len()];
    let mut any = false;
    for _ in 0..ae_search_rounds(n) {
        let picks = sample(rng, members.len(), size);
        let mut y = x.clone();
        let mut inside = vec![false; members.len()];
        for k in picks.iter() {
            y.flip_var(members[k]);
            inside[k] = true;
        }
        if h.query(&y)? != b {
            any = true;
            for (c, &i) in candidates.iter_mut().zip(&inside) {
                *c &= i;
            }
        }
    }
    if !any {
        return Ok(None);
    }
    let mut left = candidates.iter().enumerate().filter(|(_, &c)| c).map(|(k, _)| members[k]);
    let (Some(i), None) = (left.next(), left.next()) else {
        return Ok(None);
    };
    if i > n {
        return Ok(None);
    }
    let fi = h.query(&x.flipped(i))?;
    debug_assert!(h.queries() - start <= ae_search_bound(n));
    Ok(EdgeFinding::from_values(x, i, b, fi))
}
