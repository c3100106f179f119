//! Harvesting bichromatic edges along high-influence variables: revealing
//! edge collection, the revealing-point check, the search over partition
//! scales, and the repeated harvest that shrinks the candidate set.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hypercube::{Ordering, Point, VarSet};
use crate::oracle::{EdgeFinding, OracleHandle};
use crate::search::binary_search;
use crate::util::{log2, log2_sq_clamped, loop_count};

/// Disjoint, possibly empty blocks `T_1, …, T_r` of variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Partition> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("a partition needs at least one block".into()));
        }
        let mut seen = vec![false; n + 1];
        let mut blocks = blocks;
        for b in blocks.iter_mut() {
            b.sort_unstable();
            for &i in b.iter() {
                if i == 0 || i > n {
                    return Err(Error::VariableOutOfRange { index: i, n });
                }
                if seen[i] {
                    return Err(Error::InvalidParameter(format!("variable {i} in two blocks")));
                }
                seen[i] = true;
            }
        }
        Ok(Partition { n, blocks })
    }

    /// Random `r`-partition of `s`: each element picks a block uniformly.
    pub fn random<R: Rng + ?Sized>(s: &VarSet, r: usize, rng: &mut R) -> Partition {
        assert!(r >= 1);
        let mut blocks = vec![Vec::new(); r];
        for i in s.real() {
            blocks[rng.random_range(0..r)].push(i);
        }
        Partition { n: s.n(), blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &[usize] {
        &self.blocks[j]
    }
}

/// The constants of the harvesting procedures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevealConstants {
    pub gamma0: f64,
    pub delta0: f64,
    pub eta0: f64,
    pub r_multiplier: usize,
}

impl Default for RevealConstants {
    fn default() -> Self {
        RevealConstants { gamma0: 0.1, delta0: 0.1, eta0: 0.1, r_multiplier: 100 }
    }
}

impl RevealConstants {
    pub fn eta1(&self) -> f64 {
        (self.eta0 / 2.0).min(1.0 / 3.0)
    }

    pub fn gamma1(&self) -> f64 {
        (self.gamma0 / 2.0).min(1.0 / 4000.0)
    }

    pub fn delta1(&self) -> f64 {
        (self.delta0 / 2.0).min((1.0 - self.delta0) / 2.0)
    }
}

/// Variables with one verified bichromatic edge each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HarvestResult {
    pub edges: BTreeMap<usize, EdgeFinding>,
}

impl HarvestResult {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.keys().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.edges.contains_key(&i)
    }

    /// Keep the first edge seen per variable.
    pub fn add(&mut self, e: EdgeFinding) {
        self.edges.entry(e.variable()).or_insert(e);
    }

    pub fn merge(&mut self, other: HarvestResult) {
        for (_, e) in other.edges {
            self.add(e);
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::InvalidParameter(format!("{name}={v} must lie in (0,1]")));
    }
    Ok(())
}

fn random_subset<R: Rng + ?Sized>(block: &[usize], rng: &mut R) -> Vec<usize> {
    block.iter().copied().filter(|_| rng.random_bool(0.5)).collect()
}

/// Rounds per block of [`get_revealing_edges`]: `ceil(log^2 n / delta)`.
pub fn revealing_rounds(n: usize, delta: f64) -> u64 {
    loop_count(log2_sq_clamped(n) / delta)
}

/// For every block, binary-search `ceil(log^2 n / delta)` uniform subsets
/// (ascending order) and collect the edges found. Empty subsets cost nothing.
pub fn get_revealing_edges<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    x: &Point,
    t: &Partition,
    delta: f64,
    rng: &mut R,
) -> Result<HarvestResult> {
    check_unit("delta", delta)?;
    let n = h.n();
    let rounds = revealing_rounds(n, delta);
    let mut out = HarvestResult::default();
    for block in t.blocks() {
        if block.is_empty() {
            continue;
        }
        for _ in 0..rounds {
            let r = random_subset(block, rng);
            if r.is_empty() {
                continue;
            }
            let pi = Ordering::ascending(&VarSet::new(n, r)?);
            if let Some(hit) = binary_search(h, x, &pi)? {
                out.add(hit.finding());
            }
        }
    }
    Ok(out)
}

/// Query bound of [`check_revealing`].
pub fn check_revealing_bound(n: usize, gamma: f64, delta: f64) -> u64 {
    let l2 = log2_sq_clamped(n);
    loop_count(l2 / gamma).saturating_mul(loop_count(l2 / delta)).saturating_add(1)
}

/// Two-level sampling test of whether `x` reveals many blocks.
///
/// Both loops stop as soon as their outcome is settled, which leaves the
/// output distribution unchanged. Empty flips are not queried.
pub fn check_revealing<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    x: &Point,
    t: &Partition,
    gamma: f64,
    delta: f64,
    rng: &mut R,
) -> Result<bool> {
    check_unit("gamma", gamma)?;
    check_unit("delta", delta)?;
    let l2 = log2_sq_clamped(h.n());
    let need = 0.75 * l2;
    let outer = loop_count(l2 / gamma);
    let inner = loop_count(l2 / delta);
    let mut fx: Option<bool> = None;
    let mut b = 0u64;
    for done in 0..outer {
        if b as f64 >= need || ((b + (outer - done)) as f64) < need {
            break;
        }
        let j = rng.random_range(0..t.r());
        let block = t.block(j);
        let mut c = 0u64;
        if !block.is_empty() {
            for k in 0..inner {
                if c as f64 >= need || ((c + (inner - k)) as f64) < need {
                    break;
                }
                let r = random_subset(block, rng);
                if r.is_empty() {
                    continue;
                }
                let base = match fx {
                    Some(v) => v,
                    None => {
                        let v = h.query(x)?;
                        fx = Some(v);
                        v
                    }
                };
                let mut y = x.clone();
                for &i in &r {
                    y.flip_var(i);
                }
                if h.query(&y)? != base {
                    c += 1;
                }
            }
        }
        if c as f64 >= need {
            b += 1;
        }
    }
    Ok(b as f64 >= need)
}

/// Search over partition scales for a revealing point and harvest its
/// edges. `None` is a failure.
pub fn find_revealing<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    s: &VarSet,
    m: f64,
    alpha: f64,
    consts: &RevealConstants,
    rng: &mut R,
) -> Result<Option<HarvestResult>> {
    if m.is_nan() || m < 1.0 {
        return Err(Error::InvalidParameter(format!("m={m} must be at least 1")));
    }
    check_unit("alpha", alpha)?;
    let n = h.n();
    let size = s.real().count();
    let l2 = log2_sq_clamped(n);
    let logn = log2(n).max(1.0);
    let (eta1, gamma1, delta1) = (consts.eta1(), consts.gamma1(), consts.delta1());
    let partitions = loop_count(l2 / eta1);
    let mut d = 1usize;
    while d < size {
        let r = consts.r_multiplier * d;
        let sigma = alpha * m / (6.0 * d as f64 * logn);
        if sigma <= 1.0 {
            for _ in 0..loop_count(l2 / sigma) {
                let x = Point::random(n, rng);
                for _ in 0..partitions {
                    let t = Partition::random(s, r, rng);
                    if check_revealing(h, &x, &t, gamma1, delta1, rng)? {
                        let got = get_revealing_edges(h, &x, &t, delta1 / 2.0, rng)?;
                        if (got.len() as f64) < gamma1 * r as f64 / 2.0 {
                            return Ok(None);
                        }
                        return Ok(Some(got));
                    }
                }
            }
        }
        d *= 2;
    }
    Ok(None)
}

/// Harvest until [`find_revealing`] fails, removing harvested variables
/// from the candidate set after each round.
pub fn find_hi_inf<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    s: &VarSet,
    m: f64,
    alpha: f64,
    consts: &RevealConstants,
    rng: &mut R,
) -> Result<HarvestResult> {
    let mut out = HarvestResult::default();
    find_hi_inf_into(h, s, m, alpha, consts, rng, &mut out)?;
    Ok(out)
}

/// [`find_hi_inf`] accumulating into `out`, so a budget error still leaves
/// the edges found so far.
pub fn find_hi_inf_into<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    s: &VarSet,
    m: f64,
    alpha: f64,
    consts: &RevealConstants,
    rng: &mut R,
    out: &mut HarvestResult,
) -> Result<()> {
    let mut rest = s.clone();
    loop {
        match find_revealing(h, &rest, m, alpha, consts, rng)? {
            None => return Ok(()),
            Some(got) => {
                let before = rest.len();
                for i in got.variables() {
                    rest.remove(i);
                }
                debug_assert!(rest.len() < before);
                out.merge(got);
            }
        }
    }
}

/// `c * (|S| + |S|/(alpha m)) * max(log2 n, 1)^9`.
pub fn find_hi_inf_envelope(n: usize, s_len: usize, m: f64, alpha: f64, c: f64) -> f64 {
    let l = log2(n).max(1.0);
    c * (s_len as f64 + s_len as f64 / (alpha * m)) * l.powi(9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{make_oracle, FunctionSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derived_constants() {
        let c = RevealConstants::default();
        assert_eq!(c.eta1(), 0.05);
        assert_eq!(c.gamma1(), 1.0 / 4000.0);
        assert_eq!(c.delta1(), 0.05);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(4, vec![vec![1, 2], vec![2]]).is_err());
        assert!(Partition::new(4, vec![vec![5]]).is_err());
        assert!(Partition::new(4, vec![vec![], vec![3]]).is_ok());
    }

    #[test]
    fn constant_harvests_nothing() {
        let mut h = make_oracle(&FunctionSpec::constant(16, true)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = Partition::random(&VarSet::full(16), 4, &mut rng);
        let x = Point::zeros(16);
        assert!(get_revealing_edges(&mut h, &x, &t, 0.5, &mut rng).unwrap().is_empty());
        assert!(!check_revealing(&mut h, &x, &t, 0.5, 0.5, &mut rng).unwrap());
        let mut h = make_oracle(&FunctionSpec::constant(4, true)).unwrap();
        let c = RevealConstants::default();
        assert!(find_hi_inf(&mut h, &VarSet::full(4), 1.0, 1.0, &c, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn dictator_block_is_revealed() {
        let mut h = make_oracle(&FunctionSpec::dictator(16, 3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = Partition::new(16, vec![vec![1, 3, 5]]).unwrap();
        let x = Point::random(16, &mut rng);
        let start = h.queries();
        assert!(check_revealing(&mut h, &x, &t, 1.0, 0.1, &mut rng).unwrap());
        assert!(h.queries() - start <= check_revealing_bound(16, 1.0, 0.1));
        let got = get_revealing_edges(&mut h, &x, &t, 0.5, &mut rng).unwrap();
        assert_eq!(got.variables().collect::<Vec<_>>(), vec![3]);
    }
}
