//! Brute-force ground truth by full enumeration: influences, edge censuses,
//! persistence probabilities, reveal sets, distances to monotonicity and
//! unateness, and exact output distributions of the path binary search.
//!
//! All probabilities are exact rationals.

mod matching;

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypercube::{Ordering, Point, VarSet};
use crate::oracle::{FunctionSpec, OracleHandle};
use crate::revealing::Partition;
use crate::search::{binary_search, PathEdge};

pub use matching::{Bipartite, Matching, VertexCover};

pub type Rational = Ratio<u64>;

/// Largest dimension for full enumeration.
pub const MAX_EXACT_N: usize = 24;
/// Largest dimension for distance computations.
pub const MAX_DISTANCE_N: usize = 12;
/// Largest dimension for the all-orientations unateness distance.
pub const MAX_FULL_ORIENTATION_N: usize = 8;
/// Limit on distinct shifted tables when collapsing orientations.
pub const MAX_DISTINCT_ORIENTATIONS: usize = 64;
/// Largest set for persistence enumeration.
pub const MAX_PERSISTENCE_SET: usize = 20;
/// Largest block for reveal-set enumeration.
pub const MAX_REVEAL_BLOCK: usize = 16;

/// The full table of a function, indexed by the integer encoding of points
/// (variable 1 as the least significant bit).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn from_spec(spec: &FunctionSpec) -> Result<TruthTable> {
        let ev = spec.compile()?;
        TruthTable::from_fn(spec.n, |x| ev.eval(x))
    }

    pub fn from_fn(n: usize, f: impl Fn(&Point) -> bool) -> Result<TruthTable> {
        if n == 0 || n > MAX_EXACT_N {
            return Err(Error::TooLarge(format!("n={n} exceeds exhaustive limit {MAX_EXACT_N}")));
        }
        let bits = (0..1u64 << n).map(|k| f(&Point::from_index(n, k))).collect();
        Ok(TruthTable { n, bits })
    }

    pub fn from_bits(n: usize, bits: Vec<bool>) -> Result<TruthTable> {
        if n == 0 || n > MAX_EXACT_N || bits.len() != 1usize << n {
            return Err(Error::MalformedSpec(format!("table of length {} for n={n}", bits.len())));
        }
        Ok(TruthTable { n, bits })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn size(&self) -> u64 {
        1u64 << self.n
    }

    pub fn at(&self, k: u64) -> bool {
        self.bits[k as usize]
    }

    pub fn eval(&self, x: &Point) -> bool {
        self.bits[x.index() as usize]
    }

    /// `g(x) = f(x xor a)`.
    pub fn shifted(&self, a: u64) -> TruthTable {
        TruthTable { n: self.n, bits: (0..self.size()).map(|k| self.at(k ^ a)).collect() }
    }

    pub fn to_spec(&self) -> FunctionSpec {
        FunctionSpec::from_table(self.n, &self.bits).expect("table length matches n")
    }

    /// Counting oracle over this table.
    pub fn oracle(&self) -> OracleHandle {
        let t = self.clone();
        OracleHandle::from_fn(self.n, move |x| t.eval(x))
    }

    pub fn is_monotone(&self) -> bool {
        (0..self.size()).all(|k| {
            (0..self.n).all(|b| k & (1 << b) != 0 || !self.at(k) || self.at(k | (1 << b)))
        })
    }

    pub fn is_unate(&self) -> bool {
        // Unate iff no variable has both a monotone and an anti-monotone edge.
        (0..self.n).all(|b| {
            let (mut up, mut down) = (false, false);
            for k in (0..self.size()).filter(|k| k & (1 << b) == 0) {
                match (self.at(k), self.at(k | (1 << b))) {
                    (false, true) => up = true,
                    (true, false) => down = true,
                    _ => {}
                }
            }
            !(up && down)
        })
    }
}

fn check_var(n: usize, i: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::VariableOutOfRange { index: i, n });
    }
    Ok(())
}

/// Bichromatic edge counts along each variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeCensus {
    /// `monotone[i-1]`: edges along `i` going 0 -> 1.
    pub monotone: Vec<u64>,
    pub anti_monotone: Vec<u64>,
}

impl EdgeCensus {
    pub fn total(&self) -> u64 {
        self.monotone.iter().sum::<u64>() + self.anti_monotone.iter().sum::<u64>()
    }

    pub fn bichromatic(&self, i: usize) -> u64 {
        self.monotone[i - 1] + self.anti_monotone[i - 1]
    }
}

pub fn edge_census(f: &TruthTable) -> EdgeCensus {
    let n = f.n;
    let mut monotone = vec![0; n];
    let mut anti_monotone = vec![0; n];
    for k in 0..f.size() {
        for b in 0..n {
            if k & (1 << b) != 0 {
                continue;
            }
            match (f.at(k), f.at(k | (1 << b))) {
                (false, true) => monotone[b] += 1,
                (true, false) => anti_monotone[b] += 1,
                _ => {}
            }
        }
    }
    EdgeCensus { monotone, anti_monotone }
}

/// `Inf_f[i] = Pr_x[f(x) != f(x^{(i)})]`.
pub fn influence(f: &TruthTable, i: usize) -> Result<Rational> {
    check_var(f.n, i)?;
    let b = i - 1;
    let diff = (0..f.size()).filter(|&k| f.at(k) != f.at(k ^ (1 << b))).count() as u64;
    Ok(Rational::new(diff, f.size()))
}

pub fn total_influence(f: &TruthTable) -> Rational {
    (1..=f.n).map(|i| influence(f, i).expect("in range")).fold(Rational::zero(), |a, b| a + b)
}

/// `Pr_T[f(x) = f(x^{(T)})]` for uniform `T ⊆ S` of sizes `floor(|S|/2)` and `floor(|S|/2)+1`.
pub fn persistence_prob(f: &TruthTable, x: &Point, s: &VarSet) -> Result<(Rational, Rational)> {
    if s.n() != f.n || x.n() != f.n {
        return Err(Error::DimensionMismatch { expected: f.n, found: s.n() });
    }
    if s.len() > MAX_PERSISTENCE_SET {
        return Err(Error::TooLarge(format!("|S|={} for persistence enumeration", s.len())));
    }
    let fx = f.eval(x);
    let half = s.len() / 2;
    let prob = |size: usize| -> Rational {
        if size > s.len() {
            return Rational::one();
        }
        let (mut same, mut total) = (0u64, 0u64);
        for t in s.members().iter().combinations(size) {
            let mut y = x.clone();
            for &&i in &t {
                y.flip_var(i);
            }
            total += 1;
            same += (f.eval(&y) == fx) as u64;
        }
        Rational::new(same, total)
    };
    Ok((prob(half), prob(half + 1)))
}

/// `p >= 1 - 1/L^2` with `L = max(log2 n, 2)`.
///
/// Exact in integers when `log2 n` is an integer; otherwise `L^2` is
/// irrational and never equal to the rational side, so a float comparison
/// decides it.
pub fn meets_persistence_threshold(n: usize, p: Rational) -> bool {
    if p >= Rational::one() {
        return true;
    }
    let q = Rational::one() - p;
    let (a, b) = (*q.numer() as u128, *q.denom() as u128);
    if n <= 4 || n.is_power_of_two() {
        let l = if n <= 4 { 2 } else { n.trailing_zeros() as u128 };
        return a * l * l <= b;
    }
    let l = (n as f64).log2();
    (a as f64) * l * l <= b as f64
}

pub fn is_persistent(f: &TruthTable, x: &Point, s: &VarSet) -> Result<bool> {
    let (p0, p1) = persistence_prob(f, x, s)?;
    Ok(meets_persistence_threshold(f.n, p0) && meets_persistence_threshold(f.n, p1))
}

/// Fraction of all points that are `S`-persistent.
pub fn persistent_fraction(f: &TruthTable, s: &VarSet) -> Result<Rational> {
    let mut good = 0u64;
    for k in 0..f.size() {
        good += is_persistent(f, &Point::from_index(f.n, k), s)? as u64;
    }
    Ok(Rational::new(good, f.size()))
}

/// Blocks `j` (0-based) with `Pr_{R ⊆ T_j}[f(x) != f(x^{(R)})] >= delta`,
/// `R` uniform over all subsets.
pub fn reveal_set(f: &TruthTable, x: &Point, t: &Partition, delta: Rational) -> Result<Vec<usize>> {
    let fx = f.eval(x);
    let mut out = Vec::new();
    for (j, block) in t.blocks().iter().enumerate() {
        if block.len() > MAX_REVEAL_BLOCK {
            return Err(Error::TooLarge(format!("block of size {}", block.len())));
        }
        let mut differ = 0u64;
        for mask in 0..1u64 << block.len() {
            let mut y = x.clone();
            for (k, &i) in block.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    y.flip_var(i);
                }
            }
            differ += (f.eval(&y) != fx) as u64;
        }
        if Rational::new(differ, 1 << block.len()) >= delta {
            out.push(j);
        }
    }
    Ok(out)
}

/// The violation graph: left = points with value 1, right = points with
/// value 0, an edge for every strictly comparable `x < y`.
pub fn violation_graph(f: &TruthTable) -> (Bipartite, Vec<u64>, Vec<u64>) {
    let ones: Vec<u64> = (0..f.size()).filter(|&k| f.at(k)).collect();
    let zeros: Vec<u64> = (0..f.size()).filter(|&k| !f.at(k)).collect();
    let mut zero_pos = vec![usize::MAX; f.size() as usize];
    for (p, &k) in zeros.iter().enumerate() {
        zero_pos[k as usize] = p;
    }
    let full = f.size() - 1;
    let mut g = Bipartite::new(ones.len(), zeros.len());
    for (u, &x) in ones.iter().enumerate() {
        // Enumerate supersets y of x by walking subsets of the complement.
        let comp = full & !x;
        let mut sub = comp;
        while sub != 0 {
            let y = x | sub;
            if !f.at(y) {
                g.add_edge(u, zero_pos[y as usize]);
            }
            sub = (sub - 1) & comp;
        }
    }
    (g, ones, zeros)
}

fn check_distance_n(n: usize) -> Result<()> {
    if n > MAX_DISTANCE_N {
        return Err(Error::TooLarge(format!("n={n} exceeds distance limit {MAX_DISTANCE_N}")));
    }
    Ok(())
}

/// Minimum vertex cover of the violation graph over `2^n`, with the cover
/// checked against the matching.
pub fn distance_to_monotone(f: &TruthTable) -> Result<Rational> {
    check_distance_n(f.n)?;
    let (g, _, _) = violation_graph(f);
    let m = g.max_matching();
    let cover = g.min_vertex_cover(&m);
    debug_assert!(g.is_matching(&m));
    if cover.len() != m.size || !g.is_cover(&cover) {
        return Err(Error::InvalidParameter("vertex cover construction failed".into()));
    }
    Ok(Rational::new(m.size as u64, f.size()))
}

/// Minimum over orientations `a` of the distance of `f(. xor a)` to monotone.
///
/// For `n <= 8` every orientation is evaluated. Up to `n = 12` the shifted
/// tables are collapsed to distinct ones first; this fails if more than
/// 64 distinct tables remain.
pub fn distance_to_unate(f: &TruthTable) -> Result<Rational> {
    check_distance_n(f.n)?;
    let mut best: Option<Rational> = None;
    let mut consider = |g: &TruthTable| -> Result<()> {
        let d = distance_to_monotone(g)?;
        best = Some(best.map_or(d, |b| b.min(d)));
        Ok(())
    };
    if f.n <= MAX_FULL_ORIENTATION_N {
        for a in 0..f.size() {
            consider(&f.shifted(a))?;
        }
    } else {
        let mut distinct: HashSet<TruthTable> = HashSet::new();
        for a in 0..f.size() {
            distinct.insert(f.shifted(a));
            if distinct.len() > MAX_DISTINCT_ORIENTATIONS {
                return Err(Error::TooLarge(format!(
                    "more than {MAX_DISTINCT_ORIENTATIONS} distinct orientations at n={}",
                    f.n
                )));
            }
        }
        for g in &distinct {
            consider(g)?;
        }
    }
    Ok(best.expect("at least one orientation"))
}

pub type Outcome = Option<PathEdge>;

/// Exact distribution of an outcome over uniform inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputDistribution<K: Ord = Outcome> {
    pub probs: BTreeMap<K, Rational>,
}

impl<K: Ord + Clone> OutputDistribution<K> {
    fn from_counts(counts: BTreeMap<K, u64>, total: u64) -> Self {
        OutputDistribution { probs: counts.into_iter().map(|(k, c)| (k, Rational::new(c, total))).collect() }
    }

    pub fn total(&self) -> Rational {
        self.probs.values().fold(Rational::zero(), |a, &b| a + b)
    }

    pub fn prob(&self, k: &K) -> Rational {
        self.probs.get(k).copied().unwrap_or_else(Rational::zero)
    }
}

fn bs_oracle(f: &TruthTable, pi: &Ordering) -> Result<OracleHandle> {
    if f.n > MAX_DISTANCE_N {
        return Err(Error::TooLarge(format!("n={} exceeds distance limit {MAX_DISTANCE_N}", f.n)));
    }
    if pi.over().n() != f.n {
        return Err(Error::DimensionMismatch { expected: f.n, found: pi.over().n() });
    }
    Ok(f.oracle())
}

/// Distribution of `binary_search(f, x, pi)` over uniform `x`.
pub fn binary_search_distribution(f: &TruthTable, pi: &Ordering) -> Result<OutputDistribution> {
    let mut h = bs_oracle(f, pi)?;
    let mut counts: BTreeMap<Outcome, u64> = BTreeMap::new();
    for k in 0..f.size() {
        *counts.entry(binary_search(&mut h, &Point::from_index(f.n, k), pi)?).or_insert(0) += 1;
    }
    Ok(OutputDistribution::from_counts(counts, f.size()))
}

/// Distribution of the unordered pair `{binary_search(f, x, pi), binary_search(f, x^{(i)}, pi)}`
/// over uniform `x`, keyed by the sorted pair.
pub fn binary_search_pair_distribution(
    f: &TruthTable,
    pi: &Ordering,
    i: usize,
) -> Result<OutputDistribution<(Outcome, Outcome)>> {
    check_var(f.n, i)?;
    let mut h = bs_oracle(f, pi)?;
    let mut counts: BTreeMap<(Outcome, Outcome), u64> = BTreeMap::new();
    for k in 0..f.size() {
        let x = Point::from_index(f.n, k);
        let a = binary_search(&mut h, &x, pi)?;
        let b = binary_search(&mut h, &x.flipped(i), pi)?;
        let key = if a <= b { (a, b) } else { (b, a) };
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(OutputDistribution::from_counts(counts, f.size()))
}

/// Total variation distance: half the L1 difference.
pub fn dtv<K: Ord + Clone>(p: &OutputDistribution<K>, q: &OutputDistribution<K>) -> Rational {
    let keys: std::collections::BTreeSet<&K> = p.probs.keys().chain(q.probs.keys()).collect();
    let l1 = keys.into_iter().fold(Rational::zero(), |acc, k| {
        let (a, b) = (p.prob(k), q.prob(k));
        acc + if a >= b { a - b } else { b - a }
    });
    l1 / 2
}
