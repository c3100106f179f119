//! Query access to Boolean functions behind a counting gate, the built-in
//! function families, edge classification and certificate checking.

use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{Edge, Point};

/// Largest dimension accepted for explicit truth tables.
pub const MAX_TABLE_N: usize = 26;

/// The function families of the test corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Constant { value: bool },
    Dictator { i: usize },
    AntiDictator { i: usize },
    Parity { vars: Vec<usize> },
    Majority { vars: Vec<usize> },
    /// Character `k` is `f` at the point whose integer encoding (variable 1
    /// as least significant bit) is `k`.
    TruthTable { bits: String },
    XorShift { inner: Box<Family>, shift: String },
    MonotoneThreshold { weights: Vec<f64>, theta: f64 },
    PlantedParityBlock { block: Vec<usize> },
}

/// A family together with its dimension. JSON form: `{"family", "params", "n"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n: usize,
}

impl FunctionSpec {
    pub fn new(n: usize, family: Family) -> Result<FunctionSpec> {
        let spec = FunctionSpec { family, n };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(n: usize, value: bool) -> FunctionSpec {
        FunctionSpec { n, family: Family::Constant { value } }
    }

    pub fn dictator(n: usize, i: usize) -> Result<FunctionSpec> {
        FunctionSpec::new(n, Family::Dictator { i })
    }

    pub fn anti_dictator(n: usize, i: usize) -> Result<FunctionSpec> {
        FunctionSpec::new(n, Family::AntiDictator { i })
    }

    pub fn parity(n: usize, vars: Vec<usize>) -> Result<FunctionSpec> {
        FunctionSpec::new(n, Family::Parity { vars })
    }

    pub fn majority(n: usize, vars: Vec<usize>) -> Result<FunctionSpec> {
        FunctionSpec::new(n, Family::Majority { vars })
    }

    pub fn threshold(weights: Vec<f64>, theta: f64) -> Result<FunctionSpec> {
        FunctionSpec::new(weights.len(), Family::MonotoneThreshold { weights, theta })
    }

    pub fn planted_parity_block(n: usize, block: Vec<usize>) -> Result<FunctionSpec> {
        FunctionSpec::new(n, Family::PlantedParityBlock { block })
    }

    pub fn xor_shift(inner: FunctionSpec, shift: &Point) -> Result<FunctionSpec> {
        FunctionSpec::new(
            inner.n,
            Family::XorShift { inner: Box::new(inner.family), shift: shift.to_string() },
        )
    }

    /// Truth table from `table[k] = f(Point::from_index(n, k))`.
    pub fn from_table(n: usize, table: &[bool]) -> Result<FunctionSpec> {
        let bits = table.iter().map(|&b| if b { '1' } else { '0' }).collect();
        FunctionSpec::new(n, Family::TruthTable { bits })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::MalformedSpec("dimension must be at least 1".into()));
        }
        validate_family(self.n, &self.family)
    }

    pub fn compile(&self) -> Result<Evaluator> {
        self.validate()?;
        Ok(compile_family(&self.family))
    }

    /// Short identifier used in result tables.
    pub fn label(&self) -> String {
        format!("{}/n={}", family_label(&self.family), self.n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<FunctionSpec> {
        let spec: FunctionSpec =
            serde_json::from_str(text).map_err(|e| Error::MalformedSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parse the two-line truth-table file format: `n=<k>` then `2^k` bits.
    pub fn from_table_file(text: &str) -> Result<FunctionSpec> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty truth-table file".into()))?;
        let n: usize = head
            .strip_prefix("n=")
            .ok_or_else(|| Error::Parse(format!("expected n=<k>, found {head:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
        let bits = lines.next().ok_or_else(|| Error::Parse("missing truth-table line".into()))?;
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after truth table".into()));
        }
        FunctionSpec::new(n, Family::TruthTable { bits: bits.to_string() })
    }

    /// Render as a truth-table file (enumerates all `2^n` points).
    pub fn to_table_file(&self) -> Result<String> {
        if self.n > MAX_TABLE_N {
            return Err(Error::TooLarge(format!("n={} truth table", self.n)));
        }
        let ev = self.compile()?;
        let mut bits = String::with_capacity(1 << self.n);
        for k in 0..(1u64 << self.n) {
            bits.push(if ev.eval(&Point::from_index(self.n, k)) { '1' } else { '0' });
        }
        Ok(format!("n={}\n{}\n", self.n, bits))
    }
}

fn family_label(f: &Family) -> String {
    let list = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    match f {
        Family::Constant { value } => format!("constant:{}", *value as u8),
        Family::Dictator { i } => format!("dictator:{i}"),
        Family::AntiDictator { i } => format!("anti_dictator:{i}"),
        Family::Parity { vars } => format!("parity:{}", list(vars)),
        Family::Majority { vars } => format!("majority:{}", list(vars)),
        Family::TruthTable { bits } => {
            // FNV-1a over the bits keeps labels short for large tables.
            let h = bits.bytes().fold(0xcbf29ce484222325u64, |h, b| {
                (h ^ b as u64).wrapping_mul(0x100000001b3)
            });
            format!("table:{h:016x}")
        }
        Family::XorShift { inner, shift } => format!("xor_shift({})^{shift}", family_label(inner)),
        Family::MonotoneThreshold { weights, theta } => {
            let w = weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
            format!("threshold:{theta}[{w}]")
        }
        Family::PlantedParityBlock { block } => format!("planted_parity:{}", list(block)),
    }
}

fn check_var(n: usize, i: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::MalformedSpec(format!("variable {i} out of range 1..={n}")));
    }
    Ok(())
}

fn check_distinct(n: usize, vars: &[usize]) -> Result<()> {
    for &i in vars {
        check_var(n, i)?;
    }
    let mut v = vars.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != vars.len() {
        return Err(Error::MalformedSpec("repeated variable".into()));
    }
    Ok(())
}

fn validate_family(n: usize, f: &Family) -> Result<()> {
    match f {
        Family::Constant { .. } => Ok(()),
        Family::Dictator { i } | Family::AntiDictator { i } => check_var(n, *i),
        Family::Parity { vars } | Family::PlantedParityBlock { block: vars } => {
            check_distinct(n, vars)
        }
        Family::Majority { vars } => {
            check_distinct(n, vars)?;
            if vars.len() % 2 == 0 {
                return Err(Error::MalformedSpec("majority needs an odd number of variables".into()));
            }
            Ok(())
        }
        Family::TruthTable { bits } => {
            if n > MAX_TABLE_N {
                return Err(Error::TooLarge(format!("n={n} truth table")));
            }
            if bits.len() != 1usize << n {
                return Err(Error::MalformedSpec(format!(
                    "truth table has {} entries, expected {}",
                    bits.len(),
                    1usize << n
                )));
            }
            if bits.bytes().any(|b| b != b'0' && b != b'1') {
                return Err(Error::MalformedSpec("truth table must contain only 0/1".into()));
            }
            Ok(())
        }
        Family::XorShift { inner, shift } => {
            let a = Point::parse(shift).map_err(|e| Error::MalformedSpec(e.to_string()))?;
            if a.n() != n {
                return Err(Error::MalformedSpec(format!("shift has length {}, expected {n}", a.n())));
            }
            validate_family(n, inner)
        }
        Family::MonotoneThreshold { weights, theta } => {
            if weights.len() != n {
                return Err(Error::MalformedSpec(format!(
                    "threshold has {} weights, expected {n}",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !theta.is_finite() {
                return Err(Error::MalformedSpec("weights must be finite and nonnegative".into()));
            }
            Ok(())
        }
    }
}

fn compile_family(f: &Family) -> Evaluator {
    match f {
        Family::Constant { value } => Evaluator::Constant(*value),
        Family::Dictator { i } => Evaluator::Literal { var: *i, negated: false },
        Family::AntiDictator { i } => Evaluator::Literal { var: *i, negated: true },
        Family::Parity { vars } | Family::PlantedParityBlock { block: vars } => {
            Evaluator::Parity(vars.clone())
        }
        Family::Majority { vars } => Evaluator::Majority(vars.clone()),
        Family::TruthTable { bits } => {
            let mut words = vec![0u64; bits.len().div_ceil(64)];
            for (k, b) in bits.bytes().enumerate() {
                if b == b'1' {
                    words[k / 64] |= 1 << (k % 64);
                }
            }
            Evaluator::Table(Arc::new(words))
        }
        Family::XorShift { inner, shift } => Evaluator::Shift {
            inner: Box::new(compile_family(inner)),
            shift: Point::parse(shift).expect("validated shift"),
        },
        Family::MonotoneThreshold { weights, theta } => {
            Evaluator::Threshold { weights: weights.clone(), theta: *theta }
        }
    }
}

/// A compiled, deterministic Boolean function.
#[derive(Clone)]
pub enum Evaluator {
    Constant(bool),
    Literal { var: usize, negated: bool },
    Parity(Vec<usize>),
    Majority(Vec<usize>),
    Table(Arc<Vec<u64>>),
    Shift { inner: Box<Evaluator>, shift: Point },
    Threshold { weights: Vec<f64>, theta: f64 },
    Not(Box<Evaluator>),
    Custom(Arc<dyn Fn(&Point) -> bool + Send + Sync>),
}

impl Evaluator {
    pub fn eval(&self, x: &Point) -> bool {
        match self {
            Evaluator::Constant(b) => *b,
            Evaluator::Literal { var, negated } => x.get(*var) ^ negated,
            Evaluator::Parity(vars) => x.parity_over(vars),
            Evaluator::Majority(vars) => {
                let ones = vars.iter().filter(|&&i| x.get(i)).count();
                2 * ones > vars.len()
            }
            Evaluator::Table(words) => {
                let k = x.index() as usize;
                (words[k / 64] >> (k % 64)) & 1 == 1
            }
            Evaluator::Shift { inner, shift } => {
                inner.eval(&x.xor(shift).expect("shift has the oracle's dimension"))
            }
            Evaluator::Threshold { weights, theta } => {
                let s: f64 = weights.iter().enumerate().filter(|(k, _)| x.get(k + 1)).map(|(_, w)| w).sum();
                s >= *theta
            }
            Evaluator::Not(inner) => !inner.eval(x),
            Evaluator::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluator::Constant(b) => write!(f, "Constant({b})"),
            Evaluator::Literal { var, negated } => write!(f, "Literal({var}, negated={negated})"),
            Evaluator::Parity(v) => write!(f, "Parity({v:?})"),
            Evaluator::Majority(v) => write!(f, "Majority({v:?})"),
            Evaluator::Table(w) => write!(f, "Table({} words)", w.len()),
            Evaluator::Shift { inner, shift } => write!(f, "Shift({inner:?}, {shift})"),
            Evaluator::Threshold { weights, theta } => write!(f, "Threshold({weights:?}, {theta})"),
            Evaluator::Not(inner) => write!(f, "Not({inner:?})"),
            Evaluator::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A Boolean function behind a query-counting gate.
///
/// Each handle owns its counter; clones share the evaluator but start from
/// the cloned count. A handle is meant to be confined to one trial.
#[derive(Clone, Debug)]
pub struct OracleHandle {
    n: usize,
    evaluator: Arc<Evaluator>,
    queries: u64,
    limit: Option<u64>,
    transcript: Option<Vec<(Point, bool)>>,
}

impl OracleHandle {
    pub fn new(n: usize, evaluator: Evaluator) -> OracleHandle {
        OracleHandle { n, evaluator: Arc::new(evaluator), queries: 0, limit: None, transcript: None }
    }

    pub fn from_fn<F>(n: usize, f: F) -> OracleHandle
    where
        F: Fn(&Point) -> bool + Send + Sync + 'static,
    {
        OracleHandle::new(n, Evaluator::Custom(Arc::new(f)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// A handle on the same function with a zero counter and no limit.
    pub fn fresh(&self) -> OracleHandle {
        OracleHandle {
            n: self.n,
            evaluator: Arc::clone(&self.evaluator),
            queries: 0,
            limit: None,
            transcript: self.transcript.as_ref().map(|_| Vec::new()),
        }
    }

    /// A fresh handle on the complement function.
    pub fn negated(&self) -> OracleHandle {
        let mut h = self.fresh();
        h.evaluator = Arc::new(Evaluator::Not(Box::new((*self.evaluator).clone())));
        h
    }

    pub fn with_transcript(mut self) -> OracleHandle {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn transcript(&self) -> Option<&[(Point, bool)]> {
        self.transcript.as_deref()
    }

    /// Absolute counter value at which further queries fail.
    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    pub fn set_limit(&mut self, limit: Option<u64>) {
        self.limit = limit;
    }

    /// Queries still allowed under the current limit.
    pub fn remaining(&self) -> u64 {
        self.limit.map_or(u64::MAX, |l| l.saturating_sub(self.queries))
    }

    /// Run `body` with at most `budget` further queries (never raising an
    /// outer limit). The previous limit is restored afterwards.
    pub fn limited<T>(&mut self, budget: u64, body: impl FnOnce(&mut Self) -> T) -> T {
        let saved = self.limit;
        let inner = self.queries.saturating_add(budget);
        self.limit = Some(saved.map_or(inner, |l| l.min(inner)));
        let out = body(self);
        self.limit = saved;
        out
    }

    pub fn query(&mut self, x: &Point) -> Result<bool> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.n() });
        }
        if let Some(l) = self.limit {
            if self.queries >= l {
                return Err(Error::BudgetExhausted);
            }
        }
        self.queries += 1;
        let v = self.evaluator.eval(x);
        if let Some(t) = self.transcript.as_mut() {
            t.push((x.clone(), v));
        }
        Ok(v)
    }
}

pub fn make_oracle(spec: &FunctionSpec) -> Result<OracleHandle> {
    Ok(OracleHandle::new(spec.n, spec.compile()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Monotone,
    AntiMonotone,
}

impl Orientation {
    pub fn opposite(self) -> Orientation {
        match self {
            Orientation::Monotone => Orientation::AntiMonotone,
            Orientation::AntiMonotone => Orientation::Monotone,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    NonBichromatic,
    Monotone,
    AntiMonotone,
}

/// A bichromatic edge with its orientation and the values at both endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeFinding {
    pub edge: Edge,
    pub orientation: Orientation,
    pub value_lo: bool,
    pub value_hi: bool,
}

impl EdgeFinding {
    /// Build from observed values `f(x)` and `f(x^{(i)})`; `None` if equal.
    pub fn from_values(x: &Point, i: usize, fx: bool, fxi: bool) -> Option<EdgeFinding> {
        if fx == fxi || i == 0 || i > x.n() {
            return None;
        }
        let edge = Edge::new(x, i).ok()?;
        let (value_lo, value_hi) = if x.get(i) { (fxi, fx) } else { (fx, fxi) };
        let orientation =
            if x.get(i) == fx { Orientation::Monotone } else { Orientation::AntiMonotone };
        Some(EdgeFinding { edge, orientation, value_lo, value_hi })
    }

    pub fn variable(&self) -> usize {
        self.edge.variable()
    }
}

/// Monotone and anti-monotone edges along one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationCertificate {
    pub variable: usize,
    pub monotone_edge: EdgeFinding,
    pub anti_monotone_edge: EdgeFinding,
}

impl ViolationCertificate {
    /// Pair two findings if they form a violation, in either order.
    pub fn from_pair(a: &EdgeFinding, b: &EdgeFinding) -> Option<ViolationCertificate> {
        if a.variable() != b.variable() || a.orientation == b.orientation {
            return None;
        }
        let (m, am) = if a.orientation == Orientation::Monotone { (a, b) } else { (b, a) };
        Some(ViolationCertificate {
            variable: a.variable(),
            monotone_edge: m.clone(),
            anti_monotone_edge: am.clone(),
        })
    }
}

/// Query both endpoints of `(x, x^{(i)})`; exactly two queries.
pub fn probe_edge(h: &mut OracleHandle, x: &Point, i: usize) -> Result<Option<EdgeFinding>> {
    if i == 0 || i > h.n() {
        return Err(Error::VariableOutOfRange { index: i, n: h.n() });
    }
    let fx = h.query(x)?;
    let fxi = h.query(&x.flipped(i))?;
    Ok(EdgeFinding::from_values(x, i, fx, fxi))
}

pub fn classify_edge(h: &mut OracleHandle, x: &Point, i: usize) -> Result<EdgeClass> {
    Ok(match probe_edge(h, x, i)? {
        None => EdgeClass::NonBichromatic,
        Some(e) if e.orientation == Orientation::Monotone => EdgeClass::Monotone,
        Some(_) => EdgeClass::AntiMonotone,
    })
}

fn recheck(h: &mut OracleHandle, e: &EdgeFinding, want: Orientation) -> Result<bool> {
    let lo = e.edge.lo();
    let i = e.edge.variable();
    let f_lo = h.query(lo)?;
    let f_hi = h.query(&e.edge.hi())?;
    Ok(EdgeFinding::from_values(lo, i, f_lo, f_hi).is_some_and(|r| r.orientation == want))
}

/// Re-query both edges (at most 4 queries) after a structural check.
pub fn verify_certificate(h: &mut OracleHandle, c: &ViolationCertificate) -> Result<bool> {
    let (m, a) = (&c.monotone_edge, &c.anti_monotone_edge);
    let structural = m.variable() == c.variable
        && a.variable() == c.variable
        && c.variable >= 1
        && c.variable <= h.n()
        && m.edge.lo().n() == h.n()
        && a.edge.lo().n() == h.n()
        && m.orientation == Orientation::Monotone
        && a.orientation == Orientation::AntiMonotone;
    if !structural {
        return Ok(false);
    }
    Ok(recheck(h, m, Orientation::Monotone)? && recheck(h, a, Orientation::AntiMonotone)?)
}

/// Uniformly random truth table.
pub fn random_function<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<FunctionSpec> {
    if n > MAX_TABLE_N {
        return Err(Error::TooLarge(format!("n={n} truth table")));
    }
    let table: Vec<bool> = (0..1usize << n).map(|_| rng.random()).collect();
    FunctionSpec::from_table(n, &table)
}

/// Random monotone truth table: the up-closure of a few random points of
/// middle weight.
pub fn random_monotone<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<FunctionSpec> {
    if n > MAX_TABLE_N {
        return Err(Error::TooLarge(format!("n={n} truth table")));
    }
    let gens = rng.random_range(1..=n.max(1) + 1);
    let mut minimal = Vec::with_capacity(gens);
    for _ in 0..gens {
        let w = rng.random_range(n.div_ceil(3)..=n.div_ceil(3) + n / 3);
        let mut p = Point::zeros(n);
        for k in sample(rng, n, w.min(n)).iter() {
            p.set(k + 1, true);
        }
        minimal.push(p);
    }
    let table: Vec<bool> = (0..1u64 << n)
        .map(|k| {
            let x = Point::from_index(n, k);
            minimal.iter().any(|g| g.le(&x))
        })
        .collect();
    FunctionSpec::from_table(n, &table)
}
