//! The one-sided unateness tester: the high-influence pre-check, the
//! parameter grid, the per-case edge-collecting procedures, and the plain
//! edge tester used as a baseline.
//!
//! Every case procedure collects edges in two roles. Steps of the two roles
//! are interleaved one for one and a violation is looked for after every
//! step, so a truncated run still uses edges from both roles. Budgets are
//! enforced at the oracle gate; a run that hits the global cap accepts.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{Point, VarSet};
use crate::oracle::{probe_edge, verify_certificate, EdgeFinding, OracleHandle, Orientation, ViolationCertificate};
use crate::persistence::{sample_d, sample_preprocessed, PreprocessParams};
use crate::revealing::{find_hi_inf_into, HarvestResult, RevealConstants};
use crate::search::ae_search;
use crate::util::{ceil_root_pow, ceil_sqrt_over_pow2, log2, log2_sq_clamped, loop_count};

/// Queries held back so a found certificate can always be re-verified.
pub const VERIFY_RESERVE: u64 = 4;

/// Loop multipliers for every asymptotic repetition count, plus caps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Every "repeat O(1) times" outer loop.
    pub outer_rounds: f64,
    pub case0: f64,
    pub case1_1_q: f64,
    pub case1_2_a: f64,
    pub case1_2_s: f64,
    pub case1_2_inner: f64,
    pub case2_sweep: f64,
    pub case3_outer: f64,
    pub case3_a: f64,
    pub case3_s: f64,
    pub case3_inner: f64,
    pub baseline: f64,
    pub preprocess_rounds: f64,
    /// Total query cap for one tester run; `None` uses the default formula.
    pub global_cap: Option<u64>,
    /// Cap for each grid branch on top of the global cap.
    pub branch_cap: Option<u64>,
    /// Fraction of a high-influence branch's allowance given to harvesting.
    pub find_hi_inf_share: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            outer_rounds: 4.0,
            case0: 4.0,
            case1_1_q: 4.0,
            case1_2_a: 4.0,
            case1_2_s: 4.0,
            case1_2_inner: 4.0,
            case2_sweep: 4.0,
            case3_outer: 4.0,
            case3_a: 4.0,
            case3_s: 4.0,
            case3_inner: 4.0,
            baseline: 4.0,
            preprocess_rounds: 1.0,
            global_cap: None,
            branch_cap: None,
            find_hi_inf_share: 0.5,
        }
    }
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<()> {
        let ms = [
            ("outer_rounds", self.outer_rounds),
            ("case0", self.case0),
            ("case1_1_q", self.case1_1_q),
            ("case1_2_a", self.case1_2_a),
            ("case1_2_s", self.case1_2_s),
            ("case1_2_inner", self.case1_2_inner),
            ("case2_sweep", self.case2_sweep),
            ("case3_outer", self.case3_outer),
            ("case3_a", self.case3_a),
            ("case3_s", self.case3_s),
            ("case3_inner", self.case3_inner),
            ("baseline", self.baseline),
            ("preprocess_rounds", self.preprocess_rounds),
        ];
        for (name, v) in ms {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("multiplier {name}={v} must be >= 1")));
            }
        }
        if !(self.find_hi_inf_share > 0.0 && self.find_hi_inf_share <= 1.0) {
            return Err(Error::InvalidParameter("find_hi_inf_share must lie in (0,1]".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<BudgetConfig> {
        let b: BudgetConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        b.validate()?;
        Ok(b)
    }

    /// Rounds of the high-influence pre-check: `ceil(c sqrt(n) log2 n / eps^2)`.
    pub fn case0_rounds(&self, n: usize, eps: f64) -> u64 {
        loop_count(self.case0 * (n as f64).sqrt() * log2(n).max(1.0) / (eps * eps))
    }

    /// Samples of the edge tester: `ceil(c n^{3/2} / eps)`.
    pub fn baseline_rounds(&self, n: usize, eps: f64) -> u64 {
        loop_count(self.baseline * (n as f64).powf(1.5) / eps)
    }

    /// `64 n^{2/3} Lambda^14 / eps^2` plus the pre-check's queries.
    pub fn default_global_cap(&self, n: usize, eps: f64) -> u64 {
        let lam = lambda(n, eps) as f64;
        let main = loop_count(64.0 * (n as f64).powf(2.0 / 3.0) * lam.powi(14) / (eps * eps));
        main.saturating_add(2 * self.case0_rounds(n, eps))
    }

    /// Closed-form bound on the queries of one run of `kind`.
    pub fn total_budget(&self, n: usize, eps: f64, kind: TesterKind) -> u64 {
        match kind {
            TesterKind::Baseline => {
                let b = (2 * self.baseline_rounds(n, eps)).saturating_add(VERIFY_RESERVE);
                self.global_cap.map_or(b, |g| g.min(b))
            }
            _ => self.global_cap.unwrap_or_else(|| self.default_global_cap(n, eps)),
        }
    }
}

/// `Lambda = ceil(2 log2(n / eps))`.
pub fn lambda(n: usize, eps: f64) -> u32 {
    ((2.0 * (n as f64 / eps).log2()).ceil() as u32).max(1)
}

/// One point of the enumerated parameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub s: u32,
    pub t: u32,
    pub h: u32,
    pub l: u32,
    pub swap: bool,
}

/// All cells with `1 <= t <= s <= Lambda`, `1 <= h <= 3 Lambda`,
/// `1 <= l <= floor(log2 n)` and both orientations, in that nesting order.
pub fn grid_cells(n: usize, eps: f64) -> impl Iterator<Item = GridCell> {
    let lam = lambda(n, eps);
    let lmax = n.max(1).ilog2();
    (1..=lam).flat_map(move |s| {
        (1..=s).flat_map(move |t| {
            (1..=3 * lam).flat_map(move |h| {
                (1..=lmax).flat_map(move |l| {
                    [false, true].into_iter().map(move |swap| GridCell { s, t, h, l, swap })
                })
            })
        })
    })
}

/// `Lambda (Lambda + 1) / 2 * 3 Lambda * floor(log2 n) * 2`.
pub fn grid_size(n: usize, eps: f64) -> u64 {
    let lam = lambda(n, eps) as u64;
    lam * (lam + 1) / 2 * 3 * lam * n.max(1).ilog2() as u64 * 2
}

/// Quantities derived from `(n, eps)` and one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseParams {
    pub n: usize,
    pub eps: f64,
    pub cell: GridCell,
    pub lambda: u32,
    /// `|I| = 2^l`.
    pub i_size: u64,
    /// `|I*| = ceil(|I| / 2)`.
    pub i_star: u64,
    /// `xi = 2^{-s}`.
    pub xi: f64,
    /// Largest power of two `m <= xi |I| / n^{1/3}`; `None` if there is none.
    pub m: Option<u64>,
    /// `p = ceil(sqrt(n) / 2^t) + 1`.
    pub p: u64,
    /// `r = m |I*| / n`.
    pub r: f64,
    /// `k = ceil(|I*| / (n^{1/3} log2 n))`.
    pub k: u64,
    /// `alpha = eps^2 n^{1/3} / (|I| Lambda^13)`.
    pub alpha: f64,
}

impl CaseParams {
    pub fn new(n: usize, eps: f64, cell: GridCell) -> Result<CaseParams> {
        check_eps(eps)?;
        let lam = lambda(n, eps);
        let lmax = n.max(1).ilog2();
        let GridCell { s, t, h, l, .. } = cell;
        if !(1 <= t && t <= s && s <= lam && 1 <= h && h <= 3 * lam && 1 <= l && l <= lmax) {
            return Err(Error::InvalidParameter(format!("grid cell {cell:?} out of range for n={n}")));
        }
        let i_size = 1u64 << l;
        let i_star = i_size.div_ceil(2);
        let m = largest_m(n, l, s);
        let cbrt = (n as f64).cbrt();
        let logn = log2(n).max(1.0);
        let p = (ceil_sqrt_over_pow2(n, t) + 1).min(n as u64);
        Ok(CaseParams {
            n,
            eps,
            cell,
            lambda: lam,
            i_size,
            i_star,
            xi: 0.5f64.powi(s as i32),
            m,
            p,
            r: m.unwrap_or(0) as f64 * i_star as f64 / n as f64,
            k: loop_count(i_star as f64 / (cbrt * logn)),
            alpha: (eps * eps * cbrt / (i_size as f64 * (lam as f64).powi(13))).min(1.0),
        })
    }

    fn pow2(e: u32) -> f64 {
        2f64.powi(e as i32)
    }

    /// `|I| / 2^t >= n^{2/3}`, checked exactly as `2^{3(l-t)} >= n^2`.
    pub fn high_gate(&self) -> bool {
        let (l, t) = (self.cell.l, self.cell.t);
        l >= t && cube_pow2_cmp(l - t, self.n) != std::cmp::Ordering::Less
    }

    /// `|I| / 2^t <= n^{2/3}`.
    pub fn low_gate(&self) -> bool {
        let (l, t) = (self.cell.l, self.cell.t);
        l < t || cube_pow2_cmp(l - t, self.n) != std::cmp::Ordering::Greater
    }

    /// `m >= n^{1/3} log^2 n / 2^t`: the sampled-set branch has enough room.
    pub fn case1_1_gate(&self) -> bool {
        self.m.is_some_and(|m| {
            m as f64 >= (self.n as f64).cbrt() * log2_sq_clamped(self.n) / Self::pow2(self.cell.t)
        })
    }
}

/// Compare `2^{3e}` with `n^2`.
fn cube_pow2_cmp(e: u32, n: usize) -> std::cmp::Ordering {
    let lhs_bits = 3 * e as u64;
    if lhs_bits >= 127 {
        return std::cmp::Ordering::Greater;
    }
    (1u128 << lhs_bits).cmp(&((n as u128) * (n as u128)))
}

/// Largest `2^j` with `2^{3j} n <= 2^{3(l-s)}`.
fn largest_m(n: usize, l: u32, s: u32) -> Option<u64> {
    if l < s {
        return None;
    }
    let cap_bits = 3 * (l - s) as u64;
    let fits = |j: u64| -> bool {
        let lhs_bits = 3 * j + (usize::BITS - n.leading_zeros()) as u64;
        if lhs_bits > 125 || cap_bits > 125 {
            return ((3 * j) as f64 + log2(n)) <= cap_bits as f64;
        }
        (1u128 << (3 * j)) * n as u128 <= 1u128 << cap_bits
    };
    if !fits(0) {
        return None;
    }
    let mut j = 0;
    while j < 62 && fits(j + 1) {
        j += 1;
    }
    Some(1u64 << j)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps={eps} must lie in (0,1]")));
    }
    Ok(())
}

/// Which role an edge can fill.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Anti,
    Mono,
}

/// Edges found so far, one per variable and orientation.
#[derive(Default)]
struct Collector {
    swap: bool,
    mono: BTreeMap<usize, EdgeFinding>,
    anti: BTreeMap<usize, EdgeFinding>,
}

impl Collector {
    fn new(swap: bool) -> Collector {
        Collector { swap, ..Default::default() }
    }

    fn keep(&mut self, e: &EdgeFinding) -> Option<ViolationCertificate> {
        let (mine, other) = match e.orientation {
            Orientation::Monotone => (&mut self.mono, &self.anti),
            Orientation::AntiMonotone => (&mut self.anti, &self.mono),
        };
        mine.entry(e.variable()).or_insert_with(|| e.clone());
        other.get(&e.variable()).and_then(|o| ViolationCertificate::from_pair(e, o))
    }

    /// Record `e` only if its orientation fills `role` (roles exchange under swap).
    fn offer(&mut self, e: &EdgeFinding, role: Role) -> Option<ViolationCertificate> {
        let want = match (role, self.swap) {
            (Role::Anti, false) | (Role::Mono, true) => Orientation::AntiMonotone,
            _ => Orientation::Monotone,
        };
        if e.orientation != want {
            return None;
        }
        self.keep(e)
    }

    fn offer_any(&mut self, e: &EdgeFinding) -> Option<ViolationCertificate> {
        self.keep(e)
    }
}

enum Step {
    Continue,
    Done,
    Found(ViolationCertificate),
}

type StepFn<'a, R> = dyn FnMut(&mut OracleHandle, &mut Collector, &mut R) -> Result<Step> + 'a;

/// Alternate one step of each role until both are exhausted or a violation shows up.
fn interleave<'f, R: Rng + ?Sized>(
    h: &mut OracleHandle,
    col: &mut Collector,
    rng: &mut R,
    a: &mut StepFn<'f, R>,
    b: &mut StepFn<'f, R>,
) -> Result<Option<ViolationCertificate>> {
    let mut done = [false, false];
    while !(done[0] && done[1]) {
        for (k, finished) in done.iter_mut().enumerate() {
            if *finished {
                continue;
            }
            let f: &mut StepFn<'f, R> = if k == 0 { &mut *a } else { &mut *b };
            match f(h, col, rng)? {
                Step::Continue => {}
                Step::Done => *finished = true,
                Step::Found(c) => return Ok(Some(c)),
            }
        }
    }
    Ok(None)
}

fn found(c: Option<ViolationCertificate>) -> Step {
    c.map_or(Step::Continue, Step::Found)
}

/// One adaptive edge search at a fresh uniform point, offered in `role`.
fn ae_step<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    col: &mut Collector,
    rng: &mut R,
    set: &VarSet,
    role: Role,
) -> Result<Step> {
    let x = Point::random(h.n(), rng);
    Ok(match ae_search(h, &x, set, rng)? {
        Some(e) => found(col.offer(&e, role)),
        None => Step::Continue,
    })
}

fn random_subset<R: Rng + ?Sized>(n: usize, pool: &[usize], size: usize, rng: &mut R) -> VarSet {
    let size = size.min(pool.len());
    VarSet::new(n, sample(rng, pool.len(), size).iter().map(|k| pool[k])).expect("pool entries are in range")
}

/// Edge-collision pre-check for functions of large total influence: sample
/// uniform edges and stop when one variable shows both orientations.
pub fn case0<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    eps: f64,
    budget: &BudgetConfig,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    check_eps(eps)?;
    edge_collisions(h, budget.case0_rounds(h.n(), eps), rng)
}

/// The plain edge tester: `ceil(c n^{3/2} / eps)` uniform edges with
/// per-variable orientation memory.
pub fn edge_tester_baseline<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    eps: f64,
    budget: &BudgetConfig,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    check_eps(eps)?;
    edge_collisions(h, budget.baseline_rounds(h.n(), eps), rng)
}

fn edge_collisions<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    rounds: u64,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    let n = h.n();
    let mut col = Collector::new(false);
    for _ in 0..rounds {
        let x = Point::random(n, rng);
        let i = rng.random_range(1..=n);
        if let Some(e) = probe_edge(h, &x, i)? {
            if let Some(c) = col.offer_any(&e) {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}

fn preprocess_params(p: &CaseParams, budget: &BudgetConfig) -> Result<PreprocessParams> {
    PreprocessParams { xi: p.xi, round_multiplier: budget.preprocess_rounds }.validated()
}

/// Low-influence branch with a large sampled set: draw `S ~ D_{xi,m}` and
/// run adaptive edge searches on `S ∪ {n+1}` in both roles.
pub fn case1_1<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    p: &CaseParams,
    budget: &BudgetConfig,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    let Some(m) = p.m else { return Ok(None) };
    let n = p.n;
    let pp = preprocess_params(p, budget)?;
    let lam = p.lambda as f64;
    let q = loop_count(budget.case1_1_q * (n as f64).powf(2.0 / 3.0) * lam.powi(13) / (p.eps * p.eps));
    for _ in 0..loop_count(budget.outer_rounds) {
        let s = sample_d(h, &pp, m as usize, rng)?.survivors.with(n + 1)?;
        let mut col = Collector::new(p.cell.swap);
        let (mut ia, mut ib) = (0u64, 0u64);
        let mut a = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| -> Result<Step> {
            if ia >= q {
                return Ok(Step::Done);
            }
            ia += 1;
            ae_step(h, col, rng, &s, Role::Anti)
        };
        let mut b = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| -> Result<Step> {
            if ib >= q {
                return Ok(Step::Done);
            }
            ib += 1;
            ae_step(h, col, rng, &s, Role::Mono)
        };
        if let Some(c) = interleave(h, &mut col, rng, &mut a, &mut b)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Nested sampled-set loop shared by the small-set branches: up to `outer`
/// sets, each searched `inner` times in the monotone role.
struct NestedSets<F> {
    draw: F,
    sets_left: u64,
    inner: u64,
    inner_left: u64,
    current: Option<VarSet>,
}

impl<F> NestedSets<F> {
    fn step<R: Rng + ?Sized>(&mut self, h: &mut OracleHandle, col: &mut Collector, rng: &mut R) -> Result<Step>
    where
        F: FnMut(&mut OracleHandle, &mut R) -> Result<VarSet>,
    {
        if self.current.is_none() || self.inner_left == 0 {
            if self.sets_left == 0 {
                return Ok(Step::Done);
            }
            self.sets_left -= 1;
            self.current = Some((self.draw)(h, rng)?);
            self.inner_left = self.inner;
        }
        self.inner_left -= 1;
        let set = self.current.as_ref().expect("set drawn above");
        if set.is_empty() {
            return Ok(Step::Continue);
        }
        ae_step(h, col, rng, set, Role::Mono)
    }
}

/// Low-influence branch with a small sampled set: anti-monotone role from
/// searches on a random `T` of size `p`; monotone role from preprocessed
/// subsets of `T`.
pub fn case1_2<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    p: &CaseParams,
    budget: &BudgetConfig,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    let Some(m) = p.m else { return Ok(None) };
    let n = p.n;
    let pp = preprocess_params(p, budget)?;
    let lam = p.lambda as f64;
    let logn = log2(n).max(1.0);
    let (s_exp, t_exp, h_exp) = (p.cell.s as i32, p.cell.t as i32, p.cell.h as i32);
    let a_steps = loop_count(
        budget.case1_2_a * (n as f64).powf(2.0 / 3.0) * lam.powi(11) * logn * logn / (p.eps * p.eps),
    );
    let s_loop = loop_count(
        budget.case1_2_s * (n as f64).cbrt() * logn.powi(3) / (m as f64 * 2f64.powi(t_exp)),
    );
    let inner = loop_count(budget.case1_2_inner * 2f64.powi(h_exp - s_exp) * logn);
    let all: Vec<usize> = (1..=n).collect();
    for _ in 0..loop_count(budget.outer_rounds) {
        let t = random_subset(n, &all, p.p as usize, rng);
        let pool: Vec<usize> = t.members().to_vec();
        let size = (m as usize).min(pool.len());
        let mut col = Collector::new(p.cell.swap);
        let mut ia = 0u64;
        let mut a = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| -> Result<Step> {
            if ia >= a_steps {
                return Ok(Step::Done);
            }
            ia += 1;
            ae_step(h, col, rng, &t, Role::Anti)
        };
        let mut nested = NestedSets {
            draw: |h: &mut OracleHandle, rng: &mut R| -> Result<VarSet> {
                sample_preprocessed(h, &pool, None, size, &pp, rng)?.survivors.with(n + 1)
            },
            sets_left: s_loop,
            inner,
            inner_left: 0,
            current: None,
        };
        let mut b = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| nested.step(h, col, rng);
        if let Some(c) = interleave(h, &mut col, rng, &mut a, &mut b)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// High-influence branch: harvest edges on a random set of size
/// `ceil(n^{2/3})`, then sweep random subsets of it in both roles. Any
/// opposed pair among all edges found is a violation.
pub fn case2<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    p: &CaseParams,
    budget: &BudgetConfig,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    let n = p.n;
    let lam = p.lambda as f64;
    let sweep = loop_count(budget.case2_sweep * (n as f64).sqrt() * lam.powi(14) / (p.eps * p.eps));
    let s_size = (ceil_root_pow(n, 2, 3) as usize).min(n);
    let plus_size = ceil_sqrt_over_pow2(n, p.cell.s) as usize;
    let minus_size = ceil_sqrt_over_pow2(n, p.cell.t) as usize;
    let consts = RevealConstants::default();
    let all: Vec<usize> = (1..=n).collect();
    for _ in 0..loop_count(budget.outer_rounds) {
        let s = random_subset(n, &all, s_size, rng);
        let mut harvest = HarvestResult::default();
        let share = (h.remaining() as f64 * budget.find_hi_inf_share).floor() as u64;
        let res = h.limited(share, |h| find_hi_inf_into(h, &s, p.k as f64, p.alpha, &consts, rng, &mut harvest));
        match res {
            Ok(()) | Err(Error::BudgetExhausted) => {}
            Err(e) => return Err(e),
        }
        let mut col = Collector::new(p.cell.swap);
        for e in harvest.edges.values() {
            if let Some(c) = col.offer_any(e) {
                return Ok(Some(c));
            }
        }
        let pool: Vec<usize> = s.members().to_vec();
        let (mut ia, mut ib) = (0u64, 0u64);
        let mut plus = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| -> Result<Step> {
            if ia >= sweep {
                return Ok(Step::Done);
            }
            ia += 1;
            let t = random_subset(n, &pool, plus_size, rng);
            ae_step(h, col, rng, &t, Role::Mono)
        };
        let mut minus = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| -> Result<Step> {
            if ib >= sweep {
                return Ok(Step::Done);
            }
            ib += 1;
            let t = random_subset(n, &pool, minus_size, rng);
            ae_step(h, col, rng, &t, Role::Anti)
        };
        if let Some(c) = interleave(h, &mut col, rng, &mut plus, &mut minus)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Small-`I` branch: anti-monotone role from searches on a random `T` of
/// size `ceil(sqrt(n)/2^t)`, monotone role from random `S ⊂ T` of size
/// `ceil(sqrt(n)/2^s)`.
pub fn case3<R: Rng + ?Sized>(
    h: &mut OracleHandle,
    p: &CaseParams,
    budget: &BudgetConfig,
    rng: &mut R,
) -> Result<Option<ViolationCertificate>> {
    let n = p.n;
    let l2 = log2_sq_clamped(n);
    let (s_exp, t_exp, h_exp) = (p.cell.s as i32, p.cell.t as i32, p.cell.h as i32);
    let outer = loop_count(
        budget.case3_outer
            * (2f64.powi(t_exp) * (n as f64).sqrt() * l2 / p.i_size as f64).ceil(),
    );
    let a_steps = loop_count(budget.case3_a * 2f64.powi(h_exp - t_exp) * l2);
    let s_loop = loop_count(budget.case3_s * 2f64.powi(s_exp - t_exp));
    let inner = loop_count(budget.case3_inner * 2f64.powi(h_exp - s_exp) * l2);
    let t_size = (ceil_sqrt_over_pow2(n, p.cell.t) as usize).min(n);
    let s_size = ceil_sqrt_over_pow2(n, p.cell.s) as usize;
    let all: Vec<usize> = (1..=n).collect();
    for _ in 0..outer {
        let t = random_subset(n, &all, t_size, rng);
        let pool: Vec<usize> = t.members().to_vec();
        let mut col = Collector::new(p.cell.swap);
        let mut ia = 0u64;
        let mut a = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| -> Result<Step> {
            if ia >= a_steps {
                return Ok(Step::Done);
            }
            ia += 1;
            ae_step(h, col, rng, &t, Role::Anti)
        };
        let mut nested = NestedSets {
            draw: |_: &mut OracleHandle, rng: &mut R| -> Result<VarSet> {
                Ok(random_subset(n, &pool, s_size, rng))
            },
            sets_left: s_loop,
            inner,
            inner_left: 0,
            current: None,
        };
        let mut b = |h: &mut OracleHandle, col: &mut Collector, rng: &mut R| nested.step(h, col, rng);
        if let Some(c) = interleave(h, &mut col, rng, &mut a, &mut b)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Case0,
    Case1_1,
    Case1_2,
    Case2,
    Case3,
    Baseline,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Case0 => "case0",
            CaseKind::Case1_1 => "case1_1",
            CaseKind::Case1_2 => "case1_2",
            CaseKind::Case2 => "case2",
            CaseKind::Case3 => "case3",
            CaseKind::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Result<CaseKind> {
        Ok(match s {
            "case0" => CaseKind::Case0,
            "case1_1" => CaseKind::Case1_1,
            "case1_2" => CaseKind::Case1_2,
            "case2" => CaseKind::Case2,
            "case3" => CaseKind::Case3,
            _ => return Err(Error::Parse(format!("unknown case {s:?}"))),
        })
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tester selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TesterKind {
    Main,
    Baseline,
    CaseOnly(CaseKind),
}

impl TesterKind {
    pub fn parse(s: &str) -> Result<TesterKind> {
        match s {
            "main" => Ok(TesterKind::Main),
            "baseline" => Ok(TesterKind::Baseline),
            _ => match s.strip_prefix("case-only:") {
                Some(c) => Ok(TesterKind::CaseOnly(CaseKind::parse(c)?)),
                None => Err(Error::Parse(format!("unknown tester {s:?}"))),
            },
        }
    }

    fn allows(self, c: CaseKind) -> bool {
        match self {
            TesterKind::Main => c != CaseKind::Baseline,
            TesterKind::Baseline => c == CaseKind::Baseline,
            TesterKind::CaseOnly(k) => k == c,
        }
    }
}

impl fmt::Display for TesterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TesterKind::Main => f.write_str("main"),
            TesterKind::Baseline => f.write_str("baseline"),
            TesterKind::CaseOnly(c) => write!(f, "case-only:{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TesterOutcome {
    pub verdict: Verdict,
    /// Present exactly when the verdict is reject; verified before returning.
    pub certificate: Option<ViolationCertificate>,
    pub queries: u64,
    pub per_case: BTreeMap<CaseKind, u64>,
    /// Seed of the run's random stream; rerunning with it reproduces the run.
    pub seed: u64,
    /// The global cap stopped the run before it finished.
    pub capped: bool,
    /// Branches started.
    pub branches: u64,
}

/// Run the full tester on `h`.
pub fn test_unate(h: &mut OracleHandle, eps: f64, budget: &BudgetConfig, seed: u64) -> Result<TesterOutcome> {
    run_tester(h, eps, budget, seed, TesterKind::Main)
}

/// Run the selected tester. The random stream is `ChaCha8Rng::seed_from_u64(seed)`.
pub fn run_tester(
    h: &mut OracleHandle,
    eps: f64,
    budget: &BudgetConfig,
    seed: u64,
    kind: TesterKind,
) -> Result<TesterOutcome> {
    check_eps(eps)?;
    budget.validate()?;
    let n = h.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = h.queries();
    let cap = budget.total_budget(n, eps, kind);
    let mut run = Run {
        outcome: TesterOutcome {
            verdict: Verdict::Accept,
            certificate: None,
            queries: 0,
            per_case: BTreeMap::new(),
            seed,
            capped: false,
            branches: 0,
        },
        branch_cap: budget.branch_cap,
    };
    h.limited(cap, |h| -> Result<()> {
        if kind.allows(CaseKind::Baseline) {
            run.branch(h, CaseKind::Baseline, false, |h| edge_tester_baseline(h, eps, budget, &mut rng))?;
            return Ok(());
        }
        if kind.allows(CaseKind::Case0)
            && run.branch(h, CaseKind::Case0, false, |h| case0(h, eps, budget, &mut rng))?
        {
            return Ok(());
        }
        for cell in grid_cells(n, eps) {
            let p = CaseParams::new(n, eps, cell)?;
            let mut branches: Vec<CaseKind> = Vec::new();
            if p.high_gate() {
                if p.m.is_some() {
                    branches.push(if p.case1_1_gate() { CaseKind::Case1_1 } else { CaseKind::Case1_2 });
                }
                branches.push(CaseKind::Case2);
            }
            if p.low_gate() {
                branches.push(CaseKind::Case3);
            }
            for c in branches.into_iter().filter(|&c| kind.allows(c)) {
                let stop = run.branch(h, c, true, |h| match c {
                    CaseKind::Case1_1 => case1_1(h, &p, budget, &mut rng),
                    CaseKind::Case1_2 => case1_2(h, &p, budget, &mut rng),
                    CaseKind::Case2 => case2(h, &p, budget, &mut rng),
                    _ => case3(h, &p, budget, &mut rng),
                })?;
                if stop {
                    return Ok(());
                }
            }
        }
        Ok(())
    })?;
    run.outcome.queries = h.queries() - start;
    debug_assert!(run.outcome.queries <= cap);
    Ok(run.outcome)
}

struct Run {
    outcome: TesterOutcome,
    branch_cap: Option<u64>,
}

impl Run {
    /// Run one branch; returns true when the whole run should stop.
    fn branch(
        &mut self,
        h: &mut OracleHandle,
        kind: CaseKind,
        grid: bool,
        body: impl FnOnce(&mut OracleHandle) -> Result<Option<ViolationCertificate>>,
    ) -> Result<bool> {
        let remaining = h.remaining();
        if remaining <= VERIFY_RESERVE {
            self.outcome.capped = true;
            return Ok(true);
        }
        let mut allowance = remaining - VERIFY_RESERVE;
        if grid {
            if let Some(b) = self.branch_cap {
                allowance = allowance.min(b);
            }
        }
        self.outcome.branches += 1;
        let before = h.queries();
        let res = h.limited(allowance, body);
        let cert = match res {
            Ok(c) => c,
            Err(Error::BudgetExhausted) => None,
            Err(e) => return Err(e),
        };
        let mut stop = false;
        if let Some(c) = cert {
            if verify_certificate(h, &c)? {
                self.outcome.verdict = Verdict::Reject;
                self.outcome.certificate = Some(c);
                stop = true;
            }
        }
        *self.outcome.per_case.entry(kind).or_insert(0) += h.queries() - before;
        if !stop && h.remaining() <= VERIFY_RESERVE {
            self.outcome.capped = true;
            stop = true;
        }
        Ok(stop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_and_grid_size() {
        assert_eq!(lambda(64, 0.05), 21);
        assert_eq!(lambda(2, 0.2), 7);
        for (n, eps) in [(2usize, 0.3), (12, 0.1), (64, 0.05)] {
            assert_eq!(grid_cells(n, eps).count() as u64, grid_size(n, eps));
        }
    }

    #[test]
    fn derived_params() {
        let p = CaseParams::new(12, 0.1, GridCell { s: 1, t: 1, h: 1, l: 3, swap: false }).unwrap();
        assert_eq!(p.m, Some(1));
        assert_eq!(p.xi, 0.5);
        assert_eq!(p.i_star, 4);
        assert_eq!(p.p, 3);
        // 2^{3(l-t)} = 64 < 144 = n^2.
        assert!(!p.high_gate() && p.low_gate());
        assert!(!p.case1_1_gate());
        let q = CaseParams::new(64, 0.1, GridCell { s: 2, t: 1, h: 1, l: 6, swap: false }).unwrap();
        assert_eq!(q.m, Some(4));
        assert!(q.high_gate() && !q.low_gate());
        let q = CaseParams::new(64, 0.1, GridCell { s: 1, t: 1, h: 1, l: 4, swap: false }).unwrap();
        assert!(!q.high_gate() && q.low_gate());
        let e = CaseParams::new(64, 0.1, GridCell { s: 1, t: 1, h: 1, l: 5, swap: true }).unwrap();
        assert!(e.high_gate() || e.low_gate());
        assert!(CaseParams::new(12, 0.1, GridCell { s: 1, t: 2, h: 1, l: 3, swap: false }).is_err());
    }

    #[test]
    fn gates_at_equality() {
        // n = 64: 2^{3(l-t)} = 4096 = n^2 when l - t = 4.
        let p = CaseParams::new(64, 0.5, GridCell { s: 1, t: 1, h: 1, l: 5, swap: false }).unwrap();
        assert!(p.high_gate() && p.low_gate());
    }

    #[test]
    fn tester_kind_parsing() {
        assert_eq!(TesterKind::parse("main").unwrap(), TesterKind::Main);
        assert_eq!(TesterKind::parse("case-only:case1_2").unwrap(), TesterKind::CaseOnly(CaseKind::Case1_2));
        assert!(TesterKind::parse("case-only:case9").is_err());
        assert_eq!(TesterKind::CaseOnly(CaseKind::Case3).to_string(), "case-only:case3");
    }

    #[test]
    fn budget_json() {
        let b = BudgetConfig::from_json(r#"{"global_cap": 1000, "case0": 8}"#).unwrap();
        assert_eq!(b.global_cap, Some(1000));
        assert_eq!(b.case0, 8.0);
        assert_eq!(b.case3_a, 4.0);
        assert!(BudgetConfig::from_json(r#"{"case0": 0.5}"#).is_err());
        assert!(BudgetConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
