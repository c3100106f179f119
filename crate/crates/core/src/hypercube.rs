//! Points of {0,1}^n, variable sets over `[n+1]` where `n+1` is the
//! placeholder, orderings, and the flip/substitution algebra.
//!
//! Variables are 1-indexed. Variable `i` is stored at bit `i-1`; the text
//! form of a point puts variable 1 leftmost.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A vertex of the n-dimensional hypercube.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    n: usize,
    words: SmallVec<[u64; 4]>,
}

impl Point {
    pub fn zeros(n: usize) -> Point {
        assert!(n >= 1, "dimension must be at least 1");
        Point { n, words: SmallVec::from_elem(0, n.div_ceil(WORD)) }
    }

    /// Point whose bit `i-1` is bit `i-1` of `index` (variable 1 is the LSB).
    pub fn from_index(n: usize, index: u64) -> Point {
        assert!((1..=64).contains(&n), "from_index needs 1 <= n <= 64");
        let mut p = Point::zeros(n);
        p.words[0] = if n == 64 { index } else { index & ((1u64 << n) - 1) };
        p
    }

    /// Integer encoding with variable 1 as the least significant bit. Only for `n <= 64`.
    pub fn index(&self) -> u64 {
        assert!(self.n <= 64, "index needs n <= 64");
        self.words[0]
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Point {
        let mut p = Point::zeros(n);
        for w in p.words.iter_mut() {
            *w = rng.random();
        }
        p.mask_tail();
        p
    }

    fn mask_tail(&mut self) {
        let r = self.n % WORD;
        if r != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << r) - 1;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Value of variable `i` (1-indexed). The placeholder reads as 0.
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i >= 1 && i <= self.n + 1);
        if i > self.n {
            return false;
        }
        let b = i - 1;
        (self.words[b / WORD] >> (b % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i >= 1 && i <= self.n, "variable {i} out of range");
        let b = i - 1;
        let mask = 1u64 << (b % WORD);
        if v {
            self.words[b / WORD] |= mask;
        } else {
            self.words[b / WORD] &= !mask;
        }
    }

    /// Flip variable `i` in place; flipping the placeholder `n+1` does nothing.
    pub fn flip_var(&mut self, i: usize) {
        debug_assert!(i >= 1 && i <= self.n + 1);
        if i > self.n {
            return;
        }
        let b = i - 1;
        self.words[b / WORD] ^= 1u64 << (b % WORD);
    }

    /// `x^{(i)}`.
    pub fn flipped(&self, i: usize) -> Point {
        let mut p = self.clone();
        p.flip_var(i);
        p
    }

    /// `x^{(S)}`: flip every real variable of `s`.
    pub fn flip(&self, s: &VarSet) -> Result<Point> {
        if s.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: s.n });
        }
        let mut p = self.clone();
        for &i in &s.members {
            p.flip_var(i);
        }
        Ok(p)
    }

    /// XOR with another point of the same dimension.
    pub fn xor(&self, other: &Point) -> Result<Point> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let mut p = self.clone();
        for (a, b) in p.words.iter_mut().zip(other.words.iter()) {
            *a ^= *b;
        }
        Ok(p)
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Parity of the variables in `vars` (placeholder ignored).
    pub fn parity_over(&self, vars: &[usize]) -> bool {
        vars.iter().fold(false, |acc, &i| acc ^ self.get(i))
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Point) -> bool {
        self.n == other.n && self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn parse(s: &str) -> Result<Point> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty point".into()));
        }
        let mut p = Point::zeros(s.chars().count());
        for (k, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => p.set(k + 1, true),
                _ => return Err(Error::Parse(format!("bad bit character {c:?}"))),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({self})")
    }
}

impl std::str::FromStr for Point {
    type Err = Error;
    fn from_str(s: &str) -> Result<Point> {
        Point::parse(s)
    }
}

/// A subset of `[n+1]`; `n+1` is the placeholder.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VarSet {
    n: usize,
    members: Vec<usize>,
}

impl VarSet {
    pub fn new<I: IntoIterator<Item = usize>>(n: usize, members: I) -> Result<VarSet> {
        let mut m: Vec<usize> = members.into_iter().collect();
        for &i in &m {
            if i == 0 || i > n + 1 {
                return Err(Error::VariableOutOfRange { index: i, n });
            }
        }
        m.sort_unstable();
        m.dedup();
        Ok(VarSet { n, members: m })
    }

    pub fn empty(n: usize) -> VarSet {
        VarSet { n, members: Vec::new() }
    }

    /// `[n]`, without the placeholder.
    pub fn full(n: usize) -> VarSet {
        VarSet { n, members: (1..=n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn placeholder(&self) -> usize {
        self.n + 1
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// Members other than the placeholder.
    pub fn real(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.members.iter().copied().filter(move |&i| i <= n)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn has_placeholder(&self) -> bool {
        self.contains(self.n + 1)
    }

    pub fn insert(&mut self, i: usize) -> Result<()> {
        if i == 0 || i > self.n + 1 {
            return Err(Error::VariableOutOfRange { index: i, n: self.n });
        }
        if let Err(pos) = self.members.binary_search(&i) {
            self.members.insert(pos, i);
        }
        Ok(())
    }

    pub fn remove(&mut self, i: usize) -> bool {
        match self.members.binary_search(&i) {
            Ok(pos) => {
                self.members.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, i: usize) -> Result<VarSet> {
        let mut s = self.clone();
        s.insert(i)?;
        Ok(s)
    }

    pub fn without(&self, i: usize) -> VarSet {
        let mut s = self.clone();
        s.remove(i);
        s
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.n == other.n && self.members.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        VarSet::new(self.n, self.iter().chain(other.iter())).expect("same ambient range")
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        VarSet { n: self.n, members: self.iter().filter(|&i| other.contains(i)).collect() }
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        VarSet { n: self.n, members: self.iter().filter(|&i| !other.contains(i)).collect() }
    }

    /// `Sub(S, i)`: swap the roles of `i` and the placeholder.
    pub fn sub(&self, i: usize) -> Result<VarSet> {
        if i == 0 || i > self.n {
            return Err(Error::VariableOutOfRange { index: i, n: self.n });
        }
        let p = self.n + 1;
        let mut s = self.clone();
        match (self.contains(i), self.contains(p)) {
            (true, false) => {
                s.remove(i);
                s.insert(p)?;
            }
            (false, true) => {
                s.remove(p);
                s.insert(i)?;
            }
            _ => {}
        }
        Ok(s)
    }

    /// Parse `"2,5,P"`; an empty string is the empty set.
    pub fn parse(n: usize, s: &str) -> Result<VarSet> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(VarSet::empty(n));
        }
        let mut out = Vec::new();
        for tok in s.split(',') {
            let tok = tok.trim();
            if tok.eq_ignore_ascii_case("p") {
                out.push(n + 1);
            } else {
                out.push(tok.parse::<usize>().map_err(|e| Error::Parse(format!("{tok:?}: {e}")))?);
            }
        }
        VarSet::new(n, out)
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &i) in self.members.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            if i == self.n + 1 {
                f.write_str("P")?;
            } else {
                write!(f, "{i}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// A bijection `[|S|] -> S`, stored as the sequence `π(1), …, π(|S|)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ordering {
    over: VarSet,
    seq: Vec<usize>,
}

impl Ordering {
    pub fn new(over: VarSet, seq: Vec<usize>) -> Result<Ordering> {
        if seq.len() != over.len() {
            return Err(Error::InvalidOrdering(format!(
                "sequence has {} entries for a set of size {}",
                seq.len(),
                over.len()
            )));
        }
        let mut sorted = seq.clone();
        sorted.sort_unstable();
        if sorted != over.members {
            return Err(Error::InvalidOrdering("sequence is not a bijection onto the set".into()));
        }
        Ok(Ordering { over, seq })
    }

    /// Build the ordering and its domain from the sequence alone.
    pub fn from_seq(n: usize, seq: Vec<usize>) -> Result<Ordering> {
        let over = VarSet::new(n, seq.iter().copied())?;
        Ordering::new(over, seq)
    }

    pub fn ascending(over: &VarSet) -> Ordering {
        Ordering { over: over.clone(), seq: over.members.clone() }
    }

    /// Uniformly random ordering (Fisher-Yates over the ascending order).
    pub fn random<R: Rng + ?Sized>(over: &VarSet, rng: &mut R) -> Ordering {
        let mut seq = over.members.clone();
        seq.shuffle(rng);
        Ordering { over: over.clone(), seq }
    }

    pub fn over(&self) -> &VarSet {
        &self.over
    }

    pub fn seq(&self) -> &[usize] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// `π(t)` for `1 <= t <= |S|`.
    pub fn step(&self, t: usize) -> usize {
        self.seq[t - 1]
    }

    /// Ordering on `t ⊆ S` that keeps the relative order of `π`.
    pub fn restrict(&self, t: &VarSet) -> Result<Ordering> {
        if !t.is_subset(&self.over) {
            return Err(Error::NotSubset);
        }
        Ok(Ordering {
            over: t.clone(),
            seq: self.seq.iter().copied().filter(|&i| t.contains(i)).collect(),
        })
    }

    /// Ordering made of the entries at the given 0-based positions, in
    /// sequence order. Positions must be strictly increasing.
    pub fn select_positions(&self, positions: &[usize]) -> Ordering {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        let seq: Vec<usize> = positions.iter().map(|&p| self.seq[p]).collect();
        let over = VarSet::new(self.over.n, seq.iter().copied()).expect("entries are in range");
        Ordering { over, seq }
    }

    /// Rename `i` to `n+1` and `n+1` to `i`, position by position.
    pub fn substitute(&self, i: usize) -> Result<Ordering> {
        let n = self.over.n;
        if i == 0 || i > n {
            return Err(Error::VariableOutOfRange { index: i, n });
        }
        let p = n + 1;
        let seq = self
            .seq
            .iter()
            .map(|&v| if v == i { p } else if v == p { i } else { v })
            .collect();
        Ok(Ordering { over: self.over.sub(i)?, seq })
    }

    /// Drop one variable, keeping the order of the rest.
    pub fn remove(&self, v: usize) -> Ordering {
        Ordering {
            over: self.over.without(v),
            seq: self.seq.iter().copied().filter(|&x| x != v).collect(),
        }
    }
}

impl fmt::Debug for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.over.n;
        f.write_str("(")?;
        for (k, &i) in self.seq.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            if i == n + 1 {
                f.write_str("P")?;
            } else {
                write!(f, "{i}")?;
            }
        }
        f.write_str(")")
    }
}

/// `x_t`: start at `x` and flip `π(1), …, π(t)` in order.
pub fn path_point(x: &Point, pi: &Ordering, t: usize) -> Result<Point> {
    if pi.over.n != x.n {
        return Err(Error::DimensionMismatch { expected: x.n, found: pi.over.n });
    }
    if t > pi.len() {
        return Err(Error::StepOutOfRange { t, len: pi.len() });
    }
    let mut p = x.clone();
    for &v in &pi.seq[..t] {
        p.flip_var(v);
    }
    Ok(p)
}

/// A hypercube edge along a real variable, named by its endpoint with that bit cleared.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Edge {
    lo: Point,
    variable: usize,
}

impl Edge {
    /// The edge `(x, x^{(i)})`, whichever endpoint is given.
    pub fn new(x: &Point, i: usize) -> Result<Edge> {
        if i == 0 || i > x.n {
            return Err(Error::VariableOutOfRange { index: i, n: x.n });
        }
        let mut lo = x.clone();
        lo.set(i, false);
        Ok(Edge { lo, variable: i })
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> Point {
        self.lo.flipped(self.variable)
    }

    pub fn variable(&self) -> usize {
        self.variable
    }
}
