use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::stats::summarize;
use crate::error::{Error, Result};
use crate::oracle::{make_oracle, verify_certificate, FunctionSpec};
use crate::tester::{run_tester, TesterKind, Verdict};

/// Schema line written before the CSV header.
pub const SCHEMA_LINE: &str = "# schema=1";

/// Aggregated results of one (function, n, eps, tester) cell. Field order
/// is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub function: String,
    pub n: usize,
    pub eps: f64,
    pub tester: String,
    pub trials: u64,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub queries_p50: u64,
    pub queries_p90: u64,
    pub queries_max: u64,
    pub capped: u64,
    pub wall_ms: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed: `mix(mix(mix(master) ^ cell) ^ trial)` with the SplitMix64 finalizer.
pub fn trial_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)
}

#[derive(Clone, Debug)]
struct Cell {
    index: u64,
    spec: FunctionSpec,
    eps: f64,
    tester: TesterKind,
}

fn cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for fam in &cfg.families {
        for &n in &cfg.ns {
            let spec = fam.instantiate(n)?;
            for &eps in &cfg.eps {
                for &tester in &cfg.testers {
                    out.push(Cell { index: out.len() as u64, spec: spec.clone(), eps, tester });
                }
            }
        }
    }
    Ok(out)
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<ResultRow> {
    let start = Instant::now();
    let base = make_oracle(&cell.spec)?;
    let outcomes: Vec<(bool, u64, bool)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, u64, bool)> {
            let mut h = base.fresh();
            let seed = trial_seed(cfg.seed, cell.index, t);
            let o = run_tester(&mut h, cell.eps, &cfg.budget, seed, cell.tester)?;
            let mut rejected = false;
            if o.verdict == Verdict::Reject {
                let cert = o.certificate.as_ref().expect("reject carries a certificate");
                if !verify_certificate(&mut base.fresh(), cert)? {
                    return Err(Error::InvalidParameter(format!(
                        "certificate failed re-verification (seed {seed})"
                    )));
                }
                rejected = true;
            }
            Ok((rejected, o.queries, o.capped))
        })
        .collect::<Result<_>>()?;
    let rejections = outcomes.iter().filter(|o| o.0).count() as u64;
    let queries: Vec<u64> = outcomes.iter().map(|o| o.1).collect();
    let q = summarize(&queries);
    Ok(ResultRow {
        function: cell.spec.label(),
        n: cell.spec.n,
        eps: cell.eps,
        tester: cell.tester.to_string(),
        trials: cfg.trials,
        rejections,
        rejection_rate: rejections as f64 / cfg.trials as f64,
        queries_p50: q.p50,
        queries_p90: q.p90,
        queries_max: q.max,
        capped: outcomes.iter().filter(|o| o.2).count() as u64,
        wall_ms: if cfg.wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
    })
}

/// Streams rows to CSV, flushing after each one.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut w: W) -> Result<CsvSink<W>> {
        writeln!(w, "{SCHEMA_LINE}")?;
        Ok(CsvSink { inner: csv::Writer::from_writer(w) })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        self.inner.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Run every cell of `cfg`, in parallel, emitting rows in cell order.
///
/// With `cfg.out` set, rows are appended to the CSV file as soon as every
/// earlier cell has finished.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let cells = cells(cfg)?;
    let mut sink = match &cfg.out {
        Some(p) => Some(CsvSink::new(BufWriter::new(File::create(p)?))?),
        None => None,
    };
    let (tx, rx) = mpsc::channel::<(usize, Result<ResultRow>)>();
    let mut rows: Vec<ResultRow> = Vec::with_capacity(cells.len());
    let mut first_err: Option<Error> = None;
    std::thread::scope(|s| {
        s.spawn(|| {
            cells.par_iter().enumerate().for_each_with(tx, |tx, (k, c)| {
                let _ = tx.send((k, run_cell(cfg, c)));
            });
        });
        let mut pending: BTreeMap<usize, Result<ResultRow>> = BTreeMap::new();
        for (k, r) in rx {
            pending.insert(k, r);
            while let Some(r) = pending.remove(&rows.len()) {
                match r {
                    Ok(row) if first_err.is_none() => {
                        if let Some(sink) = sink.as_mut() {
                            if let Err(e) = sink.write(&row) {
                                first_err = Some(e);
                            }
                        }
                        rows.push(row);
                    }
                    Ok(_) => {}
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
                if first_err.is_some() {
                    break;
                }
            }
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}
