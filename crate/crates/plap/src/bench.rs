//! Iteration-count sweeps over `(p, n, method)` cells.
//!
//! `n` is the number of interior vertices of a square grid; the unit square
//! is split into `k × k` cells with `k = round(√n) + 1`, so a request for
//! `n = 16` solves on 5 × 5 cells with a 4 × 4 block of unknowns.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use plap_core::pathfollow::{Method, SolverConstants};
use plap_core::{solve_with, BoundaryData, BoundaryPreset, Exponent, Forcing, Prolongation, SolveConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);
pub const WORKERS_ENV: &str = "PLAP_WORKERS";

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub p_list: Vec<Exponent>,
    pub n_list: Vec<usize>,
    /// Expanded method list; long-step entries carry their κ.
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub timeout: Duration,
    pub boundary: BoundaryPreset,
    pub forcing: f64,
}

impl BenchSpec {
    /// Cells in sweep order: `p` outermost, then method, then `n`.
    pub fn cells(&self) -> Vec<(Exponent, Method, usize)> {
        let mut out = Vec::new();
        for &p in &self.p_list {
            for &m in &self.methods {
                for &n in &self.n_list {
                    out.push((p, m, n));
                }
            }
        }
        out
    }

    pub fn config_for(&self, p: Exponent, method: Method, n: usize) -> SolveConfig {
        SolveConfig {
            dim: 2,
            cells: cells_for_interior(n),
            extents: vec![1.0, 1.0],
            p,
            epsilon: self.epsilon,
            boundary: BoundaryData::Preset(self.boundary),
            forcing: Forcing::Constant(self.forcing),
            method,
            prolongation: Prolongation::Harmonic,
            constants: SolverConstants::default(),
            max_iterations: None,
        }
    }
}

/// Cells per axis giving (close to) `n` interior vertices on a square.
pub fn cells_for_interior(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1) + 1
}

/// Builds the method list from names, long-step κ values and the adaptive κ0.
pub fn expand_methods(names: &[String], kappas: &[f64], kappa0: f64) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in names {
        match name.trim().to_ascii_lowercase().as_str() {
            "short" => out.push(Method::Short),
            "long" => {
                if kappas.is_empty() {
                    return Err(CliError::Config("long-step runs need at least one kappa".into()));
                }
                out.extend(kappas.iter().map(|&kappa| Method::Long { kappa }));
            }
            "adaptive" => out.push(Method::Adaptive { kappa0 }),
            other => return Err(CliError::Config(format!("unknown method {other:?}"))),
        }
    }
    for m in &out {
        match *m {
            Method::Long { kappa: k } | Method::Adaptive { kappa0: k } if !(k >= 1.0 && k.is_finite()) => {
                return Err(CliError::Config(format!("kappa must be at least 1, got {k}")));
            }
            _ => {}
        }
    }
    Ok(out)
}

/// One CSV row. `kappa` is empty for the short-step method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub p: String,
    pub n: usize,
    pub m: usize,
    pub method: String,
    pub kappa: Option<f64>,
    pub newton_total: Option<usize>,
    pub newton_aux: Option<usize>,
    pub rejections: Option<usize>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub gap_bound: Option<f64>,
    pub wall_ms: f64,
    pub status: String,
}

impl BenchRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn method_kappa(m: Method) -> Option<f64> {
    match m {
        Method::Short => None,
        Method::Long { kappa } => Some(kappa),
        Method::Adaptive { kappa0 } => Some(kappa0),
    }
}

/// Solves one cell, giving up after `timeout`.
pub fn run_cell(spec: &BenchSpec, p: Exponent, method: Method, n: usize) -> BenchRow {
    let config = spec.config_for(p, method, n);
    let cells = config.cells;
    let start = Instant::now();
    let timeout = spec.timeout;
    let interrupt = move || start.elapsed() > timeout;
    let result = solve_with(&config, Some(&interrupt));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let n_interior = (cells - 1) * (cells - 1);
    let mut row = BenchRow {
        p: p.to_string(),
        n: n_interior,
        m: 2 * cells * cells,
        method: method.name().into(),
        kappa: method_kappa(method),
        newton_total: None,
        newton_aux: None,
        rejections: None,
        j: None,
        gap_bound: None,
        wall_ms,
        status: String::new(),
    };
    match result {
        Ok(r) => {
            row.newton_total = Some(r.newton_total);
            row.newton_aux = Some(r.newton_aux);
            row.rejections = Some(r.rejections);
            row.j = Some(r.final_energy);
            row.gap_bound = Some(r.gap_bound);
            row.status = "ok".into();
        }
        Err(e) => row.status = e.category().into(),
    }
    row
}

/// Worker count from `PLAP_WORKERS`; `None` lets rayon decide.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(w) => Ok(Some(w)),
            Err(_) => Err(CliError::Config(format!("{WORKERS_ENV} must be a non-negative integer, got {s:?}"))),
        },
    }
}

/// Runs every cell on a pool of `workers` threads. Rows come back in sweep order.
pub fn run(spec: &BenchSpec, workers: Option<usize>) -> Result<Vec<BenchRow>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let cells = spec.cells();
    Ok(pool.install(|| cells.par_iter().map(|&(p, m, n)| run_cell(spec, p, m, n)).collect()))
}

/// Series key `(p, method, kappa)` with its `(ln n, ln newton_total)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub p: String,
    pub method: String,
    pub kappa: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

pub fn log_log_series(rows: &[BenchRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows.iter().filter(|r| r.ok()) {
        let point = ((r.n as f64).ln(), (r.newton_total.unwrap_or(0) as f64).ln());
        match out
            .iter_mut()
            .find(|s| s.p == r.p && s.method == r.method && s.kappa == r.kappa)
        {
            Some(s) => s.points.push(point),
            None => out.push(Series {
                p: r.p.clone(),
                method: r.method.clone(),
                kappa: r.kappa,
                points: vec![point],
            }),
        }
    }
    out
}

/// Least-squares slope and intercept of `y` against `x`; `None` with fewer
/// than two distinct abscissae.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// `bench.csv` → `bench.loglog.csv`, `bench.slopes.csv`.
pub fn companion_paths(out: &Path) -> (PathBuf, PathBuf) {
    let stem = out.with_extension("");
    let loglog = PathBuf::from(format!("{}.loglog.csv", stem.display()));
    let slopes = PathBuf::from(format!("{}.slopes.csv", stem.display()));
    (loglog, slopes)
}

pub fn write_rows(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct LogLogRow<'a> {
    p: &'a str,
    method: &'a str,
    kappa: Option<f64>,
    log_n: f64,
    log_newton_total: f64,
}

#[derive(Serialize)]
struct SlopeRow<'a> {
    p: &'a str,
    method: &'a str,
    kappa: Option<f64>,
    points: usize,
    slope: Option<f64>,
    /// `e^intercept`, the `C` of `N ≈ C n^slope`.
    prefactor: Option<f64>,
}

pub fn write_companions(out: &Path, rows: &[BenchRow]) -> Result<()> {
    let series = log_log_series(rows);
    let (loglog, slopes) = companion_paths(out);
    let mut w = csv::Writer::from_path(&loglog).map_err(|e| CliError::format(&loglog, e))?;
    for s in &series {
        for &(x, y) in &s.points {
            w.serialize(LogLogRow {
                p: &s.p,
                method: &s.method,
                kappa: s.kappa,
                log_n: x,
                log_newton_total: y,
            })
            .map_err(|e| CliError::format(&loglog, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(&loglog, e))?;

    let mut w = csv::Writer::from_path(&slopes).map_err(|e| CliError::format(&slopes, e))?;
    for s in &series {
        let fit = fit_line(&s.points);
        w.serialize(SlopeRow {
            p: &s.p,
            method: &s.method,
            kappa: s.kappa,
            points: s.points.len(),
            slope: fit.map(|f| f.0),
            prefactor: fit.map(|f| f.1.exp()),
        })
        .map_err(|e| CliError::format(&slopes, e))?;
    }
    w.flush().map_err(|e| CliError::io(&slopes, e))
}

/// Exit status of a finished sweep.
pub fn outcome(rows: &[BenchRow]) -> Result<()> {
    if rows.is_empty() || rows.iter().any(BenchRow::ok) {
        Ok(())
    } else if rows.iter().all(|r| r.status == "timeout") {
        Err(CliError::AllTimedOut)
    } else {
        Err(CliError::AllFailed)
    }
}
