//! Noise × standoff benchmark comparing the two reconstruction methods.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::forward::{add_noise, apply_forward, ForwardOperator, KernelParams, NoiseSpec};
use crate::fourier::{recon_fourier, select_kmax, SignalModel};
use crate::grid::{rel_l2_error, CurrentField, FieldMap3};
use crate::solver::select_tau;
use crate::wavelet::DivFreeBasis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Fourier,
    L1Curl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fourier => "fourier",
            Method::L1Curl => "l1curl",
        }
    }
}

/// Outcome of one method on one `(z, sigma, seed)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub z: f64,
    pub sigma: f64,
    pub seed: u64,
    pub rel_l2_error: f64,
    /// `||B J - b||²` in T².
    pub data_residual: f64,
    pub runtime_seconds: f64,
    /// Failure message; metrics are NaN when set.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Worker count from `MCI_JOBS`, defaulting to the available parallelism.
pub fn default_jobs() -> usize {
    std::env::var("MCI_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct Cell {
    zi: usize,
    sigma: f64,
    seed: u64,
}

fn run_method(
    method: Method,
    data: &FieldMap3,
    truth: &CurrentField,
    cfg: &ScenarioConfig,
    basis: &DivFreeBasis,
    sigma: f64,
) -> Result<(f64, f64)> {
    let j = match method {
        Method::Fourier => {
            let sc = &cfg.scenario;
            let model = SignalModel { j0: sc.j0, w: sc.trace_width, d: data.d, z: data.z, sigma };
            let k = select_kmax(&model, &sc.grid)?;
            recon_fourier(data, &k.taper)
        }
        Method::L1Curl => {
            let sel = select_tau(data, sigma, &cfg.solver)?;
            basis.synthesize(&sel.coeffs)?
        }
    };
    let model = ForwardOperator::new(data.grid, KernelParams::of(data)).apply(&j);
    Ok((rel_l2_error(&j, truth)?, model.dist_sq(data)))
}

fn row(method: Method, z: f64, cell: &Cell, t: Instant, out: Result<(f64, f64)>) -> SweepRow {
    let runtime_seconds = t.elapsed().as_secs_f64();
    let (rel_l2_error, data_residual, error) = match out {
        Ok((e, r)) => (e, r, None),
        Err(err) => {
            log::warn!("sweep cell {} z={z:e} sigma={:e} seed={} failed: {err}", method.name(), cell.sigma, cell.seed);
            (f64::NAN, f64::NAN, Some(err.to_string()))
        }
    };
    SweepRow {
        method,
        z,
        sigma: cell.sigma,
        seed: cell.seed,
        rel_l2_error,
        data_residual,
        runtime_seconds,
        error,
    }
}

/// Simulate the scenario once, then reconstruct every cell with both methods
/// on up to `jobs` threads. Rows are ordered by standoff, noise level, seed
/// and method regardless of scheduling.
pub fn run_sweep(cfg: &ScenarioConfig, jobs: usize) -> Result<SweepResult> {
    cfg.validate()?;
    let truth = cfg.scenario.simulate()?.current;
    let d = cfg.scenario.geometry.d;
    let fields = cfg
        .standoffs
        .iter()
        .map(|&z| Ok(apply_forward(&truth, &KernelParams::new(z, d)?)))
        .collect::<Result<Vec<_>>>()?;
    let levels = cfg.solver.levels.unwrap_or_else(|| DivFreeBasis::default_levels(&cfg.scenario.grid));
    let basis = DivFreeBasis::new(cfg.scenario.grid, levels)?;

    let mut cells = Vec::new();
    for zi in 0..cfg.standoffs.len() {
        for &sigma in &cfg.noise_sigmas {
            for &seed in &cfg.seeds {
                cells.push(Cell { zi, sigma, seed });
            }
        }
    }
    let work = |cell: &Cell| -> Vec<SweepRow> {
        let z = cfg.standoffs[cell.zi];
        let data = add_noise(&fields[cell.zi], &NoiseSpec { sigma: cell.sigma, seed: cell.seed });
        [Method::Fourier, Method::L1Curl]
            .into_iter()
            .map(|m| {
                let t = Instant::now();
                let out = data
                    .as_ref()
                    .map_err(|e| Error::InvalidParameter(e.to_string()))
                    .and_then(|b| run_method(m, b, &truth, cfg, &basis, cell.sigma));
                row(m, z, cell, t, out)
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<SweepRow>> = pool.install(|| cells.par_iter().map(work).collect());
    Ok(SweepResult { rows: rows.into_iter().flatten().collect() })
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.9e}")
    }
}

impl SweepResult {
    /// CSV table; the runtime column is included only when `timings` is set
    /// so that repeated runs produce identical bytes.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from("method,z,sigma,seed,rel_l2_error,data_residual");
        if timings {
            out.push_str(",runtime_seconds");
        }
        out.push_str(",error\n");
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{:e},{:e},{},{},{}",
                r.method.name(),
                r.z,
                r.sigma,
                r.seed,
                num(r.rel_l2_error),
                num(r.data_residual)
            );
            if timings {
                let _ = write!(out, ",{:.3}", r.runtime_seconds);
            }
            let msg = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(out, ",{msg}");
        }
        out
    }

    /// Cells `(z, sigma, seed)` where both methods succeeded, with the
    /// Fourier and L1-curl errors.
    pub fn paired(&self) -> Vec<(f64, f64, u64, f64, f64)> {
        let mut out = Vec::new();
        for f in self.rows.iter().filter(|r| r.method == Method::Fourier && r.error.is_none()) {
            if let Some(l) = self.rows.iter().find(|r| {
                r.method == Method::L1Curl && r.error.is_none() && r.z == f.z && r.sigma == f.sigma && r.seed == f.seed
            }) {
                out.push((f.z, f.sigma, f.seed, f.rel_l2_error, l.rel_l2_error));
            }
        }
        out
    }

    /// Seed-averaged errors per `(z, sigma)` and the L1-curl win count.
    pub fn summary(&self) -> String {
        let pairs = self.paired();
        let mut keys: Vec<(f64, f64)> = Vec::new();
        for p in &pairs {
            if !keys.iter().any(|k| k.0 == p.0 && k.1 == p.1) {
                keys.push((p.0, p.1));
            }
        }
        let mut out = String::from("     z [um]  sigma [uT]   fourier    l1curl\n");
        for (z, s) in keys {
            let sel: Vec<_> = pairs.iter().filter(|p| p.0 == z && p.1 == s).collect();
            let n = sel.len() as f64;
            let f = sel.iter().map(|p| p.3).sum::<f64>() / n;
            let l = sel.iter().map(|p| p.4).sum::<f64>() / n;
            let _ = writeln!(out, "{:>11.2} {:>11.3} {:>9.4} {:>9.4}", z * 1e6, s * 1e6, f, l);
        }
        let wins = pairs.iter().filter(|p| p.4 < p.3).count();
        let failed = self.rows.iter().filter(|r| r.error.is_some()).count();
        let _ = writeln!(out, "l1curl lower error in {wins} of {} cells; {failed} failed rows", pairs.len());
        out
    }
}
