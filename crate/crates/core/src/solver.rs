//! L1-curl regularized inversion in the divergence-free wavelet basis.
//!
//! Minimizes `||B J(w) - b||² + τ ||curl J(w)||₁` over wavelet coefficients
//! `w` by linearized ADMM. Both the field operator and the curl are diagonal
//! in the Fourier basis of the stream coefficients, so the proximal step of the
//! data term is solved exactly per frequency bin. The iteration runs on a
//! rescaled problem in which both operators have unit norm; `rho` and
//! `step_mu` refer to that scaled problem.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::forward::{ForwardOperator, KernelParams};
use crate::grid::{FieldMap3, GridSpec, ScalarMap};
use crate::wavelet::divfree::{DfwCoeffs, DivFreeBasis};
use crate::wavelet::filters::FamilyChain;
use crate::wavelet::fwt::{forward_2d, inverse_2d, FilterPair};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    /// `0.95 / (rho ||K||²)`.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    pub rho: f64,
    pub step_mu: StepSize,
    /// Stop once the relative iterate change and the relative primal
    /// residual both fall below this value.
    pub stop_rel_change: f64,
    /// Decomposition depth; `None` selects the default for the grid.
    pub levels: Option<usize>,
    /// Linearize the coupling term (proximal-gradient w-step with `step_mu`)
    /// instead of solving the w-step exactly per frequency bin.
    pub linearized: bool,
    /// Rebalance `rho` from the primal and dual residuals (exact w-step only).
    pub adaptive_rho: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer_iters: 1500,
            rho: 1.0,
            step_mu: StepSize::Auto,
            stop_rel_change: 1e-4,
            levels: None,
            linearized: false,
            adaptive_rho: true,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<f64> {
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("max_outer_iters must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho = {} must be positive", self.rho)));
        }
        if !(self.stop_rel_change >= 0.0) {
            return Err(Error::InvalidParameter("stop_rel_change must be non-negative".into()));
        }
        match self.step_mu {
            StepSize::Auto => Ok(0.95 / self.rho),
            StepSize::Fixed(mu) if mu > 0.0 && mu * self.rho <= 1.0 => Ok(mu),
            StepSize::Fixed(mu) => Err(Error::InvalidParameter(format!(
                "step_mu = {mu} violates step_mu * rho * ||K||² <= 1"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveDiagnostics {
    /// Objective after each outer iteration, in the original units.
    pub objective_trace: Vec<f64>,
    /// `||B J - b||²` in T².
    pub data_residual: f64,
    /// `Σ |curl J|` over grid samples.
    pub curl_l1: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `||K w - z|| / ||K w||`.
    pub primal_residual: f64,
}

/// `sign(v) max(|v| - t, 0)` elementwise.
pub fn soft_threshold(v: &ScalarMap, t: f64) -> Result<ScalarMap> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold {t} must be non-negative")));
    }
    Ok(ScalarMap { grid: v.grid, values: v.values.mapv(|x| shrink(x, t)) })
}

#[inline]
fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Largest singular value of a self-adjoint-composable operator via a fixed
/// number of power iterations on `KᵀK` from a seeded random start.
pub fn power_iteration<F>(dim: (usize, usize), iters: usize, seed: u64, ktk: F) -> f64
where
    F: Fn(&Array2<f64>) -> Array2<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array2::from_shape_fn(dim, |_| StandardNormal.sample(&mut rng));
    let mut lambda = 0.0;
    for _ in 0..iters {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        let next = ktk(&v);
        lambda = v.iter().zip(next.iter()).map(|(a, b)| a * b).sum::<f64>();
        v = next;
    }
    lambda.max(0.0).sqrt()
}

/// Estimated `||K||₂` for `K = analytic_curl ∘ dfw_synthesize` on coefficient space.
pub fn estimate_opnorm(levels: usize, grid: &GridSpec, chain: &FamilyChain) -> Result<f64> {
    let basis = DivFreeBasis::with_chain(*grid, levels, chain.clone())?;
    let (_, _, curl) = basis.symbols();
    let fft = basis.fft();
    let primal = FilterPair::primal(&chain.fb_plus);
    let ktk = |w: &Array2<f64>| {
        let s = inverse_2d(w, levels, primal);
        let spec = fft.forward(&s);
        let filtered = Zip::from(&spec).and(curl).map_collect(|a, k| a * k.norm_sqr());
        forward_2d(&fft.inverse_real(filtered), levels, primal)
    };
    Ok(power_iteration((grid.n(), grid.n()), 30, 0x5eed, ktk))
}

const RHO_PERIOD: usize = 10;
const RHO_BALANCE: f64 = 10.0;
const RHO_STEP: f64 = 2.0;

/// Per-bin operators of one problem, scaled to unit norm.
struct Problem {
    basis: DivFreeBasis,
    /// Field symbols `(bx, by, bz)` per unit stream spectrum.
    a: [Array2<Complex64>; 3],
    /// Normalized data spectra with the uniform-current part removed.
    b: [Array2<Complex64>; 3],
    kappa: Array2<Complex64>,
    /// `s = alpha s'`, `b = beta b'`.
    alpha: f64,
    beta: f64,
    k_norm: f64,
    mean_x: f64,
    mean_y: f64,
}

impl Problem {
    fn new(b: &FieldMap3, levels: Option<usize>) -> Result<Option<Self>> {
        let grid = b.grid;
        let levels = levels.unwrap_or_else(|| DivFreeBasis::default_levels(&grid));
        let basis = DivFreeBasis::new(grid, levels)?;
        let op = ForwardOperator::new(grid, KernelParams::of(b));
        let n2 = (grid.n() * grid.n()) as f64;
        let g0 = op.g()[(0, 0)];
        let mean_x = -b.by.sum() / n2 / g0;
        let mean_y = b.bx.sum() / n2 / g0;

        let fft = basis.fft();
        let mut bx = fft.forward(&b.bx);
        let mut by = fft.forward(&b.by);
        let bz = fft.forward(&b.bz);
        bx[(0, 0)] = Complex64::new(0.0, 0.0);
        by[(0, 0)] = Complex64::new(0.0, 0.0);

        let (cx, cy, curl) = basis.symbols();
        let ax = Zip::from(cy).and(op.g()).map_collect(|c, g| c * *g);
        let ay = Zip::from(cx).and(op.g()).map_collect(|c, g| -c * *g);
        let az = Zip::from(cx)
            .and(cy)
            .and(op.gx())
            .and(op.gy())
            .map_collect(|cx, cy, gx, gy| gx * cx + gy * cy);
        let a_norm = Zip::from(&ax)
            .and(&ay)
            .and(&az)
            .fold(0.0f64, |m, x, y, z| m.max(x.norm_sqr() + y.norm_sqr() + z.norm_sqr()))
            .sqrt();
        let k_norm = curl.iter().fold(0.0f64, |m, k| m.max(k.norm()));

        let beta = [&bx, &by, &bz]
            .iter()
            .map(|s| s.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
            / n2.sqrt();
        if beta == 0.0 || a_norm == 0.0 {
            return Ok(None);
        }
        let alpha = beta / a_norm;
        let inv_a = 1.0 / a_norm;
        let inv_b = 1.0 / beta;
        Ok(Some(Problem {
            a: [ax * inv_a, ay * inv_a, az * inv_a],
            b: [bx * inv_b, by * inv_b, bz * inv_b],
            kappa: curl / k_norm,
            basis,
            alpha,
            beta,
            k_norm,
            mean_x,
            mean_y,
        }))
    }

    fn n2(&self) -> f64 {
        let n = self.basis.grid().n();
        (n * n) as f64
    }

    /// `Aᴴ b` and `|A|²` per bin.
    fn normal_terms(&self) -> (Array2<Complex64>, Array2<f64>) {
        let [ax, ay, az] = &self.a;
        let [bx, by, bz] = &self.b;
        let mut atb = Array2::<Complex64>::zeros(ax.dim());
        for (a, b) in [(ax, bx), (ay, by), (az, bz)] {
            Zip::from(&mut atb).and(a).and(b).for_each(|o, a, b| *o += a.conj() * b);
        }
        let ata = Zip::from(ax)
            .and(ay)
            .and(az)
            .map_collect(|x, y, z| x.norm_sqr() + y.norm_sqr() + z.norm_sqr());
        (atb, ata)
    }

    /// Normalized `||A s' - b'||²` in real-space units.
    fn residual(&self, s: &Array2<Complex64>) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.a.iter().zip(self.b.iter()) {
            acc += Zip::from(a)
                .and(b)
                .and(s)
                .fold(0.0, |acc, a, b, s| acc + (a * s - b).norm_sqr());
        }
        acc / self.n2()
    }

    /// Smallest `tau` (original units) whose solution has zero curl.
    fn tau_max(&self) -> f64 {
        let (atb, _) = self.normal_terms();
        let y = Zip::from(&atb).and(&self.kappa).map_collect(|a, k| {
            if k.norm_sqr() > 0.0 {
                a * 2.0 / k.conj()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let t = self.basis.fft().inverse_real(y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        t * self.beta * self.beta / (self.alpha * self.k_norm)
    }

    /// Canonical coefficients for a normalized stream spectrum.
    fn coeffs(&self, s: Array2<Complex64>) -> DfwCoeffs {
        let stream = self.basis.fft().inverse_real(s) * self.alpha;
        DfwCoeffs {
            grid: *self.basis.grid(),
            levels: self.basis.levels(),
            coeffs: self.basis.coeffs_from_stream(&stream),
            mean_x: self.mean_x,
            mean_y: self.mean_y,
        }
    }
}

fn zero_solution(b: &FieldMap3, levels: Option<usize>) -> Result<(DfwCoeffs, SolveDiagnostics)> {
    let levels = levels.unwrap_or_else(|| DivFreeBasis::default_levels(&b.grid));
    let w = DfwCoeffs::zeros(b.grid, levels)?;
    let diag = finalize(&w, b, Vec::new(), 0, true, 0.0)?;
    Ok((w, diag))
}

fn finalize(
    w: &DfwCoeffs,
    b: &FieldMap3,
    objective_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    primal_residual: f64,
) -> Result<SolveDiagnostics> {
    let basis = DivFreeBasis::new(w.grid, w.levels)?;
    let j = basis.synthesize(w)?;
    let model = ForwardOperator::new(b.grid, KernelParams::of(b)).apply(&j);
    let curl = basis.analytic_curl(w)?;
    Ok(SolveDiagnostics {
        objective_trace,
        data_residual: model.dist_sq(b),
        curl_l1: curl.values.iter().map(|v| v.abs()).sum(),
        iterations,
        converged,
        primal_residual,
    })
}

/// Regularization weight above which the solution has zero curl.
pub fn tau_max(b_hat: &FieldMap3, levels: Option<usize>) -> Result<f64> {
    Ok(Problem::new(b_hat, levels)?.map_or(0.0, |p| p.tau_max()))
}

/// ADMM iterate carried between solves of the same problem.
#[derive(Clone)]
struct State {
    s: Array2<Complex64>,
    z: Array2<f64>,
    u: Array2<f64>,
    rho: f64,
}

struct RunOutcome {
    state: State,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    primal: f64,
}

impl Problem {
    /// Initial iterate: the adjoint image scaled to best fit the data.
    fn initial_state(&self, atb: &Array2<Complex64>, ata: &Array2<f64>, rho: f64) -> State {
        let mut s = atb.clone();
        let fit = Zip::from(atb).and(ata).fold((0.0, 0.0), |(num, den), v, d| {
            (num + d * v.norm_sqr(), den + d * d * v.norm_sqr())
        });
        if fit.1 > 0.0 {
            s.mapv_inplace(|v| v * (fit.0 / fit.1));
        }
        let z = self.basis.fft().inverse_real(&s * &self.kappa);
        let u = Array2::zeros(z.dim());
        State { s, z, u, rho }
    }

    fn scaled_tau(&self, tau: f64) -> f64 {
        tau * self.alpha * self.k_norm / (self.beta * self.beta)
    }

    fn run(&self, tau: f64, opts: &SolverOptions, mu: f64, mut st: State) -> Result<RunOutcome> {
        let fft = self.basis.fft();
        let (atb, ata) = self.normal_terms();
        let tau_s = self.scaled_tau(tau);
        let adaptive = opts.adaptive_rho && !opts.linearized;
        let scale_obj = self.beta * self.beta;
        let k2 = self.kappa.mapv(|k| k.norm_sqr());
        let kx_of = |s: &Array2<Complex64>| fft.inverse_real(s * &self.kappa);
        let mut trace = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        let mut primal = 0.0;
        let mut kx = kx_of(&st.s);

        for it in 0..opts.max_outer_iters {
            iterations = it + 1;
            let rho = st.rho;
            let mut change = 0.0;
            let mut norm = 0.0;
            if opts.linearized {
                // x <- prox_{mu f}(x - mu rho Kᵀ(Kx - z + u))
                let lin = mu * rho;
                let inv_mu = 1.0 / mu;
                let r_hat = fft.forward(&(&kx - &st.z + &st.u));
                Zip::from(&mut st.s)
                    .and(&r_hat)
                    .and(&self.kappa)
                    .and(&atb)
                    .and(&ata)
                    .for_each(|s, r, k, atb, ata| {
                        let v = *s - k.conj() * r * lin;
                        let next = (atb * 2.0 + v * inv_mu) / (2.0 * ata + inv_mu);
                        change += (next - *s).norm_sqr();
                        norm += next.norm_sqr();
                        *s = next;
                    });
            } else {
                // x <- argmin f(x) + rho/2 ||Kx - z + u||², exact per bin
                let r_hat = fft.forward(&(&st.z - &st.u));
                let den = &ata * 2.0 + &k2 * rho;
                Zip::from(&mut st.s)
                    .and(&r_hat)
                    .and(&self.kappa)
                    .and(&atb)
                    .and(&den)
                    .for_each(|s, r, k, atb, den| {
                        let next = if *den > 1e-300 {
                            (atb * 2.0 + k.conj() * r * rho) / *den
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        change += (next - *s).norm_sqr();
                        norm += next.norm_sqr();
                        *s = next;
                    });
            }
            kx = kx_of(&st.s);
            let thresh = tau_s / rho;
            let mut d2 = 0.0;
            Zip::from(&mut st.z).and(&kx).and(&st.u).for_each(|z, k, u| {
                let next = shrink(k + u, thresh);
                d2 += (next - *z) * (next - *z);
                *z = next;
            });
            let mut p2 = 0.0;
            let mut kx2 = 0.0;
            Zip::from(&mut st.u).and(&kx).and(&st.z).for_each(|u, k, z| {
                let d = k - z;
                *u += d;
                p2 += d * d;
                kx2 += k * k;
            });
            let l1: f64 = kx.iter().map(|v| v.abs()).sum();
            let obj = scale_obj * (self.residual(&st.s) + tau_s * l1);
            if !obj.is_finite() {
                return Err(Error::Diverged(format!("non-finite objective at iteration {iterations}")));
            }
            trace.push(obj);
            let rel = if norm > 0.0 { (change / norm).sqrt() } else { 0.0 };
            primal = if kx2 > 0.0 { (p2 / kx2).sqrt() } else { 0.0 };
            if rel < opts.stop_rel_change && primal < opts.stop_rel_change {
                converged = true;
                break;
            }
            if adaptive && it % RHO_PERIOD == RHO_PERIOD - 1 {
                // Residual balancing; the scaled dual variable follows rho.
                let (r, sd) = (p2.sqrt(), rho * d2.sqrt());
                let f = if r > RHO_BALANCE * sd {
                    RHO_STEP
                } else if sd > RHO_BALANCE * r {
                    1.0 / RHO_STEP
                } else {
                    1.0
                };
                if f != 1.0 && (rho * f).is_normal() {
                    st.rho = rho * f;
                    st.u /= f;
                }
            }
        }
        log::debug!("ladmm: tau = {tau:e}, {iterations} iterations, converged = {converged}");
        Ok(RunOutcome { state: st, trace, iterations, converged, primal })
    }

    /// Per-bin least squares (`tau = 0`).
    fn least_squares(&self) -> Array2<Complex64> {
        let (atb, ata) = self.normal_terms();
        Zip::from(&atb)
            .and(&ata)
            .map_collect(|v, d| if *d > 1e-24 { v / *d } else { Complex64::new(0.0, 0.0) })
    }

    fn solve(
        &self,
        b_hat: &FieldMap3,
        tau: f64,
        opts: &SolverOptions,
        mu: f64,
        warm: Option<State>,
    ) -> Result<(DfwCoeffs, SolveDiagnostics, Option<State>)> {
        if tau == 0.0 {
            let w = self.coeffs(self.least_squares());
            let diag = finalize(&w, b_hat, Vec::new(), 0, true, 0.0)?;
            return Ok((w, diag, None));
        }
        let st = match warm {
            Some(st) => st,
            None => {
                let (atb, ata) = self.normal_terms();
                self.initial_state(&atb, &ata, opts.rho)
            }
        };
        let out = self.run(tau, opts, mu, st)?;
        let w = self.coeffs(out.state.s.clone());
        let diag = finalize(&w, b_hat, out.trace, out.iterations, out.converged, out.primal)?;
        Ok((w, diag, Some(out.state)))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tau = {tau} must be non-negative")))
    }
}

/// Solve the L1-curl problem for a fixed `tau` (in T² per A/m³).
pub fn ladmm_solve(
    b_hat: &FieldMap3,
    tau: f64,
    opts: &SolverOptions,
) -> Result<(DfwCoeffs, SolveDiagnostics)> {
    check_tau(tau)?;
    let mu = opts.validate()?;
    match Problem::new(b_hat, opts.levels)? {
        Some(p) => p.solve(b_hat, tau, opts, mu, None).map(|(w, d, _)| (w, d)),
        None => zero_solution(b_hat, opts.levels),
    }
}

/// Result of the residual-discrepancy search.
#[derive(Clone, Debug)]
pub struct TauSelection {
    pub tau: f64,
    pub coeffs: DfwCoeffs,
    pub diagnostics: SolveDiagnostics,
    /// `3 σ² n²`.
    pub target: f64,
    /// Final residual lies in `[2.5, 3.5] σ² n²`.
    pub in_band: bool,
    pub solves: usize,
}

/// Residual band as multiples of `σ² n²`.
pub const RESIDUAL_BAND: (f64, f64) = (2.5, 3.5);
const MAX_BISECTIONS: usize = 12;
/// Relative distance from `3 σ² n²` at which the search stops early.
const TARGET_TOL: f64 = 0.02;
const MAX_EXPANSIONS: usize = 30;
/// Relative residual drop per decade of tau below which the walk is stalled.
const STALL_DROP: f64 = 0.05;
/// A stalled residual below this fraction of the data energy is treated as
/// the interpolation floor rather than as model mismatch.
const FIT_FLOOR: f64 = 1e-4;

/// Choose `tau` so that the data residual matches the expected noise energy.
pub fn select_tau(b_hat: &FieldMap3, sigma: f64, opts: &SolverOptions) -> Result<TauSelection> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
    }
    let n2 = (b_hat.grid.n() * b_hat.grid.n()) as f64;
    let unit = sigma * sigma * n2;
    let (lo, hi) = (RESIDUAL_BAND.0 * unit, RESIDUAL_BAND.1 * unit);
    let mu = opts.validate()?;
    let prob = Problem::new(b_hat, opts.levels)?
        .ok_or_else(|| Error::Bracket("data carry no curl-bearing signal".into()))?;
    let mut solves = 0;
    let mut warm: Option<State> = None;
    let mut run = |tau: f64| -> Result<(DfwCoeffs, SolveDiagnostics)> {
        solves += 1;
        let (w, d, st) = prob.solve(b_hat, tau, opts, mu, warm.take())?;
        warm = st;
        log::debug!("select_tau: tau = {tau:e}, residual / sigma² n² = {:.4}", d.data_residual / unit);
        Ok((w, d))
    };
    let accept = |tau: f64, sol: (DfwCoeffs, SolveDiagnostics), solves: usize| {
        let r = sol.1.data_residual;
        TauSelection {
            tau,
            coeffs: sol.0,
            diagnostics: sol.1,
            target: 3.0 * unit,
            in_band: r >= lo && r <= hi,
            solves,
        }
    };

    // Residual grows with tau; walk down from the zero-curl threshold until
    // the target is bracketed, then bisect in log tau towards it.
    let t_max = prob.tau_max();
    if t_max == 0.0 {
        return Err(Error::Bracket("data carry no curl-bearing signal".into()));
    }
    let target = 3.0 * unit;
    let hit = |r: f64| (r - target).abs() <= TARGET_TOL * target;
    let mut best: Option<(f64, (DfwCoeffs, SolveDiagnostics))> = None;
    let keep = |tau: f64, sol: (DfwCoeffs, SolveDiagnostics), best: &mut Option<(f64, (DfwCoeffs, SolveDiagnostics))>| {
        let closer = best
            .as_ref()
            .is_none_or(|(_, b)| (sol.1.data_residual - target).abs() < (b.1.data_residual - target).abs());
        if closer {
            *best = Some((tau, sol));
        }
    };
    let factor: f64 = 10.0;
    let mut t_hi = t_max;
    let mut tau = t_max;
    let mut t_lo = None;
    let mut prev = f64::INFINITY;
    for step in 0..MAX_EXPANSIONS {
        tau /= factor;
        let sol = run(tau)?;
        let r = sol.1.data_residual;
        let done = hit(r);
        keep(tau, sol, &mut best);
        if done {
            let (tau, sol) = best.expect("just stored");
            return Ok(accept(tau, sol, solves));
        }
        if r < target {
            t_lo = Some(tau);
            break;
        }
        if step >= 2 && r > (1.0 - STALL_DROP) * prev {
            if r <= FIT_FLOOR * b_hat.norm_sq() {
                log::warn!("select_tau: target below the interpolation floor; returning tau = {tau:e}");
                let (tau, sol) = best.expect("just stored");
                return Ok(accept(tau, sol, solves));
            }
            return Err(Error::Bracket(format!(
                "residual levels off at {:.3}x the target {target:e} T² (tau = {tau:e}); data do not fit the model",
                r / target
            )));
        }
        prev = r;
        t_hi = tau;
    }
    let Some(mut t_lo) = t_lo else {
        return Err(Error::Bracket(format!("residual stays above the target {target:e} T² down to tau = {tau:e}")));
    };
    if t_hi == t_max {
        // Even tau_max / 10 undershoots: check that the zero-curl end overshoots.
        let sol = run(t_max)?;
        if sol.1.data_residual < lo {
            return Err(Error::Bracket(format!(
                "residual {:e} T² at tau_max stays below the target band [{lo:e}, {hi:e}]",
                sol.1.data_residual
            )));
        }
        keep(t_max, sol, &mut best);
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = (0.5 * (t_lo.ln() + t_hi.ln())).exp();
        let sol = run(mid)?;
        let r = sol.1.data_residual;
        let done = hit(r);
        keep(mid, sol, &mut best);
        if done {
            break;
        }
        if r < target {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    let (tau, sol) = best.expect("at least one solve");
    Ok(accept(tau, sol, solves))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_definition() {
        let g = GridSpec::new(2, 1.0).unwrap();
        let v = ScalarMap::new(g, Array2::from_shape_vec((2, 2), vec![3.0, -1.0, 0.5, -2.5]).unwrap())
            .unwrap();
        let out = soft_threshold(&v, 1.0).unwrap();
        assert_eq!(out.values.as_slice().unwrap(), &[2.0, 0.0, 0.0, -1.5]);
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v);
        assert_eq!(soft_threshold(&v, 3.0).unwrap().norm(), 0.0);
        assert!(soft_threshold(&v, -1.0).is_err());
    }

    #[test]
    fn power_iteration_on_scaled_identity() {
        let one = power_iteration((4, 4), 30, 1, |v| v.clone());
        assert!((one - 1.0).abs() < 1e-6);
        let two = power_iteration((4, 4), 30, 1, |v| v * 4.0);
        assert!((two - 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_data_gives_zero_current() {
        let g = GridSpec::new(16, 1e-6).unwrap();
        let z = g.zeros();
        let b = FieldMap3::new(g, z.clone(), z.clone(), z, 1e-6, 1e-6).unwrap();
        let (w, d) = ladmm_solve(&b, 1.0, &SolverOptions::default()).unwrap();
        assert_eq!(w.coeffs.iter().map(|v| v.abs()).sum::<f64>(), 0.0);
        assert_eq!(d.data_residual, 0.0);
    }

    #[test]
    fn options_are_validated() {
        let g = GridSpec::new(16, 1e-6).unwrap();
        let z = g.zeros();
        let b = FieldMap3::new(g, z.clone(), z.clone(), z, 1e-6, 1e-6).unwrap();
        let bad = SolverOptions { step_mu: StepSize::Fixed(2.0), ..Default::default() };
        assert!(ladmm_solve(&b, 1.0, &bad).is_err());
        assert!(ladmm_solve(&b, -1.0, &SolverOptions::default()).is_err());
        assert!(select_tau(&b, 0.0, &SolverOptions::default()).is_err());
    }
}
