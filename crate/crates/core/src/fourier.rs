//! Spectral-division baseline with a separable cosine taper.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{kernel_fourier, KernelParams};
use crate::grid::{CurrentField, FieldMap3, GridSpec, ScalarMap};
use crate::spectral::Fft2;

/// Taper cutoff in cycles/m. An infinite cutoff disables the taper.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaperSpec {
    pub k_max: f64,
}

impl TaperSpec {
    pub fn new(k_max: f64) -> Result<Self> {
        if !(k_max > 0.0) {
            return Err(Error::InvalidParameter(format!("k_max = {k_max} must be positive")));
        }
        Ok(TaperSpec { k_max })
    }

    /// `C ≡ 1`.
    pub fn unfiltered() -> Self {
        TaperSpec { k_max: f64::INFINITY }
    }

    pub fn is_unfiltered(&self) -> bool {
        self.k_max.is_infinite()
    }
}

/// Expected signal spectrum of a trace of width `w` carrying `j0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalModel {
    pub j0: f64,
    pub w: f64,
    pub d: f64,
    pub z: f64,
    pub sigma: f64,
}

impl SignalModel {
    /// Model field amplitude `j0 g(k, z) / (π k w)`.
    pub fn b_model(&self, k: f64) -> f64 {
        let p = KernelParams { z: self.z, d: self.d };
        self.j0 * kernel_fourier(k, &p) / (std::f64::consts::PI * k * self.w)
    }

    /// Amplitude signal-to-noise ratio against a flat floor of `sigma` tesla.
    pub fn snr(&self, k: f64) -> f64 {
        self.b_model(k) / self.sigma
    }
}

/// Result of [`select_kmax`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KmaxChoice {
    pub taper: TaperSpec,
    /// The model is already below the floor at the lowest nonzero frequency.
    pub below_floor: bool,
}

/// Amplitude ratio used as the cutoff criterion (−6 dB).
pub const SNR_CUTOFF: f64 = 0.5;

fn taper_1d(k: f64, k_max: f64) -> f64 {
    if k_max.is_infinite() {
        1.0
    } else if k.abs() <= k_max {
        0.5 * (1.0 + (std::f64::consts::PI * k.abs() / k_max).cos())
    } else {
        0.0
    }
}

/// Separable taper `C[kx, ky]` on the DFT grid.
pub fn cosine_taper(grid: &GridSpec, t: &TaperSpec) -> ScalarMap {
    let f = grid.freqs();
    let n = grid.n();
    let cx: Vec<f64> = f.iter().map(|&k| taper_1d(k, t.k_max)).collect();
    ScalarMap {
        grid: *grid,
        values: Array2::from_shape_fn((n, n), |(r, c)| cx[c] * cx[r]),
    }
}

/// `ĵx = -C b̂y / g`, `ĵy = C b̂x / g`. The DC bin follows the same relation.
pub fn recon_fourier(b: &FieldMap3, t: &TaperSpec) -> CurrentField {
    let grid = b.grid;
    let n = grid.n();
    let p = KernelParams::of(b);
    let f = grid.freqs();
    let c = cosine_taper(&grid, t).values;
    let gain = Zip::indexed(&c).map_collect(|(r, col), cv| {
        if *cv == 0.0 {
            0.0
        } else {
            cv / kernel_fourier(f[col].hypot(f[r]), &p)
        }
    });
    let fft = Fft2::new(n);
    let bx = fft.forward(&b.bx);
    let by = fft.forward(&b.by);
    let jx: Array2<Complex64> = Zip::from(&by).and(&gain).map_collect(|v, g| -v * *g);
    let jy: Array2<Complex64> = Zip::from(&bx).and(&gain).map_collect(|v, g| v * *g);
    CurrentField { grid, jx: fft.inverse_real(jx), jy: fft.inverse_real(jy) }
}

/// Cutoff where the model SNR on the radial profile first falls to
/// [`SNR_CUTOFF`], clamped to `(0, Nyquist]`.
pub fn select_kmax(m: &SignalModel, grid: &GridSpec) -> Result<KmaxChoice> {
    if !(m.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {} must be positive", m.sigma)));
    }
    if !(m.j0 > 0.0 && m.w > 0.0 && m.d > 0.0 && m.z > 0.0) {
        return Err(Error::InvalidParameter("signal model needs positive j0, w, d, z".into()));
    }
    let k_lo = 1.0 / grid.extent();
    let k_hi = grid.nyquist();
    let excess = |k: f64| m.snr(k) - SNR_CUTOFF;
    if excess(k_lo) < 0.0 {
        log::warn!("model SNR is below the cutoff at the first nonzero frequency");
        return Ok(KmaxChoice { taper: TaperSpec { k_max: k_lo }, below_floor: true });
    }
    if excess(k_hi) >= 0.0 {
        return Ok(KmaxChoice { taper: TaperSpec { k_max: k_hi }, below_floor: false });
    }
    // SNR is strictly decreasing in k, so the crossing is unique.
    let (mut a, mut b) = (k_lo, k_hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if excess(mid) >= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-13 * b {
            break;
        }
    }
    Ok(KmaxChoice { taper: TaperSpec { k_max: b }, below_floor: false })
}
