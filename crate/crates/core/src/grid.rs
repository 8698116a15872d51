//! Sampling grids, field containers, and shared metrics.
//!
//! All quantities are SI. Arrays are indexed `[row, col] = [y, x]`, and every
//! field is treated as periodic over the `n × n` lattice.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{hermitian_part, Fft2};

/// Uniform square sampling lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    dx: f64,
}

impl GridSpec {
    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} is not a power of two >= 2")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {dx} must be positive")));
        }
        Ok(GridSpec { n, dx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sample spacing in meters.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Physical side length `n * dx`.
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Nyquist frequency `1 / (2 dx)` in cycles per meter.
    pub fn nyquist(&self) -> f64 {
        0.5 / self.dx
    }

    pub fn log2_n(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    /// Frequency of DFT bin `i` in cycles per meter.
    pub fn freq(&self, i: usize) -> f64 {
        let n = self.n as isize;
        let i = i as isize;
        let m = if i < n / 2 { i } else { i - n };
        m as f64 / self.extent()
    }

    /// Frequencies of all bins along one axis.
    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    pub(crate) fn zeros(&self) -> Array2<f64> {
        Array2::zeros((self.n, self.n))
    }

    pub(crate) fn check_shape(&self, a: &Array2<f64>, what: &str) -> Result<()> {
        if a.dim() != (self.n, self.n) {
            return Err(Error::GridMismatch(format!(
                "{what} has shape {:?}, grid is {}x{}",
                a.dim(),
                self.n,
                self.n
            )));
        }
        Ok(())
    }
}

/// Scalar samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMap {
    pub grid: GridSpec,
    pub values: Array2<f64>,
}

impl ScalarMap {
    pub fn new(grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        grid.check_shape(&values, "scalar map")?;
        Ok(ScalarMap { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ScalarMap { grid, values: grid.zeros() }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// In-plane current density `(jx, jy)` in A/m².
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentField {
    pub grid: GridSpec,
    pub jx: Array2<f64>,
    pub jy: Array2<f64>,
}

impl CurrentField {
    pub fn new(grid: GridSpec, jx: Array2<f64>, jy: Array2<f64>) -> Result<Self> {
        grid.check_shape(&jx, "jx")?;
        grid.check_shape(&jy, "jy")?;
        Ok(CurrentField { grid, jx, jy })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        CurrentField { grid, jx: grid.zeros(), jy: grid.zeros() }
    }

    /// Joint Euclidean norm over both components.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &CurrentField) -> f64 {
        let a: f64 = self.jx.iter().zip(other.jx.iter()).map(|(a, b)| a * b).sum();
        let b: f64 = self.jy.iter().zip(other.jy.iter()).map(|(a, b)| a * b).sum();
        a + b
    }

    pub fn scaled(&self, s: f64) -> CurrentField {
        CurrentField { grid: self.grid, jx: &self.jx * s, jy: &self.jy * s }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &CurrentField) -> CurrentField {
        CurrentField {
            grid: self.grid,
            jx: &self.jx + &(&other.jx * s),
            jy: &self.jy + &(&other.jy * s),
        }
    }

    /// Pointwise magnitude `|J|`.
    pub fn magnitude(&self) -> ScalarMap {
        let values = ndarray::Zip::from(&self.jx)
            .and(&self.jy)
            .map_collect(|a, b| a.hypot(*b));
        ScalarMap { grid: self.grid, values }
    }
}

/// Three-component magnetic field samples in tesla, measured at standoff `z`
/// above a conducting sheet of thickness `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMap3 {
    pub grid: GridSpec,
    pub bx: Array2<f64>,
    pub by: Array2<f64>,
    pub bz: Array2<f64>,
    pub z: f64,
    pub d: f64,
}

impl FieldMap3 {
    pub fn new(
        grid: GridSpec,
        bx: Array2<f64>,
        by: Array2<f64>,
        bz: Array2<f64>,
        z: f64,
        d: f64,
    ) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidParameter(format!("standoff z = {z} must be positive")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("thickness d = {d} must be positive")));
        }
        grid.check_shape(&bx, "bx")?;
        grid.check_shape(&by, "by")?;
        grid.check_shape(&bz, "bz")?;
        Ok(FieldMap3 { grid, bx, by, bz, z, d })
    }

    pub fn dot(&self, other: &FieldMap3) -> f64 {
        let d = |a: &Array2<f64>, b: &Array2<f64>| -> f64 {
            a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
        };
        d(&self.bx, &other.bx) + d(&self.by, &other.by) + d(&self.bz, &other.bz)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// `||self - other||²` over all three components.
    pub fn dist_sq(&self, other: &FieldMap3) -> f64 {
        let d = |a: &Array2<f64>, b: &Array2<f64>| -> f64 {
            a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
        };
        d(&self.bx, &other.bx) + d(&self.by, &other.by) + d(&self.bz, &other.bz)
    }
}

/// DFT wavenumbers in cycles/m: `kx[m, l]` depends on the column, `ky` on the row.
pub fn wavenumber_grid(grid: &GridSpec) -> (ScalarMap, ScalarMap) {
    let f = grid.freqs();
    let n = grid.n();
    let kx = Array2::from_shape_fn((n, n), |(_, c)| f[c]);
    let ky = Array2::from_shape_fn((n, n), |(r, _)| f[r]);
    (ScalarMap { grid: *grid, values: kx }, ScalarMap { grid: *grid, values: ky })
}

/// Relative L2 distance `||a - b|| / ||b||` over both components jointly.
pub fn rel_l2_error(a: &CurrentField, b: &CurrentField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let nb = b.norm();
    if nb == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(a.axpy(-1.0, b).norm() / nb)
}

/// Divergence computed with spectral derivatives, `IDFT(i 2π (kx ĵx + ky ĵy))`.
///
/// The imaginary residue from Nyquist bins is dropped, which is the same as
/// using the Hermitian part of the derivative symbols.
pub fn spectral_divergence(j: &CurrentField) -> ScalarMap {
    let grid = j.grid;
    let n = grid.n();
    let fft = Fft2::new(n);
    let f = grid.freqs();
    let two_pi = 2.0 * std::f64::consts::PI;
    let dx_sym = hermitian_part(&Array2::from_shape_fn((n, n), |(_, c)| {
        Complex64::new(0.0, two_pi * f[c])
    }));
    let dy_sym = hermitian_part(&Array2::from_shape_fn((n, n), |(r, _)| {
        Complex64::new(0.0, two_pi * f[r])
    }));
    let jx = fft.forward(&j.jx);
    let jy = fft.forward(&j.jy);
    let spec = ndarray::Zip::from(&jx)
        .and(&jy)
        .and(&dx_sym)
        .and(&dy_sym)
        .map_collect(|a, b, sx, sy| a * sx + b * sy);
    ScalarMap { grid, values: fft.inverse_real(spec) }
}
