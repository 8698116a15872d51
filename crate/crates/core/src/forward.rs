//! Current-to-field operator for a thin conducting sheet.
//!
//! The in-plane field components are convolutions of the current with the
//! sheet kernel `G(x, z) = mu0 z d / (4π) (|x|² + z²)^(-3/2)`, whose 2-D
//! Fourier transform is `g(k, z) = mu0 d / 2 · exp(-2π z |k|)`. On the grid
//! the operator is applied as a diagonal multiplier in the DFT basis:
//!
//! ```text
//! b̂x =  g ĵy
//! b̂y = -g ĵx
//! b̂z =  Gx ĵx + Gy ĵy,   Gx = -i g ky/|k|,  Gy = i g kx/|k|
//! ```
//!
//! `Gx` and `Gy` vanish at `k = 0`; fields are periodic on the grid so compact
//! sources must be padded by the caller.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{CurrentField, FieldMap3, GridSpec};
use crate::spectral::{hermitian_part, Fft2};

/// Vacuum permeability in T·m/A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    /// Standoff between the current sheet and the measurement plane (m).
    pub z: f64,
    /// Sheet thickness (m).
    pub d: f64,
}

impl KernelParams {
    pub fn new(z: f64, d: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite() && d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel needs z > 0 and d > 0 (got z = {z}, d = {d})"
            )));
        }
        Ok(KernelParams { z, d })
    }

    pub fn of(b: &FieldMap3) -> Self {
        KernelParams { z: b.z, d: b.d }
    }
}

/// `g(k, z) = mu0 d / 2 · exp(-2π z k)` for `k` in cycles/m. Units T·m²/A.
pub fn kernel_fourier(k_mag: f64, p: &KernelParams) -> f64 {
    0.5 * MU0 * p.d * (-2.0 * std::f64::consts::PI * p.z * k_mag).exp()
}

/// Spatial kernel `G(r, z)` at in-plane distance `r`.
pub fn kernel_spatial(x_mag: f64, p: &KernelParams) -> f64 {
    MU0 * p.z * p.d / (4.0 * std::f64::consts::PI) * (x_mag * x_mag + p.z * p.z).powf(-1.5)
}

/// Precomputed spectral multipliers for one `(grid, z, d)`.
#[derive(Clone, Debug)]
pub struct ForwardOperator {
    grid: GridSpec,
    params: KernelParams,
    fft: Fft2,
    g: Array2<f64>,
    gx: Array2<Complex64>,
    gy: Array2<Complex64>,
}

impl ForwardOperator {
    pub fn new(grid: GridSpec, params: KernelParams) -> Self {
        let n = grid.n();
        let f = grid.freqs();
        let g = Array2::from_shape_fn((n, n), |(r, c)| {
            kernel_fourier(f[c].hypot(f[r]), &params)
        });
        let mut gx = Array2::zeros((n, n));
        let mut gy = Array2::zeros((n, n));
        for r in 0..n {
            for c in 0..n {
                let k = f[c].hypot(f[r]);
                if k > 0.0 {
                    gx[(r, c)] = Complex64::new(0.0, -g[(r, c)] * f[r] / k);
                    gy[(r, c)] = Complex64::new(0.0, g[(r, c)] * f[c] / k);
                }
            }
        }
        ForwardOperator {
            grid,
            params,
            fft: Fft2::new(n),
            g,
            gx: hermitian_part(&gx),
            gy: hermitian_part(&gy),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Real symbol `g` per bin.
    pub fn g(&self) -> &Array2<f64> {
        &self.g
    }

    /// Hermitian-part `Gx` symbol per bin.
    pub fn gx(&self) -> &Array2<Complex64> {
        &self.gx
    }

    pub fn gy(&self) -> &Array2<Complex64> {
        &self.gy
    }

    pub fn apply(&self, j: &CurrentField) -> FieldMap3 {
        let jx = self.fft.forward(&j.jx);
        let jy = self.fft.forward(&j.jy);
        let bx = Zip::from(&jy).and(&self.g).map_collect(|a, g| a * *g);
        let by = Zip::from(&jx).and(&self.g).map_collect(|a, g| -a * *g);
        let bz = Zip::from(&jx)
            .and(&jy)
            .and(&self.gx)
            .and(&self.gy)
            .map_collect(|a, b, sx, sy| a * sx + b * sy);
        FieldMap3 {
            grid: self.grid,
            bx: self.fft.inverse_real(bx),
            by: self.fft.inverse_real(by),
            bz: self.fft.inverse_real(bz),
            z: self.params.z,
            d: self.params.d,
        }
    }

    /// Exact transpose of [`ForwardOperator::apply`] under Euclidean inner products.
    pub fn adjoint(&self, b: &FieldMap3) -> CurrentField {
        let bx = self.fft.forward(&b.bx);
        let by = self.fft.forward(&b.by);
        let bz = self.fft.forward(&b.bz);
        let jx = Zip::from(&by)
            .and(&bz)
            .and(&self.g)
            .and(&self.gx)
            .map_collect(|y, z, g, sx| -y * *g + z * sx.conj());
        let jy = Zip::from(&bx)
            .and(&bz)
            .and(&self.g)
            .and(&self.gy)
            .map_collect(|x, z, g, sy| x * *g + z * sy.conj());
        CurrentField {
            grid: self.grid,
            jx: self.fft.inverse_real(jx),
            jy: self.fft.inverse_real(jy),
        }
    }
}

pub fn apply_forward(j: &CurrentField, p: &KernelParams) -> FieldMap3 {
    ForwardOperator::new(j.grid, *p).apply(j)
}

pub fn apply_adjoint(b: &FieldMap3, p: &KernelParams) -> CurrentField {
    ForwardOperator::new(b.grid, *p).adjoint(b)
}

/// Isotropic additive Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Per-component standard deviation (T).
    pub sigma: f64,
    pub seed: u64,
}

/// Adds i.i.d. `N(0, sigma²)` samples to every sample of every component.
/// The stream is drawn in the order bx, by, bz, each row-major.
pub fn add_noise(b: &FieldMap3, nz: &NoiseSpec) -> Result<FieldMap3> {
    if !(nz.sigma >= 0.0 && nz.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma {} must be >= 0", nz.sigma)));
    }
    let mut out = b.clone();
    if nz.sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(nz.seed);
    let normal = Normal::new(0.0, nz.sigma).expect("finite sigma");
    for comp in [&mut out.bx, &mut out.by, &mut out.bz] {
        for v in comp.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_field(grid: GridSpec, seed: u64, scale: f64) -> CurrentField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        CurrentField {
            grid,
            jx: Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0) * scale),
            jy: Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0) * scale),
        }
    }

    #[test]
    fn kernel_values() {
        let p = KernelParams::new(5e-6, 1e-6).unwrap();
        assert!((kernel_fourier(0.0, &p) - 6.28319e-13).abs() < 1e-18);
        let k1 = kernel_fourier(1e5, &p);
        assert!((k1 / kernel_fourier(0.0, &p) - (-std::f64::consts::PI).exp()).abs() < 1e-14);
        assert!((k1 - 2.715e-14).abs() < 1e-17);
        let far = KernelParams::new(10e-6, 1e-6).unwrap();
        for k in [0.0, 1e3, 7e4, 2e5] {
            let ratio = kernel_fourier(k, &far) / kernel_fourier(k, &p);
            assert!((ratio - (-2.0 * std::f64::consts::PI * 5e-6 * k).exp()).abs() < 1e-14);
        }
        let on_axis = kernel_spatial(0.0, &p);
        assert!((on_axis - MU0 * p.d / (4.0 * std::f64::consts::PI * p.z * p.z)).abs() < 1e-20);
        let mut last = on_axis;
        for r in [1e-6, 1e-5, 1e-4, 1e-3] {
            let v = kernel_spatial(r, &p);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn uniform_current_gives_dc_field() {
        let grid = GridSpec::new(16, 2e-6).unwrap();
        let p = KernelParams::new(5e-6, 1e-6).unwrap();
        let j = CurrentField {
            grid,
            jx: Array2::from_elem((16, 16), 1.6e7),
            jy: grid.zeros(),
        };
        let b = apply_forward(&j, &p);
        for v in b.by.iter() {
            assert!((v + 1.00531e-5).abs() < 1e-9);
        }
        assert!(b.bx.iter().all(|v| v.abs() < 1e-18));
        assert!(b.bz.iter().all(|v| v.abs() < 1e-18));
        let zero = apply_forward(&CurrentField::zeros(grid), &p);
        assert_eq!(zero.norm_sq(), 0.0);
        assert_eq!(apply_adjoint(&zero, &p).norm(), 0.0);
    }

    #[test]
    fn adjoint_identity_random() {
        let grid = GridSpec::new(32, 2e-6).unwrap();
        let p = KernelParams::new(3e-6, 1e-6).unwrap();
        let op = ForwardOperator::new(grid, p);
        for seed in 0..5 {
            let j = random_field(grid, seed, 1e7);
            let jb = random_field(grid, 100 + seed, 1e-5);
            let b = FieldMap3 {
                grid,
                bx: jb.jx.clone(),
                by: jb.jy.clone(),
                bz: random_field(grid, 200 + seed, 1e-5).jx,
                z: p.z,
                d: p.d,
            };
            let bj = op.apply(&j);
            let lhs = bj.dot(&b);
            let rhs = j.dot(&op.adjoint(&b));
            let scale = bj.norm_sq().sqrt() * b.norm_sq().sqrt();
            assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn linearity() {
        let grid = GridSpec::new(32, 1e-6).unwrap();
        let p = KernelParams::new(2e-6, 1e-6).unwrap();
        let op = ForwardOperator::new(grid, p);
        let a = random_field(grid, 1, 1.0);
        let b = random_field(grid, 2, 1.0);
        let lhs = op.apply(&a.scaled(2.5).axpy(-0.75, &b));
        let ra = op.apply(&a);
        let rb = op.apply(&b);
        let comb = |x: &Array2<f64>, y: &Array2<f64>| x * 2.5 - y * 0.75;
        let rhs = FieldMap3 {
            grid,
            bx: comb(&ra.bx, &rb.bx),
            by: comb(&ra.by, &rb.by),
            bz: comb(&ra.bz, &rb.bz),
            z: p.z,
            d: p.d,
        };
        assert!(lhs.dist_sq(&rhs).sqrt() <= 1e-12 * rhs.norm_sq().sqrt());
    }

    #[test]
    fn noise_properties() {
        let grid = GridSpec::new(128, 2e-6).unwrap();
        let b = FieldMap3::new(grid, grid.zeros(), grid.zeros(), grid.zeros(), 5e-6, 1e-6).unwrap();
        let same = add_noise(&b, &NoiseSpec { sigma: 0.0, seed: 3 }).unwrap();
        assert_eq!(same, b);
        let nz = NoiseSpec { sigma: 1.25e-6, seed: 42 };
        let a = add_noise(&b, &nz).unwrap();
        let c = add_noise(&b, &nz).unwrap();
        assert_eq!(a, c);
        let var = a.norm_sq() / (3.0 * 128.0 * 128.0);
        assert!((var / (nz.sigma * nz.sigma) - 1.0).abs() < 0.05);
        assert!(add_noise(&b, &NoiseSpec { sigma: -1.0, seed: 0 }).is_err());
    }
}
