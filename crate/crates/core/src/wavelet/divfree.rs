//! Divergence-free wavelet expansion of in-plane current densities.
//!
//! A current `J = (∂S/∂y, -∂S/∂x)` is generated by a periodic stream function
//! `S` expanded in the tensor-product scaling basis of the base family at the
//! finest level. The stored coefficients are the anisotropic wavelet transform
//! of those fine-level coefficients, which splits them into the branches
//! exposed by [`Branch`]. Derivatives of `S` never use finite differences: the
//! differentiation link between families turns every derivative into a
//! product of scaling-function transforms. Grid samples are the band-limited
//! projection of the continuous field, so the returned currents are exactly
//! divergence-free in the spectral sense.

use ndarray::Array2;
use num_complex::Complex64;

use super::filters::FamilyChain;
use super::fwt::{band_of, forward_2d, inverse_2d, FilterPair};
use crate::error::{Error, Result};
use crate::grid::{CurrentField, GridSpec, ScalarMap};
use crate::spectral::{hermitian_part, Fft2};

/// Which tensor product a coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Coarse scaling functions in both directions.
    Coarse,
    /// Coarse in `x`, wavelet in `y`: currents that are smooth along `x`.
    X,
    /// Wavelet in `x`, coarse in `y`.
    Y,
    /// Wavelets in both directions: the genuinely two-dimensional part.
    Div,
}

/// Coefficients of a divergence-free current in Mallat layout, `[row, col] = [y, x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DfwCoeffs {
    pub grid: GridSpec,
    pub levels: usize,
    pub coeffs: Array2<f64>,
    /// Uniform background current, which has no stream function.
    pub mean_x: f64,
    pub mean_y: f64,
}

impl DfwCoeffs {
    pub fn zeros(grid: GridSpec, levels: usize) -> Result<Self> {
        check_levels(&grid, levels)?;
        Ok(DfwCoeffs { grid, levels, coeffs: grid.zeros(), mean_x: 0.0, mean_y: 0.0 })
    }

    /// Number of free real parameters, including the two uniform components.
    pub fn num_params(&self) -> usize {
        self.coeffs.len() + 2
    }

    pub fn branch_of(&self, row: usize, col: usize) -> Branch {
        let n = self.grid.n();
        match (
            band_of(col, n, self.levels).is_some(),
            band_of(row, n, self.levels).is_some(),
        ) {
            (false, false) => Branch::Coarse,
            (false, true) => Branch::X,
            (true, false) => Branch::Y,
            (true, true) => Branch::Div,
        }
    }

    /// Mallat position of the wavelet at scale `j`, translation `k`.
    pub fn position(&self, j: u32, k: usize) -> Result<usize> {
        let n = self.grid.n();
        let coarsest = (self.grid.log2_n() - self.levels) as u32;
        if j < coarsest || (1usize << j) >= n || k >= (1usize << j) {
            return Err(Error::InvalidParameter(format!("no wavelet at scale {j}, shift {k}")));
        }
        Ok((1usize << j) + k)
    }

    /// Two-dimensional wavelet coefficient with `x` index `(j1, k1)` and `y` index `(j2, k2)`.
    pub fn c_div(&self, j1: u32, k1: usize, j2: u32, k2: usize) -> Result<f64> {
        Ok(self.coeffs[(self.position(j2, k2)?, self.position(j1, k1)?)])
    }

    /// Sum of squared coefficients in each branch.
    pub fn branch_energy(&self, branch: Branch) -> f64 {
        self.coeffs
            .indexed_iter()
            .filter(|((r, c), _)| self.branch_of(*r, *c) == branch)
            .map(|(_, v)| v * v)
            .sum()
    }
}

fn check_levels(grid: &GridSpec, levels: usize) -> Result<()> {
    if grid.n() < 8 {
        return Err(Error::InvalidGrid(format!(
            "divergence-free transform needs n >= 8, got {}",
            grid.n()
        )));
    }
    let max = grid.log2_n();
    if levels == 0 || levels > max {
        return Err(Error::LevelsOutOfRange { levels, max, n: grid.n() });
    }
    Ok(())
}

/// Precomputed divergence-free transform on one grid.
#[derive(Clone, Debug)]
pub struct DivFreeBasis {
    grid: GridSpec,
    levels: usize,
    chain: FamilyChain,
    fft: Fft2,
    cx: Array2<Complex64>,
    cy: Array2<Complex64>,
    curl: Array2<Complex64>,
    div_x: Array2<Complex64>,
    div_y: Array2<Complex64>,
    null_basis: Vec<Array2<f64>>,
}

impl DivFreeBasis {
    /// Default depth: coarsest scale has eight cells per side.
    pub fn default_levels(grid: &GridSpec) -> usize {
        grid.log2_n().saturating_sub(3).max(1)
    }

    pub fn new(grid: GridSpec, levels: usize) -> Result<Self> {
        Self::with_chain(grid, levels, FamilyChain::default())
    }

    pub fn with_chain(grid: GridSpec, levels: usize, chain: FamilyChain) -> Result<Self> {
        check_levels(&grid, levels)?;
        let n = grid.n();
        let dx = grid.dx();
        let xi: Vec<f64> = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                2.0 * std::f64::consts::PI * m / n as f64
            })
            .collect();
        let one = Complex64::new(1.0, 0.0);
        let phi1: Vec<Complex64> = xi.iter().map(|&x| chain.fb_plus.scaling_ft(x)).collect();
        // First and second derivatives of φ¹ expressed through the lower families.
        let d1: Vec<Complex64> = xi
            .iter()
            .map(|&x| (one - Complex64::from_polar(1.0, -x)) * chain.fb_zero.scaling_ft(x))
            .collect();
        let d2: Vec<Complex64> = xi
            .iter()
            .map(|&x| {
                let e = one - Complex64::from_polar(1.0, -x);
                e * e * chain.fb_minus.scaling_ft(x)
            })
            .collect();
        let s1 = n as f64 / dx;
        let s2 = n as f64 / (dx * dx);
        let table = |f: &dyn Fn(usize, usize) -> Complex64| {
            hermitian_part(&Array2::from_shape_fn((n, n), |(r, c)| f(r, c)))
        };
        let cx = table(&|r, c| phi1[c] * d1[r] * s1);
        let cy = table(&|r, c| -(d1[c] * phi1[r]) * s1);
        let curl = table(&|r, c| -(d2[c] * phi1[r] + phi1[c] * d2[r]) * s2);
        let div_x = table(&|r, c| d1[c] * d1[r] * s2);
        let div_y = table(&|r, c| -(d1[c] * d1[r]) * s2);

        let mut basis = DivFreeBasis {
            grid,
            levels,
            chain,
            fft: Fft2::new(n),
            cx,
            cy,
            curl,
            div_x,
            div_y,
            null_basis: Vec::new(),
        };
        basis.null_basis = basis.build_null_basis();
        Ok(basis)
    }

    /// Orthonormal basis of coefficient vectors that synthesize to zero.
    fn build_null_basis(&self) -> Vec<Array2<f64>> {
        let n = self.grid.n();
        let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        let modes: [Box<dyn Fn(usize, usize) -> f64>; 4] = [
            Box::new(|_, _| 1.0),
            Box::new(move |_, c| sign(c)),
            Box::new(move |r, _| sign(r)),
            Box::new(move |r, c| sign(r) * sign(c)),
        ];
        let mut out: Vec<Array2<f64>> = Vec::new();
        for mode in modes.iter() {
            let s = Array2::from_shape_fn((n, n), |(r, c)| mode(r, c));
            let mut v = forward_2d(&s, self.levels, FilterPair::dual(&self.chain.fb_plus));
            for q in &out {
                let p: f64 = v.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
                v.scaled_add(-p, q);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            out.push(v / norm);
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn chain(&self) -> &FamilyChain {
        &self.chain
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Per-bin symbols mapping the stream-coefficient spectrum to `ĵx`, `ĵy`
    /// and the curl.
    pub fn symbols(&self) -> (&Array2<Complex64>, &Array2<Complex64>, &Array2<Complex64>) {
        (&self.cx, &self.cy, &self.curl)
    }

    fn check(&self, w: &DfwCoeffs) -> Result<()> {
        if w.grid != self.grid || w.levels != self.levels {
            return Err(Error::GridMismatch(format!(
                "coefficients ({}x{}, {} levels) do not match basis ({}x{}, {} levels)",
                w.grid.n(),
                w.grid.n(),
                w.levels,
                self.grid.n(),
                self.grid.n(),
                self.levels
            )));
        }
        Ok(())
    }

    /// Remove the components of `coeffs` that synthesize to zero.
    pub fn canonicalize(&self, coeffs: &mut Array2<f64>) {
        for q in &self.null_basis {
            let p: f64 = coeffs.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            coeffs.scaled_add(-p, q);
        }
    }

    /// Fine-level stream coefficients from wavelet coefficients.
    pub fn stream_from_coeffs(&self, coeffs: &Array2<f64>) -> Array2<f64> {
        inverse_2d(coeffs, self.levels, FilterPair::primal(&self.chain.fb_plus))
    }

    /// Canonical wavelet coefficients of fine-level stream coefficients.
    pub fn coeffs_from_stream(&self, s: &Array2<f64>) -> Array2<f64> {
        let mut w = forward_2d(s, self.levels, FilterPair::dual(&self.chain.fb_plus));
        self.canonicalize(&mut w);
        w
    }

    pub(crate) fn stream_spectrum(&self, w: &DfwCoeffs) -> Array2<Complex64> {
        self.fft.forward(&self.stream_from_coeffs(&w.coeffs))
    }

    fn apply_symbol(&self, spec: &Array2<Complex64>, sym: &Array2<Complex64>) -> Array2<f64> {
        self.fft.inverse_real(spec * sym)
    }

    /// Current from a stream spectrum plus uniform components.
    pub(crate) fn current_from_spectrum(
        &self,
        spec: &Array2<Complex64>,
        mean_x: f64,
        mean_y: f64,
    ) -> CurrentField {
        let jx = self.apply_symbol(spec, &self.cx) + mean_x;
        let jy = self.apply_symbol(spec, &self.cy) + mean_y;
        CurrentField { grid: self.grid, jx, jy }
    }

    /// Least-squares stream spectrum of a current, ignoring its mean.
    pub(crate) fn spectrum_from_current(&self, j: &CurrentField) -> Array2<Complex64> {
        let jx = self.fft.forward(&j.jx);
        let jy = self.fft.forward(&j.jy);
        let mut out = Array2::zeros(jx.dim());
        ndarray::Zip::from(&mut out)
            .and(&jx)
            .and(&jy)
            .and(&self.cx)
            .and(&self.cy)
            .for_each(|o, a, b, cx, cy| {
                let den = cx.norm_sqr() + cy.norm_sqr();
                if den > 0.0 {
                    *o = (cx.conj() * a + cy.conj() * b) / den;
                }
            });
        out
    }

    /// Canonical coefficients of the divergence-free part of `j`.
    pub fn analyze(&self, j: &CurrentField) -> Result<DfwCoeffs> {
        if j.grid != self.grid {
            return Err(Error::GridMismatch("current and basis grids differ".into()));
        }
        let n2 = (self.grid.n() * self.grid.n()) as f64;
        let spec = self.spectrum_from_current(j);
        let s = self.fft.inverse_real(spec);
        Ok(DfwCoeffs {
            grid: self.grid,
            levels: self.levels,
            coeffs: self.coeffs_from_stream(&s),
            mean_x: j.jx.sum() / n2,
            mean_y: j.jy.sum() / n2,
        })
    }

    pub fn synthesize(&self, w: &DfwCoeffs) -> Result<CurrentField> {
        self.check(w)?;
        Ok(self.current_from_spectrum(&self.stream_spectrum(w), w.mean_x, w.mean_y))
    }

    /// Curl `∂x jy - ∂y jx` of the continuous field, sampled as its band-limited projection.
    pub fn analytic_curl(&self, w: &DfwCoeffs) -> Result<ScalarMap> {
        self.check(w)?;
        let values = self.apply_symbol(&self.stream_spectrum(w), &self.curl);
        Ok(ScalarMap { grid: self.grid, values })
    }

    /// Divergence from the same derivative chain; zero by construction.
    pub fn analytic_divergence(&self, w: &DfwCoeffs) -> Result<ScalarMap> {
        self.check(w)?;
        let spec = self.stream_spectrum(w);
        let sym = &self.div_x + &self.div_y;
        Ok(ScalarMap { grid: self.grid, values: self.apply_symbol(&spec, &sym) })
    }
}

/// Divergence-free coefficients of `j` with `levels` decomposition levels.
pub fn dfw_analyze(j: &CurrentField, levels: usize) -> Result<DfwCoeffs> {
    DivFreeBasis::new(j.grid, levels)?.analyze(j)
}

pub fn dfw_synthesize(w: &DfwCoeffs) -> Result<CurrentField> {
    DivFreeBasis::new(w.grid, w.levels)?.synthesize(w)
}

pub fn analytic_curl(w: &DfwCoeffs) -> Result<ScalarMap> {
    DivFreeBasis::new(w.grid, w.levels)?.analytic_curl(w)
}
