//! Two-dimensional FFT helpers on square row-major grids.
//!
//! Forward transforms are unnormalized; inverse transforms carry the `1/n²`
//! factor. Row index is `y`, column index is `x`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn pass(&self, plan: &Arc<dyn Fft<f64>>, data: &mut Array2<Complex64>) {
        let n = self.n;
        let buf = data.as_slice_mut().expect("standard layout");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        let mut col = vec![Complex64::default(); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = buf[r * n + c];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for r in 0..n {
                buf[r * n + c] = col[r];
            }
        }
    }

    pub fn forward_inplace(&self, data: &mut Array2<Complex64>) {
        self.pass(&self.fwd, data);
    }

    pub fn inverse_inplace(&self, data: &mut Array2<Complex64>) {
        self.pass(&self.inv, data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.mapv_inplace(|v| v * s);
    }

    pub fn forward(&self, a: &Array2<f64>) -> Array2<Complex64> {
        let mut c = a.mapv(|v| Complex64::new(v, 0.0));
        if !c.is_standard_layout() {
            c = c.as_standard_layout().to_owned();
        }
        self.forward_inplace(&mut c);
        c
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, mut spec: Array2<Complex64>) -> Array2<f64> {
        self.inverse_inplace(&mut spec);
        spec.mapv(|v| v.re)
    }
}

/// Index of the negated frequency bin on an `n`-periodic axis.
#[inline]
pub fn neg_index(i: usize, n: usize) -> usize {
    (n - i) % n
}

/// Replace a symbol table by its Hermitian part `(S(k) + conj S(-k)) / 2`.
///
/// Multiplying a real field's spectrum by the Hermitian part and inverting
/// gives exactly the real part of the product with the raw symbol. Only bins
/// on the Nyquist row/column (which map onto themselves along one axis) can
/// change.
pub fn hermitian_part(sym: &Array2<Complex64>) -> Array2<Complex64> {
    let n = sym.nrows();
    Array2::from_shape_fn((n, n), |(r, c)| {
        let m = sym[(neg_index(r, n), neg_index(c, n))].conj();
        (sym[(r, c)] + m) * 0.5
    })
}
