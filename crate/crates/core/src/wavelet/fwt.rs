//! Periodic multilevel fast wavelet transforms in Mallat layout.
//!
//! A transform of depth `L` on an axis of length `n` stores the coarse
//! scaling coefficients in `[0, n/2^L)` followed by detail bands from coarsest
//! to finest, the finest occupying `[n/2, n)`. Two-dimensional transforms are
//! anisotropic: the full 1-D transform runs along `x` (columns) and then along
//! `y` (rows).

use ndarray::{Array2, Axis};

use super::filters::{FilterBank, Laurent};

/// Low/high-pass filter pair used by one direction of a transform.
#[derive(Clone, Copy, Debug)]
pub struct FilterPair<'a> {
    pub lo: &'a Laurent,
    pub hi: &'a Laurent,
}

impl<'a> FilterPair<'a> {
    /// Dual filters: forward transform whose inverse is [`FilterPair::primal`] synthesis.
    pub fn dual(fb: &'a FilterBank) -> Self {
        FilterPair { lo: fb.h_dual(), hi: fb.g_dual() }
    }

    pub fn primal(fb: &'a FilterBank) -> Self {
        FilterPair { lo: fb.h(), hi: fb.g() }
    }
}

/// One analysis step: `c[l] = Σ lo[k-2l] a[k]`, `d[l] = Σ hi[k-2l] a[k]`.
fn analysis_step(a: &[f64], out: &mut [f64], f: FilterPair<'_>) {
    let n = a.len() as i64;
    let half = a.len() / 2;
    for l in 0..half {
        let base = 2 * l as i64;
        let mut c = 0.0;
        for (m, w) in f.lo.taps() {
            c += w * a[(base + m as i64).rem_euclid(n) as usize];
        }
        let mut d = 0.0;
        for (m, w) in f.hi.taps() {
            d += w * a[(base + m as i64).rem_euclid(n) as usize];
        }
        out[l] = c;
        out[half + l] = d;
    }
}

/// One synthesis step: `a[k] = Σ lo[k-2l] c[l] + hi[k-2l] d[l]`.
fn synthesis_step(cd: &[f64], out: &mut [f64], f: FilterPair<'_>) {
    let n = cd.len() as i64;
    let half = cd.len() / 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    for l in 0..half {
        let base = 2 * l as i64;
        let (c, d) = (cd[l], cd[half + l]);
        for (m, w) in f.lo.taps() {
            out[(base + m as i64).rem_euclid(n) as usize] += w * c;
        }
        for (m, w) in f.hi.taps() {
            out[(base + m as i64).rem_euclid(n) as usize] += w * d;
        }
    }
}

/// In-place multilevel forward transform of a 1-D periodic signal.
pub fn forward_1d(data: &mut [f64], levels: usize, f: FilterPair<'_>) {
    let mut scratch = vec![0.0; data.len()];
    let mut len = data.len();
    for _ in 0..levels {
        analysis_step(&data[..len], &mut scratch[..len], f);
        data[..len].copy_from_slice(&scratch[..len]);
        len /= 2;
    }
}

/// In-place multilevel inverse transform of a 1-D periodic signal.
pub fn inverse_1d(data: &mut [f64], levels: usize, f: FilterPair<'_>) {
    let mut scratch = vec![0.0; data.len()];
    let mut len = data.len() >> levels;
    for _ in 0..levels {
        len *= 2;
        synthesis_step(&data[..len], &mut scratch[..len], f);
        data[..len].copy_from_slice(&scratch[..len]);
    }
}

fn along_axes(a: &Array2<f64>, op: impl Fn(&mut [f64])) -> Array2<f64> {
    let mut out = a.to_owned();
    let mut buf = vec![0.0; out.nrows().max(out.ncols())];
    for axis in [Axis(1), Axis(0)] {
        for mut lane in out.lanes_mut(axis) {
            let m = lane.len();
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            op(&mut buf[..m]);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }
    out
}

/// Anisotropic 2-D forward transform.
pub fn forward_2d(a: &Array2<f64>, levels: usize, f: FilterPair<'_>) -> Array2<f64> {
    along_axes(a, |v| forward_1d(v, levels, f))
}

/// Anisotropic 2-D inverse transform.
pub fn inverse_2d(w: &Array2<f64>, levels: usize, f: FilterPair<'_>) -> Array2<f64> {
    along_axes(w, |v| inverse_1d(v, levels, f))
}

/// Scale index and translation of Mallat position `i` for a depth-`levels`
/// transform on an axis of length `n`. Coarse scaling entries report `None`.
pub fn band_of(i: usize, n: usize, levels: usize) -> Option<(u32, usize)> {
    let coarse = n >> levels;
    if i < coarse {
        None
    } else {
        let j = usize::BITS - 1 - i.leading_zeros();
        Some((j, i - (1usize << j)))
    }
}
