mod common;

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use mci::forward::{apply_forward, kernel_fourier, KernelParams};
use mci::fourier::{cosine_taper, recon_fourier, select_kmax, SignalModel, TaperSpec};
use mci::grid::{rel_l2_error, CurrentField, FieldMap3, GridSpec};
use mci::scenario::two_trace;
use mci::spectral::Fft2;

const UM: f64 = 1e-6;

fn model(z: f64, sigma: f64) -> SignalModel {
    SignalModel { j0: 1.6e7, w: 10.0 * UM, d: 1.0 * UM, z, sigma }
}

/// Crossing of `j0 g(k) / (π k w) = σ / 2` from `u e^u = 2 j0 μ0 d z / (w σ)`,
/// `u = 2π z k`, solved by Newton iteration.
fn kmax_oracle(m: &SignalModel) -> f64 {
    let c = 2.0 * m.j0 * MU0 * m.d * m.z / (m.w * m.sigma);
    let mut u = c.ln().max(0.5);
    for _ in 0..100 {
        let f = u * u.exp() - c;
        let step = f / ((1.0 + u) * u.exp());
        u -= step;
        if step.abs() < 1e-15 * u {
            break;
        }
    }
    u / (2.0 * PI * m.z)
}

#[test]
fn cutoff_matches_closed_form() {
    let grid = GridSpec::new(128, 2.0 * UM).unwrap();
    let m = model(5.0 * UM, 1.25e-6);
    let got = select_kmax(&m, &grid).unwrap();
    let want = kmax_oracle(&m);
    assert!(!got.below_floor);
    assert!((got.taper.k_max - want).abs() <= 1e-9 * want, "{:e} vs {want:e}", got.taper.k_max);
}

#[test]
fn cutoff_limits_and_monotonicity() {
    let grid = GridSpec::new(128, 2.0 * UM).unwrap();
    let quiet = select_kmax(&model(5.0 * UM, 1e-30), &grid).unwrap();
    assert_eq!(quiet.taper.k_max, grid.nyquist());
    let mut last = f64::INFINITY;
    for z in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let k = select_kmax(&model(z * UM, 1e-6), &grid).unwrap().taper.k_max;
        assert!(k < last || (k == grid.nyquist() && last == grid.nyquist()));
        last = k;
    }
    let loud = select_kmax(&model(50.0 * UM, 1.0), &grid).unwrap();
    assert!(loud.below_floor);
    assert!(select_kmax(&model(5.0 * UM, 0.0), &grid).is_err());
}

#[test]
fn taper_examples() {
    let grid = GridSpec::new(64, 1.0 / 64.0).unwrap();
    let t = TaperSpec::new(16.0).unwrap();
    let c = cosine_taper(&grid, &t).values;
    assert_eq!(c[(0, 0)], 1.0);
    assert!(c[(0, 16)].abs() < 1e-15);
    assert!((c[(8, 8)] - 0.25).abs() < 1e-15);
    assert!(TaperSpec::new(0.0).is_err());
}

fn mean_free_field(grid: GridSpec, seed: u64) -> CurrentField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let mut r = || {
        let a = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let m = a.mean().unwrap();
        a - m
    };
    CurrentField::new(grid, r(), r()).unwrap()
}

#[test]
fn unfiltered_inverse_is_identity_at_small_standoff() {
    let grid = GridSpec::new(64, 2.0 * UM).unwrap();
    let j = mean_free_field(grid, 1);
    for z in [1.0 * UM, 2.0 * UM, 4.0 * UM] {
        let b = apply_forward(&j, &KernelParams::new(z, 1.0 * UM).unwrap());
        let err = rel_l2_error(&recon_fourier(&b, &TaperSpec::unfiltered()), &j).unwrap();
        assert!(err <= 1e-8, "z = {z:e}: {err:e}");
    }
    let zero = FieldMap3::new(grid, Array2::zeros((64, 64)), Array2::zeros((64, 64)), Array2::zeros((64, 64)), 5.0 * UM, 1.0 * UM).unwrap();
    assert_eq!(recon_fourier(&zero, &TaperSpec::new(1e5).unwrap()).norm(), 0.0);
}

#[test]
fn error_never_grows_with_cutoff_on_noiseless_data() {
    let sc = two_trace(128).unwrap();
    let truth = sc.simulate().unwrap().current;
    let b = apply_forward(&truth, &KernelParams::new(5.0 * UM, 1.0 * UM).unwrap());
    let mut last = f64::INFINITY;
    for i in 1..=12 {
        let k = sc.grid.nyquist() * i as f64 / 12.0;
        let err = rel_l2_error(&recon_fourier(&b, &TaperSpec::new(k).unwrap()), &truth).unwrap();
        assert!(err <= last * (1.0 + 1e-12), "k_max = {k:e}: {err} > {last}");
        last = err;
    }
}

#[test]
fn noise_passes_through_as_taper_over_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 32;
    let grid = GridSpec::new(n, 2.0 * UM).unwrap();
    let mut r = || Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0) * 1e-6);
    let p = KernelParams::new(3.0 * UM, 1.0 * UM).unwrap();
    let b = FieldMap3::new(grid, r(), r(), r(), p.z, p.d).unwrap();
    let t = TaperSpec::new(0.6 * grid.nyquist()).unwrap();
    let j = recon_fourier(&b, &t);
    let fft = Fft2::new(n);
    let (bx, by, jx, jy) = (fft.forward(&b.bx), fft.forward(&b.by), fft.forward(&j.jx), fft.forward(&j.jy));
    let c = cosine_taper(&grid, &t).values;
    let f = grid.freqs();
    let scale = jx.iter().chain(jy.iter()).fold(0.0f64, |m, v| m.max(v.norm()));
    for ((r, col), cv) in c.indexed_iter() {
        let gain = Complex64::new(cv / kernel_fourier(f[col].hypot(f[r]), &p), 0.0);
        assert!((jx[(r, col)] + by[(r, col)] * gain).norm() <= 1e-12 * scale);
        assert!((jy[(r, col)] - bx[(r, col)] * gain).norm() <= 1e-12 * scale);
    }
}
