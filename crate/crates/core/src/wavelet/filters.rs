//! Biorthogonal filter banks and the differentiation link between families.
//!
//! Filters are Laurent polynomials in `z = e^{-iξ}`; a bank stores the primal
//! scaling/wavelet filters `(h, g)` and their duals `(h̃, g̃)` under the
//! normalization `Σ h = √2`. Wavelet filters follow the alternating flip
//! `g[k] = (-1)^k h̃[1-k]`, `g̃[k] = (-1)^k h[1-k]`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Finite Laurent polynomial `Σ c[i] z^(offset + i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    offset: i32,
    coeffs: Vec<f64>,
}

impl Laurent {
    pub fn new(offset: i32, coeffs: Vec<f64>) -> Self {
        Laurent { offset, coeffs }.trimmed()
    }

    pub fn monomial(power: i32, c: f64) -> Self {
        Laurent { offset: power, coeffs: vec![c] }
    }

    pub fn offset(&self) -> i32 {
        self.offset
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest power with a stored coefficient.
    pub fn end(&self) -> i32 {
        self.offset + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, power: i32) -> f64 {
        let i = power - self.offset;
        if i < 0 || i as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[i as usize]
        }
    }

    /// `(power, coefficient)` pairs.
    pub fn taps(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.offset + i as i32, c))
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs[self.coeffs.len() - 1] == 0.0 {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| **c == 0.0).count();
        if lead == self.coeffs.len() {
            return Laurent { offset: 0, coeffs: vec![0.0] };
        }
        self.coeffs.drain(..lead);
        self.offset += lead as i32;
        self
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Laurent::new(self.offset + other.offset, out)
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        Laurent::new(lo, (lo..=hi).map(|p| self.coeff(p) + other.coeff(p)).collect())
    }

    pub fn scale(&self, s: f64) -> Laurent {
        Laurent::new(self.offset, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, e: u32) -> Laurent {
        (0..e).fold(Laurent::monomial(0, 1.0), |acc, _| acc.mul(self))
    }

    /// Substitute `z -> z^-1`.
    pub fn reversed(&self) -> Laurent {
        let mut c = self.coeffs.clone();
        c.reverse();
        Laurent::new(-self.end(), c)
    }

    /// Exact division by `(1 + z)`. Fails if the remainder is nonzero.
    pub fn div_one_plus_z(&self) -> Option<Laurent> {
        // q(z)(1 + z) = p(z): q[i] = p[i] - q[i-1], last coefficient must cancel.
        let p = &self.coeffs;
        if p.len() < 2 {
            return None;
        }
        let mut q = Vec::with_capacity(p.len() - 1);
        let mut prev = 0.0;
        for &c in &p[..p.len() - 1] {
            let v = c - prev;
            q.push(v);
            prev = v;
        }
        let rem = p[p.len() - 1] - prev;
        let scale = p.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if rem.abs() > 1e-12 * scale {
            return None;
        }
        Some(Laurent::new(self.offset, q))
    }

    /// Evaluate at `z = e^{-iξ}`.
    pub fn eval(&self, xi: f64) -> Complex64 {
        self.taps().map(|(p, c)| Complex64::from_polar(c, -(p as f64) * xi)).sum()
    }

    /// Alternating flip `c'[k] = (-1)^k c[1-k]`.
    fn alternating_flip(&self) -> Laurent {
        let lo = 1 - self.end();
        let hi = 1 - self.offset;
        Laurent::new(
            lo,
            (lo..=hi)
                .map(|k| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 } * self.coeff(1 - k))
                .collect(),
        )
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Primal/dual scaling and wavelet filters of one biorthogonal family.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    name: String,
    h: Laurent,
    g: Laurent,
    h_dual: Laurent,
    g_dual: Laurent,
}

impl FilterBank {
    /// Bank from the two scaling filters; wavelet filters come from the flip.
    pub fn from_scaling(name: impl Into<String>, h: Laurent, h_dual: Laurent) -> Self {
        let g = h_dual.alternating_flip();
        let g_dual = h.alternating_flip();
        FilterBank { name: name.into(), h, g, h_dual, g_dual }
    }

    /// Cohen–Daubechies–Feauveau spline family with a B-spline of order
    /// `order` (degree `order - 1`) as primal scaling function and `dual_order`
    /// vanishing moments on the primal wavelet.
    pub fn cdf_spline(order: u32, dual_order: u32) -> Result<Self> {
        if order == 0 || dual_order == 0 || !(order + dual_order).is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "CDF({order},{dual_order}) needs positive orders of equal parity"
            )));
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let half_one_plus_z = Laurent::new(0, vec![0.5, 0.5]);
        let h = half_one_plus_z.pow(order).scale(sqrt2);
        // sin²(ξ/2) = (2 - z - z^-1) / 4
        let s = Laurent::new(-1, vec![-0.25, 0.5, -0.25]);
        let l = (order + dual_order) / 2;
        let mut p = Laurent::monomial(0, 0.0);
        for k in 0..l {
            let c = binomial((l - 1 + k) as u64, k as u64);
            p = p.add(&s.pow(k).scale(c));
        }
        let shift = (order as i32 - dual_order as i32) / 2;
        let h_dual = Laurent::monomial(shift, sqrt2)
            .mul(&half_one_plus_z.pow(dual_order))
            .mul(&p);
        Ok(FilterBank::from_scaling(format!("cdf{order}.{dual_order}"), h, h_dual))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn h(&self) -> &Laurent {
        &self.h
    }

    pub fn g(&self) -> &Laurent {
        &self.g
    }

    pub fn h_dual(&self) -> &Laurent {
        &self.h_dual
    }

    pub fn g_dual(&self) -> &Laurent {
        &self.g_dual
    }

    /// Values of the primal scaling function at the integers in its support,
    /// as `(first integer, samples)`.
    pub fn integer_samples(&self) -> (i32, Vec<f64>) {
        // φ(m) = Σ_k √2 h[k] φ(2m - k): fixed point normalized to Σ φ(m) = 1.
        let (lo, hi) = (self.h.offset(), self.h.end());
        let len = (hi - lo + 1) as usize;
        let mut v = vec![1.0 / len as f64; len];
        let sqrt2 = std::f64::consts::SQRT_2;
        for _ in 0..200 {
            let mut next = vec![0.0; len];
            for (i, out) in next.iter_mut().enumerate() {
                let m = lo + i as i32;
                for (k, c) in self.h.taps() {
                    let p = 2 * m - k;
                    if p >= lo && p <= hi {
                        *out += sqrt2 * c * v[(p - lo) as usize];
                    }
                }
            }
            let sum: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= sum);
            v = next;
        }
        (lo, v)
    }

    /// `Σ_m φ(m) e^{-iξm}`, the transform of the integer samples.
    pub fn sampled_ft(&self, xi: f64) -> Complex64 {
        let (lo, v) = self.integer_samples();
        v.iter()
            .enumerate()
            .map(|(i, c)| Complex64::from_polar(*c, -((lo + i as i32) as f64) * xi))
            .sum()
    }

    /// Fourier transform of the primal scaling function, `Π m(ξ/2^j)` with
    /// `m(ξ) = H(e^{-iξ}) / √2`.
    pub fn scaling_ft(&self, xi: f64) -> Complex64 {
        let norm = std::f64::consts::FRAC_1_SQRT_2;
        let mut acc = Complex64::new(1.0, 0.0);
        let mut x = xi;
        for _ in 0..60 {
            x *= 0.5;
            acc *= self.h.eval(x) * norm;
        }
        acc
    }
}

/// Applies the differentiation link to a bank: returns the family whose
/// scaling function satisfies `φ¹' = φ⁰(x) - φ⁰(x-1)` and whose wavelet
/// satisfies `ψ¹ = 4 ∫ ψ⁰`.
///
/// In filter terms `H⁰(z) = 2 H¹(z) / (1 + z)` and `H̃⁰(z) = H̃¹(z)(1 + z⁻¹) / 2`.
pub fn derive_differentiated_family(fb: &FilterBank) -> Result<FilterBank> {
    let h = fb
        .h
        .div_one_plus_z()
        .ok_or_else(|| {
            Error::FamilyIneligible(format!(
                "primal filter of {} has no (1 + z) factor",
                fb.name
            ))
        })?
        .scale(2.0);
    if h.coeffs.len() < 2 {
        return Err(Error::FamilyIneligible(format!(
            "{} has a discontinuous primal scaling function",
            fb.name
        )));
    }
    let h_dual = fb.h_dual.mul(&Laurent::new(-1, vec![0.5, 0.5]));
    Ok(FilterBank::from_scaling(format!("d({})", fb.name), h, h_dual))
}

/// Three families linked by differentiation: `plus` (ψ¹), `zero` (ψ⁰) and
/// `minus` (ψ⁻¹).
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyChain {
    pub fb_plus: FilterBank,
    pub fb_zero: FilterBank,
    pub fb_minus: FilterBank,
}

impl FamilyChain {
    pub fn from_base(base: FilterBank) -> Result<Self> {
        let fb_zero = derive_differentiated_family(&base)?;
        let fb_minus = derive_differentiated_family(&fb_zero)?;
        Ok(FamilyChain { fb_plus: base, fb_zero, fb_minus })
    }

    /// Quintic B-spline base (`CDF(6,6)`) followed by quartic and cubic families.
    pub fn spline() -> Self {
        let base = FilterBank::cdf_spline(6, 6).expect("valid CDF orders");
        FamilyChain::from_base(base).expect("spline families are differentiable")
    }
}

impl Default for FamilyChain {
    fn default() -> Self {
        FamilyChain::spline()
    }
}
