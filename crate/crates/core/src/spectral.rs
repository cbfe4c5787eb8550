//! Truncated Fourier representation of real 2π-periodic functions.
//!
//! A [`SpectralFunction`] stores the complex amplitudes `û_n` for
//! `n = 0..=N`; negative modes are implied by Hermitian symmetry
//! `û_{-n} = conj(û_n)`, so every value is real-valued by construction.
//! Sample grids are only used transiently for pointwise products.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 128;

/// Above this argument `coth` switches to its asymptotic form.
const COTH_ASYMPTOTIC: f64 = 20.0;

const IMAG_RESIDUE_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// `coth(x)` without overflow for large `|x|`.
pub fn coth_safe(x: f64) -> Result<f64> {
    if x == 0.0 || x.is_nan() {
        return Err(Error::Domain("coth is undefined at 0"));
    }
    let ax = x.abs();
    let value = if ax > COTH_ASYMPTOTIC {
        1.0 + 2.0 / ((2.0 * ax).exp() - 1.0)
    } else {
        1.0 / ax.tanh()
    };
    Ok(value.copysign(x))
}

/// `coth(n D)` for positive mode numbers; callers guarantee `n D > 0`.
#[inline]
pub(crate) fn coth_mode(n: usize, width: f64) -> f64 {
    let x = n as f64 * width;
    if x > COTH_ASYMPTOTIC {
        1.0 + 2.0 / ((2.0 * x).exp() - 1.0)
    } else {
        1.0 / x.tanh()
    }
}

/// `f64::max` that propagates NaN, for error measures that must not hide a
/// diverged computation.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Smallest even grid that samples a function of order `order` without loss.
pub fn min_grid(order: usize) -> usize {
    2 * order + 2
}

/// Grid used for products and pointwise compositions of order-`order` functions.
pub fn product_grid(order: usize) -> usize {
    (4 * order).max(min_grid(order))
}

pub(crate) fn check_width(width: f64) -> Result<()> {
    if width > 0.0 && width.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "strip width",
            value: width,
        })
    }
}

fn check_grid(grid: usize, order: usize) -> Result<()> {
    if grid.is_multiple_of(2) && grid > 2 * order {
        Ok(())
    } else {
        Err(Error::GridTooSmall {
            grid,
            order,
            needed: min_grid(order),
        })
    }
}

/// Real samples on the uniform grid `x_j = 2πj/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !values.len().is_multiple_of(2) {
            return Err(Error::GridTooSmall {
                grid: values.len(),
                order: 0,
                needed: 2,
            });
        }
        Ok(Self { values })
    }

    /// Samples `f` on an `m`-point grid.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid_points(m).map(f).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The nodes `2πj/m`, `j = 0..m`.
pub fn grid_points(m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |j| 2.0 * PI * j as f64 / m as f64)
}

/// A real 2π-periodic trigonometric polynomial of order `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFunction {
    coeffs: Vec<Complex64>,
}

impl SpectralFunction {
    /// Builds from the non-negative amplitudes `û_0..=û_N`. The imaginary
    /// part of `û_0` is dropped.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        coeffs[0].im = 0.0;
        Self { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); order + 1],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut f = Self::zeros(order);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    /// `Σ_j cos[j-1]·cos(jx) + sin[j-1]·sin(jx)`, mean zero.
    pub fn from_cos_sin(cos: &[f64], sin: &[f64], order: usize) -> Self {
        let mut f = Self::zeros(order.max(cos.len()).max(sin.len()));
        for (j, &a) in cos.iter().enumerate() {
            f.coeffs[j + 1] += Complex64::new(0.5 * a, 0.0);
        }
        for (j, &b) in sin.iter().enumerate() {
            f.coeffs[j + 1] += Complex64::new(0.0, -0.5 * b);
        }
        f
    }

    /// `amplitude·cos(mode·x)` at truncation `order`.
    pub fn cosine(mode: usize, amplitude: f64, order: usize) -> Self {
        let mut f = Self::zeros(order.max(mode));
        if mode == 0 {
            f.coeffs[0].re = amplitude;
        } else {
            f.coeffs[mode] = Complex64::new(0.5 * amplitude, 0.0);
        }
        f
    }

    /// `amplitude·sin(mode·x)` at truncation `order`.
    pub fn sine(mode: usize, amplitude: f64, order: usize) -> Self {
        let mut f = Self::zeros(order.max(mode));
        if mode > 0 {
            f.coeffs[mode] = Complex64::new(0.0, -0.5 * amplitude);
        }
        f
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Amplitudes `û_0..=û_N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `û_n` for any integer `n`; zero beyond the truncation.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let idx = n.unsigned_abs() as usize;
        match self.coeffs.get(idx) {
            Some(c) if n >= 0 => *c,
            Some(c) => c.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Coefficient of `cos(jx)` in the real expansion.
    pub fn cos_coeff(&self, j: usize) -> f64 {
        match j {
            0 => self.coeffs[0].re,
            _ => self.coeffs.get(j).map_or(0.0, |c| 2.0 * c.re),
        }
    }

    /// Coefficient of `sin(jx)` in the real expansion.
    pub fn sin_coeff(&self, j: usize) -> f64 {
        match j {
            0 => 0.0,
            _ => self.coeffs.get(j).map_or(0.0, |c| -2.0 * c.im),
        }
    }

    pub fn is_mean_free(&self) -> bool {
        self.coeffs[0].re == 0.0
    }

    /// True when the function is a pure cosine series.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Same function with the mean removed.
    pub fn without_mean(&self) -> Self {
        let mut f = self.clone();
        f.coeffs[0] = Complex64::new(0.0, 0.0);
        f
    }

    /// Even part: the cosine series.
    pub fn even_part(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .map(|c| Complex64::new(c.re, 0.0))
                .collect(),
        )
    }

    /// Truncates or zero-pads to `order`.
    pub fn resized(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, &c)| f(n, c))
                .collect(),
        )
    }

    /// Largest `|û_n - v̂_n|` over all modes, zero-padding the shorter one.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let n = self.order().max(other.order());
        (0..=n as i64)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, nan_max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, nan_max)
    }

    /// Direct evaluation of the series at `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut value = self.coeffs[0].re;
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            let phase = Complex64::from_polar(1.0, n as f64 * x);
            value += 2.0 * (c * phase).re;
        }
        value
    }

    /// Discrete Fourier synthesis on an `m`-point grid.
    pub fn to_samples(&self, m: usize) -> Result<SampledFunction> {
        check_grid(m, self.order())?;
        let mut buf = self.full_spectrum(m);
        inverse_plan(m).process(&mut buf);
        let scale = self.coeffs.iter().map(|c| c.norm()).sum::<f64>().max(1.0);
        let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, nan_max);
        if residue > IMAG_RESIDUE_TOL * scale {
            return Err(Error::ImaginaryResidue { residue });
        }
        Ok(SampledFunction {
            values: buf.into_iter().map(|z| z.re).collect(),
        })
    }

    /// Discrete Fourier analysis of `samples`, keeping modes up to `order`.
    pub fn from_samples(samples: &SampledFunction, order: usize) -> Result<Self> {
        let m = samples.grid_size();
        check_grid(m, order)?;
        let mut buf: Vec<Complex64> = samples
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        forward_plan(m).process(&mut buf);
        let inv = 1.0 / m as f64;
        Ok(Self::new(buf[..=order].iter().map(|c| c * inv).collect()))
    }

    /// Hermitian-extended spectrum laid out in FFT order on `m` bins.
    fn full_spectrum(&self, m: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[0] = self.coeffs[0];
        for (n, &c) in self.coeffs.iter().enumerate().skip(1) {
            buf[n] = c;
            buf[m - n] = c.conj();
        }
        buf
    }

    pub fn derivative(&self) -> Self {
        self.map_coeffs(|n, c| c * Complex64::new(0.0, n as f64))
    }

    /// `⟨f, g⟩ = ∫₀^{2π} f g dx`.
    pub fn inner_product(&self, other: &Self) -> f64 {
        let n = self.order().min(other.order());
        let tail: f64 = (1..=n)
            .map(|k| (self.coeffs[k] * other.coeffs[k].conj()).re)
            .sum();
        2.0 * PI * (self.coeffs[0].re * other.coeffs[0].re + 2.0 * tail)
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner_product(self).max(0.0).sqrt()
    }

    /// Pointwise product, exact at order `N_f + N_g`.
    pub fn multiply(&self, other: &Self) -> Self {
        let out = self.order() + other.order();
        let m = product_grid(self.order().max(other.order())).max(min_grid(out));
        // Grids are chosen here, so synthesis and analysis cannot fail.
        let a = self.to_samples(m).expect("product grid");
        let b = other.to_samples(m).expect("product grid");
        let prod = SampledFunction {
            values: a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect(),
        };
        Self::from_samples(&prod, out).expect("product grid")
    }

    /// Pointwise product truncated back to `order`.
    pub fn multiply_truncated(&self, other: &Self, order: usize) -> Self {
        self.multiply(other).resized(order)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_coeffs(|_, c| c * factor)
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut f = self.clone();
        f.coeffs[0].re += value;
        f
    }

    /// Hilbert transform for the strip of width `D`:
    /// `(C_D f)^_n = -i coth(nD) û_n`, `n ≠ 0`; the mean is discarded.
    pub fn apply_strip_hilbert(&self, width: f64) -> Result<Self> {
        check_width(width)?;
        Ok(self.map_coeffs(|n, c| match n {
            0 => Complex64::new(0.0, 0.0),
            _ => c * Complex64::new(0.0, -coth_mode(n, width)),
        }))
    }

    /// Dirichlet-to-Neumann operator of the strip:
    /// `(G_D f)^_n = n coth(nD) û_n`, `(G_D f)^_0 = û_0 / D`.
    pub fn apply_dtn(&self, width: f64) -> Result<Self> {
        check_width(width)?;
        Ok(self.map_coeffs(|n, c| match n {
            0 => c / width,
            _ => c * (n as f64 * coth_mode(n, width)),
        }))
    }

    /// `C_D(f')`, the symmetric multiplier with symbol `|n| coth(|n| D)`.
    pub fn apply_hilbert_derivative(&self, width: f64) -> Result<Self> {
        check_width(width)?;
        Ok(self.map_coeffs(|n, c| match n {
            0 => Complex64::new(0.0, 0.0),
            _ => c * (n as f64 * coth_mode(n, width)),
        }))
    }
}

fn zip_padded(
    a: &SpectralFunction,
    b: &SpectralFunction,
    op: impl Fn(Complex64, Complex64) -> Complex64,
) -> SpectralFunction {
    let n = a.order().max(b.order());
    SpectralFunction::new((0..=n as i64).map(|k| op(a.coeff(k), b.coeff(k))).collect())
}

impl Add for &SpectralFunction {
    type Output = SpectralFunction;
    fn add(self, rhs: Self) -> SpectralFunction {
        zip_padded(self, rhs, |x, y| x + y)
    }
}

impl Sub for &SpectralFunction {
    type Output = SpectralFunction;
    fn sub(self, rhs: Self) -> SpectralFunction {
        zip_padded(self, rhs, |x, y| x - y)
    }
}

impl Mul for &SpectralFunction {
    type Output = SpectralFunction;
    fn mul(self, rhs: Self) -> SpectralFunction {
        self.multiply(rhs)
    }
}

impl Mul<f64> for &SpectralFunction {
    type Output = SpectralFunction;
    fn mul(self, rhs: f64) -> SpectralFunction {
        self.scale(rhs)
    }
}

impl Neg for &SpectralFunction {
    type Output = SpectralFunction;
    fn neg(self) -> SpectralFunction {
        self.scale(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct SpectralJson {
    n_max: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for SpectralFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpectralJson {
            n_max: self.order(),
            re: self.coeffs.iter().map(|c| c.re).collect(),
            im: self.coeffs.iter().map(|c| c.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpectralFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SpectralJson::deserialize(deserializer)?;
        if raw.re.len() != raw.n_max + 1 || raw.im.len() != raw.n_max + 1 {
            return Err(D::Error::custom(format!(
                "expected {} coefficients, got re: {}, im: {}",
                raw.n_max + 1,
                raw.re.len(),
                raw.im.len()
            )));
        }
        if raw.im[0] != 0.0 {
            return Err(D::Error::custom("mean coefficient must be real"));
        }
        Ok(SpectralFunction::new(
            raw.re
                .into_iter()
                .zip(raw.im)
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        ))
    }
}

/// Samples of the complex function `re + i·im` on an `m`-point grid.
pub(crate) fn synthesize_complex(
    re: &SpectralFunction,
    im: &SpectralFunction,
    m: usize,
) -> Result<Vec<Complex64>> {
    check_grid(m, re.order().max(im.order()))?;
    let a = re.full_spectrum(m);
    let b = im.full_spectrum(m);
    let mut buf: Vec<Complex64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| x + Complex64::new(0.0, 1.0) * y)
        .collect();
    inverse_plan(m).process(&mut buf);
    Ok(buf)
}

/// Splits complex samples into the spectra of their real and imaginary parts.
pub(crate) fn analyze_complex(
    samples: &[Complex64],
    order: usize,
) -> Result<(SpectralFunction, SpectralFunction)> {
    let m = samples.len();
    check_grid(m, order)?;
    let mut buf = samples.to_vec();
    forward_plan(m).process(&mut buf);
    let inv = 1.0 / m as f64;
    let half = Complex64::new(0.5, 0.0);
    let mut re = Vec::with_capacity(order + 1);
    let mut im = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let z = buf[n] * inv;
        let zc = buf[(m - n) % m].conj() * inv;
        re.push((z + zc) * half);
        im.push((z - zc) * Complex64::new(0.0, -0.5));
    }
    Ok((SpectralFunction::new(re), SpectralFunction::new(im)))
}
