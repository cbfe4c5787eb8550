//! Holomorphic extension to the strip `-D < y < 0`, the surface tangent
//! field `W`, and the Plotnikov change of variables.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    analyze_complex, check_width, nan_max, product_grid, synthesize_complex, SpectralFunction,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point `x + iy` of the closed strip `-D ≤ y ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripPoint {
    pub x: f64,
    pub y: f64,
}

impl StripPoint {
    pub fn new(x: f64, y: f64, width: f64) -> Result<Self> {
        if !(y <= 0.0 && y >= -width) {
            return Err(Error::OutsideStrip { x, y, width });
        }
        Ok(Self { x, y })
    }
}

/// A complex 2π-periodic function on the real line, stored as the spectra
/// of its real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexBoundaryFunction {
    pub re: SpectralFunction,
    pub im: SpectralFunction,
}

impl ComplexBoundaryFunction {
    /// Pads the shorter part so both share a truncation order.
    pub fn new(re: SpectralFunction, im: SpectralFunction) -> Self {
        let n = re.order().max(im.order());
        Self {
            re: re.resized(n),
            im: im.resized(n),
        }
    }

    pub fn order(&self) -> usize {
        self.re.order()
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        Complex64::new(self.re.evaluate(x), self.im.evaluate(x))
    }

    pub fn samples(&self, m: usize) -> Result<Vec<Complex64>> {
        synthesize_complex(&self.re, &self.im, m)
    }

    pub fn from_samples(samples: &[Complex64], order: usize) -> Result<Self> {
        let (re, im) = analyze_complex(samples, order)?;
        Ok(Self { re, im })
    }

    pub fn derivative(&self) -> Self {
        Self {
            re: self.re.derivative(),
            im: self.im.derivative(),
        }
    }
}

fn require_mean_free(u: &SpectralFunction) -> Result<()> {
    if u.is_mean_free() {
        Ok(())
    } else {
        Err(Error::NotMeanFree { mean: u.mean() })
    }
}

/// Value at `z` of the holomorphic extension of a mean-free `u` whose real
/// part vanishes on the bottom `y = -D`.
pub fn extend(u: &SpectralFunction, width: f64, z: StripPoint) -> Result<Complex64> {
    check_width(width)?;
    require_mean_free(u)?;
    if !(z.y <= 0.0 && z.y >= -width) {
        return Err(Error::OutsideStrip {
            x: z.x,
            y: z.y,
            width,
        });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, c) in u.coeffs().iter().enumerate().skip(1) {
        let nf = n as f64;
        let denom = -(-2.0 * nf * width).exp_m1();
        let phase = Complex64::from_polar(1.0, nf * z.x);
        // Mode +n carries e^{-n(2D+y)}, mode -n carries e^{ny}; both are ≤ 1 in the strip.
        let pos = -2.0 * (-nf * (2.0 * width + z.y)).exp() / denom;
        let neg = 2.0 * (nf * z.y).exp() / denom;
        sum += pos * c * phase + neg * c.conj() * phase.conj();
    }
    Ok(sum)
}

/// Boundary trace `u - i C_D(u)` of the extension on `y = 0`.
pub fn boundary_trace(u: &SpectralFunction, width: f64) -> Result<ComplexBoundaryFunction> {
    require_mean_free(u)?;
    Ok(ComplexBoundaryFunction {
        re: u.clone(),
        im: u.apply_strip_hilbert(width)?.scale(-1.0),
    })
}

/// `W = 1/k + C_D(w') + i w'`, the tangent `X' + iY'` of the surface
/// parametrisation, together with its smallest real part on the sample grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceTangent {
    pub trace: ComplexBoundaryFunction,
    pub min_real: f64,
    pub k: f64,
    pub width: f64,
}

impl SurfaceTangent {
    /// True when the surface is the graph of a function.
    pub fn is_graph(&self) -> bool {
        self.min_real > 0.0
    }

    fn require_graph(&self) -> Result<()> {
        if self.is_graph() {
            Ok(())
        } else {
            Err(Error::SingularTransform("min Re W is not positive"))
        }
    }

    pub fn order(&self) -> usize {
        self.trace.order()
    }
}

pub fn surface_tangent(w: &SpectralFunction, k: f64, width: f64) -> Result<SurfaceTangent> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
        });
    }
    require_mean_free(w)?;
    let dw = w.derivative();
    let re = dw.apply_strip_hilbert(width)?.add_constant(1.0 / k);
    let trace = ComplexBoundaryFunction { re, im: dw };
    let m = product_grid(trace.order().max(1));
    let min_real = trace
        .re
        .to_samples(m)?
        .values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(SurfaceTangent {
        trace,
        min_real,
        k,
        width,
    })
}

/// `P[u] = Re{W E_D[u]} = u Re W + Im W · C_D(u)`, exact at order `N_u + N_W`.
pub fn plotnikov_transform(
    u: &SpectralFunction,
    tangent: &SurfaceTangent,
) -> Result<SpectralFunction> {
    require_mean_free(u)?;
    let cu = u.apply_strip_hilbert(tangent.width)?;
    let p = &u.multiply(&tangent.trace.re) + &tangent.trace.im.multiply(&cu);
    // Skew-symmetry of C_D makes the mean vanish up to rounding.
    Ok(p.without_mean())
}

/// Samples of `E_D[f] / W` on an `m`-point grid.
fn divided_trace(
    f: &SpectralFunction,
    tangent: &SurfaceTangent,
    m: usize,
) -> Result<Vec<Complex64>> {
    let e = boundary_trace(f, tangent.width)?.samples(m)?;
    let w = tangent.trace.samples(m)?;
    Ok(e.iter().zip(&w).map(|(a, b)| a / b).collect())
}

/// Mean of `Im(W E_D[f])`, the constant by which `E_D[P f]` and `W E_D[f]` differ.
fn trace_defect(f: &SpectralFunction, tangent: &SurfaceTangent) -> Result<f64> {
    let cf = f.apply_strip_hilbert(tangent.width)?;
    let cw = tangent.trace.re.add_constant(-tangent.trace.re.mean());
    Ok(tangent.trace.im.multiply(f).mean() - cw.multiply(&cf).mean())
}

/// Inverse of [`plotnikov_transform`] at truncation order `q.order()`.
///
/// `Re{E_D[q]/W}` alone misses `u` by a multiple of `Im W/|W|²`, because
/// `E_D[P u] = W E_D[u] - i c(u)` with a constant `c(u)` that is generally
/// nonzero. The multiple is recovered from the linear equation for `c`.
pub fn plotnikov_inverse(
    q: &SpectralFunction,
    tangent: &SurfaceTangent,
) -> Result<SpectralFunction> {
    require_mean_free(q)?;
    tangent.require_graph()?;
    let order = q.order().max(tangent.order());
    let m = product_grid(order);
    let naive = divided_trace(q, tangent, m)?;
    let w = tangent.trace.samples(m)?;
    let naive = real_part(&naive, order)?;
    let phi: Vec<f64> = w.iter().map(|z| z.im / z.norm_sqr()).collect();
    let phi = real_part_f(&phi, order)?;
    let gamma = trace_defect(&naive, tangent)? / (1.0 - trace_defect(&phi, tangent)?);
    Ok((&naive + &phi.scale(gamma))
        .without_mean()
        .resized(q.order()))
}

/// The uncorrected inverse `Re{E_D[q]/W}`, mean projected off.
pub fn plotnikov_inverse_uncorrected(
    q: &SpectralFunction,
    tangent: &SurfaceTangent,
) -> Result<SpectralFunction> {
    require_mean_free(q)?;
    tangent.require_graph()?;
    let order = q.order().max(tangent.order());
    let z = divided_trace(q, tangent, product_grid(order))?;
    Ok(real_part(&z, order)?.resized(q.order()))
}

fn real_part(z: &[Complex64], order: usize) -> Result<SpectralFunction> {
    let re: Vec<f64> = z.iter().map(|c| c.re).collect();
    real_part_f(&re, order)
}

fn real_part_f(values: &[f64], order: usize) -> Result<SpectralFunction> {
    let s = crate::spectral::SampledFunction::new(values.to_vec())?;
    Ok(SpectralFunction::from_samples(&s, order)?.without_mean())
}

/// Residual of the product identity for `C_D`, taken modulo the mean:
/// `C(uC(v) + vC(u)) - [C(u)C(v) - uv - mean(C(u)C(v) - uv)]`.
pub fn check_product_identity(
    u: &SpectralFunction,
    v: &SpectralFunction,
    width: f64,
) -> Result<f64> {
    check_width(width)?;
    Ok(check_product_identity_with(u, v, |f| {
        f.apply_strip_hilbert(width).expect("width checked")
    }))
}

/// [`check_product_identity`] for an arbitrary candidate transform.
pub fn check_product_identity_with(
    u: &SpectralFunction,
    v: &SpectralFunction,
    hilbert: impl Fn(&SpectralFunction) -> SpectralFunction,
) -> f64 {
    let u = u.without_mean();
    let v = v.without_mean();
    let cu = hilbert(&u);
    let cv = hilbert(&v);
    let lhs = hilbert(&(&u.multiply(&cv) + &v.multiply(&cu)));
    let rhs = (&cu.multiply(&cv) - &u.multiply(&v)).without_mean();
    lhs.max_coeff_diff(&rhs)
}

/// The mean `[C(u)C(v) - uv]` dropped by the product identity.
pub fn product_identity_mean_defect(
    u: &SpectralFunction,
    v: &SpectralFunction,
    width: f64,
) -> Result<f64> {
    let cu = u.without_mean().apply_strip_hilbert(width)?;
    let cv = v.without_mean().apply_strip_hilbert(width)?;
    Ok(cu.multiply(&cv).mean() - u.without_mean().multiply(&v.without_mean()).mean())
}

/// Spectrum of a boundary identity defect split into its constant mode and the rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceDefect {
    pub constant: Complex64,
    pub max_nonconstant: f64,
}

impl TraceDefect {
    fn from_samples(diff: &[Complex64], order: usize) -> Result<Self> {
        let d = ComplexBoundaryFunction::from_samples(diff, order)?;
        let constant = Complex64::new(d.re.mean(), d.im.mean());
        let max_nonconstant = (1..=order as i64)
            .flat_map(|n| [n, -n])
            .map(|n| (d.re.coeff(n) + I * d.im.coeff(n)).norm())
            .fold(0.0, nan_max);
        Ok(Self {
            constant,
            max_nonconstant,
        })
    }
}

/// `E_D[P u] - W E_D[u]`: a purely imaginary constant.
pub fn transform_trace_defect(
    u: &SpectralFunction,
    tangent: &SurfaceTangent,
) -> Result<TraceDefect> {
    let p = plotnikov_transform(u, tangent)?;
    let order = p.order();
    let m = product_grid(order);
    let ep = boundary_trace(&p, tangent.width)?.samples(m)?;
    let eu = boundary_trace(u, tangent.width)?.samples(m)?;
    let w = tangent.trace.samples(m)?;
    let diff: Vec<Complex64> = ep
        .iter()
        .zip(&eu)
        .zip(&w)
        .map(|((a, b), c)| a - c * b)
        .collect();
    TraceDefect::from_samples(&diff, order)
}

/// `E_D[(P u)'] - (W E_D[u'] + W' E_D[u])`, which has no non-constant modes.
pub fn derivative_trace_defect(
    u: &SpectralFunction,
    tangent: &SurfaceTangent,
) -> Result<TraceDefect> {
    let p = plotnikov_transform(u, tangent)?;
    let order = p.order() + 1;
    let m = product_grid(order);
    let du = u.derivative();
    let epd = boundary_trace(&p.derivative(), tangent.width)?.samples(m)?;
    let eu = boundary_trace(u, tangent.width)?.samples(m)?;
    let edu = boundary_trace(&du, tangent.width)?.samples(m)?;
    let w = tangent.trace.samples(m)?;
    let dw = tangent.trace.derivative().samples(m)?;
    let diff: Vec<Complex64> = (0..m)
        .map(|j| epd[j] - (w[j] * edu[j] + dw[j] * eu[j]))
        .collect();
    TraceDefect::from_samples(&diff, order)
}

/// Residuals of the boundary pairing identity for `F = E_D[u]`, `G = E_D[v]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingResidual {
    /// `|∫ Im{conj(F) G} - 2 ∫ Re F Im G|` over one period of `y = 0`.
    pub pairing: f64,
    /// `|∮ F G dz|` around the rectangle `[0, 2π] × [-D, 0]`.
    pub contour: f64,
}

/// Trapezoid quadrature with `nodes` points per edge.
pub fn contour_pairing_check(
    u: &SpectralFunction,
    v: &SpectralFunction,
    width: f64,
    nodes: usize,
) -> Result<PairingResidual> {
    check_width(width)?;
    require_mean_free(u)?;
    require_mean_free(v)?;
    let nodes = nodes.max(2);
    let fg = |x: f64, y: f64| -> Result<(Complex64, Complex64)> {
        let z = StripPoint { x, y };
        Ok((extend(u, width, z)?, extend(v, width, z)?))
    };

    let hx = 2.0 * PI / nodes as f64;
    let mut pairing = 0.0;
    let mut top = Complex64::new(0.0, 0.0);
    let mut bottom = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let x = j as f64 * hx;
        let (f, g) = fg(x, 0.0)?;
        pairing += (f.conj() * g).im - 2.0 * f.re * g.im;
        top += f * g;
        let (f, g) = fg(x, -width)?;
        bottom += f * g;
    }
    pairing *= hx;

    // Vertical edges: closed-interval trapezoid, oriented downward on the right.
    let hy = width / (nodes - 1) as f64;
    let mut right = Complex64::new(0.0, 0.0);
    let mut left = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let y = -(j as f64) * hy;
        let wgt = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
        let (f, g) = fg(2.0 * PI, y)?;
        right += wgt * f * g;
        let (f, g) = fg(0.0, y)?;
        left += wgt * f * g;
    }
    // dz = dx on horizontal edges, dz = i dy on vertical ones.
    let contour = top * hx - bottom * hx + (-I * right + I * left) * hy;
    Ok(PairingResidual {
        pairing: pairing.abs(),
        contour: contour.norm(),
    })
}
