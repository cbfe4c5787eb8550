//! The governing equation for the conformal surface elevation `w`, the
//! mass-flux constraint, Bernoulli's law, and the functional they derive from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{product_grid, SpectralFunction};
use crate::strip::{surface_tangent, SurfaceTangent};

/// Physical constants of the problem. `Q` and the strip width are derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParameters {
    /// Wave number, `2π / period`.
    pub k: f64,
    /// Conformal mean depth.
    pub h: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Bifurcation parameter, a length.
    pub mu: f64,
}

impl Default for WaveParameters {
    fn default() -> Self {
        Self {
            k: 1.0,
            h: 1.0,
            g: 1.0,
            mu: 1f64.tanh(),
        }
    }
}

impl WaveParameters {
    pub fn new(k: f64, h: f64, g: f64, mu: f64) -> Result<Self> {
        let p = Self { k, h, g, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("k", self.k), ("h", self.h), ("g", self.g)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
            });
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    /// Hydraulic head `Q = gμ + 2gh`.
    pub fn head(&self) -> f64 {
        self.g * self.mu + 2.0 * self.g * self.h
    }

    /// Strip width `D = kh`.
    pub fn width(&self) -> f64 {
        self.k * self.h
    }
}

/// A surface elevation together with the constants it was solved for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateJson", try_from = "StateJson")]
pub struct WaveState {
    pub params: WaveParameters,
    /// Mass flux.
    pub m: f64,
    /// Bernoulli constant `(m / kh)² / g`.
    pub b: f64,
    /// Mean-free, even elevation about the conformal mean depth.
    pub w: SpectralFunction,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    k: f64,
    h: f64,
    g: f64,
    mu: f64,
    m: f64,
    #[serde(rename = "B")]
    b: f64,
    w: SpectralFunction,
}

impl From<WaveState> for StateJson {
    fn from(s: WaveState) -> Self {
        Self {
            k: s.params.k,
            h: s.params.h,
            g: s.params.g,
            mu: s.params.mu,
            m: s.m,
            b: s.b,
            w: s.w,
        }
    }
}

impl TryFrom<StateJson> for WaveState {
    type Error = Error;
    fn try_from(j: StateJson) -> Result<Self> {
        let params = WaveParameters::new(j.k, j.h, j.g, j.mu)?;
        if !j.w.is_mean_free() {
            return Err(Error::NotMeanFree { mean: j.w.mean() });
        }
        Ok(Self {
            params,
            m: j.m,
            b: j.b,
            w: j.w,
        })
    }
}

impl WaveState {
    /// State with `m` and `B` taken from the mass-flux constraint.
    pub fn new(params: WaveParameters, w: SpectralFunction) -> Result<Self> {
        params.validate()?;
        if !w.is_mean_free() {
            return Err(Error::NotMeanFree { mean: w.mean() });
        }
        let mut state = Self {
            params,
            m: 0.0,
            b: 0.0,
            w,
        };
        let (m, b) = mass_flux_from_constraint(&state)?;
        state.m = m;
        state.b = b;
        Ok(state)
    }

    /// Flat surface `w = 0` at truncation `order`.
    pub fn trivial(params: WaveParameters, order: usize) -> Result<Self> {
        Self::new(params, SpectralFunction::zeros(order))
    }

    /// State with a prescribed mass flux.
    pub fn with_flux(params: WaveParameters, w: SpectralFunction, m: f64) -> Result<Self> {
        params.validate()?;
        if !w.is_mean_free() {
            return Err(Error::NotMeanFree { mean: w.mean() });
        }
        let b = bernoulli_constant(&params, m);
        Ok(Self { params, m, b, w })
    }

    pub fn order(&self) -> usize {
        self.w.order()
    }

    pub fn width(&self) -> f64 {
        self.params.width()
    }

    /// `v = w + h`.
    pub fn elevation(&self) -> SpectralFunction {
        self.w.add_constant(self.params.h)
    }

    pub fn tangent(&self) -> Result<SurfaceTangent> {
        surface_tangent(&self.w, self.params.k, self.width())
    }

    /// `Q - 2gv`, twice the squared flow speed at the surface up to `g`.
    pub fn head_deficit(&self) -> SpectralFunction {
        let p = &self.params;
        self.w
            .scale(-2.0 * p.g)
            .add_constant(p.head() - 2.0 * p.g * p.h)
    }

    /// Largest sampled elevation `max w`.
    pub fn max_elevation(&self) -> Result<f64> {
        let s = self.w.to_samples(product_grid(self.order().max(1)))?;
        Ok(s.values().iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// `Q / 2g > max w + h`: the surface is regularly parametrised.
    pub fn is_regular(&self) -> Result<bool> {
        let p = &self.params;
        Ok(p.head() / (2.0 * p.g) > self.max_elevation()? + p.h)
    }
}

pub fn bernoulli_constant(params: &WaveParameters, m: f64) -> f64 {
    let r = m / params.width();
    r * r / params.g
}

/// `C_D(w')` for the state's strip width.
fn hilbert_slope(state: &WaveState) -> SpectralFunction {
    state
        .w
        .apply_hilbert_derivative(state.width())
        .expect("validated width")
}

/// Left side of the governing equation,
/// `R = μC(w') - w/k - wC(w') - C(ww') + [wC(w')]`, truncated to the order of `w`.
pub fn residual(state: &WaveState) -> SpectralFunction {
    let p = &state.params;
    let d = state.width();
    let n = state.order();
    let cw = hilbert_slope(state);
    let w_cw = state.w.multiply(&cw);
    let ww = state.w.multiply(&state.w.derivative());
    let c_ww = ww.apply_strip_hilbert(d).expect("validated width");
    let r = &(&cw.scale(p.mu) - &state.w.scale(1.0 / p.k)) - &(&w_cw + &c_ww);
    r.add_constant(w_cw.mean()).resized(n)
}

/// Directional derivative of [`residual`] with respect to `w` along `u`.
pub fn residual_jacobian(state: &WaveState, u: &SpectralFunction) -> SpectralFunction {
    let p = &state.params;
    let d = state.width();
    let n = state.order();
    let cw = hilbert_slope(state);
    let cu = u.apply_hilbert_derivative(d).expect("validated width");
    let u_cw = u.multiply(&cw);
    let w_cu = state.w.multiply(&cu);
    let c_wu = state
        .w
        .multiply(u)
        .derivative()
        .apply_strip_hilbert(d)
        .expect("validated width");
    let lin = &cu.scale(p.mu) - &u.scale(1.0 / p.k);
    let r = &(&lin - &(&u_cw + &w_cu)) - &c_wu;
    r.add_constant(u_cw.mean() + w_cu.mean())
        .resized(n.max(u.order()))
}

/// Derivative of [`residual`] with respect to `μ`: `C(w')`.
pub fn residual_mu_derivative(state: &WaveState) -> SpectralFunction {
    hilbert_slope(state)
}

/// Mass flux and Bernoulli constant from
/// `(m / kh)² = [(Q - 2gv)((v')² + G(v)²)]`.
pub fn mass_flux_from_constraint(state: &WaveState) -> Result<(f64, f64)> {
    let p = &state.params;
    let v = state.elevation();
    let dv = v.derivative();
    let gv = v.apply_dtn(state.width())?;
    let speed2 = &dv.multiply(&dv) + &gv.multiply(&gv);
    let radicand = state.head_deficit().multiply(&speed2).mean();
    if radicand < 0.0 {
        return Err(Error::NonPhysicalState { radicand });
    }
    let m = p.width() * radicand.sqrt();
    Ok((m, bernoulli_constant(p, m)))
}

/// Pointwise residuals of Bernoulli's law and its derivative, maximised over samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernoulliCheck {
    /// `max |(Q - 2gv)((v')² + G(v)²) - gB|`.
    pub dtn_form: f64,
    /// `max |(Q - 2gv)|W|² - gB|`.
    pub tangent_form: f64,
    /// `max |w'|W|² - B Re{W'/W}|`.
    pub derivative_form: f64,
}

impl BernoulliCheck {
    pub fn max(&self) -> f64 {
        self.dtn_form.max(self.tangent_form)
    }
}

pub fn bernoulli_residual(state: &WaveState) -> Result<BernoulliCheck> {
    let p = &state.params;
    let m = product_grid(state.order().max(1));
    let v = state.elevation();
    let dv = v.derivative().to_samples(m)?;
    let gv = v.apply_dtn(state.width())?.to_samples(m)?;
    let head = state.head_deficit().to_samples(m)?;
    let tangent = state.tangent()?;
    let w = tangent.trace.samples(m)?;
    let dw = tangent.trace.derivative().samples(m)?;
    let gb = p.g * state.b;

    let mut check = BernoulliCheck {
        dtn_form: 0.0,
        tangent_form: 0.0,
        derivative_form: 0.0,
    };
    for j in 0..m {
        let q = head.values()[j];
        let s = dv.values()[j].powi(2) + gv.values()[j].powi(2);
        check.dtn_form = check.dtn_form.max((q * s - gb).abs());
        check.tangent_form = check.tangent_form.max((q * w[j].norm_sqr() - gb).abs());
        let lhs = dv.values()[j] * w[j].norm_sqr();
        let rhs = state.b * (dw[j] / w[j]).re;
        check.derivative_form = check.derivative_form.max((lhs - rhs).abs());
    }
    Ok(check)
}

/// `Λ = ∫ (Qv - gv²)(1/k + C(w')) + m²/(kh) dx`.
pub fn functional_lambda(state: &WaveState) -> f64 {
    let p = &state.params;
    let v = state.elevation();
    let potential = &v.scale(p.head()) - &v.multiply(&v).scale(p.g);
    let stretch = hilbert_slope(state).add_constant(1.0 / p.k);
    let integrand = potential.multiply(&stretch).mean() + state.m * state.m / p.width();
    2.0 * std::f64::consts::PI * integrand
}

/// Sampled free surface `(x/k + C(w), v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceProfile {
    pub points: Vec<(f64, f64)>,
    /// Smallest sampled `1/k + C(w')`.
    pub min_stretch: f64,
    /// Sampled abscissae strictly increase.
    pub monotone: bool,
}

impl SurfaceProfile {
    pub fn is_graph(&self) -> bool {
        self.min_stretch > 0.0
    }
}

/// `count` samples of the free surface over one period. `count` is rounded
/// up to an even grid that resolves `w`.
pub fn surface_points(state: &WaveState, count: usize) -> Result<SurfaceProfile> {
    let p = &state.params;
    let n = state.order();
    let m = count.max(2 * n + 2);
    let m = m + m % 2;
    let cw = state.w.apply_strip_hilbert(state.width())?.to_samples(m)?;
    let v = state.elevation().to_samples(m)?;
    let points: Vec<(f64, f64)> = crate::spectral::grid_points(m)
        .zip(cw.values().iter().zip(v.values()))
        .map(|(x, (c, y))| (x / p.k + c, *y))
        .collect();
    let monotone = points.windows(2).all(|w| w[1].0 > w[0].0);
    let min_stretch = state.tangent()?.min_real;
    Ok(SurfaceProfile {
        points,
        min_stretch,
        monotone,
    })
}

/// Physical mean depth `d = h + k[wC(w')]` and wave speed `c = m/h`.
pub fn mean_depth_and_speed(state: &WaveState) -> (f64, f64) {
    let p = &state.params;
    let d = p.h + p.k * state.w.multiply(&hilbert_slope(state)).mean();
    (d, state.m / p.h)
}

/// Symbol of the linearised operator in finite and infinite depth at mode `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymbolRow {
    pub n: i64,
    pub finite_depth: f64,
    pub infinite_depth: f64,
}

/// Rows `(n, n coth(nD), |n|)` for `n = -n_max..=n_max`; the finite-depth
/// value at `n = 0` is `1/D`.
pub fn symbol_compare(width: f64, n_max: usize) -> Result<Vec<SymbolRow>> {
    crate::spectral::check_width(width)?;
    let n_max = n_max as i64;
    Ok((-n_max..=n_max)
        .map(|n| {
            let a = n.unsigned_abs() as usize;
            let finite = if a == 0 {
                1.0 / width
            } else {
                a as f64 * crate::spectral::coth_mode(a, width)
            };
            SymbolRow {
                n,
                finite_depth: finite,
                infinite_depth: a as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::coth_safe;
    use rustfft::num_complex::Complex64;

    fn unit() -> WaveParameters {
        WaveParameters::default()
    }

    /// Coefficient of mode `n` in the product `fg`, by direct convolution.
    fn convolve(f: &SpectralFunction, g: &SpectralFunction, n: i64) -> Complex64 {
        let nf = f.order() as i64;
        (-nf..=nf).map(|k| f.coeff(k) * g.coeff(n - k)).sum()
    }

    /// The residual assembled entirely from coefficient convolutions.
    fn residual_by_convolution(state: &WaveState) -> SpectralFunction {
        let p = &state.params;
        let d = state.width();
        let n = state.order();
        let cw = state.w.derivative().apply_strip_hilbert(d).unwrap();
        let dw = state.w.derivative();
        let ww = SpectralFunction::new(
            (0..=2 * n as i64)
                .map(|j| convolve(&state.w, &dw, j))
                .collect(),
        );
        let c_ww = ww.apply_strip_hilbert(d).unwrap();
        let mean = convolve(&state.w, &cw, 0).re;
        SpectralFunction::new(
            (0..=n as i64)
                .map(|j| {
                    let lin = p.mu * cw.coeff(j) - state.w.coeff(j) / p.k;
                    let r = lin - convolve(&state.w, &cw, j) - c_ww.coeff(j);
                    if j == 0 {
                        r + mean
                    } else {
                        r
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn flat_surface_solves_the_equation() {
        let s = WaveState::trivial(unit().with_mu(0.3), 8).unwrap();
        assert_eq!(residual(&s).max_abs_coeff(), 0.0);
    }

    #[test]
    fn linearisation_annihilates_cosine_at_the_critical_parameter() {
        let eps = 1e-4;
        let s = WaveState::new(unit(), SpectralFunction::cosine(1, eps, 16)).unwrap();
        assert!(residual(&s).norm_l2() <= 1e-7);
    }

    #[test]
    fn residual_paths_agree() {
        let s = WaveState::with_flux(
            unit().with_mu(0.0),
            SpectralFunction::cosine(1, 1.0, 8),
            1.0,
        )
        .unwrap();
        assert!(residual(&s).max_coeff_diff(&residual_by_convolution(&s)) < 1e-12);
        let w = SpectralFunction::from_cos_sin(&[0.2, -0.1, 0.05], &[0.1, 0.0, 0.03], 6);
        let s = WaveState::with_flux(unit().with_mu(0.4), w, 1.0).unwrap();
        assert!(residual(&s).max_coeff_diff(&residual_by_convolution(&s)) < 1e-12);
    }

    #[test]
    fn residual_of_even_state_is_even() {
        let w = SpectralFunction::from_cos_sin(&[0.1, 0.02, -0.01], &[], 8);
        let s = WaveState::new(unit(), w).unwrap();
        let r = residual(&s);
        assert!((1..=8).all(|j| r.sin_coeff(j).abs() < 1e-13));
        assert!(r.mean().abs() < 1e-15);
    }

    #[test]
    fn jacobian_at_rest_is_the_linear_operator() {
        let s = WaveState::trivial(unit().with_mu(0.5), 6).unwrap();
        let u = SpectralFunction::from_cos_sin(&[1.0, 0.5], &[0.0, -0.3], 6);
        let expected = &u.apply_hilbert_derivative(1.0).unwrap().scale(0.5) - &u;
        assert!(residual_jacobian(&s, &u).max_coeff_diff(&expected) < 1e-15);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let w = SpectralFunction::from_cos_sin(&[0.1, -0.03, 0.02], &[0.05, 0.01], 8);
        let s = WaveState::with_flux(unit(), w.clone(), 1.0).unwrap();
        let u = SpectralFunction::from_cos_sin(&[0.3, 0.2, -0.4, 0.1], &[-0.2, 0.5], 8);
        let t = 1e-6;
        let plus = WaveState::with_flux(unit(), &w + &u.scale(t), 1.0).unwrap();
        let minus = WaveState::with_flux(unit(), &w - &u.scale(t), 1.0).unwrap();
        let fd = (&residual(&plus) - &residual(&minus)).scale(0.5 / t);
        assert!(residual_jacobian(&s, &u).max_coeff_diff(&fd) < 1e-7);
    }

    #[test]
    fn trivial_mass_flux() {
        let s = WaveState::trivial(unit(), 4).unwrap();
        assert!((s.m - 1f64.tanh().sqrt()).abs() < 1e-15);
        assert!((s.m - 0.87270).abs() < 1e-5);
        assert!((s.b - 1f64.tanh()).abs() < 1e-15);

        let heavy = WaveState::trivial(WaveParameters { g: 2.0, ..unit() }, 4).unwrap();
        assert!((heavy.m.powi(2) - 2.0 * s.m.powi(2)).abs() < 1e-14);
        // m = h sqrt(gμ) and B = μ/k² away from unit parameters.
        let p = WaveParameters::new(1.7, 0.4, 9.81, 0.2).unwrap();
        let s = WaveState::trivial(p, 4).unwrap();
        assert!((s.m - 0.4 * (9.81f64 * 0.2).sqrt()).abs() < 1e-14);
        assert!((s.b - 0.2 / 1.7f64.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn negative_radicand_is_rejected() {
        let p = unit().with_mu(-3.0);
        assert!(matches!(
            WaveState::trivial(p, 4),
            Err(Error::NonPhysicalState { .. })
        ));
    }

    #[test]
    fn bernoulli_at_rest() {
        let s = WaveState::trivial(unit(), 4).unwrap();
        let b = bernoulli_residual(&s).unwrap();
        assert!(b.max() < 1e-12 && b.derivative_form < 1e-12);
    }

    #[test]
    fn functional_at_rest() {
        let p = WaveParameters::new(0.8, 1.3, 2.0, 0.6).unwrap();
        let s = WaveState::trivial(p, 4).unwrap();
        let q = p.head();
        let expected = 2.0
            * std::f64::consts::PI
            * ((q * p.h - p.g * p.h * p.h) / p.k + s.m * s.m / (p.k * p.h));
        assert!((functional_lambda(&s) - expected).abs() < 1e-12);
    }

    #[test]
    fn first_variation_is_twice_g_times_residual() {
        let w = SpectralFunction::from_cos_sin(&[0.05, 0.01], &[], 8);
        let p = WaveParameters::new(1.0, 1.0, 2.0, 0.7).unwrap();
        let s = WaveState::new(p, w.clone()).unwrap();
        let u = SpectralFunction::from_cos_sin(&[0.2, -0.1, 0.3], &[0.4], 8);
        let t = 1e-5;
        let at = |x: SpectralFunction| functional_lambda(&WaveState::with_flux(p, x, s.m).unwrap());
        let fd = (at(&w + &u.scale(t)) - at(&w - &u.scale(t))) / (2.0 * t);
        let expected = 2.0 * p.g * residual(&s).inner_product(&u);
        assert!((fd - expected).abs() < 1e-8, "{fd} vs {expected}");
    }

    #[test]
    fn surface_profiles() {
        let s = WaveState::trivial(unit(), 4).unwrap();
        let prof = surface_points(&s, 16).unwrap();
        assert!(prof.points.iter().all(|&(_, y)| y == 1.0));
        assert!(prof.is_graph() && prof.monotone);

        let k = 2.0;
        let p = WaveParameters::new(k, 1.0, 1.0, (k * 1.0f64).tanh() / k).unwrap();
        let s = WaveState::new(p, SpectralFunction::cosine(1, 0.01, 8)).unwrap();
        let prof = surface_points(&s, 64).unwrap();
        let (x0, y0) = prof.points[0];
        assert!((y0 - 1.01).abs() < 1e-15);
        assert!((x0 - 0.0).abs() < 1e-15);
        // One period in x spans 2π/k in X.
        let (xm, _) = surface_points(&s, 64).unwrap().points[32];
        assert!((xm - std::f64::consts::PI / k).abs() < 1e-12);
        assert!(prof.is_graph() && prof.monotone);
    }

    #[test]
    fn mean_depth_of_small_cosine() {
        let eps = 0.01;
        let s = WaveState::new(unit(), SpectralFunction::cosine(1, eps, 8)).unwrap();
        let (d, c) = mean_depth_and_speed(&s);
        assert!((d - (1.0 + 0.5 * eps * eps * coth_safe(1.0).unwrap())).abs() < 1e-15);
        assert!((c - s.m).abs() < 1e-15);
        let (d, c) = mean_depth_and_speed(&WaveState::trivial(unit(), 2).unwrap());
        assert_eq!(d, 1.0);
        assert!((c - 1f64.tanh().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symbol_table() {
        let rows = symbol_compare(1.0, 40).unwrap();
        let zero = rows.iter().find(|r| r.n == 0).unwrap();
        assert_eq!((zero.finite_depth, zero.infinite_depth), (1.0, 0.0));
        let one = rows.iter().find(|r| r.n == 1).unwrap();
        assert!((one.finite_depth - 1.3130353).abs() < 1e-7);
        let last = rows.last().unwrap();
        assert!(last.finite_depth - last.infinite_depth < 1e-30);
        assert!(symbol_compare(0.0, 3).is_err());
    }

    #[test]
    fn state_json_layout() {
        let s = WaveState::new(unit(), SpectralFunction::cosine(1, 0.01, 2)).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        for key in ["k", "h", "g", "mu", "m", "B", "w"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: WaveState = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
