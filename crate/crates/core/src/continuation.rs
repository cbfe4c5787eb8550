//! Bifurcation points of the flat state and Newton continuation of the
//! nontrivial branches in the amplitude of the leading cosine mode.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{nan_max, product_grid, SpectralFunction};
use crate::wave::{
    bernoulli_residual, mean_depth_and_speed, residual, residual_jacobian, residual_mu_derivative,
    WaveParameters, WaveState,
};

/// Parameter value `tanh(nkh)/(nk)` at which mode `n` bifurcates from rest.
pub fn critical_mu(n: usize, k: f64, h: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "mode",
            value: 0.0,
        });
    }
    WaveParameters::new(k, h, 1.0, 0.0)?;
    let nk = n as f64 * k;
    Ok((nk * h).tanh() / nk)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Bound on the sampled sup norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 25,
        }
    }
}

/// A converged solution at amplitude `eps`, i.e. with `cos(nx)` coefficient `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub eps: f64,
    pub mu: f64,
    pub state: WaveState,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Smallest `Re W`; positive when the surface is a graph.
    pub min_graph: f64,
    /// Pointwise Bernoulli residual, an equation the solver never sees.
    pub bernoulli: f64,
    /// `μ/2 > max w`.
    pub crest_below_half_mu: bool,
}

impl BranchPoint {
    fn from_state(
        eps: f64,
        state: WaveState,
        residual_norm: f64,
        newton_iters: usize,
    ) -> Result<Self> {
        let min_graph = state.tangent()?.min_real;
        let bernoulli = bernoulli_residual(&state)?.max();
        let crest_below_half_mu = state.params.mu / 2.0 > state.max_elevation()?;
        Ok(Self {
            eps,
            mu: state.params.mu,
            state,
            residual_norm,
            newton_iters,
            min_graph,
            bernoulli,
            crest_below_half_mu,
        })
    }

    /// Deviation `d - h` of the physical from the conformal mean depth.
    pub fn depth_shift(&self) -> f64 {
        mean_depth_and_speed(&self.state).0 - self.state.params.h
    }
}

fn sup_norm(f: &SpectralFunction) -> Result<f64> {
    let s = f.to_samples(product_grid(f.order().max(1)))?;
    Ok(s.values().iter().map(|v| v.abs()).fold(0.0, nan_max))
}

fn cos_coeffs(f: &SpectralFunction, order: usize) -> DVector<f64> {
    DVector::from_iterator(order, (1..=order).map(|j| f.cos_coeff(j)))
}

/// Solves the governing equation in the even, mean-free subspace with the
/// `cos(mode·x)` coefficient pinned to `eps` and `μ` free.
///
/// At `eps = 0` the flat state is returned with `μ` from the bordered
/// system, which is the bifurcation value of the mode.
pub fn newton_solve(
    initial: &WaveState,
    mode: usize,
    eps: f64,
    settings: NewtonSettings,
) -> Result<BranchPoint> {
    let order = initial.order();
    if mode == 0 || mode > order {
        return Err(Error::InvalidParameter {
            name: "mode",
            value: mode as f64,
        });
    }
    if !eps.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
        });
    }
    let params = initial.params;
    if eps == 0.0 {
        let state = WaveState::trivial(params.with_mu(bordered_mu(&params, mode, order)), order)?;
        return BranchPoint::from_state(0.0, state, 0.0, 0);
    }

    let pinned = mode - 1;
    let mut a: Vec<f64> = (1..=order).map(|j| initial.w.cos_coeff(j)).collect();
    a[pinned] = eps;
    let mut mu = params.mu;
    let build = |a: &[f64], mu: f64| -> Result<WaveState> {
        WaveState::with_flux(
            params.with_mu(mu),
            SpectralFunction::from_cos_sin(a, &[], order),
            0.0,
        )
    };

    let mut state = build(&a, mu)?;
    let mut r = residual(&state);
    let mut norm = sup_norm(&r)?;
    let mut iters = 0;
    while norm.is_nan() || norm > settings.tol {
        if iters == settings.max_iter {
            return Err(Error::ContinuationFailure {
                eps,
                iterations: iters,
                residual: norm,
                last: Box::new(state),
            });
        }
        iters += 1;

        let mut jac = DMatrix::<f64>::zeros(order, order);
        for col in 0..order {
            let column = if col == pinned {
                residual_mu_derivative(&state)
            } else {
                residual_jacobian(&state, &SpectralFunction::cosine(col + 1, 1.0, order))
            };
            jac.set_column(col, &cos_coeffs(&column, order));
        }
        let rhs = -cos_coeffs(&r, order);
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularJacobian { eps })?;
        if step.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularJacobian { eps });
        }

        // Full step unless it fails to reduce the residual; then halve.
        let mut lambda = 1.0;
        loop {
            let mut trial_a = a.clone();
            for (j, s) in step.iter().enumerate() {
                if j != pinned {
                    trial_a[j] += lambda * s;
                }
            }
            let trial_mu = mu + lambda * step[pinned];
            let trial = build(&trial_a, trial_mu)?;
            let trial_r = residual(&trial);
            let trial_norm = sup_norm(&trial_r)?;
            if trial_norm < norm || lambda < 1.0 / 64.0 {
                a = trial_a;
                mu = trial_mu;
                state = trial;
                r = trial_r;
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
    }

    let state = WaveState::new(state.params, state.w)?;
    BranchPoint::from_state(eps, state, norm, iters)
}

/// `⟨u, u⟩ / (k ⟨C(u'), u⟩)` for `u = cos(mode·x)`: the value of `μ` that
/// makes the linearisation at rest singular along `u`.
fn bordered_mu(params: &WaveParameters, mode: usize, order: usize) -> f64 {
    let rest = WaveState::with_flux(params.with_mu(0.0), SpectralFunction::zeros(order), 0.0)
        .expect("validated parameters");
    let u = SpectralFunction::cosine(mode, 1.0, order);
    // At μ = 0 the linearisation is -u/k.
    let minus_u_over_k = residual_jacobian(&rest, &u);
    let cu = u
        .apply_hilbert_derivative(params.width())
        .expect("validated width");
    -minus_u_over_k.inner_product(&u) / cu.inner_product(&u)
}

/// Points on one branch, in increasing amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "BranchJson", try_from = "BranchJson")]
pub struct Branch {
    pub mode: usize,
    pub params: WaveParameters,
    pub points: Vec<BranchPoint>,
}

#[derive(Serialize, Deserialize)]
struct BranchJson {
    mode: usize,
    points: Vec<BranchPoint>,
}

impl From<Branch> for BranchJson {
    fn from(b: Branch) -> Self {
        Self {
            mode: b.mode,
            points: b.points,
        }
    }
}

impl TryFrom<BranchJson> for Branch {
    type Error = Error;
    fn try_from(j: BranchJson) -> Result<Self> {
        let first = j
            .points
            .first()
            .ok_or(Error::InsufficientPoints { needed: 1, got: 0 })?;
        let p = first.state.params;
        let params = p.with_mu(critical_mu(j.mode, p.k, p.h)?);
        Ok(Self {
            mode: j.mode,
            params,
            points: j.points,
        })
    }
}

/// Result of [`trace_branch`]: the points that converged, and the failure
/// that stopped the trace early, if any.
#[derive(Debug)]
pub struct BranchTrace {
    pub branch: Branch,
    pub failure: Option<Error>,
}

/// Solves at each amplitude in `eps`, seeding every solve from the previous one.
pub fn trace_amplitudes(
    mode: usize,
    eps: &[f64],
    base: WaveParameters,
    order: usize,
    settings: NewtonSettings,
) -> BranchTrace {
    let params = match critical_mu(mode, base.k, base.h) {
        Ok(mu) => base.with_mu(mu),
        Err(e) => return empty_trace(mode, base, e),
    };
    let mut seed = match WaveState::with_flux(params, SpectralFunction::zeros(order), 0.0) {
        Ok(s) => s,
        Err(e) => return empty_trace(mode, params, e),
    };
    let mut branch = Branch {
        mode,
        params,
        points: Vec::with_capacity(eps.len()),
    };
    for &e in eps {
        match newton_solve(&seed, mode, e, settings) {
            Ok(point) => {
                seed = point.state.clone();
                branch.points.push(point);
            }
            Err(err) => {
                return BranchTrace {
                    branch,
                    failure: Some(err),
                }
            }
        }
    }
    BranchTrace {
        branch,
        failure: None,
    }
}

fn empty_trace(mode: usize, params: WaveParameters, err: Error) -> BranchTrace {
    BranchTrace {
        branch: Branch {
            mode,
            params,
            points: Vec::new(),
        },
        failure: Some(err),
    }
}

/// The bifurcation point followed by `steps` points at `ε_j = j·eps_max/steps`.
pub fn trace_branch(
    mode: usize,
    eps_max: f64,
    steps: usize,
    base: WaveParameters,
    order: usize,
    settings: NewtonSettings,
) -> BranchTrace {
    let mut eps = vec![0.0];
    if eps_max != 0.0 && steps > 0 {
        eps.extend((1..=steps).map(|j| j as f64 * eps_max / steps as f64));
    }
    trace_amplitudes(mode, &eps, base, order, settings)
}

/// Asymptotic checks on a traced branch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchValidation {
    /// Fitted exponent of `‖w_ε - ε cos(nx)‖₂` against `ε`; `None` without nonzero amplitudes.
    pub profile_order: Option<f64>,
    /// Fitted exponent of `|μ(ε) - μ_n*|` against `ε`.
    pub mu_order: Option<f64>,
    /// `(μ(ε) - μ_n*)/ε²` at the smallest nonzero amplitude.
    pub mu_curvature: Option<f64>,
    pub max_residual: f64,
    pub max_bernoulli: f64,
    pub passed: bool,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn branch_validate(branch: &Branch) -> Result<BranchValidation> {
    if branch.points.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: branch.points.len(),
        });
    }
    let critical = critical_mu(branch.mode, branch.params.k, branch.params.h)?;
    let nonzero: Vec<&BranchPoint> = branch.points.iter().filter(|p| p.eps != 0.0).collect();
    let eps: Vec<f64> = nonzero.iter().map(|p| p.eps.abs()).collect();
    let profile: Vec<f64> = nonzero
        .iter()
        .map(|p| {
            let lead = SpectralFunction::cosine(branch.mode, p.eps, p.state.order());
            (&p.state.w - &lead).norm_l2()
        })
        .collect();
    let dmu: Vec<f64> = nonzero.iter().map(|p| (p.mu - critical).abs()).collect();
    let profile_order = log_log_slope(&eps, &profile);
    let mu_order = log_log_slope(&eps, &dmu);
    let mu_curvature = nonzero
        .iter()
        .min_by(|a, b| a.eps.abs().total_cmp(&b.eps.abs()))
        .map(|p| (p.mu - critical) / (p.eps * p.eps));
    let max_residual = branch
        .points
        .iter()
        .map(|p| p.residual_norm)
        .fold(0.0, nan_max);
    let max_bernoulli = branch.points.iter().map(|p| p.bernoulli).fold(0.0, nan_max);
    let passed = profile_order.is_none_or(|o| o >= 1.9);
    Ok(BranchValidation {
        profile_order,
        mu_order,
        mu_curvature,
        max_residual,
        max_bernoulli,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> WaveParameters {
        WaveParameters::default()
    }

    #[test]
    fn dispersion_values() {
        assert!((critical_mu(1, 1.0, 1.0).unwrap() - 0.7615942).abs() < 1e-7);
        assert!((critical_mu(2, 1.0, 1.0).unwrap() - 0.4820138).abs() < 1e-7);
        let mus: Vec<f64> = (1..=64)
            .map(|n| critical_mu(n, 1.0, 1.0).unwrap())
            .collect();
        assert!(mus.windows(2).all(|w| w[0] > w[1]) && mus[63] > 0.0);
        assert!(critical_mu(0, 1.0, 1.0).is_err());
        assert!(critical_mu(1, -1.0, 1.0).is_err());
    }

    #[test]
    fn zero_amplitude_returns_the_bifurcation_point() {
        let init = WaveState::trivial(unit().with_mu(0.3), 16).unwrap();
        for mode in [1, 2, 3] {
            let p = newton_solve(&init, mode, 0.0, NewtonSettings::default()).unwrap();
            assert!((p.mu - critical_mu(mode, 1.0, 1.0).unwrap()).abs() < 1e-15);
            assert_eq!(p.state.w.max_abs_coeff(), 0.0);
        }
    }

    #[test]
    fn small_amplitude_solve() {
        let eps = 1e-3;
        let init = WaveState::trivial(unit(), 32).unwrap();
        let p = newton_solve(&init, 1, eps, NewtonSettings::default()).unwrap();
        assert!(p.residual_norm <= 1e-12);
        assert!(p.newton_iters <= 5);
        assert_eq!(p.state.w.cos_coeff(1), eps);
        let dev = (&p.state.w - &SpectralFunction::cosine(1, eps, 32)).norm_l2();
        assert!(dev <= 5e-6);
        assert!((p.mu - 1f64.tanh()).abs() < 10.0 * eps * eps);
        assert!(p.state.w.is_even() && p.state.w.is_mean_free());
        assert!(p.bernoulli < 1e-10);
    }

    #[test]
    fn negative_amplitude_is_the_half_period_shift() {
        let init = WaveState::trivial(unit(), 32).unwrap();
        let plus = newton_solve(&init, 1, 0.01, NewtonSettings::default()).unwrap();
        let minus = newton_solve(&init, 1, -0.01, NewtonSettings::default()).unwrap();
        assert!((plus.mu - minus.mu).abs() < 1e-13);
        // Shifting by π flips odd harmonics.
        let shifted = plus
            .state
            .w
            .map_coeffs(|n, c| if n % 2 == 1 { -c } else { c });
        assert!(shifted.max_coeff_diff(&minus.state.w) < 1e-13);
    }

    #[test]
    fn short_branch() {
        let t = trace_branch(1, 0.02, 10, unit(), 32, NewtonSettings::default());
        assert!(t.failure.is_none());
        let b = t.branch;
        assert_eq!(b.points.len(), 11);
        assert!(b.points.windows(2).all(|w| w[1].eps > w[0].eps));
        for p in &b.points {
            assert!(p.residual_norm < 1e-12 && p.bernoulli < 1e-10);
            assert!(p.min_graph > 0.0 && p.crest_below_half_mu);
            for j in 2..=32 {
                assert!(p.state.w.cos_coeff(j).abs() <= 3.0 * p.eps * p.eps);
            }
        }
        let v = branch_validate(&b).unwrap();
        assert!(v.passed);
        let o = v.profile_order.unwrap();
        assert!((1.9..=2.5).contains(&o), "{o}");
    }

    #[test]
    fn validation_needs_points() {
        let t = trace_branch(1, 0.0, 10, unit(), 8, NewtonSettings::default());
        assert_eq!(t.branch.points.len(), 1);
        assert!(matches!(
            branch_validate(&t.branch),
            Err(Error::InsufficientPoints { .. })
        ));
        let t = trace_amplitudes(1, &[0.0, 0.0, 0.0], unit(), 8, NewtonSettings::default());
        let v = branch_validate(&t.branch).unwrap();
        assert!(v.passed && v.profile_order.is_none());
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let init = WaveState::trivial(unit(), 16).unwrap();
        let settings = NewtonSettings {
            tol: 1e-12,
            max_iter: 0,
        };
        match newton_solve(&init, 1, 0.01, settings) {
            Err(Error::ContinuationFailure {
                last, iterations, ..
            }) => {
                assert_eq!(iterations, 0);
                assert_eq!(last.w.cos_coeff(1), 0.01);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn branch_json_layout() {
        let t = trace_branch(1, 0.01, 2, unit(), 8, NewtonSettings::default());
        let v = serde_json::to_value(&t.branch).unwrap();
        assert_eq!(v["mode"], 1);
        assert_eq!(v["points"].as_array().unwrap().len(), 3);
        let back: Branch = serde_json::from_value(v).unwrap();
        assert_eq!(back, t.branch);
    }
}
