//! Deterministic property suites over the operator identities, the
//! linearisation and the two forms of the second variation.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::continuation::{newton_solve, NewtonSettings};
use crate::error::Result;
use crate::spectral::SpectralFunction;
use crate::stability::{form_equivalence_check, random_mean_free};
use crate::strip::{
    check_product_identity_with, contour_pairing_check, derivative_trace_defect,
    transform_trace_defect,
};
use crate::wave::{residual, residual_jacobian, WaveParameters, WaveState};

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Strip widths exercised by the identity suites.
const WIDTHS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub order: usize,
    pub params: WaveParameters,
    /// Amplitude of the branch state used by the transform suites.
    pub eps: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            order: 128,
            params: WaveParameters::default(),
            eps: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    /// Worst observed value of the suite's error measure.
    pub metric: f64,
    pub tol: f64,
    pub cases: usize,
    pub passed: bool,
}

impl SuiteResult {
    fn new(name: &'static str, metric: f64, tol: f64, cases: usize) -> Self {
        Self {
            name,
            metric,
            tol,
            cases,
            passed: metric < tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub order: usize,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    /// Plain-text pass/fail matrix. Contains no timings, so equal inputs
    /// give byte-identical output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# verify seed=0x{:X} n_trunc={}",
            self.seed, self.order
        );
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>12} {:>10}  result",
            "suite", "cases", "max_error", "tol"
        );
        for s in &self.suites {
            let _ = writeln!(
                out,
                "{:<22} {:>6} {:>12.3e} {:>10.1e}  {}",
                s.name,
                s.cases,
                s.metric,
                s.tol,
                if s.passed { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "overall {}",
            if self.all_passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

/// `G_D(f) = [f]/D + C_D(f')`, coefficientwise.
pub fn dtn_relation_suite(rng: &mut impl Rng, trials: usize, order: usize) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = random_mean_free(rng, order, order).add_constant(rng.random_range(-1.0..=1.0));
        for d in WIDTHS {
            let lhs = f.apply_dtn(d)?;
            let rhs = f
                .derivative()
                .apply_strip_hilbert(d)?
                .add_constant(f.mean() / d);
            worst = worst.max(lhs.max_coeff_diff(&rhs));
        }
    }
    Ok(SuiteResult::new(
        "dtn_relation",
        worst,
        1e-13,
        trials * WIDTHS.len(),
    ))
}

/// Product identity of the strip Hilbert transform, modulo the mean, for
/// any candidate `hilbert(f, D)`.
pub fn product_identity_suite(
    rng: &mut impl Rng,
    pairs: usize,
    order: usize,
    hilbert: impl Fn(&SpectralFunction, f64) -> SpectralFunction,
) -> SuiteResult {
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let d = WIDTHS[i % WIDTHS.len()];
        let u = random_mean_free(rng, order, order);
        let v = random_mean_free(rng, order, order);
        worst = worst.max(check_product_identity_with(&u, &v, |f| hilbert(f, d)));
    }
    SuiteResult::new("product_identity", worst, 1e-10, pairs)
}

/// Boundary pairing and contour residuals for extensions of random functions.
pub fn pairing_suite(rng: &mut impl Rng, trials: usize) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    for i in 0..trials {
        let d = WIDTHS[i % WIDTHS.len()];
        let u = random_mean_free(rng, 8, 8);
        let v = random_mean_free(rng, 8, 8);
        let r = contour_pairing_check(&u, &v, d, 512)?;
        worst = worst.max(r.pairing).max(r.contour);
    }
    Ok(SuiteResult::new("pairing_contour", worst, 1e-8, trials))
}

fn branch_state(config: &VerifyConfig) -> Result<WaveState> {
    let params = config.params.with_mu(crate::continuation::critical_mu(
        1,
        config.params.k,
        config.params.h,
    )?);
    let init = WaveState::trivial(params, config.order)?;
    Ok(newton_solve(&init, 1, config.eps, NewtonSettings::default())?.state)
}

/// Non-constant modes of the transform identities on a branch state.
pub fn transform_trace_suites(
    rng: &mut impl Rng,
    state: &WaveState,
    trials: usize,
) -> Result<[SuiteResult; 2]> {
    let tangent = state.tangent()?;
    let modes = 16.min(state.order());
    let (mut forward, mut derivative): (f64, f64) = (0.0, 0.0);
    for _ in 0..trials {
        let u = random_mean_free(rng, modes, modes);
        forward = forward.max(transform_trace_defect(&u, &tangent)?.max_nonconstant);
        derivative = derivative.max(derivative_trace_defect(&u, &tangent)?.max_nonconstant);
    }
    Ok([
        SuiteResult::new("transform_trace", forward, 1e-9, trials),
        SuiteResult::new("derivative_trace", derivative, 1e-9, trials),
    ])
}

/// Proportionality of the two second-variation forms, on a branch state
/// and with constant exactly `g` at rest.
pub fn form_equivalence_suites(
    seed: u64,
    state: &WaveState,
    trials: usize,
) -> Result<[SuiteResult; 2]> {
    let branch = form_equivalence_check(state, trials, seed)?;
    let rest = WaveState::trivial(state.params, state.order())?;
    let at_rest = form_equivalence_check(&rest, trials, seed)?;
    let g_err = (at_rest.ratio - state.params.g).abs().max(at_rest.spread);
    Ok([
        SuiteResult::new("form_equivalence", branch.spread, 1e-6, trials),
        SuiteResult::new("form_ratio_at_rest", g_err, 1e-10, trials),
    ])
}

/// Central differences of the residual against its linearisation.
pub fn jacobian_suite(
    rng: &mut impl Rng,
    trials: usize,
    order: usize,
    base: WaveParameters,
) -> Result<SuiteResult> {
    let t = 1e-6;
    let modes = 8.min(order);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let w = random_mean_free(rng, modes, order).scale(0.05);
        let u = random_mean_free(rng, modes, order);
        let params = base.with_mu(rng.random_range(0.3..=1.0));
        let state = WaveState::with_flux(params, w.clone(), 1.0)?;
        let plus = WaveState::with_flux(params, &w + &u.scale(t), 1.0)?;
        let minus = WaveState::with_flux(params, &w - &u.scale(t), 1.0)?;
        let fd = (&residual(&plus) - &residual(&minus)).scale(0.5 / t);
        worst = worst.max(residual_jacobian(&state, &u).max_coeff_diff(&fd));
    }
    Ok(SuiteResult::new("jacobian_fd", worst, 1e-7, trials))
}

/// Residual of the flat state over random parameters; zero by construction.
pub fn trivial_residual_suite(
    rng: &mut impl Rng,
    trials: usize,
    order: usize,
) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let p = WaveParameters::new(
            rng.random_range(0.2..=3.0),
            rng.random_range(0.1..=3.0),
            rng.random_range(0.5..=10.0),
            rng.random_range(-2.0..=2.0),
        )?;
        let s = WaveState::with_flux(p, SpectralFunction::zeros(order), 0.0)?;
        worst = worst.max(residual(&s).max_abs_coeff());
    }
    Ok(SuiteResult::new("trivial_residual", worst, 1e-14, trials))
}

pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    config.params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let state = branch_state(config)?;
    let mut suites = vec![
        trivial_residual_suite(&mut rng, 20, config.order)?,
        dtn_relation_suite(&mut rng, 20, config.order)?,
        product_identity_suite(&mut rng, 100, 32, |f, d| {
            f.apply_strip_hilbert(d).expect("positive width")
        }),
        pairing_suite(&mut rng, 6)?,
    ];
    suites.extend(transform_trace_suites(&mut rng, &state, 10)?);
    suites.push(jacobian_suite(&mut rng, 20, config.order, config.params)?);
    suites.extend(form_equivalence_suites(config.seed, &state, 100)?);
    Ok(VerifyReport {
        seed: config.seed,
        order: config.order,
        suites,
    })
}
