//! Second variation of the functional, its transformed form, and the
//! small-amplitude eigenvalue prediction along the first branch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::continuation::{critical_mu, Branch};
use crate::error::{Error, Result};
use crate::linalg::{cos_index, sin_index, symmetric_eigen, OperatorMatrix, SymmetricEigen};
use crate::spectral::{coth_safe, nan_max, product_grid, SampledFunction, SpectralFunction};
use crate::strip::plotnikov_transform;
use crate::wave::{mass_flux_from_constraint, WaveParameters, WaveState};

/// `Φ = Im{W'/W} + |W|²/B · Re W`, resolved to twice the order of `w` so
/// that products with order-`N` functions are exact.
pub fn plotnikov_potential(state: &WaveState) -> Result<SpectralFunction> {
    let tangent = state.tangent()?;
    if !tangent.is_graph() {
        return Err(Error::GraphConditionViolated {
            min_real: tangent.min_real,
        });
    }
    if state.b.is_nan() || state.b <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "B",
            value: state.b,
        });
    }
    let order = 2 * state.order();
    let m = product_grid(order.max(1));
    let w = tangent.trace.samples(m)?;
    let dw = tangent.trace.derivative().samples(m)?;
    let values = w
        .iter()
        .zip(&dw)
        .map(|(z, dz)| (dz / z).im + z.norm_sqr() * z.re / state.b)
        .collect();
    SpectralFunction::from_samples(&SampledFunction::new(values)?, order)
}

/// Matrix of the second variation
/// `u ↦ 2∫ (Q - 2gv) u C(u') - g (1/k + C(w')) u² dx`.
pub fn assemble_direct_form(state: &WaveState) -> Result<OperatorMatrix> {
    let n = state.order();
    let d = state.width();
    let f = state.head_deficit();
    let a = state
        .w
        .apply_hilbert_derivative(d)?
        .add_constant(1.0 / state.params.k);
    let g2 = 2.0 * state.params.g;
    OperatorMatrix::from_operator(n, |z| {
        let fz = f
            .multiply(z)
            .apply_hilbert_derivative(d)
            .expect("validated width");
        let f_cz = f.multiply(&z.apply_hilbert_derivative(d).expect("validated width"));
        &(&fz + &f_cz) - &a.multiply(z).scale(g2)
    })
}

/// The second variation evaluated directly on a function of any order.
pub fn direct_quadratic_form(state: &WaveState, q: &SpectralFunction) -> Result<f64> {
    let d = state.width();
    let f = state.head_deficit();
    let a = state
        .w
        .apply_hilbert_derivative(d)?
        .add_constant(1.0 / state.params.k);
    let cq = q.apply_hilbert_derivative(d)?;
    let integrand = &f.multiply(q).multiply(&cq) - &a.multiply(q).multiply(q).scale(state.params.g);
    Ok(4.0 * std::f64::consts::PI * integrand.mean())
}

/// Matrix of `L u = C(u') - Φu + [Φu]`.
pub fn assemble_transformed_operator(state: &WaveState) -> Result<OperatorMatrix> {
    let phi = plotnikov_potential(state)?;
    transformed_operator_with(state.order(), state.width(), &phi)
}

fn transformed_operator_with(
    order: usize,
    width: f64,
    phi: &SpectralFunction,
) -> Result<OperatorMatrix> {
    OperatorMatrix::from_operator(order, |u| {
        let cu = u.apply_hilbert_derivative(width).expect("validated width");
        &cu - &phi.multiply(u).without_mean()
    })
}

/// `2B ∫ u C(u') - Φu² dx`.
pub fn transformed_quadratic_form(
    state: &WaveState,
    phi: &SpectralFunction,
    u: &SpectralFunction,
) -> Result<f64> {
    let cu = u.apply_hilbert_derivative(state.width())?;
    let integrand = &u.multiply(&cu) - &phi.multiply(u).multiply(u);
    Ok(4.0 * std::f64::consts::PI * state.b * integrand.mean())
}

/// Ratio of the second variation at `P[u]` to the transformed form at `u`
/// over random `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormEquivalence {
    pub ratio: f64,
    /// `(max - min) / |mean|` of the sampled ratios.
    pub spread: f64,
    pub trials: usize,
}

/// Highest mode of the random directions.
const RANDOM_MODES: usize = 12;
const MAX_RESAMPLES: usize = 16;

/// Random mean-free function with uniform cosine/sine coefficients in `[-1, 1]`.
pub fn random_mean_free(rng: &mut impl Rng, modes: usize, order: usize) -> SpectralFunction {
    let cos: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let sin: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..=1.0)).collect();
    SpectralFunction::from_cos_sin(&cos, &sin, order.max(modes))
}

pub fn form_equivalence_check(
    state: &WaveState,
    trials: usize,
    seed: u64,
) -> Result<FormEquivalence> {
    let tangent = state.tangent()?;
    let phi = plotnikov_potential(state)?;
    let modes = RANDOM_MODES.min(state.order().max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut attempts = 0;
        let ratio = loop {
            let u = random_mean_free(&mut rng, modes, modes);
            let den = transformed_quadratic_form(state, &phi, &u)?;
            if den.abs() >= 1e-14 {
                let q = plotnikov_transform(&u, &tangent)?;
                break direct_quadratic_form(state, &q)? / den;
            }
            attempts += 1;
            if attempts == MAX_RESAMPLES {
                return Err(Error::DegenerateDenominator { attempts });
            }
        };
        ratios.push(ratio);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FormEquivalence {
        ratio: mean,
        spread: if ratios.is_empty() {
            0.0
        } else {
            (max - min) / mean.abs()
        },
        trials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// Every eigenvalue is positive.
    Stable,
    /// No negative eigenvalue, at least one zero.
    Neutral,
    /// At least one negative eigenvalue.
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub eigenvalues: Vec<f64>,
    pub zero_tol: f64,
    pub n_negative: usize,
    pub n_zero: usize,
    pub lambda_min: f64,
    pub prediction: Option<f64>,
    pub classification: Classification,
}

impl StabilityReport {
    /// Counts eigenvalues below `-zero_tol` and within `zero_tol` of zero.
    pub fn new(mut eigenvalues: Vec<f64>, zero_tol: f64, prediction: Option<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let n_negative = eigenvalues.iter().filter(|&&l| l < -zero_tol).count();
        let n_zero = eigenvalues.iter().filter(|&&l| l.abs() <= zero_tol).count();
        let classification = if n_negative > 0 {
            Classification::Unstable
        } else if n_zero > 0 {
            Classification::Neutral
        } else {
            Classification::Stable
        };
        Self {
            lambda_min: eigenvalues.first().copied().unwrap_or(f64::NAN),
            eigenvalues,
            zero_tol,
            n_negative,
            n_zero,
            prediction,
            classification,
        }
    }

    pub fn from_matrix(
        matrix: &OperatorMatrix,
        prediction: Option<f64>,
    ) -> Result<(Self, SymmetricEigen)> {
        let eig = symmetric_eigen(matrix)?;
        Ok((
            Self::new(eig.values.clone(), matrix.zero_tolerance(), prediction),
            eig,
        ))
    }
}

/// Closed-form spectrum of the second variation at rest:
/// `2g(μ n coth(nkh) - 1/k)`, twice for each `n = 1..=order`.
pub fn trivial_spectrum(params: &WaveParameters, order: usize) -> Result<StabilityReport> {
    params.validate()?;
    let d = params.width();
    let mut values = Vec::with_capacity(2 * order);
    for n in 1..=order {
        let l = 2.0 * params.g * (params.mu * n as f64 * coth_safe(n as f64 * d)? - 1.0 / params.k);
        values.extend([l, l]);
    }
    // Same tolerance the assembled matrix would use: its max row sum is the largest |λ|.
    let norm = values.iter().map(|l| l.abs()).fold(0.0, nan_max);
    Ok(StabilityReport::new(values, 1e-9 * norm.max(1.0), None))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    /// Stable under variations of both `w` and `h`.
    Both,
    /// Stable under variations of `w` with `h` fixed only.
    WOnly,
    None,
}

impl RegionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Both => "both",
            Self::WOnly => "w_only",
            Self::None => "none",
        }
    }
}

/// Second variation at rest including the depth direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrivialVariation {
    pub m: f64,
    /// Coefficient `2π·2(m²/(kh³) - g/k)` of `ν²` for a depth variation `ν`.
    pub h_coefficient: f64,
    /// All `w`-directions positive: `μ > tanh(kh)/k`.
    pub cond_w: bool,
    /// Depth direction positive: `m² > gh³`.
    pub cond_h: bool,
    pub class: RegionClass,
}

/// Relative distance from a stability boundary below which a point counts as on it.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

pub fn trivial_full_variation(params: &WaveParameters) -> Result<TrivialVariation> {
    let state = WaveState::trivial(*params, 1)?;
    let (m, _) = mass_flux_from_constraint(&state)?;
    let p = params;
    let h_coefficient = 4.0 * std::f64::consts::PI * (m * m / (p.k * p.h.powi(3)) - p.g / p.k);
    // Both conditions are strict; rounding must not lift a boundary point into the stable set.
    let margin = 1.0 + BOUNDARY_MARGIN;
    // The n = 1 pair is the smallest: n coth(nD) increases with n.
    let cond_w = p.k * p.mu * coth_safe(p.width())? > margin;
    let cond_h = m * m > margin * p.g * p.h.powi(3);
    let class = match (cond_w, cond_h) {
        (true, true) => RegionClass::Both,
        (true, false) => RegionClass::WOnly,
        _ => RegionClass::None,
    };
    Ok(TrivialVariation {
        m,
        h_coefficient,
        cond_w,
        cond_h,
        class,
    })
}

/// Degenerate perturbation theory for the double zero eigenvalue of the
/// transformed operator at the first bifurcation point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationPrediction {
    /// First-harmonic coefficient of the potential per unit amplitude,
    /// `3coth(kh)/(Bk²) - k`.
    pub c1: f64,
    /// Second-order eigenvalue coefficient for an L²-normalised kernel vector.
    pub lambda2_unit: f64,
    /// Coefficient of `cos 2x` in the first-order eigenvector correction per
    /// unit of `cos x` and unit rescaled amplitude.
    pub u1_coefficient: f64,
}

impl PerturbationPrediction {
    /// `λ(ε) ≈ lambda2_unit · (c1 ε)²`.
    pub fn predict(&self, eps: f64) -> f64 {
        self.lambda2_unit * (self.c1 * eps).powi(2)
    }

    /// Ratio of the second-harmonic to the first-harmonic component of the
    /// lowest eigenvector at amplitude `eps`. The operator is
    /// `L₀ - c1 ε L₁`, hence the sign.
    pub fn second_harmonic_ratio(&self, eps: f64) -> f64 {
        -self.c1 * eps * self.u1_coefficient
    }
}

pub fn perturbation_prediction(params: &WaveParameters) -> Result<PerturbationPrediction> {
    params.validate()?;
    let critical = critical_mu(1, params.k, params.h)?;
    if (params.mu - critical).abs() > 1e-12 * critical.max(1.0) {
        return Err(Error::OffBifurcationPoint {
            mu: params.mu,
            critical,
        });
    }
    let (k, d) = (params.k, params.width());
    let b = params.mu / (k * k);
    let c1 = 3.0 * coth_safe(d)? / (b * k * k) - k;
    let gap = 2.0 * coth_safe(2.0 * d)? - 1.0 / (b * k.powi(3));
    Ok(PerturbationPrediction {
        c1,
        lambda2_unit: -1.0 / (4.0 * gap),
        u1_coefficient: -0.5 / gap,
    })
}

/// Shape of the lowest eigenvector in the orthonormal trigonometric basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenvectorShape {
    /// Norm of the `{cos x, sin x}` component of the unit eigenvector.
    pub leading_projection: f64,
    /// `(cos 2x, sin 2x)` components.
    pub correction: (f64, f64),
    /// Predicted `(cos 2x, sin 2x)` components.
    pub predicted: (f64, f64),
    /// Angle between measured and predicted corrections in degrees.
    pub angle_deg: f64,
}

pub fn eigenvector_shape(
    vector: &[f64],
    prediction: &PerturbationPrediction,
    eps: f64,
) -> EigenvectorShape {
    let at = |i: usize| vector.get(i).copied().unwrap_or(0.0);
    let (c1, s1) = (at(cos_index(1)), at(sin_index(1)));
    let correction = (at(cos_index(2)), at(sin_index(2)));
    let r = prediction.second_harmonic_ratio(eps);
    let predicted = (r * c1, r * s1);
    let dot = correction.0 * predicted.0 + correction.1 * predicted.1;
    let norms = correction.0.hypot(correction.1) * predicted.0.hypot(predicted.1);
    let angle_deg = if norms > 0.0 {
        (dot / norms).clamp(-1.0, 1.0).acos().to_degrees()
    } else {
        f64::NAN
    };
    EigenvectorShape {
        leading_projection: c1.hypot(s1),
        correction,
        predicted,
        angle_deg,
    }
}

/// Spectral data at one branch point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchSpectrum {
    pub eps: f64,
    pub transformed: StabilityReport,
    pub direct_lambda_min: f64,
    pub direct_n_negative: usize,
    /// `|λ_min - prediction| / |prediction|`; `None` at zero amplitude.
    pub rel_err: Option<f64>,
    pub shape: EigenvectorShape,
}

pub fn spectrum_along_branch(branch: &Branch) -> Result<Vec<BranchSpectrum>> {
    let base = branch
        .params
        .with_mu(critical_mu(1, branch.params.k, branch.params.h)?);
    let prediction = perturbation_prediction(&base)?;
    branch
        .points
        .iter()
        .map(|p| {
            let predicted = prediction.predict(p.eps);
            let (report, eig) = StabilityReport::from_matrix(
                &assemble_transformed_operator(&p.state)?,
                Some(predicted),
            )?;
            let (direct, _) = StabilityReport::from_matrix(&assemble_direct_form(&p.state)?, None)?;
            let rel_err =
                (p.eps != 0.0).then(|| (report.lambda_min - predicted).abs() / predicted.abs());
            let shape = eigenvector_shape(&eig.vectors[0], &prediction, p.eps);
            Ok(BranchSpectrum {
                eps: p.eps,
                transformed: report,
                direct_lambda_min: direct.lambda_min,
                direct_n_negative: direct.n_negative,
                rel_err,
                shape,
            })
        })
        .collect()
}
