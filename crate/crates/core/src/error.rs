use thiserror::Error;

use crate::wave::WaveState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {grid} points cannot resolve truncation order {order} (need an even grid >= {needed})")]
    GridTooSmall {
        grid: usize,
        order: usize,
        needed: usize,
    },

    #[error("imaginary residue {residue:e} after synthesis exceeds tolerance")]
    ImaginaryResidue { residue: f64 },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("function must be mean-free, mean is {mean:e}")]
    NotMeanFree { mean: f64 },

    #[error("point ({x}, {y}) lies outside the closed strip of width {width}")]
    OutsideStrip { x: f64, y: f64, width: f64 },

    #[error("graph condition violated: min Re W = {min_real:e}")]
    GraphConditionViolated { min_real: f64 },

    #[error("Plotnikov transform is singular for this W: {0}")]
    SingularTransform(&'static str),

    #[error("non-physical state: constraint radicand {radicand:e} is negative")]
    NonPhysicalState { radicand: f64 },

    #[error("Newton corrector failed at eps = {eps}: residual {residual:e} after {iterations} iterations")]
    ContinuationFailure {
        eps: f64,
        iterations: usize,
        residual: f64,
        last: Box<WaveState>,
    },

    #[error("Jacobian is singular at eps = {eps}")]
    SingularJacobian { eps: f64 },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix is not symmetric: max |A - A^T| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("parameters are off the first bifurcation point: mu = {mu}, mu_1* = {critical}")]
    OffBifurcationPoint { mu: f64, critical: f64 },

    #[error("quadratic form denominator degenerate after {attempts} resamples")]
    DegenerateDenominator { attempts: usize },
}
