//! Spectral solver and variational stability analysis for periodic
//! irrotational gravity waves on water of finite depth.
//!
//! The surface is described in conformal variables by a mean-free, even
//! elevation `w` over a strip of width `kh`. [`continuation`] traces the
//! branches bifurcating from rest, and [`stability`] computes the second
//! variation along them, directly and after the Plotnikov change of variables.

pub mod continuation;
pub mod error;
pub mod linalg;
pub mod spectral;
pub mod stability;
pub mod strip;
pub mod verify;
pub mod wave;

pub use rustfft::num_complex::Complex64;

pub use continuation::{Branch, BranchPoint, NewtonSettings};
pub use error::{Error, Result};
pub use linalg::OperatorMatrix;
pub use spectral::{coth_safe, SampledFunction, SpectralFunction};
pub use stability::{Classification, StabilityReport};
pub use strip::{ComplexBoundaryFunction, StripPoint, SurfaceTangent};
pub use wave::{WaveParameters, WaveState};
