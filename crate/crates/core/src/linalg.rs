//! Dense symmetric matrices of operators on mean-free trigonometric
//! polynomials, and a cyclic Jacobi eigensolver.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{nan_max, SpectralFunction};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-12;

/// A real symmetric operator in the orthonormal basis
/// `{cos x, sin x, cos 2x, sin 2x, …}/√π` of mean-free functions of order `N`.
///
/// Eigenvalues are those of the operator itself; the quadratic form of an
/// unnormalised `u` is `π cᵀAc`, `c` being its cosine/sine coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    order: usize,
    entries: Vec<f64>,
}

/// Basis index of `cos(jx)` (`j ≥ 1`).
pub fn cos_index(j: usize) -> usize {
    2 * (j - 1)
}

/// Basis index of `sin(jx)` (`j ≥ 1`).
pub fn sin_index(j: usize) -> usize {
    2 * (j - 1) + 1
}

/// Basis function `index` at truncation `order`, unnormalised.
pub fn basis_function(index: usize, order: usize) -> SpectralFunction {
    let j = index / 2 + 1;
    if index.is_multiple_of(2) {
        SpectralFunction::cosine(j, 1.0, order)
    } else {
        SpectralFunction::sine(j, 1.0, order)
    }
}

/// Cosine/sine coefficients of a mean-free function in basis order.
pub fn basis_coefficients(f: &SpectralFunction, order: usize) -> Vec<f64> {
    (1..=order)
        .flat_map(|j| [f.cos_coeff(j), f.sin_coeff(j)])
        .collect()
}

/// Inverse of [`basis_coefficients`].
pub fn from_basis_coefficients(c: &[f64], order: usize) -> SpectralFunction {
    let cos: Vec<f64> = c.iter().step_by(2).copied().collect();
    let sin: Vec<f64> = c.iter().skip(1).step_by(2).copied().collect();
    SpectralFunction::from_cos_sin(&cos, &sin, order)
}

impl OperatorMatrix {
    /// Checks symmetry to `1e-10` in the max norm, then symmetrises.
    pub fn new(order: usize, mut entries: Vec<f64>) -> Result<Self> {
        let n = 2 * order;
        assert_eq!(entries.len(), n * n, "entries must be (2N)² long");
        let scale = max_abs(&entries).max(1.0);
        let mut asymmetry: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                asymmetry = asymmetry.max((a - b).abs());
                let mid = 0.5 * (a + b);
                entries[i * n + j] = mid;
                entries[j * n + i] = mid;
            }
        }
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(Self { order, entries })
    }

    /// Matrix of a linear operator given by its action on basis functions.
    pub fn from_operator(
        order: usize,
        op: impl Fn(&SpectralFunction) -> SpectralFunction,
    ) -> Result<Self> {
        let n = 2 * order;
        let mut entries = vec![0.0; n * n];
        for col in 0..n {
            let image = op(&basis_function(col, order));
            for (row, v) in basis_coefficients(&image, order).into_iter().enumerate() {
                entries[row * n + col] = v;
            }
        }
        Self::new(order, entries)
    }

    pub fn from_diagonal(order: usize, diag: &[f64]) -> Self {
        let n = 2 * order;
        assert_eq!(diag.len(), n);
        let mut entries = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = *d;
        }
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        2 * self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        self.entries
            .chunks(n.max(1))
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, nan_max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        self.entries
            .chunks(n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `∫ u L u dx` for a mean-free `u`.
    pub fn quadratic_form(&self, u: &SpectralFunction) -> f64 {
        let c = basis_coefficients(u, self.order);
        let ac = self.mul_vec(&c);
        PI * c.iter().zip(&ac).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Largest entry coupling a cosine to a sine.
    pub fn parity_coupling(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i % 2 != j % 2 {
                    worst = worst.max(self.get(i, j).abs());
                }
            }
        }
        worst
    }

    /// Default tolerance for counting zero eigenvalues.
    pub fn zero_tolerance(&self) -> f64 {
        1e-9 * self.norm_inf().max(1.0)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, nan_max)
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `1e-12 ‖A‖_F`.
pub fn symmetric_eigen(matrix: &OperatorMatrix) -> Result<SymmetricEigen> {
    let n = matrix.dim();
    let mut a = matrix.entries.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let skip = 1e-20 * frob;

    let mut sweeps = 0;
    let mut off = off_norm(&a);
    let mut polished = false;
    // One extra sweep after meeting the tolerance; convergence is quadratic.
    while off > 0.0 && sweeps < MAX_SWEEPS && (off > OFF_TOL * frob || !polished) {
        polished = off <= OFF_TOL * frob;
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[k * n + p] = np;
                    a[p * n + k] = np;
                    a[k * n + q] = nq;
                    a[q * n + k] = nq;
                }
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        off = off_norm(&a);
    }
    if off > OFF_TOL * frob {
        return Err(Error::EigenNoConvergence {
            sweeps,
            off_norm: off,
        });
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    Ok(SymmetricEigen {
        values: idx.iter().map(|&i| a[i * n + i]).collect(),
        vectors: idx
            .iter()
            .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
            .collect(),
        sweeps,
    })
}
