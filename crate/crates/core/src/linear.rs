//! ZF and MMSE baselines on the real-valued system, plus analytic
//! operation-count models for the MMSE (Cholesky) and QUBO front ends.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RealSystem;

/// Lower-triangular Cholesky factor `L` with `A = L L'`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::InvalidDimensions(format!(
                "Cholesky needs a square matrix, got {:?}",
                a.shape()
            )));
        }
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d.is_nan() || d <= 0.0 || d.is_infinite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solve `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.l.nrows();
        let l = &self.l;
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        z
    }
}

fn regularized_solve(system: &RealSystem, ridge: f64) -> Result<DVector<f64>> {
    let ht = system.h.transpose();
    let mut gram = &ht * &system.h;
    if ridge != 0.0 {
        for i in 0..gram.nrows() {
            gram[(i, i)] += ridge;
        }
    }
    let rhs = &ht * &system.y;
    Ok(Cholesky::factor(&gram)?.solve(&rhs))
}

/// Zero-forcing estimate: solves `H'H x = H'y`.
pub fn zf_detect(system: &RealSystem) -> Result<DVector<f64>> {
    regularized_solve(system, 0.0)
}

/// MMSE estimate: solves `(H'H + sigma_z^2 / 2 I) x = H'y`. `sigma_z_sq` is
/// the complex noise variance; each real dimension carries half of it.
pub fn mmse_detect(system: &RealSystem, sigma_z_sq: f64) -> Result<DVector<f64>> {
    if sigma_z_sq.is_nan() || sigma_z_sq < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be non-negative, got {sigma_z_sq}"
        )));
    }
    regularized_solve(system, sigma_z_sq / 2.0)
}

/// Arithmetic operation counts. Components are fractional because the
/// closed forms contain terms such as `5/3 k^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationCounts {
    pub multiplications: f64,
    pub additions: f64,
    pub square_roots: f64,
    pub divisions: f64,
}

impl OperationCounts {
    /// Unweighted sum of all four operation kinds.
    pub fn total(&self) -> f64 {
        self.multiplications + self.additions + self.square_roots + self.divisions
    }
}

/// MMSE with Cholesky decomposition; `m = 2M`, `k = 2K`.
pub fn op_count_mmse(m: usize, k: usize) -> OperationCounts {
    let (m, k) = (m as f64, k as f64);
    OperationCounts {
        multiplications: 2.0 * m * k * k + 5.0 / 3.0 * k.powi(3),
        additions: 4.0 / 3.0 * k.powi(3) + (2.0 * m - 3.0) * k * k,
        square_roots: k,
        divisions: k * (k - 1.0) / 2.0,
    }
}

/// QUBO matrix construction; `m = 2M`, `k = 2K`.
pub fn op_count_qubo(m: usize, k: usize) -> OperationCounts {
    let (m, k) = (m as f64, k as f64);
    OperationCounts {
        multiplications: m * k * k + m * k,
        additions: (m - 1.0) * k * k + 2.0 * m * k - m,
        square_roots: 0.0,
        divisions: 0.0,
    }
}

/// Fraction of operations saved by the QUBO front end relative to MMSE.
pub fn reduction_ratio(m: usize, k: usize) -> f64 {
    1.0 - op_count_qubo(m, k).total() / op_count_mmse(m, k).total()
}

/// The nine evaluated system sizes as `(antennas, streams)`.
pub const REFERENCE_CONFIGS: [(usize, usize); 9] = [
    (16, 4),
    (16, 8),
    (16, 16),
    (32, 4),
    (32, 8),
    (32, 16),
    (64, 4),
    (64, 8),
    (64, 16),
];
