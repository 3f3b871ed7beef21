//! QUBO reduction of QPSK maximum-likelihood detection.
//!
//! With `x = (2b - 1) / alpha` and `v = y + H 1 / alpha`,
//!
//! ```text
//! ||y - H x||^2 = ||v||^2 + b' Q b,
//! Q = (4 / alpha^2) H'H - diag((4 / alpha) H'v)
//! ```
//!
//! using `b_j^2 = b_j` to fold the linear term into the diagonal. The
//! constant `||v||^2` is kept on the instance so the identity can be
//! checked exactly.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::RealSystem;

/// Normalisation factor for unit-energy QPSK.
pub const QPSK_ALPHA: f64 = std::f64::consts::SQRT_2;

/// Largest problem size the exhaustive routines accept.
pub const MAX_ENUMERATION_BITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    q: DMatrix<f64>,
    constant: f64,
    alpha: f64,
}

impl QuboInstance {
    /// Wrap an arbitrary symmetric matrix, e.g. for solver experiments.
    pub fn from_matrix(q: DMatrix<f64>, constant: f64, alpha: f64) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(Error::InvalidDimensions(format!(
                "QUBO matrix must be square and non-empty, got {:?}",
                q.shape()
            )));
        }
        let n = q.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (q[(i, j)], q[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "QUBO matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if q.iter().any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(Error::InvalidParameter("QUBO entries must be finite".into()));
        }
        Ok(Self { q, constant, alpha })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest absolute entry of `Q`.
    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain-text dump: header `N constant alpha`, then `N` space-separated rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.n();
        writeln!(w, "{} {:e} {:e}", n, self.constant, self.alpha)?;
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:e}", self.q[(i, j)])).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn dot_columns(h: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    h.column(a).iter().zip(h.column(b).iter()).map(|(x, y)| x * y).sum()
}

fn dot_column(h: &DMatrix<f64>, c: usize, v: &DVector<f64>) -> f64 {
    h.column(c).iter().zip(v.iter()).map(|(x, y)| x * y).sum()
}

/// Diagonal of `Q` and the constant `||v||^2` for a given observation.
/// Shared by `build_qubo` and `update_observation` so both produce the
/// same bits.
fn observation_terms(system: &RealSystem, alpha: f64) -> (Vec<f64>, f64) {
    let h = &system.h;
    let inv_alpha = 1.0 / alpha;
    let v = DVector::from_fn(h.nrows(), |r, _| {
        system.y[r] + inv_alpha * h.row(r).iter().sum::<f64>()
    });
    let quad = 4.0 * inv_alpha * inv_alpha;
    let lin = 4.0 * inv_alpha;
    let diag = (0..h.ncols())
        .map(|i| quad * dot_columns(h, i, i) - lin * dot_column(h, i, &v))
        .collect();
    (diag, v.norm_squared())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(())
}

/// Build the QUBO instance for `system`.
pub fn build_qubo(system: &RealSystem, alpha: f64) -> Result<QuboInstance> {
    check_alpha(alpha)?;
    let h = &system.h;
    let n = h.ncols();
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidDimensions(format!(
            "QPSK systems have an even number of real unknowns, got {n}"
        )));
    }
    let quad = 4.0 / (alpha * alpha);
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let g = quad * dot_columns(h, i, j);
            q[(i, j)] = g;
            q[(j, i)] = g;
        }
    }
    let (diag, constant) = observation_terms(system, alpha);
    for (i, d) in diag.into_iter().enumerate() {
        q[(i, i)] = d;
    }
    Ok(QuboInstance { q, constant, alpha })
}

/// Re-target an instance to a new observation over the same channel.
/// Only the diagonal and the constant change.
pub fn update_observation(inst: &QuboInstance, system: &RealSystem) -> Result<QuboInstance> {
    if system.n() != inst.n() {
        return Err(Error::DimensionMismatch {
            what: "system unknowns vs QUBO size",
            expected: inst.n(),
            actual: system.n(),
        });
    }
    let (diag, constant) = observation_terms(system, inst.alpha);
    let mut q = inst.q.clone();
    for (i, d) in diag.into_iter().enumerate() {
        q[(i, i)] = d;
    }
    Ok(QuboInstance {
        q,
        constant,
        alpha: inst.alpha,
    })
}

fn check_bits(n: usize, b: &[u8]) -> Result<()> {
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "bit vector vs QUBO size",
            expected: n,
            actual: b.len(),
        });
    }
    Ok(())
}

/// `b' Q b` (constant excluded).
pub fn objective(inst: &QuboInstance, b: &[u8]) -> Result<f64> {
    check_bits(inst.n(), b)?;
    let active: Vec<usize> = (0..b.len()).filter(|&i| b[i] != 0).collect();
    Ok(active
        .iter()
        .map(|&i| active.iter().map(|&j| inst.q[(i, j)]).sum::<f64>())
        .sum())
}

/// `b' Q b + constant`, equal to `||y - H x(b)||^2`.
pub fn objective_with_constant(inst: &QuboInstance, b: &[u8]) -> Result<f64> {
    Ok(objective(inst, b)? + inst.constant)
}

/// Real symbol estimate `(2b - 1) / alpha`.
pub fn bits_to_symbols(b: &[u8], alpha: f64) -> DVector<f64> {
    let s = 1.0 / alpha;
    DVector::from_iterator(b.len(), b.iter().map(|&v| if v != 0 { s } else { -s }))
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_BITS {
        return Err(Error::EnumerationLimit {
            n,
            limit: MAX_ENUMERATION_BITS,
        });
    }
    Ok(())
}

/// Bits of enumeration index `w`, first bit most significant.
fn index_bits(w: u64, n: usize, out: &mut [u8]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = ((w >> (n - 1 - j)) & 1) as u8;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlSolution {
    pub bits: Vec<u8>,
    pub x: DVector<f64>,
    pub value: f64,
}

/// Exhaustive ML detection over `{-1/alpha, 1/alpha}^N`, evaluated directly
/// on the residual `||y - H x||^2`. Ties go to the smallest index with the
/// first bit most significant.
pub fn ml_brute_force(system: &RealSystem, alpha: f64) -> Result<MlSolution> {
    check_alpha(alpha)?;
    let n = system.n();
    guard(n)?;
    let h = &system.h;
    let step = 2.0 / alpha;

    // start at b = 0 and walk the natural order; incrementing flips the
    // trailing ones plus one zero
    let mut bits = vec![0u8; n];
    let mut residual = &system.y - h * bits_to_symbols(&bits, alpha);
    let mut best = (residual.norm_squared(), 0u64);
    for w in 1..(1u64 << n) {
        let flips = w.trailing_zeros() as usize + 1;
        for t in 0..flips {
            let j = n - 1 - t;
            let sign = if bits[j] == 0 { -step } else { step };
            bits[j] ^= 1;
            residual.axpy(sign, &h.column(j), 1.0);
        }
        let value = residual.norm_squared();
        if value < best.0 {
            best = (value, w);
        }
    }

    let mut b = vec![0u8; n];
    index_bits(best.1, n, &mut b);
    let x = bits_to_symbols(&b, alpha);
    let value = (&system.y - h * &x).norm_squared();
    Ok(MlSolution { bits: b, x, value })
}

/// Exhaustive minimisation of `b' Q b` by direct evaluation. Same tie rule
/// as [`ml_brute_force`].
pub fn exhaustive_minimum(inst: &QuboInstance) -> Result<(Vec<u8>, f64)> {
    let n = inst.n();
    guard(n)?;
    let mut b = vec![0u8; n];
    let mut best = (f64::INFINITY, 0u64);
    for w in 0..(1u64 << n) {
        index_bits(w, n, &mut b);
        let v = objective(inst, &b)?;
        if v < best.0 {
            best = (v, w);
        }
    }
    index_bits(best.1, n, &mut b);
    Ok((b, best.0))
}

/// Strictness of the 1-flip local-minimum test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MinimumRule {
    /// Every single flip yields energy `>=` the current one.
    #[default]
    NonStrict,
    /// Every single flip strictly increases the energy.
    Strict,
}

/// Number of 1-flip local minima of `b' Q b` (plateaus count as minima).
pub fn count_local_minima(inst: &QuboInstance) -> Result<u64> {
    count_local_minima_with(inst, MinimumRule::NonStrict)
}

pub fn count_local_minima_with(inst: &QuboInstance, rule: MinimumRule) -> Result<u64> {
    let n = inst.n();
    guard(n)?;
    let q = &inst.q;
    let diag: Vec<f64> = (0..n).map(|i| q[(i, i)]).collect();
    // field[i] = sum_{j != i} Q_ij b_j, maintained along a Gray-code walk
    let mut field = vec![0.0; n];
    let mut bits = vec![0u8; n];
    let is_min = |bits: &[u8], field: &[f64]| {
        (0..n).all(|i| {
            let gain = diag[i] + 2.0 * field[i];
            let delta = if bits[i] == 0 { gain } else { -gain };
            match rule {
                MinimumRule::NonStrict => delta >= 0.0,
                MinimumRule::Strict => delta > 0.0,
            }
        })
    };

    let mut count = u64::from(is_min(&bits, &field));
    for w in 1..(1u64 << n) {
        let j = w.trailing_zeros() as usize;
        let sign = if bits[j] == 0 { 1.0 } else { -1.0 };
        bits[j] ^= 1;
        for (i, f) in field.iter_mut().enumerate() {
            if i != j {
                *f += sign * q[(i, j)];
            }
        }
        if is_min(&bits, &field) {
            count += 1;
        }
    }
    Ok(count)
}
