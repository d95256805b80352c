//! Penalty matrices: the truncated-power ridge block and r-th order
//! difference penalties on the coefficient vector.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("ridge block needs d > degree + 1 (d = {d}, degree = {degree})")]
    DimensionTooSmall { d: usize, degree: usize },
    #[error("difference order {order} must satisfy 1 <= order < d = {d}")]
    OrderTooLarge { order: usize, d: usize },
}

/// Penalty selector. `Ridge` is the order-0 interpretation used by the
/// model grid: an identity penalty on all coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyKind {
    None,
    TpRidge { degree: usize },
    Difference { order: usize },
    Ridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub dimension: usize,
}

impl PenaltySpec {
    pub fn none(dimension: usize) -> Self {
        Self {
            kind: PenaltyKind::None,
            dimension,
        }
    }

    pub fn matrix(&self) -> Result<PenaltyMatrix, PenaltyError> {
        match self.kind {
            PenaltyKind::None => Ok(PenaltyMatrix {
                values: DMatrix::zeros(self.dimension, self.dimension),
            }),
            PenaltyKind::TpRidge { degree } => tp_penalty(self.dimension, degree),
            PenaltyKind::Difference { order } => difference_penalty(self.dimension, order),
            PenaltyKind::Ridge => Ok(PenaltyMatrix {
                values: DMatrix::identity(self.dimension, self.dimension),
            }),
        }
    }
}

/// Symmetric PSD `d x d` matrix K forming the regularizer lambda * g'Kg.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    pub values: DMatrix<f64>,
}

impl PenaltyMatrix {
    pub fn quadratic_form(&self, gamma: &[f64]) -> f64 {
        let d = self.values.nrows();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += gamma[i] * self.values[(i, j)] * gamma[j];
            }
        }
        acc
    }
}

/// Diagonal ridge on the truncated-polynomial block: zeros on the first
/// `degree + 1` entries, ones elsewhere.
pub fn tp_penalty(d: usize, degree: usize) -> Result<PenaltyMatrix, PenaltyError> {
    if d <= degree + 1 {
        return Err(PenaltyError::DimensionTooSmall { d, degree });
    }
    let mut values = DMatrix::zeros(d, d);
    for j in (degree + 1)..d {
        values[(j, j)] = 1.0;
    }
    Ok(PenaltyMatrix { values })
}

/// `(d - r) x d` difference matrix: `D_1` has rows `(-1, 1)` on adjacent
/// columns and `D_r = D_1 D_{r-1}`.
pub fn difference_matrix(d: usize, r: usize) -> Result<DMatrix<f64>, PenaltyError> {
    if r == 0 || r >= d {
        return Err(PenaltyError::OrderTooLarge { order: r, d });
    }
    let first = |rows: usize| {
        let mut m = DMatrix::zeros(rows - 1, rows);
        for i in 0..rows - 1 {
            m[(i, i)] = -1.0;
            m[(i, i + 1)] = 1.0;
        }
        m
    };
    let mut result = first(d);
    for step in 1..r {
        result = first(d - step) * result;
    }
    Ok(result)
}

/// `K_r = D_r' D_r`, so `g'K_r g` is the sum of squared r-th differences.
pub fn difference_penalty(d: usize, r: usize) -> Result<PenaltyMatrix, PenaltyError> {
    let dr = difference_matrix(d, r)?;
    Ok(PenaltyMatrix {
        values: dr.transpose() * dr,
    })
}
