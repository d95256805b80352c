//! Penalized least-squares estimation, smoothing-matrix diagnostics,
//! model criteria, and smoothing-parameter selection.

use crate::basis::{design_matrix, BasisError, BasisSpec, DesignMatrix};
use crate::penalty::{PenaltyError, PenaltyMatrix, PenaltySpec};
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum FitError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error("normal-equation matrix is singular even after jitter (lambda = {lambda})")]
    SingularSystem { lambda: f64 },
    #[error("edf = {edf} is not below n = {n}")]
    EdfExceedsN { edf: f64, n: usize },
    #[error("leverage s_ii = {0} reaches 1; the CV shortcut denominator vanishes")]
    LeverageOne(f64),
    #[error("sigma2 = {0} is not positive")]
    ZeroVariance(f64),
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("every lambda grid point failed; last error: {0}")]
    AllGridPointsFailed(String),
    #[error("design has {rows} rows but y has {len}")]
    DimensionMismatch { rows: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionCriterion {
    Loocv,
    Gcv,
    Aic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaChoice {
    Fixed(f64),
    SelectBy(SelectionCriterion),
}

/// Default candidate grid: 0 plus 41 log-spaced points from 1e-4 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let n = 41;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        grid.push(10f64.powf(-4.0 + 8.0 * t));
    }
    grid
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub basis: BasisSpec,
    pub penalty: PenaltySpec,
    pub lambda: LambdaChoice,
    pub lambda_grid: Vec<f64>,
}

impl FitConfig {
    pub fn new(basis: BasisSpec, penalty: PenaltySpec, lambda: LambdaChoice) -> Self {
        Self {
            basis,
            penalty,
            lambda,
            lambda_grid: default_lambda_grid(),
        }
    }

    /// Unpenalized least squares through the same code path.
    pub fn unpenalized(basis: BasisSpec) -> Self {
        let d = basis.dimension();
        Self::new(basis, PenaltySpec::none(d), LambdaChoice::Fixed(0.0))
    }
}

/// Training-sample criteria. `r2` is the uncentered coefficient of
/// determination `1 - RSS / sum(y^2)`, matching a no-intercept design.
/// `press` and `cvmspe` are infinite when some leverage reaches 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaBundle {
    pub rss: f64,
    pub r2: f64,
    pub press: f64,
    pub cvmspe: f64,
    pub gcv: f64,
    pub aic: f64,
    pub bic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaTracePoint {
    pub lambda: f64,
    pub criterion: f64,
    pub edf: f64,
}

/// A fitted penalized spline with everything needed for prediction and
/// confidence bands.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub basis: BasisSpec,
    pub penalty: PenaltySpec,
    pub lambda: f64,
    pub jittered: bool,
    pub gamma: Vec<f64>,
    pub fitted: Vec<f64>,
    pub hat_diag: Vec<f64>,
    /// tr(S)
    pub edf: f64,
    /// tr(2S - SS'), exposed read-only next to the tr(S) approximation.
    pub edf_exact: f64,
    pub sigma2: f64,
    pub criteria: CriteriaBundle,
    pub lambda_trace: Vec<LambdaTracePoint>,
    pub train_z: Vec<f64>,
    pub train_y: Vec<f64>,
    /// M = (Z'Z + lambda K)^{-1} Z'Z (Z'Z + lambda K)^{-1}; the prediction
    /// variance at z is sigma2 * b(z)' M b(z).
    pub(crate) leverage_gram: DMatrix<f64>,
}

/// Serializable snapshot of a fitted model (stable JSON field schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDump {
    pub family: String,
    pub degree: usize,
    pub interior_knots: Vec<f64>,
    pub domain: [f64; 2],
    pub penalty: PenaltySpec,
    pub lambda: f64,
    pub jittered: bool,
    pub gamma: Vec<f64>,
    pub edf: f64,
    pub edf_exact: f64,
    pub sigma2: f64,
    pub criteria: CriteriaBundle,
    pub lambda_trace: Vec<LambdaTracePoint>,
}

impl FittedModel {
    pub fn dump(&self) -> ModelDump {
        ModelDump {
            family: match self.basis.family {
                crate::basis::Family::TruncatedPower => "truncated-power".into(),
                crate::basis::Family::BSpline => "bspline".into(),
            },
            degree: self.basis.degree,
            interior_knots: self.basis.knots.interior().to_vec(),
            domain: [self.basis.knots.lo(), self.basis.knots.hi()],
            penalty: self.penalty,
            lambda: self.lambda,
            jittered: self.jittered,
            gamma: self.gamma.clone(),
            edf: self.edf,
            edf_exact: self.edf_exact,
            sigma2: self.sigma2,
            criteria: self.criteria,
            lambda_trace: self.lambda_trace.clone(),
        }
    }
}

fn stabilized_inverse(
    gram: &DMatrix<f64>,
    k: &DMatrix<f64>,
    lambda: f64,
) -> Result<(DMatrix<f64>, bool), FitError> {
    let d = gram.nrows();
    let a = gram + k * lambda;
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok((chol.inverse(), false));
    }
    let jitter = 1e-10 * a.trace() / d as f64;
    let a2 = a + DMatrix::identity(d, d) * jitter;
    match Cholesky::new(a2) {
        Some(chol) => Ok((chol.inverse(), true)),
        None => Err(FitError::SingularSystem { lambda }),
    }
}

/// Minimizer of the penalized least-squares criterion,
/// `gamma = (Z'Z + lambda K)^{-1} Z'y`, via a stabilized symmetric solve.
pub fn solve_pls(
    design: &DesignMatrix,
    y: &[f64],
    penalty: &PenaltyMatrix,
    lambda: f64,
) -> Result<Vec<f64>, FitError> {
    let z = &design.values;
    if z.nrows() != y.len() {
        return Err(FitError::DimensionMismatch {
            rows: z.nrows(),
            len: y.len(),
        });
    }
    let gram = z.transpose() * z;
    let (a_inv, _) = stabilized_inverse(&gram, &penalty.values, lambda)?;
    let yv = DVector::from_column_slice(y);
    let gamma = &a_inv * (z.transpose() * yv);
    Ok(gamma.iter().cloned().collect())
}

/// The full `n x n` smoothing matrix `S = Z (Z'Z + lambda K)^{-1} Z'`.
pub fn smoothing_matrix(
    design: &DesignMatrix,
    penalty: &PenaltyMatrix,
    lambda: f64,
) -> Result<DMatrix<f64>, FitError> {
    let z = &design.values;
    let gram = z.transpose() * z;
    let (a_inv, _) = stabilized_inverse(&gram, &penalty.values, lambda)?;
    Ok(z * a_inv * z.transpose())
}

pub fn edf_from_hat_diag(hat_diag: &[f64]) -> f64 {
    hat_diag.iter().sum()
}

/// `RSS / (n - edf)`.
pub fn sigma2_hat(y: &[f64], fitted: &[f64], edf: f64) -> Result<f64, FitError> {
    let n = y.len();
    if edf >= n as f64 {
        return Err(FitError::EdfExceedsN { edf, n });
    }
    let rss: f64 = y
        .iter()
        .zip(fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(rss / (n as f64 - edf))
}

/// Leave-one-out CV by the hat-diagonal shortcut.
pub fn loocv(y: &[f64], fitted: &[f64], hat_diag: &[f64]) -> Result<f64, FitError> {
    let n = y.len() as f64;
    let mut acc = 0.0;
    for ((yi, fi), si) in y.iter().zip(fitted).zip(hat_diag) {
        if *si >= 1.0 - 1e-12 {
            return Err(FitError::LeverageOne(*si));
        }
        let r = (yi - fi) / (1.0 - si);
        acc += r * r;
    }
    Ok(acc / n)
}

/// Generalized cross-validation, `n RSS / (n - edf)^2`.
pub fn gcv(y: &[f64], fitted: &[f64], edf: f64) -> Result<f64, FitError> {
    let n = y.len();
    if edf >= n as f64 {
        return Err(FitError::EdfExceedsN { edf, n });
    }
    let rss: f64 = y
        .iter()
        .zip(fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(n as f64 * rss / (n as f64 - edf).powi(2))
}

/// `n log(sigma2) + 2 (edf + 1)`.
pub fn aic(sigma2: f64, edf: f64, n: usize) -> Result<f64, FitError> {
    if sigma2 <= 0.0 {
        return Err(FitError::ZeroVariance(sigma2));
    }
    Ok(n as f64 * sigma2.ln() + 2.0 * (edf + 1.0))
}

/// `n log(sigma2) + log(n) (edf + 1)`.
pub fn bic(sigma2: f64, edf: f64, n: usize) -> Result<f64, FitError> {
    if sigma2 <= 0.0 {
        return Err(FitError::ZeroVariance(sigma2));
    }
    Ok(n as f64 * sigma2.ln() + (n as f64).ln() * (edf + 1.0))
}

struct CoreFit {
    gamma: DVector<f64>,
    fitted: DVector<f64>,
    hat_diag: Vec<f64>,
    edf: f64,
    edf_exact: f64,
    sigma2: f64,
    criteria: CriteriaBundle,
    leverage_gram: DMatrix<f64>,
    jittered: bool,
}

fn fit_at(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    y: &DVector<f64>,
    k: &DMatrix<f64>,
    lambda: f64,
) -> Result<CoreFit, FitError> {
    let n = z.nrows();
    let (a_inv, jittered) = stabilized_inverse(gram, k, lambda)?;
    let gamma = &a_inv * (z.transpose() * y);
    let fitted = z * &gamma;
    // hat_ii = z_i' A^{-1} z_i via W = Z A^{-1}
    let w = z * &a_inv;
    let hat_diag: Vec<f64> = (0..n)
        .map(|i| (0..z.ncols()).map(|j| w[(i, j)] * z[(i, j)]).sum())
        .collect();
    let edf = edf_from_hat_diag(&hat_diag);
    let leverage_gram = &a_inv * gram * &a_inv;
    // tr(SS') = sum_ij M_ij G_ij for symmetric M, G
    let tr_ss: f64 = leverage_gram
        .iter()
        .zip(gram.iter())
        .map(|(m, g)| m * g)
        .sum();
    let edf_exact = 2.0 * edf - tr_ss;
    if edf >= n as f64 {
        return Err(FitError::EdfExceedsN { edf, n });
    }
    let rss: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let sigma2 = rss / (n as f64 - edf);
    let y_sq: f64 = y.iter().map(|v| v * v).sum();
    let r2 = if y_sq > 0.0 { 1.0 - rss / y_sq } else { 1.0 };
    let press = {
        let mut acc = 0.0;
        let mut degenerate = false;
        for ((yi, fi), si) in y.iter().zip(fitted.iter()).zip(&hat_diag) {
            if *si >= 1.0 - 1e-12 {
                degenerate = true;
                break;
            }
            let r = (yi - fi) / (1.0 - si);
            acc += r * r;
        }
        if degenerate {
            f64::INFINITY
        } else {
            acc
        }
    };
    let cvmspe = press / n as f64;
    let gcv_val = n as f64 * rss / (n as f64 - edf).powi(2);
    let (aic_val, bic_val) = if sigma2 > 0.0 {
        (
            n as f64 * sigma2.ln() + 2.0 * (edf + 1.0),
            n as f64 * sigma2.ln() + (n as f64).ln() * (edf + 1.0),
        )
    } else {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    };
    Ok(CoreFit {
        gamma,
        fitted,
        hat_diag,
        edf,
        edf_exact,
        sigma2,
        criteria: CriteriaBundle {
            rss,
            r2,
            press,
            cvmspe,
            gcv: gcv_val,
            aic: aic_val,
            bic: bic_val,
        },
        leverage_gram,
        jittered,
    })
}

/// Fit the model described by `config` to `(z, y)`. With
/// `LambdaChoice::SelectBy` every grid point is fitted and the criterion
/// minimizer is kept; ties go to the larger (smoother) lambda.
pub fn fit(config: &FitConfig, z: &[f64], y: &[f64]) -> Result<FittedModel, FitError> {
    let design = design_matrix(z, &config.basis)?;
    if design.values.nrows() != y.len() {
        return Err(FitError::DimensionMismatch {
            rows: design.values.nrows(),
            len: y.len(),
        });
    }
    let k = config.penalty.matrix()?;
    let gram = design.values.transpose() * &design.values;
    let yv = DVector::from_column_slice(y);

    let build = |core: CoreFit, lambda: f64, trace: Vec<LambdaTracePoint>| FittedModel {
        basis: config.basis.clone(),
        penalty: config.penalty,
        lambda,
        jittered: core.jittered,
        gamma: core.gamma.iter().cloned().collect(),
        fitted: core.fitted.iter().cloned().collect(),
        hat_diag: core.hat_diag,
        edf: core.edf,
        edf_exact: core.edf_exact,
        sigma2: core.sigma2,
        criteria: core.criteria,
        lambda_trace: trace,
        train_z: z.to_vec(),
        train_y: y.to_vec(),
        leverage_gram: core.leverage_gram,
    };

    match config.lambda {
        LambdaChoice::Fixed(lambda) => {
            let core = fit_at(&design.values, &gram, &yv, &k.values, lambda)?;
            Ok(build(core, lambda, Vec::new()))
        }
        LambdaChoice::SelectBy(criterion) => {
            if config.lambda_grid.is_empty() {
                return Err(FitError::EmptyGrid);
            }
            let mut grid = config.lambda_grid.clone();
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut trace = Vec::with_capacity(grid.len());
            let mut best: Option<(f64, f64, CoreFit)> = None;
            let mut last_err = String::new();
            for &lambda in &grid {
                match fit_at(&design.values, &gram, &yv, &k.values, lambda) {
                    Ok(core) => {
                        let value = match criterion {
                            SelectionCriterion::Loocv => core.criteria.cvmspe,
                            SelectionCriterion::Gcv => core.criteria.gcv,
                            SelectionCriterion::Aic => core.criteria.aic,
                        };
                        trace.push(LambdaTracePoint {
                            lambda,
                            criterion: value,
                            edf: core.edf,
                        });
                        let replace = match &best {
                            None => true,
                            Some((bv, _, _)) => value <= *bv,
                        };
                        if replace {
                            best = Some((value, lambda, core));
                        }
                    }
                    Err(e) => last_err = e.to_string(),
                }
            }
            match best {
                Some((_, lambda, core)) => Ok(build(core, lambda, trace)),
                None => Err(FitError::AllGridPointsFailed(last_err)),
            }
        }
    }
}
