//! Model-grid sweeps over degrees, knot counts, and difference orders, with
//! train/test criteria and report emission.

use crate::basis::{place_knots, BasisSpec, Family, KnotPlacement};
use crate::dataset::{split_with_mode, DataError, DataSet, SplitMode};
use crate::fit::{fit, FitConfig, LambdaChoice, SelectionCriterion};
use crate::penalty::{PenaltyKind, PenaltySpec};
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum SelectionError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("grid spec has an empty degree or knot list")]
    EmptySpec,
    #[error("no grid cell fitted successfully")]
    NoSuccessfulFits,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which family a grid sweeps. `PSpline` is a B-spline basis with a
/// difference penalty and per-cell smoothing-parameter selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    TruncatedPower,
    BSpline,
    PSpline,
}

impl ModelFamily {
    pub fn label(&self) -> &'static str {
        match self {
            ModelFamily::TruncatedPower => "tp",
            ModelFamily::BSpline => "bspline",
            ModelFamily::PSpline => "pspline",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub family: ModelFamily,
    pub degrees: Vec<usize>,
    pub knot_counts: Vec<usize>,
    /// P-spline only; order 0 is an identity ridge on all coefficients.
    pub diff_orders: Vec<usize>,
    /// Keep only cells with order <= degree - 1, the combination pattern of
    /// the shipped experiment configs.
    pub cap_order_at_degree: bool,
    pub fraction: f64,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub selection: SelectionCriterion,
}

impl GridSpec {
    pub fn new(family: ModelFamily, degrees: Vec<usize>, knot_counts: Vec<usize>) -> Self {
        Self {
            family,
            degrees,
            knot_counts,
            diff_orders: vec![],
            cap_order_at_degree: false,
            fraction: 0.8,
            seed: 42,
            split_mode: SplitMode::Random,
            selection: SelectionCriterion::Gcv,
        }
    }
}

/// Named experiment configurations matching the shipped comparison tables.
pub fn preset(name: &str) -> Option<GridSpec> {
    match name {
        "tp-table2" => Some(GridSpec::new(
            ModelFamily::TruncatedPower,
            (1..=4).collect(),
            (0..10).map(|i| 1 + 5 * i).collect(),
        )),
        "bspline-table3" => Some(GridSpec::new(
            ModelFamily::BSpline,
            (1..=4).collect(),
            (0..10).map(|i| 1 + 5 * i).collect(),
        )),
        "pspline-table4" => {
            let mut spec = GridSpec::new(
                ModelFamily::PSpline,
                (2..=5).collect(),
                vec![50, 80, 100],
            );
            spec.diff_orders = (0..=4).collect();
            spec.cap_order_at_degree = true;
            Some(spec)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub family: ModelFamily,
    pub degree: usize,
    pub knots: usize,
    pub diff_order: Option<usize>,
    /// Basis dimension for unpenalized fits, edf for P-splines.
    pub params: f64,
    pub lambda: Option<f64>,
    pub aic: f64,
    pub bic: f64,
    pub r2: f64,
    pub press: f64,
    pub cvmspe: f64,
    pub mse_test: f64,
    /// Test points outside the training hull, excluded from `mse_test`.
    pub excluded_test: usize,
    pub error: Option<String>,
}

impl GridRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub family: ModelFamily,
    pub fraction: f64,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub train_n: usize,
    pub test_n: usize,
    pub data_checksum: u64,
    pub rows: Vec<GridRow>,
}

fn fit_cell(
    train: &DataSet,
    test: &DataSet,
    family: ModelFamily,
    degree: usize,
    knots: usize,
    diff_order: Option<usize>,
    selection: SelectionCriterion,
) -> Result<GridRow, String> {
    let kv = place_knots(&train.z, knots, KnotPlacement::Equidistant).map_err(|e| e.to_string())?;
    let basis_family = match family {
        ModelFamily::TruncatedPower => Family::TruncatedPower,
        _ => Family::BSpline,
    };
    let spec = BasisSpec::new(basis_family, degree, kv.clone());
    let d = spec.dimension();
    let config = match family {
        ModelFamily::PSpline => {
            let order = diff_order.unwrap_or(2);
            let kind = if order == 0 {
                PenaltyKind::Ridge
            } else {
                PenaltyKind::Difference { order }
            };
            FitConfig::new(
                spec.clone(),
                PenaltySpec { kind, dimension: d },
                LambdaChoice::SelectBy(selection),
            )
        }
        _ => FitConfig::unpenalized(spec.clone()),
    };
    let model = fit(&config, &train.z, &train.y).map_err(|e| e.to_string())?;
    // test MSE over points inside the training hull only
    let mut sq = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (&z, &y) in test.z.iter().zip(&test.y) {
        if kv.contains(z) {
            let b = spec.evaluate(z).map_err(|e| e.to_string())?;
            let pred: f64 = b.iter().zip(&model.gamma).map(|(a, g)| a * g).sum();
            sq += (y - pred) * (y - pred);
            used += 1;
        } else {
            excluded += 1;
        }
    }
    let mse_test = if used > 0 { sq / used as f64 } else { f64::NAN };
    let params = match family {
        ModelFamily::PSpline => model.edf,
        _ => d as f64,
    };
    Ok(GridRow {
        family,
        degree,
        knots,
        diff_order,
        params,
        lambda: match family {
            ModelFamily::PSpline => Some(model.lambda),
            _ => None,
        },
        aic: model.criteria.aic,
        bic: model.criteria.bic,
        r2: model.criteria.r2,
        press: model.criteria.press,
        cvmspe: model.criteria.cvmspe,
        mse_test,
        excluded_test: excluded,
        error: None,
    })
}

/// Run every cell of the grid over a single train/test split. Failed cells
/// carry an error tag in their row rather than being dropped.
pub fn run_grid(spec: &GridSpec, data: &DataSet) -> Result<GridReport, SelectionError> {
    if spec.degrees.is_empty() || spec.knot_counts.is_empty() {
        return Err(SelectionError::EmptySpec);
    }
    let split = split_with_mode(data, spec.fraction, spec.seed, spec.split_mode)?;
    let mut rows = Vec::new();
    for &degree in &spec.degrees {
        for &knots in &spec.knot_counts {
            let orders: Vec<Option<usize>> = match spec.family {
                ModelFamily::PSpline => {
                    let mut os: Vec<Option<usize>> = spec
                        .diff_orders
                        .iter()
                        .filter(|&&r| !spec.cap_order_at_degree || r + 1 <= degree)
                        .map(|&r| Some(r))
                        .collect();
                    if os.is_empty() {
                        os.push(Some(2));
                    }
                    os
                }
                _ => vec![None],
            };
            for order in orders {
                let row = fit_cell(
                    &split.train,
                    &split.test,
                    spec.family,
                    degree,
                    knots,
                    order,
                    spec.selection,
                )
                .unwrap_or_else(|err| GridRow {
                    family: spec.family,
                    degree,
                    knots,
                    diff_order: order,
                    params: f64::NAN,
                    lambda: None,
                    aic: f64::NAN,
                    bic: f64::NAN,
                    r2: f64::NAN,
                    press: f64::NAN,
                    cvmspe: f64::NAN,
                    mse_test: f64::NAN,
                    excluded_test: 0,
                    error: Some(err),
                });
                rows.push(row);
            }
        }
    }
    Ok(GridReport {
        family: spec.family,
        fraction: spec.fraction,
        seed: spec.seed,
        split_mode: spec.split_mode,
        train_n: split.train.n(),
        test_n: split.test.n(),
        data_checksum: data.checksum(),
        rows,
    })
}

/// Ranking keys for `best_model`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankKey {
    Cvmspe,
    MseTest,
    Aic,
    Bic,
    Press,
}

fn key_value(row: &GridRow, key: RankKey) -> f64 {
    match key {
        RankKey::Cvmspe => row.cvmspe,
        RankKey::MseTest => row.mse_test,
        RankKey::Aic => row.aic,
        RankKey::Bic => row.bic,
        RankKey::Press => row.press,
    }
}

/// Lexicographic argmin over the priority list; ties break toward fewer
/// parameters, then smaller degree. NaN-valued keys lose against any number.
pub fn best_model<'a>(
    rows: &'a [GridRow],
    priority: &[RankKey],
) -> Result<&'a GridRow, SelectionError> {
    let candidates: Vec<&GridRow> = rows.iter().filter(|r| r.ok()).collect();
    if candidates.is_empty() {
        return Err(SelectionError::NoSuccessfulFits);
    }
    let cmp_val = |a: f64, b: f64| -> std::cmp::Ordering {
        match (a.is_nan(), b.is_nan()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            (false, false) => a.partial_cmp(&b).unwrap(),
        }
    };
    let best = candidates
        .into_iter()
        .min_by(|a, b| {
            for &k in priority {
                let ord = cmp_val(key_value(a, k), key_value(b, k));
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            cmp_val(a.params, b.params).then(a.degree.cmp(&b.degree))
        })
        .unwrap();
    Ok(best)
}

pub const DEFAULT_PRIORITY: [RankKey; 3] = [RankKey::Cvmspe, RankKey::MseTest, RankKey::Aic];

const COLUMNS: [&str; 12] = [
    "family",
    "degree",
    "knots",
    "diff_order",
    "params",
    "lambda",
    "aic",
    "bic",
    "r2",
    "press",
    "cvmspe",
    "mse_test",
];

fn row_fields(row: &GridRow, full_precision: bool) -> Vec<String> {
    let num = |v: f64| {
        if full_precision {
            format!("{v}")
        } else {
            format!("{v:.2}")
        }
    };
    vec![
        row.family.label().to_string(),
        row.degree.to_string(),
        row.knots.to_string(),
        row.diff_order.map_or(String::new(), |r| r.to_string()),
        num(row.params),
        row.lambda.map_or(String::new(), num),
        num(row.aic),
        num(row.bic),
        num(row.r2),
        num(row.press),
        num(row.cvmspe),
        num(row.mse_test),
    ]
}

/// CSV emission at full precision, stable column order.
pub fn emit_csv<W: Write>(report: &GridReport, mut out: W) -> Result<(), SelectionError> {
    writeln!(out, "{},excluded_test,error", COLUMNS.join(","))?;
    for row in &report.rows {
        let mut fields = row_fields(row, true);
        fields.push(row.excluded_test.to_string());
        fields.push(row.error.clone().unwrap_or_default());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// JSON emission: the whole report including the experiment manifest fields
/// (spec echo, seed, data checksum).
pub fn emit_json<W: Write>(report: &GridReport, out: W) -> Result<(), SelectionError> {
    serde_json::to_writer_pretty(out, report).map_err(std::io::Error::other)?;
    Ok(())
}

/// Markdown emission with 2-decimal display.
pub fn emit_markdown<W: Write>(report: &GridReport, mut out: W) -> Result<(), SelectionError> {
    writeln!(out, "| {} |", COLUMNS.join(" | "))?;
    writeln!(out, "|{}", "---|".repeat(COLUMNS.len()))?;
    for row in &report.rows {
        writeln!(out, "| {} |", row_fields(row, false).join(" | "))?;
    }
    Ok(())
}
