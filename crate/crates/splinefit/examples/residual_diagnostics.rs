//! Residual-versus-fitted diagnostic for a penalized spline fit, with a
//! moving-average smoother over the residuals to expose structure.

use splinefit::basis::{place_knots, BasisSpec, Family, KnotPlacement};
use splinefit::dataset::{load_csv, residual_diagnostic};
use splinefit::fit::{fit, FitConfig, LambdaChoice, SelectionCriterion};
use splinefit::penalty::{PenaltyKind, PenaltySpec};

const ENSO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/enso.csv");

fn main() {
    let data = load_csv(ENSO, "month", "pressure", b',').unwrap();
    let knots = place_knots(&data.z, 80, KnotPlacement::Equidistant).unwrap();
    let spec = BasisSpec::new(Family::BSpline, 2, knots);
    let d = spec.dimension();
    let config = FitConfig::new(
        spec,
        PenaltySpec {
            kind: PenaltyKind::Difference { order: 1 },
            dimension: d,
        },
        LambdaChoice::SelectBy(SelectionCriterion::Gcv),
    );
    let model = fit(&config, &data.z, &data.y).unwrap();
    let residuals: Vec<f64> = data
        .y
        .iter()
        .zip(&model.fitted)
        .map(|(y, f)| y - f)
        .collect();
    let rows = residual_diagnostic(&model.fitted, &residuals, 9).unwrap();

    println!("fitted  residual  smoothed");
    for (f, r, s) in rows.iter().step_by(6) {
        println!("{f:6.2}  {r:8.3}  {s:8.3}");
    }
    let mean: f64 = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let max_smooth = rows.iter().map(|r| r.2.abs()).fold(0.0f64, f64::max);
    println!("\nmean residual {mean:.4}, largest smoothed magnitude {max_smooth:.3}");
}
