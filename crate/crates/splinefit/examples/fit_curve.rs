//! Fits a penalized spline to the bundled atmospheric-pressure series and
//! prints the goodness-of-fit summary plus a coarse fitted curve.

use splinefit::basis::{place_knots, BasisSpec, Family, KnotPlacement};
use splinefit::dataset::load_csv;
use splinefit::fit::{fit, FitConfig, LambdaChoice, SelectionCriterion};
use splinefit::inference::predict;
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

    println!("n = {}, basis dimension = {d}", data.n());
    println!("selected lambda = {:.4}", model.lambda);
    println!("edf = {:.2} (exact {:.2})", model.edf, model.edf_exact);
    println!("rss = {:.2}  r2 = {:.4}", model.criteria.rss, model.criteria.r2);
    println!(
        "cvmspe = {:.3}  gcv = {:.3}  aic = {:.1}",
        model.criteria.cvmspe, model.criteria.gcv, model.criteria.aic
    );

    println!("\nmonth  fitted");
    let points: Vec<f64> = (0..=20).map(|i| 1.0 + 167.0 * i as f64 / 20.0).collect();
    let fitted = predict(&model, &points).unwrap();
    for (z, f) in points.iter().zip(&fitted) {
        println!("{z:6.1}  {f:7.3}");
    }
}
