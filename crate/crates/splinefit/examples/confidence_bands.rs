//! Compares pointwise, Bonferroni, and simulated simultaneous confidence
//! bands for the same fitted curve.

use splinefit::basis::{place_knots, BasisSpec, Family, KnotPlacement};
use splinefit::dataset::load_csv;
use splinefit::fit::{fit, FitConfig, LambdaChoice, SelectionCriterion};
use splinefit::inference::{bonferroni_band, pointwise_band, simulated_band};
use splinefit::penalty::{PenaltyKind, PenaltySpec};

const ENSO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/enso.csv");

fn main() {
    let data = load_csv(ENSO, "month", "pressure", b',').unwrap();
    let knots = place_knots(&data.z, 40, KnotPlacement::Equidistant).unwrap();
    let spec = BasisSpec::new(Family::BSpline, 2, knots);
    let d = spec.dimension();
    let config = FitConfig::new(
        spec,
        PenaltySpec {
            kind: PenaltyKind::Difference { order: 2 },
            dimension: d,
        },
        LambdaChoice::SelectBy(SelectionCriterion::Gcv),
    );
    let model = fit(&config, &data.z, &data.y).unwrap();

    let points: Vec<f64> = (0..12).map(|i| 10.0 + i as f64 * 14.0).collect();
    let alpha = 0.05;
    let pw = pointwise_band(&model, &points, alpha).unwrap();
    let bf = bonferroni_band(&model, &points, alpha).unwrap();
    let sim = simulated_band(&model, &points, alpha, 50_000, 42).unwrap();

    println!("95% bands at {} points", points.len());
    println!(
        "quantiles: pointwise {:.4}, simulated {:.4}, bonferroni {:.4}\n",
        pw.quantile, sim.quantile, bf.quantile
    );
    println!("month  estimate  pointwise          simulated          bonferroni");
    for j in 0..points.len() {
        println!(
            "{:5.0}  {:8.3}  [{:7.3},{:7.3}]  [{:7.3},{:7.3}]  [{:7.3},{:7.3}]",
            points[j],
            pw.points[j].estimate,
            pw.points[j].lower,
            pw.points[j].upper,
            sim.points[j].lower,
            sim.points[j].upper,
            bf.points[j].lower,
            bf.points[j].upper,
        );
    }
}
