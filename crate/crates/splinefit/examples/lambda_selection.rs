//! Shows the smoothing-parameter trace: for each candidate lambda the
//! selection criterion and effective dimension, and what each criterion
//! would pick.

use splinefit::basis::{place_knots, BasisSpec, Family, KnotPlacement};
use splinefit::dataset::load_csv;
use splinefit::fit::{fit, FitConfig, LambdaChoice, SelectionCriterion};
use splinefit::penalty::{PenaltyKind, PenaltySpec};

const ENSO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/enso.csv");

fn main() {
    let data = load_csv(ENSO, "month", "pressure", b',').unwrap();
    let knots = place_knots(&data.z, 50, KnotPlacement::Equidistant).unwrap();
    let spec = BasisSpec::new(Family::BSpline, 3, knots);
    let d = spec.dimension();
    let penalty = PenaltySpec {
        kind: PenaltyKind::Difference { order: 2 },
        dimension: d,
    };

    for criterion in [
        SelectionCriterion::Gcv,
        SelectionCriterion::Loocv,
        SelectionCriterion::Aic,
    ] {
        let config = FitConfig::new(
            spec.clone(),
            penalty,
            LambdaChoice::SelectBy(criterion),
        );
        let model = fit(&config, &data.z, &data.y).unwrap();
        println!(
            "{criterion:?}: lambda = {:.4}, edf = {:.2}, rss = {:.2}",
            model.lambda, model.edf, model.criteria.rss
        );
        if criterion == SelectionCriterion::Gcv {
            println!("\n  lambda        gcv     edf");
            for p in model.lambda_trace.iter().filter(|p| p.lambda > 1e-3 && p.lambda < 1e3) {
                let marker = if p.lambda == model.lambda { "  <- selected" } else { "" };
                println!("  {:<10.4} {:7.3} {:7.2}{marker}", p.lambda, p.criterion, p.edf);
            }
            println!();
        }
    }
}
