//! Runs the penalized-spline preset grid over a seeded train/test split
//! and prints the report as a markdown table plus the winning model.

use splinefit::dataset::load_csv;
use splinefit::selection::{best_model, emit_markdown, preset, run_grid, DEFAULT_PRIORITY};

const ENSO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/enso.csv");

fn main() {
    let data = load_csv(ENSO, "month", "pressure", b',').unwrap();
    let spec = preset("pspline-table4").unwrap();
    let report = run_grid(&spec, &data).unwrap();

    let mut rendered = Vec::new();
    emit_markdown(&report, &mut rendered).unwrap();
    println!("{}", String::from_utf8(rendered).unwrap());

    let best = best_model(&report.rows, &DEFAULT_PRIORITY).unwrap();
    println!(
        "best cell: degree {} with {} knots, difference order {:?}, cvmspe {:.3}, test mse {:.3}",
        best.degree, best.knots, best.diff_order, best.cvmspe, best.mse_test
    );
}
