//! Evaluates both spline bases on a small grid and prints them side by
//! side, along with a partition-of-unity check and spline derivatives.

use splinefit::basis::{
    bspline_basis, spline_derivative, tp_basis, BasisSpec, Family, KnotVector,
};

fn main() {
    let knots = KnotVector::new(0.0, 1.0, vec![0.25, 0.5, 0.75]).unwrap();
    let degree = 2;
    let tp = BasisSpec::new(Family::TruncatedPower, degree, knots.clone());
    let bs = BasisSpec::new(Family::BSpline, degree, knots);
    println!("degree {degree}, interior knots at 0.25, 0.5, 0.75");
    println!("dimension: {} (same for both families)\n", tp.dimension());

    println!("{:>6}  {:<46} {:<46} {:>10}", "z", "truncated power", "b-spline", "sum(B)");
    for i in 0..=10 {
        let z = i as f64 / 10.0;
        let t = tp_basis(z, &tp);
        let b = bspline_basis(z, &bs).unwrap();
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:6.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let sum: f64 = b.iter().sum();
        println!("{z:>6.2}  {:<46} {:<46} {sum:>10.7}", fmt(&t), fmt(&b));
    }

    // the derivative of a spline with linearly increasing coefficients is
    // a constant for degree >= 1 on uniform knots
    let gamma: Vec<f64> = (0..bs.dimension()).map(|j| j as f64).collect();
    println!("\nderivative of the spline with coefficients 0,1,2,..:");
    for i in 1..10 {
        let z = i as f64 / 10.0;
        println!("  s'({z:.1}) = {:.6}", spline_derivative(z, &gamma, &bs).unwrap());
    }
}
