//! Knot placement, truncated-power and B-spline basis evaluation, and
//! design-matrix assembly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BasisError {
    #[error("covariate domain is degenerate: min(z) == max(z) == {0}")]
    DegenerateDomain(f64),
    #[error("quantile knot placement produced coincident interior knots at {0}")]
    DuplicateKnots(f64),
    #[error("interior knots must be strictly increasing and inside ({lo}, {hi})")]
    InvalidKnots { lo: f64, hi: f64 },
    #[error("z = {0} is outside the knot domain [{1}, {2}]")]
    OutOfDomain(f64, f64, f64),
    #[error("z[{index}] = {value} is outside the knot domain")]
    OutOfDomainAt { index: usize, value: f64 },
    #[error("derivative of a degree-0 basis is not defined")]
    DegreeZero,
    #[error("coefficient vector has length {got}, basis dimension is {want}")]
    CoefficientLength { got: usize, want: usize },
    #[error("need at least 2 distinct covariate values, got {0}")]
    TooFewDistinct(usize),
}

/// Spline family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    TruncatedPower,
    BSpline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnotPlacement {
    Equidistant,
    Quantile,
}

/// Ordered knot sequence over the covariate domain `[lo, hi]` with strictly
/// increasing interior knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    interior: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl KnotVector {
    pub fn new(lo: f64, hi: f64, interior: Vec<f64>) -> Result<Self, BasisError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(BasisError::DegenerateDomain(lo));
        }
        let mut prev = lo;
        for &k in &interior {
            if !(prev < k) || !(k < hi) {
                return Err(BasisError::InvalidKnots { lo, hi });
            }
            prev = k;
        }
        Ok(Self { interior, lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Full knot sequence for a degree-`l` B-spline basis: `l` extra knots per
    /// side, spaced by the adjacent boundary cell width so the sequence stays
    /// strictly increasing.
    pub fn extended(&self, degree: usize) -> Vec<f64> {
        let left_h = self.interior.first().map_or(self.hi - self.lo, |k| k - self.lo);
        let right_h = self.interior.last().map_or(self.hi - self.lo, |k| self.hi - k);
        let mut knots = Vec::with_capacity(self.interior.len() + 2 + 2 * degree);
        for j in (1..=degree).rev() {
            knots.push(self.lo - j as f64 * left_h);
        }
        knots.push(self.lo);
        knots.extend_from_slice(&self.interior);
        knots.push(self.hi);
        for j in 1..=degree {
            knots.push(self.hi + j as f64 * right_h);
        }
        knots
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.lo && z <= self.hi
    }
}

/// Family, degree, and knot configuration; fully determines the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: Family,
    pub degree: usize,
    pub knots: KnotVector,
}

impl BasisSpec {
    pub fn new(family: Family, degree: usize, knots: KnotVector) -> Self {
        Self {
            family,
            degree,
            knots,
        }
    }

    /// Basis dimension: `K_int + degree + 1` for both families.
    pub fn dimension(&self) -> usize {
        self.knots.num_interior() + self.degree + 1
    }

    /// Basis vector at a single point.
    pub fn evaluate(&self, z: f64) -> Result<Vec<f64>, BasisError> {
        match self.family {
            Family::TruncatedPower => Ok(tp_basis(z, self)),
            Family::BSpline => bspline_basis(z, self),
        }
    }
}

/// Place `count` interior knots over the observed range of `z`.
pub fn place_knots(
    z: &[f64],
    count: usize,
    policy: KnotPlacement,
) -> Result<KnotVector, BasisError> {
    let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(BasisError::DegenerateDomain(lo));
    }
    let interior = match policy {
        KnotPlacement::Equidistant => (1..=count)
            .map(|j| lo + j as f64 * (hi - lo) / (count as f64 + 1.0))
            .collect::<Vec<_>>(),
        KnotPlacement::Quantile => {
            let mut distinct = z.to_vec();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            if distinct.len() < 2 {
                return Err(BasisError::TooFewDistinct(distinct.len()));
            }
            let m = distinct.len();
            let mut ks = Vec::with_capacity(count);
            for j in 1..=count {
                let q = j as f64 / (count as f64 + 1.0);
                let pos = q * (m as f64 - 1.0);
                let i = pos.floor() as usize;
                let frac = pos - i as f64;
                let k = if i + 1 < m {
                    distinct[i] * (1.0 - frac) + distinct[i + 1] * frac
                } else {
                    distinct[i]
                };
                if let Some(&prev) = ks.last() {
                    if k <= prev {
                        return Err(BasisError::DuplicateKnots(k));
                    }
                }
                ks.push(k);
            }
            ks
        }
    };
    // Interior knots equal to the boundary can arise from quantile placement.
    if interior.iter().any(|&k| k <= lo || k >= hi) {
        return Err(BasisError::DuplicateKnots(lo));
    }
    KnotVector::new(lo, hi, interior)
}

/// Truncated-power basis at `z`: `[1, z, .., z^l, (z-k_1)_+^l, ..]`.
/// For degree 0 the truncated terms are step indicators `I(z >= k)`.
pub fn tp_basis(z: f64, spec: &BasisSpec) -> Vec<f64> {
    debug_assert_eq!(spec.family, Family::TruncatedPower);
    let l = spec.degree;
    let mut out = Vec::with_capacity(spec.dimension());
    for p in 0..=l {
        out.push(z.powi(p as i32));
    }
    for &k in spec.knots.interior() {
        if z >= k {
            out.push(if l == 0 { 1.0 } else { (z - k).powi(l as i32) });
        } else {
            out.push(0.0);
        }
    }
    out
}

/// All `d` degree-`l` B-splines at `z`, evaluated by the degree recursion over
/// the extended knot vector. The top interval is right-closed so the partition
/// of unity holds on the closed domain.
pub fn bspline_basis(z: f64, spec: &BasisSpec) -> Result<Vec<f64>, BasisError> {
    debug_assert_eq!(spec.family, Family::BSpline);
    if !spec.knots.contains(z) {
        return Err(BasisError::OutOfDomain(z, spec.knots.lo(), spec.knots.hi()));
    }
    let t = spec.knots.extended(spec.degree);
    Ok(bspline_all(z, &t, spec.degree, spec.knots.hi()))
}

/// Degree recursion over an explicit knot sequence, returning the
/// `t.len() - degree - 1` basis values.
fn bspline_all(z: f64, t: &[f64], degree: usize, hi: f64) -> Vec<f64> {
    let n0 = t.len() - 1;
    let mut b: Vec<f64> = (0..n0)
        .map(|j| {
            // At z == hi only the interval ending at hi is active; the
            // exterior interval starting at hi must stay off.
            let inside = if z == hi {
                t[j] < z && t[j + 1] == hi
            } else {
                t[j] <= z && z < t[j + 1]
            };
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for p in 1..=degree {
        let np = t.len() - 1 - p;
        let mut next = vec![0.0; np];
        for j in 0..np {
            let mut v = 0.0;
            if b[j] != 0.0 && t[j + p] > t[j] {
                v += (z - t[j]) / (t[j + p] - t[j]) * b[j];
            }
            if b[j + 1] != 0.0 && t[j + p + 1] > t[j + 1] {
                v += (t[j + p + 1] - z) / (t[j + p + 1] - t[j + 1]) * b[j + 1];
            }
            next[j] = v;
        }
        b = next;
    }
    b
}

/// Derivative of each degree-`l` B-spline at `z` via the degree-`(l-1)` basis.
pub fn bspline_derivative(z: f64, spec: &BasisSpec) -> Result<Vec<f64>, BasisError> {
    debug_assert_eq!(spec.family, Family::BSpline);
    let l = spec.degree;
    if l == 0 {
        return Err(BasisError::DegreeZero);
    }
    if !spec.knots.contains(z) {
        return Err(BasisError::OutOfDomain(z, spec.knots.lo(), spec.knots.hi()));
    }
    let t = spec.knots.extended(l);
    let lower = bspline_all(z, &t, l - 1, spec.knots.hi());
    let d = spec.dimension();
    let lf = l as f64;
    let mut out = vec![0.0; d];
    for j in 0..d {
        let mut v = 0.0;
        if t[j + l] > t[j] {
            v += lower[j] / (t[j + l] - t[j]);
        }
        if t[j + l + 1] > t[j + 1] {
            v -= lower[j + 1] / (t[j + l + 1] - t[j + 1]);
        }
        out[j] = lf * v;
    }
    Ok(out)
}

/// Derivative of the fitted spline at `z`, written with first differences of
/// the coefficients against the degree-`(l-1)` basis.
pub fn spline_derivative(z: f64, gamma: &[f64], spec: &BasisSpec) -> Result<f64, BasisError> {
    let d = spec.dimension();
    if gamma.len() != d {
        return Err(BasisError::CoefficientLength {
            got: gamma.len(),
            want: d,
        });
    }
    let l = spec.degree;
    if l == 0 {
        return Err(BasisError::DegreeZero);
    }
    if !spec.knots.contains(z) {
        return Err(BasisError::OutOfDomain(z, spec.knots.lo(), spec.knots.hi()));
    }
    let t = spec.knots.extended(l);
    let lower = bspline_all(z, &t, l - 1, spec.knots.hi());
    let lf = l as f64;
    // Sum over interior lower-degree splines: the j-th term carries the
    // difference gamma_j - gamma_{j-1} and the support width t[j+l] - t[j].
    let mut acc = 0.0;
    for j in 1..d {
        let w = t[j + l] - t[j];
        if w > 0.0 {
            acc += (gamma[j] - gamma[j - 1]) / w * lower[j];
        }
    }
    Ok(lf * acc)
}

/// `n x d` matrix of basis evaluations; row `i` is the basis vector at `z_i`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub values: DMatrix<f64>,
    pub spec: BasisSpec,
}

pub fn design_matrix(z: &[f64], spec: &BasisSpec) -> Result<DesignMatrix, BasisError> {
    let n = z.len();
    let d = spec.dimension();
    let mut values = DMatrix::zeros(n, d);
    for (i, &zi) in z.iter().enumerate() {
        let row = spec.evaluate(zi).map_err(|e| match e {
            BasisError::OutOfDomain(v, _, _) => BasisError::OutOfDomainAt { index: i, value: v },
            other => other,
        })?;
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(DesignMatrix {
        values,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knots(lo: f64, hi: f64, interior: &[f64]) -> KnotVector {
        KnotVector::new(lo, hi, interior.to_vec()).unwrap()
    }

    #[test]
    fn equidistant_placement_midpoint() {
        let z = [0.0, 10.0];
        let kv = place_knots(&z, 1, KnotPlacement::Equidistant).unwrap();
        assert_eq!(kv.interior(), &[5.0]);
        let kv = place_knots(&z, 4, KnotPlacement::Equidistant).unwrap();
        assert_eq!(kv.interior(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn degenerate_domain_rejected() {
        let z = [0.0, 0.0, 0.0];
        assert!(matches!(
            place_knots(&z, 2, KnotPlacement::Equidistant),
            Err(BasisError::DegenerateDomain(_))
        ));
    }

    #[test]
    fn tp_basis_truncation() {
        let spec = BasisSpec::new(Family::TruncatedPower, 1, knots(0.0, 10.0, &[5.0]));
        assert_eq!(tp_basis(3.0, &spec), vec![1.0, 3.0, 0.0]);
        assert_eq!(tp_basis(7.0, &spec), vec![1.0, 7.0, 2.0]);
        let spec = BasisSpec::new(Family::TruncatedPower, 2, knots(0.0, 10.0, &[2.0, 4.0]));
        assert_eq!(tp_basis(4.0, &spec), vec![1.0, 4.0, 16.0, 4.0, 0.0]);
    }

    #[test]
    fn bspline_degree_zero_indicator() {
        let spec = BasisSpec::new(Family::BSpline, 0, knots(0.0, 2.0, &[1.0]));
        assert_eq!(bspline_basis(0.5, &spec).unwrap(), vec![1.0, 0.0]);
        // right-closed top interval
        assert_eq!(bspline_basis(2.0, &spec).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn bspline_tent_peak() {
        let spec = BasisSpec::new(Family::BSpline, 1, knots(0.0, 2.0, &[1.0]));
        let b = bspline_basis(1.0, &spec).unwrap();
        assert_eq!(b, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn bspline_quadratic_hand_values() {
        let spec = BasisSpec::new(Family::BSpline, 2, knots(0.0, 3.0, &[1.0, 2.0]));
        let b = bspline_basis(1.5, &spec).unwrap();
        let sum: f64 = b.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let active: Vec<f64> = b.iter().cloned().filter(|v| *v != 0.0).collect();
        assert_eq!(active.len(), 3);
        assert!((active[0] - 0.125).abs() < 1e-12);
        assert!((active[1] - 0.75).abs() < 1e-12);
        assert!((active[2] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn bspline_out_of_domain() {
        let spec = BasisSpec::new(Family::BSpline, 2, knots(0.0, 3.0, &[1.0, 2.0]));
        assert!(matches!(
            bspline_basis(3.5, &spec),
            Err(BasisError::OutOfDomain(_, _, _))
        ));
    }

    #[test]
    fn partition_of_unity_and_support() {
        for l in 0..=3usize {
            for k_int in [0usize, 1, 5] {
                let interior: Vec<f64> = (1..=k_int)
                    .map(|j| j as f64 * 10.0 / (k_int as f64 + 1.0))
                    .collect();
                let spec = BasisSpec::new(Family::BSpline, l, knots(0.0, 10.0, &interior));
                for step in 0..=100 {
                    let z = step as f64 / 10.0;
                    let b = bspline_basis(z, &spec).unwrap();
                    let sum: f64 = b.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-10, "l={l} k={k_int} z={z}");
                    assert!(b.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
                    let nnz = b.iter().filter(|v| **v != 0.0).count();
                    assert!(nnz <= l + 1);
                }
            }
        }
    }

    /// Direct piecewise closed forms for the uniform quadratic B-spline on
    /// integer knots, used as an independent oracle for the recursion.
    fn uniform_quadratic(u: f64) -> f64 {
        // support [0, 3) in knot units
        if (0.0..1.0).contains(&u) {
            0.5 * u * u
        } else if (1.0..2.0).contains(&u) {
            0.5 * (-2.0 * u * u + 6.0 * u - 3.0)
        } else if (2.0..3.0).contains(&u) {
            0.5 * (3.0 - u) * (3.0 - u)
        } else {
            0.0
        }
    }

    #[test]
    fn recursion_matches_closed_form_quadratic() {
        let interior: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        let spec = BasisSpec::new(Family::BSpline, 2, knots(0.0, 5.0, &interior));
        let t = spec.knots.extended(2);
        for step in 0..50 {
            let z = step as f64 * 0.0999;
            let b = bspline_basis(z, &spec).unwrap();
            for (j, &bj) in b.iter().enumerate() {
                let expect = uniform_quadratic(z - t[j]);
                assert!((bj - expect).abs() < 1e-12, "j={j} z={z}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for l in 1..=3usize {
            let interior = vec![2.5, 5.0, 7.5];
            let spec = BasisSpec::new(Family::BSpline, l, knots(0.0, 10.0, &interior));
            let h = 1e-6;
            for step in 1..40 {
                let z = 0.13 + step as f64 * 0.24;
                let analytic = bspline_derivative(z, &spec).unwrap();
                let up = bspline_basis(z + h, &spec).unwrap();
                let dn = bspline_basis(z - h, &spec).unwrap();
                for j in 0..spec.dimension() {
                    let fd = (up[j] - dn[j]) / (2.0 * h);
                    let scale = analytic[j].abs().max(1.0);
                    assert!((analytic[j] - fd).abs() / scale < 1e-5, "l={l} z={z} j={j}");
                }
                // derivative of the unity partition is zero
                let sum: f64 = analytic.iter().sum();
                assert!(sum.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tent_derivative_slope() {
        let spec = BasisSpec::new(Family::BSpline, 1, knots(0.0, 2.0, &[1.0]));
        let d = bspline_derivative(0.5, &spec).unwrap();
        // middle tent rises with slope +1 on [0,1)
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spline_derivative_constant_coefficients() {
        let spec = BasisSpec::new(Family::BSpline, 2, knots(0.0, 10.0, &[2.0, 5.0, 8.0]));
        let gamma = vec![3.0; spec.dimension()];
        for step in 0..20 {
            let z = step as f64 * 0.5;
            assert!(spline_derivative(z, &gamma, &spec).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn spline_derivative_equals_dot_with_basis_derivative() {
        let spec = BasisSpec::new(Family::BSpline, 3, knots(0.0, 10.0, &[2.0, 4.0, 6.0, 8.0]));
        let gamma: Vec<f64> = (0..spec.dimension()).map(|j| ((j * 37) % 11) as f64 - 4.0).collect();
        for step in 0..=40 {
            let z = step as f64 * 0.25;
            let via_diff = spline_derivative(z, &gamma, &spec).unwrap();
            let db = bspline_derivative(z, &spec).unwrap();
            let via_dot: f64 = gamma.iter().zip(&db).map(|(g, d)| g * d).sum();
            let scale = via_dot.abs().max(1.0);
            assert!((via_diff - via_dot).abs() / scale < 1e-10, "z={z}");
        }
    }

    #[test]
    fn design_matrix_dimensions() {
        let z: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let kv = place_knots(&z, 41, KnotPlacement::Equidistant).unwrap();
        let tp = BasisSpec::new(Family::TruncatedPower, 2, kv.clone());
        let bs = BasisSpec::new(Family::BSpline, 2, kv);
        assert_eq!(tp.dimension(), 44);
        assert_eq!(bs.dimension(), 44);
        let m = design_matrix(&z, &tp).unwrap();
        assert_eq!(m.values.shape(), (10, 44));
    }

    #[test]
    fn design_matrix_reports_offending_index() {
        let spec = BasisSpec::new(Family::BSpline, 1, knots(0.0, 1.0, &[]));
        let err = design_matrix(&[0.5, 1.5], &spec).unwrap_err();
        assert!(matches!(err, BasisError::OutOfDomainAt { index: 1, .. }));
    }
}
