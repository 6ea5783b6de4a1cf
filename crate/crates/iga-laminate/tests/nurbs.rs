//! Geometry-level validation of the NURBS machinery: frozen-value oracles
//! for the rational basis and its physical derivatives on the curved disk
//! patch, exactness of the circular boundary, reproduction of polynomial
//! fields, and consistency of refinement/elevation/inversion.

mod common;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use common::{collocation_fit, field_derivs, field_value};
use iga_laminate::nurbs::{make_circle_patch, make_rectangle_patch};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Frozen reference values agree with an exact symbolic evaluation of the
/// rational basis; the f64 pipeline reproduces them to roundoff.
const FROZEN_TOL: f64 = 1e-12;

#[test]
fn disk_center_basis_frozen_values() {
    // Unit-disk biquadratic patch, basis function of the center control
    // point (net index (1,1), flat 4), evaluated at (ξ, η) = (0.3, 0.45).
    // All reference numbers were computed symbolically from the quotient
    // rule and the exact 3×3 second-derivative chain-rule system.
    let patch = make_circle_patch(1.0, 2).unwrap();
    let rec = patch.physical_basis(0.3, 0.45).unwrap();
    let k = rec.indices.iter().position(|&idx| idx == 4).unwrap();

    assert_relative_eq!(rec.r[k], 0.24350315510693896, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_xi[k], 0.46448380666823963, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_eta[k], 0.10105820569937291, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_xixi[k], -2.3198695629021509, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_etaeta[k], -2.0189453506690828, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_xieta[k], 0.16604557661488595, epsilon = FROZEN_TOL);

    assert_relative_eq!(rec.r_x[k], 0.23360814581996998, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_y[k], 0.05582370628287978, epsilon = FROZEN_TOL);
    assert_relative_eq!(rec.r_xx[k], -0.58558051772890819, epsilon = 1e-11);
    assert_relative_eq!(rec.r_yy[k], -0.57446484631276228, epsilon = 1e-11);
    assert_abs_diff_eq!(rec.r_xy[k], 0.00490502060970126, epsilon = 1e-11);

    assert_relative_eq!(rec.det_j, 3.8762459164137264, epsilon = FROZEN_TOL);
}

#[test]
fn disk_jacobian_frozen_samples() {
    let patch = make_circle_patch(1.0, 2).unwrap();
    let det = |xi: f64, eta: f64| patch.physical_basis(xi, eta).unwrap().det_j;
    assert_relative_eq!(det(0.5, 0.5), 4.0, epsilon = FROZEN_TOL);
    assert_relative_eq!(det(0.05, 0.05), 0.86349288837660795, epsilon = FROZEN_TOL);
    assert_relative_eq!(det(0.95, 0.5), 3.4441038841776559, epsilon = FROZEN_TOL);
}

#[test]
fn disk_boundary_lies_exactly_on_circle() {
    // The rational parameterization is exact: every boundary point satisfies
    // x² + y² = r² to roundoff, at the base degree, after elevation, and
    // after knot refinement.
    for (r, p, refine) in [(1.0, 2, 1), (2.5, 3, 1), (2.5, 3, 5)] {
        let mut patch = make_circle_patch(r, p).unwrap();
        patch = patch.h_refine(refine, refine).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            for (xi, eta) in [(t, 0.0), (t, 1.0), (0.0, t), (1.0, t)] {
                let (x, y) = patch.evaluate(xi, eta).unwrap();
                assert_abs_diff_eq!(x * x + y * y, r * r, epsilon = 1e-12 * r * r);
            }
        }
        // Center of the parameter square maps to the disk center.
        let (cx, cy) = patch.evaluate(0.5, 0.5).unwrap();
        assert!(cx.hypot(cy) < 1e-13 * r);
    }
}

#[test]
fn partition_of_unity_and_derivative_nullity() {
    // Σ R_A = 1 to 1e-12 and every derivative array sums to zero to 1e-9,
    // on both the affine rectangle and the curved disk. The derivative bound
    // allows for the ~1e3 magnitudes of individual second derivatives on the
    // refined mesh.
    let rect = make_rectangle_patch(2.0, 3.0, 3).unwrap().h_refine(6, 6).unwrap();
    let disk = make_circle_patch(1.5, 3).unwrap().h_refine(6, 6).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0010);
    for patch in [&rect, &disk] {
        for _ in 0..100 {
            let xi: f64 = rng.random_range(0.01..0.99);
            let eta: f64 = rng.random_range(0.01..0.99);
            let rec = patch.physical_basis(xi, eta).unwrap();
            let sum = |v: &[f64]| v.iter().sum::<f64>();
            assert!((sum(&rec.r) - 1.0).abs() < 1e-12);
            for d in [
                &rec.r_xi, &rec.r_eta, &rec.r_xixi, &rec.r_etaeta, &rec.r_xieta,
                &rec.r_x, &rec.r_y, &rec.r_xx, &rec.r_yy, &rec.r_xy,
            ] {
                assert!(sum(d).abs() < 1e-9, "derivative sum {} at ({xi}, {eta})", sum(d));
            }
        }
    }
}

#[test]
fn geometry_is_preserved_by_elevation_and_refinement() {
    let base = make_circle_patch(2.0, 2).unwrap();
    let refined = base.elevate_degree(4, 4).unwrap().h_refine(7, 7).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0011);
    for _ in 0..200 {
        let xi: f64 = rng.random_range(0.0..=1.0);
        let eta: f64 = rng.random_range(0.0..=1.0);
        let (x0, y0) = base.evaluate(xi, eta).unwrap();
        let (x1, y1) = refined.evaluate(xi, eta).unwrap();
        assert_abs_diff_eq!(x0, x1, epsilon = 1e-12);
        assert_abs_diff_eq!(y0, y1, epsilon = 1e-12);
    }
}

#[test]
fn refinement_counts_match_analysis_mesh() {
    // The production mesh: cubic patch with 11×11 spans carries 14×14
    // control points.
    for patch in [
        make_rectangle_patch(1.0, 1.0, 3).unwrap(),
        make_circle_patch(1.0, 3).unwrap(),
    ] {
        let refined = patch.h_refine(11, 11).unwrap();
        assert_eq!(refined.knot_u().n_spans(), 11);
        assert_eq!(refined.knot_v().n_spans(), 11);
        assert_eq!(refined.net().dims(), (14, 14));
        assert_eq!(refined.n_basis(), 196);
    }
}

#[test]
fn affine_patch_derivatives_scale_with_side_lengths() {
    let (lx, ly) = (2.0, 3.0);
    let patch = make_rectangle_patch(lx, ly, 3).unwrap().h_refine(4, 4).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0012);
    for _ in 0..50 {
        let xi: f64 = rng.random_range(0.0..=1.0);
        let eta: f64 = rng.random_range(0.0..=1.0);
        let rec = patch.physical_basis(xi, eta).unwrap();
        assert_relative_eq!(rec.det_j, lx * ly, epsilon = 1e-12);
        for k in 0..rec.indices.len() {
            assert_abs_diff_eq!(rec.r_x[k], rec.r_xi[k] / lx, epsilon = 1e-12);
            assert_abs_diff_eq!(rec.r_y[k], rec.r_eta[k] / ly, epsilon = 1e-12);
            assert_abs_diff_eq!(rec.r_xx[k], rec.r_xixi[k] / (lx * lx), epsilon = 1e-10);
            assert_abs_diff_eq!(rec.r_yy[k], rec.r_etaeta[k] / (ly * ly), epsilon = 1e-10);
            assert_abs_diff_eq!(rec.r_xy[k], rec.r_xieta[k] / (lx * ly), epsilon = 1e-10);
        }
    }
}

#[test]
fn quadratic_field_reproduced_exactly_on_affine_patch() {
    // w = x² lies in the cubic spline space of the affine patch; Greville
    // interpolation recovers it, and the physical derivatives are exact.
    let patch = make_rectangle_patch(2.0, 1.5, 3).unwrap().h_refine(5, 5).unwrap();
    let coeffs = collocation_fit(&patch, |x, _| x * x);
    let mut rng = StdRng::seed_from_u64(0x5eed_0013);
    for _ in 0..50 {
        let xi: f64 = rng.random_range(0.0..=1.0);
        let eta: f64 = rng.random_range(0.0..=1.0);
        let (x, _) = patch.evaluate(xi, eta).unwrap();
        let (w, wx, wy, wxx, wyy, wxy) = field_derivs(&patch, &coeffs, xi, eta);
        assert_abs_diff_eq!(w, x * x, epsilon = 1e-10);
        assert_abs_diff_eq!(wx, 2.0 * x, epsilon = 1e-9);
        assert_abs_diff_eq!(wy, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(wxx, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(wyy, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(wxy, 0.0, epsilon = 1e-8);
    }
}

#[test]
fn linear_field_reproduced_exactly_on_disk() {
    // With coefficients equal to the control-point x-coordinates, the spline
    // field is exactly w = x (that sum is the geometry map itself). Its
    // physical gradient is (1, 0) and its Hessian vanishes — a sharp test of
    // the curvature correction in the second-derivative chain rule.
    let patch = make_circle_patch(2.0, 3).unwrap().h_refine(6, 6).unwrap();
    let coeffs: Vec<f64> = patch.net().points().iter().map(|p| p.x).collect();
    let mut rng = StdRng::seed_from_u64(0x5eed_0014);
    for _ in 0..100 {
        let xi: f64 = rng.random_range(0.02..0.98);
        let eta: f64 = rng.random_range(0.02..0.98);
        let (x, _) = patch.evaluate(xi, eta).unwrap();
        let (w, wx, wy, wxx, wyy, wxy) = field_derivs(&patch, &coeffs, xi, eta);
        assert_abs_diff_eq!(w, x, epsilon = 1e-12 * 2.0);
        assert_abs_diff_eq!(wx, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(wy, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(wxx, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(wyy, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(wxy, 0.0, epsilon = 1e-8);
    }
}

#[test]
fn chain_rule_matches_physical_space_finite_differences() {
    // Random spline field on the curved disk: compare chain-rule physical
    // derivatives against centered finite differences taken in *physical*
    // space (each stencil point found by Newton inversion). First
    // derivatives agree to ~h²; second derivatives to FD truncation.
    let patch = make_circle_patch(1.0, 3).unwrap().h_refine(3, 3).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0015);
    let coeffs: Vec<f64> = (0..patch.n_basis())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let w_at = |x: f64, y: f64| -> f64 {
        let (xi, eta) = patch.invert_point(x, y).unwrap();
        field_value(&patch, &coeffs, xi, eta)
    };
    let h = 1e-4;
    for _ in 0..12 {
        let xi: f64 = rng.random_range(0.25..0.75);
        let eta: f64 = rng.random_range(0.25..0.75);
        let (x, y) = patch.evaluate(xi, eta).unwrap();
        let (_, wx, wy, wxx, wyy, wxy) = field_derivs(&patch, &coeffs, xi, eta);

        let fd_x = (w_at(x + h, y) - w_at(x - h, y)) / (2.0 * h);
        let fd_y = (w_at(x, y + h) - w_at(x, y - h)) / (2.0 * h);
        assert_abs_diff_eq!(wx, fd_x, epsilon = 1e-6);
        assert_abs_diff_eq!(wy, fd_y, epsilon = 1e-6);

        let w0 = w_at(x, y);
        let fd_xx = (w_at(x + h, y) - 2.0 * w0 + w_at(x - h, y)) / (h * h);
        let fd_yy = (w_at(x, y + h) - 2.0 * w0 + w_at(x, y - h)) / (h * h);
        let fd_xy = (w_at(x + h, y + h) - w_at(x + h, y - h) - w_at(x - h, y + h)
            + w_at(x - h, y - h))
            / (4.0 * h * h);
        assert_abs_diff_eq!(wxx, fd_xx, epsilon = 2e-4);
        assert_abs_diff_eq!(wyy, fd_yy, epsilon = 2e-4);
        assert_abs_diff_eq!(wxy, fd_xy, epsilon = 2e-4);
    }
}

#[test]
fn invert_point_roundtrips_random_interior_points() {
    let disk = make_circle_patch(1.7, 3).unwrap().h_refine(4, 4).unwrap();
    let rect = make_rectangle_patch(2.0, 1.0, 3).unwrap().h_refine(4, 4).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0016);
    for patch in [&disk, &rect] {
        for _ in 0..50 {
            let xi: f64 = rng.random_range(0.05..0.95);
            let eta: f64 = rng.random_range(0.05..0.95);
            let (x, y) = patch.evaluate(xi, eta).unwrap();
            let (xi2, eta2) = patch.invert_point(x, y).unwrap();
            let (x2, y2) = patch.evaluate(xi2, eta2).unwrap();
            assert_abs_diff_eq!(x, x2, epsilon = 1e-10);
            assert_abs_diff_eq!(y, y2, epsilon = 1e-10);
        }
    }
}

#[test]
fn refined_disk_has_positive_jacobian_at_quadrature_points() {
    // The analysis never evaluates at the parametric corners; over all spans
    // of the production disk mesh every 4×4 Gauss point has det J > 0.
    let patch = make_circle_patch(1.0, 3).unwrap().h_refine(11, 11).unwrap();
    let rule = iga_laminate::quadrature::GaussRule::new(4);
    for &(_, ua, ub) in &patch.knot_u().spans() {
        for &(_, va, vb) in &patch.knot_v().spans() {
            for &(xi, _) in &rule.mapped(ua, ub) {
                for &(eta, _) in &rule.mapped(va, vb) {
                    let rec = patch.physical_basis(xi, eta).unwrap();
                    assert!(rec.det_j > 0.0, "det J = {} at ({xi}, {eta})", rec.det_j);
                }
            }
        }
    }
}
