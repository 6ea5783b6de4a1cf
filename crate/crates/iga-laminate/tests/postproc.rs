//! Stress recovery, thickness profiles, and benchmark normalizations,
//! checked against closed-form oracles and a published reference value.

mod common;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use iga_laminate::assembly::{
    assemble_load, bc::Planform, BcPreset, BoundarySet, Mesh, TransverseLoad,
};
use iga_laminate::kinematics::{stress_resultants, StressResultants};
use iga_laminate::laminate::{distribution, presets, Lamina, Laminate};
use iga_laminate::nurbs::make_rectangle_patch;
use iga_laminate::postproc::{
    point_displacement, point_strain, point_stress, thickness_profile, NormalizationRule,
};
use iga_laminate::quadrature::GaussRule;
use iga_laminate::solvers::{solve_static, FeModel, IterationConfig, IterationScheme};
use nalgebra::{SVector, Vector2, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Thickness integration of the recovered pointwise stresses must reproduce
/// the constitutive resultants; both sides are closed-form polynomials in z
/// integrated exactly, so only roundoff separates them.
const RESULTANT_TOL: f64 = 1e-8;

/// Published-value tolerances from the reference solutions: 1% on the
/// center deflection, 2.5% on the recovered surface stress.
const DEFLECTION_TOL: f64 = 0.01;
const STRESS_TOL: f64 = 0.025;

fn random_state(n_nodes: usize, seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..5 * n_nodes)
        .map(|_| rng.random_range(-amplitude..amplitude))
        .collect()
}

#[test]
fn zero_state_recovers_zero_everywhere() {
    let patch = make_rectangle_patch(1.0, 1.0, 3).unwrap().h_refine(4, 4).unwrap();
    let lam = Laminate::from_layup(presets::material_iii(1.0e6), &[0.0, 90.0], 0.05).unwrap();
    let (n_u, n_v) = patch.net().dims();
    let q = vec![0.0; 5 * n_u * n_v];

    let d = point_displacement(&patch, &q, 0.3, 0.7).unwrap();
    assert_eq!((d.u0, d.v0, d.w, d.beta_x, d.beta_y), (0.0, 0.0, 0.0, 0.0, 0.0));

    let s = point_stress(&patch, &lam, &q, 0.3, 0.7, 0.01).unwrap();
    assert_eq!(s.sigma, Vector3::zeros());
    assert_eq!(s.tau, Vector2::zeros());
}

#[test]
fn constant_fields_interpolate_exactly() {
    // Partition of unity: control values set to a constant per slot must
    // evaluate to that constant anywhere on the patch.
    let patch = make_rectangle_patch(2.0, 1.0, 3).unwrap().h_refine(5, 4).unwrap();
    let (n_u, n_v) = patch.net().dims();
    let consts = [0.7, -0.3, 1.9, 0.02, -4.0];
    let mut q = vec![0.0; 5 * n_u * n_v];
    for node in 0..n_u * n_v {
        for c in 0..5 {
            q[5 * node + c] = consts[c];
        }
    }
    for (x, y) in [(0.1, 0.15), (1.0, 0.5), (1.93, 0.88)] {
        let d = point_displacement(&patch, &q, x, y).unwrap();
        assert_relative_eq!(d.u0, consts[0], max_relative = 1e-12);
        assert_relative_eq!(d.v0, consts[1], max_relative = 1e-12);
        assert_relative_eq!(d.w, consts[2], max_relative = 1e-12);
        assert_relative_eq!(d.beta_x, consts[3], max_relative = 1e-12);
        assert_relative_eq!(d.beta_y, consts[4], max_relative = 1e-12);
    }
}

#[test]
fn out_of_range_requests_are_rejected() {
    let patch = make_rectangle_patch(1.0, 1.0, 3).unwrap().h_refine(3, 3).unwrap();
    let lam = Laminate::from_layup(presets::material_iii(1.0e6), &[0.0], 0.05).unwrap();
    let (n_u, n_v) = patch.net().dims();
    let q = vec![0.0; 5 * n_u * n_v];

    // z beyond the surfaces.
    assert!(point_stress(&patch, &lam, &q, 0.5, 0.5, 0.05).is_err());
    assert!(point_stress(&patch, &lam, &q, 0.5, 0.5, -0.03).is_err());
    // Wrong state length.
    assert!(point_displacement(&patch, &q[..10], 0.5, 0.5).is_err());
    // Profile with too few samples.
    assert!(thickness_profile(&patch, &lam, &q, 0.5, 0.5, 1).is_err());
}

#[test]
fn surface_shear_tractions_vanish_exactly() {
    let patch = make_rectangle_patch(1.0, 1.0, 3).unwrap().h_refine(4, 4).unwrap();
    let lam =
        Laminate::from_layup(presets::material_iii(1.0e6), &[0.0, 90.0, 90.0, 0.0], 0.137).unwrap();
    let (n_u, n_v) = patch.net().dims();
    let q = random_state(n_u * n_v, 0x5eed_0040, 0.05);
    let h = lam.thickness();

    for (x, y) in [(0.5, 0.5), (0.21, 0.68)] {
        for z in [-h / 2.0, h / 2.0] {
            let s = point_stress(&patch, &lam, &q, x, y, z).unwrap();
            assert_eq!(s.tau.x, 0.0, "τ_xz at z = {z}");
            assert_eq!(s.tau.y, 0.0, "τ_yz at z = {z}");
        }
        let profile = thickness_profile(&patch, &lam, &q, x, y, 5).unwrap();
        let first = profile.samples.first().unwrap();
        let last = profile.samples.last().unwrap();
        assert_eq!(first.z, -h / 2.0);
        assert_eq!(last.z, h / 2.0);
        assert_eq!(first.tau, Vector2::zeros());
        assert_eq!(last.tau, Vector2::zeros());
    }
}

#[test]
fn profile_duplicates_interfaces_and_orders_samples() {
    let patch = make_rectangle_patch(1.0, 1.0, 3).unwrap().h_refine(3, 3).unwrap();
    let lam =
        Laminate::from_layup(presets::material_iii(1.0e6), &[0.0, 90.0, 0.0], 0.12).unwrap();
    let (n_u, n_v) = patch.net().dims();
    let q = random_state(n_u * n_v, 0x5eed_0041, 0.05);

    let n_per = 4;
    let profile = thickness_profile(&patch, &lam, &q, 0.4, 0.6, n_per).unwrap();
    assert_eq!(profile.samples.len(), 3 * n_per);

    // Interface z duplicated between consecutive layers, with the in-plane
    // stress jumping because the 0°/90° stiffnesses differ.
    for k in 0..2 {
        let below = &profile.samples[k * n_per + n_per - 1];
        let above = &profile.samples[(k + 1) * n_per];
        assert_eq!(below.z, above.z);
        assert_eq!(below.layer, k);
        assert_eq!(above.layer, k + 1);
        assert!(
            (below.sigma.x - above.sigma.x).abs() > 1e-6 * below.sigma.x.abs(),
            "expected an in-plane stress jump at the interface"
        );
    }

    // Monotone non-decreasing z overall.
    for pair in profile.samples.windows(2) {
        assert!(pair[1].z >= pair[0].z);
    }
}

#[test]
fn pure_bending_profile_is_antisymmetric_and_zero_at_midplane() {
    // Single isotropic layer with a manufactured quadratic deflection
    // w = (x−½)²(y−½)² evaluated at the plate center: the deflection
    // gradient vanishes there, leaving a pure curvature state, so
    // σ_xx(z) must be odd in z and vanish at the mid-plane.
    let patch = make_rectangle_patch(1.0, 1.0, 3).unwrap().h_refine(5, 5).unwrap();
    let lam = Laminate::from_layup(Lamina::isotropic(1.0e7, 0.3, 0.0).unwrap(), &[0.0], 0.05)
        .unwrap();
    let (n_u, n_v) = patch.net().dims();
    let w_coeffs = common::collocation_fit(&patch, |x, y| {
        (x - 0.5).powi(2) * (y - 0.5).powi(2)
    });
    let mut q = vec![0.0; 5 * n_u * n_v];
    for (node, &c) in w_coeffs.iter().enumerate() {
        q[5 * node + 2] = c;
    }

    let h = lam.thickness();
    let strain = point_strain(&patch, &q, 0.5, 0.5).unwrap();
    assert_abs_diff_eq!(strain.theta.norm(), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(strain.eps_m.norm(), 0.0, epsilon = 1e-12);

    let mid = point_stress(&patch, &lam, &q, 0.5, 0.5, 0.0).unwrap();
    assert_abs_diff_eq!(mid.sigma.x, 0.0, epsilon = 1e-12);

    for frac in [0.2, 0.35, 0.5] {
        let z = frac * h;
        let top = point_stress(&patch, &lam, &q, 0.5, 0.5, z).unwrap();
        let bot = point_stress(&patch, &lam, &q, 0.5, 0.5, -z).unwrap();
        assert_relative_eq!(top.sigma.x, -bot.sigma.x, max_relative = 1e-10);
        assert_relative_eq!(top.sigma.y, -bot.sigma.y, max_relative = 1e-10);
    }
}

#[test]
fn thickness_integration_reproduces_resultants() {
    // N = ∫σ dz, M = ∫σ·z dz, P = ∫σ·f dz, Q = ∫τ·f′ dz recovered from
    // pointwise stresses must match the constitutive resultants D̂·ε̂.
    // All integrands are polynomials in z of degree ≤ 7 per layer, which a
    // 4-point Gauss rule integrates exactly.
    let patch = make_rectangle_patch(1.0, 1.0, 3).unwrap().h_refine(4, 4).unwrap();
    let lam = Laminate::from_layup(
        presets::material_iv(1.0e6),
        &[0.0, 45.0, -45.0, 90.0],
        0.08,
    )
    .unwrap();
    let (n_u, n_v) = patch.net().dims();
    let q = random_state(n_u * n_v, 0x5eed_0042, 0.04);
    let h = lam.thickness();

    let strain = point_strain(&patch, &q, 0.37, 0.62).unwrap();
    let direct = stress_resultants(&lam.stiffness(), &strain);

    let rule = GaussRule::new(4);
    let mut integrated = SVector::<f64, 11>::zeros();
    for layer in lam.layers() {
        for (z, wt) in rule.mapped(layer.z_bot, layer.z_top) {
            let s = point_stress(&patch, &lam, &q, 0.37, 0.62, z).unwrap();
            let (f, fp) = distribution(z, h).unwrap();
            for i in 0..3 {
                integrated[i] += wt * s.sigma[i];
                integrated[3 + i] += wt * z * s.sigma[i];
                integrated[6 + i] += wt * f * s.sigma[i];
            }
            integrated[9] += wt * fp * s.tau.x;
            integrated[10] += wt * fp * s.tau.y;
        }
    }
    let from_integration = StressResultants::from_vector(&integrated);

    let scale = direct.to_vector().norm();
    assert!(scale > 0.0);
    assert!(
        (direct.to_vector() - from_integration.to_vector()).norm() < RESULTANT_TOL * scale,
        "resultant mismatch: direct {:?} vs integrated {:?}",
        direct,
        from_integration
    );
}

#[test]
fn kirchhoff_circle_deflection_coefficient_matches_closed_form() {
    // Kirchhoff center deflection of a clamped circular plate,
    // w = q0·R⁴/(64·D) with D = E·h³/(12(1−ν²)). At load parameter
    // P̄ = q0·R⁴/(E·h⁴) = 1 the normalized deflection is the closed form
    // w̄ = 12(1−ν²)/64, ≈ 0.1706 for ν = 0.3, which must bracket the
    // (softer-looking but membrane-stiffened) nonlinear value 0.169 from
    // above.
    let (e, r, h, nu) = (1.0e7, 2.5, 0.05, 0.3);
    let rule = NormalizationRule::ClampedCircle { e, r, h };
    let q0 = rule.load_inverse(1.0);
    let d = e * h.powi(3) / (12.0 * (1.0 - nu * nu));
    let w_linear = q0 * r.powi(4) / (64.0 * d);
    let wbar = rule.deflection(w_linear, q0);
    assert_relative_eq!(wbar, 12.0 * (1.0 - nu * nu) / 64.0, max_relative = 1e-14);
    assert_relative_eq!(wbar, 0.1706, max_relative = 1e-3);
    assert!(wbar > 0.169, "linear Kirchhoff value must exceed the nonlinear one");
}

#[test]
fn load_normalized_deflection_is_consistent_with_thickness_normalization() {
    // ŵ = 100·w·E₂h³/(q₀L⁴) and w̄ = w/h satisfy w̄ = (ŵ/100)·P̄ for any
    // state; the published thick-plate linear value ŵ = 1.954 at P̄ = 50
    // therefore corresponds to w̄ = 0.977.
    let (e2, l, h) = (1.0e6, 1.0, 0.1);
    let composite = NormalizationRule::Composite { e2, l, h };
    let hat = NormalizationRule::LoadNormalized { e2, l, h };

    let pbar = 50.0;
    let q0 = composite.load_inverse(pbar);
    let w = hat.deflection_inverse(1.954, q0);
    let wbar = composite.deflection(w, q0);
    assert_relative_eq!(wbar, (1.954 / 100.0) * pbar, max_relative = 1e-12);
    assert_relative_eq!(wbar, 0.977, max_relative = 1e-12);
}

#[test]
fn clamped_square_center_state_matches_reference_solution() {
    // Clamped isotropic thin square plate under uniform pressure at load
    // parameter P̄ = 17.8: published center deflection w̄ = 0.2367 and
    // surface stress σ̄_x(center, h/2) = 2.5626.
    let (e, nu) = (1.0e7, 0.316);
    let a = 1.0;
    let h = a / 100.0;
    let lam = Laminate::from_layup(Lamina::isotropic(e, nu, 0.0).unwrap(), &[0.0], h).unwrap();
    let patch = make_rectangle_patch(a, a, 3).unwrap().h_refine(11, 11).unwrap();
    let mesh = Mesh::build(patch).unwrap();
    let bcs = BoundarySet::from_preset(&mesh, BcPreset::Cccc, Planform::Rectangular).unwrap();
    let model = FeModel::new(mesh, lam.clone(), bcs).unwrap();

    let rule = NormalizationRule::IsotropicSquare { e, a, h };
    let q0 = rule.load_inverse(17.8);
    let mut f = assemble_load(model.mesh(), &TransverseLoad::Uniform { q0 });
    model.constrain_force(&mut f);

    let cfg = IterationConfig {
        scheme: IterationScheme::Newton,
        ..IterationConfig::default()
    };
    let report = solve_static(&model, &f, &nalgebra::DVector::zeros(model.mesh().ndof()), &cfg)
        .unwrap();

    let center = (a / 2.0, a / 2.0);
    let d = point_displacement(model.mesh().patch(), report.q.as_slice(), center.0, center.1)
        .unwrap();
    let wbar = rule.deflection(d.w, q0);
    assert_relative_eq!(wbar, 0.2367, max_relative = DEFLECTION_TOL);

    let s = point_stress(
        model.mesh().patch(),
        &lam,
        report.q.as_slice(),
        center.0,
        center.1,
        h / 2.0,
    )
    .unwrap();
    let sbar = rule.in_plane_stress(s.sigma.x, q0);
    assert_relative_eq!(sbar, 2.5626, max_relative = STRESS_TOL);
}
