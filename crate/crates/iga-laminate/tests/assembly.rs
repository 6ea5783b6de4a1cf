//! Assembly-level oracles: mesh bookkeeping, quadrature exactness,
//! rigid-body annihilation, mass and load resultants, and the
//! finite-difference validation of the consistent tangent.

mod common;

use iga_laminate::assembly::{
    assemble_internal_force, assemble_linear_stiffness, assemble_load, assemble_mass,
    assemble_secant, assemble_tangent, bc::Planform, BcPreset, BoundarySet, Mesh, TransverseLoad,
};
use iga_laminate::kinematics::dof;
use iga_laminate::laminate::{presets, Lamina, Laminate};
use iga_laminate::nurbs::{make_circle_patch, make_rectangle_patch};

use approx::assert_relative_eq;
use iga_laminate::linalg::{GenBanded, SymBanded};
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Central finite differences of a cubic-in-q force are exact up to the
/// O(eps^2) truncation of the cubic term; with eps = 1e-5 the directional
/// derivative agrees to well below this bound.
const FD_TANGENT_TOL: f64 = 1e-6;

/// The secant identity K(q) q = f_int(q) holds to round-off of the
/// quadrature sums.
const SECANT_IDENTITY_TOL: f64 = 1e-10;

/// Rigid-body modes produce strain sums that cancel to round-off of the
/// basis partition of unity.
const RIGID_MODE_TOL: f64 = 1e-10;

fn mv_sym(k: &SymBanded, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(k.matvec(x.as_slice()))
}

fn mv_gen(k: &GenBanded, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(k.matvec(x.as_slice()))
}

fn rectangle_mesh(lx: f64, ly: f64, spans: usize) -> Mesh {
    let patch = make_rectangle_patch(lx, ly, 3)
        .unwrap()
        .h_refine(spans, spans)
        .unwrap();
    Mesh::build(patch).unwrap()
}

fn test_laminate() -> Laminate {
    Laminate::from_layup(presets::material_iii(1.0e6), &[0.0, 90.0, 90.0, 0.0], 0.05).unwrap()
}

#[test]
fn benchmark_refinement_produces_expected_mesh() {
    let mesh = rectangle_mesh(1.0, 1.0, 11);
    assert_eq!(mesh.elements().len(), 121);
    assert_eq!(mesh.n_nodes(), 14 * 14);
    assert_eq!(mesh.ndof(), 5 * 196);
    for el in mesh.elements() {
        assert_eq!(el.nodes().len(), 16);
        assert_eq!(el.quadrature_points().len(), 16);
    }
    // Widest element spans control points (i..i+3, j..j+3): index spread
    // 3*14 + 3 = 45 nodes, so 5*45 + 4 scalar unknowns.
    assert_eq!(mesh.half_bandwidth(), 229);
}

#[test]
fn quadrature_cache_integrates_cubics_exactly() {
    let lx = 1.3;
    let ly = 0.7;
    let mesh = rectangle_mesh(lx, ly, 4);
    let mut integral = 0.0;
    let mut area = 0.0;
    for el in mesh.elements() {
        for qp in el.quadrature_points() {
            integral += qp.weight * qp.record.x.powi(3) * qp.record.y.powi(3);
            area += qp.weight;
        }
    }
    let exact = lx.powi(4) / 4.0 * ly.powi(4) / 4.0;
    assert_relative_eq!(integral, exact, max_relative = 1e-12);
    assert_relative_eq!(area, lx * ly, max_relative = 1e-12);
}

#[test]
fn linear_stiffness_annihilates_rigid_modes() {
    let mesh = rectangle_mesh(1.0, 1.0, 5);
    let lam = test_laminate();
    let k = assemble_linear_stiffness(&mesh, &lam.stiffness());
    let mut k_scale: f64 = 0.0;
    for i in 0..mesh.ndof() {
        k_scale = k_scale.max(k.get(i, i).abs());
    }
    for slot in [dof::U0, dof::V0, dof::W] {
        let mut q = DVector::zeros(mesh.ndof());
        for node in 0..mesh.n_nodes() {
            q[dof::PER_NODE * node + slot] = 1.0;
        }
        let r = mv_sym(&k, &q);
        let worst = r.amax();
        assert!(
            worst <= RIGID_MODE_TOL * k_scale,
            "rigid mode in slot {slot} leaves residual {worst:e} vs scale {k_scale:e}"
        );
    }
}

#[test]
fn mass_resultants_match_laminate_inertia() {
    let lx = 1.2;
    let ly = 0.9;
    let mesh = rectangle_mesh(lx, ly, 4);
    let rho = 1450.0;
    let h = 0.04;
    let lam = Laminate::from_layup(
        Lamina::new(25.0e9, 1.0e9, 0.5e9, 0.5e9, 0.2e9, 0.25, rho).unwrap(),
        &[0.0, 90.0, 0.0],
        h,
    )
    .unwrap();
    let m = assemble_mass(&mesh, &lam).unwrap();

    // Uniform unit translation in u0 (and separately w): the kinetic
    // functional reduces to I0 * area because derivative sums vanish.
    let total_mass = rho * h * lx * ly;
    for slot in [dof::U0, dof::V0, dof::W] {
        let mut q = DVector::zeros(mesh.ndof());
        for node in 0..mesh.n_nodes() {
            q[dof::PER_NODE * node + slot] = 1.0;
        }
        let energy = q.dot(&mv_sym(&m, &q));
        assert_relative_eq!(energy, total_mass, max_relative = 1e-10);
    }

    // The unconstrained consistent mass is positive definite.
    let factor = m.ldlt().expect("mass factorization");
    assert_eq!(factor.negative_pivots(), 0);

    // Massless laminates are rejected.
    let weightless = test_laminate();
    assert!(assemble_mass(&mesh, &weightless).is_err());
}

#[test]
fn load_resultants_match_closed_forms() {
    let lx = 1.4;
    let ly = 0.8;
    let mesh = rectangle_mesh(lx, ly, 6);

    let q0 = 2.5;
    let f = assemble_load(&mesh, &TransverseLoad::Uniform { q0 });
    let mut total = 0.0;
    let mut off_slot = 0.0f64;
    for node in 0..mesh.n_nodes() {
        total += f[dof::PER_NODE * node + dof::W];
        for slot in [dof::U0, dof::V0, dof::BX, dof::BY] {
            off_slot = off_slot.max(f[dof::PER_NODE * node + slot].abs());
        }
    }
    assert_relative_eq!(total, q0 * lx * ly, max_relative = 1e-12);
    assert_eq!(off_slot, 0.0);

    // Full-sine pressure: integral q0 sin(pi x/a) sin(pi y/b) = q0 (2a/pi)(2b/pi).
    let f = assemble_load(
        &mesh,
        &TransverseLoad::Sinusoidal {
            q0,
            a: lx,
            b: ly,
        },
    );
    let total: f64 = (0..mesh.n_nodes())
        .map(|n| f[dof::PER_NODE * n + dof::W])
        .sum();
    let exact = q0 * (2.0 * lx / std::f64::consts::PI) * (2.0 * ly / std::f64::consts::PI);
    assert_relative_eq!(total, exact, max_relative = 1e-10);
}

#[test]
fn circular_load_total_matches_disk_area() {
    let radius = 0.9;
    let patch = make_circle_patch(radius, 3)
        .unwrap()
        .h_refine(6, 6)
        .unwrap();
    let mesh = Mesh::build(patch).unwrap();
    let q0 = 3.0;
    let f = assemble_load(&mesh, &TransverseLoad::Uniform { q0 });
    let total: f64 = (0..mesh.n_nodes())
        .map(|n| f[dof::PER_NODE * n + dof::W])
        .sum();
    // The disk area is integrated by Gauss quadrature of a smooth rational
    // integrand; with 6x6 elements the quadrature error is far below this.
    assert_relative_eq!(total, q0 * std::f64::consts::PI * radius * radius, max_relative = 1e-7);
}

#[test]
fn tangent_matches_finite_differenced_internal_force() {
    let mesh = rectangle_mesh(1.0, 1.0, 4);
    let lam = test_laminate();
    let stiffness = lam.stiffness();
    let n = mesh.ndof();
    let mut rng = StdRng::seed_from_u64(2024);
    let eps = 1e-5;

    for _ in 0..20 {
        // Coefficients up to ~0.4 h keep the von Karman terms active
        // without leaving the moderate-rotation regime.
        let q = DVector::from_fn(n, |_, _| rng.random_range(-0.02..0.02));
        let delta = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).normalize();

        let kt = assemble_tangent(&mesh, &stiffness, &q);
        let predicted = mv_sym(&kt, &delta);

        let fp = assemble_internal_force(&mesh, &stiffness, &(&q + &delta * eps));
        let fm = assemble_internal_force(&mesh, &stiffness, &(&q - &delta * eps));
        let fd = (fp - fm) / (2.0 * eps);

        let err = (&predicted - &fd).norm() / predicted.norm();
        assert!(
            err < FD_TANGENT_TOL,
            "tangent/FD mismatch: relative error {err:e}"
        );
    }
}

#[test]
fn secant_reproduces_internal_force_globally() {
    let mesh = rectangle_mesh(1.0, 1.0, 4);
    let lam = test_laminate();
    let stiffness = lam.stiffness();
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..5 {
        let q = DVector::from_fn(mesh.ndof(), |_, _| rng.random_range(-0.02..0.02));
        let k = assemble_secant(&mesh, &stiffness, &q);
        let f_sec = mv_gen(&k, &q);
        let f_int = assemble_internal_force(&mesh, &stiffness, &q);
        let err = (&f_sec - &f_int).norm() / f_int.norm();
        assert!(err < SECANT_IDENTITY_TOL, "secant identity error {err:e}");
    }
}

#[test]
fn zero_and_membrane_states_reduce_to_linear_stiffness() {
    let mesh = rectangle_mesh(1.0, 1.0, 3);
    let lam = test_laminate();
    let stiffness = lam.stiffness();
    let n = mesh.ndof();
    let k_l = assemble_linear_stiffness(&mesh, &stiffness);
    let mut rng = StdRng::seed_from_u64(5);
    let probe = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));

    // q = 0: tangent and secant both equal K_L.
    let zero = DVector::zeros(n);
    let kt0 = assemble_tangent(&mesh, &stiffness, &zero);
    let ks0 = assemble_secant(&mesh, &stiffness, &zero);
    let reference = mv_sym(&k_l, &probe);
    assert_relative_eq!(
        (mv_sym(&kt0, &probe) - &reference).norm(),
        0.0,
        epsilon = 1e-12 * reference.norm()
    );
    assert_relative_eq!(
        (mv_gen(&ks0, &probe) - &reference).norm(),
        0.0,
        epsilon = 1e-12 * reference.norm()
    );

    // Membrane-only state (zero w coefficients): no von Karman coupling,
    // so the secant still equals K_L. The tangent does not: membrane
    // stress activates the geometric stiffness.
    let mut q_mem = DVector::zeros(n);
    for node in 0..mesh.n_nodes() {
        q_mem[dof::PER_NODE * node + dof::U0] = rng.random_range(-0.01..0.01);
        q_mem[dof::PER_NODE * node + dof::V0] = rng.random_range(-0.01..0.01);
    }
    let ks_mem = assemble_secant(&mesh, &stiffness, &q_mem);
    assert_relative_eq!(
        (mv_gen(&ks_mem, &probe) - &reference).norm(),
        0.0,
        epsilon = 1e-12 * reference.norm()
    );
    let kt_mem = assemble_tangent(&mesh, &stiffness, &q_mem);
    let geo = (mv_sym(&kt_mem, &probe) - &reference).norm();
    assert!(
        geo > 1e-6 * reference.norm(),
        "geometric stiffness missing from tangent at membrane prestress"
    );
}

#[test]
fn boundary_preset_counts_on_benchmark_net() {
    let mesh = rectangle_mesh(1.0, 1.0, 11); // 14x14 net
    let ssss = BoundarySet::from_preset(&mesh, BcPreset::Ssss, Planform::Rectangular).unwrap();
    // 24 non-corner points per edge family x 3 DOFs + 4 corners x 5 DOFs.
    assert_eq!(ssss.len(), 164);
    let ssss2 = BoundarySet::from_preset(&mesh, BcPreset::Ssss2, Planform::Rectangular).unwrap();
    assert_eq!(ssss2.len(), 212);
    let cccc = BoundarySet::from_preset(&mesh, BcPreset::Cccc, Planform::Rectangular).unwrap();
    // 52 boundary points x 5 DOFs + 44 interior-ring points x 1 DOF.
    assert_eq!(cccc.len(), 52 * 5 + 44);
}

#[test]
fn constrained_stiffness_is_positive_definite_for_all_presets() {
    let mesh = rectangle_mesh(1.0, 1.0, 5);
    let lam = test_laminate();
    for preset in [BcPreset::Ssss, BcPreset::Ssss2, BcPreset::Cccc] {
        let bcs = BoundarySet::from_preset(&mesh, preset, Planform::Rectangular).unwrap();
        let mut k = assemble_linear_stiffness(&mesh, &lam.stiffness());
        // Scale-balance the unit diagonal against stiffness entries.
        bcs.apply_stiffness(&mut k);
        let factor = k.ldlt().unwrap_or_else(|e| panic!("{preset:?}: {e}"));
        assert_eq!(factor.negative_pivots(), 0, "{preset:?} not positive definite");
    }

    let circle = Mesh::build(
        make_circle_patch(1.0, 3).unwrap().h_refine(5, 5).unwrap(),
    )
    .unwrap();
    let bcs = BoundarySet::from_preset(&circle, BcPreset::Cccc, Planform::Circular).unwrap();
    let mut k = assemble_linear_stiffness(&circle, &lam.stiffness());
    bcs.apply_stiffness(&mut k);
    let factor = k.ldlt().expect("clamped circle factorization");
    assert_eq!(factor.negative_pivots(), 0);
}

#[test]
fn assembly_is_bitwise_deterministic() {
    let mesh = rectangle_mesh(1.0, 1.0, 6);
    let lam = test_laminate();
    let stiffness = lam.stiffness();
    let mut rng = StdRng::seed_from_u64(3);
    let q = DVector::from_fn(mesh.ndof(), |_, _| rng.random_range(-0.02..0.02));

    let a = assemble_tangent(&mesh, &stiffness, &q);
    let b = assemble_tangent(&mesh, &stiffness, &q);
    for i in 0..mesh.ndof() {
        for j in i.saturating_sub(mesh.half_bandwidth())..=i {
            assert_eq!(
                a.get(i, j).to_bits(),
                b.get(i, j).to_bits(),
                "nondeterministic entry at ({i}, {j})"
            );
        }
    }

    let fa = assemble_internal_force(&mesh, &stiffness, &q);
    let fb = assemble_internal_force(&mesh, &stiffness, &q);
    assert!(fa
        .iter()
        .zip(fb.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}
