//! Mesh construction and global finite-element assembly.
//!
//! A [`Mesh`] is built once from a [`NurbsPatch`]: every nonzero knot span
//! pair becomes one element, and every element carries a full
//! (p+1)x(q+1) Gauss-Legendre rule with the rational basis values,
//! physical derivatives, and strain operators cached per quadrature point.
//! All downstream operators (stiffness, mass, load, internal force,
//! tangent, secant) are quadrature sums over that cache, so the expensive
//! basis evaluation happens exactly once per mesh.
//!
//! Global matrices use the banded storage from [`crate::linalg`]; the
//! half-bandwidth is determined by the largest control-point index spread
//! of any element. Element contributions are computed in parallel but
//! always merged serially in element order, which keeps assembled
//! matrices bitwise independent of the worker thread count.

pub mod bc;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::{a_theta, dof, strain_operators, StrainOperators};
use crate::laminate::{Laminate, LaminateStiffness};
use crate::linalg::{GenBanded, SymBanded};
use crate::nurbs::{BasisRecord, NurbsPatch};
use crate::quadrature::GaussRule;

pub use bc::{BcPreset, BoundarySet, EdgeConstraints};

/// Number of generalized strain components (3 membrane + 3 bending +
/// 3 higher-order + 2 transverse shear).
pub const N_STRAIN: usize = 11;

/// Returns the shared worker pool used for element-parallel assembly.
///
/// The pool size is taken from `IGA_LAMINATE_THREADS` when that variable
/// holds a positive integer, and falls back to the rayon default
/// otherwise. The pool is created once per process; changing the
/// environment variable afterwards has no effect.
pub(crate) fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("IGA_LAMINATE_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n >= 1)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to build assembly thread pool")
    })
}

/// One cached quadrature point of an element.
#[derive(Clone, Debug)]
pub struct QuadPoint {
    /// Gauss weight times the parametric-to-physical Jacobian determinant.
    pub weight: f64,
    /// Basis values and physical derivatives at this point.
    pub record: BasisRecord,
    /// Linear strain-displacement and gradient operators at this point.
    pub ops: StrainOperators,
}

/// One Bezier element (a nonzero knot span pair) with its cached rule.
#[derive(Clone, Debug)]
pub struct Element {
    nodes: Vec<usize>,
    qps: Vec<QuadPoint>,
}

impl Element {
    /// Global control-point indices supported on this element.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Cached quadrature points.
    pub fn quadrature_points(&self) -> &[QuadPoint] {
        &self.qps
    }
}

/// An analysis-ready mesh: the patch plus per-element quadrature caches.
#[derive(Clone, Debug)]
pub struct Mesh {
    patch: NurbsPatch,
    elements: Vec<Element>,
    n_nodes: usize,
    half_bandwidth: usize,
}

impl Mesh {
    /// Builds the element list and evaluates all quadrature caches.
    ///
    /// Each element uses a full (p+1)x(q+1) Gauss-Legendre rule. Fails if
    /// either degree is below two (curvature strains need second
    /// derivatives) or if the geometric mapping is singular or inverted
    /// at any quadrature point.
    pub fn build(patch: NurbsPatch) -> Result<Self> {
        let (pu, pv) = patch.degrees();
        if pu < 2 || pv < 2 {
            return Err(Error::Unsupported(format!(
                "mesh requires degree >= 2 in both directions, got ({pu}, {pv})"
            )));
        }
        let (n_u, _) = patch.net().dims();
        let rule_u = GaussRule::new(pu + 1);
        let rule_v = GaussRule::new(pv + 1);
        let spans_u = patch.knot_u().spans();
        let spans_v = patch.knot_v().spans();

        let mut elements = Vec::with_capacity(spans_u.len() * spans_v.len());
        for &(span_v, v0, v1) in &spans_v {
            for &(span_u, u0, u1) in &spans_u {
                let mut nodes = Vec::with_capacity((pu + 1) * (pv + 1));
                for b in 0..=pv {
                    for a in 0..=pu {
                        nodes.push((span_v - pv + b) * n_u + (span_u - pu + a));
                    }
                }
                let mut qps = Vec::with_capacity((pu + 1) * (pv + 1));
                for (eta, w_eta) in rule_v.mapped(v0, v1) {
                    for (xi, w_xi) in rule_u.mapped(u0, u1) {
                        let record = patch.physical_basis(xi, eta)?;
                        if record.det_j <= 0.0 {
                            return Err(Error::InvalidPatch(format!(
                                "non-positive Jacobian {} at ({xi}, {eta})",
                                record.det_j
                            )));
                        }
                        debug_assert_eq!(record.indices, nodes);
                        let ops = strain_operators(&record);
                        qps.push(QuadPoint {
                            weight: w_xi * w_eta * record.det_j,
                            record,
                            ops,
                        });
                    }
                }
                elements.push(Element { nodes, qps });
            }
        }

        let n_nodes = patch.n_basis();
        let half_bandwidth = elements
            .iter()
            .map(|el| {
                let lo = *el.nodes.iter().min().expect("element has nodes");
                let hi = *el.nodes.iter().max().expect("element has nodes");
                dof::PER_NODE * (hi - lo) + dof::PER_NODE - 1
            })
            .max()
            .unwrap_or(0);

        Ok(Self {
            patch,
            elements,
            n_nodes,
            half_bandwidth,
        })
    }

    /// The underlying geometry.
    pub fn patch(&self) -> &NurbsPatch {
        &self.patch
    }

    /// All elements in lexicographic span order (u fastest).
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Number of control points (nodes).
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Total number of displacement unknowns (five per node).
    pub fn ndof(&self) -> usize {
        dof::PER_NODE * self.n_nodes
    }

    /// Half-bandwidth of the assembled system in scalar unknowns.
    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }
}

/// Distributed transverse pressure acting on the plate midsurface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransverseLoad {
    /// Constant intensity `q0` everywhere.
    Uniform { q0: f64 },
    /// `q0 sin(pi x / a) sin(pi y / b)` on the rectangle `[0,a] x [0,b]`.
    Sinusoidal { q0: f64, a: f64, b: f64 },
}

impl TransverseLoad {
    /// Load intensity at a physical point.
    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        match *self {
            TransverseLoad::Uniform { q0 } => q0,
            TransverseLoad::Sinusoidal { q0, a, b } => {
                q0 * (std::f64::consts::PI * x / a).sin() * (std::f64::consts::PI * y / b).sin()
            }
        }
    }
}

fn dhat_matrix(stiffness: &LaminateStiffness) -> DMatrix<f64> {
    let s = stiffness.dhat();
    DMatrix::from_fn(N_STRAIN, N_STRAIN, |i, j| s[(i, j)])
}

/// Extracts the element-local coefficient vector from the global one.
pub(crate) fn gather_element(el: &Element, q: &DVector<f64>) -> DVector<f64> {
    let nen = el.nodes.len();
    let mut qe = DVector::zeros(dof::PER_NODE * nen);
    for (a, &node) in el.nodes.iter().enumerate() {
        for d in 0..dof::PER_NODE {
            qe[dof::PER_NODE * a + d] = q[dof::PER_NODE * node + d];
        }
    }
    qe
}

/// `K_e = sum_qp w B_L^T Dhat B_L`.
pub(crate) fn element_linear_stiffness(el: &Element, dhat: &DMatrix<f64>) -> DMatrix<f64> {
    let n = dof::PER_NODE * el.nodes.len();
    let mut ke = DMatrix::zeros(n, n);
    for qp in &el.qps {
        let dbl = dhat * &qp.ops.bl;
        ke.gemm_tr(qp.weight, &qp.ops.bl, &dbl, 1.0);
    }
    ke
}

/// `M_e = sum_qp w Ntilde^T m Ntilde` with the three-part kinematic map.
pub(crate) fn element_mass(el: &Element, inertia: &DMatrix<f64>) -> DMatrix<f64> {
    let nen = el.nodes.len();
    let n = dof::PER_NODE * nen;
    let mut nt = DMatrix::zeros(9, n);
    let mut me = DMatrix::zeros(n, n);
    for qp in &el.qps {
        nt.fill(0.0);
        for a in 0..nen {
            let c = dof::PER_NODE * a;
            let r = qp.record.r[a];
            // Midsurface translation u1 = (u0, v0, w).
            nt[(0, c + dof::U0)] = r;
            nt[(1, c + dof::V0)] = r;
            nt[(2, c + dof::W)] = r;
            // Rotation of the normal u2 = (-w_x, -w_y, 0).
            nt[(3, c + dof::W)] = -qp.record.r_x[a];
            nt[(4, c + dof::W)] = -qp.record.r_y[a];
            // Higher-order slopes u3 = (beta_x, beta_y, 0).
            nt[(6, c + dof::BX)] = r;
            nt[(7, c + dof::BY)] = r;
        }
        let mn = inertia * &nt;
        me.gemm_tr(qp.weight, &nt, &mn, 1.0);
    }
    me
}

/// Per-quadrature-point nonlinear state shared by the force and matrix
/// kernels: the midsurface slope, the von Karman membrane strain, and the
/// total stress resultants.
struct QpState {
    theta: Vector2<f64>,
    eps_nl: nalgebra::Vector3<f64>,
    sigma: DVector<f64>,
}

fn qp_state(qp: &QuadPoint, dhat: &DMatrix<f64>, qe: &DVector<f64>) -> QpState {
    let mut eps = &qp.ops.bl * qe;
    let theta_v = &qp.ops.bg * qe;
    let theta = Vector2::new(theta_v[0], theta_v[1]);
    // von Karman membrane strain 0.5 * (theta_x^2, theta_y^2, 2 theta_x theta_y).
    let eps_nl = nalgebra::Vector3::new(
        0.5 * theta.x * theta.x,
        0.5 * theta.y * theta.y,
        theta.x * theta.y,
    );
    for k in 0..3 {
        eps[k] += eps_nl[k];
    }
    let sigma = dhat * eps;
    QpState {
        theta,
        eps_nl,
        sigma,
    }
}

/// `f_e = sum_qp w (B_L + B_NL)^T sigma`.
pub(crate) fn element_internal_force(
    el: &Element,
    dhat: &DMatrix<f64>,
    qe: &DVector<f64>,
) -> DVector<f64> {
    let n = dof::PER_NODE * el.nodes.len();
    let mut fe = DVector::zeros(n);
    for qp in &el.qps {
        let st = qp_state(qp, dhat, qe);
        let w = qp.weight;
        fe.gemv_tr(w, &qp.ops.bl, &st.sigma, 1.0);
        // B_NL^T sigma = Bg^T (A_theta^T n_m) with n_m the membrane resultants.
        let g = a_theta(st.theta);
        let nm = nalgebra::Vector3::new(st.sigma[0], st.sigma[1], st.sigma[2]);
        let gn = g.transpose() * nm;
        let gn_d = DVector::from_column_slice(&[gn.x, gn.y]);
        fe.gemv_tr(w, &qp.ops.bg, &gn_d, 1.0);
    }
    fe
}

/// Nonlinear remainder of the internal force, so that
/// `f_e(q) = K_L,e q_e + f_nl,e(q)` exactly. Splitting off the cached
/// linear part keeps per-iteration work proportional to the (small)
/// nonlinear terms.
pub(crate) fn element_nonlinear_force(
    el: &Element,
    dhat: &DMatrix<f64>,
    qe: &DVector<f64>,
) -> DVector<f64> {
    let n = dof::PER_NODE * el.nodes.len();
    let mut fe = DVector::zeros(n);
    for qp in &el.qps {
        let st = qp_state(qp, dhat, qe);
        let w = qp.weight;
        // B_L^T Dhat eps_nl (the linear-operator part sourced by the
        // nonlinear strain).
        let mut sig_nl = DVector::zeros(N_STRAIN);
        for i in 0..N_STRAIN {
            let mut s = 0.0;
            for k in 0..3 {
                s += dhat[(i, k)] * st.eps_nl[k];
            }
            sig_nl[i] = s;
        }
        fe.gemv_tr(w, &qp.ops.bl, &sig_nl, 1.0);
        // B_NL^T sigma with the *total* membrane resultants.
        let g = a_theta(st.theta);
        let nm = nalgebra::Vector3::new(st.sigma[0], st.sigma[1], st.sigma[2]);
        let gn = g.transpose() * nm;
        let gn_d = DVector::from_column_slice(&[gn.x, gn.y]);
        fe.gemv_tr(w, &qp.ops.bg, &gn_d, 1.0);
    }
    fe
}

/// Shared core of the tangent and secant corrections.
///
/// Adds, for every quadrature point,
/// `c1 * B_L^T Dhat B_NL + B_NL^T Dhat B_L + c2 * B_NL^T Dhat B_NL`
/// plus (tangent only) the geometric stiffness `Bg^T N0 Bg`, where
/// `B_NL = [A_theta; 0] Bg`. The secant form uses `c1 = c2 = 1/2` and no
/// geometric term; the tangent uses `c1 = c2 = 1` with it.
fn element_correction(
    el: &Element,
    dhat: &DMatrix<f64>,
    qe: &DVector<f64>,
    c1: f64,
    c2: f64,
    geometric: bool,
) -> DMatrix<f64> {
    let n = dof::PER_NODE * el.nodes.len();
    let mut ce = DMatrix::zeros(n, n);
    for qp in &el.qps {
        let st = qp_state(qp, dhat, qe);
        let w = qp.weight;
        let g = a_theta(st.theta);
        // dg = Dhat[:, 0..3] * A_theta, an 11x2 block (B_NL only has
        // membrane rows).
        let mut dg = DMatrix::zeros(N_STRAIN, 2);
        for i in 0..N_STRAIN {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += dhat[(i, k)] * g[(k, j)];
                }
                dg[(i, j)] = s;
            }
        }
        // u = B_L^T dg (n x 2); the mixed terms are rank-two updates.
        let u = qp.ops.bl.tr_mul(&dg);
        let ubg = &u * &qp.ops.bg;
        ce += &ubg * (w * c1);
        ce += ubg.transpose() * w;
        // core = A_theta^T Dhat_mm A_theta (2x2), plus N0 for the tangent.
        let mut core = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += g[(k, i)] * dg[(k, j)];
                }
                core[(i, j)] = c2 * s;
            }
        }
        if geometric {
            core[(0, 0)] += st.sigma[0];
            core[(1, 1)] += st.sigma[1];
            core[(0, 1)] += st.sigma[2];
            core[(1, 0)] += st.sigma[2];
        }
        let core_d = DMatrix::from_fn(2, 2, |i, j| core[(i, j)]);
        let cb = &core_d * &qp.ops.bg;
        let bgt_cb = qp.ops.bg.tr_mul(&cb);
        ce += bgt_cb * w;
    }
    ce
}

/// Symmetric tangent correction `K_NL + K_g` at the element state `qe`.
pub(crate) fn element_tangent_correction(
    el: &Element,
    dhat: &DMatrix<f64>,
    qe: &DVector<f64>,
) -> DMatrix<f64> {
    element_correction(el, dhat, qe, 1.0, 1.0, true)
}

/// Unsymmetric secant correction so that `(K_L + C(q)) q = f_int(q)`.
pub(crate) fn element_secant_correction(
    el: &Element,
    dhat: &DMatrix<f64>,
    qe: &DVector<f64>,
) -> DMatrix<f64> {
    element_correction(el, dhat, qe, 0.5, 0.5, false)
}

/// Adds a symmetric element matrix into banded symmetric storage.
pub(crate) fn scatter_sym(el: &Element, ke: &DMatrix<f64>, k: &mut SymBanded) {
    for (a, &na) in el.nodes.iter().enumerate() {
        for (b, &nb) in el.nodes.iter().enumerate() {
            for da in 0..dof::PER_NODE {
                let ga = dof::PER_NODE * na + da;
                for db in 0..dof::PER_NODE {
                    let gb = dof::PER_NODE * nb + db;
                    if ga >= gb {
                        k.add(ga, gb, ke[(dof::PER_NODE * a + da, dof::PER_NODE * b + db)]);
                    }
                }
            }
        }
    }
}

/// Adds a general element matrix into banded general storage.
pub(crate) fn scatter_gen(el: &Element, ke: &DMatrix<f64>, k: &mut GenBanded) {
    for (a, &na) in el.nodes.iter().enumerate() {
        for (b, &nb) in el.nodes.iter().enumerate() {
            for da in 0..dof::PER_NODE {
                let ga = dof::PER_NODE * na + da;
                for db in 0..dof::PER_NODE {
                    let gb = dof::PER_NODE * nb + db;
                    k.add(ga, gb, ke[(dof::PER_NODE * a + da, dof::PER_NODE * b + db)]);
                }
            }
        }
    }
}

/// Adds an element vector into the global one.
pub(crate) fn scatter_vec(el: &Element, fe: &DVector<f64>, f: &mut DVector<f64>) {
    for (a, &node) in el.nodes.iter().enumerate() {
        for d in 0..dof::PER_NODE {
            f[dof::PER_NODE * node + d] += fe[dof::PER_NODE * a + d];
        }
    }
}

/// Runs `kernel` over all elements in parallel and merges the results
/// serially in element order, preserving bitwise determinism.
pub(crate) fn par_elements<T, F>(mesh: &Mesh, kernel: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Element) -> T + Sync + Send,
{
    thread_pool().install(|| mesh.elements.par_iter().map(kernel).collect())
}

/// Assembles the linear stiffness `K_L = integral B_L^T Dhat B_L`.
pub fn assemble_linear_stiffness(mesh: &Mesh, stiffness: &LaminateStiffness) -> SymBanded {
    let dhat = dhat_matrix(stiffness);
    let parts = par_elements(mesh, |el| element_linear_stiffness(el, &dhat));
    let mut k = SymBanded::zeros(mesh.ndof(), mesh.half_bandwidth());
    for (el, ke) in mesh.elements.iter().zip(&parts) {
        scatter_sym(el, ke, &mut k);
    }
    k
}

/// Assembles the consistent mass matrix for the given laminate.
///
/// Fails when the laminate carries no mass (zero density).
pub fn assemble_mass(mesh: &Mesh, laminate: &Laminate) -> Result<SymBanded> {
    let m9 = laminate.inertia_matrix()?;
    let inertia = DMatrix::from_fn(9, 9, |i, j| m9[(i, j)]);
    let parts = par_elements(mesh, |el| element_mass(el, &inertia));
    let mut m = SymBanded::zeros(mesh.ndof(), mesh.half_bandwidth());
    for (el, me) in mesh.elements.iter().zip(&parts) {
        scatter_sym(el, me, &mut m);
    }
    Ok(m)
}

/// Assembles the consistent load vector of a transverse pressure.
///
/// The pressure acts on the `w` component only, so the entries are
/// `integral q(x, y) R_A` in the `w` slot of every node.
pub fn assemble_load(mesh: &Mesh, load: &TransverseLoad) -> DVector<f64> {
    let mut f = DVector::zeros(mesh.ndof());
    for el in &mesh.elements {
        for qp in &el.qps {
            let q_val = load.intensity(qp.record.x, qp.record.y) * qp.weight;
            for (a, &node) in el.nodes.iter().enumerate() {
                f[dof::PER_NODE * node + dof::W] += q_val * qp.record.r[a];
            }
        }
    }
    f
}

/// Assembles the internal force `f_int(q) = integral (B_L + B_NL)^T sigma`.
pub fn assemble_internal_force(
    mesh: &Mesh,
    stiffness: &LaminateStiffness,
    q: &DVector<f64>,
) -> DVector<f64> {
    let dhat = dhat_matrix(stiffness);
    let parts = par_elements(mesh, |el| {
        element_internal_force(el, &dhat, &gather_element(el, q))
    });
    let mut f = DVector::zeros(mesh.ndof());
    for (el, fe) in mesh.elements.iter().zip(&parts) {
        scatter_vec(el, fe, &mut f);
    }
    f
}

/// Assembles the consistent tangent `K_T(q) = K_L + K_NL(q) + K_g(q)`.
pub fn assemble_tangent(mesh: &Mesh, stiffness: &LaminateStiffness, q: &DVector<f64>) -> SymBanded {
    let dhat = dhat_matrix(stiffness);
    let parts = par_elements(mesh, |el| {
        let qe = gather_element(el, q);
        let mut ke = element_linear_stiffness(el, &dhat);
        ke += element_tangent_correction(el, &dhat, &qe);
        ke
    });
    let mut k = SymBanded::zeros(mesh.ndof(), mesh.half_bandwidth());
    for (el, ke) in mesh.elements.iter().zip(&parts) {
        scatter_sym(el, ke, &mut k);
    }
    k
}

/// Assembles the unsymmetric secant stiffness with `K(q) q = f_int(q)`.
pub fn assemble_secant(mesh: &Mesh, stiffness: &LaminateStiffness, q: &DVector<f64>) -> GenBanded {
    let dhat = dhat_matrix(stiffness);
    let parts = par_elements(mesh, |el| {
        let qe = gather_element(el, q);
        let mut ke = element_linear_stiffness(el, &dhat);
        ke += element_secant_correction(el, &dhat, &qe);
        ke
    });
    let hb = mesh.half_bandwidth();
    let mut k = GenBanded::zeros(mesh.ndof(), hb, hb);
    for (el, ke) in mesh.elements.iter().zip(&parts) {
        scatter_gen(el, ke, &mut k);
    }
    k
}
