//! Plate kinematics: generalized strains, strain-displacement operators,
//! and stress resultants of the third-order shear deformation theory with
//! von Kármán nonlinearity.
//!
//! The displacement expansion is `u = u1 + z·u2 + f(z)·u3` with
//! `u1 = (u0, v0, w)`, `u2 = (−w,x, −w,y, 0)`, `u3 = (βx, βy, 0)`, giving the
//! generalized strain `ε̂ = (ε_m, κ1, κ2, γ̄)` of 11 components:
//! membrane `ε_m = (u0,x, v0,y, u0,y+v0,x) + ε_NL`, bending
//! `κ1 = −(w,xx, w,yy, 2w,xy)`, higher-order `κ2 = (βx,x, βy,y, βx,y+βy,x)`,
//! and shear `γ̄ = (βx, βy)` (the physical shear strain is `f′(z)·γ̄`).
//! The von Kármán membrane term is `ε_NL = ½(w,x², w,y², 2w,x·w,y) = ½A_θ·θ`
//! with `θ = (w,x, w,y)`.

use nalgebra::{DMatrix, DVector, Matrix3x2, SVector, Vector2, Vector3};

use crate::laminate::LaminateStiffness;
use crate::nurbs::BasisRecord;

/// Per-control-point degree-of-freedom layout, fixed project-wide.
pub mod dof {
    /// Mid-plane displacement along x.
    pub const U0: usize = 0;
    /// Mid-plane displacement along y.
    pub const V0: usize = 1;
    /// Transverse deflection (receives the transverse load).
    pub const W: usize = 2;
    /// Higher-order rotation about −y (x-direction shear mode).
    pub const BX: usize = 3;
    /// Higher-order rotation about x (y-direction shear mode).
    pub const BY: usize = 4;
    /// Degrees of freedom per control point.
    pub const PER_NODE: usize = 5;
}

/// Strain-displacement operators of one element at one quadrature point:
/// the linear operator `BL` (11 × 5·nen), stacking the membrane, bending,
/// higher-order and shear stencils, and the deflection-gradient operator
/// `Bg` (2 × 5·nen) with `θ = Bg·q`.
#[derive(Clone, Debug)]
pub struct StrainOperators {
    pub bl: DMatrix<f64>,
    pub bg: DMatrix<f64>,
}

/// Builds the linear strain operators from physical basis derivatives.
pub fn strain_operators(rec: &BasisRecord) -> StrainOperators {
    let nen = rec.indices.len();
    let mut bl = DMatrix::zeros(11, dof::PER_NODE * nen);
    let mut bg = DMatrix::zeros(2, dof::PER_NODE * nen);
    for k in 0..nen {
        let c = dof::PER_NODE * k;
        let (r, rx, ry) = (rec.r[k], rec.r_x[k], rec.r_y[k]);
        let (rxx, ryy, rxy) = (rec.r_xx[k], rec.r_yy[k], rec.r_xy[k]);
        // Membrane.
        bl[(0, c + dof::U0)] = rx;
        bl[(1, c + dof::V0)] = ry;
        bl[(2, c + dof::U0)] = ry;
        bl[(2, c + dof::V0)] = rx;
        // Bending: κ1 = −(w,xx, w,yy, 2w,xy).
        bl[(3, c + dof::W)] = -rxx;
        bl[(4, c + dof::W)] = -ryy;
        bl[(5, c + dof::W)] = -2.0 * rxy;
        // Higher-order: κ2 from the β rotations.
        bl[(6, c + dof::BX)] = rx;
        bl[(7, c + dof::BY)] = ry;
        bl[(8, c + dof::BX)] = ry;
        bl[(8, c + dof::BY)] = rx;
        // Shear: γ̄ = (βx, βy).
        bl[(9, c + dof::BX)] = r;
        bl[(10, c + dof::BY)] = r;
        // Deflection gradient.
        bg[(0, c + dof::W)] = rx;
        bg[(1, c + dof::W)] = ry;
    }
    StrainOperators { bl, bg }
}

/// The gradient matrix `A_θ = [[w,x, 0], [0, w,y], [w,y, w,x]]` so that
/// `ε_NL = ½·A_θ·θ`.
pub fn a_theta(theta: Vector2<f64>) -> Matrix3x2<f64> {
    Matrix3x2::new(theta.x, 0.0, 0.0, theta.y, theta.y, theta.x)
}

/// The displacement-dependent operator `BNL(q) = [A_θ; 0]·Bg` (11 × 5·nen).
/// Its first three rows produce the von Kármán membrane strain increment;
/// it vanishes identically when the deflection gradient is zero.
pub fn nonlinear_operator(ops: &StrainOperators, theta: Vector2<f64>) -> DMatrix<f64> {
    let at = a_theta(theta);
    let mut bnl = DMatrix::zeros(11, ops.bg.ncols());
    for col in 0..ops.bg.ncols() {
        for row in 0..3 {
            bnl[(row, col)] =
                at[(row, 0)] * ops.bg[(0, col)] + at[(row, 1)] * ops.bg[(1, col)];
        }
    }
    bnl
}

/// Generalized strain at a point, split into its linear and nonlinear parts:
/// `ε̂ = ε̂_L + ε̂_NL` with `ε̂_L = BL·q` and `ε̂_NL = ½·BNL(q)·q` (nonzero only
/// in the membrane rows).
#[derive(Clone, Copy, Debug)]
pub struct GeneralizedStrain {
    pub eps_m: Vector3<f64>,
    pub kappa1: Vector3<f64>,
    pub kappa2: Vector3<f64>,
    pub beta: Vector2<f64>,
    /// Von Kármán membrane contribution `½(w,x², w,y², 2w,x·w,y)`.
    pub eps_nl: Vector3<f64>,
    /// Deflection gradient `θ = (w,x, w,y)`.
    pub theta: Vector2<f64>,
}

impl GeneralizedStrain {
    /// Total strain vector (ε_m + ε_NL, κ1, κ2, γ̄).
    pub fn total(&self) -> SVector<f64, 11> {
        let mut v = SVector::<f64, 11>::zeros();
        for i in 0..3 {
            v[i] = self.eps_m[i] + self.eps_nl[i];
            v[3 + i] = self.kappa1[i];
            v[6 + i] = self.kappa2[i];
        }
        v[9] = self.beta[0];
        v[10] = self.beta[1];
        v
    }
}

/// Evaluates the generalized strain for an element displacement vector
/// (blocks of five DOFs per control point, in connectivity order).
pub fn generalized_strain(ops: &StrainOperators, q_e: &DVector<f64>) -> GeneralizedStrain {
    assert_eq!(q_e.len(), ops.bl.ncols());
    let lin = &ops.bl * q_e;
    let theta = Vector2::new((ops.bg.row(0) * q_e)[0], (ops.bg.row(1) * q_e)[0]);
    GeneralizedStrain {
        eps_m: Vector3::new(lin[0], lin[1], lin[2]),
        kappa1: Vector3::new(lin[3], lin[4], lin[5]),
        kappa2: Vector3::new(lin[6], lin[7], lin[8]),
        beta: Vector2::new(lin[9], lin[10]),
        eps_nl: 0.5 * Vector3::new(theta.x * theta.x, theta.y * theta.y, 2.0 * theta.x * theta.y),
        theta,
    }
}

/// Stress resultants work-conjugate to the generalized strain: membrane
/// forces `N`, moments `M`, higher-order moments `P`, and transverse shear
/// `Q̄` (ordered (xz, yz)).
#[derive(Clone, Copy, Debug)]
pub struct StressResultants {
    pub n: Vector3<f64>,
    pub m: Vector3<f64>,
    pub p: Vector3<f64>,
    pub q: Vector2<f64>,
}

impl StressResultants {
    pub fn from_vector(v: &SVector<f64, 11>) -> Self {
        Self {
            n: Vector3::new(v[0], v[1], v[2]),
            m: Vector3::new(v[3], v[4], v[5]),
            p: Vector3::new(v[6], v[7], v[8]),
            q: Vector2::new(v[9], v[10]),
        }
    }

    pub fn to_vector(&self) -> SVector<f64, 11> {
        let mut v = SVector::<f64, 11>::zeros();
        for i in 0..3 {
            v[i] = self.n[i];
            v[3 + i] = self.m[i];
            v[6 + i] = self.p[i];
        }
        v[9] = self.q[0];
        v[10] = self.q[1];
        v
    }
}

/// `σ̂ = D̂·ε̂`: constitutive evaluation of the stress resultants.
pub fn stress_resultants(
    stiffness: &LaminateStiffness,
    strain: &GeneralizedStrain,
) -> StressResultants {
    let v = stiffness.dhat() * strain.total();
    StressResultants::from_vector(&v)
}
