//! Helpers shared by the integration test suites.
#![allow(dead_code)]

use iga_laminate::nurbs::NurbsPatch;
use nalgebra::{DMatrix, DVector};

/// Physical derivatives of a scalar spline field at one parametric point:
/// `(w, w_x, w_y, w_xx, w_yy, w_xy)`.
pub fn field_derivs(
    patch: &NurbsPatch,
    coeffs: &[f64],
    xi: f64,
    eta: f64,
) -> (f64, f64, f64, f64, f64, f64) {
    let rec = patch.physical_basis(xi, eta).unwrap();
    let mut out = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &idx) in rec.indices.iter().enumerate() {
        let c = coeffs[idx];
        out.0 += rec.r[k] * c;
        out.1 += rec.r_x[k] * c;
        out.2 += rec.r_y[k] * c;
        out.3 += rec.r_xx[k] * c;
        out.4 += rec.r_yy[k] * c;
        out.5 += rec.r_xy[k] * c;
    }
    out
}

/// Value of a scalar spline field at one parametric point.
pub fn field_value(patch: &NurbsPatch, coeffs: &[f64], xi: f64, eta: f64) -> f64 {
    let rb = patch.rational_basis(xi, eta, 0).unwrap();
    rb.indices
        .iter()
        .zip(&rb.r)
        .map(|(&idx, &r)| coeffs[idx] * r)
        .sum()
}

/// Interpolates `f(x, y)` in the patch's spline space by collocation at the
/// Greville abscissae. For a function that already lies in the space (e.g.
/// polynomials up to the degree on an affine patch) the fit is exact up to
/// conditioning.
pub fn collocation_fit(patch: &NurbsPatch, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let ku = patch.knot_u();
    let kv = patch.knot_v();
    let (nu, nv) = (ku.n_basis(), kv.n_basis());
    let n = nu * nv;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for j in 0..nv {
        for i in 0..nu {
            let row = j * nu + i;
            let (gu, gv) = (ku.greville(i), kv.greville(j));
            let rb = patch.rational_basis(gu, gv, 0).unwrap();
            for (k, &idx) in rb.indices.iter().enumerate() {
                a[(row, idx)] = rb.r[k];
            }
            let (px, py) = patch.evaluate(gu, gv).unwrap();
            b[row] = f(px, py);
        }
    }
    a.lu()
        .solve(&b)
        .expect("Greville collocation matrix is nonsingular")
        .iter()
        .copied()
        .collect()
}

use iga_laminate::linalg::{GenBanded, SymBanded};
use iga_laminate::solvers::NonlinearModel;

/// Single-DOF (Duffing) oscillator `m qdd + k q + alpha q^3 = F` used to
/// exercise the solution drivers against closed-form responses.
pub struct Oscillator {
    pub k: f64,
    pub alpha: f64,
    k_banded: SymBanded,
    m_banded: SymBanded,
}

impl Oscillator {
    pub fn new(mass: f64, k: f64, alpha: f64) -> Self {
        let mut k_banded = SymBanded::zeros(1, 0);
        k_banded.add(0, 0, k);
        let mut m_banded = SymBanded::zeros(1, 0);
        m_banded.add(0, 0, mass);
        Self {
            k,
            alpha,
            k_banded,
            m_banded,
        }
    }
}

impl NonlinearModel for Oscillator {
    fn ndof(&self) -> usize {
        1
    }

    fn linear_stiffness(&self) -> &SymBanded {
        &self.k_banded
    }

    fn mass(&self) -> Option<&SymBanded> {
        Some(&self.m_banded)
    }

    fn internal_force(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.k * q[0] + self.alpha * q[0].powi(3))
    }

    fn tangent(&self, q: &DVector<f64>) -> SymBanded {
        let mut kt = SymBanded::zeros(1, 0);
        kt.add(0, 0, self.k + 3.0 * self.alpha * q[0] * q[0]);
        kt
    }

    fn secant(&self, q: &DVector<f64>) -> GenBanded {
        let mut ks = GenBanded::zeros(1, 0, 0);
        ks.add(0, 0, self.k + self.alpha * q[0] * q[0]);
        ks
    }
}
