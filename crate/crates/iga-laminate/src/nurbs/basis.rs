//! Univariate B-spline basis evaluation with derivatives.
//!
//! Implements the stable knot-difference recurrence over the triangular table
//! of lower-degree bases, returning all `degree + 1` functions that are
//! nonzero on the span containing the evaluation point.

use super::KnotVector;
use crate::error::{Error, Result};

/// Values and derivatives of the nonzero basis functions at one point.
///
/// `row(k)[a]` is the k-th derivative of basis function `first_index() + a`.
#[derive(Clone, Debug)]
pub struct BasisDerivs {
    span: usize,
    degree: usize,
    /// `(order + 1) × (degree + 1)`, row-major.
    ders: Vec<f64>,
}

impl BasisDerivs {
    pub fn span(&self) -> usize {
        self.span
    }

    /// Global index of the first nonzero basis function (`span − degree`).
    pub fn first_index(&self) -> usize {
        self.span - self.degree
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.degree + 1;
        &self.ders[k * w..(k + 1) * w]
    }
}

/// Evaluates the nonzero basis functions and their derivatives up to
/// `order` at `xi`. `order` may not exceed the degree.
pub fn basis_functions(kv: &KnotVector, xi: f64, order: usize) -> Result<BasisDerivs> {
    let p = kv.degree();
    if order > p {
        return Err(Error::UnsupportedOrder { requested: order, degree: p });
    }
    let span = kv.find_span(xi)?;
    let u = kv.values();

    // Triangular table of basis values and the knot differences that
    // produced them; ndu[j][r] (j > r) holds the difference, ndu[r][j] the
    // degree-j value of function r.
    let w = p + 1;
    let mut ndu = vec![0.0f64; w * w];
    let mut left = vec![0.0f64; w];
    let mut right = vec![0.0f64; w];
    ndu[0] = 1.0;
    for j in 1..=p {
        left[j] = xi - u[span + 1 - j];
        right[j] = u[span + j] - xi;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j * w + r] = right[r + 1] + left[j - r];
            let temp = ndu[r * w + (j - 1)] / ndu[j * w + r];
            ndu[r * w + j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j * w + j] = saved;
    }

    let mut ders = vec![0.0f64; (order + 1) * w];
    for j in 0..=p {
        ders[j] = ndu[j * w + p];
    }

    // Derivative rows from alternating accumulator rows a[0], a[1].
    let mut a = vec![0.0f64; 2 * w];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0] = 1.0;
        for k in 1..=order {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2 * w] = a[s1 * w] / ndu[(pk + 1) * w + rk as usize];
                d = a[s2 * w] * ndu[rk as usize * w + pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let col = (rk + j as isize) as usize;
                a[s2 * w + j] = (a[s1 * w + j] - a[s1 * w + j - 1]) / ndu[(pk + 1) * w + col];
                d += a[s2 * w + j] * ndu[col * w + pk];
            }
            if r <= pk {
                a[s2 * w + k] = -a[s1 * w + k - 1] / ndu[(pk + 1) * w + r];
                d += a[s2 * w + k] * ndu[r * w + pk];
            }
            ders[k * w + r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }

    // Scale rows by p!/(p−k)!.
    let mut factor = p as f64;
    for k in 1..=order {
        for j in 0..=p {
            ders[k * w + j] *= factor;
        }
        factor *= (p - k) as f64;
    }

    Ok(BasisDerivs { span, degree: p, ders })
}
