//! NURBS geometry and basis evaluation.
//!
//! Everything the discretization needs from the geometry side lives here:
//! open knot vectors, tensor-product rational basis functions with parametric
//! and physical derivatives up to second order, knot insertion and (Bézier)
//! degree elevation, and the analytic plate patches (rectangle, full disk).
//!
//! All evaluation is pure over immutable patch data; refinement returns new
//! patches.

mod basis;
mod patch;

pub use basis::{basis_functions, BasisDerivs};
pub use patch::{make_circle_patch, make_rectangle_patch, BasisRecord, RationalBasis};

use crate::error::{Error, Result};

/// Open (clamped) knot vector on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    /// Validates the open-form invariants: non-decreasing values on [0, 1]
    /// with the first and last knot each repeated exactly `degree + 1` times.
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self> {
        let p = degree;
        if values.len() < 2 * (p + 1) {
            return Err(Error::InvalidPatch(format!(
                "knot vector of length {} cannot carry degree {p}",
                values.len()
            )));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidPatch("knot values must be non-decreasing".into()));
        }
        let m = values.len() - 1;
        let open_start = values[..=p].iter().all(|&v| v == 0.0) && values[p + 1] > 0.0;
        let open_end = values[m - p..].iter().all(|&v| v == 1.0) && values[m - p - 1] < 1.0;
        if !open_start || !open_end {
            return Err(Error::InvalidPatch(
                "knot vector must be open: 0 and 1 repeated exactly degree+1 times".into(),
            ));
        }
        Ok(Self { values, degree })
    }

    /// Uniform open knot vector with `n_spans` nonzero spans.
    pub fn open_uniform(degree: usize, n_spans: usize) -> Self {
        assert!(n_spans >= 1);
        let mut values = vec![0.0; degree + 1];
        for i in 1..n_spans {
            values.push(i as f64 / n_spans as f64);
        }
        values.extend(std::iter::repeat(1.0).take(degree + 1));
        Self { values, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of basis functions `n = len − degree − 1`.
    pub fn n_basis(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    /// Knot span index `i` with `values[i] ≤ ξ < values[i+1]`; `ξ = 1` maps
    /// onto the last nonzero span (half-open spans, final span closed).
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::OutOfRange(format!("ξ = {xi} outside [0, 1]")));
        }
        let n = self.n_basis();
        let p = self.degree;
        if xi >= self.values[n] {
            return Ok(n - 1);
        }
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if xi < self.values[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Nonzero spans as `(span index, ξ_lo, ξ_hi)` triples.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        let n = self.n_basis();
        (self.degree..n)
            .filter(|&i| self.values[i + 1] > self.values[i])
            .map(|i| (i, self.values[i], self.values[i + 1]))
            .collect()
    }

    /// Number of nonzero spans.
    pub fn n_spans(&self) -> usize {
        self.spans().len()
    }

    /// Greville abscissa of basis function `i` (mean of `degree` knots).
    pub fn greville(&self, i: usize) -> f64 {
        let p = self.degree;
        self.values[i + 1..=i + p].iter().sum::<f64>() / p as f64
    }
}

/// Planar control point with a positive weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlPoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

/// Rectangular grid of weighted control points; index `(i, j)` runs fastest
/// in the u direction (`flat = j·n_u + i`).
#[derive(Clone, Debug)]
pub struct ControlNet {
    n_u: usize,
    n_v: usize,
    points: Vec<ControlPoint>,
}

impl ControlNet {
    pub fn new(n_u: usize, n_v: usize, points: Vec<ControlPoint>) -> Result<Self> {
        if points.len() != n_u * n_v {
            return Err(Error::InvalidPatch(format!(
                "control net size {} does not match {n_u}×{n_v}",
                points.len()
            )));
        }
        if points.iter().any(|p| !(p.weight > 0.0)) {
            return Err(Error::InvalidPatch("all control-point weights must be positive".into()));
        }
        Ok(Self { n_u, n_v, points })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_u, self.n_v)
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_u && j < self.n_v);
        j * self.n_u + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ControlPoint {
        self.points[self.flat(i, j)]
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Tensor-product rational surface patch defining the plate mid-surface.
#[derive(Clone, Debug)]
pub struct NurbsPatch {
    knot_u: KnotVector,
    knot_v: KnotVector,
    net: ControlNet,
}

impl NurbsPatch {
    pub fn new(knot_u: KnotVector, knot_v: KnotVector, net: ControlNet) -> Result<Self> {
        if net.dims() != (knot_u.n_basis(), knot_v.n_basis()) {
            return Err(Error::InvalidPatch(format!(
                "control net {}×{} does not match basis counts {}×{}",
                net.dims().0,
                net.dims().1,
                knot_u.n_basis(),
                knot_v.n_basis()
            )));
        }
        Ok(Self { knot_u, knot_v, net })
    }

    pub fn knot_u(&self) -> &KnotVector {
        &self.knot_u
    }

    pub fn knot_v(&self) -> &KnotVector {
        &self.knot_v
    }

    pub fn net(&self) -> &ControlNet {
        &self.net
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.knot_u.degree(), self.knot_v.degree())
    }

    /// Number of control points (= number of basis functions).
    pub fn n_basis(&self) -> usize {
        self.net.len()
    }
}
