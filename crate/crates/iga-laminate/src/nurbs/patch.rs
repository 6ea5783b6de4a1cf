//! Surface-level NURBS operations: bivariate rational bases, physical
//! derivatives through the (possibly curved) geometry map, knot insertion,
//! Bézier degree elevation, and the analytic rectangle / disk patches.

use nalgebra::{Matrix3, Vector3};

use super::basis::basis_functions;
use super::{ControlNet, ControlPoint, KnotVector, NurbsPatch};
use crate::error::{Error, Result};

/// Relative tolerance classifying a geometry Jacobian as singular. The
/// determinant is compared against `J_SINGULAR_TOL · s²` where `s` is the
/// largest Jacobian entry, so the check is scale-invariant.
const J_SINGULAR_TOL: f64 = 1e-14;

/// Nonzero bivariate rational basis functions at one parametric point,
/// with parametric derivatives up to the requested order.
#[derive(Clone, Debug)]
pub struct RationalBasis {
    pub span_u: usize,
    pub span_v: usize,
    /// Flat control-point indices (`j·n_u + i`) of the nonzero functions.
    pub indices: Vec<usize>,
    pub r: Vec<f64>,
    pub r_xi: Vec<f64>,
    pub r_eta: Vec<f64>,
    pub r_xixi: Vec<f64>,
    pub r_etaeta: Vec<f64>,
    pub r_xieta: Vec<f64>,
}

/// Fully evaluated basis bundle at one parametric point: parametric and
/// physical derivatives of every nonzero function, plus the geometry map.
#[derive(Clone, Debug)]
pub struct BasisRecord {
    pub xi: f64,
    pub eta: f64,
    /// Physical coordinates of the point.
    pub x: f64,
    pub y: f64,
    /// Determinant of the geometry Jacobian ∂(x,y)/∂(ξ,η).
    pub det_j: f64,
    /// Flat control-point indices of the nonzero functions.
    pub indices: Vec<usize>,
    pub r: Vec<f64>,
    pub r_xi: Vec<f64>,
    pub r_eta: Vec<f64>,
    pub r_xixi: Vec<f64>,
    pub r_etaeta: Vec<f64>,
    pub r_xieta: Vec<f64>,
    pub r_x: Vec<f64>,
    pub r_y: Vec<f64>,
    pub r_xx: Vec<f64>,
    pub r_yy: Vec<f64>,
    pub r_xy: Vec<f64>,
}

impl NurbsPatch {
    /// Evaluates the nonzero rational basis functions at `(ξ, η)` with
    /// parametric derivatives up to `order` (0, 1 or 2).
    pub fn rational_basis(&self, xi: f64, eta: f64, order: usize) -> Result<RationalBasis> {
        assert!(order <= 2, "rational derivatives implemented up to order 2");
        let bu = basis_functions(self.knot_u(), xi, order)?;
        let bv = basis_functions(self.knot_v(), eta, order)?;
        let (pu, pv) = self.degrees();
        let (n_u, _) = self.net().dims();
        let n = (pu + 1) * (pv + 1);

        let mut indices = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for b in 0..=pv {
            let j = bv.first_index() + b;
            for a in 0..=pu {
                let i = bu.first_index() + a;
                indices.push(j * n_u + i);
                weights.push(self.net().points()[j * n_u + i].weight);
            }
        }

        // Weighted homogeneous sums A^(α,β) and their total W^(α,β).
        let combo = |ku: usize, kv_: usize| -> (Vec<f64>, f64) {
            let ru = bu.row(ku);
            let rv = bv.row(kv_);
            let mut vals = Vec::with_capacity(n);
            let mut total = 0.0;
            for b in 0..=pv {
                for a in 0..=pu {
                    let v = ru[a] * rv[b] * weights[b * (pu + 1) + a];
                    vals.push(v);
                    total += v;
                }
            }
            (vals, total)
        };

        let (a00, w00) = combo(0, 0);
        let r: Vec<f64> = a00.iter().map(|v| v / w00).collect();

        let mut out = RationalBasis {
            span_u: bu.span(),
            span_v: bv.span(),
            indices,
            r,
            r_xi: Vec::new(),
            r_eta: Vec::new(),
            r_xixi: Vec::new(),
            r_etaeta: Vec::new(),
            r_xieta: Vec::new(),
        };
        if order == 0 {
            return Ok(out);
        }

        let (a10, w10) = combo(1, 0);
        let (a01, w01) = combo(0, 1);
        let first = |ak: &[f64], wk: f64| -> Vec<f64> {
            out.r
                .iter()
                .zip(ak)
                .map(|(&r, &a)| (a - r * wk) / w00)
                .collect()
        };
        out.r_xi = first(&a10, w10);
        out.r_eta = first(&a01, w01);
        if order == 1 {
            return Ok(out);
        }

        let (a20, w20) = combo(2, 0);
        let (a02, w02) = combo(0, 2);
        let (a11, w11) = combo(1, 1);
        out.r_xixi = (0..n)
            .map(|k| (a20[k] - 2.0 * out.r_xi[k] * w10 - out.r[k] * w20) / w00)
            .collect();
        out.r_etaeta = (0..n)
            .map(|k| (a02[k] - 2.0 * out.r_eta[k] * w01 - out.r[k] * w02) / w00)
            .collect();
        out.r_xieta = (0..n)
            .map(|k| {
                (a11[k] - out.r_xi[k] * w01 - out.r_eta[k] * w10 - out.r[k] * w11) / w00
            })
            .collect();
        Ok(out)
    }

    /// Physical coordinates of the parametric point `(ξ, η)`.
    pub fn evaluate(&self, xi: f64, eta: f64) -> Result<(f64, f64)> {
        let rb = self.rational_basis(xi, eta, 0)?;
        let pts = self.net().points();
        let mut x = 0.0;
        let mut y = 0.0;
        for (k, &idx) in rb.indices.iter().enumerate() {
            x += rb.r[k] * pts[idx].x;
            y += rb.r[k] * pts[idx].y;
        }
        Ok((x, y))
    }

    /// Evaluates basis functions, physical derivatives to second order, and
    /// the geometry map at `(ξ, η)`.
    ///
    /// Second physical derivatives solve the per-point 3×3 chain-rule system
    /// including the geometry-curvature correction, so curved (rational)
    /// patches are handled exactly.
    pub fn physical_basis(&self, xi: f64, eta: f64) -> Result<BasisRecord> {
        let rb = self.rational_basis(xi, eta, 2)?;
        let pts = self.net().points();
        let n = rb.indices.len();

        // Geometry map and its parametric derivatives.
        let mut g = [0.0f64; 12]; // x,y | x_ξ,y_ξ | x_η,y_η | x_ξξ,y_ξξ | x_ηη,y_ηη | x_ξη,y_ξη
        for (k, &idx) in rb.indices.iter().enumerate() {
            let p = pts[idx];
            for (slot, d) in [
                &rb.r, &rb.r_xi, &rb.r_eta, &rb.r_xixi, &rb.r_etaeta, &rb.r_xieta,
            ]
            .iter()
            .enumerate()
            {
                g[2 * slot] += d[k] * p.x;
                g[2 * slot + 1] += d[k] * p.y;
            }
        }
        let (x, y) = (g[0], g[1]);
        let (x_xi, y_xi) = (g[2], g[3]);
        let (x_eta, y_eta) = (g[4], g[5]);
        let (x_xixi, y_xixi) = (g[6], g[7]);
        let (x_etaeta, y_etaeta) = (g[8], g[9]);
        let (x_xieta, y_xieta) = (g[10], g[11]);

        let det_j = x_xi * y_eta - x_eta * y_xi;
        let scale = x_xi.abs().max(x_eta.abs()).max(y_xi.abs()).max(y_eta.abs());
        if !(det_j.abs() > J_SINGULAR_TOL * scale * scale) {
            return Err(Error::SingularMapping { xi, eta, det: det_j });
        }

        // First physical derivatives via the inverse Jacobian transpose.
        let mut r_x = Vec::with_capacity(n);
        let mut r_y = Vec::with_capacity(n);
        for k in 0..n {
            r_x.push((y_eta * rb.r_xi[k] - y_xi * rb.r_eta[k]) / det_j);
            r_y.push((-x_eta * rb.r_xi[k] + x_xi * rb.r_eta[k]) / det_j);
        }

        // Second derivatives: M · [R,xx  R,yy  R,xy]ᵀ = parametric seconds
        // minus the geometry-curvature carry-over of the first derivatives.
        let m = Matrix3::new(
            x_xi * x_xi,
            y_xi * y_xi,
            2.0 * x_xi * y_xi,
            x_eta * x_eta,
            y_eta * y_eta,
            2.0 * x_eta * y_eta,
            x_xi * x_eta,
            y_xi * y_eta,
            x_xi * y_eta + x_eta * y_xi,
        );
        let lu = m.lu();
        let mut r_xx = Vec::with_capacity(n);
        let mut r_yy = Vec::with_capacity(n);
        let mut r_xy = Vec::with_capacity(n);
        for k in 0..n {
            let rhs = Vector3::new(
                rb.r_xixi[k] - (x_xixi * r_x[k] + y_xixi * r_y[k]),
                rb.r_etaeta[k] - (x_etaeta * r_x[k] + y_etaeta * r_y[k]),
                rb.r_xieta[k] - (x_xieta * r_x[k] + y_xieta * r_y[k]),
            );
            let sol = lu
                .solve(&rhs)
                .ok_or(Error::SingularMapping { xi, eta, det: det_j })?;
            r_xx.push(sol[0]);
            r_yy.push(sol[1]);
            r_xy.push(sol[2]);
        }

        Ok(BasisRecord {
            xi,
            eta,
            x,
            y,
            det_j,
            indices: rb.indices,
            r: rb.r,
            r_xi: rb.r_xi,
            r_eta: rb.r_eta,
            r_xixi: rb.r_xixi,
            r_etaeta: rb.r_etaeta,
            r_xieta: rb.r_xieta,
            r_x,
            r_y,
            r_xx,
            r_yy,
            r_xy,
        })
    }

    /// Refines by inserting uniform interior knots until each direction has
    /// (at least) the requested number of nonzero spans. For patches without
    /// pre-existing interior knots — all patches produced by the factories —
    /// the result has exactly `n_u × n_v` spans. Geometry and weights are
    /// preserved exactly.
    pub fn h_refine(&self, n_u: usize, n_v: usize) -> Result<NurbsPatch> {
        if n_u < self.knot_u().n_spans() || n_v < self.knot_v().n_spans() {
            return Err(Error::InvalidPatch(format!(
                "refinement target {n_u}×{n_v} below current span counts {}×{}",
                self.knot_u().n_spans(),
                self.knot_v().n_spans()
            )));
        }
        let mut patch = self.clone();
        for dir in [Direction::U, Direction::V] {
            let target = if dir == Direction::U { n_u } else { n_v };
            for i in 1..target {
                let ubar = i as f64 / target as f64;
                let kv = match dir {
                    Direction::U => patch.knot_u(),
                    Direction::V => patch.knot_v(),
                };
                if kv.values().iter().any(|&v| (v - ubar).abs() < 1e-12) {
                    continue;
                }
                patch = insert_knot(&patch, dir, ubar)?;
            }
        }
        Ok(patch)
    }

    /// Raises both degrees to `(pu, pv)`. Implemented for single-span
    /// (Bézier) patches, which covers the analytic factories; equal target
    /// degrees return a clone.
    pub fn elevate_degree(&self, pu: usize, pv: usize) -> Result<NurbsPatch> {
        let (cu, cv) = self.degrees();
        if pu < cu || pv < cv {
            return Err(Error::Unsupported(format!(
                "cannot lower degrees {cu}×{cv} to {pu}×{pv}"
            )));
        }
        if pu == cu && pv == cv {
            return Ok(self.clone());
        }
        if self.knot_u().n_spans() != 1 || self.knot_v().n_spans() != 1 {
            return Err(Error::Unsupported(
                "degree elevation implemented for single-span (Bézier) patches only".into(),
            ));
        }
        let mut h = HomogeneousNet::from_patch(self);
        while h.pu < pu {
            h.elevate_once(Direction::U);
        }
        while h.pv < pv {
            h.elevate_once(Direction::V);
        }
        h.into_patch(
            KnotVector::new(bezier_knots(pu), pu)?,
            KnotVector::new(bezier_knots(pv), pv)?,
        )
    }

    /// Newton inversion of the geometry map: parametric coordinates of the
    /// physical point `(x, y)`, which must lie on the patch.
    pub fn invert_point(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let scale = self
            .net()
            .points()
            .iter()
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut xi = 0.5;
        let mut eta = 0.5;
        let residual = |xi: f64, eta: f64| -> Result<(f64, f64)> {
            let (sx, sy) = self.evaluate(xi, eta)?;
            Ok((sx - x, sy - y))
        };
        let (mut rx, mut ry) = residual(xi, eta)?;
        for _ in 0..60 {
            let rnorm = rx.hypot(ry);
            if rnorm <= 1e-13 * scale {
                return Ok((xi, eta));
            }
            let rb = self.rational_basis(xi, eta, 1)?;
            let pts = self.net().points();
            let (mut x_xi, mut x_eta, mut y_xi, mut y_eta) = (0.0, 0.0, 0.0, 0.0);
            for (k, &idx) in rb.indices.iter().enumerate() {
                let p = pts[idx];
                x_xi += rb.r_xi[k] * p.x;
                x_eta += rb.r_eta[k] * p.x;
                y_xi += rb.r_xi[k] * p.y;
                y_eta += rb.r_eta[k] * p.y;
            }
            let det = x_xi * y_eta - x_eta * y_xi;
            if det.abs() < 1e-300 {
                break;
            }
            let dxi = (y_eta * rx - x_eta * ry) / det;
            let deta = (-y_xi * rx + x_xi * ry) / det;
            // Backtracking keeps the iterate inside the parameter square and
            // guards against overshoot near the (benign) corner singularities
            // of the disk map.
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let nxi = (xi - step * dxi).clamp(0.0, 1.0);
                let neta = (eta - step * deta).clamp(0.0, 1.0);
                let (nrx, nry) = residual(nxi, neta)?;
                if nrx.hypot(nry) < rnorm {
                    xi = nxi;
                    eta = neta;
                    rx = nrx;
                    ry = nry;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if rx.hypot(ry) <= 1e-9 * scale {
            return Ok((xi, eta));
        }
        Err(Error::Nonconvergence {
            context: format!("point inversion of ({x}, {y})"),
            iterations: 60,
            last_error: rx.hypot(ry),
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    U,
    V,
}

fn bezier_knots(p: usize) -> Vec<f64> {
    let mut v = vec![0.0; p + 1];
    v.extend(std::iter::repeat(1.0).take(p + 1));
    v
}

/// Control net in homogeneous coordinates `(w·x, w·y, w)`, the space in which
/// knot insertion and degree elevation are affine.
struct HomogeneousNet {
    n_u: usize,
    n_v: usize,
    pu: usize,
    pv: usize,
    pts: Vec<[f64; 3]>,
}

impl HomogeneousNet {
    fn from_patch(patch: &NurbsPatch) -> Self {
        let (n_u, n_v) = patch.net().dims();
        let (pu, pv) = patch.degrees();
        let pts = patch
            .net()
            .points()
            .iter()
            .map(|p| [p.weight * p.x, p.weight * p.y, p.weight])
            .collect();
        Self { n_u, n_v, pu, pv, pts }
    }

    fn into_patch(self, knot_u: KnotVector, knot_v: KnotVector) -> Result<NurbsPatch> {
        let points = self
            .pts
            .iter()
            .map(|h| ControlPoint { x: h[0] / h[2], y: h[1] / h[2], weight: h[2] })
            .collect();
        NurbsPatch::new(knot_u, knot_v, ControlNet::new(self.n_u, self.n_v, points)?)
    }

    fn get(&self, i: usize, j: usize) -> [f64; 3] {
        self.pts[j * self.n_u + i]
    }

    /// Bézier degree elevation by one in the given direction.
    fn elevate_once(&mut self, dir: Direction) {
        let lerp = |a: [f64; 3], b: [f64; 3], t: f64| {
            [
                t * a[0] + (1.0 - t) * b[0],
                t * a[1] + (1.0 - t) * b[1],
                t * a[2] + (1.0 - t) * b[2],
            ]
        };
        match dir {
            Direction::U => {
                let p = self.pu;
                let mut out = Vec::with_capacity((self.n_u + 1) * self.n_v);
                for j in 0..self.n_v {
                    out.push(self.get(0, j));
                    for i in 1..=p {
                        let t = i as f64 / (p + 1) as f64;
                        out.push(lerp(self.get(i - 1, j), self.get(i, j), t));
                    }
                    out.push(self.get(p, j));
                }
                self.n_u += 1;
                self.pu += 1;
                self.pts = out;
            }
            Direction::V => {
                let p = self.pv;
                let mut out = vec![[0.0; 3]; self.n_u * (self.n_v + 1)];
                for i in 0..self.n_u {
                    out[i] = self.get(i, 0);
                    for j in 1..=p {
                        let t = j as f64 / (p + 1) as f64;
                        out[j * self.n_u + i] = lerp(self.get(i, j - 1), self.get(i, j), t);
                    }
                    out[(p + 1) * self.n_u + i] = self.get(i, p);
                }
                self.n_v += 1;
                self.pv += 1;
                self.pts = out;
            }
        }
    }
}

/// Inserts a single knot `ubar` in the given direction (Boehm's algorithm in
/// homogeneous coordinates); geometry is unchanged.
fn insert_knot(patch: &NurbsPatch, dir: Direction, ubar: f64) -> Result<NurbsPatch> {
    let kv = match dir {
        Direction::U => patch.knot_u(),
        Direction::V => patch.knot_v(),
    };
    let p = kv.degree();
    let span = kv.find_span(ubar)?;
    let mult = kv.values().iter().filter(|&&v| v == ubar).count();
    if mult >= p {
        return Err(Error::InvalidPatch(format!(
            "knot {ubar} already has multiplicity {mult} ≥ degree {p}"
        )));
    }
    let mut new_values = kv.values().to_vec();
    new_values.insert(span + 1, ubar);
    let u = kv.values();

    let h = HomogeneousNet::from_patch(patch);
    // New control point i (in the insertion direction) blends old points
    // i−1 and i with α_i = (u̅ − u_i)/(u_{i+p} − u_i) on the affected band.
    let alpha = |i: usize| -> f64 {
        if i <= span - p {
            1.0
        } else if i > span - mult {
            0.0
        } else {
            (ubar - u[i]) / (u[i + p] - u[i])
        }
    };
    let blend = |old: &dyn Fn(usize) -> [f64; 3], n_old: usize| -> Vec<[f64; 3]> {
        (0..=n_old)
            .map(|i| {
                if i == 0 {
                    old(0)
                } else if i == n_old {
                    old(n_old - 1)
                } else {
                    let a = alpha(i);
                    let q0 = old(i - 1);
                    let q1 = old(i);
                    [
                        a * q1[0] + (1.0 - a) * q0[0],
                        a * q1[1] + (1.0 - a) * q0[1],
                        a * q1[2] + (1.0 - a) * q0[2],
                    ]
                }
            })
            .collect()
    };

    match dir {
        Direction::U => {
            let mut pts = Vec::with_capacity((h.n_u + 1) * h.n_v);
            for j in 0..h.n_v {
                pts.extend(blend(&|i| h.get(i, j), h.n_u));
            }
            let out = HomogeneousNet { n_u: h.n_u + 1, n_v: h.n_v, pu: h.pu, pv: h.pv, pts };
            out.into_patch(KnotVector::new(new_values, p)?, patch.knot_v().clone())
        }
        Direction::V => {
            let mut pts = vec![[0.0; 3]; h.n_u * (h.n_v + 1)];
            for i in 0..h.n_u {
                for (j, q) in blend(&|j| h.get(i, j), h.n_v).into_iter().enumerate() {
                    pts[j * h.n_u + i] = q;
                }
            }
            let out = HomogeneousNet { n_u: h.n_u, n_v: h.n_v + 1, pu: h.pu, pv: h.pv, pts };
            out.into_patch(patch.knot_u().clone(), KnotVector::new(new_values, p)?)
        }
    }
}

/// Axis-aligned rectangle `[0, lx] × [0, ly]` as a single-span Bézier patch
/// of degree `p` in both directions (all weights 1, exact affine geometry).
pub fn make_rectangle_patch(lx: f64, ly: f64, p: usize) -> Result<NurbsPatch> {
    if !(lx > 0.0 && ly > 0.0) {
        return Err(Error::InvalidPatch(format!(
            "rectangle dimensions must be positive, got {lx} × {ly}"
        )));
    }
    if p < 1 {
        return Err(Error::InvalidPatch("rectangle degree must be at least 1".into()));
    }
    let mut points = Vec::with_capacity((p + 1) * (p + 1));
    for j in 0..=p {
        for i in 0..=p {
            points.push(ControlPoint {
                x: lx * i as f64 / p as f64,
                y: ly * j as f64 / p as f64,
                weight: 1.0,
            });
        }
    }
    NurbsPatch::new(
        KnotVector::new(bezier_knots(p), p)?,
        KnotVector::new(bezier_knots(p), p)?,
        ControlNet::new(p + 1, p + 1, points)?,
    )
}

/// Full disk of the given radius, centered at the origin, as a single
/// biquadratic rational patch (exact circular boundary) elevated to degree
/// `p ≥ 2` in both directions.
///
/// The nine-point net places the four corner points on the circle at
/// (±r/√2, ±r/√2) with weight 1, the four edge midpoints at distance r√2 on
/// the axes with weight √2/2, and the center at the origin. The map is
/// singular only at the four parametric corners, which full-interior Gauss
/// quadrature never samples.
pub fn make_circle_patch(radius: f64, p: usize) -> Result<NurbsPatch> {
    if !(radius > 0.0) {
        return Err(Error::InvalidPatch(format!("radius must be positive, got {radius}")));
    }
    if p < 2 {
        return Err(Error::InvalidPatch(
            "circular patch requires degree at least 2".into(),
        ));
    }
    let c = radius / std::f64::consts::SQRT_2;
    let d = radius * std::f64::consts::SQRT_2;
    let w = std::f64::consts::SQRT_2 / 2.0;
    let pt = |x: f64, y: f64, weight: f64| ControlPoint { x, y, weight };
    let points = vec![
        pt(-c, -c, 1.0),
        pt(0.0, -d, w),
        pt(c, -c, 1.0),
        pt(-d, 0.0, w),
        pt(0.0, 0.0, 1.0),
        pt(d, 0.0, w),
        pt(-c, c, 1.0),
        pt(0.0, d, w),
        pt(c, c, 1.0),
    ];
    let quad = NurbsPatch::new(
        KnotVector::new(bezier_knots(2), 2)?,
        KnotVector::new(bezier_knots(2), 2)?,
        ControlNet::new(3, 3, points)?,
    )?;
    quad.elevate_degree(p, p)
}
