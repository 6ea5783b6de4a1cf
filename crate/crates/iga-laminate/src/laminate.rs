//! Lamina and laminate constitutive data.
//!
//! Builds plane-stress reduced stiffness for an orthotropic ply, rotates it
//! to arbitrary fiber angles, and integrates the through-thickness
//! constitutive blocks A, B, D, E, F, H and Dˢ plus the density moments
//! I0…I5 in closed form (the thickness weights are polynomials of degree at
//! most six, so no numerical quadrature is needed or used).
//!
//! The third-order distribution function `f(z) = z − 4z³/(3h²)` and its
//! derivative are also defined here; `f′(±h/2) = 0` makes the transverse
//! shear stresses vanish on the outer surfaces without shear-correction
//! factors.

use nalgebra::{Matrix2, Matrix3, SMatrix};

use crate::error::{Error, Result};

/// Orthotropic ply (lamina) constants in its material frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lamina {
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub g13: f64,
    pub g23: f64,
    pub nu12: f64,
    /// Mass density; zero is allowed for static-only studies.
    pub rho: f64,
}

impl Lamina {
    pub fn new(
        e1: f64,
        e2: f64,
        g12: f64,
        g13: f64,
        g23: f64,
        nu12: f64,
        rho: f64,
    ) -> Result<Self> {
        let lamina = Self { e1, e2, g12, g13, g23, nu12, rho };
        lamina.validate()?;
        Ok(lamina)
    }

    /// Isotropic special case: `G = E/(2(1+ν))` in every plane.
    pub fn isotropic(e: f64, nu: f64, rho: f64) -> Result<Self> {
        let g = e / (2.0 * (1.0 + nu));
        Self::new(e, e, g, g, g, nu, rho)
    }

    fn validate(&self) -> Result<()> {
        let moduli = [self.e1, self.e2, self.g12, self.g13, self.g23];
        if moduli.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidMaterial(
                "all moduli must be positive and finite".into(),
            ));
        }
        if self.rho < 0.0 || !self.rho.is_finite() {
            return Err(Error::InvalidMaterial("density must be non-negative".into()));
        }
        // Thermodynamic admissibility: 1 − ν12·ν21 > 0 with reciprocity.
        if self.nu12 < 0.0 || self.nu12 * self.nu12 >= self.e1 / self.e2 {
            return Err(Error::InvalidMaterial(format!(
                "ν12 = {} violates 0 ≤ ν12 < √(E1/E2)",
                self.nu12
            )));
        }
        Ok(())
    }

    /// Minor Poisson ratio from the reciprocity relation `ν21 = ν12·E2/E1`.
    pub fn nu21(&self) -> f64 {
        self.nu12 * self.e2 / self.e1
    }

    /// Plane-stress reduced stiffness in the material frame.
    pub fn reduced_stiffness(&self) -> ReducedStiffness {
        let den = 1.0 - self.nu12 * self.nu21();
        ReducedStiffness {
            q11: self.e1 / den,
            q12: self.nu12 * self.e2 / den,
            q22: self.e2 / den,
            q66: self.g12,
            q55: self.g13,
            q44: self.g23,
        }
    }
}

/// Plane-stress reduced stiffness in material axes: in-plane (Q11, Q12, Q22,
/// Q66) relating (σ1, σ2, τ12) to (ε1, ε2, γ12), and transverse shear
/// Q55 = G13 (τ13 from γ13), Q44 = G23 (τ23 from γ23).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedStiffness {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
    pub q66: f64,
    pub q55: f64,
    pub q44: f64,
}

/// Reduced stiffness rotated to the laminate frame for a fiber angle θ.
/// In-plane entries relate (σx, σy, τxy) to (εx, εy, γxy); shear entries
/// relate (τxz, τyz) to (γxz, γyz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformedStiffness {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
    pub q16: f64,
    pub q26: f64,
    pub q66: f64,
    pub q55: f64,
    pub q45: f64,
    pub q44: f64,
}

impl TransformedStiffness {
    /// In-plane 3×3 block, rows/cols ordered (εx, εy, γxy).
    pub fn in_plane(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.q11, self.q12, self.q16,
            self.q12, self.q22, self.q26,
            self.q16, self.q26, self.q66,
        )
    }

    /// Transverse-shear 2×2 block, rows/cols ordered (γxz, γyz).
    pub fn shear(&self) -> Matrix2<f64> {
        Matrix2::new(self.q55, self.q45, self.q45, self.q44)
    }
}

/// Rotates the reduced stiffness to a fiber angle `theta` (radians) using
/// the fourth-order tensor transformation for the in-plane block and the
/// second-order transformation for the shear block.
pub fn transformed_stiffness(q: &ReducedStiffness, theta: f64) -> TransformedStiffness {
    let (m, n) = (theta.cos(), theta.sin());
    let (m2, n2) = (m * m, n * n);
    let (m3, n3) = (m2 * m, n2 * n);
    let (m4, n4) = (m2 * m2, n2 * n2);
    let ReducedStiffness { q11, q12, q22, q66, q55, q44 } = *q;
    TransformedStiffness {
        q11: q11 * m4 + 2.0 * (q12 + 2.0 * q66) * m2 * n2 + q22 * n4,
        q12: (q11 + q22 - 4.0 * q66) * m2 * n2 + q12 * (m4 + n4),
        q22: q11 * n4 + 2.0 * (q12 + 2.0 * q66) * m2 * n2 + q22 * m4,
        q16: (q11 - q12 - 2.0 * q66) * m3 * n + (q12 - q22 + 2.0 * q66) * m * n3,
        q26: (q11 - q12 - 2.0 * q66) * m * n3 + (q12 - q22 + 2.0 * q66) * m3 * n,
        q66: (q11 + q22 - 2.0 * q12 - 2.0 * q66) * m2 * n2 + q66 * (m4 + n4),
        q55: m2 * q55 + n2 * q44,
        q45: m * n * (q55 - q44),
        q44: n2 * q55 + m2 * q44,
    }
}

/// One layer of a laminate: a material, a fiber angle (radians), and its
/// through-thickness extent.
#[derive(Clone, Copy, Debug)]
pub struct Layer {
    pub material: Lamina,
    pub angle: f64,
    pub z_bot: f64,
    pub z_top: f64,
}

/// Ordered stack of layers tiling `[−h/2, +h/2]`.
#[derive(Clone, Debug)]
pub struct Laminate {
    layers: Vec<Layer>,
    thickness: f64,
}

/// Relative tolerance for the tiling checks in [`Laminate::new`]; covers
/// roundoff when interface positions are computed by accumulation.
const TILE_TOL: f64 = 1e-9;

impl Laminate {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidLaminate("laminate needs at least one layer".into()));
        }
        for layer in &layers {
            if !(layer.z_top > layer.z_bot) {
                return Err(Error::InvalidLaminate(format!(
                    "layer bounds [{}, {}] are not increasing",
                    layer.z_bot, layer.z_top
                )));
            }
            layer.material.validate()?;
        }
        let h = layers.last().unwrap().z_top - layers[0].z_bot;
        if (layers[0].z_bot + h / 2.0).abs() > TILE_TOL * h {
            return Err(Error::InvalidLaminate(
                "layer stack must be centered on the mid-plane z = 0".into(),
            ));
        }
        for pair in layers.windows(2) {
            if (pair[1].z_bot - pair[0].z_top).abs() > TILE_TOL * h {
                return Err(Error::InvalidLaminate(format!(
                    "gap or overlap between layers at z = {}",
                    pair[0].z_top
                )));
            }
        }
        Ok(Self { layers, thickness: h })
    }

    /// Equal-thickness layup from a list of fiber angles in degrees, e.g.
    /// `[0, 90, 90, 0]`, with total thickness `h`.
    pub fn from_layup(material: Lamina, angles_deg: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidLaminate(format!("thickness must be positive, got {h}")));
        }
        if angles_deg.is_empty() {
            return Err(Error::InvalidLaminate("layup needs at least one angle".into()));
        }
        // Boundary formula h·(k/n − 1/2) lands the outer surfaces on ±h/2
        // exactly, which the traction-free recovery (f′(±h/2) = 0) relies on.
        let n = angles_deg.len();
        let boundary = |k: usize| h * (k as f64 / n as f64 - 0.5);
        let layers = angles_deg
            .iter()
            .enumerate()
            .map(|(k, &a)| Layer {
                material,
                angle: a.to_radians(),
                z_bot: boundary(k),
                z_top: boundary(k + 1),
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    /// Layer containing the through-thickness coordinate `z` (interfaces
    /// resolve to the lower layer, `z = −h/2` to the first).
    pub fn layer_at(&self, z: f64) -> Result<(usize, &Layer)> {
        let h = self.thickness;
        if z.abs() > h / 2.0 * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!("z = {z} outside [−{0}, {0}]", h / 2.0)));
        }
        let k = self
            .layers
            .iter()
            .position(|l| z <= l.z_top)
            .unwrap_or(self.layers.len() - 1);
        Ok((k, &self.layers[k]))
    }

    /// Through-thickness constitutive blocks, integrated in closed form.
    pub fn stiffness(&self) -> LaminateStiffness {
        let h = self.thickness;
        let mut s = LaminateStiffness {
            a: Matrix3::zeros(),
            b: Matrix3::zeros(),
            d: Matrix3::zeros(),
            e: Matrix3::zeros(),
            f: Matrix3::zeros(),
            h: Matrix3::zeros(),
            ds: Matrix2::zeros(),
        };
        for layer in &self.layers {
            let qb = transformed_stiffness(&layer.material.reduced_stiffness(), layer.angle);
            let qin = qb.in_plane();
            let qs = qb.shear();
            let w = moment_primitives(layer.z_top, h);
            let v = moment_primitives(layer.z_bot, h);
            s.a += qin * (w[0] - v[0]);
            s.b += qin * (w[1] - v[1]);
            s.d += qin * (w[2] - v[2]);
            s.e += qin * (w[3] - v[3]);
            s.f += qin * (w[4] - v[4]);
            s.h += qin * (w[5] - v[5]);
            s.ds += qs * (w[6] - v[6]);
        }
        s
    }

    /// Thickness-integrated density moments `Ik = ∫ρ·(1, z, z², f, zf, f²)dz`.
    pub fn inertias(&self) -> Inertias {
        let h = self.thickness;
        let mut i = [0.0f64; 6];
        for layer in &self.layers {
            let w = moment_primitives(layer.z_top, h);
            let v = moment_primitives(layer.z_bot, h);
            for (k, acc) in i.iter_mut().enumerate() {
                *acc += layer.material.rho * (w[k] - v[k]);
            }
        }
        Inertias { i0: i[0], i1: i[1], i2: i[2], i3: i[3], i4: i[4], i5: i[5] }
    }

    /// 9×9 inertia matrix pairing the translation fields (u1, u2, u3);
    /// requires a massive laminate (transient analyses).
    pub fn inertia_matrix(&self) -> Result<SMatrix<f64, 9, 9>> {
        let i = self.inertias();
        if !(i.i0 > 0.0) {
            return Err(Error::InvalidLaminate(
                "laminate has zero density; set ρ > 0 for transient analysis".into(),
            ));
        }
        Ok(i.matrix())
    }
}

/// Antiderivatives, evaluated at `z`, of the seven thickness weights
/// `1, z, z², f, z·f, f², (f′)²` with `f = z − 4z³/(3h²)`.
fn moment_primitives(z: f64, h: f64) -> [f64; 7] {
    let h2 = h * h;
    let h4 = h2 * h2;
    let z2 = z * z;
    let z3 = z2 * z;
    let z4 = z3 * z;
    let z5 = z4 * z;
    let z7 = z5 * z2;
    [
        z,
        z2 / 2.0,
        z3 / 3.0,
        z2 / 2.0 - z4 / (3.0 * h2),
        z3 / 3.0 - 4.0 * z5 / (15.0 * h2),
        z3 / 3.0 - 8.0 * z5 / (15.0 * h2) + 16.0 * z7 / (63.0 * h4),
        z - 8.0 * z3 / (3.0 * h2) + 16.0 * z5 / (5.0 * h4),
    ]
}

/// Thickness-integrated constitutive blocks. `A…H` weight the in-plane
/// stiffness by `1, z, z², f, zf, f²`; `DS` weights the shear stiffness by
/// `(f′)²`.
#[derive(Clone, Debug)]
pub struct LaminateStiffness {
    pub a: Matrix3<f64>,
    pub b: Matrix3<f64>,
    pub d: Matrix3<f64>,
    pub e: Matrix3<f64>,
    pub f: Matrix3<f64>,
    pub h: Matrix3<f64>,
    pub ds: Matrix2<f64>,
}

impl LaminateStiffness {
    /// The 11×11 generalized constitutive matrix relating
    /// (N, M, P, Q) to (ε_m, κ1, κ2, γ̄):
    /// rows/cols 0–2 membrane, 3–5 bending, 6–8 higher-order, 9–10 shear.
    pub fn dhat(&self) -> SMatrix<f64, 11, 11> {
        let mut m = SMatrix::<f64, 11, 11>::zeros();
        let blocks3 = [
            (0, 0, &self.a),
            (0, 3, &self.b),
            (0, 6, &self.e),
            (3, 3, &self.d),
            (3, 6, &self.f),
            (6, 6, &self.h),
        ];
        for &(r, c, blk) in &blocks3 {
            for i in 0..3 {
                for j in 0..3 {
                    m[(r + i, c + j)] = blk[(i, j)];
                    m[(c + j, r + i)] = blk[(i, j)];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                m[(9 + i, 9 + j)] = self.ds[(i, j)];
            }
        }
        m
    }
}

/// Density moments and the assembled 9×9 inertia matrix.
#[derive(Clone, Copy, Debug)]
pub struct Inertias {
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
}

impl Inertias {
    /// `[[I0, I1, I3], [I1, I2, I4], [I3, I4, I5]] ⊗ I₃`.
    pub fn matrix(&self) -> SMatrix<f64, 9, 9> {
        let blocks = [
            [self.i0, self.i1, self.i3],
            [self.i1, self.i2, self.i4],
            [self.i3, self.i4, self.i5],
        ];
        let mut m = SMatrix::<f64, 9, 9>::zeros();
        for bi in 0..3 {
            for bj in 0..3 {
                for k in 0..3 {
                    m[(3 * bi + k, 3 * bj + k)] = blocks[bi][bj];
                }
            }
        }
        m
    }
}

/// Reddy's cubic distribution function and its derivative at `z`:
/// `f = z − 4z³/(3h²)`, `f′ = 1 − 4z²/h²`. Errors when `|z| > h/2`.
pub fn distribution(z: f64, h: f64) -> Result<(f64, f64)> {
    if z.abs() > h / 2.0 * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "z = {z} outside the laminate thickness [−{0}, {0}]",
            h / 2.0
        )));
    }
    let f = z - 4.0 * z.powi(3) / (3.0 * h * h);
    let fp = 1.0 - 4.0 * z * z / (h * h);
    Ok((f, fp))
}

/// Benchmark ply materials used by the bundled reference problems. Moduli
/// for `material_i`…`material_iv` are in psi with densities omitted (static
/// benchmarks); `material_v` and `material_vi` are in Pa with densities in
/// kg/m³ (transient benchmarks). Materials III and IV are specified by
/// ratios of E2, which drops out of the nondimensional results; `e2` sets
/// the absolute scale.
pub mod presets {
    use super::Lamina;

    pub fn material_i() -> Lamina {
        Lamina::new(3.0e6, 1.28e6, 0.37e6, 0.37e6, 0.37e6, 0.32, 0.0).unwrap()
    }

    pub fn material_ii() -> Lamina {
        Lamina::new(1.8282e6, 1.8315e6, 0.3125e6, 0.3125e6, 0.3125e6, 0.2395, 0.0).unwrap()
    }

    /// E1 = 25·E2, G12 = G13 = 0.5·E2, G23 = 0.2·E2, ν12 = 0.25.
    pub fn material_iii(e2: f64) -> Lamina {
        Lamina::new(25.0 * e2, e2, 0.5 * e2, 0.5 * e2, 0.2 * e2, 0.25, 0.0).unwrap()
    }

    /// E1 = 40·E2, G12 = G13 = 0.6·E2, G23 = 0.5·E2, ν12 = 0.25.
    pub fn material_iv(e2: f64) -> Lamina {
        Lamina::new(40.0 * e2, e2, 0.6 * e2, 0.6 * e2, 0.5 * e2, 0.25, 0.0).unwrap()
    }

    pub fn material_v() -> Lamina {
        Lamina::new(525.0e9, 21.0e9, 10.5e9, 10.5e9, 10.5e9, 0.25, 800.0).unwrap()
    }

    pub fn material_vi() -> Lamina {
        Lamina::new(172.369e9, 6.895e9, 3.448e9, 3.448e9, 1.379e9, 0.25, 1603.03).unwrap()
    }
}
