//! Essential boundary conditions on the control net.
//!
//! Constraints are expressed directly on control-point coefficients: a
//! fixed degree of freedom is eliminated by zeroing its matrix row and
//! column (unit diagonal for stiffness-like matrices, zero diagonal for
//! the mass) and zeroing the corresponding load entry. Because the open
//! knot vectors make the basis interpolatory along patch edges, fixing
//! all edge coefficients of a component pins that component on the whole
//! physical edge; the clamped preset additionally fixes the transverse
//! coefficient on the first interior ring of control points, which
//! annihilates the normal slope of `w` along the boundary.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kinematics::dof;
use crate::linalg::{GenBanded, SymBanded};

use super::Mesh;

/// Planform class of the patch, used to vet preset applicability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Planform {
    Rectangular,
    Circular,
}

/// Built-in boundary-condition presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcPreset {
    /// Simply supported: `u0, w, beta_x` on y-constant edges and
    /// `v0, w, beta_y` on x-constant edges.
    Ssss,
    /// Simply supported with fully restrained in-plane edge motion:
    /// adds `u0` and `v0` on every edge relative to [`BcPreset::Ssss`].
    Ssss2,
    /// Clamped: all five unknowns on the boundary, plus `w` on the first
    /// interior ring so the edge normal slope vanishes.
    Cccc,
}

/// Explicit per-edge constraint lists (degree-of-freedom slots fixed on
/// each net edge). Slot indices follow [`crate::kinematics::dof`].
#[derive(Clone, Debug, Default)]
pub struct EdgeConstraints {
    /// Edge `j = 0` (y = 0 on a rectangle).
    pub south: Vec<usize>,
    /// Edge `j = n_v - 1`.
    pub north: Vec<usize>,
    /// Edge `i = 0` (x = 0 on a rectangle).
    pub west: Vec<usize>,
    /// Edge `i = n_u - 1`.
    pub east: Vec<usize>,
}

/// A resolved set of fixed global degrees of freedom.
#[derive(Clone, Debug)]
pub struct BoundarySet {
    fixed: Vec<usize>,
}

impl BoundarySet {
    /// Builds a set from an explicit sorted-or-not list of global DOFs.
    pub fn from_dofs(ndof: usize, mut fixed: Vec<usize>) -> Result<Self> {
        fixed.sort_unstable();
        fixed.dedup();
        if let Some(&last) = fixed.last() {
            if last >= ndof {
                return Err(Error::InvalidBoundary(format!(
                    "constrained DOF {last} out of range for {ndof} unknowns"
                )));
            }
        }
        Ok(Self { fixed })
    }

    /// Resolves a preset on the mesh's control net.
    pub fn from_preset(mesh: &Mesh, preset: BcPreset, planform: Planform) -> Result<Self> {
        if planform == Planform::Circular && preset != BcPreset::Cccc {
            return Err(Error::InvalidBoundary(
                "circular plates support only the clamped (CCCC) preset".into(),
            ));
        }
        match preset {
            BcPreset::Ssss => Self::from_edges(
                mesh,
                &EdgeConstraints {
                    south: vec![dof::U0, dof::W, dof::BX],
                    north: vec![dof::U0, dof::W, dof::BX],
                    west: vec![dof::V0, dof::W, dof::BY],
                    east: vec![dof::V0, dof::W, dof::BY],
                },
            ),
            BcPreset::Ssss2 => Self::from_edges(
                mesh,
                &EdgeConstraints {
                    south: vec![dof::U0, dof::V0, dof::W, dof::BX],
                    north: vec![dof::U0, dof::V0, dof::W, dof::BX],
                    west: vec![dof::U0, dof::V0, dof::W, dof::BY],
                    east: vec![dof::U0, dof::V0, dof::W, dof::BY],
                },
            ),
            BcPreset::Cccc => {
                let (n_u, n_v) = mesh.patch().net().dims();
                let mut dofs = Vec::new();
                for j in 0..n_v {
                    for i in 0..n_u {
                        let node = j * n_u + i;
                        let on_boundary = i == 0 || i == n_u - 1 || j == 0 || j == n_v - 1;
                        if on_boundary {
                            for d in 0..dof::PER_NODE {
                                dofs.push(dof::PER_NODE * node + d);
                            }
                        } else if i == 1 || i == n_u - 2 || j == 1 || j == n_v - 2 {
                            dofs.push(dof::PER_NODE * node + dof::W);
                        }
                    }
                }
                Self::from_dofs(mesh.ndof(), dofs)
            }
        }
    }

    /// Resolves explicit per-edge constraints on the mesh's control net.
    pub fn from_edges(mesh: &Mesh, edges: &EdgeConstraints) -> Result<Self> {
        let (n_u, n_v) = mesh.patch().net().dims();
        for d in edges
            .south
            .iter()
            .chain(&edges.north)
            .chain(&edges.west)
            .chain(&edges.east)
        {
            if *d >= dof::PER_NODE {
                return Err(Error::InvalidBoundary(format!(
                    "DOF slot {d} out of range (must be < {})",
                    dof::PER_NODE
                )));
            }
        }
        let mut dofs = Vec::new();
        let push = |node: usize, slots: &[usize], dofs: &mut Vec<usize>| {
            for &d in slots {
                dofs.push(dof::PER_NODE * node + d);
            }
        };
        for i in 0..n_u {
            push(i, &edges.south, &mut dofs);
            push((n_v - 1) * n_u + i, &edges.north, &mut dofs);
        }
        for j in 0..n_v {
            push(j * n_u, &edges.west, &mut dofs);
            push(j * n_u + (n_u - 1), &edges.east, &mut dofs);
        }
        Self::from_dofs(mesh.ndof(), dofs)
    }

    /// Sorted list of fixed global DOFs (no duplicates).
    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Number of fixed DOFs.
    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    /// True when nothing is constrained.
    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    /// Eliminates fixed DOFs from a stiffness-like symmetric matrix
    /// (zero row/column, unit diagonal).
    pub fn apply_stiffness(&self, k: &mut SymBanded) {
        for &i in &self.fixed {
            k.zero_row_col(i, 1.0);
        }
    }

    /// Eliminates fixed DOFs from the mass matrix (zero row/column and
    /// zero diagonal, so constrained DOFs carry no inertia).
    pub fn apply_mass(&self, m: &mut SymBanded) {
        for &i in &self.fixed {
            m.zero_row_col(i, 0.0);
        }
    }

    /// Eliminates fixed DOFs from an unsymmetric stiffness.
    pub fn apply_general(&self, k: &mut GenBanded) {
        for &i in &self.fixed {
            k.zero_row_col(i, 1.0);
        }
    }

    /// Zeros the entries of a force-like vector at fixed DOFs.
    pub fn apply_vector(&self, f: &mut DVector<f64>) {
        for &i in &self.fixed {
            f[i] = 0.0;
        }
    }
}
