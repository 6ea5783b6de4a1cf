//! Isogeometric analysis of laminated composite plates.
//!
//! NURBS-based discretization of a third-order (higher-order shear
//! deformation) plate theory with von Kármán geometric nonlinearity, for
//! static and transient bending of laminated composites. The crate provides:
//!
//! - [`nurbs`] — open-knot NURBS patches, rational bases with physical
//!   derivatives to second order, refinement, and analytic plate geometries;
//! - [`laminate`] — orthotropic plies, transformed stiffness, and the
//!   through-thickness constitutive and inertia integrals in closed form;
//! - [`kinematics`] — strain-displacement operators of the plate theory,
//!   including the nonlinear (von Kármán) terms;
//! - [`assembly`] — meshing, quadrature caches, boundary conditions, and
//!   global banded matrix/vector assembly;
//! - [`solvers`] — linear static, Newton/Picard incremental static, and
//!   Newmark transient drivers;
//! - [`postproc`] — displacement/stress recovery and the standard
//!   nondimensionalizations used by plate benchmarks;
//! - [`cli`] — the TOML-configured command-line front end with bundled
//!   benchmark problems.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod kinematics;
pub mod laminate;
pub mod linalg;
pub mod nurbs;
pub mod postproc;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
