//! Static equilibrium and transient solution drivers.
//!
//! All drivers operate on the [`NonlinearModel`] abstraction: anything
//! that can report its (constrained) linear stiffness, mass, internal
//! force, and tangent/secant operators. The plate model is provided by
//! [`FeModel`], which caches the per-element linear stiffness so that
//! nonlinear iterations only pay for the nonlinear corrections; the test
//! suites also exercise the drivers on single-DOF oscillators where the
//! exact solution is known in closed form.
//!
//! Static problems are solved by Newton-Raphson (consistent tangent) or
//! by direct/Picard iteration (secant stiffness); transient problems use
//! the Newmark one-step scheme with either inner iteration. Convergence
//! is measured by the relative Euclidean increment norm
//! `||q_{i+1} - q_i|| / ||q_{i+1}||`, with `0/0` treated as converged.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{
    element_linear_stiffness, element_nonlinear_force, element_secant_correction,
    element_tangent_correction, gather_element, par_elements, scatter_gen, scatter_sym,
    scatter_vec, BoundarySet, Mesh, N_STRAIN,
};
use crate::error::{Error, Result};
use crate::laminate::Laminate;
use crate::linalg::{GenBanded, SymBanded};

/// Relative residual demanded of linear static solves after one step of
/// iterative refinement; direct banded factorization reaches this easily
/// for the well-conditioned constrained systems built here.
const LINEAR_RESIDUAL_TOL: f64 = 1e-10;

/// Relative change of the Rayleigh quotient at which the inverse power
/// iteration for the fundamental frequency is considered converged.
const POWER_ITERATION_TOL: f64 = 1e-12;

/// Inner iteration scheme for nonlinear problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationScheme {
    /// Newton-Raphson on the consistent tangent stiffness.
    Newton,
    /// Direct (Picard) iteration on the secant stiffness.
    Picard,
}

/// Controls for the nonlinear iteration loops.
#[derive(Clone, Copy, Debug)]
pub struct IterationConfig {
    pub scheme: IterationScheme,
    /// Relative displacement-increment tolerance. The default matches the
    /// 1% used by the published benchmark solutions; property tests use
    /// much tighter values.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            scheme: IterationScheme::Picard,
            tolerance: 0.01,
            max_iterations: 50,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "iteration tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A mechanical system the drivers can iterate on. All returned operators
/// must already have essential constraints applied (unit diagonal for
/// stiffness-like matrices, zero row/column/diagonal for the mass) and
/// `internal_force` must vanish at fixed DOFs.
pub trait NonlinearModel {
    fn ndof(&self) -> usize;

    /// Fixed (eliminated) global DOF indices, sorted ascending.
    fn fixed_dofs(&self) -> &[usize] {
        &[]
    }

    /// Constrained linear stiffness `K_L`.
    fn linear_stiffness(&self) -> &SymBanded;

    /// Constrained consistent mass, if the model carries inertia.
    fn mass(&self) -> Option<&SymBanded>;

    /// Constrained internal force `f_int(q)`.
    fn internal_force(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Constrained consistent tangent `K_T(q)`.
    fn tangent(&self, q: &DVector<f64>) -> SymBanded;

    /// Constrained secant stiffness with `K(q) q = f_int(q)`.
    fn secant(&self, q: &DVector<f64>) -> GenBanded;
}

/// The isogeometric plate model: mesh + laminate + boundary conditions,
/// with the element linear stiffness cached for fast re-assembly.
pub struct FeModel {
    mesh: Mesh,
    laminate: Laminate,
    bcs: BoundarySet,
    dhat: DMatrix<f64>,
    element_kl: Vec<DMatrix<f64>>,
    /// Unconstrained global linear stiffness (corrections are scattered
    /// on top of a clone before constraints are applied).
    k_l_free: SymBanded,
    /// Constrained linear stiffness.
    k_l: SymBanded,
    /// Constrained consistent mass (present only for massive laminates).
    mass: Option<SymBanded>,
}

impl FeModel {
    pub fn new(mesh: Mesh, laminate: Laminate, bcs: BoundarySet) -> Result<Self> {
        let s = laminate.stiffness();
        let dhat_s = s.dhat();
        let dhat = DMatrix::from_fn(N_STRAIN, N_STRAIN, |i, j| dhat_s[(i, j)]);

        let element_kl = par_elements(&mesh, |el| element_linear_stiffness(el, &dhat));
        let mut k_l_free = SymBanded::zeros(mesh.ndof(), mesh.half_bandwidth());
        for (el, ke) in mesh.elements().iter().zip(&element_kl) {
            scatter_sym(el, ke, &mut k_l_free);
        }
        let mut k_l = k_l_free.clone();
        bcs.apply_stiffness(&mut k_l);

        let mass = match crate::assembly::assemble_mass(&mesh, &laminate) {
            Ok(mut m) => {
                bcs.apply_mass(&mut m);
                Some(m)
            }
            Err(_) => None,
        };

        Ok(Self {
            mesh,
            laminate,
            bcs,
            dhat,
            element_kl,
            k_l_free,
            k_l,
            mass,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn laminate(&self) -> &Laminate {
        &self.laminate
    }

    pub fn boundary(&self) -> &BoundarySet {
        &self.bcs
    }

    /// Zeroes a force-like vector at the fixed DOFs (call on external
    /// loads before handing them to the drivers).
    pub fn constrain_force(&self, f: &mut DVector<f64>) {
        self.bcs.apply_vector(f);
    }
}

impl NonlinearModel for FeModel {
    fn ndof(&self) -> usize {
        self.mesh.ndof()
    }

    fn fixed_dofs(&self) -> &[usize] {
        self.bcs.fixed()
    }

    fn linear_stiffness(&self) -> &SymBanded {
        &self.k_l
    }

    fn mass(&self) -> Option<&SymBanded> {
        self.mass.as_ref()
    }

    fn internal_force(&self, q: &DVector<f64>) -> DVector<f64> {
        let elements = self.mesh.elements();
        let parts: Vec<DVector<f64>> = crate::assembly::thread_pool().install(|| {
            elements
                .par_iter()
                .enumerate()
                .map(|(idx, el)| {
                    let qe = gather_element(el, q);
                    &self.element_kl[idx] * &qe + element_nonlinear_force(el, &self.dhat, &qe)
                })
                .collect()
        });
        let mut f = DVector::zeros(self.ndof());
        for (el, fe) in elements.iter().zip(&parts) {
            scatter_vec(el, fe, &mut f);
        }
        self.bcs.apply_vector(&mut f);
        f
    }

    fn tangent(&self, q: &DVector<f64>) -> SymBanded {
        let parts = par_elements(&self.mesh, |el| {
            element_tangent_correction(el, &self.dhat, &gather_element(el, q))
        });
        let mut k = self.k_l_free.clone();
        for (el, ce) in self.mesh.elements().iter().zip(&parts) {
            scatter_sym(el, ce, &mut k);
        }
        self.bcs.apply_stiffness(&mut k);
        k
    }

    fn secant(&self, q: &DVector<f64>) -> GenBanded {
        let parts = par_elements(&self.mesh, |el| {
            element_secant_correction(el, &self.dhat, &gather_element(el, q))
        });
        let mut k = GenBanded::from_sym(&self.k_l_free);
        for (el, ce) in self.mesh.elements().iter().zip(&parts) {
            scatter_gen(el, ce, &mut k);
        }
        self.bcs.apply_general(&mut k);
        k
    }
}

/// Outcome of one nonlinear solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub q: DVector<f64>,
    pub iterations: usize,
    /// Relative increment error after each iteration.
    pub error_history: Vec<f64>,
}

fn increment_error(dq: &DVector<f64>, q_new: &DVector<f64>) -> f64 {
    let nd = dq.norm();
    if nd == 0.0 {
        return 0.0;
    }
    let nq = q_new.norm();
    if nq == 0.0 {
        f64::INFINITY
    } else {
        nd / nq
    }
}

/// Solves `K q = f` by banded LDL^T with one step of iterative
/// refinement, verifying the relative residual.
pub fn solve_linear_static(k: &SymBanded, f: &DVector<f64>) -> Result<DVector<f64>> {
    let f_norm = f.norm();
    if f_norm == 0.0 {
        return Ok(DVector::zeros(k.dim()));
    }
    let factor = k.ldlt()?;
    let mut q = DVector::from_vec(factor.solve(f.as_slice()));
    let mut r = f - DVector::from_vec(k.matvec(q.as_slice()));
    if r.norm() > LINEAR_RESIDUAL_TOL * f_norm {
        q += DVector::from_vec(factor.solve(r.as_slice()));
        r = f - DVector::from_vec(k.matvec(q.as_slice()));
    }
    if r.norm() > LINEAR_RESIDUAL_TOL * f_norm {
        return Err(Error::SingularSystem(format!(
            "linear solve residual {:e} exceeds {:e} after refinement",
            r.norm() / f_norm,
            LINEAR_RESIDUAL_TOL
        )));
    }
    Ok(q)
}

/// Newton-Raphson iteration on the consistent tangent from `q0`.
pub fn newton_solve(
    model: &dyn NonlinearModel,
    f_ext: &DVector<f64>,
    q0: &DVector<f64>,
    cfg: &IterationConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let mut q = q0.clone();
    let mut history = Vec::new();
    for it in 1..=cfg.max_iterations {
        let phi = model.internal_force(&q) - f_ext;
        let kt = model.tangent(&q);
        let factor = kt.ldlt()?;
        let dq = -DVector::from_vec(factor.solve(phi.as_slice()));
        q += &dq;
        let err = increment_error(&dq, &q);
        history.push(err);
        if err < cfg.tolerance {
            return Ok(SolveReport {
                q,
                iterations: it,
                error_history: history,
            });
        }
    }
    Err(Error::Nonconvergence {
        context: "Newton-Raphson static solve".into(),
        iterations: cfg.max_iterations,
        last_error: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// Smallest admissible Aitken relaxation factor. The adaptive factor only
/// shrinks when the raw iteration oscillates strongly; a floor keeps a
/// pathological step from freezing the iterate in place.
const AITKEN_MIN_RELAXATION: f64 = 0.05;

/// Direct (Picard) iteration on the secant stiffness from `q0`, with
/// Aitken (Irons-Tuck) adaptive under-relaxation.
///
/// Each raw step solves `K(q_k) q_hat = f`; the update applied is
/// `q_{k+1} = q_k + w_k (q_hat - q_k)`. Relaxation leaves the fixed point
/// `K(q*) q* = f` unchanged but restores contraction when the raw map
/// overshoots, which it does for hardening plates past moderate deflection.
/// The first step uses w = 1, so problems already in the linear regime
/// converge in a single iteration. Convergence is measured on the raw
/// increment (the distance to the fixed-point image), never on the relaxed
/// one, so a small w cannot masquerade as convergence.
///
/// Divergence is declared when the increment error grows for five
/// consecutive iterations.
pub fn picard_solve(
    model: &dyn NonlinearModel,
    f_ext: &DVector<f64>,
    q0: &DVector<f64>,
    cfg: &IterationConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let mut q = q0.clone();
    let mut history = Vec::new();
    let mut last_err = f64::INFINITY;
    let mut growth = 0usize;
    let mut omega = 1.0_f64;
    let mut raw_prev: Option<DVector<f64>> = None;
    for it in 1..=cfg.max_iterations {
        let k = model.secant(&q);
        let factor = k.lu()?;
        let q_hat = DVector::from_vec(factor.solve(f_ext.as_slice()));
        let raw = &q_hat - &q;
        let err = increment_error(&raw, &q_hat);
        history.push(err);
        if err < cfg.tolerance {
            // Accept the unrelaxed image so the reported state carries the
            // full final correction.
            return Ok(SolveReport {
                q: q_hat,
                iterations: it,
                error_history: history,
            });
        }
        if let Some(prev) = &raw_prev {
            let diff = &raw - prev;
            let norm2 = diff.norm_squared();
            if norm2 > 0.0 {
                omega = (-omega * prev.dot(&diff) / norm2)
                    .clamp(AITKEN_MIN_RELAXATION, 1.0);
            }
        }
        q += omega * &raw;
        raw_prev = Some(raw);
        if err > last_err {
            growth += 1;
            if growth >= 5 {
                return Err(Error::Nonconvergence {
                    context: "Picard iteration diverging".into(),
                    iterations: it,
                    last_error: err,
                });
            }
        } else {
            growth = 0;
        }
        last_err = err;
    }
    Err(Error::Nonconvergence {
        context: "Picard static solve".into(),
        iterations: cfg.max_iterations,
        last_error: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// Dispatches on the configured scheme.
pub fn solve_static(
    model: &dyn NonlinearModel,
    f_ext: &DVector<f64>,
    q0: &DVector<f64>,
    cfg: &IterationConfig,
) -> Result<SolveReport> {
    match cfg.scheme {
        IterationScheme::Newton => newton_solve(model, f_ext, q0, cfg),
        IterationScheme::Picard => picard_solve(model, f_ext, q0, cfg),
    }
}

/// A converged static equilibrium path over increasing load levels.
#[derive(Clone, Debug)]
pub struct EquilibriumPath {
    pub levels: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Total inner iterations spent to reach each level (including any
    /// automatic sub-steps).
    pub iterations: Vec<usize>,
    /// Relative force residual `||f_int - F|| / ||F||` at each level.
    pub residuals: Vec<f64>,
}

const MAX_HALVINGS: usize = 8;

/// Advances the state `q` from the equilibrium at load factor `from` to the
/// one at `to`, recursively halving the increment (up to 8 times) when the
/// iteration fails to converge. Returns the total inner iteration count.
/// On error `q` holds the last converged intermediate state, so callers can
/// archive partial progress.
pub fn advance_level(
    model: &dyn NonlinearModel,
    unit_load: &DVector<f64>,
    q: &mut DVector<f64>,
    from: f64,
    to: f64,
    cfg: &IterationConfig,
    depth: usize,
) -> Result<usize> {
    let f = unit_load * to;
    match solve_static(model, &f, q, cfg) {
        Ok(report) => {
            *q = report.q;
            Ok(report.iterations)
        }
        Err(e @ (Error::Nonconvergence { .. } | Error::SingularSystem(_))) => {
            if depth >= MAX_HALVINGS {
                return Err(e);
            }
            let mid = 0.5 * (from + to);
            let a = advance_level(model, unit_load, q, from, mid, cfg, depth + 1)?;
            let b = advance_level(model, unit_load, q, mid, to, cfg, depth + 1)?;
            Ok(a + b)
        }
        Err(e) => Err(e),
    }
}

/// Solves a sequence of increasing load levels, each starting from the
/// previous converged state, with automatic increment halving on
/// nonconvergence.
pub fn load_sweep(
    model: &dyn NonlinearModel,
    unit_load: &DVector<f64>,
    levels: &[f64],
    cfg: &IterationConfig,
) -> Result<EquilibriumPath> {
    cfg.validate()?;
    if levels.is_empty() {
        return Err(Error::InvalidConfig("load sweep needs at least one level".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "load levels must be strictly increasing".into(),
        ));
    }
    let mut q = DVector::zeros(model.ndof());
    let mut path = EquilibriumPath {
        levels: Vec::with_capacity(levels.len()),
        states: Vec::with_capacity(levels.len()),
        iterations: Vec::with_capacity(levels.len()),
        residuals: Vec::with_capacity(levels.len()),
    };
    let mut prev = 0.0;
    for &level in levels {
        let its = advance_level(model, unit_load, &mut q, prev, level, cfg, 0)?;
        let f = unit_load * level;
        let residual = (model.internal_force(&q) - &f).norm() / f.norm().max(f64::MIN_POSITIVE);
        path.levels.push(level);
        path.states.push(q.clone());
        path.iterations.push(its);
        path.residuals.push(residual);
        prev = level;
    }
    Ok(path)
}

/// Newmark time-integration parameters. The defaults are the
/// unconditionally stable average-acceleration pair.
#[derive(Clone, Copy, Debug)]
pub struct NewmarkConfig {
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl NewmarkConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            beta: 0.25,
            gamma: 0.5,
            dt,
            n_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "Newmark beta must lie in (0, 0.5], got {}",
                self.beta
            )));
        }
        if !(self.gamma >= 0.5 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Newmark gamma must lie in [0.5, 1], got {}",
                self.gamma
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Time modulation of the spatial load pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LoadHistory {
    /// Suddenly applied and held: `F0(t) = 1`.
    Step,
    /// Linear ramp-down `1 - t/t1`, zero after `t1`.
    Triangular { t1: f64 },
    /// Half sine pulse `sin(pi t / t1)`, zero after `t1`.
    HalfSine { t1: f64 },
    /// Exponential blast decay `exp(-alpha t)`.
    Blast { alpha: f64 },
}

impl LoadHistory {
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            LoadHistory::Step => 1.0,
            LoadHistory::Triangular { t1 } => {
                if t <= t1 {
                    1.0 - t / t1
                } else {
                    0.0
                }
            }
            LoadHistory::HalfSine { t1 } => {
                if t <= t1 {
                    (std::f64::consts::PI * t / t1).sin()
                } else {
                    0.0
                }
            }
            LoadHistory::Blast { alpha } => (-alpha * t).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LoadHistory::Triangular { t1 } | LoadHistory::HalfSine { t1 } if !(t1 > 0.0) => {
                Err(Error::InvalidConfig(format!(
                    "load history duration must be positive, got {t1}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Displacement history produced by the Newmark integrator. The first
/// entry is the (zero) initial state at `t = 0`.
#[derive(Clone, Debug)]
pub struct TransientResponse {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub iterations: Vec<usize>,
}

/// Integrates the equations of motion from rest with the Newmark scheme.
///
/// In linear mode the effective stiffness `K_L + M/(beta dt^2)` is
/// factored once and every step is a single back-substitution. In
/// nonlinear mode each step runs the configured inner iteration on the
/// effective system.
pub fn newmark_transient(
    model: &dyn NonlinearModel,
    spatial_load: &DVector<f64>,
    history: LoadHistory,
    nm: &NewmarkConfig,
    it: &IterationConfig,
    nonlinear: bool,
) -> Result<TransientResponse> {
    nm.validate()?;
    it.validate()?;
    history.validate()?;
    let mass = model.mass().ok_or_else(|| {
        Error::InvalidConfig("transient analysis requires a laminate with mass".into())
    })?;
    let n = model.ndof();
    let dt = nm.dt;
    let a1 = 1.0 / (nm.beta * dt * dt);
    let a2 = 1.0 / (nm.beta * dt);
    let a3 = 0.5 / nm.beta - 1.0;

    let mut q = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    // Initial acceleration from the equation of motion at t = 0; the
    // constrained mass gets unit diagonals at fixed DOFs so the solve is
    // well posed (their right-hand side is zero).
    let mut m_solve = mass.clone();
    for &i in model.fixed_dofs() {
        m_solve.zero_row_col(i, 1.0);
    }
    let f0 = spatial_load * history.factor(0.0);
    let mut acc = DVector::from_vec(m_solve.ldlt()?.solve(f0.as_slice()));

    let mut response = TransientResponse {
        times: vec![0.0],
        states: vec![q.clone()],
        iterations: vec![0],
    };

    // Linear mode: factor the effective stiffness once.
    let linear_factor = if nonlinear {
        None
    } else {
        let mut khat = model.linear_stiffness().clone();
        khat.add_scaled(mass, a1);
        Some(khat.ldlt()?)
    };

    for step in 1..=nm.n_steps {
        let t = dt * step as f64;
        let f_now = spatial_load * history.factor(t);
        // Inertial history vector M (a1 q_m + a2 v_m + a3 acc_m).
        let hist_vec = DVector::from_vec(
            mass.matvec((&q * a1 + &v * a2 + &acc * a3).as_slice()),
        );
        let rhs = &f_now + &hist_vec;

        let (q_new, iters) = if let Some(factor) = &linear_factor {
            (DVector::from_vec(factor.solve(rhs.as_slice())), 1)
        } else {
            match it.scheme {
                IterationScheme::Picard => {
                    newmark_picard_step(model, mass, a1, &rhs, &q, it, step)?
                }
                IterationScheme::Newton => {
                    newmark_newton_step(model, mass, a1, &f_now, &hist_vec, &q, it, step)?
                }
            }
        };

        let acc_new = (&q_new - &q) * a1 - &v * a2 - &acc * a3;
        let v_new = &v + (&acc * (1.0 - nm.gamma) + &acc_new * nm.gamma) * dt;
        q = q_new;
        v = v_new;
        acc = acc_new;
        response.times.push(t);
        response.states.push(q.clone());
        response.iterations.push(iters);
    }
    Ok(response)
}

#[allow(clippy::too_many_arguments)]
fn newmark_picard_step(
    model: &dyn NonlinearModel,
    mass: &SymBanded,
    a1: f64,
    rhs: &DVector<f64>,
    q_start: &DVector<f64>,
    it: &IterationConfig,
    step: usize,
) -> Result<(DVector<f64>, usize)> {
    let mut q = q_start.clone();
    let mut last_err = f64::INFINITY;
    let mut growth = 0usize;
    for iter in 1..=it.max_iterations {
        let mut khat = model.secant(&q);
        khat.add_scaled_sym(mass, a1);
        let q_new = DVector::from_vec(khat.lu()?.solve(rhs.as_slice()));
        let dq = &q_new - &q;
        q = q_new;
        let err = increment_error(&dq, &q);
        if err < it.tolerance {
            return Ok((q, iter));
        }
        if err > last_err {
            growth += 1;
            if growth >= 5 {
                return Err(Error::Nonconvergence {
                    context: format!("Picard diverging in time step {step}"),
                    iterations: iter,
                    last_error: err,
                });
            }
        } else {
            growth = 0;
        }
        last_err = err;
    }
    Err(Error::Nonconvergence {
        context: format!("Picard iteration in time step {step}"),
        iterations: it.max_iterations,
        last_error: last_err,
    })
}

#[allow(clippy::too_many_arguments)]
fn newmark_newton_step(
    model: &dyn NonlinearModel,
    mass: &SymBanded,
    a1: f64,
    f_now: &DVector<f64>,
    hist_vec: &DVector<f64>,
    q_start: &DVector<f64>,
    it: &IterationConfig,
    step: usize,
) -> Result<(DVector<f64>, usize)> {
    let mut q = q_start.clone();
    for iter in 1..=it.max_iterations {
        // psi = f_int(q) + a1 M q - (F + M(a1 q_m + a2 v_m + a3 acc_m)).
        let inertial = DVector::from_vec(mass.matvec((&q * a1).as_slice()));
        let psi = model.internal_force(&q) + inertial - f_now - hist_vec;
        let mut khat = model.tangent(&q);
        khat.add_scaled(mass, a1);
        let dq = -DVector::from_vec(khat.ldlt()?.solve(psi.as_slice()));
        q += &dq;
        let err = increment_error(&dq, &q);
        if err < it.tolerance {
            return Ok((q, iter));
        }
    }
    Err(Error::Nonconvergence {
        context: format!("Newton iteration in time step {step}"),
        iterations: it.max_iterations,
        last_error: f64::NAN,
    })
}

/// Fundamental natural period `T1 = 2 pi / omega_1` of the constrained
/// linear system, by inverse power iteration on `K x = omega^2 M x`.
pub fn fundamental_period(model: &dyn NonlinearModel) -> Result<f64> {
    let k = model.linear_stiffness();
    let mass = model.mass().ok_or_else(|| {
        Error::InvalidConfig("fundamental period requires a laminate with mass".into())
    })?;
    let n = model.ndof();
    let factor = k.ldlt()?;

    // Deterministic start vector supported on the free DOFs.
    let mut x = DVector::from_element(n, 1.0);
    for &i in model.fixed_dofs() {
        x[i] = 0.0;
    }
    let mut omega2_prev = f64::INFINITY;
    for _ in 0..500 {
        let mx = DVector::from_vec(mass.matvec(x.as_slice()));
        let mut y = DVector::from_vec(factor.solve(mx.as_slice()));
        let norm = y.norm();
        if norm == 0.0 {
            return Err(Error::SingularSystem(
                "inverse power iteration collapsed to zero (massless system?)".into(),
            ));
        }
        y /= norm;
        let ky = DVector::from_vec(k.matvec(y.as_slice()));
        let my = DVector::from_vec(mass.matvec(y.as_slice()));
        let denom = y.dot(&my);
        if denom <= 0.0 {
            return Err(Error::SingularSystem(
                "mass quadratic form not positive on iterate".into(),
            ));
        }
        let omega2 = y.dot(&ky) / denom;
        if (omega2 - omega2_prev).abs() <= POWER_ITERATION_TOL * omega2.abs() {
            return Ok(2.0 * std::f64::consts::PI / omega2.sqrt());
        }
        omega2_prev = omega2;
        x = y;
    }
    Err(Error::Nonconvergence {
        context: "inverse power iteration for the fundamental period".into(),
        iterations: 500,
        last_error: f64::NAN,
    })
}
