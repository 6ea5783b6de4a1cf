//! Analysis drivers and result writers.
//!
//! A run produces two files in the output directory: `results.csv` (one row
//! per load level or time step, plot-ready) and `results.json` (the full
//! archive with run metadata). CSV floats carry nine significant digits and
//! the writers format every value themselves, so identical configurations
//! yield byte-identical output regardless of thread count.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::assembly::assemble_load;
use crate::error::{Error, Result};
use crate::postproc::{point_displacement, point_stress};
use crate::solvers::{
    advance_level, fundamental_period, newmark_transient, solve_linear_static, IterationScheme,
    NewmarkConfig, NonlinearModel,
};

use super::config::{AnalysisKind, Problem, ProblemConfig};

/// Fowler–Noll–Vo 64-bit hash of the raw configuration text, recorded in
/// the archive so results can be traced back to their exact input.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in text.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Formats one floating value with nine significant digits, the fixed CSV
/// number contract.
fn fmt(value: f64) -> String {
    format!("{value:.8e}")
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeshInfo {
    pub n_elements: usize,
    pub degrees: [usize; 2],
    pub ndof: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverInfo {
    pub scheme: String,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// One converged static equilibrium point, already nondimensionalized.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StaticRow {
    pub load_parameter: f64,
    pub center_deflection: f64,
    pub center_sigma_xx: f64,
    pub iterations: usize,
}

/// One transient step, already nondimensionalized.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TransientRow {
    pub time: f64,
    pub center_deflection: f64,
    pub iterations: usize,
}

/// Full machine-readable record of one analysis.
#[derive(Clone, Debug, Serialize)]
pub struct ResultArchive {
    /// Version of this archive layout.
    pub schema: u32,
    pub command: String,
    pub config_hash: String,
    pub mesh: MeshInfo,
    pub solver: SolverInfo,
    pub normalization: String,
    pub analysis: String,
    /// False when the run stopped early; `failure` then explains why and
    /// the rows hold the partial path up to the last converged level.
    pub converged: bool,
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_rows: Option<Vec<StaticRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient_rows: Option<Vec<TransientRow>>,
}

impl ResultArchive {
    /// Renders the archive as pretty-printed JSON with a trailing newline,
    /// the exact byte format of `results.json`.
    pub fn to_json(&self) -> Result<String> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        json.push('\n');
        Ok(json)
    }
}

pub const STATIC_HEADER: &str = "load_parameter,center_deflection,center_sigma_xx,iterations";
pub const TRANSIENT_HEADER: &str = "time,center_deflection,iterations";

pub fn static_csv(rows: &[StaticRow]) -> String {
    let mut out = String::from(STATIC_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(r.load_parameter),
            fmt(r.center_deflection),
            fmt(r.center_sigma_xx),
            r.iterations
        ));
    }
    out
}

pub fn transient_csv(rows: &[TransientRow]) -> String {
    let mut out = String::from(TRANSIENT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(r.time),
            fmt(r.center_deflection),
            r.iterations
        ));
    }
    out
}

fn mesh_info(problem: &Problem) -> MeshInfo {
    let mesh = problem.model.mesh();
    let (p, q) = mesh.patch().degrees();
    MeshInfo {
        n_elements: mesh.elements().len(),
        degrees: [p, q],
        ndof: mesh.ndof(),
    }
}

fn solver_info(problem: &Problem) -> SolverInfo {
    SolverInfo {
        scheme: match problem.iteration.scheme {
            IterationScheme::Newton => "newton".into(),
            IterationScheme::Picard => "picard".into(),
        },
        tolerance: problem.iteration.tolerance,
        max_iterations: problem.iteration.max_iterations,
    }
}

/// Evaluates the reporting-point quantities for one converged state.
fn probe_static(problem: &Problem, state: &DVector<f64>, q0_raw: f64) -> Result<(f64, f64)> {
    let patch = problem.model.mesh().patch();
    let (cx, cy) = problem.center;
    let w = point_displacement(patch, state.as_slice(), cx, cy)?.w;
    let top = problem.model.laminate().thickness() / 2.0;
    let sigma = point_stress(patch, problem.model.laminate(), state.as_slice(), cx, cy, top)?;
    Ok((
        problem.rule.deflection(w, q0_raw),
        problem.rule.in_plane_stress(sigma.sigma[0], q0_raw),
    ))
}

/// Outcome of one analysis: the archive plus the process exit code the
/// caller should propagate (0 on success, 3 on a flagged partial archive).
pub struct RunOutcome {
    pub archive: ResultArchive,
    pub csv: String,
    pub exit: i32,
}

/// Runs the configured analysis and renders its outputs in memory.
///
/// Solver nonconvergence along a static sweep does not return an error:
/// the archive is flagged (`converged = false`, `failure` set) and carries
/// the levels reached so far, and the exit code is 3. Configuration-class
/// errors propagate as `Err`.
pub fn execute(cfg: &ProblemConfig, raw_toml: &str, command: &str) -> Result<RunOutcome> {
    let problem = cfg.build()?;
    let meta = |rows_s: Option<Vec<StaticRow>>,
                rows_t: Option<Vec<TransientRow>>,
                converged: bool,
                failure: Option<String>| {
        ResultArchive {
            schema: 1,
            command: command.to_string(),
            config_hash: config_hash(raw_toml),
            mesh: mesh_info(&problem),
            solver: solver_info(&problem),
            normalization: cfg.normalization.kind.clone(),
            analysis: cfg.analysis.kind.clone(),
            converged,
            failure,
            static_rows: rows_s,
            transient_rows: rows_t,
        }
    };

    if problem.analysis.is_transient() {
        let rows = run_transient(&problem)?;
        let archive = meta(None, Some(rows.clone()), true, None);
        return Ok(RunOutcome {
            csv: transient_csv(&rows),
            archive,
            exit: 0,
        });
    }

    let (rows, failure) = run_static(&problem)?;
    let converged = failure.is_none();
    let exit = if converged { 0 } else { 3 };
    let archive = meta(Some(rows.clone()), None, converged, failure);
    Ok(RunOutcome {
        csv: static_csv(&rows),
        archive,
        exit,
    })
}

/// Drives the static load levels. Returns the converged rows and, when
/// the sweep stopped early, the failure diagnostic.
fn run_static(problem: &Problem) -> Result<(Vec<StaticRow>, Option<String>)> {
    if problem.levels.is_empty() {
        // Nothing to apply: report the trivial unloaded equilibrium.
        return Ok((
            vec![StaticRow {
                load_parameter: 0.0,
                center_deflection: 0.0,
                center_sigma_xx: 0.0,
                iterations: 0,
            }],
            None,
        ));
    }

    let model = &problem.model;
    let mut f_unit = assemble_load(model.mesh(), &problem.pattern);
    model.constrain_force(&mut f_unit);

    let mut rows = Vec::with_capacity(problem.levels.len());
    let mut q = DVector::zeros(model.ndof());
    let mut prev = 0.0;
    for level in &problem.levels {
        let iterations = if problem.analysis == AnalysisKind::LinearStatic {
            q = solve_linear_static(model.linear_stiffness(), &(&f_unit * level.raw))?;
            1
        } else {
            match advance_level(model, &f_unit, &mut q, prev, level.raw, &problem.iteration, 0) {
                Ok(n) => n,
                Err(e @ (Error::Nonconvergence { .. } | Error::SingularSystem(_))) => {
                    return Ok((rows, Some(e.to_string())));
                }
                Err(e) => return Err(e),
            }
        };
        let (wbar, sbar) = probe_static(problem, &q, level.raw)?;
        rows.push(StaticRow {
            load_parameter: level.parameter,
            center_deflection: wbar,
            center_sigma_xx: sbar,
            iterations,
        });
        prev = level.raw;
    }
    Ok((rows, None))
}

/// Integrates the transient response and reports the center deflection
/// per step.
fn run_transient(problem: &Problem) -> Result<Vec<TransientRow>> {
    let model = &problem.model;
    let mut spatial = assemble_load(model.mesh(), &problem.pattern) * problem.q0;
    model.constrain_force(&mut spatial);

    let dt = match problem.dt {
        Some(dt) => dt,
        None => fundamental_period(model)? / 100.0,
    };
    let nm = NewmarkConfig::new(dt, problem.n_steps);
    let response = newmark_transient(
        model,
        &spatial,
        problem.history,
        &nm,
        &problem.iteration,
        problem.analysis.is_nonlinear(),
    )?;

    // One basis evaluation at the reporting point serves every step.
    let patch = model.mesh().patch();
    let (cx, cy) = problem.center;
    let (xi, eta) = patch.invert_point(cx, cy)?;
    let rb = patch.rational_basis(xi, eta, 0)?;

    let mut rows = Vec::with_capacity(response.times.len());
    for ((&t, state), &iters) in response
        .times
        .iter()
        .zip(&response.states)
        .zip(&response.iterations)
    {
        let w: f64 = rb
            .indices
            .iter()
            .zip(&rb.r)
            .map(|(&idx, &r)| r * state[crate::kinematics::dof::PER_NODE * idx + crate::kinematics::dof::W])
            .sum();
        rows.push(TransientRow {
            time: t,
            center_deflection: problem.rule.deflection(w, problem.q0),
            iterations: iters,
        });
    }
    Ok(rows)
}

/// Writes the CSV and JSON files of a finished run into `out_dir`,
/// creating the directory when necessary.
pub fn write_outputs(out_dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("results.csv"), &outcome.csv)?;
    let mut json = serde_json::to_string_pretty(&outcome.archive)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    json.push('\n');
    fs::write(out_dir.join("results.json"), json)?;
    Ok(())
}
