//! Self-contained benchmark scenarios with published reference solutions.
//!
//! Each benchmark reconstructs a problem from the nonlinear laminated-plate
//! literature on the default 11×11 cubic mesh, runs it end to end through
//! the same configuration pipeline the `run` command uses, and compares the
//! computed nondimensional results against the published values frozen
//! here. A report lists every comparison; any miss fails the benchmark.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};

use super::config::{
    AnalysisConfig, GeometryConfig, LayupConfig, LoadConfig, MaterialConfig, MeshConfig,
    NormalizationConfig, ProblemConfig, SolverConfig,
};
use super::runner::{self, TransientRow};

/// How a computed value is judged.
#[derive(Clone, Copy, Debug)]
pub enum Criterion {
    /// Relative error against a published value must not exceed `tol`.
    Within { published: f64, tol: f64 },
    /// The computed value must lie strictly below `bound`.
    Below { bound: f64 },
}

/// One computed-vs-reference comparison.
#[derive(Clone, Debug)]
pub struct Check {
    pub label: String,
    pub computed: f64,
    pub criterion: Criterion,
}

impl Check {
    pub fn passes(&self) -> bool {
        match self.criterion {
            Criterion::Within { published, tol } => {
                (self.computed - published).abs() <= tol * published.abs()
            }
            Criterion::Below { bound } => self.computed < bound,
        }
    }

    /// One formatted report line for this comparison.
    pub fn line(&self) -> String {
        let status = if self.passes() { "PASS" } else { "FAIL" };
        match self.criterion {
            Criterion::Within { published, tol } => {
                let rel = (self.computed - published).abs() / published.abs();
                format!(
                    "{status}  {label:<40} computed {c:>12.6}  published {p:>12.6}  rel.err {rel:.2e} (tol {tol:.1e})",
                    label = self.label,
                    c = self.computed,
                    p = published,
                )
            }
            Criterion::Below { bound } => format!(
                "{status}  {label:<40} computed {c:>12.6}  bound {bound:>12.6}",
                label = self.label,
                c = self.computed,
            ),
        }
    }
}

/// Everything a benchmark produces: comparisons plus plot-ready data files.
pub struct BenchReport {
    pub name: String,
    pub checks: Vec<Check>,
    /// `(file name, contents)` pairs written next to the report.
    pub series: Vec<(String, String)>,
    pub elapsed_s: f64,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passes)
    }

    pub fn report_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "benchmark {}", self.name);
        for check in &self.checks {
            let _ = writeln!(out, "{}", check.line());
        }
        let n_pass = self.checks.iter().filter(|c| c.passes()).count();
        let _ = writeln!(
            out,
            "summary: {n_pass}/{} checks passed in {:.1} s",
            self.checks.len(),
            self.elapsed_s
        );
        out
    }
}

/// Runs one of the named benchmarks.
pub fn run_named(name: &str) -> Result<BenchReport> {
    let start = Instant::now();
    let (checks, series) = match name {
        "table1" => clamped_isotropic_square(),
        "table2" => clamped_isotropic_circle(),
        "table3" => pinned_cross_ply_sweep(),
        "table4" => simply_supported_laminates(),
        "fig11" => transient_step_square(),
        "fig13" => transient_pulse_family(),
        other => Err(Error::InvalidConfig(format!(
            "unknown benchmark '{other}' (expected table1, table2, table3, table4, fig11, or fig13)"
        ))),
    }?;
    Ok(BenchReport {
        name: name.to_string(),
        checks,
        series,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Writes the report and every data series into `out_dir`.
pub fn write_outputs(out_dir: &Path, report: &BenchReport) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.txt"), report.report_text())?;
    for (file, contents) in &report.series {
        fs::write(out_dir.join(file), contents)?;
    }
    Ok(())
}

type BenchData = (Vec<Check>, Vec<(String, String)>);

fn base_static(levels: &[f64]) -> AnalysisConfig {
    AnalysisConfig {
        kind: "nonlinear-static".into(),
        load_levels: levels.to_vec(),
        dt: None,
        n_steps: None,
    }
}

fn newton(tolerance: f64) -> SolverConfig {
    SolverConfig {
        scheme: "newton".into(),
        tolerance,
        max_iterations: 50,
    }
}

/// Hash source for benchmark archives (benchmarks have no config file).
fn tag(name: &str) -> String {
    format!("bench:{name}")
}

fn run_rows(cfg: &ProblemConfig, name: &str) -> Result<Vec<runner::StaticRow>> {
    let outcome = runner::execute(cfg, &tag(name), name)?;
    match outcome.archive.failure {
        None => Ok(outcome.archive.static_rows.unwrap_or_default()),
        Some(reason) => Err(Error::InvalidConfig(format!(
            "benchmark {name} did not converge: {reason}"
        ))),
    }
}

fn run_transient_rows(cfg: &ProblemConfig, name: &str) -> Result<Vec<TransientRow>> {
    let outcome = runner::execute(cfg, &tag(name), name)?;
    Ok(outcome.archive.transient_rows.unwrap_or_default())
}

/// Clamped isotropic square plate under uniform pressure: nine load levels,
/// center deflection and center top-surface bending stress.
fn clamped_isotropic_square() -> Result<BenchData> {
    const LEVELS: [f64; 9] = [17.8, 38.3, 63.4, 95.0, 134.9, 184.0, 245.0, 318.0, 402.0];
    const W_BAR: [f64; 9] = [
        0.2367, 0.4693, 0.6910, 0.9025, 1.1061, 1.3009, 1.4928, 1.6786, 1.8555,
    ];
    const S_BAR: [f64; 9] = [
        2.5626, 5.3273, 8.0998, 10.8273, 13.5223, 16.1806, 18.9069, 21.6797, 24.4700,
    ];
    /// Published deflections carry four decimals; 1% covers both the print
    /// precision and the mesh-level discretization differences.
    const W_TOL: f64 = 0.01;
    /// Stress is recovered by differentiation, one order less accurate
    /// than the deflection it comes from.
    const S_TOL: f64 = 0.025;

    let (e, nu) = (1.0e7, 0.316);
    let cfg = ProblemConfig {
        geometry: GeometryConfig::Rectangle { lx: 1.0, ly: 1.0 },
        thickness: 0.01,
        layup: LayupConfig {
            angles: vec![0.0],
            material: "custom".into(),
            e2: None,
            fractions: None,
        },
        material: Some(MaterialConfig {
            e1: e,
            e2: e,
            g12: e / (2.0 * (1.0 + nu)),
            g13: e / (2.0 * (1.0 + nu)),
            g23: e / (2.0 * (1.0 + nu)),
            nu12: nu,
            rho: 0.0,
        }),
        bc: "cccc".into(),
        mesh: MeshConfig::default(),
        load: LoadConfig {
            kind: "uniform".into(),
            q0: 0.0,
            history: None,
            t1: None,
            alpha: None,
        },
        analysis: base_static(&LEVELS),
        solver: newton(0.01),
        normalization: NormalizationConfig {
            kind: "isotropic-square".into(),
        },
    };

    let rows = run_rows(&cfg, "table1")?;
    let mut checks = Vec::new();
    for (row, (&w, &s)) in rows.iter().zip(W_BAR.iter().zip(&S_BAR)) {
        checks.push(Check {
            label: format!("w/h at P = {}", row.load_parameter),
            computed: row.center_deflection,
            criterion: Criterion::Within { published: w, tol: W_TOL },
        });
        checks.push(Check {
            label: format!("sigma_xx a^2/(E h^2) at P = {}", row.load_parameter),
            computed: row.center_sigma_xx,
            criterion: Criterion::Within { published: s, tol: S_TOL },
        });
    }
    Ok((checks, vec![("results.csv".into(), runner::static_csv(&rows))]))
}

/// Clamped isotropic circular plate under uniform pressure.
fn clamped_isotropic_circle() -> Result<BenchData> {
    const LEVELS: [f64; 6] = [1.0, 2.0, 3.0, 6.0, 10.0, 15.0];
    const W_BAR: [f64; 6] = [0.1669, 0.3208, 0.4562, 0.7671, 1.0487, 1.2989];
    /// Slightly wider than the square-plate tolerance: the disk geometry
    /// is rational with a singular parametrization at the corners, which
    /// costs some quadrature accuracy.
    const W_TOL: f64 = 0.015;

    let (e, nu) = (1.0e7, 0.3);
    let cfg = ProblemConfig {
        geometry: GeometryConfig::Circle { radius: 1.0 },
        thickness: 0.02,
        layup: LayupConfig {
            angles: vec![0.0],
            material: "custom".into(),
            e2: None,
            fractions: None,
        },
        material: Some(MaterialConfig {
            e1: e,
            e2: e,
            g12: e / (2.0 * (1.0 + nu)),
            g13: e / (2.0 * (1.0 + nu)),
            g23: e / (2.0 * (1.0 + nu)),
            nu12: nu,
            rho: 0.0,
        }),
        bc: "cccc".into(),
        mesh: MeshConfig::default(),
        load: LoadConfig {
            kind: "uniform".into(),
            q0: 0.0,
            history: None,
            t1: None,
            alpha: None,
        },
        analysis: base_static(&LEVELS),
        solver: newton(0.01),
        normalization: NormalizationConfig {
            kind: "clamped-circle".into(),
        },
    };

    let rows = run_rows(&cfg, "table2")?;
    let mut checks = Vec::new();
    for (row, &w) in rows.iter().zip(&W_BAR) {
        checks.push(Check {
            label: format!("w/h at P = {}", row.load_parameter),
            computed: row.center_deflection,
            criterion: Criterion::Within { published: w, tol: W_TOL },
        });
    }
    // Thin-plate closed form: a clamped Kirchhoff disk deflects
    // w/h = 12 (1 - nu^2)/64 per unit load parameter; membrane stiffening
    // keeps the nonlinear value strictly below that.
    let kirchhoff = 12.0 * (1.0 - nu * nu) / 64.0;
    checks.push(Check {
        label: "w/h at P = 1 vs thin-plate bound".into(),
        computed: rows[0].center_deflection,
        criterion: Criterion::Below { bound: kirchhoff },
    });
    Ok((checks, vec![("results.csv".into(), runner::static_csv(&rows))]))
}

fn cross_ply_config(
    l_over_h: f64,
    angles: &[f64],
    bc: &str,
    load_kind: &str,
    levels: &[f64],
) -> ProblemConfig {
    ProblemConfig {
        geometry: GeometryConfig::Rectangle { lx: 1.0, ly: 1.0 },
        thickness: 1.0 / l_over_h,
        layup: LayupConfig {
            angles: angles.to_vec(),
            material: "III".into(),
            e2: None,
            fractions: None,
        },
        material: None,
        bc: bc.into(),
        mesh: MeshConfig::default(),
        load: LoadConfig {
            kind: load_kind.into(),
            q0: 0.0,
            history: None,
            t1: None,
            alpha: None,
        },
        analysis: base_static(levels),
        solver: newton(0.01),
        normalization: NormalizationConfig {
            kind: "composite".into(),
        },
    }
}

/// Symmetric cross-ply square with fully restrained in-plane edges, three
/// side-to-thickness ratios.
fn pinned_cross_ply_sweep() -> Result<BenchData> {
    const LEVELS: [f64; 5] = [50.0, 100.0, 150.0, 200.0, 250.0];
    const CASES: [(f64, [f64; 5]); 3] = [
        (40.0, [0.2936, 0.4643, 0.5798, 0.6683, 0.7407]),
        (20.0, [0.3126, 0.4807, 0.5928, 0.6784, 0.7486]),
        (10.0, [0.3609, 0.5179, 0.6213, 0.7005, 0.7659]),
    ];
    const W_TOL: f64 = 0.02;

    let mut checks = Vec::new();
    let mut series = Vec::new();
    for (l_over_h, published) in CASES {
        let cfg = cross_ply_config(l_over_h, &[0.0, 90.0, 90.0, 0.0], "ssss2", "uniform", &LEVELS);
        let rows = run_rows(&cfg, "table3")?;
        for (row, &w) in rows.iter().zip(&published) {
            checks.push(Check {
                label: format!("w/h at L/h = {l_over_h}, P = {}", row.load_parameter),
                computed: row.center_deflection,
                criterion: Criterion::Within { published: w, tol: W_TOL },
            });
        }
        series.push((format!("lh{l_over_h}.csv"), runner::static_csv(&rows)));
    }
    Ok((checks, series))
}

/// Simply supported symmetric laminates, linear and nonlinear, two layups
/// and four side-to-thickness ratios.
// One tabulated reference deflection happens to sit near 2/sqrt(pi); the
// resemblance is numerological, not mathematical.
#[allow(clippy::approx_constant)]
fn simply_supported_laminates() -> Result<BenchData> {
    const LEVELS: [f64; 4] = [50.0, 100.0, 200.0, 300.0];
    const LH: [f64; 4] = [4.0, 10.0, 20.0, 100.0];
    const W_TOL: f64 = 0.02;
    struct LayupCase {
        tag: &'static str,
        angles: &'static [f64],
        linear: [[f64; 4]; 4],
        nonlinear: [[f64; 4]; 4],
    }
    const CASES: [LayupCase; 2] = [
        LayupCase {
            tag: "0-90-90-0",
            angles: &[0.0, 90.0, 90.0, 0.0],
            linear: [
                [0.947, 1.894, 3.787, 5.681],
                [0.357, 0.715, 1.430, 2.144],
                [0.253, 0.506, 1.012, 1.518],
                [0.217, 0.434, 0.868, 1.303],
            ],
            nonlinear: [
                [0.7198, 1.1214, 1.6555, 2.0447],
                [0.3474, 0.6501, 1.1148, 1.4612],
                [0.2504, 0.4872, 0.8960, 1.2255],
                [0.2159, 0.4243, 0.7993, 1.1146],
            ],
        },
        LayupCase {
            tag: "0-90-0",
            angles: &[0.0, 90.0, 0.0],
            linear: [
                [0.961, 1.922, 3.844, 5.765],
                [0.356, 0.712, 1.425, 2.137],
                [0.252, 0.504, 1.008, 1.513],
                [0.217, 0.434, 0.868, 1.303],
            ],
            nonlinear: [
                [0.7262, 1.1284, 1.6606, 2.0475],
                [0.3462, 0.6478, 1.1116, 1.4586],
                [0.2494, 0.4849, 0.8921, 1.2190],
                [0.2158, 0.4238, 0.7969, 1.1101],
            ],
        },
    ];

    let mut checks = Vec::new();
    let mut series = Vec::new();
    for case in &CASES {
        for (i, &lh) in LH.iter().enumerate() {
            for (mode, published) in [("linear", &case.linear[i]), ("nonlinear", &case.nonlinear[i])]
            {
                // The reference problem drives these laminates with a
                // doubly sinusoidal pressure (the classic 3D-elasticity
                // comparison case), unlike the uniform load elsewhere.
                let mut cfg = cross_ply_config(lh, case.angles, "ssss", "sinusoidal", &LEVELS);
                if mode == "linear" {
                    cfg.analysis.kind = "linear-static".into();
                }
                let rows = run_rows(&cfg, "table4")?;
                for (row, &w) in rows.iter().zip(published.iter()) {
                    checks.push(Check {
                        label: format!(
                            "w/h [{}] L/h = {lh} {mode} P = {}",
                            case.tag, row.load_parameter
                        ),
                        computed: row.center_deflection,
                        criterion: Criterion::Within { published: w, tol: W_TOL },
                    });
                }
                series.push((
                    format!("{}_lh{lh}_{mode}.csv", case.tag),
                    runner::static_csv(&rows),
                ));
            }
        }
    }
    Ok((checks, series))
}

/// First local maximum of the deflection magnitude along a transient
/// response; falls back to the global maximum for monotone series.
fn first_peak(rows: &[TransientRow]) -> (f64, f64) {
    for i in 1..rows.len().saturating_sub(1) {
        let (a, b, c) = (
            rows[i - 1].center_deflection.abs(),
            rows[i].center_deflection.abs(),
            rows[i + 1].center_deflection.abs(),
        );
        if b > a && b >= c {
            return (rows[i].time, b);
        }
    }
    rows.iter()
        .map(|r| (r.time, r.center_deflection.abs()))
        .fold((0.0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn merged_transient_csv(linear: &[TransientRow], nonlinear: &[TransientRow]) -> String {
    let mut out = String::from("time,center_deflection_linear,center_deflection_nonlinear\n");
    for (l, n) in linear.iter().zip(nonlinear) {
        out.push_str(&format!(
            "{:.8e},{:.8e},{:.8e}\n",
            l.time, l.center_deflection, n.center_deflection
        ));
    }
    out
}

fn transient_config(
    geometry: GeometryConfig,
    thickness: f64,
    angles: &[f64],
    material: &str,
    load_kind: &str,
    q0: f64,
    n_steps: usize,
) -> ProblemConfig {
    ProblemConfig {
        geometry,
        thickness,
        layup: LayupConfig {
            angles: angles.to_vec(),
            material: material.into(),
            e2: None,
            fractions: None,
        },
        material: None,
        bc: "ssss".into(),
        mesh: MeshConfig::default(),
        load: LoadConfig {
            kind: load_kind.into(),
            q0,
            history: Some("step".into()),
            t1: None,
            alpha: None,
        },
        analysis: AnalysisConfig {
            kind: "nonlinear-transient".into(),
            load_levels: vec![],
            dt: None,
            n_steps: Some(n_steps),
        },
        solver: SolverConfig {
            scheme: "newton".into(),
            // Transient peaks are compared point by point, so each step is
            // converged much tighter than the static benchmarks need.
            tolerance: 1e-6,
            max_iterations: 50,
        },
        normalization: NormalizationConfig {
            kind: "composite".into(),
        },
    }
}

/// Orthotropic square plate under a suddenly applied uniform pressure:
/// geometric stiffening must lower the first displacement peak and shorten
/// the period relative to the linear response.
fn transient_step_square() -> Result<BenchData> {
    let mut cfg = transient_config(
        GeometryConfig::Rectangle { lx: 0.25, ly: 0.25 },
        0.005,
        &[0.0],
        "V",
        "uniform",
        1.0e6,
        150,
    );
    let nl = run_transient_rows(&cfg, "fig11")?;
    cfg.analysis.kind = "linear-transient".into();
    let lin = run_transient_rows(&cfg, "fig11")?;

    let (t_nl, w_nl) = first_peak(&nl);
    let (t_lin, w_lin) = first_peak(&lin);
    let checks = vec![
        Check {
            label: "first-peak ratio |w_nl|/|w_lin|".into(),
            computed: w_nl / w_lin,
            criterion: Criterion::Below { bound: 1.0 },
        },
        Check {
            label: "first-peak time ratio t_nl/t_lin".into(),
            computed: t_nl / t_lin,
            criterion: Criterion::Below { bound: 1.0 },
        },
    ];
    Ok((
        checks,
        vec![("results.csv".into(), merged_transient_csv(&lin, &nl))],
    ))
}

/// Cross-ply square plate under a sinusoidal pressure with four different
/// time modulations; the stiffening response stays inside the linear
/// envelope for every history.
fn transient_pulse_family() -> Result<BenchData> {
    let base = transient_config(
        GeometryConfig::Rectangle { lx: 0.763, ly: 0.763 },
        0.1526,
        &[0.0, 90.0, 0.0],
        "VI",
        "sinusoidal",
        0.689e9,
        200,
    );
    // Pulse durations reference the fundamental period of the problem.
    let t1 = {
        let problem = base.build()?;
        crate::solvers::fundamental_period(&problem.model)? / 2.0
    };

    let histories: [(&str, Option<f64>, Option<f64>); 4] = [
        ("step", None, None),
        ("triangular", Some(t1), None),
        ("half-sine", Some(t1), None),
        ("blast", None, Some(330.0)),
    ];

    let mut checks = Vec::new();
    let mut series = Vec::new();
    for (history, t1, alpha) in histories {
        let mut cfg = base.clone();
        cfg.load.history = Some(history.into());
        cfg.load.t1 = t1;
        cfg.load.alpha = alpha;
        let nl = run_transient_rows(&cfg, "fig13")?;
        cfg.analysis.kind = "linear-transient".into();
        let lin = run_transient_rows(&cfg, "fig13")?;

        let max_nl = nl.iter().map(|r| r.center_deflection.abs()).fold(0.0, f64::max);
        let max_lin = lin.iter().map(|r| r.center_deflection.abs()).fold(0.0, f64::max);
        checks.push(Check {
            label: format!("{history}: peak ratio |w_nl|/|w_lin|"),
            computed: max_nl / max_lin,
            criterion: Criterion::Below { bound: 1.0 },
        });
        series.push((
            format!("{}.csv", history.replace('-', "_")),
            merged_transient_csv(&lin, &nl),
        ));
    }
    Ok((checks, series))
}
