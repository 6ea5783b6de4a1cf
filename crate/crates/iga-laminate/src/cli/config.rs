//! Declarative problem configuration: the TOML schema, its validation, and
//! construction of the runtime model.
//!
//! The schema rejects unknown fields so typos fail loudly. Numbers are
//! unit-consistent: material presets keep their source units and every
//! reported quantity is nondimensionalized, so no conversions happen here.

use serde::Deserialize;

use crate::assembly::{bc::Planform, BcPreset, BoundarySet, Mesh, TransverseLoad};
use crate::error::{Error, Result};
use crate::laminate::{presets, Lamina, Laminate};
use crate::nurbs::{make_circle_patch, make_rectangle_patch, NurbsPatch};
use crate::postproc::NormalizationRule;
use crate::solvers::{FeModel, IterationConfig, IterationScheme, LoadHistory};

/// Top-level problem description, deserialized from TOML.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub geometry: GeometryConfig,
    /// Total laminate thickness.
    pub thickness: f64,
    pub layup: LayupConfig,
    /// Explicit ply material; required when `layup.material = "custom"`.
    #[serde(default)]
    pub material: Option<MaterialConfig>,
    /// Boundary-condition preset: `ssss`, `ssss2`, or `cccc`.
    pub bc: String,
    #[serde(default)]
    pub mesh: MeshConfig,
    pub load: LoadConfig,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub normalization: NormalizationConfig,
}

/// Plate planform. Rectangles span `[0, lx] × [0, ly]`; circles are centered
/// on the origin.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum GeometryConfig {
    Rectangle { lx: f64, ly: f64 },
    Circle { radius: f64 },
}

/// Stacking sequence. Angles are fiber orientations in degrees, bottom
/// layer first; `fractions` are per-layer thickness fractions of the total
/// (equal layers when omitted).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayupConfig {
    pub angles: Vec<f64>,
    /// Ply material: a bundled preset (`I` … `VI`) or `custom`.
    pub material: String,
    /// Modulus scale for the ratio-defined presets `III` and `IV`; it
    /// cancels from all nondimensional outputs. Defaults to 1e6.
    #[serde(default)]
    pub e2: Option<f64>,
    #[serde(default)]
    pub fractions: Option<Vec<f64>>,
}

/// Explicit orthotropic ply constants (any consistent unit system).
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub g13: f64,
    pub g23: f64,
    pub nu12: f64,
    #[serde(default)]
    pub rho: f64,
}

/// Discretization: elements per parametric direction and spline degree.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_elements")]
    pub elements: [usize; 2],
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_elements() -> [usize; 2] {
    [11, 11]
}

fn default_degree() -> usize {
    3
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            elements: default_elements(),
            degree: default_degree(),
        }
    }
}

/// Transverse load: spatial pattern, raw intensity, and (for transient
/// analyses) the time modulation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    /// `uniform` or `sinusoidal` (half-wave in both directions).
    pub kind: String,
    /// Raw pressure amplitude; transient analyses use it directly, static
    /// sweeps use `analysis.load_levels` instead.
    #[serde(default)]
    pub q0: f64,
    /// Time history for transient analyses: `step`, `triangular`,
    /// `half-sine`, or `blast`.
    #[serde(default)]
    pub history: Option<String>,
    /// Pulse duration for `triangular`/`half-sine`.
    #[serde(default)]
    pub t1: Option<f64>,
    /// Decay rate for `blast`.
    #[serde(default)]
    pub alpha: Option<f64>,
}

/// What to compute.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// `linear-static`, `nonlinear-static`, `linear-transient`, or
    /// `nonlinear-transient`.
    pub kind: String,
    /// Static load levels, expressed as the configured normalization's load
    /// parameter (raw pressure under the `identity` rule). An empty list
    /// produces a single zero row.
    #[serde(default)]
    pub load_levels: Vec<f64>,
    /// Transient time step; defaults to a hundredth of the fundamental
    /// period.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Number of transient steps; defaults to 200.
    #[serde(default)]
    pub n_steps: Option<usize>,
}

/// Inner-iteration settings for nonlinear solves.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_scheme() -> String {
    "newton".into()
}

fn default_tolerance() -> f64 {
    0.01
}

fn default_max_iterations() -> usize {
    50
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: default_scheme(),
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
        }
    }
}

/// Output scaling; parameters are derived from the geometry and material so
/// the rule can never disagree with the problem it normalizes.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationConfig {
    /// `isotropic-square`, `clamped-circle`, `composite`,
    /// `load-normalized`, or `identity`.
    #[serde(default = "default_norm_kind")]
    pub kind: String,
}

fn default_norm_kind() -> String {
    "identity".into()
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            kind: default_norm_kind(),
        }
    }
}

/// Analysis kind, parsed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalysisKind {
    LinearStatic,
    NonlinearStatic,
    LinearTransient,
    NonlinearTransient,
}

impl AnalysisKind {
    pub fn is_transient(self) -> bool {
        matches!(self, Self::LinearTransient | Self::NonlinearTransient)
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, Self::NonlinearStatic | Self::NonlinearTransient)
    }
}

/// One static load level: the raw pressure driving the solver and the
/// normalized parameter it came from (kept verbatim for reporting).
#[derive(Clone, Copy, Debug)]
pub struct LoadLevel {
    pub raw: f64,
    pub parameter: f64,
}

/// A fully validated, ready-to-run problem.
pub struct Problem {
    pub model: FeModel,
    pub rule: NormalizationRule,
    pub iteration: IterationConfig,
    pub analysis: AnalysisKind,
    /// Unit-intensity spatial load pattern; levels scale it.
    pub pattern: TransverseLoad,
    /// Static load levels, increasing.
    pub levels: Vec<LoadLevel>,
    /// Raw transient pressure amplitude.
    pub q0: f64,
    pub history: LoadHistory,
    pub dt: Option<f64>,
    pub n_steps: usize,
    /// Physical coordinates of the reporting point (plate center).
    pub center: (f64, f64),
}

fn parse_bc(name: &str) -> Result<BcPreset> {
    match name {
        "ssss" => Ok(BcPreset::Ssss),
        "ssss2" => Ok(BcPreset::Ssss2),
        "cccc" => Ok(BcPreset::Cccc),
        other => Err(Error::InvalidConfig(format!(
            "unknown boundary preset '{other}' (expected ssss, ssss2, or cccc)"
        ))),
    }
}

fn parse_scheme(name: &str) -> Result<IterationScheme> {
    match name {
        "newton" => Ok(IterationScheme::Newton),
        "picard" => Ok(IterationScheme::Picard),
        other => Err(Error::InvalidConfig(format!(
            "unknown iteration scheme '{other}' (expected newton or picard)"
        ))),
    }
}

impl ProblemConfig {
    /// Parses a TOML string, rejecting unknown fields.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))
    }

    fn lamina(&self) -> Result<Lamina> {
        let e2 = self.layup.e2.unwrap_or(1.0e6);
        if !(e2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "layup.e2 must be positive, got {e2}"
            )));
        }
        match self.layup.material.as_str() {
            "I" => Ok(presets::material_i()),
            "II" => Ok(presets::material_ii()),
            "III" => Ok(presets::material_iii(e2)),
            "IV" => Ok(presets::material_iv(e2)),
            "V" => Ok(presets::material_v()),
            "VI" => Ok(presets::material_vi()),
            "custom" => {
                let m = self.material.ok_or_else(|| {
                    Error::InvalidConfig(
                        "layup.material = \"custom\" needs a [material] table".into(),
                    )
                })?;
                Lamina::new(m.e1, m.e2, m.g12, m.g13, m.g23, m.nu12, m.rho)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown material '{other}' (expected I…VI or custom)"
            ))),
        }
    }

    fn laminate(&self) -> Result<Laminate> {
        let material = self.lamina()?;
        let h = self.thickness;
        match &self.layup.fractions {
            None => Laminate::from_layup(material, &self.layup.angles, h),
            Some(fr) => {
                if fr.len() != self.layup.angles.len() {
                    return Err(Error::InvalidConfig(format!(
                        "{} layer fractions for {} angles",
                        fr.len(),
                        self.layup.angles.len()
                    )));
                }
                let sum: f64 = fr.iter().sum();
                if fr.iter().any(|&f| !(f > 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(
                        "layer fractions must be positive and sum to 1".into(),
                    ));
                }
                let mut layers = Vec::with_capacity(fr.len());
                let mut acc = 0.0;
                for (k, (&angle, &f)) in self.layup.angles.iter().zip(fr).enumerate() {
                    let z_bot = h * (acc - 0.5);
                    acc += f;
                    // Forcing the last boundary to +h/2 keeps the top surface
                    // exact regardless of fraction roundoff.
                    let z_top = if k + 1 == fr.len() { h * 0.5 } else { h * (acc - 0.5) };
                    layers.push(crate::laminate::Layer {
                        material,
                        angle: angle.to_radians(),
                        z_bot,
                        z_top,
                    });
                }
                Laminate::new(layers)
            }
        }
    }

    fn patch(&self) -> Result<NurbsPatch> {
        let degree = self.mesh.degree;
        let [eu, ev] = self.mesh.elements;
        if eu == 0 || ev == 0 {
            return Err(Error::InvalidConfig("mesh.elements must be at least 1".into()));
        }
        let base = match self.geometry {
            GeometryConfig::Rectangle { lx, ly } => {
                if !(lx > 0.0 && ly > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "rectangle sides must be positive, got {lx} × {ly}"
                    )));
                }
                make_rectangle_patch(lx, ly, degree)?
            }
            GeometryConfig::Circle { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                make_circle_patch(radius, degree)?
            }
        };
        base.h_refine(eu, ev)
    }

    fn normalization(&self) -> Result<NormalizationRule> {
        let h = self.thickness;
        let material = self.lamina()?;
        match self.normalization.kind.as_str() {
            "identity" => Ok(NormalizationRule::Identity),
            "isotropic-square" => match self.geometry {
                GeometryConfig::Rectangle { lx, ly } if lx == ly => {
                    Ok(NormalizationRule::IsotropicSquare { e: material.e1, a: lx, h })
                }
                _ => Err(Error::InvalidConfig(
                    "isotropic-square normalization needs a square rectangle geometry".into(),
                )),
            },
            "clamped-circle" => match self.geometry {
                GeometryConfig::Circle { radius } => {
                    Ok(NormalizationRule::ClampedCircle { e: material.e1, r: radius, h })
                }
                _ => Err(Error::InvalidConfig(
                    "clamped-circle normalization needs a circle geometry".into(),
                )),
            },
            kind @ ("composite" | "load-normalized") => match self.geometry {
                GeometryConfig::Rectangle { lx, ly } if lx == ly => {
                    let (e2, l) = (material.e2, lx);
                    Ok(if kind == "composite" {
                        NormalizationRule::Composite { e2, l, h }
                    } else {
                        NormalizationRule::LoadNormalized { e2, l, h }
                    })
                }
                _ => Err(Error::InvalidConfig(format!(
                    "{kind} normalization needs a square rectangle geometry"
                ))),
            },
            other => Err(Error::InvalidConfig(format!(
                "unknown normalization '{other}' (expected isotropic-square, clamped-circle, \
                 composite, load-normalized, or identity)"
            ))),
        }
    }

    fn pattern(&self) -> Result<TransverseLoad> {
        match (self.load.kind.as_str(), self.geometry) {
            ("uniform", _) => Ok(TransverseLoad::Uniform { q0: 1.0 }),
            ("sinusoidal", GeometryConfig::Rectangle { lx, ly }) => {
                Ok(TransverseLoad::Sinusoidal { q0: 1.0, a: lx, b: ly })
            }
            ("sinusoidal", GeometryConfig::Circle { .. }) => Err(Error::InvalidConfig(
                "sinusoidal load patterns are defined on rectangles only".into(),
            )),
            (other, _) => Err(Error::InvalidConfig(format!(
                "unknown load kind '{other}' (expected uniform or sinusoidal)"
            ))),
        }
    }

    fn history(&self) -> Result<LoadHistory> {
        let need_t1 = |t1: Option<f64>, kind: &str| {
            t1.ok_or_else(|| {
                Error::InvalidConfig(format!("load history '{kind}' needs load.t1"))
            })
        };
        match self.load.history.as_deref() {
            None | Some("step") => Ok(LoadHistory::Step),
            Some("triangular") => Ok(LoadHistory::Triangular {
                t1: need_t1(self.load.t1, "triangular")?,
            }),
            Some("half-sine") => Ok(LoadHistory::HalfSine {
                t1: need_t1(self.load.t1, "half-sine")?,
            }),
            Some("blast") => Ok(LoadHistory::Blast {
                alpha: self.load.alpha.ok_or_else(|| {
                    Error::InvalidConfig("load history 'blast' needs load.alpha".into())
                })?,
            }),
            Some(other) => Err(Error::InvalidConfig(format!(
                "unknown load history '{other}' (expected step, triangular, half-sine, or blast)"
            ))),
        }
    }

    fn analysis_kind(&self) -> Result<AnalysisKind> {
        match self.analysis.kind.as_str() {
            "linear-static" => Ok(AnalysisKind::LinearStatic),
            "nonlinear-static" => Ok(AnalysisKind::NonlinearStatic),
            "linear-transient" => Ok(AnalysisKind::LinearTransient),
            "nonlinear-transient" => Ok(AnalysisKind::NonlinearTransient),
            other => Err(Error::InvalidConfig(format!(
                "unknown analysis kind '{other}' (expected linear-static, nonlinear-static, \
                 linear-transient, or nonlinear-transient)"
            ))),
        }
    }

    /// Validates everything and builds the runtime model.
    pub fn build(&self) -> Result<Problem> {
        if !(self.thickness > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "thickness must be positive, got {}",
                self.thickness
            )));
        }
        let analysis = self.analysis_kind()?;
        let iteration = IterationConfig {
            scheme: parse_scheme(&self.solver.scheme)?,
            tolerance: self.solver.tolerance,
            max_iterations: self.solver.max_iterations,
        };
        iteration.validate()?;
        let rule = self.normalization()?;
        rule.validate()?;
        let pattern = self.pattern()?;
        let history = self.history()?;
        if analysis.is_transient() && !(self.load.q0 > 0.0) {
            return Err(Error::InvalidConfig(
                "transient analyses need a positive load.q0".into(),
            ));
        }
        if let Some(dt) = self.analysis.dt {
            if !(dt > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "analysis.dt must be positive, got {dt}"
                )));
            }
        }
        let levels: Vec<LoadLevel> = self
            .analysis
            .load_levels
            .iter()
            .map(|&p| LoadLevel { raw: rule.load_inverse(p), parameter: p })
            .collect();
        if levels.iter().any(|l| !(l.raw > 0.0))
            || levels.windows(2).any(|w| w[1].raw <= w[0].raw)
        {
            return Err(Error::InvalidConfig(
                "analysis.load_levels must be positive and strictly increasing".into(),
            ));
        }

        let center = match self.geometry {
            GeometryConfig::Rectangle { lx, ly } => (lx / 2.0, ly / 2.0),
            GeometryConfig::Circle { .. } => (0.0, 0.0),
        };
        let planform = match self.geometry {
            GeometryConfig::Rectangle { .. } => Planform::Rectangular,
            GeometryConfig::Circle { .. } => Planform::Circular,
        };

        let mesh = Mesh::build(self.patch()?)?;
        let bcs = BoundarySet::from_preset(&mesh, parse_bc(&self.bc)?, planform)?;
        let model = FeModel::new(mesh, self.laminate()?, bcs)?;

        Ok(Problem {
            model,
            rule,
            iteration,
            analysis,
            pattern,
            levels,
            q0: self.load.q0,
            history,
            dt: self.analysis.dt,
            n_steps: self.analysis.n_steps.unwrap_or(200),
            center,
        })
    }
}
