//! Command-line flags, the JSON config file and their resolution.
//!
//! Precedence is flags > config file > defaults. The config file uses the
//! flag names as keys (`"time-nodes": 32`).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use confgeo::conformal::Cone;
use confgeo::CurvatureMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "confgeo", version, about = "Geodesics, distances and curvature flows in conformal classes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Counts, area and background curvature of the surface.
    MeshInfo,
    /// Gauss curvature of a conformal factor.
    Curvature,
    /// Liouville and normalized energies of a conformal factor.
    Energy,
    /// Solves for the geodesic between two factors and writes the path.
    Geodesic,
    /// Distance between two factors.
    Distance,
    /// Integrates the inverse Gauss curvature flow.
    Flow,
    /// Distance between two flow lines at sample times.
    FlowDistance,
    /// Closed-form dilation geodesics on the unit icosphere.
    Oracle,
    /// Runs a diagnostic suite.
    Check {
        #[arg(value_enum)]
        suite: Suite,
    },
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MeshInfo => "mesh-info",
            Command::Curvature => "curvature",
            Command::Energy => "energy",
            Command::Geodesic => "geodesic",
            Command::Distance => "distance",
            Command::Flow => "flow",
            Command::FlowDistance => "flow-distance",
            Command::Oracle => "oracle",
            Command::Check { .. } => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Gaussbonnet,
    #[value(name = "gradF")]
    #[serde(rename = "gradF")]
    GradF,
    Sectional,
    Triangle,
    Npc,
    Andrews,
    GeodesicAudit,
    FlowMonitors,
    All,
}

/// Every setting, each optional; used both for flags and the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// JSON config file with the same keys as the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Use the unit icosphere of this subdivision level.
    #[arg(long, global = true, conflicts_with = "mesh")]
    pub icosphere: Option<u32>,
    /// Load an OFF or OBJ triangle mesh.
    #[arg(long, global = true)]
    pub mesh: Option<PathBuf>,
    /// Background curvature of a loaded mesh: angle-defect or constant.
    #[arg(long, global = true)]
    pub curvature: Option<CurvatureMode>,
    /// positive or negative; inferred from the sign of χ by default.
    #[arg(long, global = true)]
    pub cone: Option<Cone>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random fields.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Conformal factor (JSON array or single-column CSV).
    #[arg(long, global = true)]
    pub field: Option<PathBuf>,
    /// First boundary factor.
    #[arg(long, global = true)]
    pub from: Option<PathBuf>,
    /// Second boundary factor.
    #[arg(long, global = true)]
    pub to: Option<PathBuf>,
    /// Second endpoint is the first shifted by this constant.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// Dilation rate of the closed-form family on the unit sphere.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Amplitude of random conformal factors.
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    /// Smallest regularization of the continuation.
    #[arg(long, global = true)]
    pub epsilon_min: Option<f64>,
    /// Number of time intervals N of a path.
    #[arg(long, global = true)]
    pub time_nodes: Option<usize>,
    /// Newton residual tolerance of each continuation stage.
    #[arg(long, global = true)]
    pub residual_tol: Option<f64>,
    /// Final flow time.
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    /// Relative tolerance of the flow integrator.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Spacing of stored flow snapshots.
    #[arg(long, global = true)]
    pub sample_every: Option<f64>,
    /// Comma-separated sample times of flow-distance.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Tolerance overriding a check's default.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

impl Flags {
    fn or(self, file: Flags) -> Flags {
        // A surface chosen on the command line replaces the file's choice.
        let surface_from_flags = self.icosphere.is_some() || self.mesh.is_some();
        Flags {
            config: self.config,
            icosphere: if surface_from_flags { self.icosphere } else { file.icosphere },
            mesh: if surface_from_flags { self.mesh } else { file.mesh },
            curvature: self.curvature.or(file.curvature),
            cone: self.cone.or(file.cone),
            out: self.out.or(file.out),
            seed: self.seed.or(file.seed),
            field: self.field.or(file.field),
            from: self.from.or(file.from),
            to: self.to.or(file.to),
            shift: self.shift.or(file.shift),
            lambda: self.lambda.or(file.lambda),
            amplitude: self.amplitude.or(file.amplitude),
            epsilon_min: self.epsilon_min.or(file.epsilon_min),
            time_nodes: self.time_nodes.or(file.time_nodes),
            residual_tol: self.residual_tol.or(file.residual_tol),
            t_final: self.t_final.or(file.t_final),
            rtol: self.rtol.or(file.rtol),
            sample_every: self.sample_every.or(file.sample_every),
            times: self.times.or(file.times),
            tolerance: self.tolerance.or(file.tolerance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceSpec {
    Icosphere(u32),
    Mesh { path: PathBuf, curvature: CurvatureMode },
}

/// Fully resolved settings, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: &'static str,
    pub suite: Option<Suite>,
    pub surface: SurfaceSpec,
    pub cone: Option<Cone>,
    pub out: PathBuf,
    pub seed: u64,
    pub field: Option<PathBuf>,
    pub from: Option<PathBuf>,
    pub to: Option<PathBuf>,
    pub shift: Option<f64>,
    pub lambda: Option<f64>,
    pub amplitude: f64,
    pub epsilon_min: f64,
    pub time_nodes: usize,
    pub residual_tol: f64,
    pub t_final: f64,
    pub rtol: f64,
    pub sample_every: Option<f64>,
    pub times: Vec<f64>,
    pub tolerance: Option<f64>,
}

pub const DEFAULT_ICOSPHERE: u32 = 3;
pub const MAX_ICOSPHERE: u32 = 7;

fn read_config(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if !(value.is_finite() && value > 0.0) {
        bail!("--{name} must be positive and finite, got {value}");
    }
    Ok(value)
}

fn finite(name: &str, value: Option<f64>) -> Result<Option<f64>> {
    match value {
        Some(v) if !v.is_finite() => bail!("--{name} must be finite, got {v}"),
        v => Ok(v),
    }
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => Flags::default(),
        };
        let merged = flags.or(file);
        let surface = match (merged.icosphere, merged.mesh) {
            (Some(_), Some(_)) => bail!("give either --icosphere or --mesh, not both"),
            (Some(level), None) if level > MAX_ICOSPHERE => {
                bail!("--icosphere must be at most {MAX_ICOSPHERE}, got {level}")
            }
            (Some(level), None) => SurfaceSpec::Icosphere(level),
            (None, Some(path)) => {
                SurfaceSpec::Mesh { path, curvature: merged.curvature.unwrap_or(CurvatureMode::AngleDefect) }
            }
            (None, None) => SurfaceSpec::Icosphere(DEFAULT_ICOSPHERE),
        };
        if matches!(surface, SurfaceSpec::Icosphere(_)) && merged.curvature.is_some() {
            bail!("--curvature applies to loaded meshes only");
        }
        let epsilon_min = merged.epsilon_min.unwrap_or(1e-3);
        if !(epsilon_min > 0.0 && epsilon_min <= 1.0) {
            bail!("--epsilon-min must lie in (0, 1], got {epsilon_min}");
        }
        let time_nodes = merged.time_nodes.unwrap_or(64);
        if time_nodes < 2 {
            bail!("--time-nodes must be at least 2, got {time_nodes}");
        }
        let rtol = positive("rtol", merged.rtol.unwrap_or(1e-7))?;
        if rtol >= 1.0 {
            bail!("--rtol must be below 1, got {rtol}");
        }
        let times = merged.times.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        if times.is_empty() || times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
            bail!("--times must be increasing, finite and nonnegative");
        }
        if merged.cone == Some(Cone::Unconstrained) {
            bail!("--cone must be positive or negative");
        }
        Ok(RunConfig {
            command: command.name(),
            suite: match command {
                Command::Check { suite } => Some(suite),
                _ => None,
            },
            surface,
            cone: merged.cone,
            out: merged.out.unwrap_or_else(|| PathBuf::from("confgeo-out")),
            seed: merged.seed.unwrap_or(0),
            field: merged.field,
            from: merged.from,
            to: merged.to,
            shift: finite("shift", merged.shift)?,
            lambda: finite("lambda", merged.lambda)?,
            amplitude: positive("amplitude", merged.amplitude.unwrap_or(0.3))?,
            epsilon_min,
            time_nodes,
            residual_tol: positive("residual-tol", merged.residual_tol.unwrap_or(1e-9))?,
            t_final: positive("t-final", merged.t_final.unwrap_or(5.0))?,
            rtol,
            sample_every: merged.sample_every.map(|v| positive("sample-every", v)).transpose()?,
            times,
            tolerance: merged.tolerance.map(|v| positive("tolerance", v)).transpose()?,
        })
    }
}
