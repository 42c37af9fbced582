//! Subcommand implementations. Each returns whether its assertions passed.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use confgeo::conformal::{self, Cone};
use confgeo::diagnostics::{self, CheckReport};
use confgeo::digest::ManifestEntry;
use confgeo::fields;
use confgeo::flow::{self, FlowControls, FlowTrace, MonitorTolerances};
use confgeo::geodesic::{self, SolverOptions};
use confgeo::oracle::DilationFamily;
use confgeo::path;
use confgeo::surface::{build_icosphere, icosphere_mesh, load_mesh, write_off, MeshFormat};
use confgeo::{DiscreteSurface, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::artifacts::Artifacts;
use crate::config::{Command, RunConfig, Suite, SurfaceSpec};

pub struct Session {
    pub cfg: RunConfig,
    pub surface: DiscreteSurface,
    pub out: Artifacts,
    unit_sphere: bool,
}

fn load_surface(spec: &SurfaceSpec) -> Result<(DiscreteSurface, ManifestEntry)> {
    match spec {
        SurfaceSpec::Icosphere(level) => {
            let (p, t) = icosphere_mesh(*level);
            let mut off = Vec::new();
            write_off(&mut off, &p, &t)?;
            Ok((build_icosphere(*level)?, ManifestEntry::new(format!("icosphere-{level}.off"), &off)))
        }
        SurfaceSpec::Mesh { path, curvature } => {
            let bytes = std::fs::read(path).with_context(|| format!("reading mesh {}", path.display()))?;
            let surface = load_mesh(bytes.as_slice(), MeshFormat::from_path(path)?, *curvature)?;
            Ok((surface, ManifestEntry::new(path.display().to_string(), &bytes)))
        }
    }
}

impl Session {
    pub fn open(cfg: RunConfig) -> Result<Self> {
        let (surface, entry) = load_surface(&cfg.surface)?;
        let mut out = Artifacts::create(&cfg.out)?;
        out.input(entry);
        let unit_sphere = matches!(cfg.surface, SurfaceSpec::Icosphere(_));
        Ok(Self { cfg, surface, out, unit_sphere })
    }

    fn cone(&self) -> Result<Cone> {
        match self.cfg.cone.unwrap_or_else(|| Cone::of_surface(&self.surface)) {
            Cone::Unconstrained => bail!("χ = 0: pass --cone explicitly"),
            cone => Ok(cone),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }

    fn read_field(&mut self, path: &Path) -> Result<Vec<f64>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading field {}", path.display()))?;
        let field = fields::read_field_file(path)?;
        if field.len() != self.surface.vertex_count() {
            bail!("{} has {} values, the surface has {} vertices", path.display(), field.len(), self.surface.vertex_count());
        }
        self.out.input(ManifestEntry::new(path.display().to_string(), &bytes));
        Ok(field)
    }

    fn random_factor(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.surface.vertex_count()];
        Ok(fields::random_admissible_field(&self.surface, &zero, self.cone()?, self.cfg.amplitude, rng)?)
    }

    /// `--field`, or zero.
    fn factor_or_zero(&mut self) -> Result<Vec<f64>> {
        match self.cfg.field.clone() {
            Some(p) => self.read_field(&p),
            None => Ok(vec![0.0; self.surface.vertex_count()]),
        }
    }

    /// `--field`, or a seeded random admissible factor.
    fn factor_or_random(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self.cfg.field.clone() {
            Some(p) => self.read_field(&p),
            None => self.random_factor(rng),
        }
    }

    fn dilation(&self) -> Result<DilationFamily> {
        if !self.unit_sphere {
            bail!("the dilation family needs --icosphere");
        }
        Ok(DilationFamily::new(&self.surface, self.cfg.lambda.unwrap_or(0.5))?)
    }

    /// Boundary factors and, when known in closed form, their distance.
    fn endpoints(&mut self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> {
        let cfg = self.cfg.clone();
        if cfg.lambda.is_some() {
            let fam = self.dilation()?;
            return Ok((fam.factor(0.0), fam.factor(1.0), Some(fam.length(1.0))));
        }
        if let Some(c) = cfg.shift {
            let u0 = match cfg.from.as_ref().or(cfg.field.as_ref()) {
                Some(p) => self.read_field(p)?,
                None => vec![0.0; self.surface.vertex_count()],
            };
            let u1 = u0.iter().map(|x| x + c).collect();
            let expected = c.abs() * self.surface.gauss_bonnet_target().abs().sqrt();
            return Ok((u0, u1, Some(expected)));
        }
        match (&cfg.from, &cfg.to) {
            (Some(a), Some(b)) => Ok((self.read_field(a)?, self.read_field(b)?, None)),
            (None, None) => Ok((self.random_factor(rng)?, self.random_factor(rng)?, None)),
            _ => bail!("give both --from and --to, or --shift, or --lambda"),
        }
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            intervals: self.cfg.time_nodes,
            epsilon_min: self.cfg.epsilon_min,
            residual_tol: self.cfg.residual_tol,
            ..SolverOptions::default()
        }
    }

    fn flow_controls(&self, cone: Cone) -> FlowControls {
        FlowControls { rtol: self.cfg.rtol, sample_every: self.cfg.sample_every, ..FlowControls::for_cone(cone) }
    }

    pub fn run(&mut self, command: Command) -> Result<bool> {
        match command {
            Command::MeshInfo => self.mesh_info(),
            Command::Curvature => self.curvature(),
            Command::Energy => self.energy(),
            Command::Geodesic => self.geodesic(true),
            Command::Distance => self.geodesic(false),
            Command::Flow => self.flow(),
            Command::FlowDistance => self.flow_distance(),
            Command::Oracle => self.oracle(),
            Command::Check { suite } => self.check(suite),
        }
    }

    fn mesh_info(&mut self) -> Result<bool> {
        let summary = self.surface.summary();
        println!(
            "V {} E {} F {} chi {} area {:.6} K0 in [{:.6}, {:.6}]",
            summary.vertices,
            summary.edges,
            summary.faces,
            summary.euler_characteristic,
            summary.total_area,
            summary.min_k0,
            summary.max_k0
        );
        let report = json!({ "surface": summary, "cone": Cone::of_surface(&self.surface) });
        self.out.json("report.json", &report)?;
        Ok(true)
    }

    fn curvature(&mut self) -> Result<bool> {
        let u = self.factor_or_zero()?;
        let snap = conformal::snapshot(&self.surface, &u)?;
        let summary = snap.summary();
        let admissibility = match self.cone() {
            Ok(cone) => Some(conformal::admissible(&self.surface, &u, cone)?),
            Err(_) => None,
        };
        println!(
            "K in [{:.6}, {:.6}], mean {:.6}, total {:.12} (2πχ = {:.12})",
            summary.min_curvature,
            summary.max_curvature,
            summary.mean_curvature,
            summary.total_curvature,
            self.surface.gauss_bonnet_target()
        );
        let report = json!({
            "summary": summary,
            "gauss_bonnet_target": self.surface.gauss_bonnet_target(),
            "admissibility": admissibility,
        });
        self.out.json("report.json", &report)?;
        self.out.field("u", &u)?;
        self.out.field("curvature", &snap.curvature)?;
        Ok(true)
    }

    fn energy(&mut self) -> Result<bool> {
        let u = self.factor_or_zero()?;
        let s = &self.surface;
        let j = conformal::liouville_energy(s, &u)?;
        let f = conformal::normalized_energy(s, &u)?;
        let gradient_sup = self
            .cone()
            .ok()
            .and_then(|cone| conformal::grad_f(s, &u, cone).ok())
            .map(|g| g.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let area: f64 = conformal::area_form(s, &u).iter().sum();
        println!("J {j:.12} F {f:.12} area {area:.12}");
        let report = json!({
            "liouville_energy": j,
            "normalized_energy": f,
            "polyakov_logdet_ratio": conformal::polyakov_logdet_ratio(s, &u)?,
            "area": area,
            "dirichlet_energy": s.dirichlet_energy(&u)?,
            "gradient_sup": gradient_sup,
        });
        self.out.json("report.json", &report)?;
        Ok(true)
    }

    fn geodesic(&mut self, write_path: bool) -> Result<bool> {
        let mut rng = self.rng();
        let (u0, u1, expected) = self.endpoints(&mut rng)?;
        let cone = self.cone()?;
        let report = geodesic::solve_geodesic(&self.surface, &u0, &u1, cone, &self.solver_options())?;
        let relative_error = expected.map(|e| (report.distance - e).abs() / e.max(f64::MIN_POSITIVE));
        println!("distance {:.12}", report.distance);
        if let Some(e) = expected {
            println!("closed form {e:.12}");
        }
        let summary = json!({
            "solve": report,
            "expected_distance": expected,
            "relative_error": relative_error,
        });
        self.out.json("report.json", &summary)?;
        if write_path {
            let mut stages = csv::Writer::from_writer(Vec::new());
            for stage in &report.stages {
                stages.serialize(stage)?;
            }
            let bytes = stages.into_inner().map_err(|e| anyhow!("{e}"))?;
            self.out.write("series.csv", &bytes)?;
            let mut path_json = Vec::new();
            report.path.write_json(&mut path_json)?;
            self.out.write("path.json", &path_json)?;
            let mut path_csv = Vec::new();
            report.path.write_csv(&mut path_csv)?;
            self.out.write("path.csv", &path_csv)?;
            self.out.field("u0", &u0)?;
            self.out.field("u1", &u1)?;
        }
        Ok(true)
    }

    fn write_trace(&mut self, trace: &FlowTrace) -> Result<()> {
        let mut csv = Vec::new();
        trace.write_series_csv(&mut csv)?;
        self.out.write("series.csv", &csv)?;
        if self.cfg.sample_every.is_some() {
            for (k, snapshot) in trace.snapshots.iter().enumerate() {
                self.out.field(&format!("snapshot-{k:04}"), snapshot)?;
            }
        }
        if let Some(last) = trace.last_snapshot() {
            self.out.field("u_final", last)?;
        }
        Ok(())
    }

    fn run_flow(&mut self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, std::result::Result<FlowTrace, FlowTrace>)> {
        let u0 = self.factor_or_random(rng)?;
        let cone = self.cone()?;
        match flow::integrate(&self.surface, &u0, cone, self.cfg.t_final, &self.flow_controls(cone)) {
            Ok(trace) => Ok((u0, Ok(trace))),
            Err(Error::StepUnderflow { time, trace }) => {
                eprintln!("step size underflow at t = {time}");
                Ok((u0, Err(*trace)))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn monitor_tolerances(&self) -> MonitorTolerances {
        MonitorTolerances { base: self.cfg.tolerance, conservation: None }
    }

    fn flow(&mut self) -> Result<bool> {
        let mut rng = self.rng();
        let (u0, outcome) = self.run_flow(&mut rng)?;
        let (trace, completed) = match outcome {
            Ok(trace) => (trace, true),
            Err(trace) => (trace, false),
        };
        let monitors = flow::flow_monitors(&trace, self.monitor_tolerances())?;
        let last = trace.series.last().expect("trace has a first sample");
        println!(
            "t {:.6} steps {} rejected {} deviation {:.3e} converged {} monitors {}",
            trace.final_time(),
            trace.accepted_steps(),
            trace.rejected.len(),
            last.deviation,
            trace.converged,
            if monitors.pass() { "pass" } else { "fail" }
        );
        let report = json!({
            "completed": completed,
            "final_time": trace.final_time(),
            "converged": trace.converged,
            "accepted_steps": trace.accepted_steps(),
            "trace": trace,
            "monitors": monitors,
        });
        self.out.json("report.json", &report)?;
        self.out.field("u0", &u0)?;
        self.write_trace(&trace)?;
        Ok(completed && monitors.pass())
    }

    fn flow_distance(&mut self) -> Result<bool> {
        let mut rng = self.rng();
        let cfg = self.cfg.clone();
        let (u0, v0) = match (&cfg.from, &cfg.to) {
            (Some(a), Some(b)) => (self.read_field(a)?, self.read_field(b)?),
            (None, None) => (self.random_factor(&mut rng)?, self.random_factor(&mut rng)?),
            _ => bail!("give both --from and --to, or neither"),
        };
        let cone = self.cone()?;
        let series = flow::flow_distance_monotonicity(
            &self.surface,
            &u0,
            &v0,
            cone,
            &cfg.times,
            &self.flow_controls(cone),
            &self.solver_options(),
            cfg.tolerance,
        )?;
        for (t, d) in series.times.iter().zip(&series.distances) {
            println!("t {t:.6} distance {d:.12}");
        }
        println!("max increase {:.3e} tolerance {:.3e}", series.max_increase, series.tolerance);
        self.out.json("report.json", &series)?;
        let mut csv = csv::Writer::from_writer(Vec::new());
        csv.write_record(["t", "distance"])?;
        for (t, d) in series.times.iter().zip(&series.distances) {
            csv.write_record([t.to_string(), d.to_string()])?;
        }
        self.out.write("series.csv", &csv.into_inner().map_err(|e| anyhow!("{e}"))?)?;
        self.out.field("u0", &u0)?;
        self.out.field("v0", &v0)?;
        Ok(series.nonincreasing)
    }

    fn oracle(&mut self) -> Result<bool> {
        let fam = self.dilation()?;
        let s = &self.surface;
        let n = self.cfg.time_nodes;
        let family = fam.sample_path(n, 1.0)?;
        let residual = path::geodesic_residual(s, &family)?;
        let mean_sq = residual.iter().map(|r| s.mass_inner(r, r)).sum::<f64>() / (residual.len() as f64 * s.total_area());
        let mut roundness = Vec::new();
        for t in [0.0, 0.5, 1.0] {
            let u = fam.factor(t);
            let k = conformal::curvature(s, &u)?;
            let w = conformal::area_form(s, &u);
            let sup = k.iter().fold(0.0f64, |m, k| m.max((k - 1.0).abs()));
            let rms = (k.iter().zip(&w).map(|(k, w)| (k - 1.0).powi(2) * w).sum::<f64>() / w.iter().sum::<f64>()).sqrt();
            roundness.push(json!({ "t": t, "max_deviation": sup, "rms_deviation": rms }));
        }
        let discrete_length = path::path_length(s, &family)?;
        let residual_sup = path::sup_norm(&residual);
        let report = json!({
            "lambda": fam.lambda,
            "intervals": n,
            "closed_form_length": fam.length(1.0),
            "discrete_length": discrete_length,
            "residual_sup": residual_sup,
            "residual_rms": mean_sq.sqrt(),
            "curvature_deviation": roundness,
        });
        println!(
            "length {:.12} (closed form {:.12}), residual sup {:.3e}",
            discrete_length,
            fam.length(1.0),
            residual_sup
        );
        self.out.json("report.json", &report)?;
        let mut bytes = Vec::new();
        family.write_json(&mut bytes)?;
        self.out.write("path.json", &bytes)?;
        Ok(true)
    }

    fn check(&mut self, suite: Suite) -> Result<bool> {
        let suites = match suite {
            Suite::All => vec![
                Suite::Gaussbonnet,
                Suite::GradF,
                Suite::Sectional,
                Suite::Triangle,
                Suite::Npc,
                Suite::Andrews,
                Suite::GeodesicAudit,
                Suite::FlowMonitors,
            ],
            one => vec![one],
        };
        let mut checks = Vec::new();
        for suite in suites {
            // Every suite draws from its own copy of the seeded stream.
            let mut rng = self.rng();
            checks.extend(self.run_suite(suite, &mut rng)?);
        }
        let pass = checks.iter().all(|c| c["pass"] == Value::Bool(true));
        for c in &checks {
            println!("{} {}", c["check"].as_str().unwrap_or("?"), if c["pass"] == Value::Bool(true) { "pass" } else { "FAIL" });
        }
        self.out.json("report.json", &json!({ "checks": checks, "pass": pass }))?;
        Ok(pass)
    }

    fn run_suite(&mut self, suite: Suite, rng: &mut ChaCha8Rng) -> Result<Vec<Value>> {
        let tol = self.cfg.tolerance;
        let reports = match suite {
            Suite::Gaussbonnet => vec![self.gauss_bonnet(rng, tol.unwrap_or(1e-10))?],
            Suite::GradF => vec![self.gradient(rng, tol.unwrap_or(1e-5))?],
            Suite::Sectional => vec![self.sectional(rng, tol.unwrap_or(1e-12))?],
            Suite::Triangle => {
                let [a, b, c] = self.triple(rng)?;
                let r = diagnostics::triangle_check(&self.surface, &a, &b, &c, self.cone()?, &self.solver_options(), 0.0)?;
                let scale = r.values.values().copied().fold(0.0, f64::max);
                vec![r.with_tolerance(tol.unwrap_or(5e-3 * scale))]
            }
            Suite::Npc => {
                let [a, b, c] = self.triple(rng)?;
                let opts = self.solver_options();
                let r = diagnostics::npc_check(&self.surface, &a, &b, &c, &[0.25, 0.5, 0.75], self.cone()?, &opts, 0.0)?;
                let scale = ["d_ab", "d_ac", "d_bc"].iter().map(|k| r.values[*k]).fold(0.0, f64::max);
                vec![r.with_tolerance(tol.unwrap_or(5e-3 * scale * scale))]
            }
            Suite::Andrews => self.andrews(rng, tol.unwrap_or(0.02))?,
            Suite::GeodesicAudit => {
                let (u0, u1, _) = self.endpoints(rng)?;
                let opts = self.solver_options();
                let solve = geodesic::solve_geodesic(&self.surface, &u0, &u1, self.cone()?, &opts)?;
                let t = tol.unwrap_or_else(|| diagnostics::audit_tolerance(solve.epsilon_reached, opts.intervals));
                vec![diagnostics::geodesic_audit(&self.surface, &solve.path, t)?]
            }
            Suite::FlowMonitors => {
                let (_, outcome) = self.run_flow(rng)?;
                let (trace, completed) = match outcome {
                    Ok(trace) => (trace, true),
                    Err(trace) => (trace, false),
                };
                let report = flow::flow_monitors(&trace, self.monitor_tolerances())?;
                return Ok(vec![json!({
                    "check": "flow-monitors",
                    "pass": completed && report.pass(),
                    "final_time": trace.final_time(),
                    "monitors": report,
                })]);
            }
            Suite::All => unreachable!("expanded by the caller"),
        };
        reports.into_iter().map(to_value).collect()
    }

    fn triple(&mut self, rng: &mut ChaCha8Rng) -> Result<[Vec<f64>; 3]> {
        Ok([self.random_factor(rng)?, self.random_factor(rng)?, self.random_factor(rng)?])
    }

    fn gauss_bonnet(&mut self, rng: &mut ChaCha8Rng, tol: f64) -> Result<CheckReport> {
        let s = &self.surface;
        let target = s.gauss_bonnet_target();
        let scale = target.abs().max(s.area_masses().iter().zip(s.background_curvature()).map(|(a, k)| a * k.abs()).sum());
        let mut report = CheckReport::new("gaussbonnet", &[], tol);
        report.value("target", target);
        report.value("total_curvature", s.total_curvature());
        report.margin("background", -(s.total_curvature() - target).abs() / scale);
        if self.cone().is_ok() {
            for k in 0..10 {
                let u = self.random_factor(rng)?;
                let kappa = conformal::curvature_density(&self.surface, &u)?;
                let total: f64 = kappa.iter().zip(self.surface.area_masses()).map(|(k, a)| k * a).sum();
                report.margin(format!("factor-{k}"), -(total - target).abs() / scale);
            }
        }
        Ok(report)
    }

    fn gradient(&mut self, rng: &mut ChaCha8Rng, tol: f64) -> Result<CheckReport> {
        let cone = self.cone()?;
        let u = self.factor_or_random(rng)?;
        let s = &self.surface;
        let g = conformal::grad_f(s, &u, cone)?;
        let mut report = CheckReport::new("gradF", &[&u], tol);
        let h = 1e-5;
        for k in 0..5 {
            let v = fields::random_smooth_field(s, rng)?;
            let at = |sign: f64| -> Result<f64> {
                let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + sign * h * b).collect();
                Ok(conformal::normalized_energy(s, &w)?)
            };
            let fd = (at(1.0)? - at(-1.0)?) / (2.0 * h);
            let riesz = conformal::weighted_inner(s, &u, &g, &v, cone)?;
            report.value(format!("directional-{k}"), fd);
            report.margin(format!("direction-{k}"), -(fd - riesz).abs() / fd.abs().max(1e-3));
        }
        Ok(report)
    }

    fn sectional(&mut self, rng: &mut ChaCha8Rng, tol: f64) -> Result<CheckReport> {
        let cone = self.cone()?;
        let u = self.factor_or_random(rng)?;
        let s = &self.surface;
        let mut report = CheckReport::new("sectional", &[&u], tol);
        for k in 0..20 {
            let phi = fields::random_smooth_field(s, rng)?;
            let psi = fields::random_smooth_field(s, rng)?;
            report.margin(format!("pair-{k:02}"), -conformal::sectional_curvature(s, &u, &phi, &psi, cone)?);
        }
        Ok(report)
    }

    fn andrews(&mut self, rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<CheckReport>> {
        let u = self.factor_or_zero()?;
        let s = &self.surface;
        let mut random = CheckReport::new("andrews", &[&u], tol);
        for k in 0..20 {
            let phi = fields::random_smooth_field(s, rng)?;
            random.margin(format!("field-{k:02}"), diagnostics::andrews_gap(s, &u, &phi)?);
        }
        let mut out = vec![random];
        if self.unit_sphere && self.cfg.field.is_none() {
            let xi = s.height_field()?;
            let mut equality = CheckReport::new("andrews-equality", &[&xi], 0.1);
            let gap = diagnostics::andrews_gap(s, &u, &xi)?;
            equality.value("gap", gap);
            equality.margin("height", -gap.abs());
            out.push(equality);
        }
        Ok(out)
    }
}

fn to_value<T: Serialize>(value: T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}
