//! Inverse Gauss curvature flow on either cone, integrated with an embedded
//! Dormand-Prince 5(4) pair, plus the monitors for the flow estimates.

use serde::{Deserialize, Serialize};

use crate::conformal::{self, Cone};
use crate::error::{check_len, Error, Result};
use crate::geodesic::{solve_geodesic, SolverOptions};
use crate::surface::{min_max, DiscreteSurface};

/// `u̇ = -(K - K̄)/|K|`, i.e. `(K̄ - K)/K` on the positive cone and
/// `(K - K̄)/K` on the negative one.
pub fn igcf_rhs(s: &DiscreteSurface, u: &[f64], cone: Cone) -> Result<Vec<f64>> {
    let k = conformal::require_admissible(s, u, cone)?;
    let area: f64 = conformal::area_form(s, u).iter().sum();
    let mean = s.gauss_bonnet_target() / area;
    Ok(k.iter().map(|ki| (mean - ki) / ki.abs()).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowControls {
    pub rtol: f64,
    pub initial_dt: f64,
    /// Spacing of stored snapshots; `None` keeps only the endpoints.
    pub sample_every: Option<f64>,
    pub max_steps: usize,
    /// Stop once `max|K - K̄|/|K̄|` drops below this.
    pub convergence_tol: Option<f64>,
    pub min_dt: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            rtol: 1e-7,
            initial_dt: 1e-3,
            sample_every: None,
            max_steps: 200_000,
            convergence_tol: None,
            min_dt: 1e-12,
        }
    }
}

impl FlowControls {
    /// Defaults with the convergence stop switched on for the negative cone.
    pub fn for_cone(cone: Cone) -> Self {
        Self { convergence_tol: (cone == Cone::Negative).then_some(1e-6), ..Self::default() }
    }
}

/// Scalar state of the flow after an accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub dt: f64,
    /// `F[u(t)]`.
    pub energy: f64,
    pub area: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub min_u: f64,
    pub max_u: f64,
    /// `J[u(t)]`, conserved by the flow.
    pub liouville: f64,
    /// `max|K - K̄| / |K̄|`.
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    ErrorEstimate,
    Admissibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedStep {
    pub t: f64,
    pub dt: f64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FlowTrace {
    pub cone: Option<Cone>,
    pub rtol: f64,
    pub gauss_bonnet_target: f64,
    pub sample_times: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<Vec<f64>>,
    pub series: Vec<FlowSample>,
    pub rejected: Vec<RejectedStep>,
    pub converged: bool,
}

impl FlowTrace {
    pub fn accepted_steps(&self) -> usize {
        self.series.len().saturating_sub(1)
    }

    pub fn final_time(&self) -> f64 {
        self.series.last().map_or(0.0, |s| s.t)
    }

    pub fn last_snapshot(&self) -> Option<&[f64]> {
        self.snapshots.last().map(Vec::as_slice)
    }

    pub fn write_series_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.series {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample(s: &DiscreteSurface, u: &[f64], t: f64, dt: f64) -> Result<FlowSample> {
    let k = conformal::curvature(s, u)?;
    let area: f64 = conformal::area_form(s, u).iter().sum();
    let mean = s.gauss_bonnet_target() / area;
    let (min_curvature, max_curvature) = min_max(&k);
    let (min_u, max_u) = min_max(u);
    let liouville = conformal::liouville_energy(s, u)?;
    let energy = liouville - s.gauss_bonnet_target() * (area / s.total_area()).ln();
    let deviation = k.iter().map(|ki| (ki - mean).abs()).fold(0.0, f64::max) / mean.abs();
    Ok(FlowSample { t, dt, energy, area, min_curvature, max_curvature, min_u, max_u, liouville, deviation })
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

enum Trial {
    Accepted { next: Vec<f64>, rhs_next: Vec<f64>, error: f64 },
    Rejected(RejectReason),
}

/// One Dormand-Prince step from `u` with first-same-as-last stage `k1`.
fn dp_step(s: &DiscreteSurface, cone: Cone, u: &[f64], k1: &[f64], dt: f64, rtol: f64) -> Result<Trial> {
    let v = u.len();
    let mut stages: Vec<Vec<f64>> = vec![k1.to_vec()];
    let mut y = vec![0.0; v];
    for row in A.iter() {
        for i in 0..v {
            let incr: f64 = stages.iter().zip(row).map(|(k, a)| a * k[i]).sum();
            y[i] = u[i] + dt * incr;
        }
        match igcf_rhs(s, &y, cone) {
            Ok(k) => stages.push(k),
            Err(Error::Inadmissible { .. }) => return Ok(Trial::Rejected(RejectReason::Admissibility)),
            Err(e) => return Err(e),
        }
    }
    // The last stage was evaluated at the fifth-order solution `y`.
    let err: Vec<f64> = (0..v).map(|i| dt * stages.iter().zip(&E).map(|(k, c)| c * k[i]).sum::<f64>()).collect();
    // Both `u` and `K_u = e^{-2u}(K0 - Δ0 u)` are controlled; the curvature
    // error is the linearization `-e^{-2u}(Δ0 δ + 2κ δ)`.
    let kappa = conformal::curvature_density(s, &y)?;
    let lap = s.laplacian_apply(&err)?;
    let mut error = 0.0f64;
    for i in 0..v {
        let w = (-2.0 * y[i]).exp();
        let k_err = w * (lap[i] + 2.0 * kappa[i] * err[i]);
        let k_scale = (w * kappa[i]).abs();
        error = error.max(err[i].abs() / (rtol * y[i].abs().max(1.0))).max(k_err.abs() / (rtol * k_scale));
    }
    let rhs_next = stages.pop().expect("seven stages");
    Ok(Trial::Accepted { next: y, rhs_next, error })
}

/// Integrates the flow from `u0` up to `t_final`, or until converged when
/// `controls.convergence_tol` is set.
pub fn integrate(
    s: &DiscreteSurface,
    u0: &[f64],
    cone: Cone,
    t_final: f64,
    controls: &FlowControls,
) -> Result<FlowTrace> {
    check_len(s.vertex_count(), u0.len())?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time {t_final} must be finite and nonnegative")));
    }
    if !(controls.rtol > 0.0) {
        return Err(Error::InvalidArgument("rtol must be positive".into()));
    }
    let mut rhs = igcf_rhs(s, u0, cone)?;
    let mut margin = conformal::admissible(s, u0, cone)?.margin;
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut trace = FlowTrace {
        cone: Some(cone),
        rtol: controls.rtol,
        gauss_bonnet_target: s.gauss_bonnet_target(),
        sample_times: vec![0.0],
        snapshots: vec![u.clone()],
        series: vec![sample(s, &u, 0.0, 0.0)?],
        ..FlowTrace::default()
    };
    let spacing = controls.sample_every.filter(|d| *d > 0.0).unwrap_or(f64::INFINITY);
    let mut next_sample = spacing.min(t_final);
    let mut dt = controls.initial_dt.min(t_final.max(f64::MIN_POSITIVE));
    let converged = |trace: &FlowTrace| {
        controls.convergence_tol.is_some_and(|tol| trace.series.last().is_some_and(|x| x.deviation < tol))
    };
    if converged(&trace) {
        trace.converged = true;
        return Ok(trace);
    }
    while t < t_final {
        if trace.accepted_steps() >= controls.max_steps {
            return Err(Error::InvalidArgument(format!(
                "flow hit the step limit {} at t = {t}",
                controls.max_steps
            )));
        }
        let remaining = next_sample - t;
        let landing = dt >= remaining;
        let h = if landing { remaining } else { dt };
        if h < controls.min_dt && !landing {
            return Err(Error::StepUnderflow { time: t, trace: Box::new(trace) });
        }
        let trial = dp_step(s, cone, &u, &rhs, h, controls.rtol)?;
        let (next, rhs_next, error) = match trial {
            Trial::Accepted { next, rhs_next, error } => (next, rhs_next, error),
            Trial::Rejected(reason) => {
                trace.rejected.push(RejectedStep { t, dt: h, reason });
                dt = h * 0.5;
                if dt < controls.min_dt {
                    return Err(Error::StepUnderflow { time: t, trace: Box::new(trace) });
                }
                continue;
            }
        };
        let trial_margin = conformal::admissible(s, &next, cone)?.margin;
        let reason = if error > 1.0 {
            Some(RejectReason::ErrorEstimate)
        } else if trial_margin < 0.1 * margin {
            Some(RejectReason::Admissibility)
        } else {
            None
        };
        if let Some(reason) = reason {
            trace.rejected.push(RejectedStep { t, dt: h, reason });
            dt = h * 0.5;
            if dt < controls.min_dt {
                return Err(Error::StepUnderflow { time: t, trace: Box::new(trace) });
            }
            continue;
        }
        t = if landing { next_sample } else { t + h };
        u = next;
        rhs = rhs_next;
        margin = trial_margin;
        trace.series.push(sample(s, &u, t, h)?);
        let growth = if error > 0.0 { (0.9 * error.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        if !landing {
            dt = h * growth;
        } else {
            // Keep the step the controller wanted before the landing clipped it.
            dt = dt.max(h * growth.min(1.0));
        }
        let done = converged(&trace);
        if landing || done {
            trace.sample_times.push(t);
            trace.snapshots.push(u.clone());
            next_sample = if t >= t_final { t_final } else { (t + spacing).min(t_final) };
        }
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// One monitor's verdict. `margin` is the slack of the inequality, negative
/// when violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
    /// `true` when the monitor only reports a value.
    pub diagnostic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub tolerance: f64,
    pub monitors: Vec<MonitorResult>,
    /// Relative error of the area law with exponent `2(F0 - F)`, reported
    /// alongside the `(F0 - F)/2πχ` law that the monitor asserts.
    pub literal_area_law_error: Option<f64>,
    pub max_abs_u: f64,
}

impl MonitorReport {
    pub fn pass(&self) -> bool {
        self.monitors.iter().all(|m| m.pass)
    }

    pub fn get(&self, name: &str) -> Option<&MonitorResult> {
        self.monitors.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MonitorTolerances {
    /// Overrides `10·rtol·√steps`.
    pub base: Option<f64>,
    pub conservation: Option<f64>,
}

/// An empty fold leaves `+∞`; report it as zero slack so the JSON stays finite.
fn slack(x: f64) -> f64 {
    if x.is_finite() { x } else { 0.0 }
}

/// Runs every monitor that applies to the trace's cone.
pub fn flow_monitors(trace: &FlowTrace, tolerances: MonitorTolerances) -> Result<MonitorReport> {
    let series = &trace.series;
    let first = series.first().ok_or_else(|| Error::InvalidArgument("empty flow trace".into()))?;
    let tol = tolerances.base.unwrap_or(10.0 * trace.rtol * (trace.accepted_steps().max(1) as f64).sqrt());
    let conservation = tolerances.conservation.unwrap_or(1e-5);
    let mut monitors = Vec::new();
    let mut push = |name: &str, margin: f64, tolerance: f64, diagnostic: bool| {
        monitors.push(MonitorResult {
            name: name.to_string(),
            pass: diagnostic || margin >= -tolerance,
            margin,
            tolerance,
            diagnostic,
        });
    };

    let f_scale = 1.0 + first.energy.abs();
    let descent = series.windows(2).map(|w| w[0].energy - w[1].energy).fold(f64::INFINITY, f64::min);
    push("energy_nonincreasing", slack(descent) / f_scale, tol, false);

    // Convexity of F(t): slopes of successive steps are nondecreasing.
    let slopes: Vec<f64> = series.windows(2).map(|w| (w[1].energy - w[0].energy) / (w[1].t - w[0].t)).collect();
    let slope_scale = 1.0 + slopes.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let convexity = slopes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    push("energy_convexity", slack(convexity) / slope_scale, tol, false);

    let max_abs_u = series.iter().map(|x| x.min_u.abs().max(x.max_u.abs())).fold(0.0, f64::max);
    let mut literal_area_law_error = None;
    match trace.cone {
        Some(Cone::Negative) => {
            let (lo, hi) = (first.min_curvature, first.max_curvature);
            let scale = lo.abs().max(hi.abs());
            let envelope = series
                .iter()
                .map(|x| (x.min_curvature - lo).min(hi - x.max_curvature))
                .fold(f64::INFINITY, f64::min);
            push("curvature_envelope", slack(envelope) / scale, tol, false);
            push("u_bound", max_abs_u, 0.0, true);
        }
        Some(Cone::Positive) => {
            let sup0 = first.max_curvature;
            let growth = series
                .iter()
                .map(|x| (sup0 * (2.0 * x.t).exp() - x.max_curvature) / (sup0 * (2.0 * x.t).exp()))
                .fold(f64::INFINITY, f64::min);
            push("curvature_growth", slack(growth), tol, false);
            let lower = series.iter().map(|x| x.min_u - (first.min_u - x.t)).fold(f64::INFINITY, f64::min);
            push("u_lower_bound", slack(lower), tol, false);
            let chi_term = trace.gauss_bonnet_target;
            let area_law = series
                .iter()
                .map(|x| {
                    let predicted = first.area * ((first.energy - x.energy) / chi_term).exp();
                    (x.area - predicted).abs() / predicted
                })
                .fold(0.0, f64::max);
            push("area_law", -area_law, conservation, false);
            literal_area_law_error = Some(
                series
                    .iter()
                    .map(|x| {
                        let predicted = first.area * (2.0 * (first.energy - x.energy)).exp();
                        (x.area - predicted).abs() / predicted
                    })
                    .fold(0.0, f64::max),
            );
            let drift = series.iter().map(|x| (x.liouville - first.liouville).abs()).fold(0.0, f64::max);
            push("dirichlet_conservation", -drift / (1.0 + first.liouville.abs()), conservation, false);
        }
        _ => {}
    }
    Ok(MonitorReport { tolerance: tol, monitors, literal_area_law_error, max_abs_u })
}

/// `d(u(t), v(t))` along two flows, sampled at `sample_times`. Without an
/// explicit tolerance the combined solver and integrator tolerance is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub tolerance: f64,
    /// Largest increase between consecutive samples.
    pub max_increase: f64,
    pub nonincreasing: bool,
}

pub fn flow_distance_monotonicity(
    s: &DiscreteSurface,
    u0: &[f64],
    v0: &[f64],
    cone: Cone,
    sample_times: &[f64],
    controls: &FlowControls,
    solver: &SolverOptions,
    tolerance: Option<f64>,
) -> Result<DistanceSeries> {
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || sample_times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidArgument("sample times must be increasing and nonnegative".into()));
    }
    let states = |start: &[f64]| -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(sample_times.len());
        let mut u = start.to_vec();
        let mut t = 0.0;
        let flow = FlowControls { convergence_tol: None, sample_every: None, ..controls.clone() };
        for &target in sample_times {
            if target > t {
                let trace = integrate(s, &u, cone, target - t, &flow)?;
                u = trace.last_snapshot().expect("trace has an endpoint").to_vec();
                t = target;
            }
            out.push(u.clone());
        }
        Ok(out)
    };
    let us = states(u0)?;
    let vs = states(v0)?;
    let mut distances = Vec::with_capacity(sample_times.len());
    let mut solver_error = 0.0f64;
    for (a, b) in us.iter().zip(&vs) {
        let report = solve_geodesic(s, a, b, cone, solver)?;
        solver_error = solver_error.max((report.distance - report.length).abs());
        distances.push(report.distance);
    }
    // Default: two solver errors (the extrapolation correction) plus the
    // integrator's relative tolerance on the distance scale.
    let scale = distances.iter().fold(0.0f64, |m, d| m.max(*d));
    let tolerance = tolerance.unwrap_or(2.0 * solver_error + 10.0 * controls.rtol * (1.0 + scale));
    let max_increase = distances.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(DistanceSeries {
        times: sample_times.to_vec(),
        nonincreasing: distances.len() < 2 || max_increase <= tolerance,
        max_increase: if distances.len() < 2 { 0.0 } else { max_increase },
        distances,
        tolerance,
    })
}
