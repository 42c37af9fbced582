//! Metric-space checks on computed distances, the curvature-weighted Poincaré
//! gap, and invariant audits of geodesic paths.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conformal::{self, Cone};
use crate::digest::fields_digest;
use crate::error::{check_len, Error, Result};
use crate::geodesic::{solve_geodesic, SolverOptions};
use crate::path::{self, TimePath};
use crate::surface::DiscreteSurface;

/// Outcome of one check, in the form written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub inputs_digest: String,
    /// Slack of each asserted inequality; negative beyond the tolerance fails.
    pub margins: BTreeMap<String, f64>,
    /// Supporting values (distances, scales).
    pub values: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: &str, inputs: &[&[f64]], tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            inputs_digest: fields_digest(inputs),
            margins: BTreeMap::new(),
            values: BTreeMap::new(),
            tolerance,
            pass: true,
        }
    }

    pub fn margin(&mut self, name: impl Into<String>, margin: f64) {
        self.pass &= margin >= -self.tolerance;
        self.margins.insert(name.into(), margin);
    }

    pub fn value(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn worst_margin(&self) -> f64 {
        self.margins.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// Re-judges the recorded margins against a new tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.margins.values().all(|m| *m >= -tolerance);
        self
    }
}

/// `(2πχ)^{-1/2} max{Σ_{u0>u1} (u0-u1) K_{u1} dA_{u1}, Σ_{u1>u0} (u1-u0) K_{u0} dA_{u0}}`,
/// a lower bound for `d(u0, u1)` in the positive cone.
pub fn nondegeneracy_bound(s: &DiscreteSurface, u0: &[f64], u1: &[f64]) -> Result<f64> {
    conformal::require_admissible(s, u0, Cone::Positive)?;
    conformal::require_admissible(s, u1, Cone::Positive)?;
    let kappa0 = conformal::curvature_density(s, u0)?;
    let kappa1 = conformal::curvature_density(s, u1)?;
    let mut above = 0.0;
    let mut below = 0.0;
    for i in 0..s.vertex_count() {
        let d = u0[i] - u1[i];
        let a = s.area_masses()[i];
        if d > 0.0 {
            above += d * kappa1[i] * a;
        } else {
            below -= d * kappa0[i] * a;
        }
    }
    Ok(f64::max(above, below) / s.gauss_bonnet_target().sqrt())
}

fn distance(s: &DiscreteSurface, a: &[f64], b: &[f64], cone: Cone, options: &SolverOptions) -> Result<f64> {
    Ok(solve_geodesic(s, a, b, cone, options)?.distance)
}

/// Checks all three triangle inequalities among `a, b, c`.
pub fn triangle_check(
    s: &DiscreteSurface,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    cone: Cone,
    options: &SolverOptions,
    tolerance: f64,
) -> Result<CheckReport> {
    let ab = distance(s, a, b, cone, options)?;
    let bc = distance(s, b, c, cone, options)?;
    let ac = distance(s, a, c, cone, options)?;
    let mut report = CheckReport::new("triangle", &[a, b, c], tolerance);
    report.value("d_ab", ab);
    report.value("d_bc", bc);
    report.value("d_ac", ac);
    report.margin("ab", bc + ac - ab);
    report.margin("bc", ab + ac - bc);
    report.margin("ac", ab + bc - ac);
    Ok(report)
}

/// The comparison inequality
/// `d²(A, BC(s)) ≤ (1-s) d(A,B)² + s d(A,C)² - s(1-s) d(B,C)²` at grid nodes
/// of the geodesic from `b` to `c`.
pub fn npc_check(
    s: &DiscreteSurface,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    s_values: &[f64],
    cone: Cone,
    options: &SolverOptions,
    tolerance: f64,
) -> Result<CheckReport> {
    let n = options.intervals as f64;
    let mut nodes = Vec::with_capacity(s_values.len());
    for &sv in s_values {
        let k = (sv * n).round();
        if !(0.0..=1.0).contains(&sv) || (sv * n - k).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("s = {sv} is not a node of a grid with N = {n}")));
        }
        nodes.push(k as usize);
    }
    let bc_solve = solve_geodesic(s, b, c, cone, options)?;
    let ab = distance(s, a, b, cone, options)?;
    let ac = distance(s, a, c, cone, options)?;
    let bc = bc_solve.distance;
    let mut report = CheckReport::new("npc", &[a, b, c], tolerance);
    report.value("d_ab", ab);
    report.value("d_ac", ac);
    report.value("d_bc", bc);
    for (&sv, &k) in s_values.iter().zip(&nodes) {
        let point = bc_solve.path.node(k);
        let d = if k == 0 {
            ab
        } else if k == options.intervals {
            ac
        } else {
            distance(s, a, point, cone, options)?
        };
        let bound = (1.0 - sv) * ab * ab + sv * ac * ac - sv * (1.0 - sv) * bc * bc;
        report.value(format!("d_a_bc({sv})"), d);
        report.margin(format!("s={sv}"), bound - d * d);
    }
    Ok(report)
}

/// `Σ_f A_f |∇0 φ|²_f / K_f - 2 Σ_i φ_i² e^{2u_i} a_i` after removing the
/// `dA_u`-mean of `φ`; nonnegative in the continuum.
pub fn andrews_gap(s: &DiscreteSurface, u: &[f64], phi: &[f64]) -> Result<f64> {
    check_len(s.vertex_count(), phi.len())?;
    let k = conformal::require_admissible(s, u, Cone::Positive)?;
    let dens = conformal::area_form(s, u);
    let area: f64 = dens.iter().sum();
    let mean = dens.iter().zip(phi).map(|(w, p)| w * p).sum::<f64>() / area;
    let phi: Vec<f64> = phi.iter().map(|p| p - mean).collect();
    // |∇_u φ|²_u dA_u = |∇0 φ|² dA0 in two dimensions.
    let weighted: f64 = (0..s.face_count())
        .map(|f| s.face_gradient_pairing(f, &phi, &phi) / s.face_average(f, &k))
        .sum();
    let mass: f64 = phi.iter().zip(&dens).map(|(p, w)| p * p * w).sum();
    Ok(weighted - 2.0 * mass)
}

/// Constant of the audit tolerance `C (ε + h²)`. Twice the largest drift ratio
/// of a solver run on a shift geodesic (icosphere level 3, N = 64, ε = 1e-3).
pub const AUDIT_CONSTANT: f64 = 55.0;

pub fn audit_tolerance(epsilon: f64, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    AUDIT_CONSTANT * (epsilon + h * h)
}

/// Dimensionless invariant drifts of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditMeasures {
    /// `(max E - min E) / mean E` of the energy density.
    pub energy_drift: f64,
    /// Drift in time of `sup u̇` and `inf u̇`, over `max |u̇|`.
    pub sup_drift: f64,
    pub inf_drift: f64,
    /// `max sign·u_tt`, over `max |u̇|²`.
    pub acceleration_sign: f64,
    /// `-min d²F/dt²`, over `1 + mean E`.
    pub energy_concavity: f64,
}

pub fn audit_measures(s: &DiscreteSurface, path: &TimePath) -> Result<AuditMeasures> {
    let sign = path.cone().sign()?;
    let energy = path::energy_density(s, path)?;
    let (e_min, e_max) = crate::surface::min_max(&energy);
    let e_mean = energy.iter().sum::<f64>() / energy.len() as f64;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let ranges = path::velocity_range(path);
    let speed = ranges.iter().fold(0.0f64, |m, (lo, hi)| m.max(lo.abs()).max(hi.abs()));
    let spread = |vals: Vec<f64>| {
        let (lo, hi) = crate::surface::min_max(&vals);
        hi - lo
    };
    let sup_drift = spread(ranges.iter().map(|r| r.1).collect());
    let inf_drift = spread(ranges.iter().map(|r| r.0).collect());
    let utt = path::second_difference(path);
    let acc = utt.iter().flatten().map(|x| sign * x).fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = path.nodes().map(|u| conformal::normalized_energy(s, u)).collect::<Result<_>>()?;
    let n2 = (path.intervals() * path.intervals()) as f64;
    let concavity = f.windows(3).map(|w| -(w[0] - 2.0 * w[1] + w[2]) * n2).fold(f64::NEG_INFINITY, f64::max);
    Ok(AuditMeasures {
        energy_drift: ratio(e_max - e_min, e_mean),
        sup_drift: ratio(sup_drift, speed),
        inf_drift: ratio(inf_drift, speed),
        acceleration_sign: ratio(acc.max(0.0), speed * speed),
        energy_concavity: concavity.max(0.0) / (1.0 + e_mean),
    })
}

/// Audits a converged path: constant energy density, constant `sup u̇` and
/// `inf u̇`, the sign of `u_tt` and convexity of `F` in `t`.
pub fn geodesic_audit(s: &DiscreteSurface, path: &TimePath, tolerance: f64) -> Result<CheckReport> {
    let m = audit_measures(s, path)?;
    let mut report = CheckReport::new("geodesic-audit", &[path.data()], tolerance);
    report.margin("energy_density", -m.energy_drift);
    report.margin("sup_velocity", -m.sup_drift);
    report.margin("inf_velocity", -m.inf_drift);
    report.margin("acceleration_sign", -m.acceleration_sign);
    report.margin("energy_convexity", -m.energy_concavity);
    report.value("intervals", path.intervals() as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::shift_geodesic;
    use crate::surface::build_icosphere;
    use std::f64::consts::PI;

    #[test]
    fn nondegeneracy_is_tight_for_shifts() {
        let s = build_icosphere(2).unwrap();
        let u0 = vec![0.0; s.vertex_count()];
        assert_eq!(nondegeneracy_bound(&s, &u0, &u0).unwrap(), 0.0);
        let u1 = vec![0.3; s.vertex_count()];
        let b = nondegeneracy_bound(&s, &u0, &u1).unwrap();
        assert!((b - 0.3 * (4.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn andrews_gap_vanishes_on_constants() {
        let s = build_icosphere(2).unwrap();
        let u = vec![0.0; s.vertex_count()];
        assert!(andrews_gap(&s, &u, &vec![2.5; s.vertex_count()]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn shift_geodesic_audits_cleanly() {
        let s = build_icosphere(2).unwrap();
        let u0 = s.height_field().unwrap().iter().map(|x| 0.1 * x).collect::<Vec<_>>();
        let p = shift_geodesic(&u0, 0.4, 16, Cone::Positive).unwrap();
        let m = audit_measures(&s, &p).unwrap();
        assert!(m.energy_drift < 1e-12 && m.sup_drift < 1e-12 && m.inf_drift < 1e-12);
        assert!(m.acceleration_sign < 1e-9);
        let report = geodesic_audit(&s, &p, 1e-10).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn npc_rejects_off_grid_parameters() {
        let s = build_icosphere(1).unwrap();
        let u = vec![0.0; s.vertex_count()];
        let opts = SolverOptions { intervals: 6, ..SolverOptions::default() };
        assert!(matches!(
            npc_check(&s, &u, &u, &u, &[0.25], Cone::Positive, &opts, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
