//! Pointwise and integral conformal geometry of `g_u = e^{2u} g0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::surface::DiscreteSurface;

/// Which curvature sign a conformal factor is required to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cone {
    Positive,
    Negative,
    Unconstrained,
}

impl Cone {
    pub fn name(self) -> &'static str {
        match self {
            Cone::Positive => "positive",
            Cone::Negative => "negative",
            Cone::Unconstrained => "unconstrained",
        }
    }

    /// `+1` for the positive cone, `-1` for the negative one.
    pub fn sign(self) -> Result<f64> {
        match self {
            Cone::Positive => Ok(1.0),
            Cone::Negative => Ok(-1.0),
            Cone::Unconstrained => {
                Err(Error::InvalidArgument("operation requires a positive or negative cone".into()))
            }
        }
    }

    /// The cone matching the sign of the surface's total curvature.
    pub fn of_surface(s: &DiscreteSurface) -> Cone {
        match s.euler_characteristic() {
            c if c > 0 => Cone::Positive,
            c if c < 0 => Cone::Negative,
            _ => Cone::Unconstrained,
        }
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Cone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "pos" | "+" => Ok(Cone::Positive),
            "negative" | "neg" | "-" => Ok(Cone::Negative),
            "unconstrained" | "none" => Ok(Cone::Unconstrained),
            other => Err(Error::InvalidArgument(format!("unknown cone `{other}`"))),
        }
    }
}

/// A vertex field `u` with the cone it is meant to live in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub u: Vec<f64>,
    pub cone: Cone,
}

impl ConformalFactor {
    pub fn new(u: Vec<f64>, cone: Cone) -> Self {
        Self { u, cone }
    }

    pub fn zero(s: &DiscreteSurface, cone: Cone) -> Self {
        Self { u: vec![0.0; s.vertex_count()], cone }
    }

    pub fn admissibility(&self, s: &DiscreteSurface) -> Result<Admissibility> {
        admissible(s, &self.u, self.cone)
    }
}

/// Metric quantities of `g_u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub curvature: Vec<f64>,
    /// `e^{2u_i} a_i`.
    pub area_form: Vec<f64>,
    pub total_area: f64,
    pub mean_curvature: f64,
}

impl MetricSnapshot {
    pub fn summary(&self) -> SnapshotSummary {
        let (min_k, max_k) = crate::surface::min_max(&self.curvature);
        SnapshotSummary {
            total_area: self.total_area,
            mean_curvature: self.mean_curvature,
            min_curvature: min_k,
            max_curvature: max_k,
            total_curvature: self.curvature.iter().zip(&self.area_form).map(|(k, w)| k * w).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub total_area: f64,
    pub mean_curvature: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub total_curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// `min_i |K_u,i|` over the vertices with the right sign, or the most
    /// negative signed value `sign·K_u` when inadmissible.
    pub margin: f64,
    pub worst_vertex: usize,
}

/// `κ = K0 - Δ0 u`, the curvature density `K_u e^{2u}`.
pub fn curvature_density(s: &DiscreteSurface, u: &[f64]) -> Result<Vec<f64>> {
    let mut lap = s.laplacian_apply(u)?;
    for (l, k0) in lap.iter_mut().zip(s.background_curvature()) {
        *l = k0 - *l;
    }
    Ok(lap)
}

/// `K_u = e^{-2u} (K0 - Δ0 u)`.
pub fn curvature(s: &DiscreteSurface, u: &[f64]) -> Result<Vec<f64>> {
    let mut k = curvature_density(s, u)?;
    for (k, ui) in k.iter_mut().zip(u) {
        *k *= (-2.0 * ui).exp();
    }
    Ok(k)
}

pub fn area_form(s: &DiscreteSurface, u: &[f64]) -> Vec<f64> {
    s.area_masses().iter().zip(u).map(|(a, ui)| a * (2.0 * ui).exp()).collect()
}

/// Relative tolerance of the conformal Gauss-Bonnet check in [`snapshot`].
pub const CONFORMAL_GAUSS_BONNET_RTOL: f64 = 1e-10;

pub fn snapshot(s: &DiscreteSurface, u: &[f64]) -> Result<MetricSnapshot> {
    let curvature = curvature(s, u)?;
    let area_form = area_form(s, u);
    let total_area: f64 = area_form.iter().sum();
    let target = s.gauss_bonnet_target();
    let total: f64 = curvature.iter().zip(&area_form).map(|(k, w)| k * w).sum();
    // Σ a_i Δu_i vanishes only up to roundoff in the stiffness entries.
    let scale = target.abs().max(1.0) + s.dirichlet_energy(u)?.sqrt();
    if (total - target).abs() > CONFORMAL_GAUSS_BONNET_RTOL * scale {
        return Err(Error::GaussBonnet { total, expected: target });
    }
    Ok(MetricSnapshot { curvature, area_form, total_area, mean_curvature: target / total_area })
}

pub fn admissible(s: &DiscreteSurface, u: &[f64], cone: Cone) -> Result<Admissibility> {
    let k = curvature(s, u)?;
    Ok(admissibility_of(&k, cone))
}

pub(crate) fn admissibility_of(k: &[f64], cone: Cone) -> Admissibility {
    let sign = match cone {
        Cone::Positive => 1.0,
        Cone::Negative => -1.0,
        Cone::Unconstrained => {
            return Admissibility { admissible: true, margin: f64::INFINITY, worst_vertex: 0 };
        }
    };
    let (worst_vertex, margin) = k
        .iter()
        .map(|x| sign * x)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    Admissibility { admissible: margin > 0.0, margin, worst_vertex }
}

/// Curvature of `u`, or an error naming the worst vertex if `u` leaves the cone.
pub fn require_admissible(s: &DiscreteSurface, u: &[f64], cone: Cone) -> Result<Vec<f64>> {
    cone.sign()?;
    let k = curvature(s, u)?;
    let adm = admissibility_of(&k, cone);
    if adm.admissible {
        Ok(k)
    } else {
        Err(Error::Inadmissible {
            cone: cone.name(),
            vertex: adm.worst_vertex,
            curvature: k[adm.worst_vertex],
        })
    }
}

/// `J[u] = ∫|∇0 u|² + 2 ∫ K0 u`.
pub fn liouville_energy(s: &DiscreteSurface, u: &[f64]) -> Result<f64> {
    let dirichlet = s.dirichlet_energy(u)?;
    let linear: f64 = s
        .background_curvature()
        .iter()
        .zip(s.area_masses())
        .zip(u)
        .map(|((k, a), ui)| k * a * ui)
        .sum();
    Ok(dirichlet + 2.0 * linear)
}

/// `dJ_u(v) = 2 Σ v_i K_u,i e^{2u_i} a_i`.
pub fn liouville_derivative(s: &DiscreteSurface, u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(s.vertex_count(), v.len())?;
    let kappa = curvature_density(s, u)?;
    Ok(2.0 * s.mass_inner(&kappa, v))
}

/// `F[u] = J[u] - 2πχ log(A_u / A_0)`.
pub fn normalized_energy(s: &DiscreteSurface, u: &[f64]) -> Result<f64> {
    let j = liouville_energy(s, u)?;
    let area: f64 = area_form(s, u).iter().sum();
    Ok(j - s.gauss_bonnet_target() * (area / s.total_area()).ln())
}

/// Riesz representative of `dF_u` in the curvature-weighted metric:
/// `2 (K_u - K̄_u) / |K_u|`.
pub fn grad_f(s: &DiscreteSurface, u: &[f64], cone: Cone) -> Result<Vec<f64>> {
    let k = require_admissible(s, u, cone)?;
    let area: f64 = area_form(s, u).iter().sum();
    let mean = s.gauss_bonnet_target() / area;
    Ok(k.iter().map(|ki| 2.0 * (ki - mean) / ki.abs()).collect())
}

/// `⟨⟨α, β⟩⟩_u = Σ α_i β_i |K_u,i| e^{2u_i} a_i`.
pub fn weighted_inner(
    s: &DiscreteSurface,
    u: &[f64],
    alpha: &[f64],
    beta: &[f64],
    cone: Cone,
) -> Result<f64> {
    check_len(s.vertex_count(), alpha.len())?;
    check_len(s.vertex_count(), beta.len())?;
    require_admissible(s, u, cone)?;
    let weights = metric_weights(s, u)?;
    Ok(weights.iter().zip(alpha).zip(beta).map(|((w, a), b)| w * a * b).sum())
}

/// Pointwise weights `|K_u,i| e^{2u_i} a_i = |κ_i| a_i` of the weighted metric.
pub fn metric_weights(s: &DiscreteSurface, u: &[f64]) -> Result<Vec<f64>> {
    let kappa = curvature_density(s, u)?;
    Ok(kappa.iter().zip(s.area_masses()).map(|(k, a)| k.abs() * a).collect())
}

/// Sectional curvature of the plane spanned by `φ, ψ` at `u`, evaluated per
/// face. Always `≤ 0`.
pub fn sectional_curvature(
    s: &DiscreteSurface,
    u: &[f64],
    phi: &[f64],
    psi: &[f64],
    cone: Cone,
) -> Result<f64> {
    check_len(s.vertex_count(), phi.len())?;
    check_len(s.vertex_count(), psi.len())?;
    let k = require_admissible(s, u, cone)?;
    let mut total = 0.0;
    for (f, t) in s.triangles().iter().enumerate() {
        // A_f (|∇φ|²|∇ψ|² - ⟨∇φ,∇ψ⟩²) = D² / (4 A_f) for linear interpolants.
        let d = (phi[t[1]] - phi[t[0]]) * (psi[t[2]] - psi[t[0]])
            - (phi[t[2]] - phi[t[0]]) * (psi[t[1]] - psi[t[0]]);
        let wedge = d * d / (4.0 * s.face_areas()[f]);
        let u_f = s.face_average(f, u);
        let k_f = s.face_average(f, &k).abs();
        total += (-2.0 * u_f).exp() * wedge / k_f;
    }
    Ok(-total)
}

/// Polyakov's log-determinant ratio `-J[u] / 12π`.
pub fn polyakov_logdet_ratio(s: &DiscreteSurface, u: &[f64]) -> Result<f64> {
    Ok(-liouville_energy(s, u)? / (12.0 * PI))
}
