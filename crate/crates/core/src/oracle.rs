//! Closed-form geodesics: pulled-back dilations of the round sphere and
//! constant shifts.

use crate::conformal::Cone;
use crate::error::{Error, Result};
use crate::path::TimePath;
use crate::surface::DiscreteSurface;

/// Conformal factors of `φ_α^* g0` with `α = e^{λt}` on the unit sphere.
#[derive(Debug, Clone)]
pub struct DilationFamily {
    pub lambda: f64,
    /// Height coordinate of each vertex.
    pub xi: Vec<f64>,
}

/// Time derivatives of the dilation family at one instant.
#[derive(Debug, Clone)]
pub struct DilationKinematics {
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    /// `|∇_u u̇|²_u`, equal to `-u_tt` because `K_u ≡ 1`.
    pub velocity_gradient_sq: Vec<f64>,
}

impl DilationFamily {
    /// Fails unless the surface stores positions on the unit sphere.
    pub fn new(s: &DiscreteSurface, lambda: f64) -> Result<Self> {
        let positions = s.positions().ok_or(Error::MissingPositions)?;
        let off_sphere = positions
            .iter()
            .any(|p| ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() > 1e-9);
        if off_sphere || s.euler_characteristic() != 2 {
            return Err(Error::InvalidArgument("the dilation family needs a unit icosphere".into()));
        }
        Ok(Self { lambda, xi: positions.iter().map(|p| p[2].clamp(-1.0, 1.0)).collect() })
    }

    fn alpha(&self, t: f64) -> f64 {
        (self.lambda * t).exp()
    }

    /// `u(t) = log 2α - log[(1+ξ) + α²(1-ξ)]`.
    pub fn factor(&self, t: f64) -> Vec<f64> {
        let a = self.alpha(t);
        let a2 = a * a;
        self.xi.iter().map(|x| (2.0 * a).ln() - ((1.0 + x) + a2 * (1.0 - x)).ln()).collect()
    }

    pub fn kinematics(&self, t: f64) -> DilationKinematics {
        let a2 = self.alpha(t).powi(2);
        let l = self.lambda;
        let mut out = DilationKinematics {
            velocity: Vec::with_capacity(self.xi.len()),
            acceleration: Vec::with_capacity(self.xi.len()),
            velocity_gradient_sq: Vec::with_capacity(self.xi.len()),
        };
        for x in &self.xi {
            let d = (1.0 + x) + a2 * (1.0 - x);
            out.velocity.push(l - 2.0 * l * a2 * (1.0 - x) / d);
            let g = 4.0 * l * l * a2 * (1.0 - x) * (1.0 + x) / (d * d);
            out.acceleration.push(-g);
            out.velocity_gradient_sq.push(g);
        }
        out
    }

    /// The family on `[0, t_end]`, reparameterized onto the unit time grid.
    pub fn sample_path(&self, intervals: usize, t_end: f64) -> Result<TimePath> {
        TimePath::from_fn(self.xi.len(), intervals, Cone::Positive, |t, out| {
            out.copy_from_slice(&self.factor(t * t_end));
        })
    }

    /// Length of the family over `[0, t_end]`: `|λ| t_end √(4π/3)`.
    pub fn length(&self, t_end: f64) -> f64 {
        self.lambda.abs() * t_end * (4.0 * std::f64::consts::PI / 3.0).sqrt()
    }
}

pub fn dilation_factor(family: &DilationFamily, t: f64) -> Vec<f64> {
    family.factor(t)
}

pub fn dilation_kinematics(family: &DilationFamily, t: f64) -> DilationKinematics {
    family.kinematics(t)
}

/// `u_k = u0 + t_k c`, an exact geodesic of length `|c| √(2πχ)`.
pub fn shift_geodesic(u0: &[f64], c: f64, intervals: usize, cone: Cone) -> Result<TimePath> {
    let u1: Vec<f64> = u0.iter().map(|x| x + c).collect();
    TimePath::linear(u0, &u1, intervals, cone)
}
