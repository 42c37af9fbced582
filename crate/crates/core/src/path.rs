//! Paths of conformal factors on a uniform time grid over `[0, 1]`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::conformal::{self, Cone};
use crate::error::{check_len, Error, Result};
use crate::surface::DiscreteSurface;

/// `N + 1` vertex fields at `t_k = k / N`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePath {
    intervals: usize,
    vertex_count: usize,
    cone: Cone,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    #[serde(rename = "N")]
    intervals: usize,
    #[serde(rename = "V")]
    vertex_count: usize,
    cone: Cone,
    nodes: Vec<Vec<f64>>,
}

impl TimePath {
    pub fn from_nodes(nodes: Vec<Vec<f64>>, cone: Cone) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a path needs at least 3 time nodes, got {}",
                nodes.len()
            )));
        }
        let vertex_count = nodes[0].len();
        let mut data = Vec::with_capacity(nodes.len() * vertex_count);
        for node in &nodes {
            check_len(vertex_count, node.len())?;
            data.extend_from_slice(node);
        }
        Ok(Self { intervals: nodes.len() - 1, vertex_count, cone, data })
    }

    pub fn from_flat(intervals: usize, vertex_count: usize, cone: Cone, data: Vec<f64>) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::InvalidArgument(format!("N must be at least 2, got {intervals}")));
        }
        check_len((intervals + 1) * vertex_count, data.len())?;
        Ok(Self { intervals, vertex_count, cone, data })
    }

    /// `u_k = u0 + t_k (u1 - u0)`.
    pub fn linear(u0: &[f64], u1: &[f64], intervals: usize, cone: Cone) -> Result<Self> {
        check_len(u0.len(), u1.len())?;
        Self::from_fn(u0.len(), intervals, cone, |t, out| {
            for ((o, a), b) in out.iter_mut().zip(u0).zip(u1) {
                *o = a + t * (b - a);
            }
        })
    }

    /// Builds a path by evaluating `fill(t_k, node_k)` at every node.
    pub fn from_fn(
        vertex_count: usize,
        intervals: usize,
        cone: Cone,
        mut fill: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut path = Self::from_flat(intervals, vertex_count, cone, vec![0.0; (intervals + 1) * vertex_count])?;
        for k in 0..=intervals {
            let t = path.time(k);
            fill(t, path.node_mut(k));
        }
        Ok(path)
    }

    /// `N`, the number of time steps.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn node_count(&self) -> usize {
        self.intervals + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn cone(&self) -> Cone {
        self.cone
    }

    pub fn with_cone(mut self, cone: Cone) -> Self {
        self.cone = cone;
        self
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.intervals {
            1.0
        } else {
            k as f64 / self.intervals as f64
        }
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.data[k * self.vertex_count..(k + 1) * self.vertex_count]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.vertex_count..(k + 1) * self.vertex_count]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.vertex_count)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn start(&self) -> &[f64] {
        self.node(0)
    }

    pub fn end(&self) -> &[f64] {
        self.node(self.intervals)
    }

    /// Index of the node nearest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        ((t * self.intervals as f64).round().max(0.0) as usize).min(self.intervals)
    }

    /// `max |u - v|` over all nodes and vertices.
    pub fn sup_distance(&self, other: &TimePath) -> Result<f64> {
        check_len(self.data.len(), other.data.len())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Pointwise negation, used to move between the two cones.
    pub fn negated(&self, cone: Cone) -> TimePath {
        TimePath {
            intervals: self.intervals,
            vertex_count: self.vertex_count,
            cone,
            data: self.data.iter().map(|x| -x).collect(),
        }
    }

    /// Minimum admissibility margin over all nodes; errors on the first
    /// inadmissible node.
    pub fn check_admissible(&self, s: &DiscreteSurface) -> Result<f64> {
        let mut margin = f64::INFINITY;
        for (k, u) in self.nodes().enumerate() {
            let a = conformal::admissible(s, u, self.cone)?;
            if !a.admissible {
                return Err(Error::InadmissibleNode { node: k });
            }
            margin = margin.min(a.margin);
        }
        Ok(margin)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PathJson {
            intervals: self.intervals,
            vertex_count: self.vertex_count,
            cone: self.cone,
            nodes: self.nodes().map(<[f64]>::to_vec).collect(),
        })
        .expect("path serializes")
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, &self.to_json())?;
        Ok(())
    }

    pub fn read_json<R: Read>(source: R) -> Result<Self> {
        let p: PathJson = serde_json::from_reader(source)?;
        let path = Self::from_nodes(p.nodes, p.cone)?;
        if path.intervals != p.intervals || path.vertex_count != p.vertex_count {
            return Err(Error::InvalidArgument("path header disagrees with its nodes".into()));
        }
        Ok(path)
    }

    /// CSV matrix, one row per time node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for node in self.nodes() {
            w.write_record(node.iter().map(|x| format!("{x:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R, cone: Cone) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(source);
        let mut nodes = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: line + 1,
                        message: format!("expected number, found `{x}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            nodes.push(row);
        }
        Self::from_nodes(nodes, cone)
    }
}

/// `∂u/∂t` at every node: central differences inside, one-sided second order
/// at the ends.
pub fn velocity(path: &TimePath) -> Vec<Vec<f64>> {
    node_derivative(path.data(), path.intervals(), path.vertex_count())
}

pub(crate) fn node_derivative(data: &[f64], intervals: usize, v: usize) -> Vec<Vec<f64>> {
    let n = intervals;
    let inv2h = n as f64 / 2.0;
    let at = |k: usize, i: usize| data[k * v + i];
    (0..=n)
        .map(|k| {
            (0..v)
                .map(|i| match k {
                    0 => (-3.0 * at(0, i) + 4.0 * at(1, i) - at(2, i)) * inv2h,
                    k if k == n => (3.0 * at(n, i) - 4.0 * at(n - 1, i) + at(n - 2, i)) * inv2h,
                    k => (at(k + 1, i) - at(k - 1, i)) * inv2h,
                })
                .collect()
        })
        .collect()
}

/// `∂²u/∂t²` at the interior nodes `1..N`.
pub fn second_difference(path: &TimePath) -> Vec<Vec<f64>> {
    let n = path.intervals();
    let inv_h2 = (n * n) as f64;
    (1..n)
        .map(|k| {
            let (a, b, c) = (path.node(k - 1), path.node(k), path.node(k + 1));
            (0..path.vertex_count()).map(|i| (a[i] - 2.0 * b[i] + c[i]) * inv_h2).collect()
        })
        .collect()
}

/// Trapezoid weights on `[0, 1]`.
pub fn trapezoid_weights(intervals: usize) -> Vec<f64> {
    let h = 1.0 / intervals as f64;
    (0..=intervals).map(|k| if k == 0 || k == intervals { 0.5 * h } else { h }).collect()
}

/// Curvature density `κ_k = K0 - Δ0 u_k` at every node, checked against the cone.
fn node_densities(s: &DiscreteSurface, path: &TimePath) -> Result<Vec<Vec<f64>>> {
    let sign = path.cone().sign()?;
    path.nodes()
        .enumerate()
        .map(|(k, u)| {
            let kappa = conformal::curvature_density(s, u)?;
            if kappa.iter().all(|x| sign * x > 0.0) {
                Ok(kappa)
            } else {
                Err(Error::InadmissibleNode { node: k })
            }
        })
        .collect()
}

/// `E_k = ⟨⟨u̇_k, u̇_k⟩⟩_{u_k}`.
pub fn energy_density(s: &DiscreteSurface, path: &TimePath) -> Result<Vec<f64>> {
    check_len(s.vertex_count(), path.vertex_count())?;
    let kappa = node_densities(s, path)?;
    let vel = velocity(path);
    Ok(vel
        .iter()
        .zip(&kappa)
        .map(|(v, k)| {
            v.iter().zip(k).zip(s.area_masses()).map(|((x, k), a)| x * x * k.abs() * a).sum()
        })
        .collect())
}

/// `E = ½ ∫ ⟨⟨u̇, u̇⟩⟩ dt`.
pub fn path_energy(s: &DiscreteSurface, path: &TimePath) -> Result<f64> {
    let e = energy_density(s, path)?;
    Ok(0.5 * trapezoid_weights(path.intervals()).iter().zip(&e).map(|(w, e)| w * e).sum::<f64>())
}

/// `L = ∫ ⟨⟨u̇, u̇⟩⟩^{1/2} dt`.
pub fn path_length(s: &DiscreteSurface, path: &TimePath) -> Result<f64> {
    let e = energy_density(s, path)?;
    Ok(trapezoid_weights(path.intervals()).iter().zip(&e).map(|(w, e)| w * e.sqrt()).sum())
}

/// `u_tt + |∇0 u̇|² / (K0 - Δ0 u)` at the interior nodes.
pub fn geodesic_residual(s: &DiscreteSurface, path: &TimePath) -> Result<Vec<Vec<f64>>> {
    check_len(s.vertex_count(), path.vertex_count())?;
    let kappa = node_densities(s, path)?;
    let vel = velocity(path);
    let utt = second_difference(path);
    let mut grad = vec![0.0; s.vertex_count()];
    Ok(utt
        .into_iter()
        .enumerate()
        .map(|(j, mut r)| {
            let k = j + 1;
            s.gradient_inner_into(&vel[k], &vel[k], &mut grad);
            for ((r, g), kap) in r.iter_mut().zip(&grad).zip(&kappa[k]) {
                *r += g / kap;
            }
            r
        })
        .collect())
}

/// `max` of `|x|` over a collection of fields.
pub fn sup_norm(fields: &[Vec<f64>]) -> f64 {
    fields.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

/// Covariant derivative of the field `α` along the path:
/// `α̇ + ⟨∇0 α, ∇0 u̇⟩ / (K0 - Δ0 u)`.
pub fn covariant_derivative(
    s: &DiscreteSurface,
    path: &TimePath,
    alpha: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    check_len(path.node_count(), alpha.len())?;
    let v = s.vertex_count();
    check_len(v, path.vertex_count())?;
    let mut flat = Vec::with_capacity(alpha.len() * v);
    for a in alpha {
        check_len(v, a.len())?;
        flat.extend_from_slice(a);
    }
    let kappa = node_densities(s, path)?;
    let vel = velocity(path);
    let mut out = node_derivative(&flat, path.intervals(), v);
    let mut cross = vec![0.0; v];
    for k in 0..path.node_count() {
        s.gradient_inner_into(&alpha[k], &vel[k], &mut cross);
        for ((o, c), kap) in out[k].iter_mut().zip(&cross).zip(&kappa[k]) {
            *o += c / kap;
        }
    }
    Ok(out)
}

/// `I_p(t_k) = Σ_i (u̇_k)_i^p K_u,i e^{2u_i} a_i`, constant in `t` along geodesics.
pub fn conserved_functional(s: &DiscreteSurface, path: &TimePath, p: u32) -> Result<Vec<f64>> {
    if !(1..=2).contains(&p) {
        return Err(Error::InvalidArgument(format!("exponent must be 1 or 2, got {p}")));
    }
    let kappa = node_densities(s, path)?;
    let vel = velocity(path);
    Ok(vel
        .iter()
        .zip(&kappa)
        .map(|(v, k)| {
            v.iter().zip(k).zip(s.area_masses()).map(|((x, k), a)| x.powi(p as i32) * k * a).sum()
        })
        .collect())
}

/// `(min_i u̇_i, max_i u̇_i)` per node.
pub fn velocity_range(path: &TimePath) -> Vec<(f64, f64)> {
    velocity(path).iter().map(|v| crate::surface::min_max(v)).collect()
}
