//! Fixtures and independent reference computations shared by the integration
//! tests.

#![allow(dead_code)]

use std::collections::HashSet;
use std::f64::consts::PI;

use confgeo::conformal::Cone;
use confgeo::fields::random_admissible_field;
use confgeo::surface::{cube_mesh, genus_two_mesh, icosphere_mesh, tetrahedron_mesh};
use confgeo::{CurvatureMode, DiscreteSurface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mesh = (Vec<[f64; 3]>, Vec<[usize; 3]>);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every test mesh by name: icospheres 0..=5, tetrahedron, cube, genus two.
pub fn meshes() -> Vec<(String, Mesh)> {
    let mut out: Vec<(String, Mesh)> =
        (0..=5).map(|l| (format!("icosphere-{l}"), icosphere_mesh(l))).collect();
    out.push(("tetrahedron".into(), tetrahedron_mesh()));
    out.push(("cube".into(), cube_mesh()));
    out.push(("genus2".into(), genus_two_mesh(1)));
    out
}

pub fn surface(mesh: &Mesh, mode: CurvatureMode) -> DiscreteSurface {
    DiscreteSurface::from_mesh(mesh.0.clone(), mesh.1.clone(), mode).unwrap()
}

pub fn genus_two() -> DiscreteSurface {
    surface(&genus_two_mesh(1), CurvatureMode::Constant)
}

/// `V - E + F` counted directly from the triangle list.
pub fn euler_characteristic(triangles: &[[usize; 3]]) -> i64 {
    let mut vertices = HashSet::new();
    let mut edges = HashSet::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            vertices.insert(a);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    vertices.len() as i64 - edges.len() as i64 + triangles.len() as i64
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle defects `2π - Σ θ` from positions, using `atan2` for the angles.
pub fn angle_defects(mesh: &Mesh) -> Vec<f64> {
    let (p, tris) = mesh;
    let mut defect = vec![2.0 * PI; p.len()];
    for t in tris {
        for k in 0..3 {
            let (i, j, l) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let (e1, e2) = (sub(p[j], p[i]), sub(p[l], p[i]));
            defect[i] -= norm(cross(e1, e2)).atan2(dot(e1, e2));
        }
    }
    defect
}

/// Dense cotangent stiffness `W` (zero row sums, `φᵀ W φ = ∫|∇φ|²`) and
/// barycentric masses, assembled from positions.
pub fn dense_operators(mesh: &Mesh) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (p, tris) = mesh;
    let n = p.len();
    let mut w = vec![vec![0.0; n]; n];
    let mut mass = vec![0.0; n];
    for t in tris {
        let area = 0.5 * norm(cross(sub(p[t[1]], p[t[0]]), sub(p[t[2]], p[t[0]])));
        for k in 0..3 {
            let (i, j, l) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            mass[i] += area / 3.0;
            // Corner at l sees edge (i, j).
            let (e1, e2) = (sub(p[i], p[l]), sub(p[j], p[l]));
            let half_cot = 0.5 * dot(e1, e2) / norm(cross(e1, e2));
            w[i][j] -= half_cot;
            w[j][i] -= half_cot;
            w[i][i] += half_cot;
            w[j][j] += half_cot;
        }
    }
    (w, mass)
}

/// Smooth, admissible random factor for the cone matching the sign of `K0`.
pub fn admissible(s: &DiscreteSurface, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let cone = if s.gauss_bonnet_target() > 0.0 { Cone::Positive } else { Cone::Negative };
    random_admissible_field(s, &vec![0.0; s.vertex_count()], cone, amplitude, rng).unwrap()
}

/// Independent uniform entries in `[-1, 1]`.
pub fn noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn heights(s: &DiscreteSurface) -> Vec<f64> {
    s.positions().unwrap().iter().map(|p| p[2]).collect()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
