//! Discrete background surfaces `(M, g0)`.
//!
//! A [`DiscreteSurface`] is a closed oriented triangle mesh together with the
//! cotangent stiffness `W`, barycentric vertex masses, per-face areas and corner
//! cotangents, and a background curvature density `K0` satisfying discrete
//! Gauss-Bonnet. All per-face gradient quantities are computed intrinsically
//! from corner cotangents and face areas, so a uniform rescaling of the areas
//! (as done for the icosphere) is a consistent rescaling of the metric.

mod fixtures;
mod icosphere;
mod io;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub use fixtures::{cube_mesh, genus_two_mesh, tetrahedron_mesh};
pub use icosphere::{build_icosphere, icosphere_mesh};
pub use io::{load_mesh, load_mesh_file, write_off, MeshFormat};

/// How the background curvature density is assigned to a loaded mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureMode {
    /// `K0_i = (2π - Σ incident angles) / a_i`.
    AngleDefect,
    /// `K0_i = 2πχ / Σ a_j` on every vertex.
    Constant,
}

impl std::str::FromStr for CurvatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle-defect" | "angle_defect" => Ok(Self::AngleDefect),
            "constant" => Ok(Self::Constant),
            other => Err(Error::InvalidArgument(format!("unknown curvature mode `{other}`"))),
        }
    }
}

/// Symmetric cotangent weights stored row-wise, off-diagonal entries only.
///
/// Row `i` lists the neighbours `j` of vertex `i` (sorted ascending) with
/// `w_ij = (cot α_ij + cot β_ij) / 2`. The diagonal is implied by zero row sums.
#[derive(Debug, Clone)]
pub struct Stiffness {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl Stiffness {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn vertex_count(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Number of stored off-diagonal entries (twice the edge count).
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Weight `w_ij` for an existing edge, `0` otherwise.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let cols = self.neighbours(i);
        match cols.binary_search(&j) {
            Ok(pos) => self.weights[self.row_ptr[i] + pos],
            Err(_) => 0.0,
        }
    }

    /// `φᵀ W φ` with `W` the positive semidefinite stiffness.
    pub fn quadratic_form(&self, phi: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.vertex_count() {
            for (j, w) in self.row(i) {
                if j > i {
                    let d = phi[i] - phi[j];
                    total += w * d * d;
                }
            }
        }
        total
    }
}

/// A closed triangulated surface with its background metric data.
#[derive(Debug, Clone)]
pub struct DiscreteSurface {
    positions: Option<Vec<[f64; 3]>>,
    triangles: Vec<[usize; 3]>,
    stiffness: Stiffness,
    area_masses: Vec<f64>,
    background_curvature: Vec<f64>,
    euler_characteristic: i64,
    edge_count: usize,
    face_areas: Vec<f64>,
    /// `cot` of the interior angle at each corner; corner `c` is opposite the
    /// edge `(c+1, c+2)`.
    face_cotangents: Vec<[f64; 3]>,
    /// Faces incident to each vertex, in face order.
    vertex_faces: Vec<Vec<usize>>,
    /// Sum of interior angles at each vertex.
    angle_sums: Vec<f64>,
}

/// Gauss-Bonnet tolerance used at construction.
pub const GAUSS_BONNET_RTOL: f64 = 1e-10;

impl DiscreteSurface {
    /// Builds a surface from embedded geometry. Topology is validated first.
    pub fn from_mesh(
        positions: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        mode: CurvatureMode,
    ) -> Result<Self> {
        let edge_count = io::validate_closed_manifold(positions.len(), &triangles)?;
        let mut face_areas = Vec::with_capacity(triangles.len());
        let mut face_cotangents = Vec::with_capacity(triangles.len());
        let mut corner_angles = Vec::with_capacity(triangles.len());
        for (f, tri) in triangles.iter().enumerate() {
            let p = tri.map(|v| positions[v]);
            let area = 0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
            let scale = [sub(p[1], p[0]), sub(p[2], p[1]), sub(p[0], p[2])]
                .iter()
                .map(|e| dot(*e, *e))
                .fold(0.0, f64::max);
            if !(area > 64.0 * f64::EPSILON * scale) {
                return Err(Error::DegenerateTriangle { face: f });
            }
            let mut cots = [0.0; 3];
            let mut angles = [0.0; 3];
            for c in 0..3 {
                let e1 = sub(p[(c + 1) % 3], p[c]);
                let e2 = sub(p[(c + 2) % 3], p[c]);
                let cr = norm(cross(e1, e2));
                let dt = dot(e1, e2);
                cots[c] = dt / cr;
                angles[c] = cr.atan2(dt);
            }
            face_areas.push(area);
            face_cotangents.push(cots);
            corner_angles.push(angles);
        }
        let v = positions.len() as i64;
        let chi = v - edge_count as i64 + triangles.len() as i64;
        let mut surface = Self::assemble(
            Some(positions),
            triangles,
            face_areas,
            face_cotangents,
            &corner_angles,
            chi,
            edge_count,
        );
        surface.assign_curvature(mode);
        surface.check_gauss_bonnet()?;
        Ok(surface)
    }

    fn assemble(
        positions: Option<Vec<[f64; 3]>>,
        triangles: Vec<[usize; 3]>,
        face_areas: Vec<f64>,
        face_cotangents: Vec<[f64; 3]>,
        corner_angles: &[[f64; 3]],
        euler_characteristic: i64,
        edge_count: usize,
    ) -> Self {
        let n = triangles.iter().flatten().copied().max().map_or(0, |m| m + 1);
        let n = positions.as_ref().map_or(n, |p| p.len());
        let mut area_masses = vec![0.0; n];
        let mut angle_sums = vec![0.0; n];
        let mut vertex_faces = vec![Vec::new(); n];
        // (row, col, half-cotangent) triplets; faces are visited in order and
        // merged after a stable sort, so the reduction order is fixed.
        let mut triplets = Vec::with_capacity(triangles.len() * 6);
        for (f, tri) in triangles.iter().enumerate() {
            for c in 0..3 {
                let i = tri[c];
                area_masses[i] += face_areas[f] / 3.0;
                angle_sums[i] += corner_angles[f][c];
                vertex_faces[i].push(f);
                let a = tri[(c + 1) % 3];
                let b = tri[(c + 2) % 3];
                let w = 0.5 * face_cotangents[f][c];
                triplets.push((a, b, w));
                triplets.push((b, a, w));
            }
        }
        triplets.sort_by_key(|x| (x.0, x.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in triplets {
            if last == Some((i, j)) {
                *weights.last_mut().unwrap() += w;
            } else {
                cols.push(j);
                weights.push(w);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            positions,
            triangles,
            stiffness: Stiffness { row_ptr, cols, weights },
            area_masses,
            background_curvature: vec![0.0; n],
            euler_characteristic,
            edge_count,
            face_areas,
            face_cotangents,
            vertex_faces,
            angle_sums,
        }
    }

    fn assign_curvature(&mut self, mode: CurvatureMode) {
        match mode {
            CurvatureMode::AngleDefect => {
                for i in 0..self.vertex_count() {
                    self.background_curvature[i] =
                        (2.0 * PI - self.angle_sums[i]) / self.area_masses[i];
                }
            }
            CurvatureMode::Constant => {
                let k = self.gauss_bonnet_target() / self.total_area();
                self.background_curvature.fill(k);
            }
        }
    }

    /// Uniformly rescales all areas (masses and faces) so the total is `target`.
    pub(crate) fn rescale_area(&mut self, target: f64) {
        let s = target / self.face_areas.iter().sum::<f64>();
        self.face_areas.iter_mut().for_each(|a| *a *= s);
        self.area_masses.iter_mut().for_each(|a| *a *= s);
    }

    pub(crate) fn set_background_curvature(&mut self, k0: Vec<f64>) {
        self.background_curvature = k0;
    }

    /// Copy with `K0` replaced by `-K0`, used to map the negative cone onto the
    /// positive one.
    pub fn with_negated_curvature(&self) -> Self {
        let mut out = self.clone();
        out.background_curvature.iter_mut().for_each(|k| *k = -*k);
        out.euler_characteristic = -out.euler_characteristic;
        out
    }

    pub(crate) fn check_gauss_bonnet(&self) -> Result<()> {
        let total = self.total_curvature();
        let expected = self.gauss_bonnet_target();
        if (total - expected).abs() <= GAUSS_BONNET_RTOL * expected.abs().max(1.0) {
            Ok(())
        } else {
            Err(Error::GaussBonnet { total, expected })
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.area_masses.len()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_characteristic
    }

    /// `2πχ`, the total curvature every conformal metric carries.
    pub fn gauss_bonnet_target(&self) -> f64 {
        2.0 * PI * self.euler_characteristic as f64
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn stiffness(&self) -> &Stiffness {
        &self.stiffness
    }

    pub fn area_masses(&self) -> &[f64] {
        &self.area_masses
    }

    pub fn background_curvature(&self) -> &[f64] {
        &self.background_curvature
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_cotangents(&self) -> &[[f64; 3]] {
        &self.face_cotangents
    }

    pub fn vertex_faces(&self, i: usize) -> &[usize] {
        &self.vertex_faces[i]
    }

    pub fn total_area(&self) -> f64 {
        self.area_masses.iter().sum()
    }

    /// `Σ a_i K0_i`.
    pub fn total_curvature(&self) -> f64 {
        self.area_masses.iter().zip(&self.background_curvature).map(|(a, k)| a * k).sum()
    }

    pub fn mean_edge_length_sq(&self) -> f64 {
        // Intrinsic: for each face, |e_c|² = 2A (cot of the two adjacent corners).
        let mut total = 0.0;
        let mut count = 0usize;
        for (f, cots) in self.face_cotangents.iter().enumerate() {
            let a = self.face_areas[f];
            for c in 0..3 {
                total += 2.0 * a * (cots[(c + 1) % 3] + cots[(c + 2) % 3]);
                count += 1;
            }
        }
        total / count as f64
    }

    /// `(Δ0 φ)_i = (1/a_i) Σ_j w_ij (φ_j - φ_i)`; negative semidefinite.
    pub fn laplacian_apply(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_len(self.vertex_count(), phi.len())?;
        let mut out = vec![0.0; phi.len()];
        self.laplacian_into(phi, &mut out);
        Ok(out)
    }

    pub(crate) fn laplacian_into(&self, phi: &[f64], out: &mut [f64]) {
        for i in 0..self.vertex_count() {
            let mut acc = 0.0;
            for (j, w) in self.stiffness.row(i) {
                acc += w * (phi[j] - phi[i]);
            }
            out[i] = acc / self.area_masses[i];
        }
    }

    /// `φᵀ W φ = ½ Σ_ij w_ij (φ_i - φ_j)²`, summed once per edge.
    pub fn dirichlet_energy(&self, phi: &[f64]) -> Result<f64> {
        check_len(self.vertex_count(), phi.len())?;
        Ok(self.stiffness.quadratic_form(phi))
    }

    /// Per-face `A_f ⟨∇φ, ∇ψ⟩_f` for the linear interpolants.
    #[inline]
    pub(crate) fn face_gradient_pairing(&self, f: usize, phi: &[f64], psi: &[f64]) -> f64 {
        let t = self.triangles[f];
        let cots = self.face_cotangents[f];
        let mut acc = 0.0;
        for c in 0..3 {
            let a = t[(c + 1) % 3];
            let b = t[(c + 2) % 3];
            acc += cots[c] * (phi[a] - phi[b]) * (psi[a] - psi[b]);
        }
        0.5 * acc
    }

    /// Per-face `⟨∇φ, ∇ψ⟩_f`.
    pub fn face_gradient_inner(&self, f: usize, phi: &[f64], psi: &[f64]) -> f64 {
        self.face_gradient_pairing(f, phi, psi) / self.face_areas[f]
    }

    /// `|∇φ|²_i = (1/a_i) Σ_{f∋i} (A_f/3) |∇φ|²_f`.
    pub fn gradient_norm_sq(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.gradient_inner(phi, phi)
    }

    /// Vertex lift of the face pairing `⟨∇φ, ∇ψ⟩`, the polarization of
    /// [`gradient_norm_sq`](Self::gradient_norm_sq).
    pub fn gradient_inner(&self, phi: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
        check_len(self.vertex_count(), phi.len())?;
        check_len(self.vertex_count(), psi.len())?;
        let mut out = vec![0.0; phi.len()];
        self.gradient_inner_into(phi, psi, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_inner_into(&self, phi: &[f64], psi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for f in 0..self.face_count() {
            let third = self.face_gradient_pairing(f, phi, psi) / 3.0;
            for &v in &self.triangles[f] {
                out[v] += third;
            }
        }
        for (o, a) in out.iter_mut().zip(&self.area_masses) {
            *o /= a;
        }
    }

    /// `Σ_i a_i φ_i ψ_i`.
    pub fn mass_inner(&self, phi: &[f64], psi: &[f64]) -> f64 {
        self.area_masses.iter().zip(phi).zip(psi).map(|((a, x), y)| a * x * y).sum()
    }

    /// Face average of a vertex field.
    pub fn face_average(&self, f: usize, field: &[f64]) -> f64 {
        let t = self.triangles[f];
        (field[t[0]] + field[t[1]] + field[t[2]]) / 3.0
    }

    /// Third coordinate of the stored positions (`ξ` on the unit sphere).
    pub fn height_field(&self) -> Result<Vec<f64>> {
        let p = self.positions.as_ref().ok_or(Error::MissingPositions)?;
        Ok(p.iter().map(|x| x[2]).collect())
    }

    pub fn summary(&self) -> SurfaceSummary {
        let (min_k0, max_k0) = min_max(&self.background_curvature);
        SurfaceSummary {
            vertices: self.vertex_count(),
            edges: self.edge_count,
            faces: self.face_count(),
            euler_characteristic: self.euler_characteristic,
            total_area: self.total_area(),
            total_curvature: self.total_curvature(),
            min_k0,
            max_k0,
        }
    }
}

/// JSON summary of a surface.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SurfaceSummary {
    #[serde(rename = "V")]
    pub vertices: usize,
    #[serde(rename = "E")]
    pub edges: usize,
    #[serde(rename = "F")]
    pub faces: usize,
    #[serde(rename = "chi")]
    pub euler_characteristic: i64,
    pub total_area: f64,
    pub total_curvature: f64,
    pub min_k0: f64,
    pub max_k0: f64,
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_field_has_zero_laplacian_and_energy() {
        let s = build_icosphere(2).unwrap();
        let phi = vec![3.5; s.vertex_count()];
        let lap = s.laplacian_apply(&phi).unwrap();
        assert!(lap.iter().all(|x| x.abs() < 1e-12));
        assert_eq!(s.dirichlet_energy(&phi).unwrap(), 0.0);
        assert!(s.gradient_norm_sq(&phi).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn stiffness_is_symmetric() {
        let s = build_icosphere(2).unwrap();
        let w = s.stiffness();
        for i in 0..s.vertex_count() {
            for (j, wij) in w.row(i) {
                assert_relative_eq!(wij, w.weight(j, i), max_relative = 1e-14);
            }
        }
        assert_eq!(w.nnz(), 2 * s.edge_count());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let s = build_icosphere(0).unwrap();
        assert!(matches!(
            s.laplacian_apply(&[1.0; 5]),
            Err(Error::LengthMismatch { expected: 12, got: 5 })
        ));
        assert!(s.dirichlet_energy(&[0.0; 3]).is_err());
        assert!(s.gradient_norm_sq(&[0.0; 13]).is_err());
    }

    #[test]
    fn dirichlet_energy_is_translation_invariant() {
        let s = build_icosphere(2).unwrap();
        let xi = s.height_field().unwrap();
        let shifted: Vec<f64> = xi.iter().map(|x| x + 7.25).collect();
        assert_relative_eq!(
            s.dirichlet_energy(&xi).unwrap(),
            s.dirichlet_energy(&shifted).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn mean_edge_length_matches_positions() {
        let s = build_icosphere(1).unwrap();
        // Icosphere areas are rescaled, so compare against rescaled positions.
        let p = s.positions().unwrap();
        let raw: f64 = s
            .triangles()
            .iter()
            .map(|t| 0.5 * norm(cross(sub(p[t[1]], p[t[0]]), sub(p[t[2]], p[t[0]]))))
            .sum();
        let scale = s.total_area() / raw;
        let mut total = 0.0;
        for t in s.triangles() {
            for c in 0..3 {
                let e = sub(p[t[(c + 1) % 3]], p[t[c]]);
                total += dot(e, e);
            }
        }
        let expected = scale * total / (3 * s.face_count()) as f64;
        assert_relative_eq!(s.mean_edge_length_sq(), expected, max_relative = 1e-12);
    }
}
