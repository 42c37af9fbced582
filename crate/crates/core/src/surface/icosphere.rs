use std::f64::consts::PI;

use super::fixtures::subdivide;
use super::{CurvatureMode, DiscreteSurface};
use crate::error::{Error, Result};

pub const MAX_LEVEL: u32 = 8;

/// Subdivided icosahedron on the unit sphere with `K0 ≡ 1`.
///
/// Vertex masses and face areas are uniformly rescaled so that the total area
/// is exactly `4π`; with `K0 ≡ 1` discrete Gauss-Bonnet then holds to roundoff.
/// Level `L` has `10·4^L + 2` vertices and `20·4^L` faces.
pub fn build_icosphere(level: u32) -> Result<DiscreteSurface> {
    if level > MAX_LEVEL {
        return Err(Error::LevelTooLarge(level));
    }
    let (positions, triangles) = icosphere_mesh(level);
    let mut surface = DiscreteSurface::from_mesh(positions, triangles, CurvatureMode::Constant)?;
    surface.rescale_area(4.0 * PI);
    surface.set_background_curvature(vec![1.0; surface.vertex_count()]);
    surface.check_gauss_bonnet()?;
    Ok(surface)
}

/// Vertices and faces of the level-`level` icosphere on the unit sphere.
pub fn icosphere_mesh(level: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<[f64; 3]> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        triangles = subdivide(&mut positions, triangles, normalize);
    }
    (positions, triangles)
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}
