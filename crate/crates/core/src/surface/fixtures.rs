//! Small meshes used as test and CLI fixtures.

use std::collections::HashMap;

/// Splits every triangle into four through its edge midpoints, passing each
/// new midpoint through `place`.
pub(crate) fn subdivide(
    positions: &mut Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    place: impl Fn([f64; 3]) -> [f64; 3],
) -> Vec<[usize; 3]> {
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut next = Vec::with_capacity(triangles.len() * 4);
    let mut midpoint = |a: usize, b: usize, positions: &mut Vec<[f64; 3]>| -> usize {
        *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (p, q) = (positions[a], positions[b]);
            positions.push(place([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]));
            positions.len() - 1
        })
    };
    for [a, b, c] in triangles {
        let ab = midpoint(a, b, positions);
        let bc = midpoint(b, c, positions);
        let ca = midpoint(c, a, positions);
        next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    next
}

/// Regular tetrahedron inscribed in the cube `[-1, 1]³`.
pub fn tetrahedron_mesh() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    (
        vec![[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    )
}

/// Unit cube, four triangles per side.
pub fn cube_mesh() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    voxel_surface(&[[0, 0, 0]])
}

/// Double torus: the boundary of a 5×3×1 slab of unit voxels with the cells
/// `(1,1)` and `(3,1)` removed, refined `refinements` times by Loop
/// subdivision.
pub fn genus_two_mesh(refinements: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let cells: Vec<[i64; 3]> = (0..5)
        .flat_map(|x| (0..3).map(move |y| [x, y, 0]))
        .filter(|c| !(c[1] == 1 && (c[0] == 1 || c[0] == 3)))
        .collect();
    let (mut positions, mut triangles) = voxel_surface(&cells);
    for _ in 0..refinements {
        (positions, triangles) = loop_subdivide(&positions, triangles);
    }
    (positions, triangles)
}

/// One step of Loop subdivision on a closed mesh.
fn loop_subdivide(positions: &[[f64; 3]], triangles: Vec<[usize; 3]>) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let n = positions.len();
    let mut opposite: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut neighbours = vec![Vec::new(); n];
    for t in &triangles {
        for c in 0..3 {
            let (a, b, o) = (t[c], t[(c + 1) % 3], t[(c + 2) % 3]);
            opposite.entry((a.min(b), a.max(b))).or_default().push(o);
            neighbours[a].push(b);
        }
    }
    let mut next: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let k = neighbours[i].len() as f64;
            let beta = if neighbours[i].len() == 3 {
                3.0 / 16.0
            } else {
                3.0 / (8.0 * k)
            };
            let mut p = positions[i].map(|x| (1.0 - k * beta) * x);
            for &j in &neighbours[i] {
                for d in 0..3 {
                    p[d] += beta * positions[j][d];
                }
            }
            p
        })
        .collect();
    let edge_point = |a: usize, b: usize| {
        let o = &opposite[&(a.min(b), a.max(b))];
        let (c, e) = (positions[o[0]], positions[o[1]]);
        let (p, q) = (positions[a], positions[b]);
        [0, 1, 2].map(|d| 0.375 * (p[d] + q[d]) + 0.125 * (c[d] + e[d]))
    };
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces = Vec::with_capacity(triangles.len() * 4);
    let mut midpoint = |a: usize, b: usize, next: &mut Vec<[f64; 3]>| -> usize {
        *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
            next.push(edge_point(a, b));
            next.len() - 1
        })
    };
    for [a, b, c] in triangles {
        let ab = midpoint(a, b, &mut next);
        let bc = midpoint(b, c, &mut next);
        let ca = midpoint(c, a, &mut next);
        faces.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    (next, faces)
}

/// Outward-oriented boundary of a union of unit voxels, each square side fanned
/// around its centre so that no vertex has valence three.
fn voxel_surface(cells: &[[i64; 3]]) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let filled: std::collections::HashSet<[i64; 3]> = cells.iter().copied().collect();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex = |p: [i64; 3], positions: &mut Vec<[f64; 3]>| {
        *index.entry(p).or_insert_with(|| {
            positions.push([p[0] as f64, p[1] as f64, p[2] as f64]);
            positions.len() - 1
        })
    };
    for c in cells {
        for axis in 0..3 {
            for dir in [-1i64, 1] {
                let mut n = *c;
                n[axis] += dir;
                if filled.contains(&n) {
                    continue;
                }
                let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut base = *c;
                if dir > 0 {
                    base[axis] += 1;
                }
                let corner = |s: i64, t: i64| {
                    let mut p = base;
                    p[a1] += s;
                    p[a2] += t;
                    p
                };
                // (a1, a2, axis) is right-handed, so this loop is counterclockwise
                // seen from +axis.
                let mut quad = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                if dir < 0 {
                    quad.reverse();
                }
                let q = quad.map(|p| vertex(p, &mut positions));
                let centre = quad.iter().fold([0.0; 3], |acc, p| [0, 1, 2].map(|d| acc[d] + 0.25 * p[d] as f64));
                positions.push(centre);
                let m = positions.len() - 1;
                for c in 0..4 {
                    triangles.push([q[c], q[(c + 1) % 4], m]);
                }
            }
        }
    }
    (positions, triangles)
}
