//! ASCII OFF / OBJ triangle mesh input and OFF output.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use super::{CurvatureMode, DiscreteSurface};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("off") => Ok(Self::Off),
            Some("obj") => Ok(Self::Obj),
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from `{}`",
                path.display()
            ))),
        }
    }
}

pub fn load_mesh_file(path: &Path, mode: CurvatureMode) -> Result<DiscreteSurface> {
    let format = MeshFormat::from_path(path)?;
    let file = std::fs::File::open(path)?;
    load_mesh(std::io::BufReader::new(file), format, mode)
}

pub fn load_mesh<R: BufRead>(
    source: R,
    format: MeshFormat,
    mode: CurvatureMode,
) -> Result<DiscreteSurface> {
    let (positions, triangles) = match format {
        MeshFormat::Off => parse_off(source)?,
        MeshFormat::Obj => parse_obj(source)?,
    };
    DiscreteSurface::from_mesh(positions, triangles, mode)
}

pub fn write_off<W: Write>(
    mut out: W,
    positions: &[[f64; 3]],
    triangles: &[[usize; 3]],
) -> std::io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", positions.len(), triangles.len())?;
    for p in positions {
        writeln!(out, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
    }
    for t in triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

type Mesh = (Vec<[f64; 3]>, Vec<[usize; 3]>);

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_off<R: BufRead>(source: R) -> Result<Mesh> {
    // Tokenize everything after stripping comments, remembering line numbers.
    let mut tokens: Vec<(usize, String)> = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(|t| (n + 1, t.to_string())));
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, h)) if h == "OFF" => {}
        Some((l, h)) => return Err(parse_err(l, format!("expected `OFF` header, found `{h}`"))),
        None => return Err(parse_err(0, "empty input")),
    }
    let mut next_num = |what: &str| -> Result<(usize, String)> {
        it.next().ok_or_else(|| parse_err(0, format!("unexpected end of input reading {what}")))
    };
    let parse_usize = |(l, t): (usize, String)| -> Result<usize> {
        t.parse().map_err(|_| parse_err(l, format!("expected integer, found `{t}`")))
    };
    let parse_f64 = |(l, t): (usize, String)| -> Result<f64> {
        t.parse().map_err(|_| parse_err(l, format!("expected number, found `{t}`")))
    };
    let nv = parse_usize(next_num("vertex count")?)?;
    let nf = parse_usize(next_num("face count")?)?;
    let _ne = parse_usize(next_num("edge count")?)?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f64(next_num("vertex")?)?;
        let y = parse_f64(next_num("vertex")?)?;
        let z = parse_f64(next_num("vertex")?)?;
        positions.push([x, y, z]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for face in 0..nf {
        let arity = parse_usize(next_num("face")?)?;
        if arity != 3 {
            return Err(Error::NotATriangle { face, arity });
        }
        let a = parse_usize(next_num("face")?)?;
        let b = parse_usize(next_num("face")?)?;
        let c = parse_usize(next_num("face")?)?;
        triangles.push([a, b, c]);
    }
    Ok((positions, triangles))
}

fn parse_obj<R: BufRead>(source: R) -> Result<Mesh> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let mut parts = line.split('#').next().unwrap_or("").split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .take(3)
                    .map(|t| t.parse().map_err(|_| parse_err(lineno, format!("bad coordinate `{t}`"))))
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(parse_err(lineno, "vertex needs three coordinates"));
                }
                positions.push([coords[0], coords[1], coords[2]]);
            }
            Some("f") => {
                let face = triangles.len();
                let idx: Vec<usize> = parts
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let raw: i64 = head
                            .parse()
                            .map_err(|_| parse_err(lineno, format!("bad face index `{t}`")))?;
                        let resolved = if raw > 0 {
                            raw - 1
                        } else if raw < 0 {
                            positions.len() as i64 + raw
                        } else {
                            return Err(parse_err(lineno, "face index 0 is invalid"));
                        };
                        usize::try_from(resolved)
                            .map_err(|_| parse_err(lineno, format!("face index `{t}` out of range")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::NotATriangle { face, arity: idx.len() });
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((positions, triangles))
}

/// Checks that the triangles form a closed, consistently oriented 2-manifold
/// without isolated vertices; returns the edge count.
pub(crate) fn validate_closed_manifold(vertex_count: usize, triangles: &[[usize; 3]]) -> Result<usize> {
    for (face, t) in triangles.iter().enumerate() {
        for &v in t {
            if v >= vertex_count {
                return Err(Error::VertexOutOfRange { face, vertex: v, count: vertex_count });
            }
        }
        if t[0] == t[1] || t[1] == t[2] || t[2] == t[0] {
            return Err(Error::RepeatedVertex { face });
        }
    }
    // Directed half-edges must each appear once, and every reverse must exist.
    let mut directed: HashSet<(usize, usize)> = HashSet::with_capacity(triangles.len() * 3);
    for (face, t) in triangles.iter().enumerate() {
        for c in 0..3 {
            let (a, b) = (t[c], t[(c + 1) % 3]);
            if directed.contains(&(a, b)) {
                // Same directed edge twice: either a third face or a flipped neighbour.
                let reverse_seen = directed.contains(&(b, a));
                return Err(if reverse_seen {
                    Error::NonManifoldEdge { face, a, b }
                } else {
                    Error::InconsistentOrientation { face, a, b }
                });
            }
            directed.insert((a, b));
        }
    }
    for (face, t) in triangles.iter().enumerate() {
        for c in 0..3 {
            let (a, b) = (t[c], t[(c + 1) % 3]);
            if !directed.contains(&(b, a)) {
                return Err(Error::OpenBoundary { face, a, b });
            }
        }
    }
    let edge_count = directed.len() / 2;

    // Vertex links: the "next" map around each vertex must be one cycle.
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertex_count];
    for t in triangles {
        for c in 0..3 {
            link[t[c]].push((t[(c + 1) % 3], t[(c + 2) % 3]));
        }
    }
    for (vertex, pairs) in link.iter().enumerate() {
        if pairs.is_empty() {
            return Err(Error::IsolatedVertex { vertex });
        }
        let next: HashMap<usize, usize> = pairs.iter().copied().collect();
        let start = pairs[0].0;
        let mut cur = start;
        let mut steps = 0;
        loop {
            cur = match next.get(&cur) {
                Some(&n) => n,
                None => return Err(Error::NonManifoldVertex { vertex }),
            };
            steps += 1;
            if cur == start || steps > pairs.len() {
                break;
            }
        }
        if steps != pairs.len() {
            return Err(Error::NonManifoldVertex { vertex });
        }
    }
    Ok(edge_count)
}
