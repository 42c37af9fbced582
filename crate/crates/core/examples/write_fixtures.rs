//! Regenerates the mesh files under `fixtures/`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use confgeo::surface::{cube_mesh, genus_two_mesh, icosphere_mesh, tetrahedron_mesh, write_off};

fn main() -> confgeo::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    std::fs::create_dir_all(&dir)?;
    let mut meshes = vec![
        ("tetrahedron.off".to_string(), tetrahedron_mesh()),
        ("cube.off".to_string(), cube_mesh()),
        ("genus2.off".to_string(), genus_two_mesh(1)),
    ];
    for level in 0..=5 {
        meshes.push((format!("icosphere-{level}.off"), icosphere_mesh(level)));
    }
    for (name, (positions, triangles)) in meshes {
        let path = dir.join(&name);
        write_off(BufWriter::new(File::create(&path)?), &positions, &triangles)?;
        println!("{} ({} vertices, {} faces)", path.display(), positions.len(), triangles.len());
    }
    Ok(())
}
