//! Random smooth vertex fields and vertex-field IO.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::conformal::{self, Cone};
use crate::error::{Error, Result};
use crate::surface::DiscreteSurface;

/// Shape of the random fields: a few smoothed hats with random signs.
#[derive(Debug, Clone, Copy)]
pub struct RandomFieldShape {
    pub min_hats: usize,
    pub max_hats: usize,
    /// Hat radius as a fraction of `sqrt(total area)`.
    pub radius: (f64, f64),
    pub smoothing_steps: usize,
}

impl Default for RandomFieldShape {
    fn default() -> Self {
        Self { min_hats: 3, max_hats: 6, radius: (0.3, 0.7), smoothing_steps: 10 }
    }
}

/// Sum of 3-6 bumps `(1 - (d/r)²)²` centred on random vertices, smoothed by
/// `(I + τΔ0)^10` with `τ = 0.1·(mean edge length)²`, mass-weighted mean
/// zero and unit sup norm.
pub fn random_smooth_field<R: Rng + ?Sized>(s: &DiscreteSurface, rng: &mut R) -> Result<Vec<f64>> {
    random_field_with(s, rng, &RandomFieldShape::default())
}

pub fn random_field_with<R: Rng + ?Sized>(
    s: &DiscreteSurface,
    rng: &mut R,
    shape: &RandomFieldShape,
) -> Result<Vec<f64>> {
    let positions = s.positions().ok_or(Error::MissingPositions)?;
    let v = s.vertex_count();
    let scale = s.total_area().sqrt();
    let hats = rng.random_range(shape.min_hats..=shape.max_hats);
    let mut field = vec![0.0; v];
    for _ in 0..hats {
        let c = positions[rng.random_range(0..v)];
        let r = scale * rng.random_range(shape.radius.0..shape.radius.1);
        let height = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.5..1.0);
        for (f, p) in field.iter_mut().zip(positions) {
            let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt();
            let q = (1.0 - (d / r).powi(2)).max(0.0);
            *f += height * q * q;
        }
    }
    let tau = 0.1 * s.mean_edge_length_sq();
    for _ in 0..shape.smoothing_steps {
        let lap = s.laplacian_apply(&field)?;
        for (f, l) in field.iter_mut().zip(lap) {
            *f += tau * l;
        }
    }
    remove_mean(s, &mut field);
    let sup = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if sup > 0.0 {
        field.iter_mut().for_each(|f| *f /= sup);
    }
    Ok(field)
}

/// Subtracts the `a`-weighted mean.
pub fn remove_mean(s: &DiscreteSurface, field: &mut [f64]) {
    let mean = s.mass_inner(field, &vec![1.0; field.len()]) / s.total_area();
    field.iter_mut().for_each(|f| *f -= mean);
}

/// `base + amplitude·φ` for a random smooth `φ`, with the amplitude halved
/// until the curvature keeps its sign with at least a quarter of the
/// starting margin.
pub fn random_admissible_field<R: Rng + ?Sized>(
    s: &DiscreteSurface,
    base: &[f64],
    cone: Cone,
    amplitude: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let floor = 0.25 * conformal::require_admissible(s, base, cone)?.iter().fold(f64::INFINITY, |m, k| m.min(k.abs()));
    let phi = random_smooth_field(s, rng)?;
    let mut amp = amplitude;
    for _ in 0..60 {
        let u: Vec<f64> = base.iter().zip(&phi).map(|(b, p)| b + amp * p).collect();
        if conformal::admissible(s, &u, cone)?.margin >= floor {
            return Ok(u);
        }
        amp *= 0.5;
    }
    Ok(base.to_vec())
}

pub fn write_field_json<W: Write>(field: &[f64], out: W) -> Result<()> {
    serde_json::to_writer(out, field)?;
    Ok(())
}

pub fn read_field_json<R: Read>(source: R) -> Result<Vec<f64>> {
    Ok(serde_json::from_reader(source)?)
}

pub fn write_field_csv<W: Write>(field: &[f64], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for x in field {
        w.write_record([format!("{x:e}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv<R: Read>(source: R) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(source);
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(Error::Parse { line: line + 1, message: "expected one value per line".into() });
        }
        let x = record[0].trim().parse::<f64>().map_err(|e| Error::Parse { line: line + 1, message: e.to_string() })?;
        out.push(x);
    }
    Ok(out)
}

/// Reads a vertex field, choosing the format from the extension (`.csv`, or JSON).
pub fn read_field_file(path: &Path) -> Result<Vec<f64>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_field_csv(file),
        _ => read_field_json(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_icosphere;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smooth_fields_are_normalized_and_seeded() {
        let s = build_icosphere(2).unwrap();
        let a = random_smooth_field(&s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = random_smooth_field(&s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let sup = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((sup - 1.0).abs() < 1e-15);
        assert!(s.mass_inner(&a, &vec![1.0; a.len()]).abs() < 1e-12);
    }

    #[test]
    fn admissible_fields_keep_the_cone() {
        let s = build_icosphere(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let u = random_admissible_field(&s, &vec![0.0; s.vertex_count()], Cone::Positive, 2.0, &mut rng).unwrap();
            assert!(conformal::admissible(&s, &u, Cone::Positive).unwrap().margin >= 0.25);
        }
    }

    #[test]
    fn field_io_round_trip() {
        let field = vec![0.5, -1.25e-3, 3.0];
        let mut buf = Vec::new();
        write_field_csv(&field, &mut buf).unwrap();
        assert_eq!(read_field_csv(buf.as_slice()).unwrap(), field);
        let mut buf = Vec::new();
        write_field_json(&field, &mut buf).unwrap();
        assert_eq!(read_field_json(buf.as_slice()).unwrap(), field);
        assert!(read_field_csv("1,2\n".as_bytes()).is_err());
    }
}
