mod common;

use common::*;
use confgeo::conformal::{self, Cone};
use confgeo::oracle::DilationFamily;
use confgeo::path::{self, TimePath};
use confgeo::surface::build_icosphere;

fn max_velocity_error(fam: &DilationFamily, n: usize) -> f64 {
    let path = fam.sample_path(n, 1.0).unwrap();
    path::velocity(&path)
        .iter()
        .enumerate()
        .map(|(k, v)| sup_diff(v, &fam.kinematics(path.time(k)).velocity))
        .fold(0.0, f64::max)
}

#[test]
fn velocity_is_second_order_in_time() {
    let s = build_icosphere(1).unwrap();
    let fam = DilationFamily::new(&s, 1.5).unwrap();
    let coarse = max_velocity_error(&fam, 16);
    let fine = max_velocity_error(&fam, 32);
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn length_is_invariant_under_reparameterization() {
    let s = build_icosphere(3).unwrap();
    let fam = DilationFamily::new(&s, 0.5).unwrap();
    let direct = path::path_length(&s, &fam.sample_path(128, 1.0).unwrap()).unwrap();
    let warped = TimePath::from_fn(s.vertex_count(), 128, Cone::Positive, |t, out| {
        out.copy_from_slice(&fam.factor(t * (2.0 - t)));
    })
    .unwrap();
    let warped = path::path_length(&s, &warped).unwrap();
    assert!((direct - warped).abs() < 1e-3 * direct, "{direct} vs {warped}");
    assert!((direct - fam.length(1.0)).abs() < 0.02 * direct);
}

#[test]
fn covariant_derivative_is_compatible_with_the_metric() {
    let mut errors = Vec::new();
    for level in [3, 4] {
        let s = build_icosphere(level).unwrap();
        let fam = DilationFamily::new(&s, 0.8).unwrap();
        let path = fam.sample_path(32, 1.0).unwrap();
        let xi = heights(&s);
        let alpha: Vec<f64> = xi.iter().map(|x| x * x).collect();
        let beta: Vec<f64> = s.positions().unwrap().iter().map(|p| p[0] + 0.5 * p[1]).collect();
        let along = |f: &Vec<f64>| vec![f.clone(); path.node_count()];
        let da = path::covariant_derivative(&s, &path, &along(&alpha)).unwrap();
        let db = path::covariant_derivative(&s, &path, &along(&beta)).unwrap();
        let k = 16;
        let u = path.node(k);
        let h = 1e-5;
        let vel = fam.kinematics(path.time(k)).velocity;
        let moved = |sign: f64| -> Vec<f64> { u.iter().zip(&vel).map(|(a, b)| a + sign * h * b).collect() };
        let pairing = |w: &[f64]| conformal::weighted_inner(&s, w, &alpha, &beta, Cone::Positive).unwrap();
        let lhs = (pairing(&moved(1.0)) - pairing(&moved(-1.0))) / (2.0 * h);
        let rhs = conformal::weighted_inner(&s, u, &da[k], &beta, Cone::Positive).unwrap()
            + conformal::weighted_inner(&s, u, &alpha, &db[k], Cone::Positive).unwrap();
        errors.push((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    assert!(errors.iter().all(|e| *e < 1e-9), "{errors:?}");
}

#[test]
fn connection_is_torsion_free() {
    // u(σ, t) = u0 + σ a + t b + σ t c; D_t ∂_σ u = D_σ ∂_t u.
    let s = build_icosphere(2).unwrap();
    let mut rng = rng(31);
    let v = s.vertex_count();
    let u0 = vec![0.0; v];
    let [a, b, c] = [0.05, 0.05, 0.05].map(|amp| admissible(&s, amp, &mut rng));
    let (sigma, t) = (0.5, 0.5);
    let n = 8;
    let along_t = TimePath::from_fn(v, n, Cone::Positive, |tt, out| {
        for i in 0..v {
            out[i] = u0[i] + sigma * a[i] + tt * b[i] + sigma * tt * c[i];
        }
    })
    .unwrap();
    let along_sigma = TimePath::from_fn(v, n, Cone::Positive, |ss, out| {
        for i in 0..v {
            out[i] = u0[i] + ss * a[i] + t * b[i] + ss * t * c[i];
        }
    })
    .unwrap();
    let u_sigma: Vec<Vec<f64>> = (0..=n)
        .map(|k| (0..v).map(|i| a[i] + along_t.time(k) * c[i]).collect())
        .collect();
    let u_t: Vec<Vec<f64>> = (0..=n)
        .map(|k| (0..v).map(|i| b[i] + along_sigma.time(k) * c[i]).collect())
        .collect();
    let lhs = path::covariant_derivative(&s, &along_t, &u_sigma).unwrap();
    let rhs = path::covariant_derivative(&s, &along_sigma, &u_t).unwrap();
    assert!(sup_diff(&lhs[n / 2], &rhs[n / 2]) < 1e-12);
}

#[test]
fn conserved_functionals_along_the_dilation_family() {
    let s = build_icosphere(4).unwrap();
    let fam = DilationFamily::new(&s, 0.5).unwrap();
    let path = fam.sample_path(64, 1.0).unwrap();
    // I_1 vanishes for this family, so both are measured against the energy.
    let e = 0.25 * 4.0 * std::f64::consts::PI / 3.0;
    for p in [1, 2] {
        let values = path::conserved_functional(&s, &path, p).unwrap();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
        assert!((hi - lo) / e < 0.02, "p = {p}: [{lo}, {hi}]");
    }
    let density = path::energy_density(&s, &path).unwrap();
    assert!(density.iter().all(|d| (d - e).abs() < 0.02 * e));
}

#[test]
fn shift_geodesic_has_zero_residual_in_the_negative_cone() {
    let s = genus_two();
    let mut rng = rng(32);
    let u0 = admissible(&s, 0.2, &mut rng);
    let path = confgeo::oracle::shift_geodesic(&u0, -0.4, 8, Cone::Negative).unwrap();
    assert!(path::sup_norm(&path::geodesic_residual(&s, &path).unwrap()) < 1e-12);
    let length = path::path_length(&s, &path).unwrap();
    let expected = 0.4 * (-s.gauss_bonnet_target()).sqrt();
    assert!((length - expected).abs() < 1e-10 * expected);
}
