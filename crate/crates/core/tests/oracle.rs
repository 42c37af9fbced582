mod common;

use common::*;
use confgeo::conformal::{self, Cone};
use confgeo::geodesic::{solve_geodesic, SolverOptions};
use confgeo::oracle::{shift_geodesic, DilationFamily};
use confgeo::path;
use confgeo::surface::build_icosphere;

fn kinematics_error(level: u32) -> f64 {
    let s = build_icosphere(level).unwrap();
    let fam = DilationFamily::new(&s, 0.5).unwrap();
    let t = 0.6;
    let u = fam.factor(t);
    let kin = fam.kinematics(t);
    let grad = s.gradient_norm_sq(&kin.velocity).unwrap();
    let scale = kin.velocity_gradient_sq.iter().fold(0.0f64, |m, x| m.max(*x));
    // |∇_u u̇|²_u = e^{-2u} |∇0 u̇|²
    let discrete: Vec<f64> = grad.iter().zip(&u).map(|(g, u)| g * (-2.0 * u).exp()).collect();
    sup_diff(&discrete, &kin.velocity_gradient_sq) / scale
}

/// `(sup |K - 1|, RMS of K - 1 in dA_u)` for the dilated factor at `t`.
fn roundness(level: u32, t: f64) -> (f64, f64) {
    let s = build_icosphere(level).unwrap();
    let u = DilationFamily::new(&s, 0.5).unwrap().factor(t);
    let k = conformal::curvature(&s, &u).unwrap();
    let w = conformal::area_form(&s, &u);
    let sup = k.iter().fold(0.0f64, |m, k| m.max((k - 1.0).abs()));
    let mean_sq = k.iter().zip(&w).map(|(k, w)| (k - 1.0).powi(2) * w).sum::<f64>() / w.iter().sum::<f64>();
    (sup, mean_sq.sqrt())
}

#[test]
fn dilated_metrics_are_round() {
    // Barycentric masses are not pointwise consistent: the vertex maximum
    // settles near 0.21 while the RMS halves per level.
    let (sup4, rms4) = roundness(4, 1.0);
    let (sup5, rms5) = roundness(5, 1.0);
    assert!(rms4 <= 0.03 && rms5 < 0.6 * rms4, "{rms4} {rms5}");
    assert!(sup4 <= 0.25 && sup5 <= 0.25, "{sup4} {sup5}");
}

#[test]
fn kinematics_agree_with_discrete_gradients() {
    let coarse = kinematics_error(4);
    let fine = kinematics_error(5);
    assert!(coarse <= 0.05 && fine <= 0.015, "{coarse} {fine}");
}

#[test]
fn sampled_family_residual_refines() {
    let residual = |level| {
        let s = build_icosphere(level).unwrap();
        let fam = DilationFamily::new(&s, 0.5).unwrap();
        path::sup_norm(&path::geodesic_residual(&s, &fam.sample_path(64, 1.0).unwrap()).unwrap())
    };
    let (r4, r5) = (residual(4), residual(5));
    assert!(r4 <= 0.05 && r5 < r4, "{r4} {r5}");
}

#[test]
fn solver_follows_the_dilation_family_on_a_coarse_sphere() {
    let s = build_icosphere(2).unwrap();
    let fam = DilationFamily::new(&s, 0.5).unwrap();
    let opts = SolverOptions { intervals: 16, ..SolverOptions::default() };
    let report = solve_geodesic(&s, &fam.factor(0.0), &fam.factor(1.0), Cone::Positive, &opts).unwrap();
    let analytic = fam.sample_path(16, 1.0).unwrap();
    let sup = report.path.sup_distance(&analytic).unwrap();
    assert!(sup <= 0.05, "{sup}");
    assert!((report.distance - fam.length(1.0)).abs() <= 0.05 * fam.length(1.0), "{}", report.distance);
}

#[test]
fn shift_geodesic_has_the_closed_form_length() {
    let s = genus_two();
    let mut rng = rng(51);
    let u0 = admissible(&s, 0.2, &mut rng);
    let p = shift_geodesic(&u0, 0.7, 4, Cone::Negative).unwrap();
    let expected = 0.7 * (-s.gauss_bonnet_target()).sqrt();
    assert!((path::path_length(&s, &p).unwrap() - expected).abs() < 1e-10 * expected);
}
