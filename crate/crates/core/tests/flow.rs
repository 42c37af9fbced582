mod common;

use common::*;
use confgeo::conformal::Cone;
use confgeo::flow::{flow_distance_monotonicity, flow_monitors, integrate, FlowControls, MonitorTolerances};
use confgeo::geodesic::SolverOptions;
use confgeo::oracle::DilationFamily;
use confgeo::surface::build_icosphere;

#[test]
fn sphere_flow_conserves_liouville_energy_and_area_law() {
    let s = build_icosphere(3).unwrap();
    let u0 = DilationFamily::new(&s, 0.5).unwrap().factor(0.4);
    let trace = integrate(&s, &u0, Cone::Positive, 5.0, &FlowControls::default()).unwrap();
    assert_eq!(trace.final_time(), 5.0);
    let report = flow_monitors(&trace, MonitorTolerances::default()).unwrap();
    assert!(report.pass(), "{:#?}", report.monitors);
    for name in ["area_law", "dirichlet_conservation", "curvature_growth", "u_lower_bound"] {
        assert!(report.get(name).is_some_and(|m| m.pass), "{name}");
    }
    // The curvature deviation decays towards the round metric.
    let first = &trace.series[0];
    let last = trace.series.last().unwrap();
    assert!(last.deviation < 0.1 * first.deviation);
}

#[test]
fn genus_two_flow_reaches_constant_curvature() {
    let s = genus_two();
    let mut rng = rng(61);
    let u0 = admissible(&s, 0.3, &mut rng);
    let trace = integrate(&s, &u0, Cone::Negative, 50.0, &FlowControls::for_cone(Cone::Negative)).unwrap();
    assert!(trace.converged && trace.final_time() < 50.0);
    assert!(trace.series.last().unwrap().deviation < 1e-6);
    let report = flow_monitors(&trace, MonitorTolerances::default()).unwrap();
    assert!(report.pass(), "{:#?}", report.monitors);
    assert!(report.get("curvature_envelope").unwrap().pass);
}

#[test]
fn conservation_error_shrinks_with_rtol() {
    let s = build_icosphere(2).unwrap();
    let u0 = DilationFamily::new(&s, 0.5).unwrap().factor(0.4);
    let drift = |rtol: f64| {
        let controls = FlowControls { rtol, ..FlowControls::default() };
        let trace = integrate(&s, &u0, Cone::Positive, 2.0, &controls).unwrap();
        let j0 = trace.series[0].liouville;
        trace.series.iter().map(|x| (x.liouville - j0).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (drift(1e-7), drift(5e-8));
    assert!(coarse > 1.5 * fine, "{coarse} {fine}");
}

#[test]
fn series_csv_has_one_row_per_sample() {
    let s = build_icosphere(1).unwrap();
    let u0 = DilationFamily::new(&s, 0.5).unwrap().factor(0.3);
    let controls = FlowControls { sample_every: Some(0.25), ..FlowControls::default() };
    let trace = integrate(&s, &u0, Cone::Positive, 1.0, &controls).unwrap();
    let mut buf = Vec::new();
    trace.write_series_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), trace.series.len() + 1);
    for t in [0.25, 0.5, 0.75, 1.0] {
        assert!(trace.series.iter().any(|x| x.t == t), "{t}");
    }
}

#[test]
fn negative_cone_flows_contract() {
    let s = genus_two();
    let mut rng = rng(62);
    let (u0, v0) = (admissible(&s, 0.3, &mut rng), admissible(&s, 0.3, &mut rng));
    let solver = SolverOptions { intervals: 16, ..SolverOptions::default() };
    let controls = FlowControls::for_cone(Cone::Negative);
    let times = [0.0, 0.5, 1.0];
    let series = flow_distance_monotonicity(&s, &u0, &v0, Cone::Negative, &times, &controls, &solver, Some(1e-4)).unwrap();
    assert!(series.nonincreasing, "{:?}", series.distances);
    assert!(series.distances[2] < 0.5 * series.distances[0]);
}

/// Largest increase of the distance between the flows from two fixed smooth
/// factors on the sphere.
fn sphere_separation(level: u32) -> f64 {
    let s = build_icosphere(level).unwrap();
    let p = s.positions().unwrap();
    let u0: Vec<f64> = p.iter().map(|x| 0.25 * (x[0] + 0.8 * x[1] * x[2])).collect();
    let v0: Vec<f64> = p.iter().map(|x| 0.2 * (x[2] * x[2] - 1.0 / 3.0) - 0.15 * x[1]).collect();
    let solver = SolverOptions { intervals: 16, ..SolverOptions::default() };
    let times = [0.0, 1.0, 2.0];
    flow_distance_monotonicity(&s, &u0, &v0, Cone::Positive, &times, &FlowControls::default(), &solver, Some(0.0))
        .unwrap()
        .max_increase
}

#[test]
fn sphere_flow_separation_is_a_second_order_discretization_error() {
    // The discrete distance is not exactly contracted by the discrete flow;
    // the excess vanishes like the squared mesh size.
    let (coarse, fine) = (sphere_separation(2), sphere_separation(3));
    assert!(fine < coarse / 3.0, "{coarse:e} {fine:e}");
}
