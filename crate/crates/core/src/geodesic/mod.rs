//! The regularized geodesic boundary value problem
//! `u_tt (K0 - Δ0 u) + |∇0 u̇|² + ε f0 = 0` with Dirichlet data in time,
//! solved by damped Newton on the whole space-time grid and continued in `ε`.

mod linear;
mod system;

use serde::{Deserialize, Serialize};

use crate::conformal::{self, Cone};
use crate::error::{check_len, Error, Result};
use crate::path::{self, TimePath};
use crate::surface::DiscreteSurface;

use linear::{gmres, lu_solve, norm2, TimeDiagonalPreconditioner};
use system::{evaluate, JacobianPattern};

/// Data of the regularization `f = ε f0` and its continuation schedule.
///
/// Space-time fields use the interior-node layout: entry `(k-1)·V + i` is
/// vertex `i` at `t_k`, `k = 1..N-1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularizationPlan {
    pub intervals: usize,
    pub vertex_count: usize,
    /// `min (K0 - Δ0 u_b)` over both boundary factors.
    pub delta0: f64,
    pub a0: f64,
    pub margin: f64,
    pub f0: Vec<f64>,
    pub schedule: Vec<f64>,
}

impl RegularizationPlan {
    pub fn forcing(&self, epsilon: f64) -> Vec<f64> {
        self.f0.iter().map(|f| epsilon * f).collect()
    }

    /// `ũ = (1-t) u0 + t u1 + A0 t (1-t)`, the exact solution for `ε = 1`.
    pub fn comparison_path(&self, u0: &[f64], u1: &[f64]) -> Result<TimePath> {
        let a0 = self.a0;
        TimePath::from_fn(u0.len(), self.intervals, Cone::Positive, |t, out| {
            for ((o, a), b) in out.iter_mut().zip(u0).zip(u1) {
                *o = (1.0 - t) * a + t * b + a0 * t * (1.0 - t);
            }
        })
    }

    pub fn min_f0(&self) -> f64 {
        self.f0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `1, ½, ¼, …` while above `epsilon_min`, ending exactly at `epsilon_min`.
pub fn epsilon_schedule(epsilon_min: f64) -> Result<Vec<f64>> {
    if !(epsilon_min > 0.0 && epsilon_min <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon_min must lie in (0, 1], got {epsilon_min}")));
    }
    let mut schedule = Vec::new();
    let mut eps = 1.0;
    while eps > epsilon_min * (1.0 + 1e-12) {
        schedule.push(eps);
        eps *= 0.5;
    }
    schedule.push(epsilon_min);
    Ok(schedule)
}

pub const PLAN_MARGIN: f64 = 1.0;

/// Builds `f0 = 2 A0 [(1-t) κ(u0) + t κ(u1)] - |∇0 (u1 - u0)|²` with
/// `A0 = (max |∇0 (u1 - u0)|² + margin) / (2 δ0)`. Positive formulation.
pub fn build_plan(
    s: &DiscreteSurface,
    u0: &[f64],
    u1: &[f64],
    epsilon_min: f64,
    intervals: usize,
) -> Result<RegularizationPlan> {
    if intervals < 2 {
        return Err(Error::InvalidArgument(format!("N must be at least 2, got {intervals}")));
    }
    let v = s.vertex_count();
    check_len(v, u0.len())?;
    check_len(v, u1.len())?;
    let kappa0 = conformal::curvature_density(s, u0)?;
    let kappa1 = conformal::curvature_density(s, u1)?;
    let delta0 = kappa0.iter().chain(&kappa1).copied().fold(f64::INFINITY, f64::min);
    if !(delta0 > 0.0) {
        let (vertex, curvature) = kappa0
            .iter()
            .chain(&kappa1)
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, &k)| if k < b.1 { (i % v, k) } else { b });
        return Err(Error::Inadmissible { cone: "positive", vertex, curvature });
    }
    let diff: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| a - b).collect();
    let grad = s.gradient_norm_sq(&diff)?;
    let max_grad = grad.iter().copied().fold(0.0, f64::max);
    let margin = PLAN_MARGIN;
    let a0 = (max_grad + margin) / (2.0 * delta0);
    let mut f0 = Vec::with_capacity((intervals - 1) * v);
    for k in 1..intervals {
        let t = k as f64 / intervals as f64;
        for i in 0..v {
            f0.push(2.0 * a0 * ((1.0 - t) * kappa0[i] + t * kappa1[i]) - grad[i]);
        }
    }
    let plan = RegularizationPlan {
        intervals,
        vertex_count: v,
        delta0,
        a0,
        margin,
        f0,
        schedule: epsilon_schedule(epsilon_min)?,
    };
    debug_assert!(plan.min_f0() >= margin * (1.0 - 1e-12));
    Ok(plan)
}

fn check_forcing(path: &TimePath, forcing: &[f64]) -> Result<()> {
    check_len((path.intervals() - 1) * path.vertex_count(), forcing.len())
}

/// `G_k = (u_tt)_k (K0 - Δ0 u_k) + |∇0 u̇_k|² + f_k` at the interior nodes,
/// flattened in the interior-node layout.
pub fn geodesic_operator(s: &DiscreteSurface, path: &TimePath, forcing: &[f64]) -> Result<Vec<f64>> {
    check_len(s.vertex_count(), path.vertex_count())?;
    check_forcing(path, forcing)?;
    Ok(evaluate(s, path.intervals(), path.data(), forcing).residual)
}

/// `(L φ)_k = φ_tt (K0 - Δ0 u_k) - (u_tt)_k Δ0 φ_k + 2 ⟨∇0 u̇_k, ∇0 φ̇_k⟩` at
/// the interior nodes. `φ` must vanish at `t = 0` and `t = 1`.
pub fn linearized_apply(s: &DiscreteSurface, path: &TimePath, phi: &TimePath) -> Result<Vec<f64>> {
    let v = s.vertex_count();
    check_len(v, path.vertex_count())?;
    check_len(path.data().len(), phi.data().len())?;
    if phi.start().iter().chain(phi.end()).any(|x| *x != 0.0) {
        return Err(Error::InvalidArgument("perturbation must vanish at the time boundary".into()));
    }
    let n = path.intervals();
    let udot = path::velocity(path);
    let utt = path::second_difference(path);
    let phidot = path::velocity(phi);
    let phitt = path::second_difference(phi);
    let mut out = Vec::with_capacity((n - 1) * v);
    let mut cross = vec![0.0; v];
    for k in 1..n {
        let kappa = conformal::curvature_density(s, path.node(k))?;
        let lap_phi = s.laplacian_apply(phi.node(k))?;
        s.gradient_inner_into(&udot[k], &phidot[k], &mut cross);
        for i in 0..v {
            out.push(phitt[k - 1][i] * kappa[i] - utt[k - 1][i] * lap_phi[i] + 2.0 * cross[i]);
        }
    }
    Ok(out)
}

/// Controls of the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub min_step: f64,
    /// Relative residual required of every linear solve.
    pub linear_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-9, max_iterations: 50, min_step: 1e-12, linear_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    /// `min κ` over the interior nodes of the result.
    pub margin: f64,
    pub krylov_iterations: usize,
    pub direct_solves: usize,
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn min_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

struct LinearStats {
    krylov: usize,
    direct: bool,
}

/// Solves `J δ = rhs` to `linear_tol` relative: preconditioned GMRES on the
/// rows scaled by `1/κ`, then a sparse LU if GMRES stalls.
fn solve_newton_system(
    s: &DiscreteSurface,
    intervals: usize,
    jac: &linear::CsrMatrix,
    eval: &system::Evaluation,
    rhs: &[f64],
    linear_tol: f64,
) -> Result<(Vec<f64>, LinearStats)> {
    let v = s.vertex_count();
    let m = rhs.len();
    let kappa = &eval.density;
    let inv_kappa: Vec<f64> = kappa.iter().map(|k| 1.0 / k).collect();
    let mut speed = vec![0.0; v];
    for k in 0..intervals - 1 {
        for i in 0..v {
            speed[i] -= eval.acceleration[k * v + i] * inv_kappa[k * v + i];
        }
    }
    let max_speed = speed.iter().copied().fold(0.0, f64::max);
    let floor = 1e-10 * max_speed.max(1.0);
    for sp in speed.iter_mut() {
        *sp = (*sp / (intervals - 1) as f64).max(floor);
    }
    let (kmin, kmax) = crate::surface::min_max(kappa);
    let scaled_tol = linear_tol * (kmin / kmax);
    let scaled_rhs: Vec<f64> = rhs.iter().zip(&inv_kappa).map(|(r, w)| r * w).collect();
    let mut x = vec![0.0; m];
    let mut krylov = 0;
    if let Ok(pre) = TimeDiagonalPreconditioner::new(s, intervals, &speed) {
        let apply = |x: &[f64], y: &mut [f64]| {
            jac.matvec(x, y);
            for (yi, w) in y.iter_mut().zip(&inv_kappa) {
                *yi *= w;
            }
        };
        let outcome = gmres(&apply, &|r, z| pre.apply(r, z), &scaled_rhs, &mut x, scaled_tol, 60, 1500);
        krylov = outcome.iterations;
        if outcome.converged && relative_residual(jac, &x, rhs) <= linear_tol {
            return Ok((x, LinearStats { krylov, direct: false }));
        }
    }
    let x = lu_solve(jac, rhs)?;
    let rel = relative_residual(jac, &x, rhs);
    if rel > linear_tol {
        return Err(Error::LinearSolve(format!("relative residual {rel:.3e} above {linear_tol:.1e}")));
    }
    Ok((x, LinearStats { krylov, direct: true }))
}

fn relative_residual(a: &linear::CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    a.matvec(x, &mut ax);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Damped Newton for `G_f(u) = 0` with the boundary rows of `init` held fixed.
///
/// Works in the positive formulation: `K0 - Δ0 u > 0` must hold on `init` and
/// is preserved by the line search.
pub fn newton_solve(
    s: &DiscreteSurface,
    forcing: &[f64],
    init: &TimePath,
    options: &NewtonOptions,
) -> Result<(TimePath, NewtonReport)> {
    let v = s.vertex_count();
    check_len(v, init.vertex_count())?;
    check_forcing(init, forcing)?;
    let n = init.intervals();
    let mut data = init.data().to_vec();
    let mut eval = evaluate(s, n, &data, forcing);
    if !(min_of(&eval.density) > 0.0) {
        return Err(Error::Newton {
            reason: "initial path is not admissible".into(),
            iterations: 0,
            residual: sup(&eval.residual),
            best: None,
        });
    }
    let mut residual = sup(&eval.residual);
    let mut pattern = JacobianPattern::new(s, n);
    let mut report = NewtonReport::default();
    let finish = |data: Vec<f64>| TimePath::from_flat(n, v, init.cone(), data);
    let interior = v..n * v;
    for iteration in 0..=options.max_iterations {
        report.iterations = iteration;
        report.residual = residual;
        if residual <= options.residual_tol {
            report.margin = min_of(&eval.density);
            return Ok((finish(data)?, report));
        }
        if iteration == options.max_iterations {
            break;
        }
        let rhs: Vec<f64> = eval.residual.iter().map(|r| -r).collect();
        let jac = pattern.assemble(s, &eval);
        let (step, stats) = match solve_newton_system(s, n, jac, &eval, &rhs, options.linear_tol) {
            Ok(ok) => ok,
            Err(e) => {
                return Err(Error::Newton {
                    reason: e.to_string(),
                    iterations: iteration,
                    residual,
                    best: Some(Box::new(finish(data)?)),
                })
            }
        };
        report.krylov_iterations += stats.krylov;
        report.direct_solves += usize::from(stats.direct);
        let mut alpha = 1.0;
        loop {
            let mut trial = data.clone();
            for (t, d) in trial[interior.clone()].iter_mut().zip(&step) {
                *t += alpha * d;
            }
            let trial_eval = evaluate(s, n, &trial, forcing);
            let trial_residual = sup(&trial_eval.residual);
            if min_of(&trial_eval.density) > 0.0 && trial_residual < residual {
                data = trial;
                eval = trial_eval;
                residual = trial_residual;
                break;
            }
            alpha *= 0.5;
            if alpha < options.min_step {
                return Err(Error::Newton {
                    reason: "line search step underflow".into(),
                    iterations: iteration + 1,
                    residual,
                    best: Some(Box::new(finish(data)?)),
                });
            }
        }
    }
    Err(Error::Newton {
        reason: "iteration limit reached".into(),
        iterations: options.max_iterations,
        residual,
        best: Some(Box::new(finish(data)?)),
    })
}

/// Controls of [`solve_geodesic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub intervals: usize,
    pub epsilon_min: f64,
    pub residual_tol: f64,
    pub max_newton_iterations: usize,
    /// Keep the converged path of every stage in the report.
    pub keep_stage_paths: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            intervals: 64,
            epsilon_min: 1e-3,
            residual_tol: 1e-9,
            max_newton_iterations: 50,
            keep_stage_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub epsilon: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    pub margin: f64,
    pub length: f64,
    pub krylov_iterations: usize,
    pub direct_solves: usize,
}

/// Outcome of a geodesic solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub path: TimePath,
    #[serde(skip)]
    pub stage_paths: Vec<TimePath>,
    pub cone: Cone,
    pub intervals: usize,
    pub epsilon_reached: f64,
    pub stages: Vec<StageReport>,
    pub residual: f64,
    /// Minimum `|K0 - Δ0 u|` over the space-time grid.
    pub margin: f64,
    /// Length of the path at `epsilon_reached`.
    pub length: f64,
    /// Length extrapolated linearly in `ε` to `ε = 0` from the last two stages.
    pub distance: f64,
    /// `|d(ε_j) - d(ε_{j+1})|` over the last stages, for the Cauchy diagnostic.
    pub length_increments: Vec<f64>,
    pub a0: f64,
    pub delta0: f64,
}

impl SolveReport {
    /// The forcing `ε f0` the final path solves, in the path's own cone.
    pub fn forcing(&self, plan: &RegularizationPlan) -> Vec<f64> {
        plan.forcing(self.epsilon_reached)
    }
}

/// Extrapolates `d(ε) = d0 + c ε` from two stages.
fn extrapolate(stages: &[StageReport]) -> f64 {
    match stages {
        [] => 0.0,
        [only] => only.length,
        [.., a, b] => {
            let d0 = (a.epsilon * b.length - b.epsilon * a.length) / (a.epsilon - b.epsilon);
            d0.max(0.0)
        }
    }
}

/// The positive-formulation surface for a cone: the negative cone is mapped by
/// `u = -w`, `K0 → -K0`.
pub fn positive_formulation(s: &DiscreteSurface, cone: Cone) -> Result<std::borrow::Cow<'_, DiscreteSurface>> {
    match cone {
        Cone::Positive => Ok(std::borrow::Cow::Borrowed(s)),
        Cone::Negative => Ok(std::borrow::Cow::Owned(s.with_negated_curvature())),
        Cone::Unconstrained => Err(Error::InvalidArgument("geodesics need a positive or negative cone".into())),
    }
}

/// Solves for the regularizable geodesic from `u0` to `u1` in `cone`.
pub fn solve_geodesic(
    s: &DiscreteSurface,
    u0: &[f64],
    u1: &[f64],
    cone: Cone,
    options: &SolverOptions,
) -> Result<SolveReport> {
    conformal::require_admissible(s, u0, cone)?;
    conformal::require_admissible(s, u1, cone)?;
    let sign = cone.sign()?;
    let surface = positive_formulation(s, cone)?;
    let w0: Vec<f64> = u0.iter().map(|x| sign * x).collect();
    let w1: Vec<f64> = u1.iter().map(|x| sign * x).collect();
    let (path, stages, stage_paths, plan) = continue_in_epsilon(&surface, &w0, &w1, options)?;
    let mut path = if sign > 0.0 { path } else { path.negated(cone) };
    // Boundary rows are reproduced bit-exactly.
    path.node_mut(0).copy_from_slice(u0);
    let last = path.intervals();
    path.node_mut(last).copy_from_slice(u1);
    let stage_paths = stage_paths
        .into_iter()
        .map(|p| if sign > 0.0 { p } else { p.negated(cone) })
        .collect();
    let final_stage = stages.last().expect("at least one stage").clone();
    let increments = stages.windows(2).map(|w| (w[1].length - w[0].length).abs()).collect();
    Ok(SolveReport {
        cone,
        intervals: options.intervals,
        epsilon_reached: final_stage.epsilon,
        residual: final_stage.residual,
        margin: final_stage.margin,
        length: final_stage.length,
        distance: extrapolate(&stages),
        length_increments: increments,
        a0: plan.a0,
        delta0: plan.delta0,
        stages,
        path,
        stage_paths,
    })
}

type Continuation = (TimePath, Vec<StageReport>, Vec<TimePath>, RegularizationPlan);

fn continue_in_epsilon(
    s: &DiscreteSurface,
    w0: &[f64],
    w1: &[f64],
    options: &SolverOptions,
) -> Result<Continuation> {
    let plan = build_plan(s, w0, w1, options.epsilon_min, options.intervals)?;
    let newton = NewtonOptions {
        residual_tol: options.residual_tol,
        max_iterations: options.max_newton_iterations,
        ..NewtonOptions::default()
    };
    let mut current = plan.comparison_path(w0, w1)?;
    let mut stages: Vec<StageReport> = Vec::with_capacity(plan.schedule.len());
    let mut stage_paths = Vec::new();
    for &epsilon in &plan.schedule {
        let forcing = plan.forcing(epsilon);
        match newton_solve(s, &forcing, &current, &newton) {
            Ok((solution, report)) => {
                let length = path::path_length(s, &solution)?;
                stages.push(StageReport {
                    epsilon,
                    newton_iterations: report.iterations,
                    residual: report.residual,
                    margin: report.margin.min(boundary_margin(s, w0, w1)?),
                    length,
                    krylov_iterations: report.krylov_iterations,
                    direct_solves: report.direct_solves,
                });
                if options.keep_stage_paths {
                    stage_paths.push(solution.clone());
                }
                current = solution;
            }
            Err(e) => {
                let last_good = stages.last().map(|stage| {
                    Box::new(SolveReport {
                        cone: Cone::Positive,
                        intervals: options.intervals,
                        epsilon_reached: stage.epsilon,
                        residual: stage.residual,
                        margin: stage.margin,
                        length: stage.length,
                        distance: extrapolate(&stages),
                        length_increments: Vec::new(),
                        a0: plan.a0,
                        delta0: plan.delta0,
                        stages: stages.clone(),
                        path: current.clone(),
                        stage_paths: Vec::new(),
                    })
                });
                return Err(Error::Continuation { epsilon, source: Box::new(e), last_good });
            }
        }
    }
    Ok((current, stages, stage_paths, plan))
}

fn boundary_margin(s: &DiscreteSurface, w0: &[f64], w1: &[f64]) -> Result<f64> {
    let a = conformal::curvature_density(s, w0)?;
    let b = conformal::curvature_density(s, w1)?;
    Ok(min_of(&a).min(min_of(&b)))
}

/// Outcome of a comparison between two solutions with ordered forcings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub holds: bool,
    /// `min (u_b - u_a)` over the space-time grid.
    pub min_gap: f64,
    pub tolerance: f64,
}

/// With `forcing_a ≤ forcing_b`, checks `u_a ≤ u_b + tolerance` pointwise.
/// From `u_tt κ + |∇0 u̇|² + f = 0` a larger `f` bends the path further down
/// in `t`, so the solution with the larger forcing sits above.
pub fn comparison_check(
    path_a: &TimePath,
    forcing_a: &[f64],
    path_b: &TimePath,
    forcing_b: &[f64],
    tolerance: f64,
) -> Result<ComparisonReport> {
    check_len(path_a.data().len(), path_b.data().len())?;
    check_forcing(path_a, forcing_a)?;
    check_forcing(path_b, forcing_b)?;
    if path_a.start() != path_b.start() || path_a.end() != path_b.end() {
        return Err(Error::BoundaryMismatch);
    }
    if forcing_a.iter().zip(forcing_b).any(|(a, b)| a > b) {
        return Err(Error::InvalidArgument("forcing of the first path must not exceed the second".into()));
    }
    let min_gap = path_a
        .data()
        .iter()
        .zip(path_b.data())
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport { holds: min_gap >= -tolerance, min_gap, tolerance })
}
