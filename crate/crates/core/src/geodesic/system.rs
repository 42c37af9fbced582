//! Residual and Jacobian of the regularized geodesic equation on the
//! space-time grid. Unknowns are the interior nodes, row `(k-1)·V + i`.

use super::linear::CsrMatrix;
use crate::surface::DiscreteSurface;

/// Per-node quantities of a path at the interior nodes, flat `(N-1)·V`.
pub(crate) struct Evaluation {
    pub residual: Vec<f64>,
    pub density: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

/// `G_k = u_tt κ_k + |∇0 u̇_k|² + f_k` for a full path `data` of `N+1` nodes.
pub(crate) fn evaluate(s: &DiscreteSurface, intervals: usize, data: &[f64], forcing: &[f64]) -> Evaluation {
    let v = s.vertex_count();
    let m = (intervals - 1) * v;
    let n = intervals as f64;
    let mut eval = Evaluation {
        residual: vec![0.0; m],
        density: vec![0.0; m],
        velocity: vec![0.0; m],
        acceleration: vec![0.0; m],
    };
    let mut lap = vec![0.0; v];
    let mut grad = vec![0.0; v];
    for k in 1..intervals {
        let (prev, cur, next) =
            (&data[(k - 1) * v..k * v], &data[k * v..(k + 1) * v], &data[(k + 1) * v..(k + 2) * v]);
        let row = (k - 1) * v..k * v;
        s.laplacian_into(cur, &mut lap);
        let udot = &mut eval.velocity[row.clone()];
        for i in 0..v {
            udot[i] = (next[i] - prev[i]) * (0.5 * n);
        }
        s.gradient_inner_into(udot, udot, &mut grad);
        let k0 = s.background_curvature();
        for (j, i) in row.enumerate() {
            let kappa = k0[j] - lap[j];
            let utt = (prev[j] - 2.0 * cur[j] + next[j]) * (n * n);
            eval.density[i] = kappa;
            eval.acceleration[i] = utt;
            eval.residual[i] = utt * kappa + grad[j] + forcing[i];
        }
    }
    eval
}

struct MixedTerm {
    /// Local star indices of the edge endpoints.
    lp: usize,
    lq: usize,
    p: usize,
    q: usize,
    /// `cot_c / (3 a_i)`.
    weight: f64,
}

/// Fixed sparsity pattern of the Jacobian and the per-vertex stencils used to
/// fill it.
pub(crate) struct JacobianPattern {
    intervals: usize,
    vertex_count: usize,
    /// Index of `i` inside its sorted star `{i} ∪ neighbours(i)`, and the
    /// weights `w_ij` in star order.
    self_index: Vec<usize>,
    star_weights: Vec<Vec<f64>>,
    mixed: Vec<Vec<MixedTerm>>,
    matrix: CsrMatrix,
    /// For each row, the position in `vals` of the first entry of each time block
    /// (`None` where the block falls on a boundary node).
    block_start: Vec<[Option<usize>; 3]>,
}

impl JacobianPattern {
    pub fn new(s: &DiscreteSurface, intervals: usize) -> Self {
        let v = s.vertex_count();
        let stiffness = s.stiffness();
        let mut stars = Vec::with_capacity(v);
        let mut self_index = Vec::with_capacity(v);
        let mut star_weights = Vec::with_capacity(v);
        for i in 0..v {
            let mut star: Vec<usize> = stiffness.neighbours(i).to_vec();
            star.push(i);
            star.sort_unstable();
            let weights = star.iter().map(|&j| if j == i { 0.0 } else { stiffness.weight(i, j) }).collect();
            self_index.push(star.binary_search(&i).unwrap());
            star_weights.push(weights);
            stars.push(star);
        }
        let mut mixed: Vec<Vec<MixedTerm>> = (0..v).map(|_| Vec::new()).collect();
        for (f, t) in s.triangles().iter().enumerate() {
            let cots = s.face_cotangents()[f];
            for &i in t {
                let star = &stars[i];
                for c in 0..3 {
                    let (p, q) = (t[(c + 1) % 3], t[(c + 2) % 3]);
                    mixed[i].push(MixedTerm {
                        lp: star.binary_search(&p).unwrap(),
                        lq: star.binary_search(&q).unwrap(),
                        p,
                        q,
                        weight: cots[c] / (3.0 * s.area_masses()[i]),
                    });
                }
            }
        }
        let m = (intervals - 1) * v;
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut block_start = Vec::with_capacity(m);
        for k in 1..intervals {
            for star in &stars {
                let mut starts = [None; 3];
                for (b, kk) in [k - 1, k, k + 1].into_iter().enumerate() {
                    if kk == 0 || kk == intervals {
                        continue;
                    }
                    starts[b] = Some(cols.len());
                    cols.extend(star.iter().map(|&p| (kk - 1) * v + p));
                }
                block_start.push(starts);
                row_ptr.push(cols.len());
            }
        }
        let vals = vec![0.0; cols.len()];
        Self {
            intervals,
            vertex_count: v,
            self_index,
            star_weights,
            mixed,
            matrix: CsrMatrix { n: m, row_ptr, cols, vals },
            block_start,
        }
    }

    /// Fills `L φ = φ_tt κ - u_tt Δ0 φ + 2 ⟨∇0 u̇, ∇0 φ̇⟩` at the current state.
    pub fn assemble(&mut self, s: &DiscreteSurface, eval: &Evaluation) -> &CsrMatrix {
        let v = self.vertex_count;
        let n = self.intervals as f64;
        let (inv_h2, inv_2h) = (n * n, 0.5 * n);
        let masses = s.area_masses();
        let vals = &mut self.matrix.vals;
        vals.fill(0.0);
        for k in 1..self.intervals {
            let udot = &eval.velocity[(k - 1) * v..k * v];
            for i in 0..v {
                let r = (k - 1) * v + i;
                let [prev, cur, next] = self.block_start[r];
                let kappa = eval.density[r];
                let utt = eval.acceleration[r];
                let cur = cur.expect("interior row has a diagonal block");
                let own = self.self_index[i];
                // -u_tt Δ0 φ = -(u_tt / a_i) Σ_j w_ij (φ_j - φ_i)
                let c = -utt / masses[i];
                let mut row_sum = 0.0;
                for (l, w) in self.star_weights[i].iter().enumerate() {
                    vals[cur + l] += c * w;
                    row_sum += w;
                }
                vals[cur + own] += -c * row_sum - 2.0 * kappa * inv_h2;
                if let Some(p) = prev {
                    vals[p + own] += kappa * inv_h2;
                }
                if let Some(p) = next {
                    vals[p + own] += kappa * inv_h2;
                }
                for term in &self.mixed[i] {
                    let coef = term.weight * (udot[term.p] - udot[term.q]) * inv_2h;
                    if let Some(p) = next {
                        vals[p + term.lp] += coef;
                        vals[p + term.lq] -= coef;
                    }
                    if let Some(p) = prev {
                        vals[p + term.lp] -= coef;
                        vals[p + term.lq] += coef;
                    }
                }
            }
        }
        &self.matrix
    }
}
