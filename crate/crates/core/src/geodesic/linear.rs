//! Sparse linear algebra for the space-time Newton systems.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};

use crate::error::{Error, Result};
use crate::surface::DiscreteSurface;

/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone)]
pub(crate) struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *out = acc;
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut triplets = Vec::with_capacity(self.vals.len());
        for r in 0..self.n {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push(Triplet::new(r, self.cols[p], self.vals[p]));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::LinearSolve(format!("sparse assembly: {e:?}")))
    }
}

/// Direct sparse LU solve of `A x = b`.
pub(crate) fn lu_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let m = a.to_faer()?;
    let symbolic =
        SymbolicLu::try_new(m.symbolic()).map_err(|e| Error::LinearSolve(format!("symbolic LU: {e:?}")))?;
    let lu = Lu::try_new_with_symbolic(symbolic, m.as_ref())
        .map_err(|e| Error::LinearSolve(format!("numeric LU: {e:?}")))?;
    let mut x = b.to_vec();
    lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, a.n, 1));
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::LinearSolve("LU produced non-finite values".into()))
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GmresOutcome {
    pub iterations: usize,
    pub converged: bool,
}

/// Restarted GMRES with right preconditioning, starting from `x`.
///
/// Convergence is judged on the true residual `‖b - A x‖ / ‖b‖`, recomputed at
/// every restart.
pub(crate) fn gmres(
    apply: &dyn Fn(&[f64], &mut [f64]),
    precondition: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return GmresOutcome { iterations: 0, converged: true };
    }
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut h = vec![vec![0.0; restart]; restart + 1];
    let mut cs = vec![0.0; restart];
    let mut sn = vec![0.0; restart];
    let mut g = vec![0.0; restart + 1];
    let mut iterations = 0;
    loop {
        apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        let rel = beta / b_norm;
        if rel <= tol || iterations >= max_iterations || !rel.is_finite() {
            return GmresOutcome { iterations, converged: rel <= tol };
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(0.0);
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            precondition(&basis[j], &mut z);
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm2(&w);
            h[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            iterations += 1;
            // Stop a little past the target so roundoff in the recurrence
            // does not leave the true residual just above it.
            if g[j + 1].abs() <= 0.1 * tol * b_norm || iterations >= max_iterations || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vk) in update.iter_mut().zip(v) {
                *u += yi * vk;
            }
        }
        precondition(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

/// Approximate inverse of `∂_tt + diag(s) Δ0` on interior time nodes with
/// Dirichlet ends, diagonalized in time by the discrete sine transform.
pub(crate) struct TimeDiagonalPreconditioner {
    intervals: usize,
    vertex_count: usize,
    /// Orthogonal symmetric sine basis, `(N-1) × (N-1)` row-major.
    basis: Vec<f64>,
    /// `a_i / s_i`.
    mass_over_speed: Vec<f64>,
    factors: Vec<Llt<usize, f64>>,
}

impl TimeDiagonalPreconditioner {
    /// `speed[i] > 0` is the spatial coefficient in front of `Δ0`.
    pub fn new(s: &DiscreteSurface, intervals: usize, speed: &[f64]) -> Result<Self> {
        let m = intervals - 1;
        let v = s.vertex_count();
        let scale = (2.0 / intervals as f64).sqrt();
        let mut basis = vec![0.0; m * m];
        for j in 0..m {
            for k in 0..m {
                basis[j * m + k] =
                    scale * (PI * ((j + 1) * (k + 1)) as f64 / intervals as f64).sin();
            }
        }
        let mass_over_speed: Vec<f64> =
            s.area_masses().iter().zip(speed).map(|(a, sp)| a / sp).collect();

        let stiffness = s.stiffness();
        let lower_pattern = |diag_shift: &dyn Fn(usize) -> f64| {
            let mut t = Vec::with_capacity(v + stiffness.nnz() / 2);
            for i in 0..v {
                let mut diag = diag_shift(i);
                for (j, w) in stiffness.row(i) {
                    diag += w;
                    if j > i {
                        t.push(Triplet::new(j, i, -w));
                    }
                }
                t.push(Triplet::new(i, i, diag));
            }
            t
        };
        let first = SparseColMat::<usize, f64>::try_new_from_triplets(v, v, &lower_pattern(&|_| 1.0))
            .map_err(|e| Error::LinearSolve(format!("preconditioner assembly: {e:?}")))?;
        let symbolic = SymbolicLlt::try_new(first.symbolic(), Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("symbolic Cholesky: {e:?}")))?;
        let h2 = (intervals * intervals) as f64;
        let mut factors = Vec::with_capacity(m);
        for j in 1..=m {
            let s2 = (PI * j as f64 / (2.0 * intervals as f64)).sin().powi(2);
            let shift = 4.0 * h2 * s2;
            let trip = lower_pattern(&|i| shift * mass_over_speed[i]);
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(v, v, &trip)
                .map_err(|e| Error::LinearSolve(format!("preconditioner assembly: {e:?}")))?;
            let llt = Llt::try_new_with_symbolic(symbolic.clone(), mat.as_ref(), Side::Lower)
                .map_err(|e| Error::LinearSolve(format!("Cholesky: {e:?}")))?;
            factors.push(llt);
        }
        Ok(Self { intervals, vertex_count: v, basis, mass_over_speed, factors })
    }

    fn transform(&self, x: &[f64], out: &mut [f64]) {
        let m = self.intervals - 1;
        let v = self.vertex_count;
        out.fill(0.0);
        for j in 0..m {
            let row = &mut out[j * v..(j + 1) * v];
            for k in 0..m {
                let q = self.basis[j * m + k];
                for (o, xi) in row.iter_mut().zip(&x[k * v..(k + 1) * v]) {
                    *o += q * xi;
                }
            }
        }
    }

    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        let v = self.vertex_count;
        let mut modes = vec![0.0; r.len()];
        self.transform(r, &mut modes);
        for (j, factor) in self.factors.iter().enumerate() {
            let block = &mut modes[j * v..(j + 1) * v];
            for (b, d) in block.iter_mut().zip(&self.mass_over_speed) {
                *b *= -d;
            }
            factor.solve_in_place(MatMut::from_column_major_slice_mut(block, v, 1));
        }
        self.transform(&modes, out);
    }
}
