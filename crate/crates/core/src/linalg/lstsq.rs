//! Least squares `argmin_X ‖Φ X − Y‖_F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::svd::{svd, DEFAULT_RANK_TOLERANCE};
use crate::linalg::Matrix;

/// How to solve the least-squares problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum LstsqMethod {
    /// Minimum-norm solution `Φ⁺ Y`.
    ClosedForm,
    /// Conjugate gradient on the normal equations `ΦᵀΦ X = ΦᵀY`, one column at a time.
    /// `tol` bounds the relative normal-equation residual; `max_iter` defaults to `10·p`.
    ConjugateGradient { tol: f64, max_iter: Option<usize> },
}

impl LstsqMethod {
    pub const DEFAULT_CG_TOL: f64 = 1e-10;

    pub fn conjugate_gradient() -> Self {
        LstsqMethod::ConjugateGradient {
            tol: Self::DEFAULT_CG_TOL,
            max_iter: None,
        }
    }
}

impl Default for LstsqMethod {
    fn default() -> Self {
        LstsqMethod::ClosedForm
    }
}

/// Solution plus solver diagnostics.
#[derive(Clone, Debug)]
pub struct LstsqSolution {
    pub x: Matrix,
    pub converged: bool,
    /// Largest per-column iteration count (0 for the closed form).
    pub iterations: usize,
    /// Worst relative normal-equation residual across columns.
    pub residual: f64,
}

pub fn lstsq(phi: &Matrix, y: &Matrix, method: LstsqMethod) -> Result<LstsqSolution> {
    if phi.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "Φ has {} rows but Y has {}",
            phi.rows(),
            y.rows()
        )));
    }
    match method {
        LstsqMethod::ClosedForm => closed_form(phi, y),
        LstsqMethod::ConjugateGradient { tol, max_iter } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument(format!("CG tolerance must be positive, got {tol}")));
            }
            Ok(conjugate_gradient(phi, y, tol, max_iter.unwrap_or(10 * phi.cols())))
        }
    }
}

fn closed_form(phi: &Matrix, y: &Matrix) -> Result<LstsqSolution> {
    let dec = svd(phi, DEFAULT_RANK_TOLERANCE)?;
    let r = dec.rank();
    let x = if r == 0 {
        Matrix::zeros(phi.cols(), y.cols())
    } else {
        // V · diag(1/σ) · (Uᵀ Y); Uᵀ Y first keeps the cost at O(ℓ r q).
        let inv: Vec<f64> = dec.singular_values.iter().map(|s| 1.0 / s).collect();
        let mut uty = dec.u.t_matmul(y)?;
        for (i, row) in uty.as_mut_slice().chunks_mut(y.cols()).enumerate() {
            row.iter_mut().for_each(|v| *v *= inv[i]);
        }
        dec.v.matmul(&uty)?
    };
    Ok(LstsqSolution {
        x,
        converged: true,
        iterations: 0,
        residual: 0.0,
    })
}

fn conjugate_gradient(phi: &Matrix, y: &Matrix, tol: f64, max_iter: usize) -> LstsqSolution {
    let p = phi.cols();
    let q = y.cols();
    let gram = phi.t_matmul(phi).expect("shapes checked");
    let rhs = phi.t_matmul(y).expect("shapes checked");

    let mut x = Matrix::zeros(p, q);
    let mut converged = true;
    let mut iterations = 0;
    let mut worst = 0.0_f64;

    let mut b = vec![0.0; p];
    for j in 0..q {
        for i in 0..p {
            b[i] = rhs[(i, j)];
        }
        let (col, iters, rel, ok) = cg_column(&gram, &b, tol, max_iter);
        for i in 0..p {
            x[(i, j)] = col[i];
        }
        converged &= ok;
        iterations = iterations.max(iters);
        worst = worst.max(rel);
    }
    LstsqSolution {
        x,
        converged,
        iterations,
        residual: worst,
    }
}

fn mat_vec(a: &Matrix, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = a.row(i).iter().zip(v).map(|(x, y)| x * y).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CG from x₀ = 0, so iterates stay in range(G) and converge to the minimum-norm solution.
/// Returns the iterate with the smallest residual seen.
fn cg_column(g: &Matrix, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize, f64, bool) {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (x, 0, 0.0, true);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut gp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut best = (x.clone(), 1.0);

    for it in 1..=max_iter {
        mat_vec(g, &p, &mut gp);
        let curvature = dot(&p, &gp);
        if curvature <= 0.0 {
            break;
        }
        let alpha = rr / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * gp[i];
        }
        let rr_next = dot(&r, &r);
        let rel = rr_next.sqrt() / b_norm;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel <= tol {
            return (x, it, rel, true);
        }
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + (rr_next / rr) * *pi);
        rr = rr_next;
    }
    let (xb, rel) = best;
    (xb, max_iter, rel, rel <= tol)
}
