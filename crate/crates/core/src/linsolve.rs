//! Conjugate gradients with optional Jacobi preconditioning, and a dense Cholesky
//! factorisation used as a reference on small systems.

use crate::fem::SparseSymMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: f64,
    /// Iteration cap; `None` means `20 sqrt(n)` (at least 200).
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    /// Record the quadratic energy `x^T A x / 2 - b^T x` after every iteration.
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
            record_history: false,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn cap(&self, n: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| ((20.0 * (n as f64).sqrt()) as usize).max(200))
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Energy `x^T A x / 2 - b^T x` per iterate, starting with the initial guess.
    pub energy_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` from a zero initial guess.
pub fn cg_solve(a: &SparseSymMatrix, b: &[f64], opts: &SolveOptions) -> Result<CgOutcome> {
    cg_solve_from(a, b, None, opts)
}

/// Solves `A x = b` from the initial guess `x0`.
pub fn cg_solve_from(
    a: &SparseSymMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<CgOutcome> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::InvalidInput(format!(
            "rhs length {} does not match matrix size {n}",
            b.len()
        )));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            energy_history: vec![0.0],
        });
    }
    let inv_diag: Vec<f64> = match opts.preconditioner {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Jacobi => {
            let d = a.diagonal();
            if let Some((i, &v)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
                return Err(Error::NotPositiveDefinite { row: i, pivot: v });
            }
            d.iter().map(|v| 1.0 / v).collect()
        }
    };
    let mut r = a.matvec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let energy = |x: &[f64], r: &[f64]| -0.5 * (dot(x, b) + dot(x, r));
    let mut history = Vec::new();
    if opts.record_history {
        history.push(energy(&x, &r));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = opts.cap(n);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > opts.tol {
        if it >= cap || !res.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite {
                row: it,
                pivot: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        res = dot(&r, &r).sqrt() / bnorm;
        if opts.record_history {
            history.push(energy(&x, &r));
        }
    }
    Ok(CgOutcome {
        x,
        iterations: it,
        relative_residual: res,
        energy_history: history,
    })
}

/// Dense Cholesky solve. Intended for `n` up to a few thousand.
pub fn direct_solve(a: &SparseSymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::InvalidInput(format!(
            "rhs length {} does not match matrix size {n}",
            b.len()
        )));
    }
    let mut l = a.to_dense();
    for j in 0..n {
        let mut d = l[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            let mut s = l[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k][i] * y[k];
        }
        y[i] /= l[i][i];
    }
    Ok(y)
}
