//! Sparse row storage and a preconditioned BiCGSTAB for the frozen-policy
//! linear systems. Reductions run sequentially so results do not depend on
//! the worker count.

use rayon::prelude::*;

use crate::error::{CmaError, Result};

#[derive(Clone, Debug, Default)]
pub(crate) struct Csr {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
    pub diag: Vec<f64>,
}

impl Csr {
    pub fn with_capacity(rows: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        Csr { row_ptr, cols: Vec::with_capacity(nnz), vals: Vec::with_capacity(nnz), diag: Vec::with_capacity(rows) }
    }

    pub fn rows(&self) -> usize {
        self.diag.len()
    }

    pub fn push_row(&mut self, diag: f64, off: impl IntoIterator<Item = (u32, f64)>) {
        for (c, v) in off {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.diag.push(diag);
        self.row_ptr.push(self.cols.len());
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            let mut acc = self.diag[i] * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        });
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` to relative residual `rtol`, starting from `x = 0`.
///
/// When the iteration stalls the best iterate is returned together with its
/// relative residual, so inexact Newton callers can still use it; only a
/// step that fails to halve the residual is an error.
pub(crate) fn bicgstab(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let n = a.rows();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, 0.0));
    }
    if a.diag.iter().any(|&d| d == 0.0 || !d.is_finite()) {
        return Err(CmaError::LinearSolver("zero or non-finite diagonal".into()));
    }
    let inv_diag: Vec<f64> = a.diag.iter().map(|d| 1.0 / d).collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().zip(v).zip(&inv_diag).for_each(|((o, vi), di)| *o = vi * di);
    };
    let target = rtol * bnorm;
    let mut r = b.to_vec();
    let mut best = (bnorm, x.clone());
    let mut restarts = 0;
    'outer: loop {
        if restarts > 0 {
            a.matvec(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        for it in 0..max_iter {
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < 1e-300 || omega == 0.0 {
                // Breakdown: restart from the current iterate.
                restarts += 1;
                if restarts > 20 {
                    break 'outer;
                }
                continue 'outer;
            }
            let beta = if it == 0 { 0.0 } else { (rho_new / rho) * (alpha / omega) };
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            precond(&p, &mut y);
            a.matvec(&y, &mut v);
            let denom = dot(&r_hat, &v);
            if denom == 0.0 {
                restarts += 1;
                if restarts > 20 {
                    break 'outer;
                }
                continue 'outer;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) <= target {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                return Ok((x, norm(&s) / bnorm));
            }
            precond(&s, &mut z);
            a.matvec(&z, &mut t);
            let tt = dot(&t, &t);
            omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            let rn = norm(&r);
            if rn < best.0 {
                best = (rn, x.clone());
            }
            if rn <= target {
                return Ok((x, rn / bnorm));
            }
            if !rn.is_finite() {
                break 'outer;
            }
        }
        break;
    }
    // Recompute the true residual of the best iterate.
    let mut ax = vec![0.0; n];
    a.matvec(&best.1, &mut ax);
    let true_res = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    let rel = true_res / bnorm;
    if rel <= 0.5 {
        Ok((best.1, rel))
    } else {
        Err(CmaError::LinearSolver(format!("BiCGSTAB stalled at relative residual {rel:.3e}")))
    }
}
