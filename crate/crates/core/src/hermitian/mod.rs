//! Small-dimension Hermitian linear algebra.
//!
//! A [`HermitianForm`] is the complex Hessian `u_{z z̄}` of a function on
//! `C^n` (or any other `(1,1)`-form value at a point), for `n ≤ 3`. Real
//! coordinates are interleaved: real index `2j` is `x_j` and `2j + 1` is
//! `y_j`, where `z_j = x_j + i y_j`.

mod bellman;
mod eigen;

pub use bellman::{bellman_min_trace, generate_direction_set, Control, DirectionSet, FrameFamily, LatticeDirection, WeightBounds};
pub use eigen::{eigen_decompose, Eigen};

use std::ops::{Add, Sub};

use num_complex::Complex64;

use crate::error::{CmaError, Result};

pub const MAX_DIM: usize = 3;

/// Hermitian symmetry tolerance on entries, absolute.
pub const HERMITIAN_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianForm {
    n: usize,
    entries: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl HermitianForm {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "complex dimension {n} unsupported");
        HermitianForm { n, entries: [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut h = Self::zeros(diag.len());
        for (j, &d) in diag.iter().enumerate() {
            h.entries[j][j] = Complex64::new(d, 0.0);
        }
        h
    }

    /// Builds a form from `n*n` row-major entries, checking Hermitian symmetry.
    pub fn from_rows(n: usize, rows: &[Complex64]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(CmaError::validation(format!("complex dimension {n} unsupported (1..=3)")));
        }
        if rows.len() != n * n {
            return Err(CmaError::validation(format!("expected {} entries, got {}", n * n, rows.len())));
        }
        let mut h = Self::zeros(n);
        for j in 0..n {
            for k in 0..n {
                let v = rows[j * n + k];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(CmaError::validation("non-finite Hermitian entry"));
                }
                h.entries[j][k] = v;
            }
        }
        for j in 0..n {
            for k in j..n {
                let gap = (h.entries[j][k] - h.entries[k][j].conj()).norm();
                if gap > HERMITIAN_TOL {
                    return Err(CmaError::validation(format!(
                        "entries ({j},{k}) and ({k},{j}) are not conjugate (gap {gap:.3e})"
                    )));
                }
            }
        }
        // Symmetrize exactly so downstream code can rely on it.
        for j in 0..n {
            h.entries[j][j].im = 0.0;
            for k in (j + 1)..n {
                h.entries[k][j] = h.entries[j][k].conj();
            }
        }
        Ok(h)
    }

    /// Rank-one form `v v*`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut h = Self::zeros(n);
        for j in 0..n {
            for k in 0..n {
                h.entries[j][k] = v[j] * v[k].conj();
            }
            h.entries[j][j].im = 0.0;
        }
        h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        assert!(j < self.n && k < self.n);
        self.entries[j][k]
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut().take(self.n) {
            for e in row.iter_mut().take(self.n) {
                *e *= t;
            }
        }
        out
    }

    /// `v* H v`, which is real for Hermitian `H`.
    pub fn quadratic(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.n);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.n {
            for k in 0..self.n {
                acc += v[j].conj() * self.entries[j][k] * v[k];
            }
        }
        acc.re
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.entries[j][j].re).sum()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|k| self.entries[j][k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                s += self.entries[j][k].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        let mut m: f64 = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                m = m.max((self.entries[j][k] - other.entries[j][k]).norm());
            }
        }
        m
    }

    pub(crate) fn entries(&self) -> &[[Complex64; MAX_DIM]; MAX_DIM] {
        &self.entries
    }
}

impl Add for HermitianForm {
    type Output = HermitianForm;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n);
        for j in 0..self.n {
            for k in 0..self.n {
                self.entries[j][k] += rhs.entries[j][k];
            }
        }
        self
    }
}

impl Sub for HermitianForm {
    type Output = HermitianForm;
    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n);
        for j in 0..self.n {
            for k in 0..self.n {
                self.entries[j][k] -= rhs.entries[j][k];
            }
        }
        self
    }
}

/// Hermitian `(1,1)`-part of a real symmetric `2n × 2n` quadratic form.
///
/// `q` is row-major in interleaved real coordinates. The result is
/// `H[j][k] = (Q_{x_j x_k} + Q_{y_j y_k})/4 + i (Q_{x_j y_k} − Q_{y_j x_k})/4`,
/// i.e. `v* H v = (Q(v,v) + Q(iv,iv))/4`.
pub fn hermitian_part(q: &[f64], n: usize) -> Result<HermitianForm> {
    if !(1..=MAX_DIM).contains(&n) {
        return Err(CmaError::validation(format!("complex dimension {n} unsupported (1..=3)")));
    }
    let m = 2 * n;
    if q.len() != m * m {
        return Err(CmaError::validation(format!("expected a {m}x{m} matrix, got {} entries", q.len())));
    }
    let scale = q.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for a in 0..m {
        for b in (a + 1)..m {
            if (q[a * m + b] - q[b * m + a]).abs() > 1e-12 * scale {
                return Err(CmaError::validation(format!("real quadratic form is not symmetric at ({a},{b})")));
            }
        }
    }
    let at = |a: usize, b: usize| q[a * m + b];
    let mut h = HermitianForm::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let re = 0.25 * (at(xj, xk) + at(yj, yk));
            let im = 0.25 * (at(xj, yk) - at(yj, xk));
            h.entries[j][k] = Complex64::new(re, im);
        }
    }
    for j in 0..n {
        h.entries[j][j].im = 0.0;
        for k in (j + 1)..n {
            let avg = 0.5 * (h.entries[j][k] + h.entries[k][j].conj());
            h.entries[j][k] = avg;
            h.entries[k][j] = avg.conj();
        }
    }
    Ok(h)
}

/// Semipositivity tolerance used by [`det_plus`].
pub fn psd_tol(h: &HermitianForm) -> f64 {
    1e-10 * (1.0 + h.norm_inf())
}

/// `det(H)` when `H ≥ 0` (up to [`psd_tol`]), and `0` otherwise.
pub fn det_plus(h: &HermitianForm) -> f64 {
    let eig = eigen_decompose(h);
    let values = eig.values();
    if values[0] < -psd_tol(h) {
        return 0.0;
    }
    values.iter().map(|&l| l.max(0.0)).product()
}
