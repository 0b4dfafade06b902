use num_complex::Complex64;

use super::{HermitianForm, MAX_DIM};

const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Clone, Copy, Debug)]
pub struct Eigen {
    n: usize,
    values: [f64; MAX_DIM],
    vectors: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl Eigen {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.n]
    }

    /// `k`-th eigenvector (unit norm), paired with `values()[k]`.
    pub fn vector(&self, k: usize) -> &[Complex64] {
        &self.vectors[k][..self.n]
    }

    /// `Σ λ_k v_k v_k*`.
    pub fn reconstruct(&self) -> HermitianForm {
        let mut h = HermitianForm::zeros(self.n);
        for k in 0..self.n {
            h = h + HermitianForm::outer(self.vector(k)).scaled(self.values[k]);
        }
        h
    }
}

/// Eigen-decomposition: closed form for `n ≤ 2`, cyclic Jacobi for `n = 3`.
pub fn eigen_decompose(h: &HermitianForm) -> Eigen {
    let n = h.n();
    let e = h.entries();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut out = Eigen { n, values: [0.0; MAX_DIM], vectors: [[zero; MAX_DIM]; MAX_DIM] };
    match n {
        1 => {
            out.values[0] = e[0][0].re;
            out.vectors[0][0] = one;
        }
        2 => {
            let (l1, l2, u1, u2) = eig2(e[0][0].re, e[0][1], e[1][1].re);
            out.values[0] = l1;
            out.values[1] = l2;
            out.vectors[0][..2].copy_from_slice(&u1);
            out.vectors[1][..2].copy_from_slice(&u2);
        }
        _ => jacobi3(h, &mut out),
    }
    out
}

/// Closed-form eigenpairs of `[[a, b], [conj(b), d]]`, ascending.
fn eig2(a: f64, b: Complex64, d: f64) -> (f64, f64, [Complex64; 2], [Complex64; 2]) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mean = 0.5 * (a + d);
    let t = 0.5 * (d - a);
    let bn = b.norm();
    let r = t.hypot(bn);
    let (lo, hi) = (mean - r, mean + r);
    if bn == 0.0 {
        return if a <= d { (a, d, [one, zero], [zero, one]) } else { (d, a, [zero, one], [one, zero]) };
    }
    // Eigenvector (b, λ - a) is computed on the side without cancellation and
    // its partner is the orthogonal complement.
    if t >= 0.0 {
        let c = t + r;
        let s = (bn * bn + c * c).sqrt();
        let u_hi = [b / s, Complex64::new(c / s, 0.0)];
        let u_lo = [Complex64::new(-c / s, 0.0), b.conj() / s];
        (lo, hi, u_lo, u_hi)
    } else {
        let c = t - r;
        let s = (bn * bn + c * c).sqrt();
        let u_lo = [b / s, Complex64::new(c / s, 0.0)];
        let u_hi = [Complex64::new(-c / s, 0.0), b.conj() / s];
        (lo, hi, u_lo, u_hi)
    }
}

fn jacobi3(h: &HermitianForm, out: &mut Eigen) {
    const N: usize = 3;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = [[zero; N]; N];
    for j in 0..N {
        for k in 0..N {
            a[j][k] = h.entries()[j][k];
        }
    }
    let mut v = [[zero; N]; N];
    for (j, row) in v.iter_mut().enumerate() {
        row[j] = Complex64::new(1.0, 0.0);
    }
    let scale = h.frobenius();
    let off = |a: &[[Complex64; N]; N]| -> f64 {
        let mut s = 0.0;
        for j in 0..N {
            for k in 0..N {
                if j != k {
                    s += a[j][k].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..MAX_SWEEPS {
        if off(&a) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q].norm() == 0.0 {
                    continue;
                }
                let (_, _, u1, u2) = eig2(a[p][p].re, a[p][q], a[q][q].re);
                // G has columns u1, u2 embedded at rows/cols p, q.
                let g = [[u1[0], u2[0]], [u1[1], u2[1]]];
                // A <- A G (columns p, q)
                for row in a.iter_mut() {
                    let (ap, aq) = (row[p], row[q]);
                    row[p] = ap * g[0][0] + aq * g[1][0];
                    row[q] = ap * g[0][1] + aq * g[1][1];
                }
                // A <- G* A (rows p, q)
                for col in 0..N {
                    let (ap, aq) = (a[p][col], a[q][col]);
                    a[p][col] = g[0][0].conj() * ap + g[1][0].conj() * aq;
                    a[q][col] = g[0][1].conj() * ap + g[1][1].conj() * aq;
                }
                a[p][q] = zero;
                a[q][p] = zero;
                a[p][p].im = 0.0;
                a[q][q].im = 0.0;
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = vp * g[0][0] + vq * g[1][0];
                    row[q] = vp * g[0][1] + vq * g[1][1];
                }
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    for (slot, &k) in order.iter().enumerate() {
        out.values[slot] = a[k][k].re;
        for j in 0..N {
            out.vectors[slot][j] = v[j][k];
        }
    }
}
