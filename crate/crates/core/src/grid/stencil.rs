use num_complex::Complex64;

use super::GridFunction;
use crate::error::{CmaError, Result};
use crate::hermitian::{hermitian_part, HermitianForm, LatticeDirection};

/// Recovers the lattice step behind a complex unit direction.
///
/// Accepts directions proportional to a Gaussian-integer vector with
/// components in `{0, ±1, ±i, ±1±i}`; anything else cannot be sampled on
/// the lattice.
pub fn lattice_direction(v: &[Complex64]) -> Result<LatticeDirection> {
    let scale = v.iter().flat_map(|z| [z.re.abs(), z.im.abs()]).filter(|&a| a > 1e-12).fold(f64::INFINITY, f64::min);
    if !scale.is_finite() {
        return Err(CmaError::validation("zero direction"));
    }
    let mut coeffs = Vec::with_capacity(v.len());
    for z in v {
        let (a, b) = (z.re / scale, z.im / scale);
        let (ra, rb) = (a.round(), b.round());
        if (a - ra).abs() > 1e-9 || (b - rb).abs() > 1e-9 || ra.abs() > 1.0 || rb.abs() > 1.0 {
            return Err(CmaError::validation(format!("direction component {z} is not lattice-representable")));
        }
        coeffs.push((ra as i8, rb as i8));
    }
    LatticeDirection::new(&coeffs)
}

/// Monotone complex second difference along `v` at lattice point `x`:
/// `[u(x+w) + u(x−w) + u(x+iw) + u(x−iw) − 4u(x)] / (4h²|w|²)` with `w`
/// the integer step of `v`. Consistent with `v* u_{z z̄} v` to second order.
pub fn directional_second_difference(u: &GridFunction, x: usize, v: &LatticeDirection) -> Result<f64> {
    let d = u.domain();
    if v.n() != d.n() {
        return Err(CmaError::validation("direction dimension does not match the domain"));
    }
    let step = v.real_step();
    let rot = v.rotated_step();
    let neg = |s: &[i32]| s.iter().map(|c| -c).collect::<Vec<_>>();
    let mut sum = 0.0;
    for s in [step.clone(), neg(&step), rot.clone(), neg(&rot)] {
        let y = d.offset(x, &s).ok_or(CmaError::Boundary { point: x })?;
        sum += u.get(y);
    }
    let h = d.h();
    Ok((sum - 4.0 * u.get(x)) / (4.0 * h * h * v.norm_sq() as f64))
}

/// Central-difference complex Hessian at `x`. Exact on quadratics, not
/// monotone; used for diagnostics.
pub fn discrete_complex_hessian(u: &GridFunction, x: usize) -> Result<HermitianForm> {
    let d = u.domain();
    let m = 2 * d.n();
    let h = d.h();
    let at = |step: &[i32]| -> Result<f64> { d.offset(x, step).map(|y| u.get(y)).ok_or(CmaError::Boundary { point: x }) };
    let mut q = vec![0.0; m * m];
    let mut step = vec![0i32; m];
    for a in 0..m {
        step.iter_mut().for_each(|s| *s = 0);
        step[a] = 1;
        let plus = at(&step)?;
        step[a] = -1;
        let minus = at(&step)?;
        q[a * m + a] = (plus - 2.0 * u.get(x) + minus) / (h * h);
        for b in (a + 1)..m {
            let mut vals = [0.0; 4];
            for (slot, (sa, sb)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                step.iter_mut().for_each(|s| *s = 0);
                step[a] = sa;
                step[b] = sb;
                vals[slot] = at(&step)?;
            }
            let mixed = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h * h);
            q[a * m + b] = mixed;
            q[b * m + a] = mixed;
        }
    }
    hermitian_part(&q, d.n())
}
