//! Shared iteration engine over an arbitrary set of unknown lattice points;
//! every other point keeps its value and acts as boundary data.

use std::time::Instant;

use rayon::prelude::*;

use super::{SolverReport, Termination};
use crate::error::Result;
use crate::linalg::{bicgstab, Csr};
use crate::operator::{EquationData, Scheme};

const NONE: u32 = u32::MAX;
const OBSTACLE_ROW: u32 = u32::MAX;

pub(crate) enum Target<'a> {
    /// `root(u) = (e^{εu} f)^{1/n}`.
    Equation(&'a EquationData),
    /// `min(w (h − u), root(u) + floor) = 0`: the largest `u ≤ h` with
    /// `root(u) ≥ −floor`.
    Obstacle { obstacle: &'a [f64], floor: f64, weight: f64 },
}

pub(crate) struct Engine<'a> {
    scheme: &'a Scheme,
    unknowns: Vec<usize>,
    local: Vec<u32>,
    target: Target<'a>,
    froot: Vec<f64>,
    eps_over_n: f64,
    epsilon: f64,
}

struct Eval {
    /// Root-form residual `R` per unknown.
    g: Vec<f64>,
    policy: Vec<u32>,
    /// `∂/∂u(x)` of the source term per unknown.
    dsource: Vec<f64>,
    sup: f64,
    l1: f64,
    root_sup: f64,
}

impl Eval {
    /// Convergence needs both residuals: `F₊` alone cannot see a negative
    /// root where the density vanishes.
    fn merit(&self) -> f64 {
        self.sup.max(self.root_sup)
    }
}

impl<'a> Engine<'a> {
    pub fn new(scheme: &'a Scheme, unknowns: Vec<usize>, target: Target<'a>) -> Self {
        let n = scheme.domain().n();
        let mut local = vec![NONE; scheme.domain().len()];
        for (i, &x) in unknowns.iter().enumerate() {
            local[x] = i as u32;
        }
        let (froot, eps_over_n, epsilon) = match &target {
            Target::Equation(eq) => (
                unknowns.iter().map(|&x| eq.density.values()[x].max(0.0).powf(1.0 / n as f64)).collect(),
                eq.epsilon / n as f64,
                eq.epsilon,
            ),
            Target::Obstacle { .. } => (Vec::new(), 0.0, 0.0),
        };
        Engine { scheme, unknowns, local, target, froot, eps_over_n, epsilon }
    }

    fn eval(&self, u: &[f64]) -> Eval {
        let n = self.scheme.domain().n() as i32;
        let rows: Vec<(f64, u32, f64, f64)> = self
            .unknowns
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let (r, c) = self.scheme.root_at(u, x);
                match &self.target {
                    Target::Equation(eq) => {
                        let g = (self.eps_over_n * u[x]).exp() * self.froot[i];
                        let f = eq.density.values()[x];
                        let source = if f == 0.0 { 0.0 } else { (self.epsilon * u[x]).exp() * f };
                        let plus = source - r.max(0.0).powi(n);
                        (r - g, c as u32, self.eps_over_n * g, plus)
                    }
                    Target::Obstacle { obstacle, floor, weight } => {
                        let obs = weight * (obstacle[x] - u[x]);
                        let pde = r + floor;
                        if obs <= pde {
                            (obs, OBSTACLE_ROW, 0.0, obstacle[x] - u[x])
                        } else {
                            (pde, c as u32, 0.0, pde)
                        }
                    }
                }
            })
            .collect();
        let mut ev = Eval {
            g: Vec::with_capacity(rows.len()),
            policy: Vec::with_capacity(rows.len()),
            dsource: Vec::with_capacity(rows.len()),
            sup: 0.0,
            l1: 0.0,
            root_sup: 0.0,
        };
        for (g, c, d, plus) in rows {
            ev.g.push(g);
            ev.policy.push(c);
            ev.dsource.push(d);
            ev.sup = ev.sup.max(plus.abs());
            ev.l1 += plus.abs();
            ev.root_sup = ev.root_sup.max(g.abs());
        }
        if ev.g.iter().any(|v| !v.is_finite()) {
            ev.sup = f64::INFINITY;
            ev.root_sup = f64::INFINITY;
        }
        ev.l1 *= self.scheme.domain().cell_volume();
        ev
    }

    fn jacobian(&self, ev: &Eval) -> Csr {
        let rows: Vec<(f64, Vec<(u32, f64)>)> = self
            .unknowns
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                if ev.policy[i] == OBSTACLE_ROW {
                    let Target::Obstacle { weight, .. } = &self.target else { unreachable!() };
                    return (-weight, Vec::new());
                }
                let ctl = &self.scheme.controls()[ev.policy[i] as usize];
                let mut diag = ctl.center - ev.dsource[i];
                let mut off = Vec::with_capacity(ctl.terms.len());
                for &(k, coef) in &ctl.terms {
                    let y = self.scheme.neighbor(x, k);
                    match self.local[y] {
                        NONE => {}
                        j if j as usize == i => diag += coef,
                        j => off.push((j, coef)),
                    }
                }
                (diag, off)
            })
            .collect();
        let nnz = rows.iter().map(|r| r.1.len()).sum();
        let mut a = Csr::with_capacity(rows.len(), nnz);
        for (d, off) in rows {
            a.push_row(d, off);
        }
        a
    }

    /// Policy iteration: freeze the minimizing control, take the full
    /// Newton step of the resulting linear system, repeat. After reaching
    /// `tol` one more step is attempted and kept only if it helps.
    pub fn policy_iteration(&self, u: &mut [f64], tol: f64, max_iter: usize, report: &mut SolverReport, timing: bool) -> Result<()> {
        let start = Instant::now();
        let stamp = |s: &Instant| if timing { s.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let mut ev = self.eval(u);
        report.record(ev.sup, ev.l1, 0.0, stamp(&start));
        let mut best = ev.merit();
        let mut stalled = 0;
        let mut converged = ev.merit() <= tol;
        let mut it = 0;
        while it < max_iter {
            if !ev.sup.is_finite() {
                report.termination = Termination::Diverged;
                return Ok(());
            }
            let a = self.jacobian(&ev);
            let rhs: Vec<f64> = ev.g.iter().map(|g| -g).collect();
            let (delta, _) = bicgstab(&a, &rhs, 1e-13, 4000)?;
            let prev: Vec<f64> = if converged { self.unknowns.iter().map(|&x| u[x]).collect() } else { Vec::new() };
            for (&x, d) in self.unknowns.iter().zip(&delta) {
                u[x] += d;
            }
            let next = self.eval(u);
            if converged {
                if next.merit() < ev.merit() {
                    it += 1;
                    report.record(next.sup, next.l1, 1.0, stamp(&start));
                } else {
                    for (&x, p) in self.unknowns.iter().zip(prev) {
                        u[x] = p;
                    }
                }
                break;
            }
            it += 1;
            ev = next;
            report.record(ev.sup, ev.l1, 1.0, stamp(&start));
            if ev.merit() <= tol {
                converged = true;
                continue;
            }
            if ev.merit() < best * (1.0 - 1e-3) {
                best = ev.merit();
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= 12 {
                    break;
                }
            }
        }
        report.iterations += it;
        report.termination = if converged { Termination::Converged } else { Termination::IterLimit };
        report.wall_seconds += start.elapsed().as_secs_f64();
        Ok(())
    }

    /// Jacobi-style explicit Euler `u ← u + τ R(u)`. Under the CFL bound the
    /// update is monotone, so `sup |R|` may not grow once the start-up
    /// transient of `max(10, 1/τ)` steps has passed; growth aborts as
    /// `diverged`.
    pub fn euler(&self, u: &mut [f64], tau: f64, tol: f64, max_iter: usize, report: &mut SolverReport, timing: bool) {
        let start = Instant::now();
        let warmup = (1.0 / tau).ceil().max(10.0) as usize;
        let mut ev = self.eval(u);
        report.record(ev.sup, ev.l1, tau, 0.0);
        let mut it = 0;
        report.termination = Termination::IterLimit;
        if ev.merit() <= tol {
            report.termination = Termination::Converged;
        }
        while report.termination != Termination::Converged && it < max_iter {
            for (&x, g) in self.unknowns.iter().zip(&ev.g) {
                u[x] += tau * g;
            }
            let prev_root = ev.root_sup;
            ev = self.eval(u);
            it += 1;
            report.record(ev.sup, ev.l1, tau, if timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 });
            if !ev.sup.is_finite() || (it > warmup && ev.root_sup > prev_root * (1.0 + 1e-9) + 1e-14) {
                report.termination = Termination::Diverged;
                break;
            }
            if ev.merit() <= tol {
                report.termination = Termination::Converged;
            }
        }
        report.iterations += it;
        report.wall_seconds += start.elapsed().as_secs_f64();
    }
}
