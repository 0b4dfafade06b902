use std::time::Instant;

use rayon::prelude::*;

use super::engine::{Engine, Target};
use super::{SolverConfig, SolverReport, SolverScheme, Termination};
use crate::error::{CmaError, Result};
use crate::grid::{Domain, DomainKind, GridFunction, SubBox};
use crate::operator::{hamiltonian_from_root, EquationData, Scheme};

/// Sub-boxes swept by the Perron iteration: `2·dims + 1` blocks of extent
/// `m − 1` with staggered corners, plus single cells for any point the
/// blocks miss (only possible when the grid is very coarse).
pub fn perron_sub_boxes(domain: &Domain) -> Vec<SubBox> {
    let dims = domain.shape().len();
    let count = 2 * dims + 1;
    let mut offsets: Vec<Vec<usize>> = Vec::new();
    for k in 0..count {
        let lo: Vec<usize> = domain.shape().iter().map(|&m| k * m / count).collect();
        if !offsets.contains(&lo) {
            offsets.push(lo);
        }
    }
    let mut boxes: Vec<SubBox> = offsets
        .into_iter()
        .map(|lo| SubBox { lo, extent: domain.shape().iter().map(|&m| m - 1).collect() })
        .collect();
    let mut covered = vec![false; domain.len()];
    for b in &boxes {
        for x in b.points(domain) {
            covered[x] = true;
        }
    }
    for (x, c) in covered.iter().enumerate() {
        if !c {
            boxes.push(SubBox { lo: domain.coords(x), extent: vec![1; dims] });
        }
    }
    boxes
}

/// Replaces `u` inside `points` by the solution of the local Dirichlet
/// problem with the surrounding values as data.
pub(crate) fn balayage_points(
    scheme: &Scheme,
    eq: &EquationData,
    u: &mut [f64],
    points: Vec<usize>,
    tol: f64,
    max_iter: usize,
    report: &mut SolverReport,
) -> Result<()> {
    let engine = Engine::new(scheme, points, Target::Equation(eq));
    engine.policy_iteration(u, tol, max_iter, report, false)?;
    match report.termination {
        Termination::Converged => Ok(()),
        _ => Err(CmaError::IterationLimit { report: Box::new(report.clone()) }),
    }
}

/// Largest constant `c` such that `u + c` is still a subsolution, or 0.
fn constant_lift(scheme: &Scheme, eq: &EquationData, u: &[f64]) -> f64 {
    let n = eq.omega.n() as f64;
    let f = eq.density.values();
    let lift = scheme
        .admissible()
        .par_iter()
        .filter(|&&x| f[x] > 0.0)
        .map(|&x| {
            let (r, _) = scheme.root_at(u, x);
            if r <= 0.0 {
                f64::NEG_INFINITY
            } else {
                (n * r.ln() - f[x].ln()) / eq.epsilon - u[x]
            }
        })
        .reduce(|| f64::INFINITY, f64::min);
    if lift.is_finite() && lift > 0.0 {
        lift
    } else {
        0.0
    }
}

fn is_subsolution(scheme: &Scheme, eq: &EquationData, u: &GridFunction, tol: f64) -> bool {
    let f = eq.density.values();
    let values = u.values();
    scheme.admissible().par_iter().all(|&x| {
        let (r, _) = scheme.root_at(values, x);
        hamiltonian_from_root(r, values[x], f[x], eq, scheme.domain()) <= tol
    })
}

/// Perron envelope of the discrete subsolutions above the seeds. Seeds
/// that are not subsolutions (within `10·tol_sup`) are dropped.
pub fn perron_envelope(eq: &EquationData, seeds: &[GridFunction], cfg: &SolverConfig) -> Result<(GridFunction, SolverReport)> {
    perron_envelope_observed(eq, seeds, cfg, |_| {})
}

/// [`perron_envelope`] calling `observe` on the starting field and after
/// every sweep.
pub fn perron_envelope_observed(
    eq: &EquationData,
    seeds: &[GridFunction],
    cfg: &SolverConfig,
    mut observe: impl FnMut(&GridFunction),
) -> Result<(GridFunction, SolverReport)> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(CmaError::validation("the Perron seed family is empty"));
    }
    if eq.domain().kind() != DomainKind::Torus || !(eq.epsilon > 0.0) {
        return Err(CmaError::validation("the Perron envelope needs a torus and ε > 0"));
    }
    let set = cfg.direction_set(eq.domain().n())?;
    let scheme = Scheme::new(eq.domain_arc().clone(), &set, &eq.omega)?;
    let mut start: Option<GridFunction> = None;
    for s in seeds {
        eq.check_field(s)?;
        if s.is_extended() || !is_subsolution(&scheme, eq, s, 10.0 * cfg.tol_sup) {
            continue;
        }
        start = Some(match start {
            None => s.clone(),
            Some(u) => u.pointwise_max(s)?,
        });
    }
    let start = start.ok_or_else(|| CmaError::InvalidInput("no seed is a discrete subsolution".into()))?;
    let mut report = SolverReport::new();
    let u = perron_from(&scheme, eq, start, &SolverConfig { scheme: SolverScheme::PerronSweep, ..cfg.clone() }, &mut report, &mut observe)?;
    Ok((u, report.into_result()?))
}

pub(crate) fn perron_from(
    scheme: &Scheme,
    eq: &EquationData,
    start: GridFunction,
    cfg: &SolverConfig,
    report: &mut SolverReport,
    observe: &mut dyn FnMut(&GridFunction),
) -> Result<GridFunction> {
    let clock = Instant::now();
    let stamp = || if cfg.record_timing { clock.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let domain = start.domain_arc().clone();
    let boxes = perron_sub_boxes(&domain);
    let mut u = start;
    observe(&u);
    let res = scheme.residual(&u, eq)?;
    report.record(res.sup, res.l1, 0.0, stamp());
    report.termination = if res.sup <= cfg.tol_sup { Termination::Converged } else { Termination::IterLimit };
    let mut sweeps = 0;
    while report.termination != Termination::Converged && sweeps < cfg.max_iter {
        let mut values = u.values().to_vec();
        let lift = constant_lift(scheme, eq, &values);
        values.iter_mut().for_each(|v| *v += lift);
        for b in &boxes {
            let before = values.clone();
            let mut inner = SolverReport::new();
            balayage_points(scheme, eq, &mut values, b.points(&domain), 0.1 * cfg.tol_sup, cfg.max_iter, &mut inner)?;
            // Balayage never lowers a subsolution; the max guards rounding.
            values.iter_mut().zip(&before).for_each(|(v, b)| *v = v.max(*b));
        }
        u = GridFunction::new(domain.clone(), values)?;
        sweeps += 1;
        observe(&u);
        let res = scheme.residual(&u, eq)?;
        report.record(res.sup, res.l1, 0.0, stamp());
        if res.sup <= cfg.tol_sup {
            report.termination = Termination::Converged;
        } else if !res.sup.is_finite() {
            report.termination = Termination::Diverged;
        }
    }
    report.iterations += sweeps;
    report.wall_seconds += clock.elapsed().as_secs_f64();
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_boxes_cover_every_point() {
        for (n, m) in [(1, 4), (1, 9), (2, 4), (2, 8)] {
            let d = Domain::torus(n, m).unwrap();
            let mut covered = vec![false; d.len()];
            for b in perron_sub_boxes(&d) {
                b.validate(&d).unwrap();
                for x in b.points(&d) {
                    covered[x] = true;
                }
            }
            assert!(covered.iter().all(|&c| c), "n={n} m={m}");
        }
    }
}
