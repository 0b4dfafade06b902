use super::engine::{Engine, Target};
use super::perron::perron_from;
use super::{ContinuationStep, InitEndpoint, SolverConfig, SolverReport, SolverScheme, Termination};
use crate::error::{CmaError, Result};
use crate::grid::{DomainKind, GridFunction};
use crate::operator::{residual_field, EquationData, Scheme};

/// Constant sub- and supersolution `(1/ε) ln(r_ω^n / f)` at `max f` and
/// `min f`; the supersolution is absent when `f` vanishes somewhere.
pub(crate) fn constant_bracket(scheme: &Scheme, eq: &EquationData) -> Result<(f64, Option<f64>)> {
    let n = eq.omega.n() as f64;
    let f = eq.density.values();
    let pts = scheme.admissible();
    let fmax = pts.iter().map(|&x| f[x]).fold(0.0, f64::max);
    let fmin = pts.iter().map(|&x| f[x]).fold(f64::INFINITY, f64::min);
    if fmax == 0.0 {
        return Err(CmaError::validation("density vanishes identically"));
    }
    let r0 = scheme.constant_root();
    if !(r0 > 0.0) {
        return Err(CmaError::NoSubsolution(format!(
            "ω is degenerate on the control set (constant root {r0:.3e}) while the density is positive"
        )));
    }
    let level = |fv: f64| (n * r0.ln() - fv.ln()) / eq.epsilon;
    let sup = if fmin > 0.0 { Some(level(fmin)) } else { None };
    Ok((level(fmax), sup))
}

fn check_compact(eq: &EquationData, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if eq.domain().kind() != DomainKind::Torus {
        return Err(CmaError::validation("compact solves need a torus domain"));
    }
    if !(eq.epsilon > 0.0) {
        return Err(CmaError::validation("compact solves need ε > 0; use continuation for ε = 0"));
    }
    Ok(())
}

/// Solves `(ω + dd^c φ)^n = e^{εφ} f` on the torus, starting from the
/// constant bracket endpoint selected by `cfg.init`.
pub fn solve_compact(eq: &EquationData, cfg: &SolverConfig) -> Result<(GridFunction, SolverReport)> {
    check_compact(eq, cfg)?;
    let domain = eq.domain_arc().clone();
    let set = cfg.direction_set(domain.n())?;
    let scheme = Scheme::new(domain.clone(), &set, &eq.omega)?;
    let bracket = constant_bracket(&scheme, eq)?;
    let start = match cfg.init {
        InitEndpoint::Sub => bracket.0,
        InitEndpoint::Super => bracket
            .1
            .ok_or_else(|| CmaError::validation("no constant supersolution: the density vanishes somewhere"))?,
    };
    let init = GridFunction::constant(domain, start);
    let mut report = SolverReport::new();
    report.bracket = Some(bracket);
    let u = run(&scheme, eq, init, cfg, &mut report)?;
    Ok((u, report.into_result()?))
}

/// Same as [`solve_compact`] from a caller-supplied starting field.
pub fn solve_compact_from(eq: &EquationData, init: &GridFunction, cfg: &SolverConfig) -> Result<(GridFunction, SolverReport)> {
    check_compact(eq, cfg)?;
    eq.check_field(init)?;
    if init.is_extended() {
        return Err(CmaError::validation("initial field must be finite"));
    }
    let set = cfg.direction_set(eq.domain().n())?;
    let scheme = Scheme::new(eq.domain_arc().clone(), &set, &eq.omega)?;
    let mut report = SolverReport::new();
    report.bracket = constant_bracket(&scheme, eq).ok();
    let u = run(&scheme, eq, init.clone(), cfg, &mut report)?;
    Ok((u, report.into_result()?))
}

fn run(scheme: &Scheme, eq: &EquationData, init: GridFunction, cfg: &SolverConfig, report: &mut SolverReport) -> Result<GridFunction> {
    let domain = init.domain_arc().clone();
    match cfg.scheme {
        SolverScheme::PolicyIteration | SolverScheme::Euler => {
            let mut values = init.into_values();
            let engine = Engine::new(scheme, (0..domain.len()).collect(), Target::Equation(eq));
            if cfg.scheme == SolverScheme::Euler {
                let set = cfg.direction_set(domain.n())?;
                let tau = cfg.step_size(domain.h(), &set)?;
                engine.euler(&mut values, tau, cfg.tol_sup, cfg.max_iter, report, cfg.record_timing);
            } else {
                engine.policy_iteration(&mut values, cfg.tol_sup, cfg.max_iter, report, cfg.record_timing)?;
            }
            GridFunction::new(domain, values)
        }
        SolverScheme::PerronSweep => perron_from(scheme, eq, init, cfg, report, &mut |_| {}),
    }
}

/// Subtracts the `f`-weighted mean so that `Σ φ f = 0`.
pub(crate) fn normalize_against(phi: &GridFunction, eq: &EquationData) -> GridFunction {
    let f = eq.density.values();
    let (num, den) = phi.values().iter().zip(f).fold((0.0, 0.0), |(a, b), (p, w)| (a + p * w, b + w));
    phi.shifted(-num / den)
}

/// Reaches `ε = 0` through the family `ε_{j+1} = factor · ε_j`, warm
/// starting each solve, until consecutive normalized solutions are within
/// `cauchy_tol`. The density must already satisfy `∫ f = ∫ det ω`.
pub fn continuation_to_zero(eq: &EquationData, cfg: &SolverConfig) -> Result<(GridFunction, SolverReport)> {
    let cont = cfg.continuation.ok_or_else(|| CmaError::validation("continuation settings are required"))?;
    cfg.validate()?;
    let gap = eq.normalization_gap();
    if !(gap <= 1e-10) {
        return Err(CmaError::validation(format!("density mass differs from the ω mass by {gap:.3e} (relative)")));
    }
    let mut report = SolverReport::new();
    report.normalization_applied = true;
    let mut raw: Option<GridFunction> = None;
    let mut prev: Option<GridFunction> = None;
    let mut distances = Vec::new();
    let mut epsilon = cont.epsilon_0;
    for _ in 0..cont.max_steps {
        let eq_j = eq.with_epsilon(epsilon)?;
        let (phi, step) = match &raw {
            None => solve_compact(&eq_j, cfg)?,
            Some(u) => solve_compact_from(&eq_j, u, cfg)?,
        };
        if report.bracket.is_none() {
            report.bracket = step.bracket;
        }
        report.iterations += step.iterations;
        report.wall_seconds += step.wall_seconds;
        report.residual_sup.extend(&step.residual_sup);
        report.residual_l1.extend(&step.residual_l1);
        report.tau.extend(&step.tau);
        report.wall_ms.extend(&step.wall_ms);
        let normalized = normalize_against(&phi, eq);
        let distance = prev.as_ref().map_or(f64::NAN, |p| p.sup_distance(&normalized));
        report.continuation.push(ContinuationStep { epsilon, iterations: step.iterations, distance });
        raw = Some(phi);
        if !distance.is_nan() {
            distances.push(distance);
        }
        if distance < cont.cauchy_tol {
            let set = cfg.direction_set(eq.domain().n())?;
            let eq0 = eq.with_epsilon(0.0)?;
            report.zero_residual = Some(residual_field(&normalized, &eq0, &set)?.sup);
            report.termination = Termination::Converged;
            return Ok((normalized, report));
        }
        prev = Some(normalized);
        epsilon *= cont.factor;
    }
    Err(CmaError::NonCauchy { distances })
}
