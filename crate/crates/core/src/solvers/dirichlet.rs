use super::engine::{Engine, Target};
use super::{SolverConfig, SolverReport, SolverScheme};
use crate::error::{CmaError, Result};
use crate::grid::{DomainKind, GridFunction};
use crate::operator::{EquationData, Scheme};

/// Solves the Dirichlet problem on a box. `gamma` supplies the boundary
/// layer; its interior values are the initial guess.
pub fn solve_dirichlet(eq: &EquationData, gamma: &GridFunction, cfg: &SolverConfig) -> Result<(GridFunction, SolverReport)> {
    cfg.validate()?;
    eq.check_field(gamma)?;
    let domain = gamma.domain_arc().clone();
    if domain.kind() != DomainKind::Box {
        return Err(CmaError::validation("the Dirichlet problem needs a box domain"));
    }
    if gamma.is_extended() || gamma.values().iter().any(|v| !v.is_finite()) {
        return Err(CmaError::validation("boundary data must be finite"));
    }
    let set = cfg.direction_set(domain.n())?;
    let scheme = Scheme::new(domain.clone(), &set, &eq.omega)?;
    let engine = Engine::new(&scheme, domain.admissible_points(), Target::Equation(eq));
    let mut values = gamma.values().to_vec();
    let mut report = SolverReport::new();
    match cfg.scheme {
        SolverScheme::Euler => {
            let tau = cfg.step_size(domain.h(), &set)?;
            engine.euler(&mut values, tau, cfg.tol_sup, cfg.max_iter, &mut report, cfg.record_timing);
        }
        SolverScheme::PolicyIteration => {
            engine.policy_iteration(&mut values, cfg.tol_sup, cfg.max_iter, &mut report, cfg.record_timing)?;
        }
        SolverScheme::PerronSweep => {
            return Err(CmaError::validation("perron_sweep applies to compact problems only"));
        }
    }
    let report = report.into_result()?;
    Ok((GridFunction::new(domain, values)?, report))
}
