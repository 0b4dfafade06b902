//! Fixed-point and policy-iteration solvers for the discrete equation, on
//! the box (Dirichlet data) and on the torus (`ε > 0`, or `ε → 0` by
//! continuation), plus the Perron sweep.
//!
//! Every solver works on the root form `R(u) = root(u) − (e^{εu} f)^{1/n}`,
//! which is nondecreasing in neighbour values and strictly decreasing in the
//! centre value. Explicit Euler on `R` is monotone below the CFL bound;
//! policy iteration freezes the minimizing control per point and solves the
//! resulting linear system.

mod compact;
mod dirichlet;
pub(crate) mod engine;
mod perron;

pub use compact::{continuation_to_zero, solve_compact, solve_compact_from};
pub use dirichlet::solve_dirichlet;
pub use perron::{perron_envelope, perron_envelope_observed, perron_sub_boxes};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{CmaError, Result};
use crate::hermitian::{DirectionSet, FrameFamily, WeightBounds};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverScheme {
    Euler,
    PolicyIteration,
    PerronSweep,
}

impl fmt::Display for SolverScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverScheme::Euler => "euler",
            SolverScheme::PolicyIteration => "policy_iteration",
            SolverScheme::PerronSweep => "perron_sweep",
        })
    }
}

impl FromStr for SolverScheme {
    type Err = CmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(SolverScheme::Euler),
            "policy_iteration" => Ok(SolverScheme::PolicyIteration),
            "perron_sweep" => Ok(SolverScheme::PerronSweep),
            _ => Err(CmaError::validation(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Explicit step size: the CFL bound, or a fixed value below it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

impl fmt::Display for StepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSize::Auto => f.write_str("auto"),
            StepSize::Fixed(t) => write!(f, "{t}"),
        }
    }
}

/// Which end of the constant bracket starts a compact solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitEndpoint {
    Sub,
    Super,
}

impl fmt::Display for InitEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitEndpoint::Sub => "sub",
            InitEndpoint::Super => "super",
        })
    }
}

impl FromStr for InitEndpoint {
    type Err = CmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sub" => Ok(InitEndpoint::Sub),
            "super" => Ok(InitEndpoint::Super),
            _ => Err(CmaError::validation(format!("unknown init endpoint `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationConfig {
    pub epsilon_0: f64,
    /// `ε_{j+1} = factor · ε_j`.
    pub factor: f64,
    pub cauchy_tol: f64,
    pub max_steps: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig { epsilon_0: 1.0, factor: 0.5, cauchy_tol: 1e-9, max_steps: 60 }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_0 > 0.0 && self.epsilon_0.is_finite()) {
            return Err(CmaError::validation("epsilon_0 must be positive"));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(CmaError::validation("continuation factor must lie in (0, 1)"));
        }
        if !(self.cauchy_tol > 0.0) {
            return Err(CmaError::validation("cauchy_tol must be positive"));
        }
        if self.max_steps == 0 {
            return Err(CmaError::validation("max continuation steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub scheme: SolverScheme,
    pub tau: StepSize,
    pub tol_sup: f64,
    pub max_iter: usize,
    pub frame_family: FrameFamily,
    pub weight_levels: usize,
    pub weight_bounds: WeightBounds,
    pub continuation: Option<ContinuationConfig>,
    pub init: InitEndpoint,
    /// Record wall-clock times in the trace. Off by default so that logs
    /// are reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: SolverScheme::PolicyIteration,
            tau: StepSize::Auto,
            tol_sup: 1e-10,
            max_iter: 100_000,
            frame_family: FrameFamily::AxesAndDiagonals,
            weight_levels: 5,
            weight_bounds: WeightBounds::default(),
            continuation: None,
            init: InitEndpoint::Sub,
            record_timing: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_sup > 0.0 && self.tol_sup.is_finite()) {
            return Err(CmaError::validation("tol_sup must be positive"));
        }
        if self.max_iter == 0 {
            return Err(CmaError::validation("max_iter must be positive"));
        }
        if self.weight_levels == 0 {
            return Err(CmaError::validation("weight_levels must be positive"));
        }
        if let StepSize::Fixed(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CmaError::validation("tau must be positive"));
            }
        }
        self.weight_bounds.validate()?;
        if let Some(c) = &self.continuation {
            c.validate()?;
        }
        Ok(())
    }

    pub fn direction_set(&self, n: usize) -> Result<DirectionSet> {
        DirectionSet::generate_with_bounds(n, self.frame_family, self.weight_levels, self.weight_bounds)
    }

    /// Resolves the Euler step against `cfl_bound`, rejecting fixed steps
    /// above it.
    pub fn step_size(&self, h: f64, set: &DirectionSet) -> Result<f64> {
        let bound = cfl_bound(h, set);
        match self.tau {
            StepSize::Auto => Ok(bound),
            StepSize::Fixed(t) if t <= bound * (1.0 + 1e-12) => Ok(t),
            StepSize::Fixed(t) => Err(CmaError::validation(format!("tau = {t} exceeds the CFL bound {bound:.6e}"))),
        }
    }
}

/// `h² / (4 n κ_max)` with `κ_max` the largest control weight.
pub fn cfl_bound(h: f64, set: &DirectionSet) -> f64 {
    h * h / (4.0 * set.n() as f64 * set.max_weight())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterLimit,
    Diverged,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::IterLimit => "iter_limit",
            Termination::Diverged => "diverged",
        })
    }
}

/// One solve of the `ε`-family during continuation.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationStep {
    pub epsilon: f64,
    pub iterations: usize,
    /// Sup distance to the previous normalized solution (`NaN` for the first).
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual_sup: Vec<f64>,
    pub residual_l1: Vec<f64>,
    pub tau: Vec<f64>,
    pub wall_ms: Vec<f64>,
    pub termination: Termination,
    pub wall_seconds: f64,
    pub normalization_applied: bool,
    /// Constant sub/supersolution used to initialize a compact solve.
    pub bracket: Option<(f64, Option<f64>)>,
    pub continuation: Vec<ContinuationStep>,
    /// Residual of the `ε = 0` equation after continuation.
    pub zero_residual: Option<f64>,
}

impl SolverReport {
    pub(crate) fn new() -> Self {
        SolverReport {
            iterations: 0,
            residual_sup: Vec::new(),
            residual_l1: Vec::new(),
            tau: Vec::new(),
            wall_ms: Vec::new(),
            termination: Termination::IterLimit,
            wall_seconds: 0.0,
            normalization_applied: false,
            bracket: None,
            continuation: Vec::new(),
            zero_residual: None,
        }
    }

    pub(crate) fn record(&mut self, sup: f64, l1: f64, tau: f64, wall_ms: f64) {
        self.residual_sup.push(sup);
        self.residual_l1.push(l1);
        self.tau.push(tau);
        self.wall_ms.push(wall_ms);
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_sup.last().copied().unwrap_or(f64::NAN)
    }

    /// Convergence log with columns `iter,residual_sup,residual_l1,tau,wall_ms`;
    /// row 0 is the initial state.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iter,residual_sup,residual_l1,tau,wall_ms")?;
        for i in 0..self.residual_sup.len() {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.3}",
                i, self.residual_sup[i], self.residual_l1[i], self.tau[i], self.wall_ms[i]
            )?;
        }
        Ok(())
    }

    pub(crate) fn into_result(self) -> Result<Self> {
        match self.termination {
            Termination::Converged => Ok(self),
            Termination::IterLimit => Err(CmaError::IterationLimit { report: Box::new(self) }),
            Termination::Diverged => Err(CmaError::Diverged { report: Box::new(self) }),
        }
    }
}
