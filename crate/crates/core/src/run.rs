//! Mode dispatch behind the `cma` command line.
//!
//! Every run writes `run.log` (effective configuration first, then
//! results and certificates) into the output directory; solver modes also
//! write `solution.grid` and `convergence.csv`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{Mode, RunConfig};
use crate::envelopes::{balayage, contact_set_identity_check, inf_convolution, psh_projection, sup_convolution};
use crate::error::{CmaError, Result};
use crate::grid::{Domain, GridFunction, SubBox};
use crate::gridio::{load_grid, load_grid_on, save_grid};
use crate::hermitian::HermitianForm;
use crate::operator::{DensityField, EquationData};
use crate::solvers::{continuation_to_zero, solve_compact, solve_dirichlet, SolverReport};
use crate::verify::{check_subsolution, check_supersolution, comparison_harness, stability_diagnostic, Certificate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFIED_FAILURE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

pub fn exit_code(err: &CmaError) -> i32 {
    match err {
        CmaError::IterationLimit { .. } | CmaError::Diverged { .. } | CmaError::NonCauchy { .. } | CmaError::LinearSolver(_) => {
            EXIT_NOT_CONVERGED
        }
        _ => EXIT_INPUT,
    }
}

struct Log {
    lines: Vec<String>,
}

impl Log {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

/// Runs one configured workflow and returns its exit code. The log is
/// written even when the run fails, as long as the output directory can be
/// created.
pub fn run(config: &RunConfig) -> i32 {
    let out = config.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut log = Log { lines: vec!["# effective configuration".into()] };
    log.lines.extend(config.echo().lines().map(String::from));
    log.line("# run");
    // The effective configuration is on disk before any compute starts.
    if let Err(e) = write_log(&out, &log.lines) {
        eprintln!("cma: cannot write run.log: {e}");
        return EXIT_INPUT;
    }
    let code = match execute(config, &out, &mut log) {
        Ok(code) => code,
        Err(e) => {
            let code = match (&e, config.mode) {
                (CmaError::InvalidInput(_), Some(Mode::Compare)) => EXIT_CERTIFIED_FAILURE,
                _ => exit_code(&e),
            };
            log.line(format!("error: {e}"));
            eprintln!("cma: {e}");
            code
        }
    };
    log.line(format!("exit_code = {code}"));
    if let Err(e) = write_log(&out, &log.lines) {
        eprintln!("cma: cannot write run.log: {e}");
        return EXIT_INPUT;
    }
    code
}

fn write_log(out: &Path, lines: &[String]) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    let mut f = fs::File::create(out.join("run.log"))?;
    for l in lines {
        writeln!(f, "{l}")?;
    }
    Ok(())
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| CmaError::validation(format!("`{key}` is required for this mode")))
}

fn omega_for(config: &RunConfig, domain: &Domain) -> Result<HermitianForm> {
    match &config.omega {
        Some(d) if d.len() != domain.n() => Err(CmaError::validation(format!("omega needs {} diagonal entries", domain.n()))),
        Some(d) => Ok(HermitianForm::diagonal(d)),
        None if domain.is_torus() => Ok(HermitianForm::identity(domain.n())),
        None => Ok(HermitianForm::zeros(domain.n())),
    }
}

fn density_for(config: &RunConfig, path: &Option<PathBuf>, domain: &Arc<Domain>, omega: &HermitianForm) -> Result<DensityField> {
    let field = match path {
        Some(p) => DensityField::new(load_grid_on(p, domain)?)?,
        None => {
            let c = match config.density_constant {
                Some(c) => c,
                None if domain.is_torus() => crate::hermitian::det_plus(omega),
                None => 1.0,
            };
            DensityField::constant(domain.clone(), c)?
        }
    };
    match config.clip_level {
        Some(level) => field.clipped(level),
        None => Ok(field),
    }
}

fn equation(config: &RunConfig, domain: &Arc<Domain>) -> Result<EquationData> {
    let omega = omega_for(config, domain)?;
    let density = density_for(config, &config.density, domain, &omega)?;
    EquationData::new(config.epsilon, density, omega)
}

/// Domain from the first input file present, else the configured torus.
fn domain_from(config: &RunConfig, files: &[&Option<PathBuf>]) -> Result<Arc<Domain>> {
    if let Some(p) = files.iter().copied().flatten().next() {
        return Ok(load_grid(p)?.domain_arc().clone());
    }
    Ok(Arc::new(Domain::torus(config.n, config.m)?))
}

fn write_solution(out: &Path, u: &GridFunction, report: Option<&SolverReport>, log: &mut Log) -> Result<()> {
    fs::create_dir_all(out)?;
    save_grid(u, out.join("solution.grid"))?;
    if let Some(r) = report {
        let mut f = fs::File::create(out.join("convergence.csv"))?;
        r.write_csv(&mut f)?;
        log.line(format!("termination = {}", r.termination));
        log.line(format!("iterations = {}", r.iterations));
        log.line(format!("final_residual_sup = {:.16e}", r.final_residual()));
        if let Some((lo, hi)) = r.bracket {
            log.line(format!("bracket_sub = {lo:.16e}"));
            log.line(format!("bracket_super = {}", hi.map_or("none".into(), |h| format!("{h:.16e}"))));
        }
        if r.normalization_applied {
            log.line("normalization_applied = true");
        }
        for s in &r.continuation {
            log.line(format!("continuation epsilon={:.16e} iterations={} distance={:.16e}", s.epsilon, s.iterations, s.distance));
        }
        if let Some(z) = r.zero_residual {
            log.line(format!("zero_residual_sup = {z:.16e}"));
        }
        if r.wall_ms.iter().any(|&t| t > 0.0) {
            log.line(format!("wall_seconds = {:.3}", r.wall_seconds));
        }
    }
    Ok(())
}

fn certify(cert: Certificate, seed: u64, log: &mut Log) -> i32 {
    let cert = cert.with_seed(seed);
    log.line(cert.to_record());
    println!("{}", cert.to_record());
    if cert.pass {
        EXIT_OK
    } else {
        EXIT_CERTIFIED_FAILURE
    }
}

fn execute(config: &RunConfig, out: &Path, log: &mut Log) -> Result<i32> {
    let mode = config.mode.ok_or_else(|| CmaError::validation("no mode given"))?;
    let scfg = config.solver_config();
    scfg.validate()?;
    let params = config.envelope_params();
    params.validate()?;
    match mode {
        Mode::SolveDirichlet => {
            let gamma = load_grid(require(&config.boundary, "boundary")?)?;
            let eq = equation(config, gamma.domain_arc())?;
            let (u, report) = solve_dirichlet(&eq, &gamma, &scfg).or_else(|e| salvage(e, out, log))?;
            write_solution(out, &u, Some(&report), log)?;
        }
        Mode::SolveCompact | Mode::ContinueToZero => {
            let domain = domain_from(config, &[&config.density])?;
            let mut eq = equation(config, &domain)?;
            let result = if mode == Mode::SolveCompact {
                solve_compact(&eq, &scfg)
            } else {
                eq = eq.with_epsilon(0.0)?;
                if config.normalize {
                    eq = eq.normalize()?;
                }
                continuation_to_zero(&eq, &scfg)
            };
            let (u, report) = result.or_else(|e| salvage(e, out, log))?;
            write_solution(out, &u, Some(&report), log)?;
        }
        Mode::EnvelopeSup | Mode::EnvelopeInf => {
            let u = load_grid(require(&config.input, "input")?)?;
            let v = if mode == Mode::EnvelopeSup { sup_convolution(&u, config.delta)? } else { inf_convolution(&u, config.delta)? };
            write_solution(out, &v, None, log)?;
        }
        Mode::ProjectPsh => {
            let h = load_grid(require(&config.input, "input")?)?;
            let eq = equation(config, h.domain_arc())?;
            let set = scfg.direction_set(h.domain().n())?;
            let p = psh_projection(&h, &eq, &set, &params)?;
            let contact = contact_set_identity_check(&h, &p, &eq, &set, config.tol, 10.0 * config.env_tol)?;
            log.line(format!(
                "contact_check pass={} worst_off_contact_point={} worst_off_contact_value={:.16e} mass_projection={:.16e} mass_contact={:.16e} contact_points={}",
                contact.pass,
                contact.worst_off_contact.0,
                contact.worst_off_contact.1,
                contact.mass_projection,
                contact.mass_contact,
                contact.contact_points
            ));
            write_solution(out, &p, None, log)?;
        }
        Mode::Balayage => {
            let u = load_grid(require(&config.input, "input")?)?;
            let eq = equation(config, u.domain_arc())?;
            let set = scfg.direction_set(u.domain().n())?;
            let b = SubBox {
                lo: config.box_lo.clone().ok_or_else(|| CmaError::validation("`box_lo` is required for balayage"))?,
                extent: config.box_extent.clone().ok_or_else(|| CmaError::validation("`box_extent` is required for balayage"))?,
            };
            let v = balayage(&u, &b, &eq, &set, &params)?;
            write_solution(out, &v, None, log)?;
        }
        Mode::CheckSub | Mode::CheckSuper => {
            let u = load_grid(require(&config.input, "input")?)?;
            let eq = equation(config, u.domain_arc())?;
            let set = scfg.direction_set(u.domain().n())?;
            let cert = if mode == Mode::CheckSub {
                check_subsolution(&u, &eq, &set, config.tol)?
            } else {
                check_supersolution(&u, &eq, &set, config.tol)?
            };
            return Ok(certify(cert, config.seed, log));
        }
        Mode::Compare => {
            let u = load_grid(require(&config.input, "input")?)?;
            let v = load_grid_on(require(&config.input2, "input2")?, u.domain())?;
            let eq = equation(config, u.domain_arc())?;
            let set = scfg.direction_set(u.domain().n())?;
            let cert = comparison_harness(&u, &v, &eq, &set, config.tol)?;
            return Ok(certify(cert, config.seed, log));
        }
        Mode::Stability => {
            let phi1 = load_grid(require(&config.input, "input")?)?;
            let phi2 = load_grid_on(require(&config.input2, "input2")?, phi1.domain())?;
            let f1 = load_grid_on(require(&config.density, "density")?, phi1.domain())?;
            let f2 = load_grid_on(require(&config.density2, "density2")?, phi1.domain())?;
            let r = stability_diagnostic(&phi1, &phi2, &f1, &f2, config.p)?;
            log.line(format!("stability p={} q={} gamma={:.16e} degenerate={}", r.p, r.q, r.gamma, r.degenerate()));
            for (name, s) in [("forward", &r.forward), ("backward", &r.backward)] {
                log.line(format!(
                    "stability {name} sup_diff={:.16e} l1_diff={:.16e} density_norm={:.16e} constant={:.16e} degenerate={}",
                    s.sup_diff, s.l1_diff, s.density_norm, s.constant, s.degenerate
                ));
            }
        }
    }
    Ok(EXIT_OK)
}

/// Writes the convergence log of a failed solve before passing the error on.
fn salvage<T>(e: CmaError, out: &Path, log: &mut Log) -> Result<T> {
    if let CmaError::IterationLimit { report } | CmaError::Diverged { report } = &e {
        fs::create_dir_all(out)?;
        let mut f = fs::File::create(out.join("convergence.csv"))?;
        report.write_csv(&mut f)?;
        log.line(format!("termination = {}", report.termination));
        log.line(format!("iterations = {}", report.iterations));
    }
    Err(e)
}
