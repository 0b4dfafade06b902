//! `key = value` run configuration.

use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::envelopes::EnvelopeParams;
use crate::error::{CmaError, Result};
use crate::hermitian::{FrameFamily, WeightBounds};
use crate::solvers::{ContinuationConfig, InitEndpoint, SolverConfig, SolverScheme, StepSize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    SolveDirichlet,
    SolveCompact,
    ContinueToZero,
    EnvelopeSup,
    EnvelopeInf,
    ProjectPsh,
    Balayage,
    CheckSub,
    CheckSuper,
    Compare,
    Stability,
}

impl Mode {
    pub const ALL: [Mode; 11] = [
        Mode::SolveDirichlet,
        Mode::SolveCompact,
        Mode::ContinueToZero,
        Mode::EnvelopeSup,
        Mode::EnvelopeInf,
        Mode::ProjectPsh,
        Mode::Balayage,
        Mode::CheckSub,
        Mode::CheckSuper,
        Mode::Compare,
        Mode::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::SolveDirichlet => "solve-dirichlet",
            Mode::SolveCompact => "solve-compact",
            Mode::ContinueToZero => "continue-to-zero",
            Mode::EnvelopeSup => "envelope-sup",
            Mode::EnvelopeInf => "envelope-inf",
            Mode::ProjectPsh => "project-psh",
            Mode::Balayage => "balayage",
            Mode::CheckSub => "check-sub",
            Mode::CheckSuper => "check-super",
            Mode::Compare => "compare",
            Mode::Stability => "stability",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = CmaError;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| CmaError::validation(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub input: Option<PathBuf>,
    pub input2: Option<PathBuf>,
    pub density: Option<PathBuf>,
    pub density2: Option<PathBuf>,
    pub boundary: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Lattice used when no input file fixes one.
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    /// Diagonal of ω; `None` is the identity on the torus and zero on a box.
    pub omega: Option<Vec<f64>>,
    /// Constant density used when no density file is given; `None` means `det ω`.
    pub density_constant: Option<f64>,
    /// Rescale the density to the ω mass before continuation.
    pub normalize: bool,
    pub clip_level: Option<f64>,
    pub scheme: SolverScheme,
    pub tau: StepSize,
    pub tol_sup: f64,
    pub max_iter: usize,
    pub init: InitEndpoint,
    pub frame_family: FrameFamily,
    pub weight_levels: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub epsilon_0: f64,
    pub factor: f64,
    pub cauchy_tol: f64,
    pub max_continuation_steps: usize,
    pub delta: f64,
    pub env_tol: f64,
    pub env_max_iter: usize,
    pub psd_floor: Option<f64>,
    pub box_lo: Option<Vec<usize>>,
    pub box_extent: Option<Vec<usize>>,
    pub tol: f64,
    pub p: f64,
    pub log_timing: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        let c = ContinuationConfig::default();
        let e = EnvelopeParams::default();
        RunConfig {
            mode: None,
            input: None,
            input2: None,
            density: None,
            density2: None,
            boundary: None,
            output: None,
            n: 2,
            m: 8,
            epsilon: 1.0,
            omega: None,
            density_constant: None,
            normalize: true,
            clip_level: None,
            scheme: s.scheme,
            tau: s.tau,
            tol_sup: s.tol_sup,
            max_iter: s.max_iter,
            init: s.init,
            frame_family: s.frame_family,
            weight_levels: s.weight_levels,
            kappa_min: s.weight_bounds.kappa_min,
            kappa_max: s.weight_bounds.kappa_max,
            epsilon_0: c.epsilon_0,
            factor: c.factor,
            cauchy_tol: c.cauchy_tol,
            max_continuation_steps: c.max_steps,
            delta: e.delta,
            env_tol: e.tol,
            env_max_iter: e.max_iter,
            psd_floor: e.psd_floor,
            box_lo: None,
            box_extent: None,
            tol: 1e-8,
            p: 2.0,
            log_timing: false,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            scheme: self.scheme,
            tau: self.tau,
            tol_sup: self.tol_sup,
            max_iter: self.max_iter,
            frame_family: self.frame_family,
            weight_levels: self.weight_levels,
            weight_bounds: WeightBounds { kappa_min: self.kappa_min, kappa_max: self.kappa_max },
            continuation: Some(ContinuationConfig {
                epsilon_0: self.epsilon_0,
                factor: self.factor,
                cauchy_tol: self.cauchy_tol,
                max_steps: self.max_continuation_steps,
            }),
            init: self.init,
            record_timing: self.log_timing,
        }
    }

    /// Makes relative input/output paths relative to `base` (the directory
    /// of the configuration file).
    pub fn resolve_paths(&mut self, base: &std::path::Path) {
        for p in [&mut self.input, &mut self.input2, &mut self.density, &mut self.density2, &mut self.boundary, &mut self.output] {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    pub fn envelope_params(&self) -> EnvelopeParams {
        EnvelopeParams { delta: self.delta, max_iter: self.env_max_iter, tol: self.env_tol, psd_floor: self.psd_floor }
    }

    /// Every effective value as `key = value`, one per line, in a form
    /// [`parse_config`] reads back to an identical configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let opt = |v: Option<f64>, none: &str| v.map(|x| x.to_string()).unwrap_or_else(|| none.to_string());
        let list = |v: &Option<Vec<usize>>| v.as_ref().map(|v| join(v)).unwrap_or_default();
        kv("mode", self.mode.map(|m| m.to_string()).unwrap_or_default());
        kv("input", path(&self.input));
        kv("input2", path(&self.input2));
        kv("density", path(&self.density));
        kv("density2", path(&self.density2));
        kv("boundary", path(&self.boundary));
        kv("output", path(&self.output));
        kv("n", self.n.to_string());
        kv("m", self.m.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("omega", self.omega.as_ref().map(|v| join(v)).unwrap_or_else(|| "default".into()));
        kv("density_constant", opt(self.density_constant, "det_omega"));
        kv("normalize", self.normalize.to_string());
        kv("clip_level", opt(self.clip_level, "none"));
        kv("scheme", self.scheme.to_string());
        kv("tau", self.tau.to_string());
        kv("tol_sup", self.tol_sup.to_string());
        kv("max_iter", self.max_iter.to_string());
        kv("init", self.init.to_string());
        kv("frame_family", self.frame_family.to_string());
        kv("weight_levels", self.weight_levels.to_string());
        kv("kappa_min", self.kappa_min.to_string());
        kv("kappa_max", self.kappa_max.to_string());
        kv("epsilon_0", self.epsilon_0.to_string());
        kv("factor", self.factor.to_string());
        kv("cauchy_tol", self.cauchy_tol.to_string());
        kv("max_continuation_steps", self.max_continuation_steps.to_string());
        kv("delta", self.delta.to_string());
        kv("env_tol", self.env_tol.to_string());
        kv("env_max_iter", self.env_max_iter.to_string());
        kv("psd_floor", opt(self.psd_floor, "auto"));
        kv("box_lo", list(&self.box_lo));
        kv("box_extent", list(&self.box_extent));
        kv("tol", self.tol.to_string());
        kv("p", self.p.to_string());
        kv("log_timing", self.log_timing.to_string());
        kv("seed", self.seed.to_string());
        out
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_err(line: usize, message: impl Into<String>) -> CmaError {
    CmaError::Parse { line, message: message.into() }
}

fn num<T: FromStr>(v: &str, key: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| parse_err(line, format!("`{key}` expects a number, got `{v}`")))
}

fn real(v: &str, key: &str, line: usize) -> Result<f64> {
    let x: f64 = num(v, key, line)?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn positive(v: &str, key: &str, line: usize) -> Result<f64> {
    let x = real(v, key, line)?;
    if x <= 0.0 {
        return Err(parse_err(line, format!("`{key}` must be positive, got {x}")));
    }
    Ok(x)
}

fn count(v: &str, key: &str, line: usize) -> Result<usize> {
    let x: usize = num(v, key, line)?;
    if x == 0 {
        return Err(parse_err(line, format!("`{key}` must be at least 1")));
    }
    Ok(x)
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn usize_list(v: &str, key: &str, line: usize) -> Result<Option<Vec<usize>>> {
    if v.is_empty() {
        return Ok(None);
    }
    v.split(',').map(|s| num::<usize>(s.trim(), key, line)).collect::<Result<Vec<_>>>().map(Some)
}

/// Parses a configuration file: one `key = value` per line, `#` comments,
/// unknown or repeated keys rejected. Errors name the offending line.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut kappa_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, v) = (key.trim(), value.trim());
        if seen.contains(&key) {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
        let lift = |e: CmaError| parse_err(line, e.to_string());
        match key {
            "mode" => c.mode = if v.is_empty() { None } else { Some(v.parse().map_err(lift)?) },
            "input" => c.input = path(v),
            "input2" => c.input2 = path(v),
            "density" => c.density = path(v),
            "density2" => c.density2 = path(v),
            "boundary" => c.boundary = path(v),
            "output" => c.output = path(v),
            "n" => {
                c.n = num(v, key, line)?;
                if !(1..=3).contains(&c.n) {
                    return Err(parse_err(line, "`n` must be 1, 2 or 3"));
                }
            }
            "m" => {
                c.m = num(v, key, line)?;
                if c.m < 4 {
                    return Err(parse_err(line, "`m` must be at least 4"));
                }
            }
            "epsilon" => {
                c.epsilon = real(v, key, line)?;
                if c.epsilon < 0.0 {
                    return Err(parse_err(line, "`epsilon` must be nonnegative"));
                }
            }
            "omega" => {
                c.omega = if v == "default" {
                    None
                } else {
                    let d = v.split(',').map(|s| real(s.trim(), key, line)).collect::<Result<Vec<_>>>()?;
                    if d.iter().any(|&x| x < 0.0) {
                        return Err(parse_err(line, "`omega` diagonal must be nonnegative"));
                    }
                    Some(d)
                }
            }
            "density_constant" => {
                c.density_constant = if v == "det_omega" {
                    None
                } else {
                    let x = real(v, key, line)?;
                    if x < 0.0 {
                        return Err(parse_err(line, "`density_constant` must be nonnegative"));
                    }
                    Some(x)
                }
            }
            "normalize" => c.normalize = num(v, key, line)?,
            "clip_level" => c.clip_level = if v == "none" { None } else { Some(positive(v, key, line)?) },
            "scheme" => c.scheme = v.parse().map_err(lift)?,
            "tau" => c.tau = if v == "auto" { StepSize::Auto } else { StepSize::Fixed(positive(v, key, line)?) },
            "tol_sup" => c.tol_sup = positive(v, key, line)?,
            "max_iter" => c.max_iter = count(v, key, line)?,
            "init" => c.init = v.parse().map_err(lift)?,
            "frame_family" => c.frame_family = v.parse().map_err(lift)?,
            "weight_levels" => c.weight_levels = count(v, key, line)?,
            "kappa_min" => {
                c.kappa_min = positive(v, key, line)?;
                kappa_line = kappa_line.max(line);
            }
            "kappa_max" => {
                c.kappa_max = positive(v, key, line)?;
                kappa_line = kappa_line.max(line);
            }
            "epsilon_0" => c.epsilon_0 = positive(v, key, line)?,
            "factor" => {
                c.factor = positive(v, key, line)?;
                if c.factor >= 1.0 {
                    return Err(parse_err(line, "`factor` must lie in (0, 1)"));
                }
            }
            "cauchy_tol" => c.cauchy_tol = positive(v, key, line)?,
            "max_continuation_steps" => c.max_continuation_steps = count(v, key, line)?,
            "delta" => c.delta = positive(v, key, line)?,
            "env_tol" => c.env_tol = positive(v, key, line)?,
            "env_max_iter" => c.env_max_iter = count(v, key, line)?,
            "psd_floor" => {
                c.psd_floor = if v == "auto" {
                    None
                } else {
                    let x = real(v, key, line)?;
                    if x < 0.0 {
                        return Err(parse_err(line, "`psd_floor` must be nonnegative"));
                    }
                    Some(x)
                }
            }
            "box_lo" => c.box_lo = usize_list(v, key, line)?,
            "box_extent" => c.box_extent = usize_list(v, key, line)?,
            "tol" => c.tol = positive(v, key, line)?,
            "p" => {
                c.p = real(v, key, line)?;
                if c.p <= 1.0 {
                    return Err(parse_err(line, "`p` must exceed 1"));
                }
            }
            "log_timing" => c.log_timing = num(v, key, line)?,
            "seed" => c.seed = num(v, key, line)?,
            other => return Err(parse_err(line, format!("unknown key `{other}`"))),
        }
        seen.push(key);
    }
    WeightBounds { kappa_min: c.kappa_min, kappa_max: c.kappa_max }.validate().map_err(|e| parse_err(kappa_line, e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn negative_tau_names_its_line() {
        let err = parse_config("epsilon = 1\n\ntau = -1\n").unwrap_err();
        assert!(matches!(err, CmaError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(parse_config("bogus = 1").unwrap_err(), CmaError::Parse { line: 1, .. }));
        assert!(matches!(parse_config("seed = 1\nseed = 2").unwrap_err(), CmaError::Parse { line: 2, .. }));
        assert!(matches!(parse_config("no equals sign").unwrap_err(), CmaError::Parse { line: 1, .. }));
        assert!(matches!(parse_config("max_iter = 1.5").unwrap_err(), CmaError::Parse { line: 1, .. }));
    }

    #[test]
    fn kappa_cross_check() {
        assert!(matches!(parse_config("kappa_min = 2\nkappa_max = 4").unwrap_err(), CmaError::Parse { line: 2, .. }));
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config(
            "mode = solve-compact\ninput = a b.grid\nomega = 1,2\ntau = 0.001\npsd_floor = 0\nbox_lo = 1,2\nclip_level = 3.5\nseed = 18446744073709551615\n",
        )
        .unwrap();
        assert_eq!(c.input.as_deref(), Some(std::path::Path::new("a b.grid")));
        assert_eq!(parse_config(&c.echo()).unwrap(), c);
        assert_eq!(parse_config(&RunConfig::default().echo()).unwrap(), RunConfig::default());
    }
}
