//! Text grid files.
//!
//! ```text
//! CMA-GRID v1 kind=box n=1 shape=5,5 h=0.25
//! <interior values, row-major, one per line>
//! BOUNDARY
//! <boundary values, row-major>
//! ```
//!
//! Torus files have no `BOUNDARY` section. Values carry 17 significant
//! digits, so a save/load round trip is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{CmaError, Result};
use crate::grid::{Domain, DomainKind, GridFunction};

const MAGIC: &str = "CMA-GRID";
const VERSION: &str = "v1";
const BOUNDARY: &str = "BOUNDARY";

pub fn header(domain: &Domain) -> String {
    let shape: Vec<String> = domain.shape().iter().map(|m| m.to_string()).collect();
    format!("{MAGIC} {VERSION} kind={} n={} shape={} h={}", domain.kind(), domain.n(), shape.join(","), domain.h())
}

pub fn format_grid(g: &GridFunction) -> Result<String> {
    if g.values().iter().any(|v| !v.is_finite()) {
        return Err(CmaError::GridFormat("cannot save non-finite values".into()));
    }
    let d = g.domain();
    let mut out = String::with_capacity(26 * (d.len() + 2));
    out.push_str(&header(d));
    out.push('\n');
    let mut push = |x: usize| {
        let _ = writeln!(out, "{:.16e}", g.get(x));
    };
    match d.kind() {
        DomainKind::Torus => (0..d.len()).for_each(&mut push),
        DomainKind::Box => {
            d.admissible_points().into_iter().for_each(&mut push);
            out.push_str(BOUNDARY);
            out.push('\n');
            d.boundary_points().into_iter().for_each(|x| {
                let _ = writeln!(out, "{:.16e}", g.get(x));
            });
        }
    }
    Ok(out)
}

fn parse_header(line: &str) -> Result<Domain> {
    let bad = |m: String| CmaError::GridFormat(m);
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(bad(format!("missing `{MAGIC}` magic")));
    }
    match tokens.next() {
        Some(VERSION) => {}
        other => return Err(bad(format!("unsupported version {other:?}"))),
    }
    let (mut kind, mut n, mut shape, mut h) = (None, None, None, None);
    for tok in tokens {
        let (key, value) = tok.split_once('=').ok_or_else(|| bad(format!("malformed header field `{tok}`")))?;
        let dup = |set: bool| if set { Err(bad(format!("duplicate header field `{key}`"))) } else { Ok(()) };
        match key {
            "kind" => {
                dup(kind.is_some())?;
                kind = Some(value.parse::<DomainKind>().map_err(|_| bad(format!("unknown kind `{value}`")))?);
            }
            "n" => {
                dup(n.is_some())?;
                n = Some(value.parse::<usize>().map_err(|_| bad(format!("bad n `{value}`")))?);
            }
            "shape" => {
                dup(shape.is_some())?;
                let s: std::result::Result<Vec<usize>, _> = value.split(',').map(str::parse::<usize>).collect();
                shape = Some(s.map_err(|_| bad(format!("bad shape `{value}`")))?);
            }
            "h" => {
                dup(h.is_some())?;
                h = Some(value.parse::<f64>().map_err(|_| bad(format!("bad spacing `{value}`")))?);
            }
            other => return Err(bad(format!("unknown header field `{other}`"))),
        }
    }
    let missing = |k: &str| bad(format!("header lacks `{k}`"));
    Domain::new(kind.ok_or_else(|| missing("kind"))?, n.ok_or_else(|| missing("n"))?, shape.ok_or_else(|| missing("shape"))?, h.ok_or_else(|| missing("h"))?)
        .map_err(|e| bad(format!("invalid domain: {e}")))
}

fn parse_value(line: &str, lineno: usize) -> Result<f64> {
    let v: f64 = line.parse().map_err(|_| CmaError::GridFormat(format!("line {lineno}: not a number: `{line}`")))?;
    if !v.is_finite() {
        return Err(CmaError::GridFormat(format!("line {lineno}: non-finite value")));
    }
    Ok(v)
}

pub fn parse_grid(text: &str) -> Result<GridFunction> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, head) = lines.next().ok_or_else(|| CmaError::GridFormat("empty file".into()))?;
    let domain = Arc::new(parse_header(head)?);
    let mut body: Vec<(usize, &str)> = lines.collect();
    while body.last().is_some_and(|(_, l)| l.is_empty()) {
        body.pop();
    }
    // Cheap count check before any lattice-sized allocation.
    let separators = usize::from(domain.kind() == DomainKind::Box);
    if body.len() != domain.len() + separators {
        return Err(CmaError::GridFormat(format!("wrong value count: expected {} values, found {} lines", domain.len(), body.len())));
    }
    let (first, second): (&[(usize, &str)], &[(usize, &str)]) = match domain.kind() {
        DomainKind::Torus => (&body, &[]),
        DomainKind::Box => {
            let split = body.iter().position(|(_, l)| *l == BOUNDARY).ok_or_else(|| CmaError::GridFormat("box file lacks the BOUNDARY section".into()))?;
            (&body[..split], &body[split + 1..])
        }
    };
    let (inner, outer) = match domain.kind() {
        DomainKind::Torus => ((0..domain.len()).collect::<Vec<_>>(), Vec::new()),
        DomainKind::Box => (domain.admissible_points(), domain.boundary_points()),
    };
    if first.len() != inner.len() || second.len() != outer.len() {
        return Err(CmaError::GridFormat(format!(
            "wrong value count: expected {}+{}, found {}+{}",
            inner.len(),
            outer.len(),
            first.len(),
            second.len()
        )));
    }
    let mut values = vec![0.0; domain.len()];
    for (pts, lines) in [(&inner, first), (&outer, second)] {
        for (&x, &(lineno, l)) in pts.iter().zip(lines) {
            values[x] = parse_value(l, lineno)?;
        }
    }
    GridFunction::new(domain, values)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridFunction> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CmaError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_grid(&text)
}

/// Loads a grid and checks it lives on `expected`.
pub fn load_grid_on(path: impl AsRef<Path>, expected: &Domain) -> Result<GridFunction> {
    let g = load_grid(path)?;
    if g.domain() != expected {
        return Err(CmaError::GridFormat(format!("header `{}` does not match the expected `{}`", header(g.domain()), header(expected))));
    }
    Ok(g)
}

pub fn save_grid(g: &GridFunction, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_grid(g)?)?;
    Ok(())
}
