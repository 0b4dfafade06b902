//! Certificates for discrete sub/supersolutions, comparison, domination and
//! the weak stability estimate. Everything is evaluated through the same
//! monotone operator the solvers use.

use std::fmt;

use rayon::prelude::*;

use crate::error::{CmaError, Result};
use crate::grid::{DomainKind, GridFunction};
use crate::hermitian::DirectionSet;
use crate::operator::{hamiltonian_from_root, hamiltonian_plus_from_root, EquationData, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    Subsolution,
    Supersolution,
    Comparison,
    Domination,
    Stability,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertificateKind::Subsolution => "subsolution",
            CertificateKind::Supersolution => "supersolution",
            CertificateKind::Comparison => "comparison",
            CertificateKind::Domination => "domination",
            CertificateKind::Stability => "stability",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub pass: bool,
    pub worst_point: usize,
    pub worst_value: f64,
    pub tolerance: f64,
    /// Seed of the randomized trial that produced the inputs, if any.
    pub seed: Option<u64>,
}

impl Certificate {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Single-line `key=value` record for the run log.
    pub fn to_record(&self) -> String {
        let mut s = format!(
            "kind={} pass={} worst_point={} worst_value={:.16e} tolerance={:.16e}",
            self.kind, self.pass, self.worst_point, self.worst_value, self.tolerance
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

fn scheme_for(u: &GridFunction, eq: &EquationData, set: &DirectionSet) -> Result<Scheme> {
    eq.check_field(u)?;
    Scheme::new(u.domain_arc().clone(), set, &eq.omega)
}

/// Pointwise values over the admissible points, reduced to the worst one
/// (largest when `largest`), ties to the lowest index.
fn worst(points: &[usize], values: Vec<f64>, largest: bool) -> (usize, f64) {
    let mut best = (points.first().copied().unwrap_or(0), if largest { f64::NEG_INFINITY } else { f64::INFINITY });
    for (&x, v) in points.iter().zip(values) {
        if (largest && v > best.1) || (!largest && v < best.1) {
            best = (x, v);
        }
    }
    best
}

/// Passes iff `F(x, u(x), u) ≤ tol` at every admissible point.
pub fn check_subsolution(u: &GridFunction, eq: &EquationData, set: &DirectionSet, tol: f64) -> Result<Certificate> {
    let scheme = scheme_for(u, eq, set)?;
    let f = eq.density.values();
    let vals = u.values();
    let pts = scheme.admissible();
    let h: Vec<f64> = pts
        .par_iter()
        .map(|&x| {
            let (r, _) = scheme.root_at(vals, x);
            hamiltonian_from_root(r, vals[x], f[x], eq, u.domain())
        })
        .collect();
    let (worst_point, worst_value) = worst(pts, h, true);
    Ok(Certificate { kind: CertificateKind::Subsolution, pass: worst_value <= tol, worst_point, worst_value, tolerance: tol, seed: None })
}

/// Passes iff `F₊(x, v(x), v) ≥ −tol` at every admissible point.
pub fn check_supersolution(v: &GridFunction, eq: &EquationData, set: &DirectionSet, tol: f64) -> Result<Certificate> {
    let scheme = scheme_for(v, eq, set)?;
    let f = eq.density.values();
    let vals = v.values();
    let pts = scheme.admissible();
    let h: Vec<f64> = pts
        .par_iter()
        .map(|&x| {
            let (r, _) = scheme.root_at(vals, x);
            hamiltonian_plus_from_root(r, vals[x], f[x], eq)
        })
        .collect();
    let (worst_point, worst_value) = worst(pts, h, false);
    Ok(Certificate {
        kind: CertificateKind::Supersolution,
        pass: worst_value >= -tol,
        worst_point,
        worst_value,
        tolerance: tol,
        seed: None,
    })
}

/// Certifies `u ≤ v` for a certified subsolution `u` and supersolution `v`:
/// `max(u − v) ≤ tol` on the torus (needs `ε > 0`), or the interior maximum
/// of `u − v` bounded by the boundary maximum on a box. A failure is a
/// counterexample to the scheme's monotonicity.
pub fn comparison_harness(u: &GridFunction, v: &GridFunction, eq: &EquationData, set: &DirectionSet, tol: f64) -> Result<Certificate> {
    if !u.same_domain(v) {
        return Err(CmaError::validation("u and v live on different domains"));
    }
    let sub = check_subsolution(u, eq, set, tol)?;
    if !sub.pass {
        return Err(CmaError::InvalidInput(format!("u is not a subsolution ({sub})")));
    }
    let sup = check_supersolution(v, eq, set, tol)?;
    if !sup.pass {
        return Err(CmaError::InvalidInput(format!("v is not a supersolution ({sup})")));
    }
    let d = u.domain();
    let diff: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
    let (worst_point, worst_value) = match d.kind() {
        DomainKind::Torus => {
            if eq.epsilon <= 0.0 {
                return Err(CmaError::validation("comparison on the torus needs ε > 0"));
            }
            worst(&(0..d.len()).collect::<Vec<_>>(), diff, true)
        }
        DomainKind::Box => {
            let boundary = d.boundary_points();
            let bmax = boundary.iter().map(|&x| diff[x]).fold(f64::NEG_INFINITY, f64::max);
            if bmax > tol {
                return Err(CmaError::InvalidInput(format!("u exceeds v on the boundary by {bmax:.3e}")));
            }
            let interior = d.admissible_points();
            let vals = interior.iter().map(|&x| diff[x] - bmax).collect();
            worst(&interior, vals, true)
        }
    };
    Ok(Certificate { kind: CertificateKind::Comparison, pass: worst_value <= tol, worst_point, worst_value, tolerance: tol, seed: None })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominationReport {
    /// Global verdict `ψ ≤ φ + tol`.
    pub certificate: Certificate,
    /// Worst `ψ − φ` where the Monge-Ampère mass of `φ` exceeds `mass_floor`.
    pub support_worst: (usize, f64),
    pub support_pass: bool,
    pub mass_floor: f64,
    /// `ψ ≤ φ` on the support of `MA(φ)` but not everywhere: the
    /// discrete domination principle fails on an `MA(φ)`-null set.
    pub flagged: bool,
}

/// Domination diagnostic: where `MA(φ)` carries mass above
/// `h^{2n}·1e-6`, `ψ ≤ φ + tol` must hold, and then it is checked globally.
pub fn domination_check(phi: &GridFunction, psi: &GridFunction, eq: &EquationData, set: &DirectionSet, tol: f64) -> Result<DominationReport> {
    if !phi.same_domain(psi) {
        return Err(CmaError::validation("φ and ψ live on different domains"));
    }
    let scheme = scheme_for(phi, eq, set)?;
    let d = phi.domain();
    let n = d.n() as i32;
    let vol = d.cell_volume();
    let mass_floor = vol * 1e-6;
    let pts = scheme.admissible();
    let mass: Vec<f64> = pts.par_iter().map(|&x| scheme.root_at(phi.values(), x).0.max(0.0).powi(n) * vol).collect();
    let support: Vec<usize> = pts.iter().zip(&mass).filter(|(_, &m)| m > mass_floor).map(|(&x, _)| x).collect();
    let diff = |x: usize| psi.get(x) - phi.get(x);
    let support_worst = worst(&support, support.iter().map(|&x| diff(x)).collect(), true);
    let support_pass = support.is_empty() || support_worst.1 <= tol;
    let all: Vec<usize> = (0..d.len()).collect();
    let (worst_point, worst_value) = worst(&all, all.iter().map(|&x| diff(x)).collect(), true);
    let pass = worst_value <= tol;
    Ok(DominationReport {
        certificate: Certificate { kind: CertificateKind::Domination, pass, worst_point, worst_value, tolerance: tol, seed: None },
        support_worst,
        support_pass,
        mass_floor,
        flagged: support_pass && !pass,
    })
}

/// One direction of the weak stability estimate, `ψ` against `φ` whose
/// Monge-Ampère density is `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySide {
    /// `sup (ψ − φ)^+` after normalizing both to `sup = 0`.
    pub sup_diff: f64,
    /// `Σ (ψ − φ)^+ h^{2n}`.
    pub l1_diff: f64,
    /// `‖f‖_{L^p}`.
    pub density_norm: f64,
    /// `sup / (‖f‖^{1/n} ‖·‖_1^γ)`; `NaN` when degenerate.
    pub constant: f64,
    /// Both sides vanish (`0/0`).
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    /// `ψ = φ₂` against `φ = φ₁` with density `f₁`.
    pub forward: StabilitySide,
    /// `ψ = φ₁` against `φ = φ₂` with density `f₂`.
    pub backward: StabilitySide,
}

impl StabilityReport {
    pub fn degenerate(&self) -> bool {
        self.forward.degenerate && self.backward.degenerate
    }

    /// Largest implied constant over both directions, ignoring degenerate ones.
    pub fn constant(&self) -> f64 {
        [&self.forward, &self.backward].iter().filter(|s| !s.degenerate).map(|s| s.constant).fold(f64::NAN, f64::max)
    }
}

/// Measures the ingredients of `sup(ψ−φ)^+ ≤ C ‖f‖_p^{1/n} ‖(ψ−φ)^+‖_1^γ`
/// with `γ = 1/(nq + 2)`, `q = p/(p − 1)`, in both directions.
pub fn stability_diagnostic(phi1: &GridFunction, phi2: &GridFunction, f1: &GridFunction, f2: &GridFunction, p: f64) -> Result<StabilityReport> {
    if !(p > 1.0) {
        return Err(CmaError::validation(format!("stability exponent p must exceed 1, got {p}")));
    }
    if !(phi1.same_domain(phi2) && phi1.same_domain(f1) && phi1.same_domain(f2)) {
        return Err(CmaError::validation("stability inputs live on different domains"));
    }
    let d = phi1.domain();
    let n = d.n() as f64;
    let q = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let gamma = 1.0 / (n * q + 2.0);
    let vol = d.cell_volume();
    let side = |phi: &GridFunction, psi: &GridFunction, f: &GridFunction| -> StabilitySide {
        let (mphi, mpsi) = (phi.max(), psi.max());
        let diffs: Vec<f64> = phi.values().iter().zip(psi.values()).map(|(a, b)| ((b - mpsi) - (a - mphi)).max(0.0)).collect();
        let sup_diff = diffs.iter().copied().fold(0.0, f64::max);
        let l1_diff = diffs.iter().sum::<f64>() * vol;
        let density_norm = if p.is_infinite() {
            f.values().iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            (f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol).powf(1.0 / p)
        };
        let denom = density_norm.powf(1.0 / n) * l1_diff.powf(gamma);
        let degenerate = sup_diff == 0.0 && denom == 0.0;
        let constant = if degenerate { f64::NAN } else { sup_diff / denom };
        StabilitySide { sup_diff, l1_diff, density_norm, constant, degenerate }
    };
    Ok(StabilityReport { p, q, gamma, forward: side(phi1, phi2, f1), backward: side(phi2, phi1, f2) })
}
