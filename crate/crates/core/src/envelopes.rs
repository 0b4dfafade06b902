//! Sup/inf-convolution, the plurisubharmonic projection, and balayage.

use rayon::prelude::*;

use crate::error::{CmaError, Result};
use crate::grid::{Domain, DomainKind, GridFunction, SubBox};
use crate::hermitian::DirectionSet;
use crate::operator::{EquationData, Scheme};
use crate::solvers::engine::{Engine, Target};
use crate::solvers::{SolverReport, Termination};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeParams {
    /// Penalty scale of sup/inf-convolution.
    pub delta: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Slack of the discrete psh cone, `root ≥ −psd_floor`; `None` means `h²`.
    pub psd_floor: Option<f64>,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        EnvelopeParams { delta: 0.1, max_iter: 200, tol: 1e-10, psd_floor: None }
    }
}

impl EnvelopeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CmaError::validation("delta must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(CmaError::validation("envelope tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(CmaError::validation("envelope max_iter must be positive"));
        }
        if let Some(f) = self.psd_floor {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(CmaError::validation("psd_floor must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn floor(&self, domain: &Domain) -> f64 {
        self.psd_floor.unwrap_or(domain.h() * domain.h())
    }
}

/// Lattice offsets within `radius` (Euclidean, in cells), restricted to
/// `|k_a| ≤ m/2` on the torus where larger steps only revisit points.
fn ball_offsets(domain: &Domain, radius: f64) -> Vec<(Vec<i32>, f64)> {
    let dims = domain.shape().len();
    let r = radius.floor() as i64;
    let limits: Vec<i64> = domain
        .shape()
        .iter()
        .map(|&m| if domain.is_torus() { r.min(m as i64 / 2) } else { r.min(m as i64 - 1) })
        .collect();
    let mut out = Vec::new();
    let mut k: Vec<i64> = limits.iter().map(|l| -l).collect();
    loop {
        let d2: i64 = k.iter().map(|c| c * c).sum();
        if (d2 as f64) <= radius * radius + 1e-9 {
            out.push((k.iter().map(|&c| c as i32).collect(), d2 as f64));
        }
        let mut a = dims;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if k[a] < limits[a] {
                k[a] += 1;
                break;
            }
            k[a] = -limits[a];
        }
    }
}

/// `u^δ(x) = max_y u(y) − |y − x|²/(2δ²)` over lattice points within
/// `A δ`, `A = ⌈√(2 osc u)⌉ + 1`, which reaches every point that can attain
/// the supremum. On a box the ball is truncated at the boundary; the box
/// must keep at least one interior point at distance `A δ` from the edge.
pub fn sup_convolution(u: &GridFunction, delta: f64) -> Result<GridFunction> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CmaError::validation("delta must be positive"));
    }
    if u.is_extended() {
        return Err(CmaError::validation("sup-convolution needs a bounded field"));
    }
    let d = u.domain();
    let a = (2.0 * u.oscillation()).sqrt().ceil() + 1.0;
    let radius = a * delta / d.h();
    if d.kind() == DomainKind::Box {
        let r = radius.ceil() as usize;
        if d.shape().iter().any(|&m| m < 2 * r + 3) {
            return Err(CmaError::DomainTooSmall(format!(
                "search radius {r} cells leaves no interior point of a box with extents {:?}",
                d.shape()
            )));
        }
    }
    let offsets = ball_offsets(d, radius);
    let h2 = d.h() * d.h();
    let scale = 1.0 / (2.0 * delta * delta);
    let values: Vec<f64> = (0..d.len())
        .into_par_iter()
        .map(|x| {
            let mut best = u.get(x);
            for (k, d2) in &offsets {
                if let Some(y) = d.offset(x, k) {
                    let v = u.get(y) - d2 * h2 * scale;
                    if v > best {
                        best = v;
                    }
                }
            }
            best
        })
        .collect();
    GridFunction::new(u.domain_arc().clone(), values)
}

/// `v_δ = −(−v)^δ`.
pub fn inf_convolution(v: &GridFunction, delta: f64) -> Result<GridFunction> {
    let neg = v.map(|x| -x)?;
    sup_convolution(&neg, delta)?.map(|x| -x)
}

fn unknowns(domain: &Domain) -> Vec<usize> {
    match domain.kind() {
        DomainKind::Torus => (0..domain.len()).collect(),
        DomainKind::Box => domain.admissible_points(),
    }
}

/// Largest `P ≤ h` with Bellman root `≥ −psd_floor` at every admissible
/// point; box boundary values are kept. Solved as the obstacle problem
/// `min(h − P, root(P) + floor) = 0` by policy iteration from `P = h`.
pub fn psh_projection(h: &GridFunction, eq: &EquationData, set: &DirectionSet, params: &EnvelopeParams) -> Result<GridFunction> {
    params.validate()?;
    eq.check_field(h)?;
    if h.is_extended() {
        return Err(CmaError::validation("obstacle must be bounded"));
    }
    let domain = h.domain_arc().clone();
    let scheme = Scheme::new(domain.clone(), set, &eq.omega)?;
    let target = Target::Obstacle { obstacle: h.values(), floor: params.floor(&domain), weight: scheme.max_center().max(1.0) };
    let engine = Engine::new(&scheme, unknowns(&domain), target);
    let mut values = h.values().to_vec();
    let mut report = SolverReport::new();
    engine.policy_iteration(&mut values, params.tol, params.max_iter, &mut report, false)?;
    if report.termination != Termination::Converged {
        return Err(CmaError::IterationLimit { report: Box::new(report) });
    }
    GridFunction::new(domain, values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactReport {
    pub pass: bool,
    /// Off the contact set: worst `max(root(P), 0)^n` and where.
    pub worst_off_contact: (usize, f64),
    /// `Σ max(root(P), 0)^n h^{2n}` over admissible points.
    pub mass_projection: f64,
    /// The same for `h`, restricted to the contact set.
    pub mass_contact: f64,
    pub contact_points: usize,
    pub identity_tol: f64,
}

/// Checks that the Monge-Ampère measure of `P = P(h)` vanishes off the
/// contact set `{P ≥ h − contact_tol}` and that its total mass equals that
/// of `h` on the contact set.
pub fn contact_set_identity_check(
    h: &GridFunction,
    p: &GridFunction,
    eq: &EquationData,
    set: &DirectionSet,
    identity_tol: f64,
    contact_tol: f64,
) -> Result<ContactReport> {
    eq.check_field(h)?;
    eq.check_field(p)?;
    let domain = h.domain_arc().clone();
    let scheme = Scheme::new(domain.clone(), set, &eq.omega)?;
    let n = domain.n() as i32;
    let rows: Vec<(usize, bool, f64, f64)> = scheme
        .admissible()
        .par_iter()
        .map(|&x| {
            let (rp, _) = scheme.root_at(p.values(), x);
            let (rh, _) = scheme.root_at(h.values(), x);
            let contact = p.get(x) >= h.get(x) - contact_tol;
            (x, contact, rp.max(0.0).powi(n), rh.max(0.0).powi(n))
        })
        .collect();
    let vol = domain.cell_volume();
    let mut worst = (scheme.admissible().first().copied().unwrap_or(0), 0.0);
    let (mut mass_p, mut mass_c, mut count) = (0.0, 0.0, 0);
    for (x, contact, mp, mh) in rows {
        mass_p += mp * vol;
        if contact {
            mass_c += mh * vol;
            count += 1;
        } else if mp > worst.1 {
            worst = (x, mp);
        }
    }
    let pass = worst.1 <= identity_tol && (mass_p - mass_c).abs() <= identity_tol;
    Ok(ContactReport {
        pass,
        worst_off_contact: worst,
        mass_projection: mass_p,
        mass_contact: mass_c,
        contact_points: count,
        identity_tol,
    })
}

/// Replaces `u` in the sub-box `b` by the solution of the local Dirichlet
/// problem whose boundary data are the surrounding values of `u`.
pub fn balayage(u: &GridFunction, b: &SubBox, eq: &EquationData, set: &DirectionSet, params: &EnvelopeParams) -> Result<GridFunction> {
    params.validate()?;
    eq.check_field(u)?;
    if u.is_extended() {
        return Err(CmaError::validation("balayage needs a finite field"));
    }
    let domain = u.domain_arc().clone();
    b.validate(&domain)?;
    let scheme = Scheme::new(domain.clone(), set, &eq.omega)?;
    let engine = Engine::new(&scheme, b.points(&domain), Target::Equation(eq));
    let mut values = u.values().to_vec();
    let mut report = SolverReport::new();
    engine.policy_iteration(&mut values, params.tol, params.max_iter, &mut report, false)?;
    if report.termination != Termination::Converged {
        return Err(CmaError::IterationLimit { report: Box::new(report) });
    }
    GridFunction::new(domain, values)
}
