//! The discrete complex Monge-Ampère operator in Bellman form.
//!
//! At a lattice point the operator is the minimum over controls of
//! `Σ_k w_k [v_k* ω v_k + Δ_{v_k} u(x)]`, the discretization of
//! `det(ω + u_{z z̄})^{1/n}`. It is nondecreasing in every neighbour value
//! and nonincreasing in the centre value, which is what makes the scheme
//! monotone.

mod scheme;

pub use scheme::{CompiledControl, Scheme};

use std::sync::Arc;

use crate::error::{CmaError, Result};
use crate::grid::{directional_second_difference, Domain, GridFunction};
use crate::hermitian::{eigen_decompose, DirectionSet, HermitianForm};

/// Nonnegative density of `μ` with respect to lattice counting measure
/// times `h^{2n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField(GridFunction);

impl DensityField {
    pub fn new(field: GridFunction) -> Result<Self> {
        if field.is_extended() {
            return Err(CmaError::validation("density must be finite"));
        }
        if let Some(i) = field.values().iter().position(|&v| v < 0.0) {
            return Err(CmaError::validation(format!("density is negative at point {i}")));
        }
        Ok(DensityField(field))
    }

    pub fn constant(domain: Arc<Domain>, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(CmaError::validation("density must be nonnegative and finite"));
        }
        Ok(DensityField(GridFunction::constant(domain, c)))
    }

    pub fn field(&self) -> &GridFunction {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn domain(&self) -> &Domain {
        self.0.domain()
    }

    /// `Σ f h^{2n}` over the admissible points.
    pub fn mass(&self) -> f64 {
        let d = self.0.domain();
        d.admissible_points().iter().map(|&i| self.0.get(i)).sum::<f64>() * d.cell_volume()
    }

    /// `min(f, level)`, the bounded approximation of an `L^p` density.
    pub fn clipped(&self, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(CmaError::validation("clip level must be positive"));
        }
        DensityField::new(self.0.map(|v| v.min(level))?)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(CmaError::validation("density scale must be nonnegative"));
        }
        DensityField::new(self.0.scaled(c))
    }
}

/// Right-hand side data of `(ω + dd^c u)^n = e^{ε u} f`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationData {
    pub epsilon: f64,
    pub density: DensityField,
    pub omega: HermitianForm,
    /// Set once `∫ f = ∫ det ω` has been enforced.
    pub normalized: bool,
}

impl EquationData {
    pub fn new(epsilon: f64, density: DensityField, omega: HermitianForm) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(CmaError::validation(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        if omega.n() != density.domain().n() {
            return Err(CmaError::validation("omega dimension does not match the domain"));
        }
        let eig = eigen_decompose(&omega);
        if eig.values()[0] < -1e-12 * (1.0 + omega.norm_inf()) {
            return Err(CmaError::validation("omega must be positive semidefinite"));
        }
        Ok(EquationData { epsilon, density, omega, normalized: false })
    }

    pub fn domain(&self) -> &Domain {
        self.density.domain()
    }

    pub fn domain_arc(&self) -> &Arc<Domain> {
        self.density.field().domain_arc()
    }

    pub fn omega_det(&self) -> f64 {
        eigen_decompose(&self.omega).values().iter().map(|v| v.max(0.0)).product()
    }

    /// `Σ det(ω) h^{2n}` over the admissible points.
    pub fn omega_mass(&self) -> f64 {
        let d = self.domain();
        self.omega_det() * d.admissible_points().len() as f64 * d.cell_volume()
    }

    /// Relative mismatch between `∫ f` and `∫ det ω`.
    pub fn normalization_gap(&self) -> f64 {
        let target = self.omega_mass();
        (self.density.mass() - target).abs() / target.max(f64::MIN_POSITIVE)
    }

    /// Rescales the density so that `∫ f = ∫ det ω`.
    pub fn normalize(mut self) -> Result<Self> {
        let mass = self.density.mass();
        if !(mass > 0.0) {
            return Err(CmaError::validation("cannot normalize a zero density"));
        }
        self.density = self.density.scaled(self.omega_mass() / mass)?;
        self.normalized = true;
        Ok(self)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut out = EquationData::new(epsilon, self.density.clone(), self.omega)?;
        out.normalized = self.normalized;
        Ok(out)
    }

    pub fn with_clipped_density(&self, level: f64) -> Result<Self> {
        EquationData::new(self.epsilon, self.density.clipped(level)?, self.omega)
    }

    pub(crate) fn check_field(&self, u: &GridFunction) -> Result<()> {
        if u.domain() != self.domain() {
            return Err(CmaError::validation("field and density live on different domains"));
        }
        Ok(())
    }
}

/// Jets whose Bellman root falls below `−h²` are inadmissible.
pub fn admissibility_tol(domain: &Domain) -> f64 {
    domain.h() * domain.h()
}

/// Bellman root `min_A Σ_k w_k [v_k* ω v_k + Δ_{v_k} u(x)]` at one point.
pub fn ma_root(u: &GridFunction, x: usize, eq: &EquationData, set: &DirectionSet) -> Result<f64> {
    eq.check_field(u)?;
    if set.n() != u.domain().n() {
        return Err(CmaError::validation("control set dimension does not match the domain"));
    }
    let mut best = f64::INFINITY;
    for control in set.controls() {
        let mut value = 0.0;
        for (dir, &w) in control.directions.iter().zip(&control.weights) {
            value += w * (eq.omega.quadratic(&dir.unit()) + directional_second_difference(u, x, dir)?);
        }
        if value < best {
            best = value;
        }
    }
    Ok(best)
}

/// Subsolution Hamiltonian: `e^{εs} f(x) − max(r, 0)^n`, or `+∞` when the
/// root `r` is below `−h²`.
pub fn hamiltonian_f(x: usize, s: f64, u: &GridFunction, eq: &EquationData, set: &DirectionSet) -> Result<f64> {
    let r = ma_root(u, x, eq, set)?;
    Ok(hamiltonian_from_root(r, s, eq.density.values()[x], eq, u.domain()))
}

/// Supersolution Hamiltonian: same as [`hamiltonian_f`] with the
/// inadmissible branch clamped to `(dd^c)_+ = 0`.
pub fn hamiltonian_f_plus(x: usize, s: f64, u: &GridFunction, eq: &EquationData, set: &DirectionSet) -> Result<f64> {
    let r = ma_root(u, x, eq, set)?;
    Ok(hamiltonian_plus_from_root(r, s, eq.density.values()[x], eq))
}

pub(crate) fn hamiltonian_from_root(r: f64, s: f64, f: f64, eq: &EquationData, domain: &Domain) -> f64 {
    if r < -admissibility_tol(domain) {
        return f64::INFINITY;
    }
    hamiltonian_plus_from_root(r, s, f, eq)
}

pub(crate) fn hamiltonian_plus_from_root(r: f64, s: f64, f: f64, eq: &EquationData) -> f64 {
    let n = eq.omega.n() as i32;
    let source = if f == 0.0 { 0.0 } else { (eq.epsilon * s).exp() * f };
    source - r.max(0.0).powi(n)
}

/// Pointwise supersolution residual with `s = u(x)`.
#[derive(Clone, Debug)]
pub struct Residual {
    /// Zero on box boundary points.
    pub field: GridFunction,
    pub sup: f64,
    /// `Σ |r| h^{2n}` over admissible points.
    pub l1: f64,
}

pub fn residual_field(u: &GridFunction, eq: &EquationData, set: &DirectionSet) -> Result<Residual> {
    eq.check_field(u)?;
    let scheme = Scheme::new(u.domain_arc().clone(), set, &eq.omega)?;
    scheme.residual(u, eq)
}
