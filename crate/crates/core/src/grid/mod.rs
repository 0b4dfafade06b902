//! Lattices over flat tori and boxes in `C^n` and sampled fields on them.
//!
//! Real axes are interleaved (`x_1, y_1, x_2, y_2, …`) and points are stored
//! row-major with the last axis fastest. Torus axes have period one, so the
//! spacing is `1/m` on every axis. Box coordinates are centered at the
//! origin; the outermost layer of lattice points is the boundary.

mod stencil;

pub use stencil::{directional_second_difference, discrete_complex_hessian, lattice_direction};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{CmaError, Result};
use crate::hermitian::MAX_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Torus,
    Box,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Torus => "torus",
            DomainKind::Box => "box",
        })
    }
}

impl FromStr for DomainKind {
    type Err = CmaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(DomainKind::Torus),
            "box" => Ok(DomainKind::Box),
            other => Err(CmaError::validation(format!("unknown domain kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    n: usize,
    shape: Vec<usize>,
    strides: Vec<usize>,
    h: f64,
}

impl Domain {
    pub fn new(kind: DomainKind, n: usize, shape: Vec<usize>, h: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(CmaError::validation(format!("complex dimension {n} unsupported (1..=3)")));
        }
        if shape.len() != 2 * n {
            return Err(CmaError::validation(format!("expected {} extents, got {}", 2 * n, shape.len())));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(CmaError::validation(format!("spacing must be positive, got {h}")));
        }
        let min_extent = match kind {
            DomainKind::Torus => 4,
            DomainKind::Box => 5,
        };
        if let Some(&m) = shape.iter().find(|&&m| m < min_extent) {
            return Err(CmaError::validation(format!("{kind} extents must be >= {min_extent}, got {m}")));
        }
        if kind == DomainKind::Torus {
            for &m in &shape {
                if (h * m as f64 - 1.0).abs() > 1e-12 {
                    return Err(CmaError::validation(format!("torus spacing {h} does not divide the unit period into {m} cells")));
                }
            }
        }
        let total = shape.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m));
        match total {
            Some(t) if t <= u32::MAX as usize => {}
            _ => return Err(CmaError::validation("lattice too large")),
        }
        let mut strides = vec![1usize; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Domain { kind, n, shape, strides, h })
    }

    /// Periodic lattice with `m` cells on every real axis.
    pub fn torus(n: usize, m: usize) -> Result<Self> {
        Self::new(DomainKind::Torus, n, vec![m; 2 * n], 1.0 / m as f64)
    }

    /// Box with `m` points per axis, spacing `h`, centered at the origin.
    pub fn cube(n: usize, m: usize, h: f64) -> Result<Self> {
        Self::new(DomainKind::Box, n, vec![m; 2 * n], h)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_torus(&self) -> bool {
        self.kind == DomainKind::Torus
    }

    /// `h^{2n}`, the lattice cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(2 * self.n as i32)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        self.coords_into(index, &mut out);
        out
    }

    pub fn coords_into(&self, mut index: usize, out: &mut [usize]) {
        for (a, &s) in self.strides.iter().enumerate() {
            out[a] = index / s;
            index %= s;
        }
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Real coordinate of lattice index `i` on `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        match self.kind {
            DomainKind::Torus => i as f64 * self.h,
            DomainKind::Box => (i as f64 - 0.5 * (self.shape[axis] - 1) as f64) * self.h,
        }
    }

    pub fn position(&self, index: usize) -> Vec<f64> {
        self.coords(index).iter().enumerate().map(|(a, &i)| self.coordinate(a, i)).collect()
    }

    /// Index of `index + step`; wraps on the torus, `None` outside a box.
    pub fn offset(&self, index: usize, step: &[i32]) -> Option<usize> {
        let mut target = 0usize;
        let mut rest = index;
        for (a, &s) in self.strides.iter().enumerate() {
            let c = (rest / s) as i64;
            rest %= s;
            let m = self.shape[a] as i64;
            let mut t = c + step[a] as i64;
            match self.kind {
                DomainKind::Torus => t = t.rem_euclid(m),
                DomainKind::Box => {
                    if t < 0 || t >= m {
                        return None;
                    }
                }
            }
            target += t as usize * s;
        }
        Some(target)
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        if self.kind == DomainKind::Torus {
            return false;
        }
        let mut rest = index;
        for (a, &s) in self.strides.iter().enumerate() {
            let c = rest / s;
            rest %= s;
            if c == 0 || c + 1 == self.shape[a] {
                return true;
            }
        }
        false
    }

    /// Points where the scheme is evaluated: every point of a torus, the
    /// interior of a box.
    pub fn admissible_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_boundary(i)).collect()
    }

    pub fn boundary_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Displacement `to − from` in real coordinates; minimal image on the torus.
    pub fn displacement(&self, from: usize, to: usize) -> Vec<f64> {
        let (a, b) = (self.coords(from), self.coords(to));
        (0..self.shape.len())
            .map(|ax| {
                let mut d = b[ax] as i64 - a[ax] as i64;
                if self.kind == DomainKind::Torus {
                    let m = self.shape[ax] as i64;
                    d = d.rem_euclid(m);
                    if 2 * d >= m {
                        d -= m;
                    }
                }
                d as f64 * self.h
            })
            .collect()
    }
}

/// A real field sampled at every lattice point.
///
/// Values are finite unless the field is flagged extended, in which case
/// `-∞` is also allowed (envelope inputs only).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
    extended: bool,
}

impl GridFunction {
    pub fn new(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(CmaError::validation(format!("expected {} values, got {}", domain.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CmaError::validation(format!("non-finite value at point {i}")));
        }
        Ok(GridFunction { domain, values, extended: false })
    }

    pub fn new_extended(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(CmaError::validation(format!("expected {} values, got {}", domain.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(CmaError::validation(format!("value at point {i} is NaN or +inf")));
        }
        if values.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(CmaError::validation("field is identically -inf"));
        }
        Ok(GridFunction { domain, values, extended: true })
    }

    pub fn constant(domain: Arc<Domain>, c: f64) -> Self {
        assert!(c.is_finite());
        let len = domain.len();
        GridFunction { domain, values: vec![c; len], extended: false }
    }

    /// Samples `f` at the real coordinates of every lattice point.
    pub fn from_fn(domain: Arc<Domain>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..domain.len()).map(|i| f(&domain.position(i))).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn domain_arc(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Oscillation over the finite values.
    pub fn oscillation(&self) -> f64 {
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        if self.extended {
            Self::new_extended(self.domain.clone(), values)
        } else {
            Self::new(self.domain.clone(), values)
        }
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_domain(other) {
            return Err(CmaError::validation("grid functions live on different domains"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        if self.extended || other.extended {
            Self::new_extended(self.domain.clone(), values)
        } else {
            Self::new(self.domain.clone(), values)
        }
    }

    pub fn pointwise_max(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    pub fn pointwise_min(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn shifted(&self, c: f64) -> Self {
        GridFunction { domain: self.domain.clone(), values: self.values.iter().map(|v| v + c).collect(), extended: self.extended }
    }

    pub fn scaled(&self, t: f64) -> Self {
        GridFunction { domain: self.domain.clone(), values: self.values.iter().map(|v| v * t).collect(), extended: self.extended }
    }

    /// `max |a − b|` over all points.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Samples `value + ⟨gradient, d⟩ + ½ dᵀ Q d` with `d` the displacement from
/// `center` (minimal image on the torus).
pub fn grid_quadratic(domain: Arc<Domain>, center: usize, value: f64, gradient: &[f64], q: &[f64]) -> Result<GridFunction> {
    let m = 2 * domain.n();
    if gradient.len() != m || q.len() != m * m {
        return Err(CmaError::validation("gradient/Hessian size does not match the domain"));
    }
    if center >= domain.len() {
        return Err(CmaError::validation("center outside the lattice"));
    }
    let values = (0..domain.len())
        .map(|i| {
            let d = domain.displacement(center, i);
            let mut v = value;
            for a in 0..m {
                v += gradient[a] * d[a];
                for b in 0..m {
                    v += 0.5 * d[a] * q[a * m + b] * d[b];
                }
            }
            v
        })
        .collect();
    GridFunction::new(domain, values)
}

/// An axis-aligned block of lattice points, wrapped on the torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubBox {
    pub lo: Vec<usize>,
    pub extent: Vec<usize>,
}

impl SubBox {
    /// Checks the block lies strictly inside the domain: within the box
    /// interior, or at most `m − 1` cells per torus axis.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let dims = domain.shape().len();
        if self.lo.len() != dims || self.extent.len() != dims {
            return Err(CmaError::validation(format!("sub-box needs {dims} corner and extent entries")));
        }
        for a in 0..dims {
            let m = domain.shape()[a];
            if self.extent[a] == 0 {
                return Err(CmaError::validation("sub-box extents must be positive"));
            }
            match domain.kind() {
                DomainKind::Torus => {
                    if self.lo[a] >= m || self.extent[a] > m - 1 {
                        return Err(CmaError::validation(format!("sub-box axis {a} is not strictly inside the torus")));
                    }
                }
                DomainKind::Box => {
                    if self.lo[a] < 1 || self.lo[a] + self.extent[a] > m - 1 {
                        return Err(CmaError::validation(format!("sub-box axis {a} leaves the box interior")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Lattice indices of the block, in row-major order of the block.
    pub fn points(&self, domain: &Domain) -> Vec<usize> {
        let dims = self.extent.len();
        let count: usize = self.extent.iter().product();
        let mut out = Vec::with_capacity(count);
        let mut local = vec![0usize; dims];
        for _ in 0..count {
            let coords: Vec<usize> = (0..dims).map(|a| (self.lo[a] + local[a]) % domain.shape()[a]).collect();
            out.push(domain.index(&coords));
            for a in (0..dims).rev() {
                local[a] += 1;
                if local[a] < self.extent[a] {
                    break;
                }
                local[a] = 0;
            }
        }
        out
    }
}
