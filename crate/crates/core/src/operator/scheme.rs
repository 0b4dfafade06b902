use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{hamiltonian_plus_from_root, EquationData, Residual};
use crate::error::{CmaError, Result};
use crate::grid::{Domain, GridFunction};
use crate::hermitian::{DirectionSet, HermitianForm};

const NO_NEIGHBOR: u32 = u32::MAX;

/// One control with its stencil flattened to `constant + center·u(x) +
/// Σ coef·u(x + offset)`.
#[derive(Clone, Debug)]
pub struct CompiledControl {
    pub constant: f64,
    pub center: f64,
    pub terms: Vec<(usize, f64)>,
}

/// The Bellman operator compiled against a lattice: distinct stencil
/// offsets, a neighbour table, and per-control coefficients.
#[derive(Clone, Debug)]
pub struct Scheme {
    domain: Arc<Domain>,
    offsets: Vec<Vec<i32>>,
    neighbors: Vec<u32>,
    controls: Vec<CompiledControl>,
    admissible: Vec<usize>,
}

impl Scheme {
    pub fn new(domain: Arc<Domain>, set: &DirectionSet, omega: &HermitianForm) -> Result<Self> {
        if set.n() != domain.n() || omega.n() != domain.n() {
            return Err(CmaError::validation("control set / omega dimension does not match the domain"));
        }
        let h2 = domain.h() * domain.h();
        let mut offsets: Vec<Vec<i32>> = Vec::new();
        let mut lookup: HashMap<Vec<i32>, usize> = HashMap::new();
        let mut controls = Vec::with_capacity(set.len());
        for control in set.controls() {
            let mut constant = 0.0;
            let mut center = 0.0;
            let mut terms = Vec::with_capacity(4 * domain.n());
            for (dir, &w) in control.directions.iter().zip(&control.weights) {
                constant += w * omega.quadratic(&dir.unit());
                let coef = w / (4.0 * h2 * dir.norm_sq() as f64);
                center -= 4.0 * coef;
                let step = dir.real_step();
                let rot = dir.rotated_step();
                for s in [step.clone(), step.iter().map(|c| -c).collect(), rot.clone(), rot.iter().map(|c| -c).collect()] {
                    let id = *lookup.entry(s.clone()).or_insert_with(|| {
                        offsets.push(s);
                        offsets.len() - 1
                    });
                    terms.push((id, coef));
                }
            }
            controls.push(CompiledControl { constant, center, terms });
        }
        let noff = offsets.len();
        let mut neighbors = vec![NO_NEIGHBOR; domain.len() * noff];
        neighbors.par_chunks_mut(noff).enumerate().for_each(|(x, row)| {
            for (k, s) in offsets.iter().enumerate() {
                if let Some(y) = domain.offset(x, s) {
                    row[k] = y as u32;
                }
            }
        });
        let admissible = domain.admissible_points();
        Ok(Scheme { domain, offsets, neighbors, controls, admissible })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn controls(&self) -> &[CompiledControl] {
        &self.controls
    }

    pub fn admissible(&self) -> &[usize] {
        &self.admissible
    }

    pub fn offset_count(&self) -> usize {
        self.offsets.len()
    }

    /// Lattice index of `x + offset`; panics outside a box.
    #[inline]
    pub fn neighbor(&self, x: usize, offset: usize) -> usize {
        let y = self.neighbors[x * self.offsets.len() + offset];
        debug_assert!(y != NO_NEIGHBOR, "stencil leaves the domain at {x}");
        y as usize
    }

    /// Whether every stencil of every control stays on the lattice at `x`.
    pub fn stencil_inside(&self, x: usize) -> bool {
        let noff = self.offsets.len();
        self.neighbors[x * noff..(x + 1) * noff].iter().all(|&y| y != NO_NEIGHBOR)
    }

    #[inline]
    pub fn control_value(&self, values: &[f64], x: usize, c: usize) -> f64 {
        let ctl = &self.controls[c];
        let mut v = ctl.constant + ctl.center * values[x];
        for &(k, coef) in &ctl.terms {
            v += coef * values[self.neighbor(x, k)];
        }
        v
    }

    /// Bellman root at `x` and the first minimizing control.
    #[inline]
    pub fn root_at(&self, values: &[f64], x: usize) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for c in 0..self.controls.len() {
            let v = self.control_value(values, x, c);
            if v < best.0 {
                best = (v, c);
            }
        }
        best
    }

    /// Roots at the given points (parallel, order preserved).
    pub fn roots(&self, values: &[f64], points: &[usize]) -> Vec<(f64, usize)> {
        points.par_iter().map(|&x| self.root_at(values, x)).collect()
    }

    /// Largest `|center|` over controls, the diagonal scale of the scheme.
    pub fn max_center(&self) -> f64 {
        self.controls.iter().map(|c| c.center.abs()).fold(0.0, f64::max)
    }

    /// Root of a constant field (the same at every point).
    pub fn constant_root(&self) -> f64 {
        self.controls.iter().map(|c| c.constant).fold(f64::INFINITY, f64::min)
    }

    pub fn residual(&self, u: &GridFunction, eq: &EquationData) -> Result<Residual> {
        if u.domain() != &*self.domain {
            return Err(CmaError::validation("field does not live on the scheme's domain"));
        }
        let values = u.values();
        let f = eq.density.values();
        let res: Vec<f64> = self
            .admissible
            .par_iter()
            .map(|&x| {
                let (r, _) = self.root_at(values, x);
                hamiltonian_plus_from_root(r, values[x], f[x], eq)
            })
            .collect();
        let mut field = vec![0.0; self.domain.len()];
        let mut sup: f64 = 0.0;
        let mut l1 = 0.0;
        for (&x, &r) in self.admissible.iter().zip(&res) {
            field[x] = r;
            sup = sup.max(r.abs());
            l1 += r.abs();
        }
        let field = GridFunction::new(u.domain_arc().clone(), field)?;
        Ok(Residual { field, sup, l1: l1 * self.domain.cell_volume() })
    }
}
