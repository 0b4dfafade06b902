//! Quantized control sets for the Bellman form of `det(H)^{1/n}`.
//!
//! For `H ≥ 0`, `det(H)^{1/n} = inf { tr(A H) : A > 0, det A = n^{-n} }`.
//! A [`DirectionSet`] replaces the infimum by a minimum over finitely many
//! controls `A = Σ w_k v_k v_k*` whose frames `v_k` step between lattice
//! points, so that every trace term becomes a monotone second difference.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::{HermitianForm, MAX_DIM};
use crate::error::{CmaError, Result};

/// A direction `v = w / |w|` with `w` a Gaussian-integer vector whose
/// components lie in `{0, ±1, ±i, ±1±i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeDirection {
    n: usize,
    coeffs: [(i8, i8); MAX_DIM],
}

impl LatticeDirection {
    pub fn new(coeffs: &[(i8, i8)]) -> Result<Self> {
        let n = coeffs.len();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(CmaError::validation(format!("complex dimension {n} unsupported")));
        }
        let mut c = [(0i8, 0i8); MAX_DIM];
        for (slot, &(re, im)) in c.iter_mut().zip(coeffs) {
            if re.abs() > 1 || im.abs() > 1 {
                return Err(CmaError::validation(format!(
                    "direction component {re}{im:+}i is not lattice-representable"
                )));
            }
            *slot = (re, im);
        }
        if c.iter().all(|&(re, im)| re == 0 && im == 0) {
            return Err(CmaError::validation("zero direction"));
        }
        Ok(LatticeDirection { n, coeffs: c })
    }

    pub fn axis(n: usize, j: usize) -> Self {
        let mut c = vec![(0i8, 0i8); n];
        c[j] = (1, 0);
        Self::new(&c).expect("axis direction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|w|²`, the squared length of the integer step in units of `h`.
    pub fn norm_sq(&self) -> u32 {
        self.coeffs[..self.n].iter().map(|&(a, b)| (a as i32 * a as i32 + b as i32 * b as i32) as u32).sum()
    }

    /// Real lattice step of `w` in interleaved coordinates.
    pub fn real_step(&self) -> Vec<i32> {
        self.coeffs[..self.n].iter().flat_map(|&(a, b)| [a as i32, b as i32]).collect()
    }

    /// Real lattice step of `i·w`.
    pub fn rotated_step(&self) -> Vec<i32> {
        self.coeffs[..self.n].iter().flat_map(|&(a, b)| [-(b as i32), a as i32]).collect()
    }

    pub fn unit(&self) -> Vec<Complex64> {
        let s = (self.norm_sq() as f64).sqrt();
        self.coeffs[..self.n].iter().map(|&(a, b)| Complex64::new(a as f64 / s, b as f64 / s)).collect()
    }
}

/// One Bellman control: an orthonormal lattice frame with positive weights
/// whose product is `n^{-n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Control {
    pub directions: Vec<LatticeDirection>,
    pub weights: Vec<f64>,
}

impl Control {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// `A = Σ w_k v_k v_k*`.
    pub fn matrix(&self) -> HermitianForm {
        let n = self.n();
        let mut a = HermitianForm::zeros(n);
        for (d, &w) in self.directions.iter().zip(&self.weights) {
            a = a + HermitianForm::outer(&d.unit()).scaled(w);
        }
        a
    }

    /// `tr(A H) = Σ w_k v_k* H v_k`.
    pub fn trace_with(&self, h: &HermitianForm) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(d, &w)| w * h.quadratic(&d.unit())).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameFamily {
    Axes,
    AxesAndDiagonals,
}

impl fmt::Display for FrameFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameFamily::Axes => "axes",
            FrameFamily::AxesAndDiagonals => "axes+diagonals",
        })
    }
}

impl FromStr for FrameFamily {
    type Err = CmaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axes" => Ok(FrameFamily::Axes),
            "axes+diagonals" => Ok(FrameFamily::AxesAndDiagonals),
            other => Err(CmaError::validation(format!("unknown frame family `{other}`"))),
        }
    }
}

/// Raw weight-ratio range before projection onto `∏ w = n^{-n}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightBounds {
    pub kappa_min: f64,
    pub kappa_max: f64,
}

impl Default for WeightBounds {
    fn default() -> Self {
        WeightBounds { kappa_min: 1.0 / 16.0, kappa_max: 16.0 }
    }
}

impl WeightBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_min > 0.0 && self.kappa_min <= 1.0 && self.kappa_max >= 1.0 && self.kappa_max.is_finite()) {
            return Err(CmaError::validation(format!(
                "weight bounds must satisfy 0 < kappa_min <= 1 <= kappa_max (got {}, {})",
                self.kappa_min, self.kappa_max
            )));
        }
        Ok(())
    }

    /// Log-uniform levels in `[kappa_min, kappa_max]`; the level nearest to
    /// one is snapped to one so the isotropic control is always present.
    fn log_levels(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = (self.kappa_min.ln(), self.kappa_max.ln());
        if count == 1 {
            return vec![0.0];
        }
        let mut levels: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
        if !levels.contains(&0.0) {
            let nearest = (0..count).min_by(|&a, &b| levels[a].abs().total_cmp(&levels[b].abs())).unwrap();
            levels[nearest] = 0.0;
        }
        levels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    n: usize,
    family: FrameFamily,
    frame_count: usize,
    weight_levels: usize,
    controls: Vec<Control>,
}

impl DirectionSet {
    /// Builds a set from explicit controls, checking every invariant.
    pub fn from_controls(n: usize, controls: Vec<Control>) -> Result<Self> {
        if controls.is_empty() {
            return Err(CmaError::validation("empty control set"));
        }
        let target = (n as f64).powi(-(n as i32));
        for c in &controls {
            if c.n() != n || c.directions.len() != n || c.directions.iter().any(|d| d.n() != n) {
                return Err(CmaError::validation("control dimension mismatch"));
            }
            if c.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                return Err(CmaError::validation("control weights must be positive"));
            }
            let prod: f64 = c.weights.iter().product();
            if ((prod - target) / target).abs() > 1e-12 {
                return Err(CmaError::validation(format!("weights multiply to {prod}, expected {target}")));
            }
            for j in 0..n {
                for k in 0..n {
                    let ip: Complex64 = c.directions[j].unit().iter().zip(c.directions[k].unit()).map(|(a, b)| a.conj() * b).sum();
                    let want = if j == k { 1.0 } else { 0.0 };
                    if (ip - Complex64::new(want, 0.0)).norm() > 1e-12 {
                        return Err(CmaError::validation("control frame is not orthonormal"));
                    }
                }
            }
        }
        let len = controls.len();
        Ok(DirectionSet { n, family: FrameFamily::Axes, frame_count: len, weight_levels: 1, controls })
    }

    /// The single isotropic control `(1/n) I` on the standard frame.
    pub fn isotropic(n: usize) -> Self {
        generate_direction_set(n, FrameFamily::Axes, 1).expect("isotropic set")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> FrameFamily {
        self.family
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn weight_levels(&self) -> usize {
        self.weight_levels
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// Largest single weight over all controls.
    pub fn max_weight(&self) -> f64 {
        self.controls.iter().flat_map(|c| c.weights.iter().copied()).fold(0.0, f64::max)
    }

    pub fn contains_isotropic(&self) -> bool {
        let iso = 1.0 / self.n as f64;
        self.controls.iter().any(|c| {
            c.weights.iter().all(|&w| (w - iso).abs() < 1e-14)
                && c.directions.iter().enumerate().all(|(j, d)| *d == LatticeDirection::axis(self.n, j))
        })
    }
}

fn frames(n: usize, family: FrameFamily) -> Vec<Vec<LatticeDirection>> {
    let mut out = vec![(0..n).map(|j| LatticeDirection::axis(n, j)).collect::<Vec<_>>()];
    if family == FrameFamily::Axes {
        return out;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            // Real diagonals (e_j ± e_k)/√2, then imaginary (e_j ± i e_k)/√2;
            // the remaining axes complete the frame.
            for imag in [false, true] {
                let mut frame = Vec::with_capacity(n);
                for sign in [1i8, -1] {
                    let mut c = vec![(0i8, 0i8); n];
                    c[j] = (1, 0);
                    c[k] = if imag { (0, sign) } else { (sign, 0) };
                    frame.push(LatticeDirection::new(&c).expect("diagonal direction"));
                }
                frame.extend((0..n).filter(|&l| l != j && l != k).map(|l| LatticeDirection::axis(n, l)));
                out.push(frame);
            }
        }
    }
    out
}

/// Default-bounds variant of [`DirectionSet::generate_with_bounds`].
pub fn generate_direction_set(n: usize, family: FrameFamily, weight_levels: usize) -> Result<DirectionSet> {
    DirectionSet::generate_with_bounds(n, family, weight_levels, WeightBounds::default())
}

impl DirectionSet {
    /// Deterministic quantized control set: every frame of `family` crossed
    /// with `weight_levels^(n-1)` projected weight vectors (frames outer,
    /// weight combinations inner, lexicographic).
    pub fn generate_with_bounds(n: usize, family: FrameFamily, weight_levels: usize, bounds: WeightBounds) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(CmaError::validation(format!("complex dimension {n} unsupported (1..=3)")));
        }
        if weight_levels == 0 {
            return Err(CmaError::validation("weight_levels must be at least 1"));
        }
        bounds.validate()?;
        let levels = bounds.log_levels(weight_levels);
        let mut weight_vectors = Vec::new();
        let combos = levels.len().pow(n as u32 - 1);
        for idx in 0..combos {
            let mut raw = vec![0.0; n];
            let mut rest = idx;
            for slot in (0..n - 1).rev() {
                raw[slot] = levels[rest % levels.len()];
                rest /= levels.len();
            }
            let mean = raw.iter().sum::<f64>() / n as f64;
            let w: Vec<f64> = raw.iter().map(|&s| (s - mean).exp() / n as f64).collect();
            weight_vectors.push(w);
        }
        let frame_list = frames(n, family);
        let mut controls = Vec::with_capacity(frame_list.len() * weight_vectors.len());
        for frame in &frame_list {
            for w in &weight_vectors {
                controls.push(Control { directions: frame.clone(), weights: w.clone() });
            }
        }
        Ok(DirectionSet { n, family, frame_count: frame_list.len(), weight_levels, controls })
    }
}

/// `min_A tr(A H)` over the set; ties go to the lowest control index.
pub fn bellman_min_trace(h: &HermitianForm, set: &DirectionSet) -> Result<f64> {
    bellman_argmin(h, set).map(|(v, _)| v)
}

/// Minimum value and the index of the first minimizing control.
pub fn bellman_argmin(h: &HermitianForm, set: &DirectionSet) -> Result<(f64, usize)> {
    if h.n() != set.n() {
        return Err(CmaError::validation(format!("form has dimension {}, control set {}", h.n(), set.n())));
    }
    let mut best = (f64::INFINITY, 0);
    for (i, c) in set.controls().iter().enumerate() {
        let t = c.trace_with(h);
        if t < best.0 {
            best = (t, i);
        }
    }
    Ok(best)
}
