#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use cma_core::grid::{Domain, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A few random low-frequency Fourier modes, periodic in every real
/// coordinate, scaled to sup-amplitude at most `amp`.
pub fn random_trig(domain: &Arc<Domain>, rng: &mut ChaCha8Rng, modes: usize, amp: f64) -> GridFunction {
    let dims = domain.shape().len();
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..modes)
        .map(|_| {
            let k: Vec<f64> = (0..dims).map(|_| rng.gen_range(-1i32..=1) as f64).collect();
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let norm: f64 = terms.iter().map(|t| t.1.abs()).sum::<f64>().max(1e-12);
    GridFunction::from_fn(domain.clone(), |p| {
        let s: f64 = terms.iter().map(|(k, c, phase)| c * (2.0 * PI * k.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + phase).cos()).sum();
        amp * s / norm
    })
    .unwrap()
}

/// Independent uniform values in `[lo, hi)`.
pub fn random_values(domain: &Arc<Domain>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> GridFunction {
    GridFunction::new(domain.clone(), (0..domain.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

pub fn abs2(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

pub fn leq(a: &GridFunction, b: &GridFunction, slack: f64) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| *x <= y + slack)
}

pub mod pairs {
    use super::*;
    use cma_core::hermitian::{DirectionSet, HermitianForm};
    use cma_core::operator::{DensityField, EquationData, Scheme};
    use cma_core::solvers::SolverConfig;
    use cma_core::verify::{check_subsolution, check_supersolution};

    pub struct Pair {
        pub eq: EquationData,
        pub set: DirectionSet,
        pub solution: GridFunction,
        pub sub: GridFunction,
        pub sup: GridFunction,
    }

    /// Density making `phi` an exact discrete solution of the `ε`-equation.
    pub fn manufactured(phi: &GridFunction, eps: f64, omega: HermitianForm, set: &DirectionSet) -> EquationData {
        let d = phi.domain_arc().clone();
        let n = d.n() as i32;
        let scheme = Scheme::new(d.clone(), set, &omega).unwrap();
        let f = (0..d.len())
            .map(|x| {
                let (r, _) = scheme.root_at(phi.values(), x);
                (-eps * phi.get(x)).exp() * r.max(0.0).powi(n)
            })
            .collect();
        EquationData::new(eps, DensityField::new(GridFunction::new(d, f).unwrap()).unwrap(), omega).unwrap()
    }

    /// Seeded certified pair on the `m⁴` torus, `ε = 1`, around a random
    /// smooth exact solution.
    pub fn certified_pair(seed: u64, m: usize, tol: f64) -> Pair {
        let d = Arc::new(Domain::torus(2, m).unwrap());
        let set = SolverConfig::default().direction_set(2).unwrap();
        let mut r = rng(seed);
        let amp = r.gen_range(0.005..0.03);
        let solution = random_trig(&d, &mut r, 5, amp);
        let eq = manufactured(&solution, 1.0, HermitianForm::identity(2), &set);
        pair_around(solution, eq, set, seed ^ 0x5eed, tol)
    }

    /// A subsolution below `solution` (minus nonnegative smooth noise,
    /// lowered until certified) and a supersolution above it.
    pub fn pair_around(solution: GridFunction, eq: EquationData, set: DirectionSet, seed: u64, tol: f64) -> Pair {
        let d = solution.domain_arc().clone();
        let mut r = rng(seed);
        let noise_amp = r.gen_range(0.001..0.01);
        let noise = random_trig(&d, &mut r, 4, noise_amp).shifted(noise_amp);
        let noise2 = random_trig(&d, &mut r, 4, noise_amp).shifted(noise_amp);
        let mut lower = r.gen_range(0.0..0.05);
        let sub = loop {
            let u = solution.sub(&noise).unwrap().shifted(-lower);
            if check_subsolution(&u, &eq, &set, tol).unwrap().pass {
                break u;
            }
            lower = 2.0 * lower + 0.01;
        };
        let mut raise = r.gen_range(0.0..0.05);
        let sup = loop {
            let v = solution.add(&noise2).unwrap().shifted(raise);
            if check_supersolution(&v, &eq, &set, tol).unwrap().pass {
                break v;
            }
            raise = 2.0 * raise + 0.01;
        };
        Pair { eq, set, solution, sub, sup }
    }
}
