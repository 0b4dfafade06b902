mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use cma_core::grid::{directional_second_difference, discrete_complex_hessian, grid_quadratic, Domain, GridFunction};
use cma_core::hermitian::*;
use cma_core::operator::{hamiltonian_f, hamiltonian_f_plus, ma_root, DensityField, EquationData};
use cma_core::verify::check_subsolution;
use common::{random_trig, rng};
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_hermitian(n: usize) -> impl Strategy<Value = HermitianForm> {
    prop::collection::vec(-2.0f64..2.0, 2 * n * n).prop_map(move |raw| {
        let mut rows = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                let (a, b) = (raw[2 * (j * n + k)], raw[2 * (j * n + k) + 1]);
                rows[j * n + k] = match j.cmp(&k) {
                    std::cmp::Ordering::Equal => Complex64::new(a, 0.0),
                    std::cmp::Ordering::Less => Complex64::new(a, b),
                    std::cmp::Ordering::Greater => Complex64::new(raw[2 * (k * n + j)], -raw[2 * (k * n + j) + 1]),
                };
            }
        }
        HermitianForm::from_rows(n, &rows).unwrap()
    })
}

/// `B B*`, semipositive by construction.
fn arb_psd(n: usize) -> impl Strategy<Value = HermitianForm> {
    prop::collection::vec(-1.5f64..1.5, 2 * n * n).prop_map(move |raw| {
        let b: Vec<Complex64> = raw.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let mut rows = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                rows[j * n + k] = (0..n).map(|l| b[j * n + l] * b[k * n + l].conj()).sum();
            }
        }
        for j in 0..n {
            rows[j * n + j].im = 0.0;
            for k in 0..j {
                rows[j * n + k] = rows[k * n + j].conj();
            }
        }
        HermitianForm::from_rows(n, &rows).unwrap()
    })
}

fn rich(n: usize) -> DirectionSet {
    generate_direction_set(n, FrameFamily::AxesAndDiagonals, 5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eigen_is_sorted_and_reconstructs(h in (1usize..=3).prop_flat_map(arb_hermitian)) {
        let e = eigen_decompose(&h);
        prop_assert!(e.values().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(e.reconstruct().max_abs_diff(&h) <= 1e-12 * (1.0 + h.norm_inf()));
        if det_plus(&h) > 0.0 {
            prop_assert!(e.values()[0] > 0.0);
        }
    }

    #[test]
    fn min_trace_is_homogeneous_and_concave(
        (h1, h2) in (1usize..=3).prop_flat_map(|n| (arb_hermitian(n), arb_hermitian(n))),
        t in 0.0f64..5.0,
    ) {
        let set = rich(h1.n());
        let b = |h: &HermitianForm| bellman_min_trace(h, &set).unwrap();
        let scale = 1.0 + h1.norm_inf() + h2.norm_inf();
        prop_assert!((b(&h1.scaled(t)) - t * b(&h1)).abs() <= 1e-12 * scale * (1.0 + t));
        prop_assert!(b(&(h1 + h2)) >= b(&h1) + b(&h2) - 1e-12 * scale);
    }

    #[test]
    fn min_trace_is_monotone(h in (1usize..=3).prop_flat_map(|n| (arb_hermitian(n), arb_psd(n)))) {
        let (h1, p) = h;
        let set = rich(h1.n());
        let h2 = h1 + p;
        prop_assert!(bellman_min_trace(&h2, &set).unwrap() >= bellman_min_trace(&h1, &set).unwrap() - 1e-12);
    }

    #[test]
    fn min_trace_bounds_root_of_det_and_refines_downward(h in (1usize..=3).prop_flat_map(arb_psd)) {
        let n = h.n();
        let root = det_plus(&h).powf(1.0 / n as f64);
        let mut prev = f64::INFINITY;
        for (family, levels) in [(FrameFamily::Axes, 1), (FrameFamily::Axes, 3), (FrameFamily::AxesAndDiagonals, 3), (FrameFamily::AxesAndDiagonals, 5), (FrameFamily::AxesAndDiagonals, 9)] {
            let set = generate_direction_set(n, family, levels).unwrap();
            let v = bellman_min_trace(&h, &set).unwrap();
            prop_assert!(v >= root - 1e-12 * (1.0 + h.norm_inf()));
            prop_assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}

fn torus(n: usize, m: usize) -> Arc<Domain> {
    Arc::new(Domain::torus(n, m).unwrap())
}

fn directions(n: usize) -> Vec<LatticeDirection> {
    let mut out: Vec<LatticeDirection> = (0..n).map(|j| LatticeDirection::axis(n, j)).collect();
    if n >= 2 {
        out.push(LatticeDirection::new(&[(1, 0), (1, 0)]).unwrap());
        out.push(LatticeDirection::new(&[(1, 0), (0, -1)]).unwrap());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn second_difference_is_linear_translation_invariant_and_monotone(
        seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, shift in prop::collection::vec(0usize..6, 4), bump in 0.0f64..1.0,
    ) {
        let d = torus(2, 6);
        let mut r = rng(seed);
        let u = random_trig(&d, &mut r, 4, 1.0);
        let w = random_trig(&d, &mut r, 4, 1.0);
        let combo = u.scaled(a).add(&w.scaled(b)).unwrap();
        let shifted = GridFunction::new(d.clone(), (0..d.len()).map(|x| {
            let c: Vec<usize> = d.coords(x).iter().zip(&shift).map(|(c, s)| (c + s) % 6).collect();
            u.get(d.index(&c))
        }).collect()).unwrap();
        for v in directions(2) {
            for x in 0..d.len() {
                let lhs = directional_second_difference(&combo, x, &v).unwrap();
                let rhs = a * directional_second_difference(&u, x, &v).unwrap() + b * directional_second_difference(&w, x, &v).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
                let c: Vec<usize> = d.coords(x).iter().zip(&shift).map(|(c, s)| (c + s) % 6).collect();
                prop_assert_eq!(directional_second_difference(&shifted, x, &v).unwrap(), directional_second_difference(&u, d.index(&c), &v).unwrap());
            }
            let x = 17;
            let base = directional_second_difference(&u, x, &v).unwrap();
            for y in 0..d.len() {
                if y == x {
                    continue;
                }
                let mut raised = u.clone();
                raised.values_mut()[y] += bump;
                prop_assert!(directional_second_difference(&raised, x, &v).unwrap() >= base);
            }
        }
    }

    #[test]
    fn quadratic_round_trip(n in 1usize..=3, seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng(seed);
        let m = 2 * n;
        let mut q = vec![0.0; m * m];
        for a in 0..m {
            for b in a..m {
                let v: f64 = r.gen_range(-1.0..1.0);
                q[a * m + b] = v;
                q[b * m + a] = v;
            }
        }
        let grad: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let d = Arc::new(Domain::cube(n, 5, 0.1).unwrap());
        let center = d.index(&vec![2; m]);
        let g = grid_quadratic(d.clone(), center, r.gen_range(-1.0..1.0), &grad, &q).unwrap();
        let hess = discrete_complex_hessian(&g, center).unwrap();
        prop_assert!(hess.max_abs_diff(&hermitian_part(&q, n).unwrap()) <= 1e-9);
    }
}

/// Smooth periodic test field and its exact `v* u_{z z̄} v` along `e₁`:
/// `u = sin(2πx₁) cos(2πy₁)`, `u_{z₁ z̄₁} = Δu/4 = −2π² u`.
#[test]
fn second_difference_is_second_order() {
    let errors: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&m| {
            let d = torus(1, m);
            let u = GridFunction::from_fn(d.clone(), |p| (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos()).unwrap();
            let v = LatticeDirection::axis(1, 0);
            (0..d.len())
                .map(|x| (directional_second_difference(&u, x, &v).unwrap() + 2.0 * PI * PI * u.get(x)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let slope1 = (errors[0] / errors[1]).log2();
    let slope2 = (errors[1] / errors[2]).log2();
    assert!(slope1 >= 1.9 && slope2 >= 1.9, "{errors:?}");
}

fn torus_eq(n: usize, m: usize, c: f64, eps: f64) -> EquationData {
    EquationData::new(eps, DensityField::constant(torus(n, m), c).unwrap(), HermitianForm::identity(n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operator_is_elliptic_proper_and_shift_invariant(seed in any::<u64>(), bump in 0.0f64..0.5, s1 in -2.0f64..2.0, ds in 0.0f64..2.0, c in -10.0f64..10.0) {
        let eq = torus_eq(2, 4, 1.3, 1.0);
        let flat = eq.with_epsilon(0.0).unwrap();
        let set = rich(2);
        let u = random_trig(eq.domain_arc(), &mut rng(seed), 4, 0.01);
        let x = 37;
        let base = hamiltonian_f(x, s1, &u, &eq, &set).unwrap();
        for y in 0..eq.domain().len() {
            if y != x {
                let mut raised = u.clone();
                raised.values_mut()[y] += bump;
                prop_assert!(hamiltonian_f(x, s1, &raised, &eq, &set).unwrap() <= base);
                prop_assert!(hamiltonian_f_plus(x, s1, &raised, &eq, &set).unwrap() <= hamiltonian_f_plus(x, s1, &u, &eq, &set).unwrap());
            }
        }
        let s2 = s1 + ds;
        prop_assert!(hamiltonian_f(x, s1, &u, &eq, &set).unwrap() <= hamiltonian_f(x, s2, &u, &eq, &set).unwrap());
        if ds > 0.0 {
            prop_assert!(hamiltonian_f(x, s1, &u, &eq, &set).unwrap() < hamiltonian_f(x, s2, &u, &eq, &set).unwrap());
        }
        prop_assert_eq!(hamiltonian_f(x, s1, &u, &flat, &set).unwrap(), hamiltonian_f(x, s2, &u, &flat, &set).unwrap());
        let shifted = u.shifted(c);
        for x in 0..eq.domain().len() {
            let a = ma_root(&u, x, &eq, &set).unwrap();
            let b = ma_root(&shifted, x, &eq, &set).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + c.abs()) / (eq.domain().h() * eq.domain().h()), "{a} {b}");
        }
    }

    #[test]
    fn refining_controls_never_increases_root(seed in any::<u64>()) {
        let eq = torus_eq(2, 4, 1.0, 1.0);
        let u = random_trig(eq.domain_arc(), &mut rng(seed), 4, 0.05);
        let coarse = generate_direction_set(2, FrameFamily::Axes, 3).unwrap();
        let fine = generate_direction_set(2, FrameFamily::AxesAndDiagonals, 5).unwrap();
        for x in 0..eq.domain().len() {
            prop_assert!(ma_root(&u, x, &eq, &fine).unwrap() <= ma_root(&u, x, &eq, &coarse).unwrap() + 1e-15);
        }
    }

    #[test]
    fn max_of_subsolutions_is_a_subsolution(seed in any::<u64>(), lift in 0.0f64..0.3) {
        let eq = torus_eq(2, 4, 1.0, 1.0);
        let set = rich(2);
        let mut r = rng(seed);
        let u = random_trig(eq.domain_arc(), &mut r, 4, 0.003).shifted(-0.05);
        let v = random_trig(eq.domain_arc(), &mut r, 4, 0.003).shifted(-0.05 - lift * 0.01);
        prop_assume!(check_subsolution(&u, &eq, &set, 0.0).unwrap().pass);
        prop_assume!(check_subsolution(&v, &eq, &set, 0.0).unwrap().pass);
        let w = u.pointwise_max(&v).unwrap();
        prop_assert!(check_subsolution(&w, &eq, &set, 0.0).unwrap().pass);
    }
}
