mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use cma_core::config::parse_config;
use cma_core::grid::{Domain, GridFunction};
use cma_core::gridio::{load_grid, save_grid};
use common::pairs::certified_pair;
use tempfile::TempDir;

fn cma(dir: &Path, mode: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cma"))
        .arg(mode)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env("CMA_THREADS", "2")
        .output()
        .unwrap()
}

fn log(dir: &Path) -> String {
    fs::read_to_string(dir.join("out/run.log")).unwrap()
}

#[test]
fn sample_config_round_trips_through_echo() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/sample.cfg")).unwrap();
    let cfg = parse_config(&text).unwrap();
    let again = parse_config(&cfg.echo()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.echo(), again.echo());
}

#[test]
fn solve_compact_with_det_omega_density() {
    let dir = TempDir::new().unwrap();
    let out = cma(dir.path(), "solve-compact", "n = 2\nm = 4\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let u = load_grid(dir.path().join("out/solution.grid")).unwrap();
    assert!(u.values().iter().all(|v| v.abs() <= 1e-10));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert!(csv.starts_with("iter,residual_sup,residual_l1,tau,wall_ms\n"));
    let log = log(dir.path());
    // The effective configuration comes first, every key included.
    assert!(log.starts_with("# effective configuration\nmode = solve-compact\n"));
    assert!(log.contains("tol_sup = 0.0000000001") || log.contains("tol_sup = 1e-10"));
    assert!(log.contains("termination = converged"));
    assert!(log.trim_end().ends_with("exit_code = 0"));
}

#[test]
fn runs_are_byte_identical() {
    let d = Arc::new(Domain::torus(2, 4).unwrap());
    let f = common::random_trig(&d, &mut common::rng(5), 3, 0.3).shifted(1.0);
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        save_grid(&f, dir.path().join("f.grid")).unwrap();
        let out = cma(dir.path(), "solve-compact", "density = f.grid\nseed = 3\n", &[]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["solution.grid", "convergence.csv", "run.log"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        if name == "run.log" {
            // Only the resolved paths differ.
            assert_eq!(x.len() - a.path().as_os_str().len() * 2, y.len() - b.path().as_os_str().len() * 2);
        } else {
            assert_eq!(x, y, "{name}");
        }
    }
}

#[test]
fn compare_with_corrupted_subsolution_exits_two() {
    let p = certified_pair(11, 4, 1e-8);
    let dir = TempDir::new().unwrap();
    let mut bad = p.sub.clone();
    bad.values_mut()[7] += 0.5;
    save_grid(&bad, dir.path().join("u.grid")).unwrap();
    save_grid(&p.sup, dir.path().join("v.grid")).unwrap();
    save_grid(p.eq.density.field(), dir.path().join("f.grid")).unwrap();
    let cfg = "input = u.grid\ninput2 = v.grid\ndensity = f.grid\n";
    assert_eq!(cma(dir.path(), "compare", cfg, &[]).status.code(), Some(2));
    save_grid(&p.sub, dir.path().join("u.grid")).unwrap();
    let out = cma(dir.path(), "compare", cfg, &["--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("kind=comparison pass=true ") && stdout.trim_end().ends_with("seed=42"), "{stdout}");
    assert!(log(dir.path()).contains("kind=comparison pass=true"));
}

#[test]
fn certificate_modes() {
    let p = certified_pair(12, 4, 1e-8);
    let dir = TempDir::new().unwrap();
    save_grid(&p.sub, dir.path().join("u.grid")).unwrap();
    save_grid(&p.sup, dir.path().join("v.grid")).unwrap();
    save_grid(p.eq.density.field(), dir.path().join("f.grid")).unwrap();
    assert_eq!(cma(dir.path(), "check-sub", "input = u.grid\ndensity = f.grid\n", &[]).status.code(), Some(0));
    assert_eq!(cma(dir.path(), "check-super", "input = v.grid\ndensity = f.grid\n", &[]).status.code(), Some(0));
    assert_eq!(cma(dir.path(), "check-sub", "input = v.grid\ndensity = f.grid\n", &[]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_four() {
    let dir = TempDir::new().unwrap();
    let out = cma(dir.path(), "solve-compact", "density = missing.grid\n", &[]);
    assert_eq!(out.status.code(), Some(4));
    assert!(log(dir.path()).contains("error:"));
    let out = cma(dir.path(), "solve-compact", "n = 2\n\ntau = -1\n", &[]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(cma(dir.path(), "no-such-mode", "", &[]).status.code(), Some(4));
    assert_eq!(cma(dir.path(), "solve-compact", "mode = compare\n", &[]).status.code(), Some(4));
    let out = cma(dir.path(), "solve-compact", "bogus = 1\n", &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn iteration_limit_exits_three_and_keeps_the_log() {
    let d = Arc::new(Domain::torus(1, 8).unwrap());
    let f = common::random_trig(&d, &mut common::rng(2), 3, 0.3).shifted(1.0);
    let dir = TempDir::new().unwrap();
    save_grid(&f, dir.path().join("f.grid")).unwrap();
    let out = cma(dir.path(), "solve-compact", "density = f.grid\nscheme = euler\nmax_iter = 2\n", &[]);
    assert_eq!(out.status.code(), Some(3));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn envelope_and_dirichlet_modes() {
    let dir = TempDir::new().unwrap();
    let t = Arc::new(Domain::torus(1, 8).unwrap());
    let u = common::random_trig(&t, &mut common::rng(4), 3, 0.2);
    save_grid(&u, dir.path().join("u.grid")).unwrap();
    for mode in ["envelope-sup", "envelope-inf", "project-psh"] {
        let out = cma(dir.path(), mode, "input = u.grid\ndelta = 0.2\n", &[]);
        assert_eq!(out.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        let w = load_grid(dir.path().join("out/solution.grid")).unwrap();
        let ordered = if mode == "envelope-sup" { common::leq(&u, &w, 0.0) } else { common::leq(&w, &u, 1e-12) };
        assert!(ordered, "{mode}");
    }
    assert!(log(dir.path()).contains("contact_check pass="));
    let low = u.shifted(-3.0);
    save_grid(&low, dir.path().join("low.grid")).unwrap();
    let out = cma(dir.path(), "balayage", "input = low.grid\nbox_lo = 1,1\nbox_extent = 3,3\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let b = Arc::new(Domain::cube(1, 7, 0.2).unwrap());
    let gamma = GridFunction::from_fn(b, common::abs2).unwrap();
    save_grid(&gamma, dir.path().join("gamma.grid")).unwrap();
    let out = cma(dir.path(), "solve-dirichlet", "boundary = gamma.grid\nepsilon = 0\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = load_grid(dir.path().join("out/solution.grid")).unwrap();
    assert!(sol.sup_distance(&gamma) <= 5e-10);
}

#[test]
fn continuation_and_stability_modes() {
    let dir = TempDir::new().unwrap();
    let t = Arc::new(Domain::torus(1, 8).unwrap());
    let f = common::random_trig(&t, &mut common::rng(8), 2, 0.2).shifted(1.0);
    save_grid(&f, dir.path().join("f.grid")).unwrap();
    let out = cma(dir.path(), "continue-to-zero", "density = f.grid\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log1 = log(dir.path());
    assert!(log1.contains("normalization_applied = true") && log1.contains("zero_residual_sup = "));
    let phi = load_grid(dir.path().join("out/solution.grid")).unwrap();
    save_grid(&phi, dir.path().join("phi.grid")).unwrap();
    save_grid(&phi.shifted(0.1).add(&common::random_trig(&t, &mut common::rng(1), 2, 0.01)).unwrap(), dir.path().join("phi2.grid")).unwrap();
    let cfg = "input = phi.grid\ninput2 = phi2.grid\ndensity = f.grid\ndensity2 = f.grid\np = 2\n";
    let out = cma(dir.path(), "stability", cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(log(dir.path()).contains("stability p=2 q=2 gamma="));
}
