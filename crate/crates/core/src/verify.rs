//! Fast invariant suite behind the `verify` subcommand.
//!
//! Each check is small enough that the whole suite runs in a few seconds.

use crate::assignment;
use crate::bounds::{self, BoundParams};
use crate::dynamics::{euler_step, run, Beta, Ensemble, NoObserver, SimConfig};
use crate::harness::presets;
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::metrics::{alignment, w2_empirical};
use crate::spectral::{build_model, pushforward_pi, SpectralModel, CLUSTER_TOL, EPS_PERP};
use crate::sphere::SeededRng;

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn random_symmetric(d: usize, rng: &mut SeededRng) -> Matrix {
    let mut m = Matrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let v = rng.standard_normal();
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

fn fig1_model() -> SpectralModel {
    build_model(presets::fig1_vbt(), Matrix::identity(3), CLUSTER_TOL).expect("fig1 B is invertible")
}

fn eigen_residual() -> Check {
    let mut rng = SeededRng::new(1);
    let m = random_symmetric(8, &mut rng);
    let eig = symmetric_eigen(&m).expect("symmetric input");
    let mut worst: f64 = 0.0;
    for (i, &lambda) in eig.values.iter().enumerate() {
        let v = eig.vector(i);
        let mv = m.mul_vec(&v);
        let r = mv.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        worst = worst.max(r);
        for j in 0..i {
            worst = worst.max(dot(&v, &eig.vector(j)).abs());
        }
    }
    check("eigenpairs are orthonormal with small residual", worst <= 1e-9 * m.frobenius_norm().max(1.0), format!("max residual {worst:.2e}"))
}

fn sphere_samples_unit() -> Check {
    let mut rng = SeededRng::new(2);
    let ens = Ensemble::sample_uniform(1000, 7, &mut rng);
    let dev = ens.max_norm_deviation();
    check("uniform samples are unit norm", dev <= 1e-12, format!("max |‖x‖−1| = {dev:.2e}"))
}

fn step_keeps_unit_norm() -> Check {
    let model = fig1_model();
    let mut rng = SeededRng::new(3);
    let init = Ensemble::sample_uniform(64, 3, &mut rng);
    let mut worst: f64 = 0.0;
    for beta in [Beta::Finite(30.0), Beta::Infinite] {
        let cfg = SimConfig { beta, dt: 0.05, t_final: 1.0, ..SimConfig::default() };
        let out = run(&init, &model, &cfg, &mut NoObserver).expect("valid run");
        worst = worst.max(out.max_norm_deviation());
    }
    check("Euler steps stay on the sphere", worst <= 1e-9, format!("max |‖x‖−1| = {worst:.2e}"))
}

fn permutation_equivariance() -> Check {
    let model = fig1_model();
    let mut rng = SeededRng::new(4);
    let init = Ensemble::sample_uniform(20, 3, &mut rng);
    let perm: Vec<usize> = (0..20).rev().collect();
    let cfg = SimConfig { beta: Beta::Finite(5.0), dt: 0.01, t_final: 0.01, ..SimConfig::default() };
    let a = euler_step(&init, &model, &cfg).expect("valid step").permuted(&perm);
    let b = euler_step(&init.permuted(&perm), &model, &cfg).expect("valid step");
    let diff = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    check("one step commutes with token permutations", diff <= 1e-12, format!("max difference {diff:.2e}"))
}

fn fig1_assumptions() -> Check {
    let model = fig1_model();
    let e = model.e.as_ref();
    let ok = model.vbt_asymmetry <= 1e-12
        && e.is_some_and(|e| e.space.dim() == 2 && (e.gap() - 4.0).abs() <= 1e-10)
        && (model.sigma_max_b - 5.0).abs() <= 1e-10;
    let detail = format!(
        "asymmetry {:.1e}, dim E {:?}, gap {:?}",
        model.vbt_asymmetry,
        e.map(|e| e.space.dim()),
        e.map(|e| e.gap())
    );
    check("fig1 model: symmetric VBᵀ, dim E = 2, gap 4", ok, detail)
}

fn nonsym_e_presence() -> Check {
    let [(v1, b1), (v2, b2)] = presets::nonsym_pairs();
    let m1 = build_model(b1, v1, CLUSTER_TOL).expect("B1 is invertible");
    let m2 = build_model(b2, v2, CLUSTER_TOL).expect("B2 is invertible");
    let ok = m1.e.is_none() && m1.e_real.is_none() && m2.e.is_none() && m2.e_real.is_some();
    check(
        "non-symmetric pairs: complex spectrum has no E, real spectrum has a diagnostic E",
        ok,
        format!("(V1,B1) {} / (V2,B2) {}", m1.e_source(), m2.e_source()),
    )
}

fn assignment_matches_brute_force() -> Check {
    let mut rng = SeededRng::new(5);
    let n = 6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let cost: Vec<f64> = (0..n * n).map(|_| rng.uniform01()).collect();
        let fast = assignment::solve(n, &cost).cost;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            best = best.min(p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum());
        });
        worst = worst.max((fast - best).abs());
    }
    check("assignment solver matches exhaustive search", worst <= 1e-12, format!("max gap {worst:.2e}"))
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn w2_is_a_metric() -> Check {
    let mut rng = SeededRng::new(6);
    let a = Ensemble::sample_uniform(30, 3, &mut rng);
    let b = Ensemble::sample_uniform(30, 3, &mut rng);
    let perm: Vec<usize> = (0..30).map(|i| (i * 7) % 30).collect();
    let self_dist = w2_empirical(&a, &a.permuted(&perm)).expect("same size");
    let ab = w2_empirical(&a, &b).expect("same size");
    let ba = w2_empirical(&b, &a).expect("same size");
    let ok = self_dist <= 1e-12 && (ab - ba).abs() <= 1e-12 && ab > 0.0;
    check("W2 vanishes on permutations and is symmetric", ok, format!("W2(a,σa) {self_dist:.1e}, |W2(a,b)−W2(b,a)| {:.1e}", (ab - ba).abs()))
}

fn pi_is_idempotent_and_preserved() -> Check {
    let model = fig1_model();
    let e = &model.e.as_ref().expect("fig1 has E").space;
    let mut rng = SeededRng::new(7);
    let init = Ensemble::sample_uniform(50, 3, &mut rng);
    let once = pushforward_pi(&init, e, EPS_PERP).expect("generic tokens");
    let twice = pushforward_pi(&once, e, EPS_PERP).expect("tokens in E");
    let idem = once.as_slice().iter().zip(twice.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let cfg = SimConfig { beta: Beta::Infinite, dt: 0.01, t_final: 0.5, ..SimConfig::default() };
    let later = run(&init, &model, &cfg, &mut NoObserver).expect("valid run");
    let moved = pushforward_pi(&later, e, EPS_PERP).expect("generic tokens");
    let drift = once.as_slice().iter().zip(moved.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let on_e = alignment(&once, e);
    let ok = idem <= 1e-12 && drift <= 1e-9 && (on_e - 1.0).abs() <= 1e-12;
    check("Π is idempotent and conserved by the zero-temperature flow", ok, format!("idempotence {idem:.1e}, drift {drift:.1e}"))
}

fn bound_constants_ordered() -> Check {
    let mut bp = BoundParams::with_default_constants(1.0, 4.0, 1.0, 5.0, 0.5, 30.0);
    let ok_default = bp.validate().is_ok();
    bp.c1 = bp.c0 * 0.5;
    let rejects = bp.validate().is_err();
    let env = bounds::theorem_envelope(0.0, &BoundParams::with_default_constants(1.0, 4.0, 1.0, 5.0, 0.5, 30.0));
    check("bound constants require C1 > C0 > 0", ok_default && rejects && env.is_finite(), format!("envelope(0) = {env:.4}"))
}

fn preset_determinism() -> Check {
    let cfg = presets::preset("fig3", 11).expect("known preset");
    let a = cfg.initial_ensemble(2).expect("valid init");
    let b = cfg.initial_ensemble(2).expect("valid init");
    let c = cfg.initial_ensemble(3).expect("valid init");
    let ok = a.as_slice() == b.as_slice() && a.as_slice() != c.as_slice();
    check("initial ensembles are a pure function of seed and trial", ok, String::new())
}

/// Runs every invariant check.
pub fn run_all() -> Vec<Check> {
    vec![
        eigen_residual(),
        sphere_samples_unit(),
        step_keeps_unit_norm(),
        permutation_equivariance(),
        fig1_assumptions(),
        nonsym_e_presence(),
        assignment_matches_brute_force(),
        w2_is_a_metric(),
        pi_is_idempotent_and_preserved(),
        bound_constants_ordered(),
        preset_determinism(),
    ]
}
