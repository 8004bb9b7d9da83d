//! End-to-end acceptance suite. Runs every criterion in sequence and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use tokenflow::bounds::laplace_rhs;
use tokenflow::dynamics::{attention_consensus, cbo_consensus, drift_field, run, zero_temp_drift};
use tokenflow::harness::{run_experiment, run_preset, Overrides, RunOptions, RunSummary};
use tokenflow::linalg::{dist_sq, dot, norm, singular_extremes, Matrix};
use tokenflow::metrics::{grad_r_p, interaction_energy, laplace_maximizer, laplace_residual, r_p, v_p, w2_empirical, MetricRecord};
use tokenflow::spectral::{pi_jacobian, pi_map, pushforward_pi, CLUSTER_TOL, EPS_PERP};
use tokenflow::sphere::{cap_mass, SeededRng};
use tokenflow::{build_model, Beta, Ensemble, SimConfig, Subspace};

use common::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(detail: String, elapsed: Duration, budget_s: f64) -> Outcome {
    let s = elapsed.as_secs_f64();
    ensure(s < budget_s, format!("{detail}; {s:.1}s of {budget_s:.0}s budget"))
}

fn quiet() -> RunOptions {
    RunOptions { quiet: true }
}

fn preset_run(name: &str, overrides: &Overrides, out: &Path) -> Result<RunSummary, String> {
    run_preset(name, overrides, out, quiet()).map_err(|e| format!("{name} failed: {e}"))
}

fn column(records: &[MetricRecord], f: fn(&MetricRecord) -> Option<f64>) -> Vec<(f64, f64)> {
    records.iter().filter_map(|r| f(r).map(|v| (r.time, v))).collect()
}

fn first_argmin(series: &[(f64, f64)]) -> f64 {
    let mut best = series[0];
    for &(t, v) in series {
        if v < best.1 {
            best = (t, v);
        }
    }
    best.0
}

fn two_phase() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let summary = preset_run("fig3", &Overrides::default(), dir.path())?;
    let elapsed = start.elapsed();
    let runs = summary.series_for("fig3", Beta::Finite(100.0));
    let good = runs
        .iter()
        .filter(|s| {
            let early = s.records.iter().any(|r| (2.0..=6.0).contains(&r.time) && r.align_e.is_some_and(|a| a > 0.9));
            let last = s.records.last().expect("records");
            early && (last.time - 20.0).abs() < 1e-9 && last.align_f.is_some_and(|a| a > 0.9)
        })
        .count();
    let detail = format!("{good}/{} trials align with E early and F at t=20", runs.len());
    if good < 4 {
        return Err(detail);
    }
    within_budget(detail, elapsed, 30.0)
}

fn zero_temperature_collapse() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let overrides = Overrides { betas: Some(vec![Beta::Infinite]), ..Overrides::default() };
    let start = Instant::now();
    let summary = preset_run("fig1", &overrides, dir.path())?;
    let elapsed = start.elapsed();
    let spectral = &summary.models[0].spectral;
    let gamma = spectral.gamma.ok_or("fig1 has no spectral gap")?;
    let p = tokenflow::harness::preset("fig1", 0).map_err(|e| e.to_string())?.p;
    let threshold = -p * gamma / spectral.sigma_max_b * 0.75;
    let series = summary.series_for("fig1", Beta::Infinite);
    let w2 = column(&series[0].records, |r| r.w2_to_target);
    let window: Vec<_> = w2.iter().filter(|(t, _)| (0.5 - 1e-9..=5.0 + 1e-9).contains(t)).collect();
    let worst_rise = window.windows(2).map(|p| p[1].1 - p[0].1).fold(f64::NEG_INFINITY, f64::max);
    let fit: Vec<_> = w2.iter().filter(|(t, _)| (1.0 - 1e-9..=4.0 + 1e-9).contains(t)).collect();
    let slope = ls_slope(&fit.iter().map(|p| p.0).collect::<Vec<_>>(), &fit.iter().map(|p| p.1.ln()).collect::<Vec<_>>());
    let detail = format!("max rise {worst_rise:.2e}, log-slope {slope:.3} vs {threshold:.3}");
    if worst_rise > 1e-6 || slope > threshold {
        return Err(detail);
    }
    within_budget(detail, elapsed, 60.0)
}

fn lyapunov_decay() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(2024);
    let mut min_ratio: f64 = f64::INFINITY;
    let mut worst_rise: f64 = 0.0;
    for k in 0..10 {
        let d = [3, 5, 10][k % 3];
        let model = random_symmetric_vbt_model(d, 0.5, &mut rng);
        let e = model.e.as_ref().ok_or("model without E")?;
        let rate = 2.0 * e.gap() / model.sigma_max_b;
        let init = Ensemble::sample_uniform(200, d, &mut rng);
        let cfg = SimConfig { beta: Beta::Infinite, dt: 0.01, t_final: 20.0, ..SimConfig::default() };
        let mut series = Vec::new();
        run(&init, &model, &cfg, &mut |_: usize, t: f64, ens: &Ensemble| series.push((t, v_p(ens, &e.space, 1.0))))
            .map_err(|e| e.to_string())?;
        for p in series.windows(2) {
            worst_rise = worst_rise.max((p[1].1 - p[0].1) / p[0].1);
        }
        let fit: Vec<_> = series.iter().filter(|(_, v)| *v > 1e-20).collect();
        let slope = ls_slope(&fit.iter().map(|p| p.0).collect::<Vec<_>>(), &fit.iter().map(|p| p.1.ln()).collect::<Vec<_>>());
        min_ratio = min_ratio.min(slope / (-rate));
    }
    let detail = format!("max relative step rise {worst_rise:.1e}, min fitted/bound rate ratio {min_ratio:.3}");
    if worst_rise > 1e-12 || min_ratio < 0.95 {
        return Err(detail);
    }
    within_budget(detail, start.elapsed(), 120.0)
}

fn metastability_window() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let summary = preset_run("fig4", &Overrides::default(), dir.path())?;
    let elapsed = start.elapsed();
    let label = summary.models[0].label.clone();
    let low = summary.series_for(&label, Beta::Finite(10.0));
    let high = summary.series_for(&label, Beta::Finite(1000.0));
    let inf = summary.series_for(&label, Beta::Infinite);
    let later = low
        .iter()
        .zip(&high)
        .filter(|(a, b)| first_argmin(&column(&b.records, |r| r.w2_to_target)) > first_argmin(&column(&a.records, |r| r.w2_to_target)))
        .count();
    let at_end = inf
        .iter()
        .filter(|s| {
            let w2 = column(&s.records, |r| r.w2_to_target);
            let last = *w2.last().expect("w2 recorded");
            w2.iter().all(|&(_, v)| last.1 <= v)
        })
        .count();
    let detail = format!(
        "t*(10³) > t*(10) in {later}/{} trials, β=∞ minimum at t_final in {at_end}/{}",
        low.len(),
        inf.len()
    );
    if later < 15 || at_end != inf.len() || low.len() != 20 {
        return Err(detail);
    }
    within_budget(detail, elapsed, 600.0)
}

fn w2_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(55);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let n = 2 + k % 6;
        let d = [2, 3, 10][k % 3];
        let a = Ensemble::sample_uniform(n, d, &mut rng);
        let b = Ensemble::sample_uniform(n, d, &mut rng);
        let fast = w2_empirical(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((fast - w2_by_enumeration(&a, &b)).abs());
    }
    let detail = format!("max |error| {worst:.1e} over 200 instances");
    if worst > 1e-9 {
        return Err(detail);
    }
    within_budget(detail, start.elapsed(), 10.0)
}

fn random_subspace(d: usize, rng: &mut SeededRng) -> Subspace {
    let k = 1 + (rng.uniform01() * (d - 1) as f64) as usize;
    let vectors: Vec<Vec<f64>> = (0..k).map(|_| random_unit(d, rng)).collect();
    Subspace::span(d, &vectors)
}

/// Unit vector with both `‖P_S x‖²` and `‖(Id − P_S)x‖²` at least `margin`.
fn generic_point(s: &Subspace, margin: f64, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let x = random_unit(s.ambient_dim(), rng);
        let u = s.proj_norm_sq(&x);
        if u >= margin && 1.0 - u >= margin {
            return x;
        }
    }
}

fn analytic_identities() -> Outcome {
    let mut rng = SeededRng::new(66);
    let mut failures = Vec::new();

    // (a) and (b)
    let (mut grad_err, mut radial): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let d = 2 + (rng.uniform01() * 9.0) as usize;
        let s = random_subspace(d, &mut rng);
        let x = generic_point(&s, 0.05, &mut rng);
        let p = 0.25 + 1.75 * rng.uniform01();
        let g = grad_r_p(&s, &x, p).map_err(|e| e.to_string())?;
        let fd = fd_gradient(&|y: &[f64]| r_p(&s, y, p).expect("away from S^⊥"), &x, 1e-5);
        grad_err = grad_err.max(norm(&linalg_sub(&g, &fd)) / norm(&g));
        let g1 = grad_r_p(&s, &x, 1.0).map_err(|e| e.to_string())?;
        radial = radial.max(dot(&g1, &x).abs());
    }
    if grad_err > 1e-5 {
        failures.push(format!("(a) gradient rel err {grad_err:.1e}"));
    }
    if radial > 1e-12 {
        failures.push(format!("(b) radial component {radial:.1e}"));
    }

    // (c) and (d)
    let (mut jac_err, mut kernel): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let d = [3, 5, 10][(rng.uniform01() * 3.0) as usize];
        let model = random_symmetric_vbt_model(d, 0.3, &mut rng);
        let e = &model.e.as_ref().ok_or("model without E")?.space;
        let x = generic_point(e, 0.05, &mut rng);
        let jac = pi_jacobian(e, &x, EPS_PERP).map_err(|e| e.to_string())?;
        let fd = fd_jacobian(&|y: &[f64]| pi_map(e, y, EPS_PERP).expect("away from E^⊥"), &x, 1e-6);
        for i in 0..d {
            for k in 0..d {
                jac_err = jac_err.max((jac.get(i, k) - fd[i][k]).abs());
            }
        }
        let moved = jac.mul_vec(&zero_temp_drift(&x, &model));
        kernel = kernel.max(norm(&moved));
    }
    if jac_err > 1e-6 {
        failures.push(format!("(c) DΠ err {jac_err:.1e}"));
    }
    if kernel > 1e-10 {
        failures.push(format!("(d) ‖DΠ·v∞‖ {kernel:.1e}"));
    }

    // (e)
    let mut slack_e = f64::INFINITY;
    for k in 0..10_000 {
        let d = 2 + k % 9;
        let s = random_subspace(d, &mut rng);
        let x = random_unit(d, &mut rng);
        let p = [0.25, 0.5, 1.0][k % 3];
        let (Ok(r), Ok(px)) = (r_p(&s, &x, p), pi_map(&s, &x, EPS_PERP)) else { continue };
        slack_e = slack_e.min(2.0 * r - dist_sq(&x, &px));
    }
    if slack_e < -1e-12 {
        failures.push(format!("(e) pointwise slack {slack_e:.1e}"));
    }

    // (f)
    let mut slack_f = f64::INFINITY;
    for k in 0..100 {
        let d = [3, 5, 10][k % 3];
        let s = random_subspace(d, &mut rng);
        let n = 2 + k % 29;
        let ens = Ensemble::sample_uniform(n, d, &mut rng);
        let p = [0.25, 0.5, 1.0][k % 3];
        let target = pushforward_pi(&ens, &s, EPS_PERP).map_err(|e| e.to_string())?;
        let w2 = w2_empirical(&ens, &target).map_err(|e| e.to_string())?;
        slack_f = slack_f.min(2.0 * v_p(&ens, &s, p) - w2 * w2);
    }
    if slack_f < -1e-12 {
        failures.push(format!("(f) ensemble slack {slack_f:.1e}"));
    }

    let detail = format!(
        "∇R_p {grad_err:.1e}, radial {radial:.1e}, DΠ {jac_err:.1e}, DΠ·v∞ {kernel:.1e}, slack {slack_e:.1e}/{slack_f:.1e}"
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

fn linalg_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn laplace_principle() -> Outcome {
    let mut rng = SeededRng::new(77);
    let ens = Ensemble::sample_uniform(10_000, 3, &mut rng);
    let probes: Vec<Vec<f64>> = (0..50).map(|_| random_unit(3, &mut rng)).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for b in [Matrix::identity(3), Matrix::from_diag(&[1.0, 2.0, 3.0])] {
        let (sigma_min, _) = singular_extremes(&b);
        let mut maxima = Vec::new();
        for beta in [10.0, 100.0, 1000.0] {
            let r = ((beta + 1.0f64).ln() / beta).sqrt();
            let mut worst: f64 = 0.0;
            for x in &probes {
                let residual = laplace_residual(&ens, &b, beta, x);
                let mass = cap_mass(&ens, &laplace_maximizer(&b, x), r);
                let rhs = laplace_rhs(r, r, beta, sigma_min, mass).map_err(|e| e.to_string())?;
                ok &= residual <= rhs;
                worst = worst.max(residual);
            }
            maxima.push(worst);
        }
        ok &= maxima.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("max residual {:.3}/{:.3}/{:.3}", maxima[0], maxima[1], maxima[2]));
    }
    ensure(ok, parts.join("; "))
}

fn cbo_equivalence() -> Outcome {
    let mut rng = SeededRng::new(88);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 1 + (rng.uniform01() * 50.0) as usize;
        let d = 2 + (rng.uniform01() * 9.0) as usize;
        let beta = 100.0 * rng.uniform01();
        let b = random_symmetric(d, &mut rng);
        let ens = Ensemble::sample_uniform(n, d, &mut rng);
        for i in 0..n {
            let a = attention_consensus(&ens, &b, beta, i);
            let c = cbo_consensus(&ens, &b, beta, ens.token(i));
            worst = worst.max(a.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
    }
    ensure(worst <= 1e-12, format!("max difference {worst:.1e}"))
}

fn gradient_flow_energetics() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let overrides = Overrides { betas: Some(vec![Beta::Finite(1.0)]), ..Overrides::default() };
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, sign) in [("gradflow-max-spd", 1.0), ("gradflow-min-spd", -1.0)] {
        let summary = preset_run(name, &overrides, &dir.path().join(name))?;
        let mut worst: f64 = 0.0;
        for s in summary.series_for(name, Beta::Finite(1.0)) {
            let energy = column(&s.records, |r| r.energy);
            for p in energy.windows(2) {
                worst = worst.max(sign * (p[0].1 - p[1].1) / p[0].1.abs());
            }
        }
        ok &= worst <= 1e-8;
        parts.push(format!("{name} worst wrong-way step {worst:.1e}"));
    }
    let mut rng = SeededRng::new(99);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = 2 + (rng.uniform01() * 8.0) as usize;
        let b = random_symmetric(d, &mut rng);
        let eig = tokenflow::linalg::symmetric_eigen(&b).map_err(|e| e.to_string())?;
        let k = (rng.uniform01() * d as f64) as usize;
        let v = eig.vector(k);
        let lambda = eig.values[k];
        let minus: Vec<f64> = v.iter().map(|c| -c).collect();
        let ens = Ensemble::from_points(d, &[v.clone(), minus]).map_err(|e| e.to_string())?;
        let expected = 0.5 * (lambda.exp() + (-lambda).exp());
        worst = worst.max((interaction_energy(&ens, &b) - expected).abs());
    }
    ok &= worst <= 1e-12;
    parts.push(format!("bipartite energy err {worst:.1e}"));
    ensure(ok, parts.join("; "))
}

fn stationarity() -> Outcome {
    let mut rng = SeededRng::new(111);
    let mut worst_drift: f64 = 0.0;
    for _ in 0..20 {
        let d = 2 + (rng.uniform01() * 8.0) as usize;
        let v = random_symmetric(d, &mut rng);
        let b = random_symmetric(d, &mut rng).add(&Matrix::identity(d).scaled(4.0));
        let model = build_model(b, v.clone(), CLUSTER_TOL).map_err(|e| e.to_string())?;
        let eig = tokenflow::linalg::symmetric_eigen(&v).map_err(|e| e.to_string())?;
        let e = eig.vector((rng.uniform01() * d as f64) as usize);
        let minus: Vec<f64> = e.iter().map(|c| -c).collect();
        let collapsed = Ensemble::collapsed(&e, 7).map_err(|e| e.to_string())?;
        let bipartite = Ensemble::from_points(d, &[e.clone(), e.clone(), minus.clone(), e.clone(), minus])
            .map_err(|e| e.to_string())?;
        for ens in [&collapsed, &bipartite] {
            for beta in [Beta::Finite(1.0), Beta::Finite(50.0)] {
                let drift = drift_field(ens, &model, beta);
                worst_drift = worst_drift.max(drift.iter().fold(0.0, |m, x| m.max(x.abs())));
            }
        }
    }

    let v_diag = [1.0, 2.0];
    let model = build_model(Matrix::identity(2), Matrix::from_diag(&v_diag), CLUSTER_TOL).map_err(|e| e.to_string())?;
    let angle: f64 = 0.3;
    let x0 = [angle.cos(), angle.sin()];
    let oja_error = |dt: f64| -> Result<(f64, f64), String> {
        let init = Ensemble::collapsed(&x0, 4).map_err(|e| e.to_string())?;
        let cfg = SimConfig { beta: Beta::Finite(1.0), dt, t_final: 15.0, ..SimConfig::default() };
        let mut err: f64 = 0.0;
        let last = run(&init, &model, &cfg, &mut |_: usize, t: f64, ens: &Ensemble| {
            let exact = oja_closed_form(&v_diag, &x0, t);
            for x in ens.tokens() {
                err = err.max(dist_sq(x, &exact).sqrt());
            }
        })
        .map_err(|e| e.to_string())?;
        let to_e2 = last.tokens().map(|x| dist_sq(x, &[0.0, 1.0]).sqrt()).fold(0.0, f64::max);
        Ok((err, to_e2))
    };
    let (err_coarse, to_e2) = oja_error(0.01)?;
    let (err_fine, _) = oja_error(0.005)?;
    let order = err_coarse / err_fine;
    let detail = format!(
        "max stationary drift {worst_drift:.1e}; chordal distance to e2 at t=15 {to_e2:.1e}; closed-form error {err_coarse:.1e} (ratio {order:.2} on halving dt)"
    );
    ensure(worst_drift <= 1e-12 && to_e2 <= 1e-3 && err_coarse <= 0.05 && (1.6..=2.4).contains(&order), detail)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = tokenflow::harness::preset("fig3", 0).map_err(|e| e.to_string())?;
    run_experiment(&cfg, a.path(), quiet()).map_err(|e| e.to_string())?;
    cfg.output.workers = 2;
    run_experiment(&cfg, b.path(), quiet()).map_err(|e| e.to_string())?;
    let names = relative_files(a.path()).map_err(|e| e.to_string())?;
    let other = relative_files(b.path()).map_err(|e| e.to_string())?;
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .collect();
    let snapshots = names.iter().filter(|n| n.starts_with("snapshots/")).count();
    ensure(
        names == other && differing.is_empty() && snapshots > 0 && names.iter().any(|n| n.ends_with(".csv")),
        format!(
            "{} files compared ({snapshots} snapshots), {} differ {:?}, same file set: {}",
            names.len(),
            differing.len(),
            differing,
            names == other
        ),
    )
}

/// Sorted relative paths of every file under `root`, except `timing.json`.
fn relative_files(root: &std::path::Path) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
                if rel != "timing.json" {
                    out.push(rel);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 two-phase dynamics", two_phase),
        ("2 zero-temperature collapse", zero_temperature_collapse),
        ("3 Lyapunov decay", lyapunov_decay),
        ("4 metastability window", metastability_window),
        ("5 W2 oracle", w2_oracle),
        ("6 analytic identities", analytic_identities),
        ("7 Laplace principle", laplace_principle),
        ("8 CBO equivalence", cbo_equivalence),
        ("9 gradient-flow energetics", gradient_flow_energetics),
        ("10 stationarity", stationarity),
        ("11 determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, criterion) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.split(' ').next() == Some(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = criterion();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
