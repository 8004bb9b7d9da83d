//! Metastability: W2 to Π♯ρ0 is smallest at a time that grows with β.
//! Runs a reduced fig4 sweep through the harness and prints t*(β) per trial.

use tokenflow::harness::{preset, run_experiment, InitSpec, RunOptions};
use tokenflow::Beta;

fn main() {
    let mut cfg = preset("fig4", 0).unwrap();
    cfg.trials = 3;
    cfg.init = InitSpec::Uniform { n: 150, d: 10 };
    let out = std::env::temp_dir().join("tokenflow-metastability");
    let summary = run_experiment(&cfg, &out, RunOptions { quiet: true }).unwrap();

    for beta in &cfg.sim.betas {
        let argmins: Vec<String> = summary
            .series_for("fig4", *beta)
            .iter()
            .map(|s| {
                let (t, _) = s
                    .records
                    .iter()
                    .filter_map(|r| r.w2_to_target.map(|w| (r.time, w)))
                    .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
                format!("{t:.1}")
            })
            .collect();
        let label = match beta {
            Beta::Infinite => "inf".to_string(),
            Beta::Finite(b) => b.to_string(),
        };
        println!("beta {label:>5}: t* = {}", argmins.join(", "));
    }
    println!("artifacts in {}", out.display());
}
