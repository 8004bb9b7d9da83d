//! Runs an experiment described in TOML and lists the files it writes.
//! The same grammar is accepted by `tokenflow run-config <path>`.

use tokenflow::harness::{run_experiment, ExperimentConfig, RunOptions, PRESETS};

const CONFIG: &str = r#"
name = "quickstart"
seed = 7
trials = 2

[[model]]
label = "diag"
b = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.5]]
v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]

[init]
kind = "uniform"
n = 64
d = 3

[sim]
betas = [10.0, "inf"]
dt = 0.01
t_final = 2.0
record_stride = 10

[output]
snapshot_times = [0.0, 2.0]
"#;

fn main() {
    println!("presets:");
    for p in PRESETS {
        println!("  {:<18} {}", p.name, p.summary);
    }

    let cfg = ExperimentConfig::from_toml_str(CONFIG, "inline config").unwrap();
    let out = std::env::temp_dir().join("tokenflow-quickstart");
    let summary = run_experiment(&cfg, &out, RunOptions { quiet: true }).unwrap();
    let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    println!("wrote to {}:", out.display());
    for f in files {
        println!("  {}", f.to_string_lossy());
    }
    for f in &summary.finals {
        println!("{} beta={} mean final values {:?}", f.model, f.beta, f.mean_last);
    }
}
