use tokenflow::harness::{exit_code, preset, run_config, run_experiment, ExperimentConfig, HarnessError, InitSpec, Overrides, RunOptions};
use tokenflow::Beta;

const QUIET: RunOptions = RunOptions { quiet: true };

const MINIMAL: &str = r#"
name = "minimal"

[[model]]
label = "m"
b = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]
v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]

[init]
kind = "uniform"
n = 20
d = 3

[sim]
betas = [5.0]
dt = 0.01
t_final = 0.1
"#;

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn minimal_config_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("minimal.toml");
    std::fs::write(&path, MINIMAL).unwrap();
    let out = dir.path().join("out");
    let summary = run_config(&path, &Overrides::default(), &out, QUIET).unwrap();
    assert_eq!(summary.runs.len(), 1);
    let csv = std::fs::read_to_string(out.join(&summary.runs[0].csv)).unwrap();
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "time,align_E,align_F,align_Fabs,w2_to_target,v_p,energy");
    assert_eq!(lines.len(), 1 + 11);
    assert!(out.join("summary.json").exists() && out.join("config.toml").exists());
}

#[test]
fn validation_errors_name_the_field() {
    let text = MINIMAL.replace("dt = 0.01", "dt = -1.0").replace("n = 20", "n = 0");
    let err = ExperimentConfig::from_toml_str(&text, "test").unwrap().validate().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("init.n") && msg.contains("dt"), "{msg}");
    assert_eq!(err.exit_code(), exit_code::VALIDATION);
}

#[test]
fn unknown_keys_are_rejected() {
    let text = MINIMAL.replace("[sim]", "[sim]\nstep = 3");
    let err = ExperimentConfig::from_toml_str(&text, "test").unwrap_err();
    assert!(matches!(err, HarnessError::Parse { .. }));
    assert_eq!(err.exit_code(), exit_code::VALIDATION);
}

#[test]
fn singular_b_is_an_assumption_violation() {
    let text = MINIMAL.replace("[0.0, 0.0, 3.0]]\nv", "[0.0, 0.0, 0.0]]\nv");
    let cfg = ExperimentConfig::from_toml_str(&text, "test").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, dir.path(), QUIET).unwrap_err();
    assert!(matches!(err, HarnessError::AssumptionViolation(_)), "{err}");
    assert_eq!(err.exit_code(), exit_code::ASSUMPTION);
}

#[test]
fn nonsymmetric_vbt_with_w2_is_an_assumption_violation() {
    let text = MINIMAL.replace("[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n\n[init]", "[0.5, 1.0, 0.0], [0.0, 0.0, 1.0]]\n\n[init]");
    let cfg = ExperimentConfig::from_toml_str(&text, "test").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, dir.path(), QUIET).unwrap_err();
    assert_eq!(err.exit_code(), exit_code::ASSUMPTION, "{err}");
}

#[test]
fn handwritten_fig3_config_equals_preset() {
    let text = r#"
name = "fig3"
seed = 0
trials = 5

[[model]]
label = "fig3"
b = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]
v = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -2.0]]

[init]
kind = "uniform"
n = 200
d = 3

[sim]
betas = [100.0]
dt = 0.01
t_final = 20.0

[output]
snapshot_times = [0.0, 4.0, 9.0, 20.0]
"#;
    let parsed = ExperimentConfig::from_toml_str(text, "test").unwrap();
    assert_eq!(parsed, preset("fig3", 0).unwrap());
}

#[test]
fn presets_round_trip_through_toml() {
    for p in tokenflow::harness::PRESETS {
        let cfg = preset(p.name, 3).unwrap();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string(), p.name).unwrap();
        assert_eq!(back, cfg, "{}", p.name);
    }
}

#[test]
fn reduced_runs_are_byte_identical_and_seed_sensitive() {
    let mut cfg = preset("fig4", 0).unwrap();
    cfg.trials = 2;
    cfg.init = InitSpec::Uniform { n: 40, d: 10 };
    cfg.sim.t_final = 0.5;
    cfg.output.snapshot_times = vec![0.5];
    let run = |cfg: &ExperimentConfig| {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(cfg, dir.path(), QUIET).unwrap();
        let mut files: Vec<String> = summary.runs.iter().map(|r| r.csv.clone()).chain(summary.bands.clone()).chain(summary.snapshots.clone()).collect();
        files.push("summary.json".into());
        files.push("config.toml".into());
        files.iter().map(|f| (f.clone(), std::fs::read(dir.path().join(f)).unwrap())).collect::<Vec<_>>()
    };
    let a = run(&cfg);
    assert_eq!(a, run(&cfg));
    let mut other = cfg.clone();
    other.seed = 1;
    assert_ne!(a, run(&other));
}

#[test]
fn overrides_replace_betas_and_seed() {
    let mut cfg = preset("fig1", 0).unwrap();
    let o = Overrides { seed: Some(9), workers: Some(2), dt: Some(0.02), betas: Some(vec![Beta::Infinite]) };
    o.apply(&mut cfg);
    assert_eq!((cfg.seed, cfg.output.workers, cfg.sim.dt), (9, 2, 0.02));
    assert_eq!(cfg.sim.betas, vec![Beta::Infinite]);
}

#[test]
fn bands_have_mean_and_quantiles() {
    let text = MINIMAL.replace("name = \"minimal\"", "name = \"bands\"\ntrials = 3");
    let cfg = ExperimentConfig::from_toml_str(&text, "test").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path(), QUIET).unwrap();
    assert_eq!(summary.bands.len(), 1);
    let csv = std::fs::read_to_string(dir.path().join(&summary.bands[0])).unwrap();
    let lines = data_lines(&csv);
    assert!(lines[0].starts_with("time,align_E_mean,align_E_lo,align_E_hi,"));
    assert_eq!(lines.len(), 12);
}
