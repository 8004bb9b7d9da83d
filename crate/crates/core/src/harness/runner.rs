//! Executes an [`ExperimentConfig`] and writes its artifacts.
//!
//! Output layout under the output directory:
//!
//! - `{model}_beta-{β}_trial-{k}.csv`: metrics, one row per record step
//! - `{model}_beta-{β}_bands.csv`: mean and quantile bands (trials ≥ 2)
//! - `snapshots/…_t-{time}.csv`: token coordinates at requested times
//! - `config.toml`: the resolved config; `run-config` on it reproduces the run
//! - `summary.json`: written last, via rename
//! - `timing.json`: wall-clock seconds (kept apart so `summary.json` is deterministic)

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::config::{ExperimentConfig, ModelSpec, Overrides};
use super::output::{self, write_atomic};
use super::{presets, HarnessError};
use crate::bounds::{self, BoundParams, EnvelopeForm, ZeroTempEnvelope};
use crate::dynamics::{run, Beta, Ensemble};
use crate::metrics::{v_p, MetricRecord, MetricTracker};
use crate::spectral::{build_model, ModelSummary, SpectralError, SpectralModel, CLUSTER_TOL};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Suppress per-run progress lines on stderr.
    pub quiet: bool,
}

/// Metric series of one `(model, β, trial)` run.
#[derive(Debug, Clone)]
pub struct RunSeries {
    pub model: String,
    pub beta: Beta,
    pub trial: usize,
    pub records: Vec<MetricRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub label: String,
    /// Where the E-dependent columns come from: `symmetric`, `real-spectrum` or `absent`.
    pub e_metrics: String,
    pub spectral: ModelSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub model: String,
    pub beta: String,
    pub trial: usize,
    pub csv: String,
    pub last: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalMetrics {
    pub model: String,
    pub beta: String,
    pub trials: usize,
    /// Mean over trials of the last recorded value of each column.
    pub mean_last: BTreeMap<String, Value>,
}

/// Machine-readable digest of a finished experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub notes: BTreeMap<String, String>,
    pub models: Vec<ModelReport>,
    pub finals: Vec<FinalMetrics>,
    pub runs: Vec<RunReport>,
    pub bands: Vec<String>,
    pub snapshots: Vec<String>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub series: Vec<RunSeries>,
}

impl RunSummary {
    /// Series of one `(model, β)` pair, ordered by trial.
    pub fn series_for(&self, model: &str, beta: Beta) -> Vec<&RunSeries> {
        self.series.iter().filter(|s| s.model == model && s.beta == beta).collect()
    }
}

/// Resolves a preset, applies overrides and runs it.
pub fn run_preset(name: &str, overrides: &Overrides, out_dir: &Path, opts: RunOptions) -> Result<RunSummary, HarnessError> {
    let mut cfg = presets::preset(name, overrides.seed.unwrap_or(0))?;
    overrides.apply(&mut cfg);
    run_experiment(&cfg, out_dir, opts)
}

/// Parses a config file, applies overrides and runs it.
pub fn run_config(path: &Path, overrides: &Overrides, out_dir: &Path, opts: RunOptions) -> Result<RunSummary, HarnessError> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    overrides.apply(&mut cfg);
    run_experiment(&cfg, out_dir, opts)
}

struct Prepared<'a> {
    spec: &'a ModelSpec,
    model: SpectralModel,
}

impl Prepared<'_> {
    fn allow_nonsymmetric(&self) -> bool {
        !self.spec.require_symmetric
    }
}

/// Builds the spectral models and enforces the assumptions the requested
/// metrics rely on.
fn prepare_models(cfg: &ExperimentConfig) -> Result<Vec<Prepared<'_>>, HarnessError> {
    let mut out = Vec::with_capacity(cfg.models.len());
    for spec in &cfg.models {
        let (b, v) = spec.matrices()?;
        let model = build_model(b, v, CLUSTER_TOL).map_err(|e| match e {
            SpectralError::SingularB(s) => {
                HarnessError::AssumptionViolation(format!("model '{}': B must be invertible (σ_min = {s:.3e})", spec.label))
            }
            other => HarnessError::Validation(vec![format!("model '{}': {other}", spec.label)]),
        })?;
        if spec.require_symmetric && model.e.is_none() && (cfg.metrics.w2 || cfg.metrics.v_p) {
            return Err(HarnessError::AssumptionViolation(format!(
                "model '{}': VBᵀ is not symmetric (relative asymmetry {:.3e}) but w2/v_p need its dominant eigenspace; \
                 disable them or set require_symmetric = false",
                spec.label, model.vbt_asymmetry
            )));
        }
        out.push(Prepared { spec, model });
    }
    Ok(out)
}

/// Runs every `(model, β, trial)` combination and writes all artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, opts: RunOptions) -> Result<RunSummary, HarnessError> {
    let started = Instant::now();
    cfg.validate()?;
    let models = prepare_models(cfg)?;
    let inits = (0..cfg.trials).map(|k| cfg.initial_ensemble(k)).collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    write_atomic(&out_dir.join("config.toml"), &cfg.to_toml_string())?;

    let jobs: Vec<(usize, usize, usize)> = (0..models.len())
        .flat_map(|m| (0..cfg.sim.betas.len()).flat_map(move |b| (0..cfg.trials).map(move |k| (m, b, k))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))?;
    let total = jobs.len();
    let results: Vec<Result<JobOutput, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, b, k)| {
                let t0 = Instant::now();
                let res = run_job(cfg, &models[m], cfg.sim.betas[b], k, &inits[k], out_dir);
                if !opts.quiet {
                    eprintln!(
                        "{} beta={} trial={} done in {:.1}s ({} runs total)",
                        models[m].spec.label,
                        cfg.sim.betas[b],
                        k,
                        t0.elapsed().as_secs_f64(),
                        total
                    );
                }
                res
            })
            .collect()
    });
    let outputs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut bands = Vec::new();
    if cfg.trials >= 2 {
        for prepared in &models {
            for &beta in &cfg.sim.betas {
                let trials: Vec<Vec<MetricRecord>> = outputs
                    .iter()
                    .filter(|o| o.series.model == prepared.spec.label && o.series.beta == beta)
                    .map(|o| o.series.records.clone())
                    .collect();
                let rows = output::quantile_bands(&trials, cfg.quantiles[0], cfg.quantiles[1])?;
                let mut header = common_header(cfg, prepared, beta);
                header.insert(1, ("kind".into(), "bands".into()));
                header.push(("quantiles".into(), format!("{} {}", cfg.quantiles[0], cfg.quantiles[1])));
                let name = output::bands_file_name(&prepared.spec.label, beta);
                write_atomic(&out_dir.join(&name), &output::bands_csv(&header, &rows))?;
                bands.push(name);
            }
        }
    }

    let summary = summarize(cfg, &models, outputs, bands, out_dir, started);
    let json = serde_json::to_string_pretty(&summary).expect("summaries always serialize") + "\n";
    write_atomic(&out_dir.join("timing.json"), &format!("{{\n  \"wall_clock_seconds\": {}\n}}\n", summary.wall_clock_seconds))?;
    write_atomic(&out_dir.join("summary.json"), &json)?;
    Ok(summary)
}

struct JobOutput {
    series: RunSeries,
    csv: String,
    snapshots: Vec<String>,
}

fn common_header(cfg: &ExperimentConfig, prepared: &Prepared<'_>, beta: Beta) -> Vec<(String, String)> {
    let mut h = vec![
        ("format".to_string(), "tokenflow-metrics/1".to_string()),
        ("experiment".into(), cfg.name.clone()),
        ("model".into(), prepared.spec.label.clone()),
        ("beta".into(), beta.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("e_metrics".into(), e_metrics_source(prepared).into()),
        ("config".into(), cfg.to_json_line()),
    ];
    h.extend(prepared.model.summary_lines().into_iter().map(|(k, v)| (format!("spectral.{k}"), v)));
    h
}

fn e_metrics_source(prepared: &Prepared<'_>) -> &'static str {
    match prepared.model.metric_space(prepared.allow_nonsymmetric()) {
        None => "absent",
        Some(_) if prepared.model.e.is_some() => "symmetric",
        Some(_) => "real-spectrum",
    }
}

/// Record step closest to `time`.
fn snapshot_step(time: f64, dt: f64, stride: usize, last: usize) -> usize {
    let step = (time / dt).round() as usize;
    let snapped = ((step as f64 / stride as f64).round() as usize) * stride;
    snapped.min(last)
}

fn run_job(
    cfg: &ExperimentConfig,
    prepared: &Prepared<'_>,
    beta: Beta,
    trial: usize,
    init: &Ensemble,
    out_dir: &Path,
) -> Result<JobOutput, HarnessError> {
    let sim = cfg.sim_config(beta);
    let steps = sim.num_steps();
    let model = &prepared.model;
    let mut tracker = MetricTracker::new(model, cfg.p, cfg.metrics.toggles(), cfg.sim.w2_stride, steps)
        .allow_nonsymmetric(prepared.allow_nonsymmetric());
    let wanted: Vec<usize> = cfg
        .output
        .snapshot_times
        .iter()
        .map(|&t| snapshot_step(t, sim.dt, sim.record_stride, steps))
        .collect();
    let mut captured: Vec<(usize, Ensemble)> = Vec::new();
    run(init, model, &sim, &mut |step: usize, time: f64, ens: &Ensemble| {
        use crate::dynamics::Observer;
        tracker.observe(step, time, ens);
        if wanted.contains(&step) {
            captured.push((step, ens.clone()));
        }
    })
    .map_err(|e| HarnessError::Runtime(format!("model '{}', beta {beta}, trial {trial}: {e}", prepared.spec.label)))?;
    let records = tracker.into_records();

    let mut header = common_header(cfg, prepared, beta);
    header.insert(1, ("kind".into(), "metrics".into()));
    header.insert(5, ("trial".into(), trial.to_string()));
    let envelopes = cfg.metrics.envelopes.then(|| envelope_rows(cfg, prepared, beta, init, &records));
    let csv = output::run_file_name(&prepared.spec.label, beta, trial);
    write_atomic(&out_dir.join(&csv), &output::metrics_csv(&header, &records, envelopes.as_deref()))?;

    let mut snapshots = Vec::new();
    captured.dedup_by_key(|(s, _)| *s);
    for (_, ens) in &captured {
        let name = output::snapshot_file_name(&prepared.spec.label, beta, trial, ens.time());
        let header = vec![
            ("format".to_string(), "tokenflow-snapshot/1".to_string()),
            ("experiment".into(), cfg.name.clone()),
            ("model".into(), prepared.spec.label.clone()),
            ("beta".into(), beta.to_string()),
            ("trial".into(), trial.to_string()),
            ("time".into(), output::fmt_f64(ens.time())),
            ("n".into(), ens.len().to_string()),
            ("d".into(), ens.dim().to_string()),
        ];
        write_atomic(&out_dir.join(&name), &output::snapshot_csv(&header, ens))?;
        snapshots.push(name);
    }
    Ok(JobOutput { series: RunSeries { model: prepared.spec.label.clone(), beta, trial, records }, csv, snapshots })
}

/// Theoretical curves at each record time; all absent without a usable `E`.
fn envelope_rows(
    cfg: &ExperimentConfig,
    prepared: &Prepared<'_>,
    beta: Beta,
    init: &Ensemble,
    records: &[MetricRecord],
) -> Vec<[Option<f64>; 4]> {
    let model = &prepared.model;
    let params = model.metric_space(prepared.allow_nonsymmetric()).and_then(|e| {
        let gamma = e.gap();
        let v_p0 = v_p(init, &e.space, cfg.p);
        (gamma.is_finite() && v_p0.is_finite()).then_some(BoundParams {
            c0: cfg.metrics.c0,
            c1: cfg.metrics.c1,
            p: cfg.p,
            gamma,
            sigma_max_b: model.sigma_max_b,
            sigma_min_b: model.sigma_min_b,
            v_p0,
            beta: beta.finite().unwrap_or(f64::INFINITY),
        })
    });
    records
        .iter()
        .map(|r| {
            let Some(bp) = params else { return [None; 4] };
            let t = r.time;
            let (stated, proof) = match bounds::zero_temp_envelope(t, &bp, EnvelopeForm::W2) {
                ZeroTempEnvelope::W2 { stated, proof } => (stated, proof),
                ZeroTempEnvelope::Lyapunov(_) => unreachable!("w2 form requested"),
            };
            let lyap = match bounds::zero_temp_envelope(t, &bp, EnvelopeForm::Lyapunov) {
                ZeroTempEnvelope::Lyapunov(v) => v,
                ZeroTempEnvelope::W2 { .. } => unreachable!("lyapunov form requested"),
            };
            // at β = ∞ the thermal term vanishes and the theorem reduces to the stated decay
            let theorem = if beta.is_infinite() { stated } else { bounds::theorem_envelope(t, &bp) };
            [Some(theorem), Some(stated), Some(proof), Some(lyap)]
        })
        .collect()
}

fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(output::fmt_f64(x)))
}

fn record_map(values: impl Iterator<Item = (&'static str, Option<f64>)>) -> BTreeMap<String, Value> {
    values.filter_map(|(k, v)| v.map(|v| (k.to_string(), json_number(v)))).collect()
}

fn summarize(
    cfg: &ExperimentConfig,
    models: &[Prepared<'_>],
    outputs: Vec<JobOutput>,
    bands: Vec<String>,
    out_dir: &Path,
    started: Instant,
) -> RunSummary {
    let cols = &MetricRecord::COLUMNS;
    let runs: Vec<RunReport> = outputs
        .iter()
        .map(|o| RunReport {
            model: o.series.model.clone(),
            beta: o.series.beta.to_string(),
            trial: o.series.trial,
            csv: o.csv.clone(),
            last: o.series.records.last().map_or_else(BTreeMap::new, |r| record_map(cols.iter().copied().zip(r.values()))),
        })
        .collect();
    let mut finals = Vec::new();
    for prepared in models {
        for &beta in &cfg.sim.betas {
            let lasts: Vec<[Option<f64>; 7]> = outputs
                .iter()
                .filter(|o| o.series.model == prepared.spec.label && o.series.beta == beta)
                .filter_map(|o| o.series.records.last().map(MetricRecord::values))
                .collect();
            let means = (0..cols.len()).map(|c| {
                let vals: Option<Vec<f64>> = lasts.iter().map(|v| v[c]).collect();
                (cols[c], vals.map(|v| v.iter().sum::<f64>() / v.len() as f64))
            });
            finals.push(FinalMetrics {
                model: prepared.spec.label.clone(),
                beta: beta.to_string(),
                trials: lasts.len(),
                mean_last: record_map(means),
            });
        }
    }
    let reports = models
        .iter()
        .map(|p| ModelReport { label: p.spec.label.clone(), e_metrics: e_metrics_source(p).into(), spectral: p.model.summary() })
        .collect();
    let snapshots = outputs.iter().flat_map(|o| o.snapshots.iter().cloned()).collect();
    RunSummary {
        experiment: cfg.name.clone(),
        seed: cfg.seed,
        notes: cfg.notes.clone(),
        models: reports,
        finals,
        runs,
        bands,
        snapshots,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        output_dir: out_dir.to_path_buf(),
        series: outputs.into_iter().map(|o| o.series).collect(),
    }
}
