//! Token dynamics on the sphere.
//!
//! Finite inverse temperature uses softmax attention weights
//! `w_ij ∝ exp(β⟨x_i, B x_j⟩)`, consensus `m_i = Σ_j w_ij x_j` and drift
//! `P_{x_i}(V m_i)`. The zero-temperature flow replaces `m_i` by
//! `Bᵀx_i / ‖Bᵀx_i‖`. Both are integrated with synchronous explicit Euler
//! steps followed by retraction onto the sphere.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{axpy, dot, norm, Matrix};
use crate::spectral::SpectralModel;
use crate::sphere::{self, GeometryError, SeededRng, VmfMixture};

/// Allowed deviation from unit norm for ensemble tokens.
pub const UNIT_TOL: f64 = 1e-9;
/// Hard cap on the number of Euler steps in one simulation.
pub const MAX_STEPS: usize = 100_000_000;

// exp() of anything below this is exactly zero in f64
const EXP_UNDERFLOW: f64 = -700.0;
// below this much work per step the drift loop stays sequential
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("retraction failed for token {token} at step {step}: {source}")]
    Retraction {
        step: usize,
        token: usize,
        #[source]
        source: GeometryError,
    },
}

/// Inverse temperature; `Infinite` selects the zero-temperature flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Beta::Infinite),
            other => {
                let b: f64 = other.parse().map_err(|_| format!("invalid beta {s:?}"))?;
                if b.is_infinite() && b > 0.0 {
                    Ok(Beta::Infinite)
                } else if b.is_finite() && b >= 0.0 {
                    Ok(Beta::Finite(b))
                } else {
                    Err(format!("beta must be nonnegative or \"inf\", got {s:?}"))
                }
            }
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Str(String),
        }
        let s = match Raw::deserialize(d)? {
            Raw::Num(x) => x.to_string(),
            Raw::Int(x) => x.to_string(),
            Raw::Str(s) => s,
        };
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `n` unit vectors in `R^d` at inference time `time`: the empirical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    data: Vec<f64>,
    time: f64,
}

impl Ensemble {
    /// Validates unit norms; `data` is row-major `n × dim`.
    pub fn new(dim: usize, data: Vec<f64>, time: f64) -> Result<Self, DynamicsError> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(DynamicsError::InvalidEnsemble(format!(
                "{} coordinates do not form a non-empty set of {dim}-vectors",
                data.len()
            )));
        }
        for (i, x) in data.chunks_exact(dim).enumerate() {
            let n = norm(x);
            if !((n - 1.0).abs() <= UNIT_TOL) {
                return Err(DynamicsError::InvalidEnsemble(format!("token {i} has norm {n}")));
            }
        }
        if !(time >= 0.0) {
            return Err(DynamicsError::InvalidEnsemble(format!("negative time {time}")));
        }
        Ok(Self { dim, data, time })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self, DynamicsError> {
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(DynamicsError::InvalidEnsemble(format!("point of length {} in dimension {dim}", p.len())));
            }
            data.extend_from_slice(p);
        }
        Self::new(dim, data, 0.0)
    }

    /// `n` tokens drawn uniformly from the sphere.
    pub fn sample_uniform(n: usize, dim: usize, rng: &mut SeededRng) -> Self {
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            data.extend(sphere::sample_uniform(dim, rng));
        }
        Self { dim, data, time: 0.0 }
    }

    /// `n` tokens drawn from a vMF mixture.
    pub fn sample_vmf(n: usize, mix: &VmfMixture, rng: &mut SeededRng) -> Self {
        let dim = mix.dim();
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            data.extend(sphere::sample_vmf_mixture(mix, rng));
        }
        Self { dim, data, time: 0.0 }
    }

    /// All tokens at the same point.
    pub fn collapsed(x: &[f64], n: usize) -> Result<Self, DynamicsError> {
        Self::new(x.len(), x.repeat(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn token(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn tokens(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub(crate) fn tokens_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Token `perm[k]` of `self` becomes token `k`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.token(p));
        }
        Self { dim: self.dim, data, time: self.time }
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.tokens().map(|x| (norm(x) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Step size, horizon, temperature and bookkeeping for one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub beta: Beta,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { beta: Beta::Finite(1.0), dt: 0.01, t_final: 1.0, record_stride: 1, seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidConfig(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.dt > self.t_final {
            return bad(format!("dt {} exceeds t_final {}", self.dt, self.t_final));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive".into());
        }
        if let Beta::Finite(b) = self.beta {
            if !(b >= 0.0) || !b.is_finite() {
                return bad(format!("beta must be nonnegative, got {b}"));
            }
        }
        if (self.t_final / self.dt) > MAX_STEPS as f64 {
            return bad(format!("t_final/dt exceeds the step budget of {MAX_STEPS}"));
        }
        Ok(())
    }

    /// `⌈t_final / dt⌉`, ignoring rounding noise in the quotient.
    pub fn num_steps(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Whether metrics and snapshots are taken after `step` steps.
    pub fn is_record_step(&self, step: usize) -> bool {
        step % self.record_stride == 0 || step == self.num_steps()
    }
}

/// `exp(a)` for `a ≤ 0`, flushed to zero below `EXP_UNDERFLOW`.
///
/// Branch-free so the softmax loops vectorize: Cody–Waite reduction by
/// `ln 2`, a degree-13 Taylor polynomial on `|r| ≤ ln2/2`, and a two-step
/// power-of-two scale. Agrees with `f64::exp` to a few ulp. The cutoff keeps
/// every intermediate normal; subnormal arithmetic is slow on common CPUs
/// and the dropped terms are below `1e-304` of the leading weight.
#[inline(always)]
fn exp_nonpositive(a: f64) -> f64 {
    const LOG2E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
    const ROUND: f64 = 6_755_399_441_055_744.0; // 1.5·2⁵²
    let x = a.max(EXP_UNDERFLOW);
    let t = x * LOG2E + ROUND;
    let kf = t - ROUND;
    let k = t.to_bits() as i64 - ROUND.to_bits() as i64;
    let r = (x - kf * LN2_HI) - kf * LN2_LO;
    let mut p = 1.0 / 6_227_020_800.0;
    for c in [
        1.0 / 479_001_600.0,
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ] {
        p = p * r + c;
    }
    let k1 = k >> 1;
    let s1 = f64::from_bits(((k1 + 1023) as u64) << 52);
    let s2 = f64::from_bits(((k - k1 + 1023) as u64) << 52);
    let y = p * s1 * s2;
    if a < EXP_UNDERFLOW {
        0.0
    } else {
        y
    }
}

/// Replaces logits by normalized softmax weights. The normalizer is at
/// least one because the maximum maps to `exp(0)`.
fn normalize_logits(w: &mut [f64], max: f64) {
    let mut sum = 0.0;
    for wj in w.iter_mut() {
        *wj = exp_nonpositive(*wj - max);
        sum += *wj;
    }
    let inv = 1.0 / sum;
    w.iter_mut().for_each(|wj| *wj *= inv);
}

/// Keys `B x_j` and values `x_j` stored coordinate-major (`d × n`), so the
/// inner loops run over tokens.
struct Attention {
    n: usize,
    d: usize,
    keys: Vec<f64>,
    values: Vec<f64>,
}

impl Attention {
    fn new(ensemble: &Ensemble, b: &Matrix) -> Self {
        let (n, d) = (ensemble.len(), ensemble.dim());
        let mut keys = vec![0.0; n * d];
        let mut values = vec![0.0; n * d];
        let mut bx = vec![0.0; d];
        for (j, x) in ensemble.tokens().enumerate() {
            b.mul_vec_into(x, &mut bx);
            for k in 0..d {
                keys[k * n + j] = bx[k];
                values[k * n + j] = x[k];
            }
        }
        Self { n, d, keys, values }
    }

    /// Unnormalized weights `exp(β⟨x, B x_j⟩ − max)` written into `w`;
    /// returns their sum, which is at least one.
    fn weights(&self, x: &[f64], beta: f64, w: &mut [f64]) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2.
            return unsafe { self.weights_avx2(x, beta, w) };
        }
        self.weights_portable(x, beta, w)
    }

    /// Same arithmetic as the portable path, compiled for wider vectors;
    /// no FMA, so results are bit-identical.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn weights_avx2(&self, x: &[f64], beta: f64, w: &mut [f64]) -> f64 {
        self.weights_portable(x, beta, w)
    }

    #[inline(always)]
    fn weights_portable(&self, x: &[f64], beta: f64, w: &mut [f64]) -> f64 {
        let n = self.n;
        w.copy_from_slice(&self.keys[..n]);
        w.iter_mut().for_each(|l| *l *= x[0]);
        for (k, &xk) in x.iter().enumerate().skip(1) {
            for (l, &key) in w.iter_mut().zip(&self.keys[k * n..(k + 1) * n]) {
                *l += xk * key;
            }
        }
        w.iter_mut().for_each(|l| *l *= beta);
        let max = lanes_max(w);
        w.iter_mut().for_each(|l| *l = exp_nonpositive(*l - max));
        lanes_dot(w, None)
    }

    /// `Σ_j w_j x_j / Σ_j w_j`.
    fn consensus(&self, w: &[f64], sum: f64, out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2.
            return unsafe { self.consensus_avx2(w, sum, out) };
        }
        self.consensus_portable(w, sum, out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn consensus_avx2(&self, w: &[f64], sum: f64, out: &mut [f64]) {
        self.consensus_portable(w, sum, out)
    }

    #[inline(always)]
    fn consensus_portable(&self, w: &[f64], sum: f64, out: &mut [f64]) {
        let inv = 1.0 / sum;
        for (k, o) in out.iter_mut().enumerate().take(self.d) {
            *o = lanes_dot(w, Some(&self.values[k * self.n..(k + 1) * self.n])) * inv;
        }
    }
}

/// `Σ a_j b_j` (or `Σ a_j` without `b`) with four interleaved accumulators,
/// which lets the loop vectorize while staying deterministic.
#[inline(always)]
fn lanes_dot(a: &[f64], b: Option<&[f64]>) -> f64 {
    let mut acc = [0.0; 4];
    let split = a.len() / 4 * 4;
    match b {
        Some(b) => {
            for (ca, cb) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
                for l in 0..4 {
                    acc[l] += ca[l] * cb[l];
                }
            }
            for j in split..a.len() {
                acc[0] += a[j] * b[j];
            }
        }
        None => {
            for ca in a[..split].chunks_exact(4) {
                for l in 0..4 {
                    acc[l] += ca[l];
                }
            }
            for &x in &a[split..] {
                acc[0] += x;
            }
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

#[inline(always)]
fn lanes_max(a: &[f64]) -> f64 {
    let mut acc = [f64::NEG_INFINITY; 4];
    let split = a.len() / 4 * 4;
    for c in a[..split].chunks_exact(4) {
        for l in 0..4 {
            acc[l] = if c[l] > acc[l] { c[l] } else { acc[l] };
        }
    }
    for &x in &a[split..] {
        acc[0] = acc[0].max(x);
    }
    acc[0].max(acc[1]).max(acc[2].max(acc[3]))
}

/// Softmax weights of token `i` over the ensemble.
///
/// Logits are shifted by their maximum before exponentiation, so the
/// normalizer is at least one.
pub fn softmax_weights(ensemble: &Ensemble, b: &Matrix, beta: f64, i: usize) -> Vec<f64> {
    let att = Attention::new(ensemble, b);
    let mut w = vec![0.0; ensemble.len()];
    let inv = 1.0 / att.weights(ensemble.token(i), beta, &mut w);
    w.iter_mut().for_each(|wj| *wj *= inv);
    w
}

fn weighted_sum(ensemble: &Ensemble, w: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (x, &wj) in ensemble.tokens().zip(w) {
        axpy(wj, x, out);
    }
}

/// Softmax-weighted consensus `m_i = Σ_j w_ij x_j`.
pub fn attention_consensus(ensemble: &Ensemble, b: &Matrix, beta: f64, i: usize) -> Vec<f64> {
    consensus_at(ensemble, b, beta, ensemble.token(i))
}

/// Consensus `m_{β,ρ}(x)` seen from an arbitrary probe `x`, with weights
/// `∝ exp(β⟨x, B y_j⟩)` over the ensemble.
pub fn consensus_at(ensemble: &Ensemble, b: &Matrix, beta: f64, x: &[f64]) -> Vec<f64> {
    let att = Attention::new(ensemble, b);
    let mut w = vec![0.0; ensemble.len()];
    let sum = att.weights(x, beta, &mut w);
    let mut m = vec![0.0; ensemble.dim()];
    att.consensus(&w, sum, &mut m);
    m
}

/// Kernelized consensus point with objective `J(y) = −½‖y‖²_B` and kernel
/// `κ(x, y) = exp(−β/2 ‖x − y‖²_B)`, where `‖z‖²_B = ⟨z, B z⟩`.
///
/// For symmetric `B` this coincides with [`attention_consensus`] at `x = x_i`.
/// For non-symmetric `B` the kernel only sees the symmetric part of `B`.
pub fn cbo_consensus(ensemble: &Ensemble, b: &Matrix, beta: f64, x: &[f64]) -> Vec<f64> {
    let d = ensemble.dim();
    let mut diff = vec![0.0; d];
    let mut w: Vec<f64> = ensemble
        .tokens()
        .map(|y| {
            for k in 0..d {
                diff[k] = x[k] - y[k];
            }
            let kernel = -0.5 * beta * dot(&diff, &b.mul_vec(&diff));
            let objective = 0.5 * beta * dot(y, &b.mul_vec(y));
            kernel + objective
        })
        .collect();
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    normalize_logits(&mut w, max);
    let mut m = vec![0.0; d];
    weighted_sum(ensemble, &w, &mut m);
    m
}

/// `P_{x_i}(V m_i)` at finite `beta`.
pub fn finite_beta_drift(ensemble: &Ensemble, model: &SpectralModel, beta: f64, i: usize) -> Vec<f64> {
    let att = Attention::new(ensemble, &model.b);
    let mut scratch = DriftScratch::new(ensemble.len(), ensemble.dim());
    let mut out = vec![0.0; ensemble.dim()];
    finite_drift_into(ensemble, &att, &model.v, beta, i, &mut scratch, &mut out);
    out
}

struct DriftScratch {
    weights: Vec<f64>,
    consensus: Vec<f64>,
}

impl DriftScratch {
    fn new(n: usize, d: usize) -> Self {
        Self { weights: vec![0.0; n], consensus: vec![0.0; d] }
    }
}

fn finite_drift_into(
    ensemble: &Ensemble,
    att: &Attention,
    v: &Matrix,
    beta: f64,
    i: usize,
    scratch: &mut DriftScratch,
    out: &mut [f64],
) {
    let x = ensemble.token(i);
    let sum = att.weights(x, beta, &mut scratch.weights);
    att.consensus(&scratch.weights, sum, &mut scratch.consensus);
    v.mul_vec_into(&scratch.consensus, out);
    sphere::tangent_project_in_place(x, out);
}

/// `P_x(V Bᵀx / ‖Bᵀx‖)`.
pub fn zero_temp_drift(x: &[f64], model: &SpectralModel) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    zero_temp_drift_into(x, &model.b, &model.v, &mut out);
    out
}

fn zero_temp_drift_into(x: &[f64], b: &Matrix, v: &Matrix, out: &mut [f64]) {
    let mut y = b.tr_mul_vec(x);
    let n = norm(&y);
    y.iter_mut().for_each(|c| *c /= n);
    v.mul_vec_into(&y, out);
    sphere::tangent_project_in_place(x, out);
}

/// All drifts of the ensemble, evaluated on the same (input) configuration.
pub fn drift_field(ensemble: &Ensemble, model: &SpectralModel, beta: Beta) -> Vec<f64> {
    let d = ensemble.dim();
    let n = ensemble.len();
    let mut drifts = vec![0.0; n * d];
    match beta {
        Beta::Infinite => {
            for (x, out) in ensemble.tokens().zip(drifts.chunks_exact_mut(d)) {
                zero_temp_drift_into(x, &model.b, &model.v, out);
            }
        }
        Beta::Finite(beta) => {
            let att = Attention::new(ensemble, &model.b);
            let body = |scratch: &mut DriftScratch, (i, out): (usize, &mut [f64])| {
                finite_drift_into(ensemble, &att, &model.v, beta, i, scratch, out);
            };
            if n * n * d >= PAR_THRESHOLD {
                drifts
                    .par_chunks_mut(d)
                    .enumerate()
                    .for_each_init(|| DriftScratch::new(n, d), body);
            } else {
                let mut scratch = DriftScratch::new(n, d);
                drifts.chunks_mut(d).enumerate().for_each(|item| body(&mut scratch, item));
            }
        }
    }
    drifts
}

/// One synchronous Euler step followed by retraction; time advances by `dt`.
pub fn euler_step(ensemble: &Ensemble, model: &SpectralModel, config: &SimConfig) -> Result<Ensemble, DynamicsError> {
    step_from(ensemble, model, config, 0)
}

fn step_from(ensemble: &Ensemble, model: &SpectralModel, config: &SimConfig, step: usize) -> Result<Ensemble, DynamicsError> {
    let drifts = drift_field(ensemble, model, config.beta);
    let mut next = ensemble.clone();
    next.time = ensemble.time + config.dt;
    for (token, (x, f)) in next.tokens_mut().zip(drifts.chunks_exact(ensemble.dim())).enumerate() {
        axpy(config.dt, f, x);
        sphere::retract_in_place(x).map_err(|source| DynamicsError::Retraction { step, token, source })?;
    }
    Ok(next)
}

/// Receives the ensemble at every record step.
pub trait Observer {
    fn observe(&mut self, step: usize, time: f64, ensemble: &Ensemble);
}

impl<F: FnMut(usize, f64, &Ensemble)> Observer for F {
    fn observe(&mut self, step: usize, time: f64, ensemble: &Ensemble) {
        self(step, time, ensemble)
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: usize, _: f64, _: &Ensemble) {}
}

/// Snapshots recorded during a simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Ensemble>,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Ensemble::time).collect()
    }

    pub fn last(&self) -> &Ensemble {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }
}

/// Integrates from `init` and keeps a snapshot at every record step.
pub fn simulate(
    init: &Ensemble,
    model: &SpectralModel,
    config: &SimConfig,
    observer: &mut dyn Observer,
) -> Result<Trajectory, DynamicsError> {
    let mut snapshots = Vec::new();
    run(init, model, config, &mut |step: usize, time: f64, ens: &Ensemble| {
        observer.observe(step, time, ens);
        snapshots.push(ens.clone());
    })?;
    Ok(Trajectory { snapshots, config: *config })
}

/// Integrates from `init`, handing record steps to `observer` without
/// retaining them. Returns the final ensemble.
pub fn run(init: &Ensemble, model: &SpectralModel, config: &SimConfig, observer: &mut dyn Observer) -> Result<Ensemble, DynamicsError> {
    config.validate()?;
    if init.dim() != model.dim() {
        return Err(DynamicsError::InvalidEnsemble(format!(
            "ensemble dimension {} does not match model dimension {}",
            init.dim(),
            model.dim()
        )));
    }
    let steps = config.num_steps();
    let t0 = init.time();
    let mut current = init.clone();
    observer.observe(0, t0, &current);
    for step in 0..steps {
        let mut next = step_from(&current, model, config, step)?;
        next.time = t0 + (step + 1) as f64 * config.dt;
        current = next;
        if config.is_record_step(step + 1) {
            observer.observe(step + 1, current.time, &current);
        }
    }
    Ok(current)
}
