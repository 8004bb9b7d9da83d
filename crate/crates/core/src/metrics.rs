//! Diagnostic functionals of token ensembles.

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{self, WarmStart};
use crate::dynamics::{consensus_at, Ensemble, Observer};
use crate::linalg::{dist_sq, dot, norm, Matrix};
use crate::spectral::{Eigenspace, SpectralError, SpectralModel, Subspace, EPS_PERP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("ensembles have different sizes or dimensions ({0}x{1} vs {2}x{3})")]
    SizeMismatch(usize, usize, usize, usize),
}

/// Squared chordal distances `‖a_i − b_j‖²`, row-major.
pub fn cost_matrix(a: &Ensemble, b: &Ensemble) -> Vec<f64> {
    let mut c = Vec::with_capacity(a.len() * b.len());
    for x in a.tokens() {
        c.extend(b.tokens().map(|y| dist_sq(x, y)));
    }
    c
}

/// Exact 2-Wasserstein distance between two equal-size empirical measures
/// under squared Euclidean ground cost.
pub fn w2_empirical(a: &Ensemble, b: &Ensemble) -> Result<f64, MetricsError> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(MetricsError::SizeMismatch(a.len(), a.dim(), b.len(), b.dim()));
    }
    let n = a.len();
    let solution = assignment::solve(n, &cost_matrix(a, b));
    Ok((solution.cost.max(0.0) / n as f64).sqrt())
}

/// [`w2_empirical`] for a sequence of slowly changing ensembles: `warm`
/// carries the previous optimal matching into the next solve.
pub fn w2_empirical_warm(a: &Ensemble, b: &Ensemble, warm: &mut Option<WarmStart>) -> Result<f64, MetricsError> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(MetricsError::SizeMismatch(a.len(), a.dim(), b.len(), b.dim()));
    }
    let n = a.len();
    let (solution, next) = assignment::solve_warm(n, &cost_matrix(a, b), warm.as_ref());
    *warm = next;
    Ok((solution.cost.max(0.0) / n as f64).sqrt())
}

/// `(‖P_S x‖, ‖(Id − P_S) x‖)`.
fn split_norms(s: &Subspace, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let u = s.project(x);
    let v: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - b).collect();
    let (nu, nv) = (norm(&u), norm(&v));
    (u, v, nu, nv)
}

/// `R_p(x) = ‖(Id − P_S)x‖^{2p} / ‖P_S x‖^{2p}`.
pub fn r_p(s: &Subspace, x: &[f64], p: f64) -> Result<f64, SpectralError> {
    let (_, _, nu, nv) = split_norms(s, x);
    if !(nu > EPS_PERP) {
        return Err(SpectralError::InPerp(nu));
    }
    Ok(((nv * nv) / (nu * nu)).powf(p))
}

/// `∇R_p(x) = p R_1^{p−1} ∇R_1(x)` with `∇R_1 = 2 R_1 (v/‖v‖² − u/‖u‖²)`.
pub fn grad_r_p(s: &Subspace, x: &[f64], p: f64) -> Result<Vec<f64>, SpectralError> {
    let (u, v, nu, nv) = split_norms(s, x);
    if !(nu > EPS_PERP) {
        return Err(SpectralError::InPerp(nu));
    }
    if !(nv > EPS_PERP) {
        return Err(SpectralError::InSubspace(nv));
    }
    let r1 = (nv * nv) / (nu * nu);
    let factor = p * r1.powf(p - 1.0) * 2.0 * r1;
    Ok(v.iter()
        .zip(&u)
        .map(|(vi, ui)| factor * (vi / (nv * nv) - ui / (nu * nu)))
        .collect())
}

/// Ensemble average of `R_p`; `+∞` if any token lies in `S^⊥`.
pub fn v_p(ensemble: &Ensemble, s: &Subspace, p: f64) -> f64 {
    let mut total = 0.0;
    for x in ensemble.tokens() {
        match r_p(s, x, p) {
            Ok(r) => total += r,
            Err(_) => return f64::INFINITY,
        }
    }
    total / ensemble.len() as f64
}

/// Mean squared projection norm `(1/n) Σ ‖P_S x_i‖²`.
pub fn alignment(ensemble: &Ensemble, s: &Subspace) -> f64 {
    ensemble.tokens().map(|x| s.proj_norm_sq(x)).sum::<f64>() / ensemble.len() as f64
}

/// `E_B(ρ) = (1/n²) Σ_i Σ_j exp(⟨x_i, B x_j⟩)`.
pub fn interaction_energy(ensemble: &Ensemble, b: &Matrix) -> f64 {
    let d = ensemble.dim();
    let mut bx = vec![0.0; ensemble.as_slice().len()];
    for (x, o) in ensemble.tokens().zip(bx.chunks_exact_mut(d)) {
        b.mul_vec_into(x, o);
    }
    let mut total = 0.0;
    for x in ensemble.tokens() {
        total += bx.chunks_exact(d).map(|y| dot(x, y).exp()).sum::<f64>();
    }
    let n = ensemble.len() as f64;
    total / (n * n)
}

/// `y*(x) = Bᵀx / ‖Bᵀx‖`.
pub fn laplace_maximizer(b: &Matrix, x: &[f64]) -> Vec<f64> {
    let mut y = b.tr_mul_vec(x);
    let n = norm(&y);
    y.iter_mut().for_each(|c| *c /= n);
    y
}

/// `‖m_{β,ρ}(x) − y*(x)‖` for a probe `x`.
pub fn laplace_residual(ensemble: &Ensemble, b: &Matrix, beta: f64, x: &[f64]) -> f64 {
    let m = consensus_at(ensemble, b, beta, x);
    dist_sq(&m, &laplace_maximizer(b, x)).sqrt()
}

/// One row of diagnostics. Column order in CSV output follows field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub time: f64,
    pub align_e: Option<f64>,
    pub align_f: Option<f64>,
    pub align_fabs: Option<f64>,
    pub w2_to_target: Option<f64>,
    pub v_p: Option<f64>,
    pub energy: Option<f64>,
}

impl MetricRecord {
    pub const COLUMNS: [&'static str; 7] = ["time", "align_E", "align_F", "align_Fabs", "w2_to_target", "v_p", "energy"];

    pub fn values(&self) -> [Option<f64>; 7] {
        [
            Some(self.time),
            self.align_e,
            self.align_f,
            self.align_fabs,
            self.w2_to_target,
            self.v_p,
            self.energy,
        ]
    }
}

/// Which functionals a [`MetricTracker`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricToggles {
    pub alignment: bool,
    pub w2: bool,
    pub v_p: bool,
    pub energy: bool,
}

impl Default for MetricToggles {
    fn default() -> Self {
        Self { alignment: true, w2: true, v_p: true, energy: true }
    }
}

/// Observer that turns record steps into [`MetricRecord`]s.
///
/// The W2 target is the push-forward `Π_♯ρ0` of the first observed ensemble;
/// W2 is evaluated every `w2_stride` steps and at `final_step`.
pub struct MetricTracker<'a> {
    model: &'a SpectralModel,
    p: f64,
    toggles: MetricToggles,
    w2_stride: usize,
    final_step: usize,
    allow_nonsymmetric: bool,
    target: Option<Ensemble>,
    warm: Option<WarmStart>,
    records: Vec<MetricRecord>,
}

impl<'a> MetricTracker<'a> {
    pub fn new(model: &'a SpectralModel, p: f64, toggles: MetricToggles, w2_stride: usize, final_step: usize) -> Self {
        Self {
            model,
            p,
            toggles,
            w2_stride: w2_stride.max(1),
            final_step,
            allow_nonsymmetric: false,
            target: None,
            warm: None,
            records: Vec::new(),
        }
    }

    /// Use the real-spectrum stand-in for `E` when `VBᵀ` is not symmetric.
    pub fn allow_nonsymmetric(mut self, allow: bool) -> Self {
        self.allow_nonsymmetric = allow;
        self
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<MetricRecord> {
        self.records
    }

    /// `Π_♯ρ0`, once the initial ensemble has been observed.
    pub fn target(&self) -> Option<&Ensemble> {
        self.target.as_ref()
    }

    fn dominant(&self) -> Option<&Eigenspace> {
        self.model.metric_space(self.allow_nonsymmetric)
    }
}

impl Observer for MetricTracker<'_> {
    fn observe(&mut self, step: usize, time: f64, ensemble: &Ensemble) {
        if step == 0 && self.toggles.w2 {
            self.target = self
                .dominant()
                .and_then(|e| crate::spectral::pushforward_pi(ensemble, &e.space, EPS_PERP).ok());
        }
        let align = |s: Option<&Eigenspace>| s.filter(|_| self.toggles.alignment).map(|e| alignment(ensemble, &e.space));
        let w2_due = step % self.w2_stride == 0 || step == self.final_step;
        let w2 = match (&self.target, self.toggles.w2 && w2_due) {
            (Some(target), true) => w2_empirical_warm(ensemble, target, &mut self.warm).ok(),
            _ => None,
        };
        let record = MetricRecord {
            time,
            align_e: align(self.dominant()),
            align_f: align(self.model.f.as_ref()),
            align_fabs: align(self.model.f_abs.as_ref()),
            w2_to_target: w2,
            v_p: self
                .dominant()
                .filter(|_| self.toggles.v_p)
                .map(|e| v_p(ensemble, &e.space, self.p)),
            energy: self.toggles.energy.then(|| interaction_energy(ensemble, &self.model.b)),
        };
        self.records.push(record);
    }
}
