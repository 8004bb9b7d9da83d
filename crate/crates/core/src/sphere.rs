//! Geometry of the unit sphere and seeded samplers for initial token clouds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Ensemble;
use crate::linalg::{dist_sq, dot, norm};

/// Norm below which retraction refuses to normalize.
pub const RETRACT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cannot retract a vector of norm {0:.3e} onto the sphere")]
    NearZero(f64),
    #[error("invalid von Mises-Fisher mixture: {0}")]
    InvalidMixture(String),
}

/// `P_x(y) = y − ⟨x, y⟩ x`.
pub fn tangent_project(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    tangent_project_in_place(x, &mut out);
    out
}

#[inline]
pub fn tangent_project_in_place(x: &[f64], y: &mut [f64]) {
    let c = dot(x, y);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= c * xi;
    }
}

/// `v / ‖v‖`.
pub fn retract(v: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let mut out = v.to_vec();
    retract_in_place(&mut out)?;
    Ok(out)
}

#[inline]
pub fn retract_in_place(v: &mut [f64]) -> Result<(), GeometryError> {
    let n = norm(v);
    if !(n > RETRACT_TOL) {
        return Err(GeometryError::NearZero(n));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

/// Seeded ChaCha8 stream.
///
/// Streams are addressed by `(seed, stream)`; distinct stream ids give
/// independent sequences from the same seed. ChaCha8 output for a given
/// `(seed, stream)` is fixed by the algorithm, so sample sequences are stable
/// across platforms and process restarts.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn uniform01(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

/// Uniform point on S^{d−1} (normalized Gaussian).
pub fn sample_uniform(d: usize, rng: &mut SeededRng) -> Vec<f64> {
    assert!(d >= 2, "sphere dimension must be at least 2");
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        if retract_in_place(&mut v).is_ok() {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmfComponent {
    /// Mean direction; normalized on ingestion.
    pub mean: Vec<f64>,
    pub kappa: f64,
    pub weight: f64,
}

/// Finite mixture of von Mises–Fisher laws with unit mean directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VmfMixture {
    components: Vec<VmfComponent>,
}

impl VmfMixture {
    pub fn new(components: Vec<VmfComponent>) -> Result<Self, GeometryError> {
        let invalid = |m: &str| Err(GeometryError::InvalidMixture(m.to_string()));
        let Some(first) = components.first() else {
            return invalid("at least one component is required");
        };
        let d = first.mean.len();
        if d < 2 {
            return invalid("mean directions need dimension >= 2");
        }
        let mut total = 0.0;
        let mut normalized = Vec::with_capacity(components.len());
        for c in components {
            if c.mean.len() != d {
                return invalid("mean directions have inconsistent dimensions");
            }
            if !(c.kappa >= 0.0) || !c.kappa.is_finite() {
                return invalid("concentrations must be finite and nonnegative");
            }
            if !(c.weight >= 0.0) || !c.weight.is_finite() {
                return invalid("weights must be finite and nonnegative");
            }
            let mean = retract(&c.mean).map_err(|_| GeometryError::InvalidMixture("zero mean direction".into()))?;
            total += c.weight;
            normalized.push(VmfComponent { mean, ..c });
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(GeometryError::InvalidMixture(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { components: normalized })
    }

    /// Equal-weight mixture; the weights are forced to sum to one exactly.
    pub fn equal_weights(means_and_kappas: &[(&[f64], f64)]) -> Result<Self, GeometryError> {
        let k = means_and_kappas.len();
        let mut comps: Vec<VmfComponent> = means_and_kappas
            .iter()
            .map(|(m, kappa)| VmfComponent { mean: m.to_vec(), kappa: *kappa, weight: 1.0 / k as f64 })
            .collect();
        if let Some(last) = comps.last_mut() {
            last.weight = 1.0 - (k - 1) as f64 / k as f64;
        }
        Self::new(comps)
    }

    pub fn components(&self) -> &[VmfComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }
}

/// Draws one point: a component by weight, then a vMF sample around its mean.
pub fn sample_vmf_mixture(mix: &VmfMixture, rng: &mut SeededRng) -> Vec<f64> {
    let u = rng.uniform01();
    let mut acc = 0.0;
    let mut chosen = mix.components.len() - 1;
    for (i, c) in mix.components.iter().enumerate() {
        acc += c.weight;
        if u < acc {
            chosen = i;
            break;
        }
    }
    let c = &mix.components[chosen];
    sample_vmf(&c.mean, c.kappa, rng)
}

/// Single vMF draw by tangent-normal decomposition.
///
/// The cosine `w = ⟨x, μ⟩` is drawn by Wood's rejection scheme, then combined
/// with a uniform unit direction in the tangent space at `μ`.
pub fn sample_vmf(mean: &[f64], kappa: f64, rng: &mut SeededRng) -> Vec<f64> {
    let d = mean.len();
    let dm1 = (d - 1) as f64;
    let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("valid beta parameters");
    let w = loop {
        let z: f64 = beta.sample(rng.rng());
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u = rng.uniform01();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    let tangent = loop {
        let mut t: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        tangent_project_in_place(mean, &mut t);
        if retract_in_place(&mut t).is_ok() {
            break t;
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut x: Vec<f64> = mean.iter().zip(&tangent).map(|(m, t)| w * m + s * t).collect();
    // w and s are exact complements only up to rounding
    retract_in_place(&mut x).expect("vMF sample has unit norm");
    x
}

/// Fraction of tokens within chordal distance `r` of `center`.
pub fn cap_mass(ensemble: &Ensemble, center: &[f64], r: f64) -> f64 {
    let r2 = r * r;
    let inside = ensemble.tokens().filter(|y| dist_sq(y, center) <= r2).count();
    inside as f64 / ensemble.len() as f64
}
