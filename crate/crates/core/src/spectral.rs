//! Spectral structure of the weight matrices.
//!
//! [`SpectralModel`] bundles `B`, `V`, the product `VBᵀ`, the dominant
//! eigenspace `E` of `VBᵀ` with its gap, and the eigenspaces `F` (largest
//! eigenvalue) and `F_abs` (largest magnitude) of `V`. The projection
//! `Π(x) = P_E x / ‖P_E x‖` and its Jacobian live here as well.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::Ensemble;
use crate::linalg::{self, dot, norm, LinalgError, Matrix};

/// Relative tolerance grouping eigenvalues into the top cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Below this `‖P_S x‖`, `x` is treated as lying in `S^⊥`.
pub const EPS_PERP: f64 = 1e-10;
/// Relative asymmetry accepted for `VBᵀ`.
pub const VBT_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("B is singular (smallest singular value {0:.3e})")]
    SingularB(f64),
    #[error("VBᵀ is not symmetric (relative asymmetry {0:.3e}); E and γ are undefined")]
    NonSymmetricVBt(f64),
    #[error("point lies numerically in the orthogonal complement (‖P x‖ = {0:.3e})")]
    InPerp(f64),
    #[error("token {index} lies numerically in the orthogonal complement (‖P x‖ = {norm:.3e})")]
    InPerpToken { index: usize, norm: f64 },
    #[error("point lies numerically in the subspace (‖(Id − P) x‖ = {0:.3e})")]
    InSubspace(f64),
    #[error("B and V have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Linear subspace given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    /// Orthonormalizes `vectors` (modified Gram–Schmidt), dropping dependent ones.
    pub fn span(ambient: usize, vectors: &[Vec<f64>]) -> Self {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for v in vectors {
            assert_eq!(v.len(), ambient, "vector dimension mismatch");
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    linalg::axpy(-c, b, &mut w);
                }
            }
            let n = norm(&w);
            if n > 1e-10 * (1.0 + norm(v)) {
                w.iter_mut().for_each(|x| *x /= n);
                basis.push(w);
            }
        }
        Self { ambient, basis }
    }

    pub fn whole(ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut e = vec![0.0; ambient];
                e[i] = 1.0;
                e
            })
            .collect();
        Self { ambient, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `P_S x = Σ_k ⟨b_k, x⟩ b_k`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient];
        for b in &self.basis {
            linalg::axpy(dot(b, x), b, &mut out);
        }
        out
    }

    /// `‖P_S x‖²` without forming the projection.
    pub fn proj_norm_sq(&self, x: &[f64]) -> f64 {
        self.basis.iter().map(|b| dot(b, x).powi(2)).sum()
    }

    /// `(Id − P_S) x`.
    pub fn project_perp(&self, x: &[f64]) -> Vec<f64> {
        linalg::sub(x, &self.project(x))
    }

    /// Projection operator as a matrix.
    pub fn projector(&self) -> Matrix {
        let mut p = Matrix::zeros(self.ambient);
        for b in &self.basis {
            p = p.add(&Matrix::outer(b, b));
        }
        p
    }

    /// True when both subspaces have the same projector within `tol`.
    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient == other.ambient
            && self.dim() == other.dim()
            && self.projector().sub(&other.projector()).max_abs() <= tol
    }
}

/// Top eigenvalue cluster of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    pub space: Subspace,
    /// Largest eigenvalue (or magnitude, for `F_abs`).
    pub top: f64,
    /// Largest eigenvalue outside the cluster; `None` when the cluster is everything.
    pub next: Option<f64>,
}

impl Eigenspace {
    /// `top − next`, or `+∞` when the cluster spans the whole space.
    pub fn gap(&self) -> f64 {
        self.next.map_or(f64::INFINITY, |n| self.top - n)
    }
}

/// Weight matrices and everything derived from their spectra.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub b: Matrix,
    pub v: Matrix,
    /// `V Bᵀ`
    pub vbt: Matrix,
    pub vbt_asymmetry: f64,
    /// Sorted eigenvalues of `VBᵀ` when it is symmetric.
    pub vbt_eigenvalues: Option<Vec<f64>>,
    pub e: Option<Eigenspace>,
    /// Dominant right-eigenspace of a non-symmetric `VBᵀ` whose spectrum is
    /// real. Diagnostic only: the theory needs symmetry, `e` stays `None`.
    pub e_real: Option<Eigenspace>,
    /// Sorted eigenvalues of `V` when it is symmetric.
    pub v_eigenvalues: Option<Vec<f64>>,
    pub f: Option<Eigenspace>,
    pub f_abs: Option<Eigenspace>,
    pub sigma_min_b: f64,
    pub sigma_max_b: f64,
}

/// Assembles a [`SpectralModel`].
///
/// Fails only when `B` is singular. A non-symmetric `VBᵀ` still produces a
/// model, with `E` and the gap left empty; [`SpectralModel::dominant`] then
/// reports [`SpectralError::NonSymmetricVBt`].
pub fn build_model(b: Matrix, v: Matrix, cluster_tol: f64) -> Result<SpectralModel, SpectralError> {
    if b.dim() != v.dim() {
        return Err(SpectralError::DimensionMismatch(b.dim(), v.dim()));
    }
    let (sigma_min_b, sigma_max_b) = linalg::singular_extremes(&b);
    if sigma_min_b <= linalg::SINGULAR_TOL {
        return Err(SpectralError::SingularB(sigma_min_b));
    }
    let vbt = v.matmul(&b.transpose());
    let vbt_asymmetry = vbt.relative_asymmetry();
    let (vbt_eigenvalues, e, e_real) = if vbt_asymmetry <= VBT_SYMMETRY_TOL {
        let decomp = linalg::symmetric_eigen(&vbt)?;
        let e = top_cluster(&decomp, cluster_tol, |l| l);
        (Some(decomp.values), Some(e), None)
    } else {
        (None, None, real_dominant_eigenspace(&vbt, cluster_tol))
    };
    let (v_eigenvalues, f, f_abs) = if v.relative_asymmetry() <= VBT_SYMMETRY_TOL {
        let decomp = linalg::symmetric_eigen(&v)?;
        let f = top_cluster(&decomp, cluster_tol, |l| l);
        let f_abs = top_cluster(&decomp, cluster_tol, f64::abs);
        (Some(decomp.values), Some(f), Some(f_abs))
    } else {
        (None, None, None)
    };
    Ok(SpectralModel {
        b,
        v,
        vbt,
        vbt_asymmetry,
        vbt_eigenvalues,
        e,
        e_real,
        v_eigenvalues,
        f,
        f_abs,
        sigma_min_b,
        sigma_max_b,
    })
}

/// Eigenvectors whose `key(λ)` is within `tol·max(1, |top|)` of the top key.
fn top_cluster(decomp: &linalg::EigenDecomposition, tol: f64, key: impl Fn(f64) -> f64) -> Eigenspace {
    let n = decomp.values.len();
    let keys: Vec<f64> = decomp.values.iter().map(|&l| key(l)).collect();
    let top = keys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = tol * top.abs().max(1.0);
    let (inside, outside): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| top - keys[i] <= width);
    let vectors: Vec<Vec<f64>> = inside.iter().map(|&i| decomp.vector(i)).collect();
    let next = outside.iter().map(|&i| keys[i]).fold(None, |acc: Option<f64>, k| Some(acc.map_or(k, |a| a.max(k))));
    Eigenspace { space: Subspace::span(n, &vectors), top, next }
}

/// Imaginary parts below this (relative to `max(1, max|a_ij|)`) count as zero.
const REAL_SPECTRUM_TOL: f64 = 1e-9;

/// Span of the right eigenvectors for the largest eigenvalue of a general
/// matrix, provided its whole spectrum is real. `None` for complex spectra.
fn real_dominant_eigenspace(a: &Matrix, cluster_tol: f64) -> Option<Eigenspace> {
    use nalgebra::DMatrix;
    let d = a.dim();
    let m = DMatrix::from_row_slice(d, d, a.as_slice());
    let scale = a.max_abs().max(1.0);
    let eig = m.clone().complex_eigenvalues();
    if eig.iter().any(|z| !(z.im.abs() <= REAL_SPECTRUM_TOL * scale)) {
        return None;
    }
    let mut values: Vec<f64> = eig.iter().map(|z| z.re).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    let top = values[0];
    let width = cluster_tol * top.abs().max(1.0);
    let k = values.iter().filter(|&&l| top - l <= width).count();
    let next = values.iter().copied().find(|&l| top - l > width);
    // kernel of A − μ1 I from the smallest singular directions
    let svd = (m - DMatrix::identity(d, d) * top).svd(false, true);
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let kernel_tol = 1e-6 * scale;
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .take(k)
        .filter(|&&i| svd.singular_values[i] <= kernel_tol)
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    if vectors.is_empty() {
        return None;
    }
    Some(Eigenspace { space: Subspace::span(d, &vectors), top, next })
}

impl SpectralModel {
    /// `E` if defined, else the real-spectrum stand-in when `allow_nonsymmetric`.
    pub fn metric_space(&self, allow_nonsymmetric: bool) -> Option<&Eigenspace> {
        self.e.as_ref().or(self.e_real.as_ref().filter(|_| allow_nonsymmetric))
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// Dominant eigenspace `E` of `VBᵀ`, or the reason it is undefined.
    pub fn dominant(&self) -> Result<&Eigenspace, SpectralError> {
        self.e.as_ref().ok_or(SpectralError::NonSymmetricVBt(self.vbt_asymmetry))
    }

    pub fn gamma(&self) -> Option<f64> {
        self.e.as_ref().map(Eigenspace::gap)
    }

    /// `key=value` lines describing the model, for CSV header blocks.
    pub fn summary_lines(&self) -> Vec<(String, String)> {
        let fmt_list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let opt = |v: Option<String>| v.unwrap_or_else(|| "absent".to_string());
        vec![
            ("vbt_symmetric".into(), (self.e.is_some()).to_string()),
            ("vbt_asymmetry".into(), self.vbt_asymmetry.to_string()),
            ("vbt_eigenvalues".into(), opt(self.vbt_eigenvalues.as_deref().map(fmt_list))),
            ("E_source".into(), self.e_source().to_string()),
            ("mu1".into(), opt(self.e.as_ref().map(|e| e.top.to_string()))),
            ("mu2".into(), opt(self.e.as_ref().and_then(|e| e.next).map(|x| x.to_string()))),
            ("gamma".into(), opt(self.gamma().map(|g| g.to_string()))),
            ("dim_E".into(), opt(self.e.as_ref().map(|e| e.space.dim().to_string()))),
            ("v_eigenvalues".into(), opt(self.v_eigenvalues.as_deref().map(fmt_list))),
            ("dim_F".into(), opt(self.f.as_ref().map(|e| e.space.dim().to_string()))),
            ("dim_Fabs".into(), opt(self.f_abs.as_ref().map(|e| e.space.dim().to_string()))),
            ("sigma_min_B".into(), self.sigma_min_b.to_string()),
            ("sigma_max_B".into(), self.sigma_max_b.to_string()),
        ]
    }

    /// `"symmetric"`, `"real-spectrum"` or `"absent"`.
    pub fn e_source(&self) -> &'static str {
        match (&self.e, &self.e_real) {
            (Some(_), _) => "symmetric",
            (None, Some(_)) => "real-spectrum",
            (None, None) => "absent",
        }
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            vbt_symmetric: self.e.is_some(),
            e_source: self.e_source().to_string(),
            e_real_top: self.e_real.as_ref().map(|e| e.top),
            dim_e_real: self.e_real.as_ref().map(|e| e.space.dim()),
            vbt_eigenvalues: self.vbt_eigenvalues.clone(),
            mu1: self.e.as_ref().map(|e| e.top),
            mu2: self.e.as_ref().and_then(|e| e.next),
            gamma: self.gamma().filter(|g| g.is_finite()),
            dim_e: self.e.as_ref().map(|e| e.space.dim()),
            v_eigenvalues: self.v_eigenvalues.clone(),
            dim_f: self.f.as_ref().map(|e| e.space.dim()),
            dim_fabs: self.f_abs.as_ref().map(|e| e.space.dim()),
            sigma_min_b: self.sigma_min_b,
            sigma_max_b: self.sigma_max_b,
        }
    }
}

/// Serializable digest of a [`SpectralModel`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub vbt_symmetric: bool,
    pub e_source: String,
    pub e_real_top: Option<f64>,
    pub dim_e_real: Option<usize>,
    pub vbt_eigenvalues: Option<Vec<f64>>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    /// `None` if E is absent or spans everything.
    pub gamma: Option<f64>,
    pub dim_e: Option<usize>,
    pub v_eigenvalues: Option<Vec<f64>>,
    pub dim_f: Option<usize>,
    pub dim_fabs: Option<usize>,
    pub sigma_min_b: f64,
    pub sigma_max_b: f64,
}

/// `Π(x) = P_S x / ‖P_S x‖`.
pub fn pi_map(s: &Subspace, x: &[f64], eps_perp: f64) -> Result<Vec<f64>, SpectralError> {
    let mut u = s.project(x);
    let n = norm(&u);
    if !(n > eps_perp) {
        return Err(SpectralError::InPerp(n));
    }
    u.iter_mut().for_each(|c| *c /= n);
    Ok(u)
}

/// `DΠ(x) = (P_S − u uᵀ/‖u‖²) / ‖u‖` with `u = P_S x`.
pub fn pi_jacobian(s: &Subspace, x: &[f64], eps_perp: f64) -> Result<Matrix, SpectralError> {
    let u = s.project(x);
    let n = norm(&u);
    if !(n > eps_perp) {
        return Err(SpectralError::InPerp(n));
    }
    let p = s.projector();
    let uu = Matrix::outer(&u, &u).scaled(1.0 / (n * n));
    Ok(p.sub(&uu).scaled(1.0 / n))
}

/// Token-wise `Π`, i.e. the empirical push-forward `Π_♯ρ`.
pub fn pushforward_pi(ensemble: &Ensemble, s: &Subspace, eps_perp: f64) -> Result<Ensemble, SpectralError> {
    let mut out = ensemble.clone();
    for (index, x) in out.tokens_mut().enumerate() {
        let y = pi_map(s, x, eps_perp).map_err(|e| match e {
            SpectralError::InPerp(norm) => SpectralError::InPerpToken { index, norm },
            other => other,
        })?;
        x.copy_from_slice(&y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{sample_uniform, SeededRng};
    use proptest::prelude::*;

    fn e(i: usize, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn fig3_matrices_spectral_objects() {
        let b = Matrix::from_diag(&[-1.0, -1.0, 1.0]);
        let v = Matrix::from_diag(&[-1.0, 1.0, -2.0]);
        let m = build_model(b, v, CLUSTER_TOL).unwrap();
        assert_eq!(m.vbt, Matrix::from_diag(&[1.0, -1.0, -2.0]));
        let dom = m.dominant().unwrap();
        assert!(dom.space.same_as(&Subspace::span(3, &[e(0, 3)]), 1e-14));
        assert_eq!(dom.gap(), 2.0);
        assert!(m.f.as_ref().unwrap().space.same_as(&Subspace::span(3, &[e(1, 3)]), 1e-14));
        assert!(m.f_abs.as_ref().unwrap().space.same_as(&Subspace::span(3, &[e(2, 3)]), 1e-14));
        assert_eq!((m.sigma_min_b, m.sigma_max_b), (1.0, 1.0));
    }

    #[test]
    fn identity_v_gives_full_f() {
        let b = Matrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 3.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let m = build_model(b.clone(), Matrix::identity(3), CLUSTER_TOL).unwrap();
        let f = m.f.as_ref().unwrap();
        assert_eq!(f.space.dim(), 3);
        assert_eq!(f.gap(), f64::INFINITY);
        let dom = m.dominant().unwrap();
        let top = linalg::symmetric_eigen(&b).unwrap();
        assert!(dom.space.same_as(&Subspace::span(3, &[top.vector(0)]), 1e-12));
    }

    #[test]
    fn rotated_fig1_matrix_has_two_dimensional_e() {
        let r = Matrix::rotation(3, 1, 2, std::f64::consts::PI / 8.0);
        let b = r.transpose().matmul(&Matrix::from_diag(&[5.0, 5.0, 1.0])).matmul(&r);
        let m = build_model(b, Matrix::identity(3), CLUSTER_TOL).unwrap();
        let dom = m.dominant().unwrap();
        assert_eq!(dom.space.dim(), 2);
        assert!((dom.gap() - 4.0).abs() < 1e-12);
        assert!(m.vbt.relative_asymmetry() <= 1e-12);
    }

    #[test]
    fn cluster_survives_tiny_noise() {
        let r = Matrix::rotation(3, 1, 2, std::f64::consts::PI / 8.0);
        let base = r.transpose().matmul(&Matrix::from_diag(&[5.0, 5.0, 1.0])).matmul(&r);
        let mut rng = SeededRng::new(4);
        for _ in 0..20 {
            let noise: Vec<f64> = (0..9).map(|_| 1e-12 * rng.standard_normal()).collect();
            let mut sym = Matrix::from_row_major(3, noise).unwrap();
            sym = sym.add(&sym.transpose()).scaled(0.5);
            let m = build_model(base.add(&sym), Matrix::identity(3), CLUSTER_TOL).unwrap();
            assert_eq!(m.dominant().unwrap().space.dim(), 2);
        }
    }

    #[test]
    fn singular_b_is_rejected() {
        let err = build_model(Matrix::from_diag(&[1.0, 0.0]), Matrix::identity(2), CLUSTER_TOL).unwrap_err();
        assert!(matches!(err, SpectralError::SingularB(_)));
    }

    #[test]
    fn nonsymmetric_vbt_leaves_e_absent() {
        let v1 = Matrix::from_rows(&[[-1.0, 1.0, 0.0], [-2.0, 1.0, 0.0], [0.0, 0.0, -2.0]]).unwrap();
        let m = build_model(Matrix::from_diag(&[-1.0, -1.0, 1.0]), v1, CLUSTER_TOL).unwrap();
        assert!(m.e.is_none() && m.f.is_none() && m.f_abs.is_none());
        assert!(m.e_real.is_none(), "V1B1ᵀ has eigenvalues ±i");
        assert!(matches!(m.dominant(), Err(SpectralError::NonSymmetricVBt(_))));
        assert_eq!(m.e_source(), "absent");
    }

    #[test]
    fn nonsymmetric_real_spectrum_has_diagnostic_e() {
        let b2 = Matrix::from_rows(&[[-1.0, 1.0, 0.0], [-2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let m = build_model(b2, Matrix::from_diag(&[-1.0, 1.0, -2.0]), CLUSTER_TOL).unwrap();
        assert!(m.e.is_none());
        let e = m.e_real.as_ref().unwrap();
        assert_eq!(e.space.dim(), 1);
        assert!((e.top - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((e.gap() - 2f64.sqrt() * 2.0).abs() < 1e-12);
        // right eigenvector of [[1,2,0],[1,1,0],[0,0,−2]] for 1+√2 is (√2, 1, 0)/√3
        let want = [2f64.sqrt() / 3f64.sqrt(), 1.0 / 3f64.sqrt(), 0.0];
        assert!((e.space.proj_norm_sq(&want) - 1.0).abs() < 1e-12);
        assert!(m.metric_space(false).is_none() && m.metric_space(true).is_some());
        assert_eq!(m.f.as_ref().unwrap().space.dim(), 1);
        assert!((m.f.as_ref().unwrap().space.proj_norm_sq(&[0.0, 1.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subspace_projection_examples() {
        let s = Subspace::span(3, &[e(0, 3), e(1, 3)]);
        assert_eq!(s.project(&[0.6, 0.0, 0.8]), vec![0.6, 0.0, 0.0]);
        assert_eq!(s.project(&[0.3, -0.2, 0.0]), vec![0.3, -0.2, 0.0]);
        assert_eq!(s.project(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn pi_map_examples() {
        let s = Subspace::span(3, &[e(0, 3), e(1, 3)]);
        assert_eq!(pi_map(&s, &[0.6, 0.0, 0.8], EPS_PERP).unwrap(), e(0, 3));
        assert_eq!(pi_map(&s, &[0.6, 0.8, 0.0], EPS_PERP).unwrap(), vec![0.6, 0.8, 0.0]);
        let line = Subspace::span(3, &[e(0, 3)]);
        assert!(matches!(pi_map(&line, &e(2, 3), EPS_PERP), Err(SpectralError::InPerp(_))));
    }

    #[test]
    fn pi_jacobian_on_subspace() {
        let s = Subspace::span(3, &[e(0, 3), e(1, 3)]);
        let x = [0.6, 0.8, 0.0];
        let j = pi_jacobian(&s, &x, EPS_PERP).unwrap();
        let want = s.projector().sub(&Matrix::outer(&x, &x));
        assert!(j.sub(&want).max_abs() < 1e-15);
    }

    #[test]
    fn pi_jacobian_rows_orthogonal_to_projection() {
        let s = Subspace::span(4, &[vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]]);
        let x = crate::sphere::retract(&[0.3, -0.4, 0.5, 0.7]).unwrap();
        let j = pi_jacobian(&s, &x, EPS_PERP).unwrap();
        let u = s.project(&x);
        assert!(norm(&j.mul_vec(&u)) < 1e-14);
    }

    #[test]
    fn pushforward_examples() {
        let s = Subspace::span(3, &[e(0, 3), e(1, 3)]);
        let ens = Ensemble::from_points(3, &[vec![0.6, 0.0, 0.8], vec![-0.6, 0.0, -0.8]]).unwrap();
        let pushed = pushforward_pi(&ens, &s, EPS_PERP).unwrap();
        assert_eq!(pushed.token(0), &[1.0, 0.0, 0.0]);
        assert_eq!(pushed.token(1), &[-1.0, 0.0, 0.0]);
        let inside = Ensemble::from_points(3, &[vec![0.6, 0.8, 0.0]]).unwrap();
        assert_eq!(pushforward_pi(&inside, &s, EPS_PERP).unwrap(), inside);
        let bad = Ensemble::from_points(3, &[vec![1.0, 0.0, 0.0], e(2, 3)]).unwrap();
        assert!(matches!(pushforward_pi(&bad, &s, EPS_PERP), Err(SpectralError::InPerpToken { index: 1, .. })));
    }

    proptest! {
        #[test]
        fn pi_is_idempotent_and_projector_is_symmetric(seed in 0u64..500, d in 2usize..8, k in 1usize..4) {
            let k = k.min(d);
            let mut rng = SeededRng::new(seed);
            let vecs: Vec<Vec<f64>> = (0..k).map(|_| sample_uniform(d, &mut rng)).collect();
            let s = Subspace::span(d, &vecs);
            let p = s.projector();
            prop_assert!(p.matmul(&p).sub(&p).max_abs() <= 1e-12);
            prop_assert!(p.transpose().sub(&p).max_abs() <= 1e-12);
            let x = sample_uniform(d, &mut rng);
            if let Ok(y) = pi_map(&s, &x, EPS_PERP) {
                let z = pi_map(&s, &y, EPS_PERP).unwrap();
                for (a, b) in y.iter().zip(&z) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
                prop_assert!((norm(&y) - 1.0).abs() <= 1e-12);
            }
        }
    }
}
