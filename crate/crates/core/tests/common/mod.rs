//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use tokenflow::linalg::{dot, invert, norm, Matrix};
use tokenflow::sphere::SeededRng;
use tokenflow::{build_model, Ensemble, SpectralModel};

/// Exact empirical W2 by enumerating all `n!` matchings.
pub fn w2_by_enumeration(a: &Ensemble, b: &Ensemble) -> f64 {
    let n = a.len();
    let cost = |i: usize, j: usize| -> f64 { a.token(i).iter().zip(b.token(j)).map(|(x, y)| (x - y) * (x - y)).sum() };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permutations(&mut perm, 0, &mut |p| {
        let c: f64 = p.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
        best = best.min(c);
    });
    (best / n as f64).sqrt()
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            y[k] = x[k] + h;
            let up = f(&y);
            y[k] = x[k] - h;
            let down = f(&y);
            y[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central finite-difference Jacobian of a vector map; entry `(i, k)` is `∂f_i/∂x_k`.
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut jac = vec![vec![0.0; d]; d];
    let mut y = x.to_vec();
    for k in 0..d {
        y[k] = x[k] + h;
        let up = f(&y);
        y[k] = x[k] - h;
        let down = f(&y);
        y[k] = x[k];
        for i in 0..d {
            jac[i][k] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

/// `exp(Vt) x0 / ‖exp(Vt) x0‖` for diagonal `V`: the Oja flow of a collapsed ensemble.
pub fn oja_closed_form(v_diag: &[f64], x0: &[f64], t: f64) -> Vec<f64> {
    let y: Vec<f64> = v_diag.iter().zip(x0).map(|(l, x)| (l * t).exp() * x).collect();
    let n = norm(&y);
    y.iter().map(|c| c / n).collect()
}

pub fn random_unit(d: usize, rng: &mut SeededRng) -> Vec<f64> {
    let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let n = norm(&x);
    x.iter().map(|c| c / n).collect()
}

/// Haar-ish orthogonal matrix from Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(d: usize, rng: &mut SeededRng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut c: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        for q in &cols {
            let p = dot(&c, q);
            c.iter_mut().zip(q).for_each(|(ci, qi)| *ci -= p * qi);
        }
        let n = norm(&c);
        if n > 1e-6 {
            cols.push(c.iter().map(|x| x / n).collect());
        }
    }
    let mut m = Matrix::zeros(d);
    for (j, c) in cols.iter().enumerate() {
        for (i, x) in c.iter().enumerate() {
            m.set(i, j, *x);
        }
    }
    m
}

pub fn random_symmetric(d: usize, rng: &mut SeededRng) -> Matrix {
    let q = random_orthogonal(d, rng);
    let lambda: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let m = q.matmul(&Matrix::from_diag(&lambda)).matmul(&q.transpose());
    m.add(&m.transpose()).scaled(0.5)
}

/// Model with symmetric `VBᵀ = S` and a generic invertible `B`.
///
/// `B = Q1 diag(s) Q2ᵀ` with singular values in `[0.5, 2]`; `S` has top
/// eigenvalue 1, simple, and the rest in `[−1, 1 − gap]`. `V = S B^{−T}`.
pub fn random_symmetric_vbt_model(d: usize, gap: f64, rng: &mut SeededRng) -> SpectralModel {
    let q1 = random_orthogonal(d, rng);
    let q2 = random_orthogonal(d, rng);
    let s: Vec<f64> = (0..d).map(|_| 0.5 + 1.5 * rng.uniform01()).collect();
    let b = q1.matmul(&Matrix::from_diag(&s)).matmul(&q2.transpose());
    let q3 = random_orthogonal(d, rng);
    let mut lambda = vec![1.0];
    lambda.extend((1..d).map(|_| -1.0 + (2.0 - gap) * rng.uniform01()));
    let sym = q3.matmul(&Matrix::from_diag(&lambda)).matmul(&q3.transpose());
    let sym = sym.add(&sym.transpose()).scaled(0.5);
    let v = sym.matmul(&invert(&b.transpose()).expect("B is invertible"));
    build_model(b, v, tokenflow::spectral::CLUSTER_TOL).expect("B is invertible")
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
