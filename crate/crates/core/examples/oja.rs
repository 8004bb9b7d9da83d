//! A fully collapsed ensemble follows the Oja flow ẋ = P_x(Vx) and
//! converges to the dominant eigenvector of V.

use tokenflow::dynamics::run;
use tokenflow::linalg::{dist_sq, norm};
use tokenflow::spectral::CLUSTER_TOL;
use tokenflow::{build_model, Beta, Ensemble, Matrix, SimConfig};

fn main() {
    let v = [1.0, 2.0];
    let model = build_model(Matrix::identity(2), Matrix::from_diag(&v), CLUSTER_TOL).unwrap();
    let x0 = [0.3f64.cos(), 0.3f64.sin()];
    let init = Ensemble::collapsed(&x0, 8).unwrap();
    let cfg = SimConfig { beta: Beta::Finite(1.0), dt: 0.01, t_final: 15.0, record_stride: 300, ..SimConfig::default() };
    println!("{:>5} {:>12} {:>12}", "t", "to e2", "vs e^(Vt)x0");
    run(&init, &model, &cfg, &mut |_: usize, t: f64, ens: &Ensemble| {
        let y: Vec<f64> = v.iter().zip(&x0).map(|(l, x)| (l * t).exp() * x).collect();
        let exact: Vec<f64> = y.iter().map(|c| c / norm(&y)).collect();
        let x = ens.token(0);
        println!("{t:>5.1} {:>12.3e} {:>12.3e}", dist_sq(x, &[0.0, 1.0]).sqrt(), dist_sq(x, &exact).sqrt());
    })
    .unwrap();
}
