//! Two time scales at finite β: alignment with E first, then with F,
//! the top eigenspace of V.

use tokenflow::dynamics::run;
use tokenflow::metrics::alignment;
use tokenflow::spectral::CLUSTER_TOL;
use tokenflow::sphere::SeededRng;
use tokenflow::{build_model, Beta, Ensemble, Matrix, SimConfig};

fn main() {
    let b = Matrix::from_diag(&[-1.0, -1.0, 1.0]);
    let v = Matrix::from_diag(&[-1.0, 1.0, -2.0]);
    let model = build_model(b, v, CLUSTER_TOL).unwrap();
    let e = model.e.clone().unwrap().space;
    let f = model.f.clone().unwrap().space;
    println!("dim E = {}, dim F = {}", e.dim(), f.dim());

    let init = Ensemble::sample_uniform(200, 3, &mut SeededRng::new(3));
    let cfg = SimConfig { beta: Beta::Finite(100.0), dt: 0.01, t_final: 20.0, record_stride: 100, ..SimConfig::default() };
    println!("{:>5} {:>8} {:>8}", "t", "align_E", "align_F");
    run(&init, &model, &cfg, &mut |_: usize, t: f64, ens: &Ensemble| {
        println!("{t:>5.1} {:>8.4} {:>8.4}", alignment(ens, &e), alignment(ens, &f));
    })
    .unwrap();
}
