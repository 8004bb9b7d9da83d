//! Lyapunov functional V_p along the zero-temperature flow against the
//! envelope V_p(ρ0)·exp(−2pγt/σ_max(B)).

use tokenflow::bounds::{zero_temp_envelope, BoundParams, EnvelopeForm, ZeroTempEnvelope};
use tokenflow::dynamics::run;
use tokenflow::metrics::v_p;
use tokenflow::spectral::CLUSTER_TOL;
use tokenflow::sphere::SeededRng;
use tokenflow::{build_model, Beta, Ensemble, Matrix, SimConfig};

fn main() {
    let b = Matrix::from_rows(&[[1.5, 0.2, 0.0], [0.0, 1.0, 0.3], [0.1, 0.0, 0.8]]).unwrap();
    let s = Matrix::from_diag(&[2.0, 1.0, -0.5]);
    let v = s.matmul(&tokenflow::linalg::invert(&b.transpose()).unwrap());
    let model = build_model(b, v, CLUSTER_TOL).unwrap();
    let e = model.e.clone().unwrap();

    let p = 0.5;
    let init = Ensemble::sample_uniform(300, 3, &mut SeededRng::new(5));
    let v0 = v_p(&init, &e.space, p);
    let bp = BoundParams::with_default_constants(p, e.gap(), model.sigma_min_b, model.sigma_max_b, v0, 1.0);

    let cfg = SimConfig { beta: Beta::Infinite, dt: 0.01, t_final: 6.0, record_stride: 50, ..SimConfig::default() };
    println!("gap {:.3}, sigma_max(B) {:.3}", e.gap(), model.sigma_max_b);
    println!("{:>5} {:>12} {:>12}", "t", "V_p", "envelope");
    run(&init, &model, &cfg, &mut |_: usize, t: f64, ens: &Ensemble| {
        let ZeroTempEnvelope::Lyapunov(env) = zero_temp_envelope(t, &bp, EnvelopeForm::Lyapunov) else { unreachable!() };
        println!("{t:>5.1} {:>12.4e} {env:>12.4e}", v_p(ens, &e.space, p));
    })
    .unwrap();
}
