//! Zero-temperature flow on the fig1 model: tokens collapse onto the
//! dominant eigenspace E and W2 to Π♯ρ0 decays exponentially.

use tokenflow::dynamics::run;
use tokenflow::harness::presets::{fig1_mixture, fig1_vbt};
use tokenflow::metrics::{v_p, w2_empirical};
use tokenflow::spectral::{pushforward_pi, CLUSTER_TOL, EPS_PERP};
use tokenflow::sphere::{SeededRng, VmfMixture};
use tokenflow::{build_model, Beta, Ensemble, Matrix, SimConfig};

fn main() {
    let model = build_model(fig1_vbt(), Matrix::identity(3), CLUSTER_TOL).unwrap();
    let e = &model.e.as_ref().unwrap().space;
    let mix = VmfMixture::new(fig1_mixture()).unwrap();
    let init = Ensemble::sample_vmf(500, &mix, &mut SeededRng::new(1));
    let target = pushforward_pi(&init, e, EPS_PERP).unwrap();

    let cfg = SimConfig { beta: Beta::Infinite, dt: 0.01, t_final: 5.0, record_stride: 50, ..SimConfig::default() };
    println!("{:>5} {:>12} {:>12}", "t", "W2", "V_1");
    run(&init, &model, &cfg, &mut |_: usize, t: f64, ens: &Ensemble| {
        let w2 = w2_empirical(ens, &target).unwrap();
        println!("{t:>5.1} {w2:>12.4e} {:>12.4e}", v_p(ens, e, 1.0));
    })
    .unwrap();
}
