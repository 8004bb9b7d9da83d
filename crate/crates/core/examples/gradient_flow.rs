//! With B = V the dynamics at β = 1 ascend the interaction energy;
//! with B = −V they descend it.

use tokenflow::dynamics::run;
use tokenflow::harness::presets::random_definite;
use tokenflow::metrics::interaction_energy;
use tokenflow::spectral::CLUSTER_TOL;
use tokenflow::sphere::SeededRng;
use tokenflow::{build_model, Beta, Ensemble, SimConfig};

fn main() {
    let b = random_definite(4, true, &mut SeededRng::new(13));
    let init = Ensemble::sample_uniform(100, 4, &mut SeededRng::new(14));
    let cfg = SimConfig { beta: Beta::Finite(1.0), dt: 0.01, t_final: 10.0, record_stride: 200, ..SimConfig::default() };
    for (name, v) in [("B = V", b.clone()), ("B = -V", b.scaled(-1.0))] {
        let model = build_model(b.clone(), v, CLUSTER_TOL).unwrap();
        let mut energies = Vec::new();
        run(&init, &model, &cfg, &mut |_: usize, _: f64, ens: &Ensemble| energies.push(interaction_energy(ens, &b))).unwrap();
        let shown: Vec<String> = energies.iter().map(|e| format!("{e:.4}")).collect();
        println!("{name:>6}: {}", shown.join(" "));
    }
}
