//! Exact empirical W2 between token clouds, and the bound
//! W2(ρ, Π♯ρ)² ≤ 2V_p(ρ).

use tokenflow::metrics::{v_p, w2_empirical};
use tokenflow::spectral::{pushforward_pi, EPS_PERP};
use tokenflow::sphere::SeededRng;
use tokenflow::{Ensemble, Subspace};

fn main() {
    let mut rng = SeededRng::new(17);
    let a = Ensemble::sample_uniform(1000, 3, &mut rng);
    let b = Ensemble::sample_uniform(1000, 3, &mut rng);
    let start = std::time::Instant::now();
    let w2 = w2_empirical(&a, &b).unwrap();
    println!("W2 between two uniform clouds of 1000 tokens: {w2:.4} ({:.0} ms)", start.elapsed().as_secs_f64() * 1e3);

    let plane = Subspace::span(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
    let projected = pushforward_pi(&a, &plane, EPS_PERP).unwrap();
    let w2 = w2_empirical(&a, &projected).unwrap();
    for p in [0.25, 0.5, 1.0] {
        println!("p = {p}: W2(ρ, Π♯ρ)² = {:.4} ≤ 2V_p = {:.4}", w2 * w2, 2.0 * v_p(&a, &plane, p));
    }
}
