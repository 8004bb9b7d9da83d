//! Quantitative Laplace principle: the softmax consensus approaches
//! y*(x) = Bᵀx/‖Bᵀx‖ as β grows, under the bound of the lemma.

use tokenflow::bounds::{laplace_rhs, temperature_scale};
use tokenflow::linalg::singular_extremes;
use tokenflow::metrics::{laplace_maximizer, laplace_residual};
use tokenflow::sphere::{cap_mass, SeededRng};
use tokenflow::{Ensemble, Matrix};

fn main() {
    let mut rng = SeededRng::new(7);
    let ens = Ensemble::sample_uniform(10_000, 3, &mut rng);
    let b = Matrix::from_diag(&[1.0, 2.0, 3.0]);
    let (sigma_min, _) = singular_extremes(&b);
    let x = [0.6, 0.0, 0.8];
    let y = laplace_maximizer(&b, &x);

    println!("{:>7} {:>10} {:>10}", "beta", "residual", "bound");
    for beta in [1.0, 10.0, 100.0, 1000.0] {
        let r = temperature_scale(beta);
        let bound = laplace_rhs(r, r, beta, sigma_min, cap_mass(&ens, &y, r)).unwrap();
        println!("{beta:>7} {:>10.4} {bound:>10.4}", laplace_residual(&ens, &b, beta, &x));
    }
}
