//! Self-attention as consensus-based optimization: for symmetric B the
//! kernelized CBO consensus point equals the attention average.

use tokenflow::dynamics::{attention_consensus, cbo_consensus};
use tokenflow::sphere::SeededRng;
use tokenflow::{Ensemble, Matrix};

fn main() {
    let ens = Ensemble::sample_uniform(40, 4, &mut SeededRng::new(11));
    let b = Matrix::from_rows(&[[2.0, 0.5, 0.0, 0.0], [0.5, 1.0, 0.0, 0.3], [0.0, 0.0, -1.0, 0.0], [0.0, 0.3, 0.0, 0.5]]).unwrap();
    for beta in [1.0, 10.0, 100.0] {
        let worst = (0..ens.len())
            .map(|i| {
                let a = attention_consensus(&ens, &b, beta, i);
                let c = cbo_consensus(&ens, &b, beta, ens.token(i));
                a.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        println!("beta {beta:>5}: max |m_attention − m_cbo| = {worst:.2e}");
    }
}
