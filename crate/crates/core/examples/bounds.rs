//! Theoretical envelopes: the metastable window and the time that
//! minimizes the finite-temperature bound, which grows like log β.

use tokenflow::bounds::{corollary_window, envelope_argmin, BoundParams};

fn main() {
    println!("{:>8} {:>8} {:>8} {:>8}", "beta", "t*", "t1", "t2");
    for k in 2..=8 {
        let beta = 10f64.powi(k);
        let bp = BoundParams::with_default_constants(1.0, 4.0, 1.0, 5.0, 0.5, beta);
        let w = corollary_window(0.1, &bp);
        println!("{beta:>8.0e} {:>8.3} {:>8.3} {:>8.3}", envelope_argmin(&bp, 10.0, 10_000), w.t1, w.t2);
    }
}
