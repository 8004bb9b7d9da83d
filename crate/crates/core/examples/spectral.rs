//! Spectral objects of a model: E (top eigenspace of VBᵀ) with its gap,
//! F and F_abs (of V), and how non-symmetric VBᵀ is reported.

use tokenflow::harness::presets::{fig1_vbt, nonsym_pairs};
use tokenflow::spectral::CLUSTER_TOL;
use tokenflow::{build_model, Matrix};

fn main() {
    let fig1 = build_model(fig1_vbt(), Matrix::identity(3), CLUSTER_TOL).unwrap();
    for (key, value) in fig1.summary_lines() {
        println!("fig1 {key} = {value}");
    }
    for (i, (v, b)) in nonsym_pairs().into_iter().enumerate() {
        let m = build_model(b, v, CLUSTER_TOL).unwrap();
        println!("nonsym pair {}: asymmetry {:.3}, E metrics {}", i + 1, m.vbt_asymmetry, m.e_source());
    }
}
