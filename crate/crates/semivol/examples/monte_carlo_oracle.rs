//! The ground-truth side of the house: rejection sampling and masked
//! quadrature, used to validate every relaxation in the test suite.
//!
//! Run with `cargo run --release --example monte_carlo_oracle`.

use semivol::oracles::{fixtures, mc_volume, quad_moments_on_k};

fn main() {
    println!(
        "{:<10} {:>10} {:>22} {:>12} {:>8}",
        "fixture", "exact", "monte carlo (99% CI)", "quadrature", "σ-dev"
    );
    for fx in fixtures() {
        // One million samples, fixed seed: the estimate is reproducible
        // bit-for-bit and lands within a couple of standard errors.
        let mc = mc_volume(&fx.spec, 1_000_000, 0);
        let quad = quad_moments_on_k(&fx.spec, 2, fx.quad_nodes);
        println!(
            "{:<10} {:>10.6} {:>9.6} ± {:<10.6} {:>12.6} {:>7.2}σ",
            fx.name,
            fx.exact_volume,
            mc.volume,
            mc.ci_high - mc.volume,
            quad.moments.mass(),
            (mc.volume - fx.exact_volume).abs() / mc.std_error
        );
    }

    // The quadrature oracle also reports how much the value moved when the
    // node count doubled — an a-posteriori error estimate.
    println!("\nquadrature self-reported error (change under node doubling):");
    for fx in fixtures() {
        let quad = quad_moments_on_k(&fx.spec, 2, fx.quad_nodes);
        println!("  {:<10} {:.1e}", fx.name, quad.volume_change);
    }
}
