//! Design a three-sphere code whose spheres share one composition, by Lloyd
//! iteration in the reduced K-dimensional space.

use concentric_pc::codec::Variant;
use concentric_pc::design::{design_common_composition, DesignConfig};

fn main() -> concentric_pc::error::Result<()> {
    let cfg = DesignConfig { j: 3, variant: Variant::I, sample_count: 100_000, rng_seed: 1, ..Default::default() };
    let design = design_common_composition(&"2,3,2".parse()?, &cfg)?;
    for cw in design.code.subcodes() {
        println!("{} {:?}", cw.composition(), cw.levels());
    }
    let r = &design.report;
    println!(
        "D = {:.5} ± {:.5} after {} iterations, sphere probabilities {:?}",
        r.distortion, r.stderr, r.iterations, r.probs
    );
    println!("decomposition residual {:e}", r.max_decomposition_residual.unwrap_or(f64::NAN));
    Ok(())
}
