//! Full-dimension Lloyd design with a different composition on each sphere.

use concentric_pc::codec::Variant;
use concentric_pc::combinatorics::Composition;
use concentric_pc::design::{lloyd_general, DesignConfig};
use concentric_pc::eval::{empirical_distortion, rate_fixed, rate_variable};

fn main() -> concentric_pc::error::Result<()> {
    let comps: Vec<Composition> = ["1,2,2", "2,2,1", "1,1,1,1,1"].iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let cfg = DesignConfig { j: 3, variant: Variant::II, sample_count: 100_000, rng_seed: 2, ..Default::default() };
    let design = lloyd_general(&comps, &cfg)?;
    for cw in design.code.subcodes() {
        println!("{:<12} {:?}", cw.composition().to_string(), cw.levels());
    }
    println!("training distortion per iteration: {:?}", design.report.history);

    let emp = empirical_distortion(&design.code, 200_000, 9, 1.0)?;
    println!(
        "held-out D = {:.5}, variable rate {:.4}, fixed rate {:.4}",
        emp.distortion,
        rate_variable(&design.code, &emp.probs)?,
        rate_fixed(&design.code)
    );
    Ok(())
}
