//! Fixed-rate design: allocate sizes across spheres, pick compositions, run Lloyd.

use concentric_pc::codec::Variant;
use concentric_pc::design::DesignConfig;
use concentric_pc::wsc::{default_filter, design_fixed_rate};

fn main() -> concentric_pc::error::Result<()> {
    let cfg = DesignConfig { j: 3, variant: Variant::I, sample_count: 100_000, rng_seed: 1, ..Default::default() };
    let (design, report) = design_fixed_rate(7, 1.5, &cfg, default_filter(Variant::I))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    for cw in design.code.subcodes() {
        println!("{} {:?}", cw.composition(), cw.levels());
    }
    Ok(())
}
