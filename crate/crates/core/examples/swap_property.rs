//! Swapping a larger level group with a smaller one below it, under the gap
//! constraint, lowers the distortion of a sign-magnitude code.

use concentric_pc::codec::Variant;
use concentric_pc::design::{sample_omega_levels, swap_improvement_test, zeta_tail_means, DesignConfig};
use concentric_pc::order_stats::{folded_order_stats, DEFAULT_TOL};
use concentric_pc::rng::substream;

fn main() -> concentric_pc::error::Result<()> {
    let c = "3,2".parse()?;
    let cfg = DesignConfig { j: 2, variant: Variant::II, sample_count: 200_000, rng_seed: 8, ..Default::default() };
    let training = cfg.training_set(5);
    let table = folded_order_stats(5, 1.0, DEFAULT_TOL)?;
    let (plus, minus) = zeta_tail_means(&training, &c, 0)?;
    println!("required gap ratio {:.4}", minus / plus);

    let mut rng = substream(8, "swap-demo", 0);
    for _ in 0..3 {
        let levels = sample_omega_levels(2, 2, 0, minus / plus, 2.5, &mut rng)?;
        let r = swap_improvement_test(&c, 0, &levels, &cfg, &table, &training)?;
        println!(
            "{levels:.3?} -> {:?} {:.3?}: D {:.5} -> {:.5} (improvement {:.5} ± {:.5})",
            r.swapped, r.levels_after, r.d_before, r.d_after, r.improvement, r.stderr_diff
        );
    }
    Ok(())
}
