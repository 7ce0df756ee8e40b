//! Shape/gain rate split and per-sphere codebook sizes from the high-resolution model.

use concentric_pc::codec::Variant;
use concentric_pc::combinatorics::{multinomial_size, CompositionFilter};
use concentric_pc::wsc::{
    allocate_compositions, gain_codebook, optimal_rate_split, sizes_variable_rate, snr_improvement_db, wsc_constants,
    G_LEECH,
};

fn main() -> concentric_pc::error::Result<()> {
    let (n, rate) = (25, 2.0);
    let k = wsc_constants(n, G_LEECH, 1.0)?;
    let split = optimal_rate_split(rate, &k)?;
    println!("n={n}, R={rate}: shape {:.6} + gain {:.6} bits", split.shape, split.gain);

    let gc = gain_codebook(4, n, 1.0)?;
    let targets = sizes_variable_rate(&split, &gc, n);
    let comps = allocate_compositions(n, &targets, Variant::I, CompositionFilter::Variant1Unimodal)?;
    for ((g, t), c) in gc.gains.iter().zip(&targets).zip(&comps) {
        println!("gain {g:.4}: target log2 M {t:7.2}, chosen {c} with log2 M {:.2}", multinomial_size(c).log2());
    }
    for n in [5, 10, 25, 50] {
        println!("SNR gain of the shape-gain split over a single sphere at n={n}: {:.4} dB", snr_improvement_db(n));
    }
    Ok(())
}
