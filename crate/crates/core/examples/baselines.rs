//! Entropy-coded scalar quantizer curves and the rate-distortion bound.

use concentric_pc::eval::{default_step_grid, ecsq_curve, ecusq_curve, shannon_bound};

fn main() -> concentric_pc::error::Result<()> {
    let steps = default_step_grid(1.0);
    let ecsq = ecsq_curve(&steps, 1.0)?;
    let ecusq = ecusq_curve(&steps, 1.0)?;
    let bound = shannon_bound(&ecsq.iter().map(|p| p.rate_bits).collect::<Vec<_>>(), 1.0)?;
    println!("{:>8} {:>8} {:>10} {:>10} {:>10} {:>8}", "step", "rate", "ECSQ", "ECUSQ", "bound", "gap dB");
    for (i, s) in steps.iter().enumerate().step_by(8) {
        let gap = 10.0 * (ecsq[i].distortion / bound[i].distortion).log10();
        println!(
            "{s:>8.3} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {gap:>8.3}",
            ecsq[i].rate_bits, ecsq[i].distortion, ecusq[i].distortion, bound[i].distortion
        );
    }
    Ok(())
}
