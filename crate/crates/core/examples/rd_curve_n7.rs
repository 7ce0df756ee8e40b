//! Rate-distortion points at n = 7: every single permutation code against
//! three-sphere common-composition codes, both entropy coded.

use concentric_pc::codec::{ConcentricCode, Variant};
use concentric_pc::combinatorics::{enumerate_compositions, CompositionFilter};
use concentric_pc::design::{design_common_composition, optimal_levels_single, pc_distortion_exact, DesignConfig};
use concentric_pc::eval::{empirical_distortion, pareto_filter, rate_fixed, rate_variable, write_rd_csv, RdPoint};
use concentric_pc::order_stats::{gaussian_order_stats, DEFAULT_TOL};

fn main() -> concentric_pc::error::Result<()> {
    let n = 7;
    let table = gaussian_order_stats(n, 1.0, DEFAULT_TOL)?;
    let cfg = DesignConfig { j: 3, variant: Variant::I, sample_count: 50_000, rng_seed: 5, ..Default::default() };
    let mut pc = Vec::new();
    let mut cpc = Vec::new();
    for c in enumerate_compositions(n, CompositionFilter::Variant1Unimodal) {
        let cw = optimal_levels_single(&c, &table, Variant::I)?;
        let d = pc_distortion_exact(&cw, &table)?;
        let rate = rate_fixed(&ConcentricCode::single(cw));
        pc.push(RdPoint { method: "pc".into(), n, j: 1, rate_bits: rate, distortion: d, stderr: 0.0, seed: 0, samples: 0 });
        if c.k() > 1 {
            let design = design_common_composition(&c, &cfg)?;
            let emp = empirical_distortion(&design.code, 100_000, 77, 1.0)?;
            cpc.push(RdPoint {
                method: "cpc-variable".into(),
                n,
                j: 3,
                rate_bits: rate_variable(&design.code, &emp.probs)?,
                distortion: emp.distortion,
                stderr: emp.stderr,
                seed: 77,
                samples: emp.samples,
            });
        }
    }
    let mut rows = pareto_filter(&pc);
    rows.extend(pareto_filter(&cpc));
    write_rd_csv(std::io::stdout().lock(), &rows)
}
