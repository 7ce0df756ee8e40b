//! Exchanging adjacent composition parts.
//!
//! For Variant II, moving a larger group below a smaller one can be paired
//! with a level transform that keeps every sphere's gap between the two
//! levels and its energy `Σ n_i μ_i²`. When the gap spread across spheres is
//! small enough (the ratio test below), the transformed code is no worse.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sorted_distance, DesignConfig, TrainingSet};
use crate::codec::Variant;
use crate::combinatorics::Composition;
use crate::error::{Error, Result};
use crate::order_stats::OrderStatTable;
use crate::rng::{Moments, BLOCK_VECTORS};

/// Swaps parts `m` and `m + 1` (zero-based).
pub fn swap_composition(c: &Composition, m: usize) -> Result<Composition> {
    c.swapped(m)
}

fn check_m(c: &Composition, m: usize) -> Result<()> {
    if m + 1 >= c.k() {
        return Err(Error::InvalidArgument(format!("swap position {m} needs at least {} parts, got {}", m + 2, c.k())));
    }
    Ok(())
}

/// Levels for the swapped composition: outside `m, m+1` unchanged, and
/// `μ̃_m = (2q μ_m + (r − q) μ_{m+1})/(q + r)`, `μ̃_{m+1} = ((q − r) μ_m + 2r μ_{m+1})/(q + r)`
/// with `q = n_m`, `r = n_{m+1}`.
pub fn swap_levels(c: &Composition, m: usize, levels: &[Vec<f64>]) -> Result<(Composition, Vec<Vec<f64>>)> {
    check_m(c, m)?;
    let q = c.parts()[m] as f64;
    let r = c.parts()[m + 1] as f64;
    let out = levels
        .iter()
        .map(|mu| {
            if mu.len() != c.k() {
                return Err(Error::DimensionMismatch { expected: c.k(), got: mu.len() });
            }
            let mut t = mu.clone();
            if q != r {
                t[m] = (2.0 * q * mu[m] + (r - q) * mu[m + 1]) / (q + r);
                t[m + 1] = ((q - r) * mu[m] + 2.0 * r * mu[m + 1]) / (q + r);
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((c.swapped(m)?, out))
}

/// Tail means `(ζ̄₊, ζ̄₋)` of `ζ = r⁻¹Σ_{first r} η − 2(q−r)⁻¹Σ_{middle} η + r⁻¹Σ_{last r} η`
/// over the `q + r` order statistics covered by parts `m, m+1`.
pub fn zeta_tail_means(training: &TrainingSet, c: &Composition, m: usize) -> Result<(f64, f64)> {
    check_m(c, m)?;
    let (q, r) = (c.parts()[m], c.parts()[m + 1]);
    if q <= r {
        return Err(Error::InvalidArgument(format!("swap needs n_m > n_(m+1), got {q} and {r}")));
    }
    let start: usize = c.parts()[..m].iter().sum();
    let n = training.n;
    let sums: Vec<(f64, f64)> = training
        .rows
        .par_chunks(BLOCK_VECTORS * n)
        .map(|chunk| {
            let (mut plus, mut minus) = (0.0, 0.0);
            for row in chunk.chunks_exact(n) {
                let w = &row[start..start + q + r];
                let z = w[..r].iter().sum::<f64>() / r as f64 - 2.0 * w[r..q].iter().sum::<f64>() / (q - r) as f64
                    + w[q..].iter().sum::<f64>() / r as f64;
                if z >= 0.0 {
                    plus += z;
                } else {
                    minus -= z;
                }
            }
            (plus, minus)
        })
        .collect();
    let count = training.len() as f64;
    let (plus, minus) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((plus / count, minus / count))
}

/// `min_j gap_j / max_j gap_j` for the gaps `μ^j_m − μ^j_{m+1}`.
pub fn omega_gap_ratio(levels: &[Vec<f64>], m: usize) -> f64 {
    let gaps = levels.iter().map(|mu| mu[m] - mu[m + 1]);
    let (lo, hi) = gaps.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g), hi.max(g)));
    lo / hi
}

/// Random strictly decreasing nonnegative level sets, one per sphere, whose gap
/// ratio at `m` is at least `threshold`. Levels are drawn in `[0, scale]`.
pub fn sample_omega_levels<R: Rng>(
    k: usize,
    j: usize,
    m: usize,
    threshold: f64,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if m + 1 >= k || !(threshold <= 1.0) {
        return Err(Error::OmegaInfeasible(format!("m = {m}, K = {k}, ratio threshold {threshold}")));
    }
    for _ in 0..100_000 {
        let levels: Vec<Vec<f64>> = (0..j)
            .map(|_| {
                let mut mu: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * scale).collect();
                mu.sort_unstable_by(|a, b| b.total_cmp(a));
                mu
            })
            .collect();
        let strict = levels.iter().all(|mu| mu.windows(2).all(|w| w[0] > w[1]));
        if strict && omega_gap_ratio(&levels, m) >= threshold {
            return Ok(levels);
        }
    }
    Err(Error::OmegaInfeasible(format!("no level set with gap ratio ≥ {threshold} found")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub swapped: Vec<usize>,
    pub levels_after: Vec<Vec<f64>>,
    pub d_before: f64,
    pub d_after: f64,
    pub stderr_before: f64,
    pub stderr_after: f64,
    /// Standard error of the paired difference `D_before − D_after`.
    pub stderr_diff: f64,
    pub improvement: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    pub gap_ratio: f64,
    pub constraint_satisfied: bool,
}

/// Evaluates a Variant II code before and after swapping parts `m, m+1`, on
/// the same training vectors.
///
/// Fails when the table's `E[η_ℓ]` is not convex or when the levels violate
/// the gap-ratio constraint estimated from the training set.
pub fn swap_improvement_test(
    c: &Composition,
    m: usize,
    levels: &[Vec<f64>],
    cfg: &DesignConfig,
    table: &OrderStatTable,
    training: &TrainingSet,
) -> Result<SwapReport> {
    if cfg.variant != Variant::II || training.variant != Variant::II {
        return Err(Error::InvalidArgument("the swap test applies to Variant II codes".into()));
    }
    if table.n != c.n() || training.n != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n(), got: table.n.max(training.n) });
    }
    if !table.eta_mean_is_convex(0.0) {
        return Err(Error::Infeasible("E[η_ℓ] is not convex in ℓ".into()));
    }
    check_m(c, m)?;
    let (zeta_plus, zeta_minus, gap_ratio, satisfied) = if c.parts()[m] == c.parts()[m + 1] {
        (0.0, 0.0, omega_gap_ratio(levels, m), true)
    } else {
        let (plus, minus) = zeta_tail_means(training, c, m)?;
        let ratio = omega_gap_ratio(levels, m);
        (plus, minus, ratio, ratio >= minus / plus)
    };
    if !satisfied {
        return Err(Error::OmegaInfeasible(format!(
            "gap ratio {gap_ratio} is below ζ̄₋/ζ̄₊ = {}",
            zeta_minus / zeta_plus
        )));
    }
    let (swapped, after) = swap_levels(c, m, levels)?;
    let n = c.n();
    let per_chunk: Vec<[Moments; 3]> = training
        .rows
        .par_chunks(BLOCK_VECTORS * n)
        .map(|chunk| {
            let mut acc = [Moments::default(); 3];
            for row in chunk.chunks_exact(n) {
                let best = |parts: &[usize], set: &[Vec<f64>]| {
                    set.iter().map(|mu| sorted_distance(row, parts, mu)).fold(f64::INFINITY, f64::min) / n as f64
                };
                let before = best(c.parts(), levels);
                let after_d = best(swapped.parts(), &after);
                acc[0].push(before);
                acc[1].push(after_d);
                acc[2].push(before - after_d);
            }
            acc
        })
        .collect();
    let mut total = [Moments::default(); 3];
    for acc in &per_chunk {
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
    }
    Ok(SwapReport {
        swapped: swapped.parts().to_vec(),
        levels_after: after,
        d_before: total[0].mean,
        d_after: total[1].mean,
        stderr_before: total[0].stderr(),
        stderr_after: total[1].stderr(),
        stderr_diff: total[2].stderr(),
        improvement: total[2].mean,
        zeta_plus,
        zeta_minus,
        gap_ratio,
        constraint_satisfied: satisfied,
    })
}
