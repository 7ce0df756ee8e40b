//! Lloyd iterations for concentric codes.
//!
//! One engine serves both designs. The full design runs it on sorted training
//! vectors with one composition per sphere; the common-composition design runs
//! it on the `K`-dimensional grouped projections with unit groups, where the
//! centroid update is the ordinary VQ centroid.

use rand::seq::index;
use rayon::prelude::*;

use super::{
    group_means, sorted_distance, sorted_domain_distortion, Design, DesignConfig, DesignReport, EmptyCellPolicy,
    TrainingSet,
};
use crate::codec::{ConcentricCode, InitialCodeword};
use crate::combinatorics::Composition;
use crate::error::{Error, Result};
use crate::order_stats::project_sorted;
use crate::rng::{substream, Moments, ALGORITHM_ID, BLOCK_VECTORS};

/// Relative slack allowed for rounding when checking that distortion never rises.
const MONOTONE_SLACK: f64 = 1e-12;

struct Outcome {
    parts: Vec<Vec<usize>>,
    levels: Vec<Vec<f64>>,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
    empty_cell_events: usize,
    repaired: bool,
}

struct ChunkStats {
    moments: Moments,
    hits: Vec<u64>,
    sums: Vec<Vec<f64>>,
    /// Largest errors as `(distance, row)`, descending.
    worst: Vec<(f64, usize)>,
}

fn keep_worst(worst: &mut Vec<(f64, usize)>, cand: (f64, usize), keep: usize) {
    worst.push(cand);
    worst.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    worst.truncate(keep);
}

fn assign(rows: &[f64], dim: usize, parts: &[Vec<usize>], levels: &[Vec<f64>]) -> ChunkStats {
    let j_count = levels.len();
    let per_chunk: Vec<ChunkStats> = rows
        .par_chunks(BLOCK_VECTORS * dim)
        .enumerate()
        .map(|(c, chunk)| {
            let mut s = ChunkStats {
                moments: Moments::default(),
                hits: vec![0; j_count],
                sums: parts.iter().map(|p| vec![0.0; p.len()]).collect(),
                worst: Vec::with_capacity(j_count + 1),
            };
            for (r, row) in chunk.chunks_exact(dim).enumerate() {
                let mut best = (0, f64::INFINITY);
                for (j, (p, mu)) in parts.iter().zip(levels).enumerate() {
                    let d = sorted_distance(row, p, mu);
                    if d < best.1 {
                        best = (j, d);
                    }
                }
                let (j, d) = best;
                s.hits[j] += 1;
                s.moments.push(d / dim as f64);
                let mut pos = 0;
                for (sum, &len) in s.sums[j].iter_mut().zip(&parts[j]) {
                    *sum += row[pos..pos + len].iter().sum::<f64>();
                    pos += len;
                }
                if s.worst.len() < j_count || d > s.worst.last().map_or(f64::NEG_INFINITY, |w| w.0) {
                    keep_worst(&mut s.worst, (d, c * BLOCK_VECTORS + r), j_count);
                }
            }
            s
        })
        .collect();

    let mut total = ChunkStats {
        moments: Moments::default(),
        hits: vec![0; j_count],
        sums: parts.iter().map(|p| vec![0.0; p.len()]).collect(),
        worst: Vec::new(),
    };
    for s in &per_chunk {
        total.moments.merge(&s.moments);
        total.hits.iter_mut().zip(&s.hits).for_each(|(a, b)| *a += b);
        for (a, b) in total.sums.iter_mut().zip(&s.sums) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for &w in &s.worst {
            keep_worst(&mut total.worst, w, j_count);
        }
    }
    total
}

/// Pools adjacent groups until the levels strictly decrease. Returns whether anything changed.
fn repair_order(parts: &mut Vec<usize>, levels: &mut Vec<f64>) -> bool {
    let mut changed = false;
    while let Some(i) = levels.windows(2).position(|w| w[0] <= w[1]) {
        let (a, b) = (parts[i] as f64, parts[i + 1] as f64);
        levels[i] = (a * levels[i] + b * levels[i + 1]) / (a + b);
        parts[i] += parts[i + 1];
        parts.remove(i + 1);
        levels.remove(i + 1);
        changed = true;
    }
    changed
}

fn run(
    rows: &[f64],
    dim: usize,
    mut parts: Vec<Vec<usize>>,
    mut levels: Vec<Vec<f64>>,
    cfg: &DesignConfig,
    repair: bool,
) -> Result<Outcome> {
    let mut history: Vec<f64> = Vec::new();
    let mut empty_cell_events = 0;
    let mut repaired = false;
    let mut iterations = 0;
    let converged = loop {
        let stats = assign(rows, dim, &parts, &levels);
        let d = stats.moments.mean;
        if let Some(&prev) = history.last() {
            debug_assert!(d <= prev * (1.0 + MONOTONE_SLACK), "Lloyd distortion rose from {prev} to {d}");
        }
        let done = history.last().is_some_and(|&prev| prev - d <= cfg.lloyd_rel_tol * prev);
        history.push(d);
        if done {
            break true;
        }
        if iterations >= cfg.lloyd_max_iters {
            break false;
        }
        iterations += 1;

        let mut reseeds = stats.worst.iter();
        for j in 0..levels.len() {
            if stats.hits[j] == 0 {
                empty_cell_events += 1;
                match cfg.empty_cell_policy {
                    EmptyCellPolicy::Fail => {
                        return Err(Error::Infeasible(format!(
                            "sphere {} lost all training vectors at iteration {iterations}",
                            j + 1
                        )))
                    }
                    EmptyCellPolicy::ReseedWorst => {
                        let &(_, r) = reseeds.next().expect("one reseed candidate per sphere");
                        levels[j] = group_means(&rows[r * dim..(r + 1) * dim], &parts[j]);
                    }
                }
            } else {
                let count = stats.hits[j] as f64;
                for ((mu, sum), &len) in levels[j].iter_mut().zip(&stats.sums[j]).zip(&parts[j]) {
                    *mu = sum / (count * len as f64);
                }
            }
            if repair {
                repaired |= repair_order(&mut parts[j], &mut levels[j]);
            }
        }
    };
    Ok(Outcome { parts, levels, history, iterations, converged, empty_cell_events, repaired })
}

fn init_rows(len: usize, cfg: &DesignConfig) -> Result<Vec<usize>> {
    if len < cfg.j {
        return Err(Error::InvalidArgument(format!("{len} training vectors cannot seed {} spheres", cfg.j)));
    }
    let mut rng = substream(cfg.rng_seed, "lloyd-init", 0);
    Ok(index::sample(&mut rng, len, cfg.j).into_vec())
}

fn build_code(parts: &[Vec<usize>], levels: &[Vec<f64>], cfg: &DesignConfig) -> Result<ConcentricCode> {
    let subcodes = parts
        .iter()
        .zip(levels)
        .map(|(p, mu)| InitialCodeword::new(Composition::new(p.clone())?, mu.clone(), cfg.variant))
        .collect::<Result<Vec<_>>>()?;
    ConcentricCode::new(subcodes)
}

/// Alternating nearest-sphere partition and centroid update for `J` given
/// compositions, on a fresh training set.
pub fn lloyd_general(compositions: &[Composition], cfg: &DesignConfig) -> Result<Design> {
    cfg.validate()?;
    let n = compositions.first().map_or(0, Composition::n);
    lloyd_general_from(&cfg.training_set(n), compositions, cfg, None)
}

/// As [`lloyd_general`] on a supplied training set, optionally from given levels.
pub fn lloyd_general_from(
    training: &TrainingSet,
    compositions: &[Composition],
    cfg: &DesignConfig,
    initial_levels: Option<Vec<Vec<f64>>>,
) -> Result<Design> {
    if compositions.len() != cfg.j {
        return Err(Error::InvalidArgument(format!("{} compositions given for J = {}", compositions.len(), cfg.j)));
    }
    if training.variant != cfg.variant {
        return Err(Error::InvalidArgument("training set variant differs from the configuration".into()));
    }
    for c in compositions {
        if c.n() != training.n {
            return Err(Error::DimensionMismatch { expected: training.n, got: c.n() });
        }
    }
    let parts: Vec<Vec<usize>> = compositions.iter().map(|c| c.parts().to_vec()).collect();
    let levels = match initial_levels {
        Some(l) => l,
        None => init_rows(training.len(), cfg)?
            .into_iter()
            .zip(&parts)
            .map(|(r, p)| group_means(training.row(r), p))
            .collect(),
    };
    let out = run(&training.rows, training.n, parts, levels, cfg, true)?;
    let (moments, probs) = sorted_domain_distortion(training, &out.parts, &out.levels);
    Ok(Design {
        code: build_code(&out.parts, &out.levels, cfg)?,
        report: DesignReport {
            method: "lloyd-general".into(),
            iterations: out.iterations,
            converged: out.converged,
            history: out.history,
            distortion: moments.mean,
            stderr: moments.stderr(),
            probs,
            empty_cell_events: out.empty_cell_events,
            repaired: out.repaired,
            seed: training.seed,
            samples: training.len(),
            rng: ALGORITHM_ID.into(),
            max_decomposition_residual: None,
        },
    })
}

fn reduced_rows(training: &TrainingSet, c: &Composition) -> Vec<f64> {
    training
        .rows
        .par_chunks(BLOCK_VECTORS * training.n)
        .map(|chunk| chunk.chunks_exact(training.n).flat_map(|row| project_sorted(row, c)).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .concat()
}

/// Relative gap between the two sides of the distortion decomposition
/// `n·D = E min_j ‖ξ̄ − μ^j‖² + E‖x‖² − E‖ξ̄‖²`, one value per batch of training vectors.
///
/// `centroids` are the scaled reduced points `(√n_i μ_i^j)_i`.
pub fn decomposition_residuals(training: &TrainingSet, c: &Composition, centroids: &[Vec<f64>]) -> Vec<f64> {
    let scale: Vec<f64> = c.parts().iter().map(|&k| (k as f64).sqrt()).collect();
    let levels: Vec<Vec<f64>> =
        centroids.iter().map(|m| m.iter().zip(&scale).map(|(v, s)| v / s).collect()).collect();
    training
        .rows
        .par_chunks(BLOCK_VECTORS * training.n)
        .map(|chunk| {
            let (mut full, mut reduced, mut energy, mut projected) = (0.0, 0.0, 0.0, 0.0);
            for row in chunk.chunks_exact(training.n) {
                let bar = project_sorted(row, c);
                full += levels.iter().map(|mu| sorted_distance(row, c.parts(), mu)).fold(f64::INFINITY, f64::min);
                reduced += centroids
                    .iter()
                    .map(|m| bar.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                energy += row.iter().map(|v| v * v).sum::<f64>();
                projected += bar.iter().map(|v| v * v).sum::<f64>();
            }
            let rhs = reduced + energy - projected;
            (full - rhs).abs() / full.abs().max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// Common-composition design: `J`-point Lloyd on the `K`-dimensional grouped
/// projections, mapped back to levels `μ_i^j = (scaled coordinate)/√n_i`.
pub fn design_common_composition(c: &Composition, cfg: &DesignConfig) -> Result<Design> {
    cfg.validate()?;
    design_common_composition_on(&cfg.training_set(c.n()), c, cfg)
}

/// As [`design_common_composition`] on a supplied training set.
pub fn design_common_composition_on(training: &TrainingSet, c: &Composition, cfg: &DesignConfig) -> Result<Design> {
    if c.n() != training.n {
        return Err(Error::DimensionMismatch { expected: training.n, got: c.n() });
    }
    if training.variant != cfg.variant {
        return Err(Error::InvalidArgument("training set variant differs from the configuration".into()));
    }
    let k = c.k();
    let rows = reduced_rows(training, c);
    let unit = vec![vec![1; k]; cfg.j];
    let init: Vec<Vec<f64>> = init_rows(training.len(), cfg)?.into_iter().map(|r| rows[r * k..(r + 1) * k].to_vec()).collect();
    let out = run(&rows, k, unit, init, cfg, false)?;

    let residuals = decomposition_residuals(training, c, &out.levels);
    let scale: Vec<f64> = c.parts().iter().map(|&p| (p as f64).sqrt()).collect();
    let mut parts = vec![c.parts().to_vec(); cfg.j];
    let mut levels: Vec<Vec<f64>> =
        out.levels.iter().map(|m| m.iter().zip(&scale).map(|(v, s)| v / s).collect()).collect();
    let mut repaired = false;
    for (p, mu) in parts.iter_mut().zip(levels.iter_mut()) {
        repaired |= repair_order(p, mu);
    }
    let (moments, probs) = sorted_domain_distortion(training, &parts, &levels);
    Ok(Design {
        code: build_code(&parts, &levels, cfg)?,
        report: DesignReport {
            method: "common-composition".into(),
            iterations: out.iterations,
            converged: out.converged,
            // The reduced distortion differs from n·D by a constant; report per-sample D.
            history: out.history.iter().map(|h| h * k as f64 / c.n() as f64).collect(),
            distortion: moments.mean,
            stderr: moments.stderr(),
            probs,
            empty_cell_events: out.empty_cell_events,
            repaired,
            seed: training.seed,
            samples: training.len(),
            rng: ALGORITHM_ID.into(),
            max_decomposition_residual: residuals.into_iter().reduce(f64::max),
        },
    })
}
