//! Level and composition optimization.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{ConcentricCode, InitialCodeword, Variant};
use crate::combinatorics::Composition;
use crate::error::{Error, Result};
use crate::order_stats::OrderStatTable;
use crate::rng::{GaussianStream, Moments, BLOCK_VECTORS};

mod lloyd;
mod swap;

pub use lloyd::{
    decomposition_residuals, design_common_composition, design_common_composition_on, lloyd_general, lloyd_general_from,
};
pub use swap::{
    omega_gap_ratio, sample_omega_levels, swap_composition, swap_improvement_test, swap_levels, zeta_tail_means,
    SwapReport,
};

/// Smallest sample count accepted for a reported design.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyCellPolicy {
    /// Move the dead point onto the training vector with the largest error.
    #[default]
    ReseedWorst,
    /// Stop with an error.
    Fail,
}

impl FromStr for EmptyCellPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reseed-worst" => Ok(Self::ReseedWorst),
            "fail" => Ok(Self::Fail),
            other => Err(Error::InvalidArgument(format!("unknown empty-cell policy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub j: usize,
    pub variant: Variant,
    pub sample_count: usize,
    pub rng_seed: u64,
    pub lloyd_rel_tol: f64,
    pub lloyd_max_iters: usize,
    pub empty_cell_policy: EmptyCellPolicy,
    pub sigma: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            j: 1,
            variant: Variant::I,
            sample_count: 500_000,
            rng_seed: 1,
            lloyd_rel_tol: 1e-6,
            lloyd_max_iters: 200,
            empty_cell_policy: EmptyCellPolicy::ReseedWorst,
            sigma: 1.0,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j == 0 {
            return Err(Error::InvalidArgument("J must be at least 1".into()));
        }
        if self.sample_count < MIN_SAMPLES.max(self.j) {
            return Err(Error::InvalidArgument(format!(
                "sample count {} is below the minimum {}",
                self.sample_count,
                MIN_SAMPLES.max(self.j)
            )));
        }
        if !(self.lloyd_rel_tol > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("Lloyd tolerance and σ must be positive".into()));
        }
        Ok(())
    }

    pub fn training_set(&self, n: usize) -> TrainingSet {
        TrainingSet::generate(n, self.variant, self.sample_count, self.sigma, self.rng_seed, "design")
    }
}

/// Training vectors stored as their descending order statistics
/// (of the values for Variant I, of the magnitudes for Variant II).
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub n: usize,
    pub variant: Variant,
    pub seed: u64,
    rows: Vec<f64>,
}

impl TrainingSet {
    pub fn generate(n: usize, variant: Variant, count: usize, sigma: f64, seed: u64, label: &str) -> Self {
        let stream = GaussianStream::new(seed, label, n, count, sigma);
        let rows = stream
            .map_blocks(|_, block| {
                let mut block = block.to_vec();
                for row in block.chunks_exact_mut(n) {
                    sort_key_desc(row, variant);
                }
                block
            })
            .concat();
        Self { n, variant, seed, rows }
    }

    /// Wraps already sorted rows.
    pub fn from_sorted_rows(n: usize, variant: Variant, rows: Vec<f64>) -> Result<Self> {
        if n == 0 || rows.len() % n != 0 {
            return Err(Error::DimensionMismatch { expected: n, got: rows.len() % n.max(1) });
        }
        Ok(Self { n, variant, seed: 0, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Rows in fixed-size chunks, for deterministic parallel reductions.
    pub(crate) fn chunks(&self) -> rayon::slice::Chunks<'_, f64> {
        self.rows.par_chunks(BLOCK_VECTORS * self.n)
    }
}

/// Rewrites `row` as its descending order statistics (magnitudes for Variant II).
pub(crate) fn sort_key_desc(row: &mut [f64], variant: Variant) {
    if variant == Variant::II {
        row.iter_mut().for_each(|v| *v = v.abs());
    }
    row.sort_unstable_by(|a, b| b.total_cmp(a));
}

/// `Σ_i Σ_{ℓ∈I_i} (s_ℓ − μ_i)²` for a sorted row `s`.
pub(crate) fn sorted_distance(row: &[f64], parts: &[usize], levels: &[f64]) -> f64 {
    let mut d = 0.0;
    let mut pos = 0;
    for (&len, &mu) in parts.iter().zip(levels) {
        for &v in &row[pos..pos + len] {
            d += (v - mu) * (v - mu);
        }
        pos += len;
    }
    d
}

/// Group means of a sorted row.
pub(crate) fn group_means(row: &[f64], parts: &[usize]) -> Vec<f64> {
    let mut pos = 0;
    parts
        .iter()
        .map(|&len| {
            let m = row[pos..pos + len].iter().sum::<f64>() / len as f64;
            pos += len;
            m
        })
        .collect()
}

/// Summary of a Monte Carlo design run, serialized into the codebook's `design` block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub method: String,
    pub iterations: usize,
    pub converged: bool,
    /// Per-sample distortion measured at each assignment step.
    pub history: Vec<f64>,
    pub distortion: f64,
    pub stderr: f64,
    pub probs: Vec<f64>,
    pub empty_cell_events: usize,
    pub repaired: bool,
    pub seed: u64,
    pub samples: usize,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_decomposition_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Design {
    pub code: ConcentricCode,
    pub report: DesignReport,
}

impl Design {
    /// Codebook JSON with the report under `design`.
    pub fn to_json(&self) -> Result<String> {
        let mut doc = self.code.to_document();
        doc.design = Some(serde_json::to_value(&self.report)?);
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Sum of `values[ℓ]` over `group`, cancelling mirrored pairs `ℓ ↔ n−1−ℓ` exactly.
fn antisymmetric_group_sum(values: &[f64], group: std::ops::Range<usize>) -> f64 {
    let n = values.len();
    group
        .clone()
        .filter(|&l| {
            let mirror = n - 1 - l;
            !(group.contains(&mirror) || l == mirror)
        })
        .map(|l| values[l])
        .sum()
}

/// Optimal levels of a single permutation code: group means of the
/// expected order statistics.
pub fn optimal_levels_single(c: &Composition, table: &OrderStatTable, variant: Variant) -> Result<InitialCodeword> {
    if table.n != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n(), got: table.n });
    }
    let levels: Vec<f64> = c
        .index_groups()
        .into_iter()
        .map(|g| {
            let len = g.len() as f64;
            match variant {
                Variant::I => antisymmetric_group_sum(&table.mean_xi, g) / len,
                Variant::II => table.mean_eta[g].iter().sum::<f64>() / len,
            }
        })
        .collect();
    if let Some(i) = levels.windows(2).position(|w| w[0] <= w[1]) {
        return Err(Error::LevelOrder(format!(
            "levels {} and {} computed from the order-statistic table are {} and {}",
            i + 1,
            i + 2,
            levels[i],
            levels[i + 1]
        )));
    }
    InitialCodeword::new(c.clone(), levels, variant)
}

/// Exact per-sample distortion of a single permutation code.
pub fn pc_distortion_exact(cw: &InitialCodeword, table: &OrderStatTable) -> Result<f64> {
    if table.n != cw.n() {
        return Err(Error::DimensionMismatch { expected: cw.n(), got: table.n });
    }
    let (first, second) = match cw.variant() {
        Variant::I => (&table.mean_xi, &table.second_xi),
        Variant::II => (&table.mean_eta, &table.second_eta),
    };
    let mut total = 0.0;
    for (g, &mu) in cw.composition().index_groups().into_iter().zip(cw.levels()) {
        for l in g {
            total += second[l] - 2.0 * mu * first[l] + mu * mu;
        }
    }
    Ok(total / cw.n() as f64)
}

/// Per-sample distortion of level sets (one per sphere) on a training set,
/// with the nearest-sphere frequencies.
pub fn sorted_domain_distortion(
    training: &TrainingSet,
    parts: &[Vec<usize>],
    levels: &[Vec<f64>],
) -> (Moments, Vec<f64>) {
    let n = training.n as f64;
    let per_chunk: Vec<(Moments, Vec<u64>)> = training
        .chunks()
        .map(|chunk| {
            let mut m = Moments::default();
            let mut hits = vec![0u64; levels.len()];
            for row in chunk.chunks_exact(training.n) {
                let (j, d) = nearest_sorted(row, parts, levels);
                hits[j] += 1;
                m.push(d / n);
            }
            (m, hits)
        })
        .collect();
    let mut total = Moments::default();
    let mut hits = vec![0u64; levels.len()];
    for (m, h) in &per_chunk {
        total.merge(m);
        hits.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    let count = total.count.max(1) as f64;
    (total, hits.iter().map(|&h| h as f64 / count).collect())
}

/// First sphere attaining the minimum sorted-domain distance.
pub(crate) fn nearest_sorted(row: &[f64], parts: &[Vec<usize>], levels: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, (p, mu)) in parts.iter().zip(levels).enumerate() {
        let d = sorted_distance(row, p, mu);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}
