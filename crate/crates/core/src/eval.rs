//! Monte Carlo distortion, code rates, scalar baselines and RD curves.

use std::io::{Read, Write};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::codec::ConcentricCode;
use crate::combinatorics::log2_biguint;
use crate::design::{nearest_sorted, sort_key_desc};
use crate::error::{Error, Result};
use crate::rng::{GaussianStream, Moments};
use crate::special::{normal_cdf, normal_pdf, normal_sf};

/// Rates closer than this are treated as equal by [`pareto_filter`].
pub const RATE_BIN: f64 = 1e-3;

/// Smallest sample count accepted by [`empirical_distortion`].
pub const MIN_EVAL_SAMPLES: usize = 1_000;

/// One operating point, as written to RD CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub method: String,
    pub n: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub rate_bits: f64,
    pub distortion: f64,
    pub stderr: f64,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistortion {
    pub distortion: f64,
    pub stderr: f64,
    /// Fraction of vectors encoded on each sphere.
    pub probs: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Some sphere was hit fewer than 10 times, so its probability estimate is poor.
    pub sparse_sphere: bool,
}

/// Mean per-sample squared error of nearest-codeword encoding over
/// `samples` Gaussian vectors drawn from `seed`.
pub fn empirical_distortion(code: &ConcentricCode, samples: usize, seed: u64, sigma: f64) -> Result<EmpiricalDistortion> {
    if samples < MIN_EVAL_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_EVAL_SAMPLES} samples, got {samples}")));
    }
    let n = code.n();
    let variant = code.variant();
    let parts: Vec<Vec<usize>> = code.subcodes().iter().map(|s| s.composition().parts().to_vec()).collect();
    let levels: Vec<Vec<f64>> = code.subcodes().iter().map(|s| s.levels().to_vec()).collect();
    let stream = GaussianStream::new(seed, "eval", n, samples, sigma);
    let blocks = stream.map_blocks(|_, block| {
        let mut m = Moments::default();
        let mut hits = vec![0u64; levels.len()];
        let mut row = vec![0.0; n];
        for x in block.chunks_exact(n) {
            row.copy_from_slice(x);
            sort_key_desc(&mut row, variant);
            let (j, d) = nearest_sorted(&row, &parts, &levels);
            hits[j] += 1;
            m.push(d / n as f64);
        }
        (m, hits)
    });
    let mut total = Moments::default();
    let mut hits = vec![0u64; levels.len()];
    for (m, h) in &blocks {
        total.merge(m);
        hits.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    Ok(EmpiricalDistortion {
        distortion: total.mean,
        stderr: total.stderr(),
        probs: hits.iter().map(|&h| h as f64 / samples as f64).collect(),
        samples,
        seed,
        sparse_sphere: hits.iter().any(|&h| h < 10),
    })
}

/// Entropy-coded rate `n⁻¹[H(p) + Σ_j p_j log2 M_j]` in bits per sample.
pub fn rate_variable(code: &ConcentricCode, probs: &[f64]) -> Result<f64> {
    if probs.len() != code.j() {
        return Err(Error::DimensionMismatch { expected: code.j(), got: probs.len() });
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probabilities must be nonnegative and sum to 1 (sum {sum})")));
    }
    let entropy: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    let index_bits: f64 = probs.iter().zip(code.sizes()).map(|(p, m)| p * m.log2()).sum();
    Ok((entropy + index_bits) / code.n() as f64)
}

/// Fixed rate `n⁻¹ log2 Σ_j M_j`, with the sum taken exactly.
pub fn rate_fixed(code: &ConcentricCode) -> f64 {
    let total: BigUint = code.sizes().into_iter().map(|m| m.into_inner()).sum();
    log2_biguint(&total) / code.n() as f64
}

/// Cell probabilities and per-cell moments of a midtread uniform quantizer
/// with step `Δ` on `N(0, σ²)`: cells `[(k−½)Δ, (k+½)Δ)`.
struct Cell {
    p: f64,
    m1: f64,
    m2: f64,
    center: f64,
}

fn gaussian_cell(a: f64, b: f64) -> (f64, f64, f64) {
    let p = if a >= 0.0 { normal_sf(a) - normal_sf(b) } else { normal_cdf(b) - normal_cdf(a) };
    let (fa, fb) = (normal_pdf(a), normal_pdf(b));
    let afa = if a.is_finite() { a * fa } else { 0.0 };
    let bfb = if b.is_finite() { b * fb } else { 0.0 };
    (p, fa - fb, p + afa - bfb)
}

fn midtread_cells(step: f64, sigma: f64) -> Result<Vec<Cell>> {
    if !(step > 0.0) || !(sigma > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("step {step} and σ {sigma} must be positive")));
    }
    let h = step / sigma;
    let mut cells = Vec::new();
    let mut k: i64 = 0;
    loop {
        let a = (k as f64 - 0.5) * h;
        let b = (k as f64 + 0.5) * h;
        // The last cell on each side absorbs its tail.
        let last = b >= 40.0;
        let (p, m1, m2) = gaussian_cell(a, if last { f64::INFINITY } else { b });
        for sign in if k == 0 { vec![1.0] } else { vec![1.0, -1.0] } {
            cells.push(Cell { p, m1: sign * m1, m2, center: sign * k as f64 * h });
        }
        if last {
            break;
        }
        k += 1;
    }
    Ok(cells)
}

fn scalar_point(step: f64, sigma: f64, optimal_codewords: bool) -> Result<RdPoint> {
    let cells = midtread_cells(step, sigma)?;
    let mut rate = 0.0;
    let mut d = 0.0;
    for c in &cells {
        if c.p <= 0.0 {
            continue;
        }
        rate -= c.p * c.p.log2();
        let y = if optimal_codewords { c.m1 / c.p } else { c.center };
        d += c.m2 - 2.0 * y * c.m1 + y * y * c.p;
    }
    Ok(RdPoint {
        method: if optimal_codewords { "ecsq" } else { "ecusq" }.into(),
        n: 1,
        j: 1,
        rate_bits: rate.max(0.0),
        distortion: d.max(0.0) * sigma * sigma,
        stderr: 0.0,
        seed: 0,
        samples: 0,
    })
}

/// Uniform thresholds with cell-center codewords.
pub fn ecusq_curve(steps: &[f64], sigma: f64) -> Result<Vec<RdPoint>> {
    steps.iter().map(|&s| scalar_point(s, sigma, false)).collect()
}

/// Uniform thresholds with conditional-mean codewords.
pub fn ecsq_curve(steps: &[f64], sigma: f64) -> Result<Vec<RdPoint>> {
    steps.iter().map(|&s| scalar_point(s, sigma, true)).collect()
}

/// Geometric grid of `count` step sizes from `lo` to `hi`.
pub fn step_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
}

/// Step grid used for scalar baselines unless the caller supplies one: 0.02σ to 8σ.
pub fn default_step_grid(sigma: f64) -> Vec<f64> {
    step_grid(0.02 * sigma, 8.0 * sigma, 80)
}

/// `D(R) = σ² 2^{−2R}`.
pub fn shannon_bound(rates: &[f64], sigma: f64) -> Result<Vec<RdPoint>> {
    rates
        .iter()
        .map(|&r| {
            if !(r >= 0.0) {
                return Err(Error::InvalidArgument(format!("rate {r} is negative")));
            }
            Ok(RdPoint {
                method: "bound".into(),
                n: 1,
                j: 1,
                rate_bits: r,
                distortion: sigma * sigma * (-2.0 * r).exp2(),
                stderr: 0.0,
                seed: 0,
                samples: 0,
            })
        })
        .collect()
}

fn total_order(a: &RdPoint, b: &RdPoint) -> std::cmp::Ordering {
    a.rate_bits
        .total_cmp(&b.rate_bits)
        .then(a.distortion.total_cmp(&b.distortion))
        .then_with(|| a.method.cmp(&b.method))
        .then(a.n.cmp(&b.n))
        .then(a.j.cmp(&b.j))
        .then(a.stderr.total_cmp(&b.stderr))
        .then(a.seed.cmp(&b.seed))
        .then(a.samples.cmp(&b.samples))
}

/// Lower envelope: within each run of rates spanning less than [`RATE_BIN`]
/// keep the lowest distortion, then drop points beaten at a lower rate.
/// The result has strictly decreasing distortion and does not depend on input order.
pub fn pareto_filter(points: &[RdPoint]) -> Vec<RdPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(total_order);
    let mut binned: Vec<RdPoint> = Vec::new();
    let mut bin_start = f64::NEG_INFINITY;
    for p in sorted {
        if p.rate_bits - bin_start < RATE_BIN {
            let best = binned.last_mut().expect("bin has a representative");
            if p.distortion < best.distortion {
                *best = p;
            }
        } else {
            bin_start = p.rate_bits;
            binned.push(p);
        }
    }
    let mut out: Vec<RdPoint> = Vec::new();
    for p in binned {
        if out.last().is_none_or(|q| p.distortion < q.distortion) {
            out.push(p);
        }
    }
    out
}

pub fn write_rd_csv<W: Write>(out: W, points: &[RdPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if points.is_empty() {
        w.write_record(["method", "n", "J", "rate_bits", "distortion", "stderr", "seed", "samples"])?;
    }
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rd_csv<R: Read>(input: R) -> Result<Vec<RdPoint>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<RdPoint>, _>>()?)
}
