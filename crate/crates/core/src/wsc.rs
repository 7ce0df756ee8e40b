//! High-resolution shape–gain rate allocation.
//!
//! A gain codebook on the chi density picks `J` radii; a wrapped spherical
//! shape code of size `M_j` sits on each. The closed forms below split a total
//! rate between gain and shape and size the per-radius shape codes; the
//! resulting targets are then matched by permutation-code compositions.

use serde::{Deserialize, Serialize};

use crate::codec::Variant;
use crate::design::{lloyd_general, Design, DesignConfig};
use crate::eval::{rate_fixed, rate_variable};
use crate::combinatorics::{log2_biguint, multinomial_size, partitions, Composition, CompositionFilter};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::{digamma, ln_gamma};

/// Normalized second moment of the scalar lattice.
pub const G_SCALAR: f64 = 1.0 / 12.0;
/// Normalized second moment of the Leech lattice.
pub const G_LEECH: f64 = 0.065771;

/// Built-in lattice constants by name.
pub fn lattice_constant(name: &str) -> Option<f64> {
    match name {
        "scalar" | "Z" => Some(G_SCALAR),
        "leech" | "L24" => Some(G_LEECH),
        _ => None,
    }
}

/// `ln` of the chi density of `‖X‖` for `X ~ N(0, σ² I_n)`.
fn chi_log_pdf(g: f64, n: usize, sigma: f64) -> f64 {
    let h = n as f64 / 2.0;
    let t = g / sigma;
    (n as f64 - 1.0) * t.ln() - 0.5 * t * t - (h - 1.0) * std::f64::consts::LN_2 - ln_gamma(h) - sigma.ln()
}

/// `E‖X‖ = √2 σ Γ((n+1)/2)/Γ(n/2)`.
pub fn chi_mean(n: usize, sigma: f64) -> f64 {
    let n = n as f64;
    std::f64::consts::SQRT_2 * sigma * (ln_gamma((n + 1.0) / 2.0) - ln_gamma(n / 2.0)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainCodebook {
    pub n: usize,
    pub sigma: f64,
    /// Ascending gains.
    pub gains: Vec<f64>,
    pub probs: Vec<f64>,
    /// Cell boundaries between consecutive gains.
    pub thresholds: Vec<f64>,
    /// `E[(‖X‖ − ĝ)²]`.
    pub mse: f64,
    pub iterations: usize,
}

impl GainCodebook {
    pub fn j(&self) -> usize {
        self.gains.len()
    }

    /// `Σ_j p_j log2 ĝ_j`.
    pub fn mean_log2_gain(&self) -> f64 {
        self.probs.iter().zip(&self.gains).map(|(p, g)| p * g.log2()).sum()
    }
}

const GAIN_TOL: f64 = 1e-14;
const GAIN_MAX_ITERS: usize = 100_000;

/// Scalar Lloyd–Max quantizer with `j` levels for the chi density.
pub fn gain_codebook(j: usize, n: usize, sigma: f64) -> Result<GainCodebook> {
    if j == 0 || n == 0 || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("gain codebook needs J ≥ 1, n ≥ 1, σ > 0 (J={j}, n={n})")));
    }
    let pdf = |g: f64| if g <= 0.0 { 0.0 } else { chi_log_pdf(g, n, sigma).exp() };
    let top = sigma * ((n as f64).sqrt() + 14.0);
    let cell = |a: f64, b: f64| -> Result<(f64, f64, f64)> {
        let m0 = integrate(pdf, a, b, GAIN_TOL)?.value;
        let m1 = integrate(|g| g * pdf(g), a, b, GAIN_TOL * sigma)?.value;
        let m2 = integrate(|g| g * g * pdf(g), a, b, GAIN_TOL * sigma * sigma)?.value;
        Ok((m0, m1, m2))
    };

    // Start from evenly spaced points across ±2 standard deviations of the gain.
    let mean = chi_mean(n, sigma);
    let sd = (n as f64 * sigma * sigma - mean * mean).max(0.0).sqrt();
    let mut gains: Vec<f64> = (0..j)
        .map(|k| {
            let u = if j == 1 { 0.0 } else { -2.0 + 4.0 * k as f64 / (j - 1) as f64 };
            (mean + u * sd).max(0.05 * mean)
        })
        .collect();
    gains.dedup();
    if gains.len() != j {
        return Err(Error::Infeasible("gain initialization collapsed".into()));
    }

    let mut iterations = 0;
    loop {
        let thresholds: Vec<f64> = gains.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let edges: Vec<f64> = std::iter::once(0.0).chain(thresholds.iter().copied()).chain([top]).collect();
        let cells = edges.windows(2).map(|e| cell(e[0], e[1])).collect::<Result<Vec<_>>>()?;
        let next: Vec<f64> = cells.iter().zip(&gains).map(|(c, &g)| if c.0 > 0.0 { c.1 / c.0 } else { g }).collect();
        let shift = next.iter().zip(&gains).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
        iterations += 1;
        if shift < 1e-13 || iterations >= GAIN_MAX_ITERS {
            if shift >= 1e-13 {
                return Err(Error::NonConvergence { what: "gain Lloyd-Max", residual: shift });
            }
            // Final cells for the converged gains.
            gains = next;
            let thresholds: Vec<f64> = gains.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            let edges: Vec<f64> = std::iter::once(0.0).chain(thresholds.iter().copied()).chain([top]).collect();
            let cells = edges.windows(2).map(|e| cell(e[0], e[1])).collect::<Result<Vec<_>>>()?;
            let total: f64 = cells.iter().map(|c| c.0).sum();
            let probs: Vec<f64> = cells.iter().map(|c| c.0 / total).collect();
            let mse = cells.iter().zip(&gains).map(|(c, g)| c.2 - 2.0 * g * c.1 + g * g * c.0).sum::<f64>() / total;
            return Ok(GainCodebook { n, sigma, gains, probs, thresholds, mse, iterations });
        }
        gains = next;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WscConstants {
    pub n: usize,
    pub g_lambda: f64,
    pub sigma: f64,
    /// Shape constant for one shared codebook size.
    pub c: f64,
    /// Shape decay constant with gain-dependent codebooks.
    pub c_s: f64,
    /// Gain decay constant.
    pub c_g: f64,
}

/// `ln C` where `C = ((n−1)/n)·G·(2π^{n/2}/Γ(n/2))^{2/(n−1)}`.
fn ln_shape_constant(n: f64, g_lambda: f64) -> f64 {
    let ln_area = std::f64::consts::LN_2 + 0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n);
    ((n - 1.0) / n).ln() + g_lambda.ln() + 2.0 / (n - 1.0) * ln_area
}

pub fn wsc_constants(n: usize, g_lambda: f64, sigma: f64) -> Result<WscConstants> {
    if n < 2 || !(g_lambda > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("need n ≥ 2, G > 0, σ > 0 (n={n}, G={g_lambda}, σ={sigma})")));
    }
    let nf = n as f64;
    let ln_c = ln_shape_constant(nf, g_lambda);
    let ln_cs = ln_c + std::f64::consts::LN_2 + 2.0 * sigma.ln() + digamma(0.5 * nf);
    let ln_cg = 2.0 * sigma.ln() + 0.5 * nf * 3f64.ln() + 3.0 * ln_gamma((nf + 2.0) / 6.0)
        - 8f64.ln()
        - nf.ln()
        - ln_gamma(0.5 * nf);
    Ok(WscConstants { n, g_lambda, sigma, c: ln_c.exp(), c_s: ln_cs.exp(), c_g: ln_cg.exp() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSplit {
    pub rate: f64,
    pub shape: f64,
    pub gain: f64,
}

/// Shape/gain split minimizing `C_s 2^{−2nR_s/(n−1)} + C_g 2^{−2nR_g}` with `R_s + R_g = R`.
///
/// The shape rate is rounded to a multiple of `ulp(R)`, which makes
/// `R − R_s` exact, so the two parts add back to `R` bit for bit.
pub fn optimal_rate_split(rate: f64, k: &WscConstants) -> Result<RateSplit> {
    let n = k.n as f64;
    let ln_ratio = (k.c_s / k.c_g / (n - 1.0)).log2();
    let shape = (n - 1.0) / n * (rate + ln_ratio / (2.0 * n));
    if !(shape > 0.0) || !(shape < rate) || !rate.is_finite() {
        return Err(Error::RateTooLow(format!("R = {rate} gives R_s = {shape}, R_g = {}", rate - shape)));
    }
    let ulp = f64::from_bits(rate.to_bits() + 1) - rate;
    let shape = (shape / ulp).round() * ulp;
    let gain = rate - shape;
    debug_assert_eq!(shape + gain, rate);
    Ok(RateSplit { rate, shape, gain })
}

/// Combined high-resolution distortion `D_s + D_g` for a given split.
pub fn split_distortion(split: &RateSplit, k: &WscConstants) -> f64 {
    let n = k.n as f64;
    k.c_s * (-2.0 * n / (n - 1.0) * split.shape).exp2() + k.c_g * (-2.0 * n * split.gain).exp2()
}

/// `n/(n−1)^{1−1/n} · C_g^{1/n} C_s^{1−1/n}`, the limit of `D·2^{2R}` at the optimal split.
pub fn combined_decay_constant(k: &WscConstants) -> f64 {
    let n = k.n as f64;
    n / (n - 1.0).powf(1.0 - 1.0 / n) * k.c_g.powf(1.0 / n) * k.c_s.powf(1.0 - 1.0 / n)
}

/// Real-valued `log2 M_j` targets for the variable-rate allocation:
/// `(n−1) log2 ĝ_j + n R_s − (n−1) Σ_k p_k log2 ĝ_k`.
pub fn sizes_variable_rate(split: &RateSplit, gc: &GainCodebook, n: usize) -> Vec<f64> {
    let n = n as f64;
    let mean_log = gc.mean_log2_gain();
    gc.gains.iter().map(|g| (n - 1.0) * g.log2() + n * split.shape - (n - 1.0) * mean_log).collect()
}

/// Real-valued `log2 M_j` targets for the fixed-rate allocation:
/// `M_j ∝ (p_j ĝ_j²)^{(n−1)/(n+1)}` with `Σ M_j = 2^{nR}`.
pub fn sizes_fixed_rate(rate: f64, gc: &GainCodebook, n: usize) -> Vec<f64> {
    let n = n as f64;
    let a = (n - 1.0) / (n + 1.0);
    let logw: Vec<f64> = gc.probs.iter().zip(&gc.gains).map(|(p, g)| a * (p * g * g).log2()).collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = top + logw.iter().map(|w| (w - top).exp2()).sum::<f64>().log2();
    logw.iter().map(|w| n * rate + w - log_total).collect()
}

/// `C·Σ p_j ĝ_j² M_j^{−2/(n−1)}` for `log2 M_j` sizes.
pub fn shape_distortion_highres(gc: &GainCodebook, log2_sizes: &[f64], k: &WscConstants) -> f64 {
    let n = k.n as f64;
    k.c * gc
        .probs
        .iter()
        .zip(&gc.gains)
        .zip(log2_sizes)
        .map(|((p, g), lm)| p * g * g * (-2.0 * lm / (n - 1.0)).exp2())
        .sum::<f64>()
}

/// High-resolution per-sample distortion of a fixed-rate shape–gain code with
/// `J` radii: the shape term under the fixed-rate sizes plus the gain
/// quantizer's error per dimension.
pub fn fixed_rate_highres_distortion(rate: f64, gc: &GainCodebook, k: &WscConstants) -> f64 {
    let sizes = sizes_fixed_rate(rate, gc, k.n);
    shape_distortion_highres(gc, &sizes, k) + gc.mse / k.n as f64
}

/// SNR gain in dB of gain-dependent shape codebooks over a single shape codebook:
/// `−10(1 − 1/n) log10(2e^{ψ(n/2)}/n)`.
pub fn snr_improvement_db(n: usize) -> f64 {
    let n = n as f64;
    let ratio_ln = std::f64::consts::LN_2 + digamma(0.5 * n) - n.ln();
    -10.0 * (1.0 - 1.0 / n) * ratio_ln / std::f64::consts::LN_10
}

/// `log2` of the size of the smallest-ordered arrangement of `parts`,
/// including the sign factor `2^n` for Variant II.
fn arrangement_log2(parts: &[usize], variant: Variant) -> Result<(Composition, f64)> {
    let c = Composition::new(parts.to_vec())?;
    let bits = log2_biguint(multinomial_size(&c).value());
    Ok(match variant {
        Variant::I => (c, bits),
        Variant::II => {
            let n = c.n() as f64;
            (c, bits + n)
        }
    })
}

/// For each `log2` target, the composition whose exact size is closest in
/// `log2`; ties go to fewer parts, then to the lexicographically smallest parts.
///
/// Compositions sharing a multiset of parts have equal size, so only the
/// filter's smallest arrangement of each partition is considered.
pub fn allocate_compositions(
    n: usize,
    log2_targets: &[f64],
    variant: Variant,
    filter: CompositionFilter,
) -> Result<Vec<Composition>> {
    if n == 0 || n > 64 {
        return Err(Error::ResourceGuard { bound: format!("n = {n}"), limit: "1 ≤ n ≤ 64".into() });
    }
    let candidates = partitions(n)
        .into_iter()
        .map(|p| arrangement_log2(&filter.smallest_arrangement(&p), variant))
        .collect::<Result<Vec<_>>>()?;
    log2_targets
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!("target log2 size {t} is below 0")));
            }
            candidates
                .iter()
                .min_by(|(ca, la), (cb, lb)| {
                    (la - t)
                        .abs()
                        .total_cmp(&(lb - t).abs())
                        .then(ca.k().cmp(&cb.k()))
                        .then(ca.parts().cmp(cb.parts()))
                })
                .map(|(c, _)| c.clone())
                .ok_or_else(|| Error::Infeasible("no candidate compositions".into()))
        })
        .collect()
}

/// Default composition filter for a variant: monotone parts for Variant II,
/// unimodal parts for Variant I.
pub fn default_filter(variant: Variant) -> CompositionFilter {
    match variant {
        Variant::I => CompositionFilter::Variant1Unimodal,
        Variant::II => CompositionFilter::Variant2Monotone,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    Variable,
    Fixed,
}

/// Achieved rate further than this from the target is flagged.
pub const RATE_DEVIATION_FLAG: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WscInputs {
    pub mode: RateMode,
    pub n: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub rate: f64,
    pub variant: Variant,
    pub g_lambda: f64,
    pub sigma: f64,
    pub filter: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WscReport {
    pub inputs: WscInputs,
    pub gains: Vec<f64>,
    pub probs: Vec<f64>,
    /// Real-valued `log2 M_j` targets.
    pub m_targets_log2: Vec<f64>,
    pub chosen_compositions: Vec<Vec<usize>>,
    pub achieved_rate: f64,
    pub empirical_d: f64,
    pub stderr: f64,
    pub seed: u64,
    pub rate_deviation_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<RateSplit>,
}

/// Rate allocation followed by the full Lloyd design, in either rate mode.
pub fn design_with_allocation(
    mode: RateMode,
    n: usize,
    rate: f64,
    cfg: &DesignConfig,
    g_lambda: f64,
    filter: CompositionFilter,
) -> Result<(Design, WscReport)> {
    cfg.validate()?;
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument(format!("rate {rate} must be positive")));
    }
    let gc = gain_codebook(cfg.j, n, cfg.sigma)?;
    let (targets, split) = match mode {
        RateMode::Variable => {
            let consts = wsc_constants(n, g_lambda, cfg.sigma)?;
            let split = optimal_rate_split(rate, &consts)?;
            (sizes_variable_rate(&split, &gc, n), Some(split))
        }
        RateMode::Fixed => (sizes_fixed_rate(rate, &gc, n), None),
    };
    let clipped: Vec<f64> = targets.iter().map(|t| t.max(0.0)).collect();
    let compositions = allocate_compositions(n, &clipped, cfg.variant, filter)?;
    let design = lloyd_general(&compositions, cfg)?;
    let achieved_rate = match mode {
        RateMode::Variable => rate_variable(&design.code, &design.report.probs)?,
        RateMode::Fixed => rate_fixed(&design.code),
    };
    let report = WscReport {
        inputs: WscInputs {
            mode,
            n,
            j: cfg.j,
            rate,
            variant: cfg.variant,
            g_lambda,
            sigma: cfg.sigma,
            filter: format!("{filter:?}"),
        },
        gains: gc.gains,
        probs: gc.probs,
        m_targets_log2: targets,
        chosen_compositions: compositions.iter().map(|c| c.parts().to_vec()).collect(),
        achieved_rate,
        empirical_d: design.report.distortion,
        stderr: design.report.stderr,
        seed: cfg.rng_seed,
        rate_deviation_flag: (achieved_rate - rate).abs() > RATE_DEVIATION_FLAG,
        split,
    };
    Ok((design, report))
}

/// Variable-rate design: optimal split, gain-dependent sizes, compositions, Lloyd.
pub fn design_variable_rate(
    n: usize,
    rate: f64,
    cfg: &DesignConfig,
    g_lambda: f64,
    filter: CompositionFilter,
) -> Result<(Design, WscReport)> {
    design_with_allocation(RateMode::Variable, n, rate, cfg, g_lambda, filter)
}

/// Fixed-rate design: sizes summing to `2^{nR}`, compositions, Lloyd.
pub fn design_fixed_rate(
    n: usize,
    rate: f64,
    cfg: &DesignConfig,
    filter: CompositionFilter,
) -> Result<(Design, WscReport)> {
    design_with_allocation(RateMode::Fixed, n, rate, cfg, G_SCALAR, filter)
}
