//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; the process fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use concentric_pc::cli::run_from;
use concentric_pc::codec::{nearest, rank_codeword, unrank_codeword, ConcentricCode, InitialCodeword, Variant};
use concentric_pc::combinatorics::{
    enumerate_compositions, multinomial_size, rate_point_census, Composition, CompositionFilter, DEFAULT_CENSUS_LIMIT,
};
use concentric_pc::design::{
    design_common_composition, design_common_composition_on, lloyd_general_from, omega_gap_ratio,
    optimal_levels_single, pc_distortion_exact, sample_omega_levels, swap_improvement_test, swap_levels,
    zeta_tail_means, DesignConfig,
};
use concentric_pc::eval::{empirical_distortion, pareto_filter, rate_variable, RdPoint};
use concentric_pc::order_stats::{folded_order_stats, gaussian_order_stats, DEFAULT_TOL};
use concentric_pc::rng::{substream, GaussianStream};
use concentric_pc::wsc::{
    combined_decay_constant, gain_codebook, optimal_rate_split, sizes_fixed_rate, sizes_variable_rate,
    snr_improvement_db, split_distortion, wsc_constants, G_LEECH, G_SCALAR,
};
use num_bigint::BigUint;
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const TABLE_ONE: [[usize; 4]; 8] = [
    [2, 3, 4, 5],
    [3, 6, 10, 15],
    [5, 15, 33, 56],
    [7, 27, 68, 132],
    [11, 60, 207, 517],
    [14, 97, 415, 1202],
    [20, 186, 1038, 3888],
    [27, 335, 2440, 11911],
];

fn census_table() -> Outcome {
    for (row, n) in TABLE_ONE.iter().zip(2..) {
        for (&want, j) in row.iter().zip(1..) {
            let got = rate_point_census(n, j, DEFAULT_CENSUS_LIMIT).map_err(|e| e.to_string())?.count();
            ensure!(got == want, "n={n}, J={j}: got {got}, want {want}");
        }
    }
    Ok("32/32 entries exact".into())
}

fn encoder_optimality() -> Outcome {
    let mut rng = substream(2024, "acceptance-encoder", 0);
    let mut checked = 0;
    for variant in [Variant::I, Variant::II] {
        for n in 4..=6 {
            for j in 1..=3 {
                let code = common::random_code(n, j, variant, &mut rng);
                let book = common::enumerate_union(&code);
                let xs = GaussianStream::new(7, format!("enc-{variant}-{n}-{j}"), n, 10_000, 1.0).collect();
                for x in xs.chunks_exact(n) {
                    let (sphere, codeword, d) = nearest(x, &code).map_err(|e| e.to_string())?;
                    let (bj, bc, bd) = common::brute_force_nearest(x, &book);
                    ensure!(
                        sphere == bj && codeword == bc && d == bd,
                        "variant {variant}, n={n}, J={j}, x={x:?}: encoder ({sphere}, {d}) vs brute force ({bj}, {bd})"
                    );
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} vectors, 0 mismatches"))
}

fn exact_vs_empirical() -> Outcome {
    let mut rng = substream(2024, "acceptance-exact", 0);
    let mut worst: f64 = 0.0;
    for t in 0..20 {
        let n = rng.random_range(2..=10);
        let c = common::random_composition(n, &mut rng);
        let variant = if rng.random_bool(0.5) { Variant::I } else { Variant::II };
        let table = gaussian_order_stats(n, 1.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let cw = optimal_levels_single(&c, &table, variant).map_err(|e| e.to_string())?;
        let exact = pc_distortion_exact(&cw, &table).map_err(|e| e.to_string())?;
        let emp = empirical_distortion(&ConcentricCode::single(cw), 500_000, 100 + t, 1.0).map_err(|e| e.to_string())?;
        let z = (emp.distortion - exact).abs() / emp.stderr;
        worst = worst.max(z);
        ensure!(z <= 3.0, "n={n}, {c}, variant {variant}: exact {exact}, empirical {} ± {}", emp.distortion, emp.stderr);
    }
    Ok(format!("20 designs, largest deviation {worst:.2} stderr"))
}

fn reduced_lloyd_equivalence() -> Outcome {
    let mut rng = substream(2024, "acceptance-reduced", 0);
    let cfg = DesignConfig { j: 3, variant: Variant::I, sample_count: 200_000, rng_seed: 31, ..Default::default() };
    let training = cfg.training_set(7);
    let mut notes = Vec::new();
    let mut seen = Vec::new();
    while seen.len() < 3 {
        let c = common::random_composition(7, &mut rng);
        if c.k() < 2 || c.k() == 7 || seen.contains(&c) {
            continue;
        }
        seen.push(c.clone());
        let reduced = design_common_composition_on(&training, &c, &cfg).map_err(|e| e.to_string())?;
        let residual = reduced.report.max_decomposition_residual.ok_or("no decomposition residual reported")?;
        ensure!(residual < 1e-9, "{c}: decomposition residual {residual:e}");
        let full = lloyd_general_from(&training, &vec![c.clone(); 3], &cfg, None).map_err(|e| e.to_string())?;
        let (a, b) = (&reduced.report, &full.report);
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        ensure!((a.distortion - b.distortion).abs() <= 3.0 * se, "{c}: reduced {} vs full {} (se {se})", a.distortion, b.distortion);
        notes.push(format!("{c}: {:.5} vs {:.5}", a.distortion, b.distortion));
    }
    Ok(notes.join("; "))
}

/// Matched-rate comparison of `J = 3` common-composition codes with single
/// permutation codes at `n = 7`, both entropy coded.
fn matched_rate_improvement() -> Outcome {
    let n = 7;
    let table = gaussian_order_stats(n, 1.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let mut best_pc: BTreeMap<BigUint, f64> = BTreeMap::new();
    for c in enumerate_compositions(n, CompositionFilter::None) {
        let cw = optimal_levels_single(&c, &table, Variant::I).map_err(|e| e.to_string())?;
        let d = pc_distortion_exact(&cw, &table).map_err(|e| e.to_string())?;
        let m = multinomial_size(&c).into_inner();
        let entry = best_pc.entry(m).or_insert(f64::INFINITY);
        *entry = entry.min(d);
    }
    let pc: Vec<(f64, f64)> = best_pc.iter().map(|(m, &d)| (concentric_pc::combinatorics::log2_biguint(m) / n as f64, d)).collect();

    let cfg = DesignConfig { j: 3, variant: Variant::I, sample_count: 200_000, rng_seed: 5, ..Default::default() };
    let mut designed = Vec::new();
    for c in enumerate_compositions(n, CompositionFilter::None) {
        if c.k() == 1 {
            continue;
        }
        let design = design_common_composition(&c, &cfg).map_err(|e| e.to_string())?;
        let emp = empirical_distortion(&design.code, 500_000, 77, 1.0).map_err(|e| e.to_string())?;
        let rate = rate_variable(&design.code, &emp.probs).map_err(|e| e.to_string())?;
        designed.push(RdPoint {
            method: c.to_string(),
            n,
            j: 3,
            rate_bits: rate,
            distortion: emp.distortion,
            stderr: emp.stderr,
            seed: 77,
            samples: emp.samples,
        });
    }
    let (mut pairs, mut within, mut lower) = (0, 0, 0);
    let mut notes = Vec::new();
    for p in pareto_filter(&designed) {
        for &(r, d) in &pc {
            if (r - p.rate_bits).abs() < 0.02 {
                pairs += 1;
                within += usize::from(p.distortion <= d + 3.0 * p.stderr);
                lower += usize::from(p.distortion < d);
                notes.push(format!("{} R={:.3}/{r:.3}: {:.4} vs {d:.4}", p.method, p.rate_bits, p.distortion));
            }
        }
    }
    let detail = format!("{pairs} matched pairs, {within} within 3 stderr, {lower} strictly lower [{}]", notes.join("; "));
    ensure!(within >= 5 && lower >= 3, "{detail}");
    Ok(detail)
}

fn rate_allocation_identities() -> Outcome {
    for (n, g) in [(7, G_SCALAR), (25, G_LEECH), (12, G_SCALAR)] {
        let k = wsc_constants(n, g, 1.0).map_err(|e| e.to_string())?;
        for rate in [1.0, 2.0, 3.5] {
            let s = optimal_rate_split(rate, &k).map_err(|e| e.to_string())?;
            ensure!(s.shape + s.gain == rate, "n={n}, R={rate}: split {} + {} ≠ R", s.shape, s.gain);
            let expected = combined_decay_constant(&k);
            let closed_form = n as f64 / ((n - 1) as f64).powf(1.0 - 1.0 / n as f64)
                * k.c_g.powf(1.0 / n as f64)
                * k.c_s.powf(1.0 - 1.0 / n as f64);
            ensure!((expected / closed_form - 1.0).abs() < 1e-9, "n={n}: decay constant {expected} vs {closed_form}");
            let at_split = split_distortion(&s, &k) * (2.0 * rate).exp2();
            ensure!((at_split / closed_form - 1.0).abs() < 1e-9, "n={n}, R={rate}: split distortion {at_split} vs {closed_form}");
            for j in [2, 4] {
                let gc = gain_codebook(j, n, 1.0).map_err(|e| e.to_string())?;
                let var = sizes_variable_rate(&s, &gc, n);
                let avg: f64 = gc.probs.iter().zip(&var).map(|(p, m)| p * m).sum();
                ensure!((avg / (n as f64 * s.shape) - 1.0).abs() < 1e-9, "variable-rate sizes average {avg}");
                let fixed = sizes_fixed_rate(rate, &gc, n);
                let total: f64 = fixed.iter().map(|m| (m - n as f64 * rate).exp2()).sum();
                ensure!((total - 1.0).abs() < 1e-9, "fixed-rate sizes sum to 2^(nR)·{total}");
            }
        }
    }
    Ok("split, size constraints and combined constant hold".into())
}

fn snr_improvement() -> Outcome {
    let at5 = snr_improvement_db(5);
    ensure!(at5 > 0.0 && at5 < 0.8, "Δ(5) = {at5}");
    ensure!((at5 - 0.7405).abs() < 1e-3, "Δ(5) = {at5}, expected 0.7405");
    for n in 5..50 {
        let (a, b) = (snr_improvement_db(n), snr_improvement_db(n + 1));
        ensure!(b > 0.0 && b < a, "not decreasing at n={n}: {a} → {b}");
    }
    Ok(format!("Δ(5) = {at5:.6} dB, positive and decreasing to n = 50"))
}

fn swap_property() -> Outcome {
    let c = Composition::new(vec![3, 2]).map_err(|e| e.to_string())?;
    let table = folded_order_stats(5, 1.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let mut rng = substream(2024, "acceptance-swap", 0);
    let mut worst = f64::INFINITY;
    for t in 0..10 {
        let cfg = DesignConfig { j: 2, variant: Variant::II, sample_count: 1_000_000, rng_seed: 500 + t, ..Default::default() };
        let training = cfg.training_set(5);
        let (plus, minus) = zeta_tail_means(&training, &c, 0).map_err(|e| e.to_string())?;
        let levels = sample_omega_levels(2, 2, 0, minus / plus, 2.5, &mut rng).map_err(|e| e.to_string())?;
        let (swapped, after) = swap_levels(&c, 0, &levels).map_err(|e| e.to_string())?;
        ensure!(swapped.parts() == [2, 3], "swapped composition {swapped}");
        for (a, b) in levels.iter().zip(&after) {
            let gap = ((a[0] - a[1]) - (b[0] - b[1])).abs();
            let e0 = 3.0 * a[0] * a[0] + 2.0 * a[1] * a[1];
            let e1 = 2.0 * b[0] * b[0] + 3.0 * b[1] * b[1];
            ensure!(gap <= 1e-12 * a[0].abs().max(1.0), "gap changed by {gap}");
            ensure!((e0 - e1).abs() <= 1e-12 * e0.max(1.0), "energy {e0} → {e1}");
        }
        ensure!(omega_gap_ratio(&levels, 0) >= minus / plus, "levels outside the constraint set");
        let report = swap_improvement_test(&c, 0, &levels, &cfg, &table, &training).map_err(|e| e.to_string())?;
        let slack = report.d_before + 3.0 * report.stderr_diff - report.d_after;
        ensure!(slack >= 0.0, "trial {t}: before {} after {} (se {})", report.d_before, report.d_after, report.stderr_diff);
        worst = worst.min(report.improvement / report.stderr_diff.max(f64::MIN_POSITIVE));
    }
    Ok(format!("10 trials, smallest improvement {worst:.1} stderr"))
}

fn rank_bijection() -> Outcome {
    let mut total = 0usize;
    for n in 1..=6 {
        for c in enumerate_compositions(n, CompositionFilter::None) {
            let k = c.k();
            let mut level_sets = vec![(Variant::I, (0..k).map(|i| 1.0 - i as f64).collect::<Vec<_>>())];
            level_sets.push((Variant::II, (0..k).map(|i| (k - i) as f64).collect()));
            level_sets.push((Variant::II, (0..k).map(|i| (k - 1 - i) as f64).collect()));
            for (variant, mu) in level_sets {
                let cw = InitialCodeword::new(c.clone(), mu, variant).map_err(|e| e.to_string())?;
                let size: u64 = cw.size().value().try_into().map_err(|_| "size overflow".to_string())?;
                let mut seen = std::collections::HashSet::new();
                for r in 0..size {
                    let rank = BigUint::from(r);
                    let word = unrank_codeword(&rank, &cw).map_err(|e| e.to_string())?;
                    let back = rank_codeword(&word, &cw).map_err(|e| e.to_string())?;
                    ensure!(back == rank, "{c} variant {variant}: rank {r} → {word:?} → {back}");
                    ensure!(seen.insert(word.iter().map(|v| v.to_bits()).collect::<Vec<_>>()), "{c}: duplicate codeword at {r}");
                    total += 1;
                }
                ensure!(unrank_codeword(&BigUint::from(size), &cw).is_err(), "{c}: rank {size} accepted");
            }
        }
    }
    Ok(format!("{total} codewords roundtrip"))
}

fn eval_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let design = [
        "cpc", "design", "--n", "6", "--J", "2", "--variant", "2", "--composition", "3,2,1", "--samples", "50000",
        "--seed", "3", "--out",
    ];
    let code = p("code.json");
    ensure!(run_from(design.iter().copied().chain([code.as_str()])) == 0, "design failed");
    let pc = p("pc.json");
    ensure!(
        run_from(["cpc", "design", "--n", "6", "--composition", "2,2,2", "--out", pc.as_str()]) == 0,
        "single design failed"
    );
    let mut outputs = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out = p(&format!("rd-{tag}.csv"));
        let args = [
            "cpc", "--threads", threads, "eval", "--codebook", code.as_str(), "--codebook", pc.as_str(), "--samples",
            "200000", "--seed", "11", "--baselines", "ecsq,ecusq,bound", "--out", out.as_str(),
        ];
        ensure!(run_from(args) == 0, "eval failed with {threads} threads");
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure!(outputs[0] == outputs[1], "two runs at 1 thread differ");
    ensure!(outputs[0] == outputs[2], "1 and 8 threads differ");
    Ok(format!("{} identical bytes across runs and thread counts", outputs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 rate-point census", census_table),
        ("2 encoder optimality", encoder_optimality),
        ("3 exact vs empirical distortion", exact_vs_empirical),
        ("4 reduced-dimension Lloyd", reduced_lloyd_equivalence),
        ("5 matched-rate improvement at n=7", matched_rate_improvement),
        ("6 rate-allocation identities", rate_allocation_identities),
        ("7 SNR improvement", snr_improvement),
        ("8 composition swap", swap_property),
        ("9 rank/unrank bijection", rank_bijection),
        ("10 eval determinism", eval_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  ({secs:.1}s)  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}  ({secs:.1}s)  {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
