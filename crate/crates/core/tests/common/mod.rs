//! Shared test helpers: a brute-force encoder over the fully enumerated codebook.
#![allow(dead_code)]

use concentric_pc::codec::{ConcentricCode, InitialCodeword, Variant};
use concentric_pc::combinatorics::Composition;
use rand::Rng;

/// Next lexicographic permutation in place; false once the last one is reached.
pub fn next_permutation<T: PartialOrd>(v: &mut [T]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[i - 1] < v[j]).expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every codeword of one permutation code, in lexicographic symbol order and
/// then sign pattern order.
pub fn enumerate_codewords(cw: &InitialCodeword) -> Vec<Vec<f64>> {
    let parts = cw.composition().parts();
    let mut symbols: Vec<usize> = parts.iter().enumerate().flat_map(|(i, &p)| std::iter::repeat_n(i, p)).collect();
    let mut out = Vec::new();
    loop {
        let base: Vec<f64> = symbols.iter().map(|&s| cw.levels()[s]).collect();
        match cw.variant() {
            Variant::I => out.push(base),
            Variant::II => {
                let signed: Vec<usize> = (0..base.len()).filter(|&i| base[i] != 0.0).collect();
                for mask in 0u64..(1 << signed.len()) {
                    let mut c = base.clone();
                    for (b, &i) in signed.iter().enumerate() {
                        if mask >> b & 1 == 1 {
                            c[i] = -c[i];
                        }
                    }
                    out.push(c);
                }
            }
        }
        if !next_permutation(&mut symbols) {
            break;
        }
    }
    out
}

/// The union codebook as `(sphere, codeword)` pairs, spheres in order.
pub fn enumerate_union(code: &ConcentricCode) -> Vec<(usize, Vec<f64>)> {
    code.subcodes()
        .iter()
        .enumerate()
        .flat_map(|(j, cw)| enumerate_codewords(cw).into_iter().map(move |c| (j, c)))
        .collect()
}

/// First codeword attaining the strict minimum of position-order squared distance.
pub fn brute_force_nearest<'a>(x: &[f64], book: &'a [(usize, Vec<f64>)]) -> (usize, &'a [f64], f64) {
    let mut best = (0, book[0].1.as_slice(), f64::INFINITY);
    for (j, c) in book {
        let d: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.2 {
            best = (*j, c.as_slice(), d);
        }
    }
    best
}

/// Random strictly decreasing levels; nonnegative for Variant II, with the
/// last level forced to zero when `zero_last`.
pub fn random_levels<R: Rng>(k: usize, variant: Variant, zero_last: bool, rng: &mut R) -> Vec<f64> {
    loop {
        let mut mu: Vec<f64> = (0..k)
            .map(|_| match variant {
                Variant::I => rng.random_range(-2.5..2.5),
                Variant::II => rng.random_range(0.0..2.5),
            })
            .collect();
        mu.sort_by(|a, b| b.total_cmp(a));
        if zero_last && variant == Variant::II {
            mu[k - 1] = 0.0;
        }
        if mu.windows(2).all(|w| w[0] > w[1]) {
            return mu;
        }
    }
}

pub fn random_composition<R: Rng>(n: usize, rng: &mut R) -> Composition {
    let mut parts = Vec::new();
    let mut pos = 0;
    for i in 1..n {
        if rng.random_bool(0.5) {
            parts.push(i - pos);
            pos = i;
        }
    }
    parts.push(n - pos);
    Composition::new(parts).unwrap()
}

pub fn random_code<R: Rng>(n: usize, j: usize, variant: Variant, rng: &mut R) -> ConcentricCode {
    let subcodes = (0..j)
        .map(|_| {
            let c = random_composition(n, rng);
            let zero = variant == Variant::II && rng.random_bool(0.3);
            let mu = random_levels(c.k(), variant, zero, rng);
            InitialCodeword::new(c, mu, variant).unwrap()
        })
        .collect();
    ConcentricCode::new(subcodes).unwrap()
}
