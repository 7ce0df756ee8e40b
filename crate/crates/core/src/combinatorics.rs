//! Compositions, codebook sizes and the census of achievable fixed rates.
//!
//! All codebook sizes are exact big integers; rates are taken as `log2` of
//! those integers only at the very end.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of multisets the census is allowed to visit.
pub const DEFAULT_CENSUS_LIMIT: u64 = 50_000_000;

/// Ordered list of positive parts `(n_1, ..., n_K)` summing to the dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Composition {
    parts: Vec<usize>,
    n: usize,
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidComposition("no parts".into()));
        }
        if let Some(pos) = parts.iter().position(|&p| p == 0) {
            return Err(Error::InvalidComposition(format!("part {} is zero", pos + 1)));
        }
        let n = parts.iter().sum();
        Ok(Self { parts, n })
    }

    /// The one-level composition `(n)`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// `(1, 1, ..., 1)`: every level distinct.
    pub fn all_ones(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Dimension `n = Σ n_i`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of levels `K`.
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    /// Zero-based index ranges of the level groups, consecutive and covering `0..n`.
    pub fn index_groups(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.parts
            .iter()
            .map(|&p| {
                let r = start..start + p;
                start += p;
                r
            })
            .collect()
    }

    /// Exchange parts `m` and `m + 1` (zero-based `m`).
    pub fn swapped(&self, m: usize) -> Result<Self> {
        if m + 1 >= self.k() {
            return Err(Error::InvalidArgument(format!(
                "swap index {} out of range for {} parts",
                m,
                self.k()
            )));
        }
        let mut parts = self.parts.clone();
        parts.swap(m, m + 1);
        Self::new(parts)
    }
}

impl TryFrom<Vec<usize>> for Composition {
    type Error = Error;

    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Self::new(parts)
    }
}

impl From<Composition> for Vec<usize> {
    fn from(c: Composition) -> Self {
        c.parts
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Composition {
    type Err = Error;

    /// Parses `3,2,2` (optionally wrapped in parentheses).
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = trimmed
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidComposition(format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }
}

/// Exact number of codewords `M`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodebookSize(BigUint);

impl CodebookSize {
    pub fn new(value: BigUint) -> Self {
        debug_assert!(!value.is_zero());
        Self(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn log2(&self) -> f64 {
        log2_biguint(&self.0)
    }
}

impl fmt::Display for CodebookSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for CodebookSize {
    fn from(v: u64) -> Self {
        Self::new(BigUint::from(v))
    }
}

/// `log2` of an exact integer, accurate to double precision for any size.
pub fn log2_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.log2() + shift as f64
}

/// `C(n, k)` computed exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for t in 1..=k {
        acc *= n - k + t;
        acc /= t;
    }
    acc
}

/// `n! / (n_1! ... n_K!)`: the size of a single permutation code.
pub fn multinomial_size(c: &Composition) -> CodebookSize {
    CodebookSize::new(multinomial(c.parts()))
}

fn multinomial(parts: &[usize]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &p in parts {
        total += p as u64;
        acc *= binomial(total, p as u64);
    }
    acc
}

/// Codebook size `2^h · n!/(n_1!...n_K!)` when `h` components carry a free sign.
///
/// Signs attach to whole level groups and only the last level may be zero, so
/// `h` must be `n` or `n - n_K`.
pub fn variant2_size(c: &Composition, h: usize) -> Result<CodebookSize> {
    let last = *c.parts().last().expect("composition has at least one part");
    if h != c.n() && h != c.n() - last {
        return Err(Error::InvalidArgument(format!(
            "h = {h} is inconsistent with composition {c}: expected {} or {}",
            c.n(),
            c.n() - last
        )));
    }
    Ok(CodebookSize::new(multinomial(c.parts()) << h))
}

/// Restriction applied while enumerating compositions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionFilter {
    #[default]
    None,
    /// `n_1 ≤ n_2 ≤ ... ≤ n_K`.
    Variant2Monotone,
    /// Nondecreasing over the first `⌊K/2⌋` parts, nonincreasing over the rest.
    Variant1Unimodal,
}

impl CompositionFilter {
    pub fn accepts(self, parts: &[usize]) -> bool {
        match self {
            CompositionFilter::None => true,
            CompositionFilter::Variant2Monotone => parts.windows(2).all(|w| w[0] <= w[1]),
            CompositionFilter::Variant1Unimodal => {
                let half = parts.len() / 2;
                parts[..half].windows(2).all(|w| w[0] <= w[1])
                    && parts[half..].windows(2).all(|w| w[0] >= w[1])
            }
        }
    }

    /// Lexicographically smallest arrangement of a multiset of parts that passes
    /// the filter. Every multiset admits one for all three filters.
    pub fn smallest_arrangement(self, parts: &[usize]) -> Vec<usize> {
        let mut sorted = parts.to_vec();
        sorted.sort_unstable();
        match self {
            CompositionFilter::None | CompositionFilter::Variant2Monotone => sorted,
            CompositionFilter::Variant1Unimodal => {
                let half = sorted.len() / 2;
                let mut out = sorted[..half].to_vec();
                out.extend(sorted[half..].iter().rev());
                out
            }
        }
    }
}

impl FromStr for CompositionFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "variant2_monotone" | "monotone" => Ok(Self::Variant2Monotone),
            "variant1_unimodal" | "unimodal" => Ok(Self::Variant1Unimodal),
            other => Err(Error::InvalidArgument(format!("unknown filter {other:?}"))),
        }
    }
}

/// Iterator over all ordered compositions of `n` accepted by `filter`.
///
/// Compositions correspond to the `2^(n-1)` subsets of cut points between
/// adjacent units; bit `i` of the mask cuts after unit `i + 1`.
pub struct Compositions {
    n: usize,
    mask: u64,
    end: u64,
    filter: CompositionFilter,
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        while self.mask < self.end {
            let mask = self.mask;
            self.mask += 1;
            let mut parts = Vec::with_capacity(mask.count_ones() as usize + 1);
            let mut run = 1;
            for i in 0..self.n - 1 {
                if mask >> i & 1 == 1 {
                    parts.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            parts.push(run);
            if self.filter.accepts(&parts) {
                return Some(Composition { parts, n: self.n });
            }
        }
        None
    }
}

pub fn enumerate_compositions(n: usize, filter: CompositionFilter) -> Compositions {
    assert!((1..=63).contains(&n), "composition enumeration supports 1 ≤ n ≤ 63");
    Compositions { n, mask: 0, end: 1u64 << (n - 1), filter }
}

/// All integer partitions of `n`, each with parts in descending order.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(remaining: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            prefix.push(part);
            go(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Sorted distinct values of the multinomial coefficient over all partitions of `n`.
pub fn distinct_multinomials(n: usize) -> Vec<CodebookSize> {
    let set: BTreeSet<BigUint> = partitions(n).iter().map(|p| multinomial(p)).collect();
    set.into_iter().map(CodebookSize::new).collect()
}

/// Distinct fixed-rate operating points for `J` subcodes of dimension `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatePointCensus {
    pub n: usize,
    pub j: usize,
    /// Sorted distinct values of `Σ_j M_j`.
    pub distinct_sums: Vec<BigUint>,
}

impl RatePointCensus {
    pub fn count(&self) -> usize {
        self.distinct_sums.len()
    }

    /// Rates `log2(Σ M_j) / n` in ascending order.
    pub fn rates(&self) -> Vec<f64> {
        self.distinct_sums.iter().map(|s| log2_biguint(s) / self.n as f64).collect()
    }
}

/// Counts the distinct sums of `J` multinomial coefficients chosen with
/// replacement from [`distinct_multinomials`].
///
/// The multiset space is sharded by its smallest element; shards are merged
/// into one ordered set so the result does not depend on the worker count.
pub fn rate_point_census(n: usize, j: usize, limit: u64) -> Result<RatePointCensus> {
    if n < 1 || j < 1 {
        return Err(Error::InvalidArgument(format!("census needs n ≥ 1 and J ≥ 1, got n={n}, J={j}")));
    }
    let values: Vec<BigUint> = distinct_multinomials(n).into_iter().map(|m| m.into_inner()).collect();
    let bound = binomial((values.len() + j - 1) as u64, j as u64);
    if bound > BigUint::from(limit) {
        return Err(Error::ResourceGuard { bound: bound.to_string(), limit: limit.to_string() });
    }

    fn extend(values: &[BigUint], from: usize, left: usize, acc: &BigUint, out: &mut BTreeSet<BigUint>) {
        if left == 0 {
            out.insert(acc.clone());
            return;
        }
        for i in from..values.len() {
            extend(values, i, left - 1, &(acc + &values[i]), out);
        }
    }

    let shards: Vec<BTreeSet<BigUint>> = (0..values.len())
        .into_par_iter()
        .map(|first| {
            let mut set = BTreeSet::new();
            extend(&values, first, j - 1, &values[first], &mut set);
            set
        })
        .collect();
    let mut merged = BTreeSet::new();
    for shard in shards {
        merged.extend(shard);
    }
    Ok(RatePointCensus { n, j, distinct_sums: merged.into_iter().collect() })
}

/// Largest gap between consecutive single-code rate points, `log2(n)/n`.
///
/// The rate points `0, log n / n, log n(n-1) / n, ...` come from the partitions
/// `(n), (n-1,1), (n-2,1,1), ...`; the first interval is the widest.
pub fn max_rate_gap(n: usize) -> f64 {
    assert!(n >= 2);
    (n as f64).log2() / n as f64
}
