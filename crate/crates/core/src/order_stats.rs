//! Moments of Gaussian and half-normal order statistics.
//!
//! Indices are descending throughout: entry `0` is the largest order
//! statistic `ξ_1`, entry `n - 1` the smallest.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::Composition;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::{ln_gamma, normal_cdf, normal_pdf, normal_sf};

/// Default absolute tolerance for every tabulated moment.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Half-width of the integration window, in units of `σ`.
const SPAN: f64 = 12.0;

#[derive(Clone, Debug, PartialEq)]
pub struct OrderStatTable {
    pub n: usize,
    pub sigma: f64,
    pub tol: f64,
    /// `E[ξ_ℓ]`
    pub mean_xi: Vec<f64>,
    /// `E[ξ_ℓ²]`
    pub second_xi: Vec<f64>,
    /// `E[η_ℓ]` for the order statistics of `|X|`.
    pub mean_eta: Vec<f64>,
    /// `E[η_ℓ²]`
    pub second_eta: Vec<f64>,
}

/// Parent distribution whose order statistics are tabulated.
#[derive(Clone, Copy)]
enum Parent {
    Gaussian,
    HalfNormal,
}

impl Parent {
    fn support(self) -> [(f64, f64); 2] {
        match self {
            Parent::Gaussian => [(-SPAN, 0.0), (0.0, SPAN)],
            Parent::HalfNormal => [(0.0, 2.0), (2.0, SPAN)],
        }
    }

    /// `(ln F(x), ln(1 - F(x)), ln f(x))` for the unit-scale parent.
    fn log_terms(self, x: f64) -> (f64, f64, f64) {
        match self {
            Parent::Gaussian => (normal_cdf(x).ln(), normal_sf(x).ln(), normal_pdf(x).ln()),
            Parent::HalfNormal => (
                libm::erf(x * std::f64::consts::FRAC_1_SQRT_2).ln(),
                (2.0 * normal_sf(x)).ln(),
                (2.0 * normal_pdf(x)).ln(),
            ),
        }
    }
}

fn scaled(exponent: usize, log_value: f64) -> f64 {
    if exponent == 0 {
        0.0
    } else {
        exponent as f64 * log_value
    }
}

/// First and second moments of the `k`-th smallest of `n` unit-scale draws.
fn moments(parent: Parent, n: usize, k: usize, tol: f64) -> Result<(f64, f64)> {
    let log_coef = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64) - ln_gamma((n - k) as f64 + 1.0);
    let density = |x: f64| {
        let (lf, ls, lpdf) = parent.log_terms(x);
        (log_coef + scaled(k - 1, lf) + scaled(n - k, ls) + lpdf).exp()
    };
    let mut first = 0.0;
    let mut second = 0.0;
    for (a, b) in parent.support() {
        first += integrate(|x| x * density(x), a, b, 0.25 * tol)?.value;
        second += integrate(|x| x * x * density(x), a, b, 0.25 * tol)?.value;
    }
    Ok((first, second))
}

impl OrderStatTable {
    /// Tabulates all four moment columns by deterministic quadrature.
    pub fn compute(n: usize, sigma: f64, tol: f64) -> Result<Self> {
        if n == 0 || !(sigma > 0.0) || !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "order statistics need n ≥ 1, σ > 0, tol > 0 (got n={n}, σ={sigma}, tol={tol})"
            )));
        }
        let unit_tol = tol / sigma.max(sigma * sigma).max(1.0);
        let column = |parent: Parent| -> Result<Vec<(f64, f64)>> {
            (0..n)
                .into_par_iter()
                .map(|l| moments(parent, n, n - l, unit_tol))
                .collect::<Result<Vec<_>>>()
        };
        let mut xi = column(Parent::Gaussian)?;
        // The Gaussian parent is symmetric: ξ_ℓ and -ξ_{n+1-ℓ} share a law.
        for l in 0..n / 2 {
            let (lo, hi) = (xi[l], xi[n - 1 - l]);
            let mean = 0.5 * (lo.0 - hi.0);
            let second = 0.5 * (lo.1 + hi.1);
            xi[l] = (mean, second);
            xi[n - 1 - l] = (-mean, second);
        }
        if n % 2 == 1 {
            xi[n / 2].0 = 0.0;
        }
        let eta = column(Parent::HalfNormal)?;
        let s2 = sigma * sigma;
        Ok(Self {
            n,
            sigma,
            tol,
            mean_xi: xi.iter().map(|m| sigma * m.0).collect(),
            second_xi: xi.iter().map(|m| s2 * m.1).collect(),
            mean_eta: eta.iter().map(|m| sigma * m.0).collect(),
            second_eta: eta.iter().map(|m| s2 * m.1).collect(),
        })
    }

    /// Shared, memoized table for `(n, σ, tol)`.
    pub fn cached(n: usize, sigma: f64, tol: f64) -> Result<Arc<Self>> {
        type Key = (usize, u64, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<OrderStatTable>>>> = OnceLock::new();
        let key = (n, sigma.to_bits(), tol.to_bits());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().expect("order-stat cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let table = Arc::new(Self::compute(n, sigma, tol)?);
        cache.lock().expect("order-stat cache poisoned").insert(key, Arc::clone(&table));
        Ok(table)
    }

    /// Whether `E[η_ℓ]` is convex in `ℓ` (up to `slack`).
    pub fn eta_mean_is_convex(&self, slack: f64) -> bool {
        self.mean_eta.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -slack)
    }

    /// Whether `E[ξ_ℓ]` is convex over the first half of indices and concave
    /// over the second half (up to `slack`).
    pub fn xi_mean_is_convex_concave(&self, slack: f64) -> bool {
        let half = self.n / 2;
        self.mean_xi.windows(3).enumerate().all(|(i, w)| {
            let d2 = w[2] - 2.0 * w[1] + w[0];
            // Window centred on index i + 1.
            if i + 1 < half {
                d2 >= -slack
            } else if i + 1 >= self.n - half {
                d2 <= slack
            } else {
                true
            }
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for l in 0..self.n {
            w.serialize(CsvRow {
                l: l + 1,
                e_xi: self.mean_xi[l],
                e_xi2: self.second_xi[l],
                e_eta: self.mean_eta[l],
                e_eta2: self.second_eta[l],
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, sigma: f64, tol: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut table = Self {
            n: 0,
            sigma,
            tol,
            mean_xi: vec![],
            second_xi: vec![],
            mean_eta: vec![],
            second_eta: vec![],
        };
        for (i, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            if row.l != i + 1 {
                return Err(Error::InvalidArgument(format!("row {} has index {}", i + 1, row.l)));
            }
            table.mean_xi.push(row.e_xi);
            table.second_xi.push(row.e_xi2);
            table.mean_eta.push(row.e_eta);
            table.second_eta.push(row.e_eta2);
        }
        table.n = table.mean_xi.len();
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    l: usize,
    #[serde(rename = "E_xi")]
    e_xi: f64,
    #[serde(rename = "E_xi2")]
    e_xi2: f64,
    #[serde(rename = "E_eta")]
    e_eta: f64,
    #[serde(rename = "E_eta2")]
    e_eta2: f64,
}

/// Table of Gaussian order-statistic moments (the `η` columns are filled too).
pub fn gaussian_order_stats(n: usize, sigma: f64, tol: f64) -> Result<Arc<OrderStatTable>> {
    OrderStatTable::cached(n, sigma, tol)
}

/// Table of half-normal (`|X|`) order-statistic moments; same shared table.
pub fn folded_order_stats(n: usize, sigma: f64, tol: f64) -> Result<Arc<OrderStatTable>> {
    OrderStatTable::cached(n, sigma, tol)
}

/// `ξ̄_i = n_i^{-1/2} Σ_{ℓ∈I_i} x_ℓ` for a descending-sorted vector.
pub fn grouped_projection(x_sorted: &[f64], c: &Composition) -> Result<Vec<f64>> {
    if x_sorted.len() != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n(), got: x_sorted.len() });
    }
    if let Some(i) = x_sorted.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(format!(
            "input is not sorted in descending order at position {}",
            i + 1
        )));
    }
    Ok(project_sorted(x_sorted, c))
}

/// Unchecked projection used on hot paths where sortedness is known.
pub(crate) fn project_sorted(x_sorted: &[f64], c: &Composition) -> Vec<f64> {
    c.index_groups()
        .into_iter()
        .map(|g| {
            let len = g.len() as f64;
            x_sorted[g].iter().sum::<f64>() / len.sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn table(n: usize) -> Arc<OrderStatTable> {
        OrderStatTable::cached(n, 1.0, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn single_draw() {
        let t = table(1);
        assert!(t.mean_xi[0].abs() < 1e-10);
        assert!((t.second_xi[0] - 1.0).abs() < 1e-10);
        assert!((t.mean_eta[0] - (2.0 / PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn max_of_two_closed_form() {
        let t = table(2);
        let v = 1.0 / PI.sqrt();
        assert!((t.mean_xi[0] - v).abs() < 1e-10);
        assert!((t.mean_xi[1] + v).abs() < 1e-10);
    }

    #[test]
    fn sigma_scaling() {
        let t = OrderStatTable::compute(4, 2.5, DEFAULT_TOL).unwrap();
        let u = table(4);
        for l in 0..4 {
            assert!((t.mean_xi[l] - 2.5 * u.mean_xi[l]).abs() < 1e-9);
            assert!((t.second_eta[l] - 6.25 * u.second_eta[l]).abs() < 1e-9);
        }
    }

    #[test]
    fn structural_invariants() {
        for n in [2, 3, 5, 8, 13, 25, 32] {
            let t = table(n);
            let sum: f64 = t.mean_xi.iter().sum();
            assert!(sum.abs() < 1e-9, "n={n}: Σ E[ξ] = {sum}");
            let energy: f64 = t.second_xi.iter().sum();
            assert!((energy - n as f64).abs() < 1e-9);
            let energy_eta: f64 = t.second_eta.iter().sum();
            assert!((energy_eta - n as f64).abs() < 1e-9);
            assert!(t.mean_xi.windows(2).all(|w| w[0] > w[1]));
            assert!(t.mean_eta.windows(2).all(|w| w[0] > w[1]));
            assert!(t.mean_eta.iter().all(|&m| m >= 0.0));
            for l in 0..n {
                assert!((t.mean_xi[l] + t.mean_xi[n - 1 - l]).abs() < 1e-10);
            }
            assert!(t.eta_mean_is_convex(1e-9), "n={n}: E[η] not convex");
            assert!(t.xi_mean_is_convex_concave(1e-9), "n={n}: E[ξ] shape");
        }
    }

    #[test]
    fn csv_roundtrip() {
        let t = table(5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("l,E_xi,E_xi2,E_eta,E_eta2\n"));
        let back = OrderStatTable::read_csv(&buf[..], 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(&back, t.as_ref());
    }

    #[test]
    fn projection_examples() {
        let c = Composition::new(vec![1, 2]).unwrap();
        let p = grouped_projection(&[3.0, 2.0, 1.0], &c).unwrap();
        assert_eq!(p[0], 3.0);
        assert!((p[1] - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        let ones = Composition::all_ones(3).unwrap();
        assert_eq!(grouped_projection(&[3.0, 2.0, 1.0], &ones).unwrap(), vec![3.0, 2.0, 1.0]);
        assert!(grouped_projection(&[1.0, 2.0, 3.0], &c).is_err());
        assert!(grouped_projection(&[1.0], &c).is_err());
    }
}
