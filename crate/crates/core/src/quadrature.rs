//! Adaptive composite Gauss–Legendre integration.
//!
//! Each panel is integrated once whole and once as two halves; the panel is
//! accepted when the two estimates agree to within its share of the tolerance.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 15;
const MAX_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: f64,
    /// Sum of the accepted panel discrepancies; a conservative error bound.
    pub error: f64,
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_m(x)` and its derivative by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    let mut acc = Integral { value: 0.0, error: 0.0 };
    let mut worst = 0.0f64;
    let whole = panel(&f, a, b);
    recurse(&f, a, b, whole, tol, 0, &mut acc, &mut worst);
    if worst > 0.0 {
        return Err(Error::NonConvergence { what: "adaptive quadrature", residual: worst });
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut Integral,
    worst: &mut f64,
) {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let diff = (left + right - whole).abs();
    if diff <= tol.max(64.0 * f64::EPSILON * (left.abs() + right.abs())) {
        acc.value += left + right;
        acc.error += diff;
        return;
    }
    if depth >= MAX_DEPTH {
        acc.value += left + right;
        acc.error += diff;
        *worst = worst.max(diff);
        return;
    }
    recurse(f, a, mid, left, 0.5 * tol, depth + 1, acc, worst);
    recurse(f, mid, b, right, 0.5 * tol, depth + 1, acc, worst);
}
