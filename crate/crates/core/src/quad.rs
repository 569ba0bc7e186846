//! Gauss-Legendre quadrature: fixed-order panels and a bisection-adaptive driver.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{LazyLock, Mutex};

use gauss_quad::GaussLegendre;

use crate::{Error, Result};

static RULES: LazyLock<Mutex<HashMap<usize, &'static [(f64, f64)]>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Nodes and weights of the `n`-point rule on `[-1, 1]`, computed once per order.
pub fn rule(n: usize) -> &'static [(f64, f64)] {
    let mut rules = RULES.lock().expect("quadrature rule cache poisoned");
    rules.entry(n).or_insert_with(|| {
        let degree = NonZeroUsize::new(n.max(1)).unwrap();
        let pairs = GaussLegendre::new(degree).into_node_weight_pairs();
        Box::leak(pairs)
    })
}

/// Nodes and weights of the `n`-point rule mapped onto `[a, b]`.
pub fn mapped(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule(n).iter().map(move |&(x, w)| (mid + half * x, half * w))
}

pub fn fixed<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    mapped(a, b, n).map(|(x, w)| w * f(x)).sum()
}

/// Fixed-order rule applied on each piece between consecutive breakpoints.
pub fn piecewise<F: FnMut(f64) -> f64>(breaks: &[f64], n: usize, mut f: F) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| fixed(w[0], w[1], n, &mut f))
        .sum()
}

/// Settings for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveRule {
    /// Absolute error target per accepted panel.
    pub abs_tol: f64,
    pub order: usize,
    pub max_depth: u32,
    pub max_panels: usize,
}

impl AdaptiveRule {
    pub fn new(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            order: 16,
            max_depth: 48,
            max_panels: 20_000,
        }
    }
}

/// Bisect `[a, b]` until the `order`-point estimate on a panel agrees with the
/// sum over its two halves to `abs_tol`. Accepted panels are handed to `accept`
/// together with the refined estimate.
pub fn adapt<F, A>(a: f64, b: f64, rule: &AdaptiveRule, mut f: F, mut accept: A) -> Result<()>
where
    F: FnMut(f64) -> f64,
    A: FnMut(f64, f64, f64),
{
    if b <= a {
        return Ok(());
    }
    let n = rule.order;
    let whole = fixed(a, b, n, &mut f);
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut panels = 0usize;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = fixed(lo, mid, n, &mut f);
        let right = fixed(mid, hi, n, &mut f);
        let refined = left + right;
        if (refined - est).abs() <= rule.abs_tol || depth >= rule.max_depth || mid <= lo || mid >= hi
        {
            if depth >= rule.max_depth && (refined - est).abs() > rule.abs_tol {
                return Err(Error::no_convergence(
                    "adaptive quadrature",
                    format!("panel [{lo:e}, {hi:e}] still off by {:e}", (refined - est).abs()),
                ));
            }
            accept(lo, hi, refined);
            panels += 1;
            if panels > rule.max_panels {
                return Err(Error::no_convergence(
                    "adaptive quadrature",
                    format!("more than {} panels on [{a:e}, {b:e}]", rule.max_panels),
                ));
            }
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(())
}

pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, abs_tol: f64, f: F) -> Result<f64> {
    let mut total = 0.0;
    adapt(a, b, &AdaptiveRule::new(abs_tol), f, |_, _, v| total += v)?;
    Ok(total)
}

/// Adaptive integration over consecutive pieces of `breaks`.
pub fn adaptive_pieces<F: FnMut(f64) -> f64>(breaks: &[f64], abs_tol: f64, mut f: F) -> Result<f64> {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive(w[0], w[1], abs_tol, &mut f)?;
    }
    Ok(total)
}

/// Sorted, deduplicated breakpoints clipped to `[lo, hi]`, endpoints included.
pub fn clip_breaks(points: impl IntoIterator<Item = f64>, lo: f64, hi: f64) -> Vec<f64> {
    let mut out: Vec<f64> = points
        .into_iter()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    out.push(lo);
    out.push(hi);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    out
}
