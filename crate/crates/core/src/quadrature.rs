//! Composite Gauss–Legendre quadrature with panel doubling.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Points per panel.
pub const GAUSS_ORDER: usize = 8;

const MAX_DOUBLINGS: usize = 12;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_ORDER))
}

/// Integral of `f` over `[lo, hi]` with one Gauss panel.
pub fn gauss_panel(f: &dyn Fn(f64) -> Complex64, lo: f64, hi: f64) -> Complex64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    nodes
        .iter()
        .zip(weights)
        .map(|(t, w)| f(mid + half * t) * (w * half))
        .sum()
}

/// Panel edges from the knots strictly inside `(lo, hi)`, with at least `min_panels` panels.
pub fn initial_panels(lo: f64, hi: f64, knots: &[f64], min_panels: usize) -> Vec<f64> {
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = knots.iter().copied().filter(|&k| k > lo && k < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);
    while edges.len() - 1 < min_panels {
        edges = split(&edges);
    }
    edges
}

fn split(edges: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * edges.len());
    for w in edges.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*edges.last().expect("non-empty edges"));
    out
}

fn sum_panels(f: &dyn Fn(f64) -> Complex64, edges: &[f64]) -> Complex64 {
    edges.windows(2).map(|w| gauss_panel(f, w[0], w[1])).sum()
}

/// Converged composite integral.
#[derive(Clone, Debug)]
pub struct Integral {
    pub value: Complex64,
    /// Change between the last two panel refinements.
    pub change: f64,
    /// Final panel edges.
    pub edges: Vec<f64>,
}

/// Integrates `f` over `[lo, hi]`, doubling panels until two successive
/// results differ by less than `tol * max(1, |I|)`. `piece` is used only for
/// error reporting.
pub fn integrate(
    f: &dyn Fn(f64) -> Complex64,
    lo: f64,
    hi: f64,
    knots: &[f64],
    tol: f64,
    piece: usize,
) -> Result<Integral> {
    let mut edges = initial_panels(lo, hi, knots, 4);
    let mut prev = sum_panels(f, &edges);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        let finer = split(&edges);
        let value = sum_panels(f, &finer);
        change = (value - prev).norm();
        if !value.is_finite() {
            break;
        }
        if change <= tol * value.norm().max(1.0) {
            return Ok(Integral {
                value,
                change,
                edges: finer,
            });
        }
        edges = finer;
        prev = value;
    }
    Err(Error::QuadratureFailure { piece, change })
}

/// Running integral `x -> int_lo^x f` on converged panels.
#[derive(Clone, Debug)]
pub struct Cumulative {
    edges: Vec<f64>,
    prefix: Vec<Complex64>,
}

impl Cumulative {
    pub fn new(f: &dyn Fn(f64) -> Complex64, edges: Vec<f64>) -> Self {
        let mut prefix = Vec::with_capacity(edges.len());
        let mut acc = Complex64::new(0.0, 0.0);
        prefix.push(acc);
        for w in edges.windows(2) {
            acc += gauss_panel(f, w[0], w[1]);
            prefix.push(acc);
        }
        Self { edges, prefix }
    }

    pub fn total(&self) -> Complex64 {
        *self.prefix.last().expect("non-empty prefix")
    }

    /// `int_lo^x f`, exact at the panel edges.
    pub fn at(&self, f: &dyn Fn(f64) -> Complex64, x: f64) -> Complex64 {
        let k = self.edges.partition_point(|&e| e <= x);
        if k == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let k = k - 1;
        if self.edges[k] == x || k + 1 == self.edges.len() {
            return self.prefix[k];
        }
        self.prefix[k] + gauss_panel(f, self.edges[k], x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_degree_2n_minus_1() {
        for n in [1, 2, 3, 5, 8, 11] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} deg={deg}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_integrates_oscillatory_function() {
        let f = |x: f64| Complex64::new((40.0 * x).cos(), 0.0);
        let r = integrate(&f, 0.0, 1.0, &[], 1e-12, 0).unwrap();
        assert!((r.value.re - 40f64.sin() / 40.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let f = |x: f64| Complex64::new(x.exp(), x);
        let r = integrate(&f, 0.0, 2.0, &[0.3, 1.1], 1e-12, 0).unwrap();
        let cum = Cumulative::new(&f, r.edges.clone());
        for x in [0.0, 0.3, 0.77, 1.1, 1.9, 2.0] {
            let v = cum.at(&f, x);
            assert!((v.re - (x.exp() - 1.0)).abs() < 1e-12);
            assert!((v.im - 0.5 * x * x).abs() < 1e-12);
        }
        assert_eq!(cum.at(&f, 2.0), cum.total());
    }

    #[test]
    fn divergent_integrand_fails() {
        let f = |x: f64| Complex64::new(1.0 / x.abs().sqrt().max(1e-300), 0.0);
        assert!(matches!(
            integrate(&f, -1.0, 1.0, &[0.0], 1e-14, 2),
            Err(Error::QuadratureFailure { piece: 2, .. })
        ));
    }
}
