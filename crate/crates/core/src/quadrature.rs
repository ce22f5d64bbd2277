//! Composite tensor Gauss–Legendre quadrature with panel doubling.

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` split into `panels` equal pieces.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(mid + half * x);
            }
        }
        total * half
    }

    /// Composite nodes and weights over `[a, b]`.
    pub fn composite_rule(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + half * x);
                ws.push(w * half);
            }
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let prev = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * p - prev) / (x * x - 1.0);
    (p, d)
}

#[derive(Debug, Clone, Copy)]
pub struct DoublingOptions {
    pub order: usize,
    pub initial_panels: usize,
    pub rel_tol: f64,
    pub max_levels: usize,
}

impl Default for DoublingOptions {
    fn default() -> Self {
        Self {
            order: 16,
            initial_panels: 2,
            rel_tol: 1e-10,
            max_levels: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Integral of `|f|` on the final grid, the scale of the error test.
    pub magnitude: f64,
    pub levels: usize,
}

/// Integrate `f(x, y)` over a rectangle, doubling the panel count on both
/// axes until successive estimates agree to `rel_tol` relative to `∫|f|`.
pub fn integrate_2d<F>(f: F, x_range: (f64, f64), y_range: (f64, f64), opts: &DoublingOptions) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
{
    let rule = GaussLegendre::new(opts.order);
    let estimate = |panels: usize| {
        let (xs, wx) = rule.composite_rule(x_range.0, x_range.1, panels);
        let (ys, wy) = rule.composite_rule(y_range.0, y_range.1, panels);
        let mut value = 0.0;
        let mut magnitude = 0.0;
        for (x, wxi) in xs.iter().zip(&wx) {
            let mut row = 0.0;
            let mut row_abs = 0.0;
            for (y, wyj) in ys.iter().zip(&wy) {
                let v = f(*x, *y) * wyj;
                row += v;
                row_abs += v.abs();
            }
            value += row * wxi;
            magnitude += row_abs * wxi;
        }
        (value, magnitude)
    };

    let mut panels = opts.initial_panels.max(1);
    let (mut previous, _) = estimate(panels);
    let mut last_change = f64::INFINITY;
    for level in 1..=opts.max_levels {
        panels *= 2;
        let (value, magnitude) = estimate(panels);
        last_change = (value - previous).abs();
        if last_change <= opts.rel_tol * magnitude.max(f64::MIN_POSITIVE) {
            return Ok(QuadResult {
                value,
                magnitude,
                levels: level,
            });
        }
        previous = value;
    }
    Err(Error::QuadratureFailure {
        levels: opts.max_levels,
        last_change,
    })
}
