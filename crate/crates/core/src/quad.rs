//! Gauss–Legendre rules and the panel schemes built on them.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
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
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

/// Adaptive bisection with a 16-point rule on each piece.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    let g = gl16();
    let whole = g.integrate(&mut f, a, b);
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = g.integrate(&mut f, lo, mid);
        let right = g.integrate(&mut f, mid, hi);
        let refined = left + right;
        let err = (refined - est).abs();
        let scale = (rel_tol * refined.abs()).max(abs_tol * (hi - lo) / (b - a).abs().max(f64::MIN_POSITIVE));
        if err <= scale || depth >= 40 || mid <= lo || mid >= hi || !refined.is_finite() {
            total += refined;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    total
}

/// Result of an integral over (0, b] that is singular or slowly decaying at 0.
#[derive(Debug, Clone, Copy)]
pub struct PanelIntegral {
    pub value: f64,
    /// Extrapolated contribution of (0, last panel], already included in `value`.
    pub tail: f64,
    pub panels: usize,
}

/// Integrate f over (0, b] on geometric panels [b 2^{-k-1}, b 2^{-k}].
pub fn toward_zero<F: FnMut(f64) -> f64>(mut f: F, b: f64, rel_tol: f64, max_panels: usize) -> PanelIntegral {
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut hi = b;
    let mut k = 0;
    let mut tail = 0.0;
    while k < max_panels {
        let lo = 0.5 * hi;
        if lo == 0.0 {
            break;
        }
        let p = adaptive(&mut f, lo, hi, rel_tol * 0.1, 0.0);
        sum += p;
        k += 1;
        hi = lo;
        if k >= 6 && prev.is_finite() && prev > 0.0 {
            let r = p / prev;
            if r < 1.0 && r >= 0.0 {
                let t = p * r / (1.0 - r);
                if t <= rel_tol * 0.1 * sum.abs() {
                    tail = t;
                    break;
                }
            }
        }
        if p == 0.0 && k >= 6 {
            break;
        }
        prev = p;
    }
    PanelIntegral { value: sum + tail, tail, panels: k }
}
