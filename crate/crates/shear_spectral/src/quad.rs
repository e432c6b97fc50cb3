//! Quadrature and interpolation primitives shared by the solvers.

use crate::C64;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `integ[q][r] = ∫_0^{x_q} ℓ_r(x) dx`, with `ℓ_r` the Lagrange basis on the nodes.
    pub integ: Vec<Vec<f64>>,
}

fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    // map to [0, 1], ascending
    let mut pts: Vec<(f64, f64)> = x.iter().zip(&w).map(|(&z, &w)| (0.5 * (1.0 + z), 0.5 * w)).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
}

impl GaussRule {
    fn build(n: usize) -> Self {
        let (nodes, weights) = legendre_nodes(n);
        let mut integ = vec![vec![0.0; n]; n];
        for q in 0..n {
            let xq = nodes[q];
            for r in 0..n {
                // ℓ_r has degree n-1, so the n-point rule on [0, x_q] is exact
                let mut s = 0.0;
                for k in 0..n {
                    let t = xq * nodes[k];
                    s += weights[k] * lagrange_basis(&nodes, r, t);
                }
                integ[q][r] = s * xq;
            }
        }
        GaussRule { nodes, weights, integ }
    }

    /// Cached rule with `n` points.
    pub fn get(n: usize) -> &'static GaussRule {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussRule>>> = OnceLock::new();
        let m = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = m.lock().unwrap();
        g.entry(n).or_insert_with(|| Box::leak(Box::new(GaussRule::build(n))))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(a + h * x)).sum::<f64>() * h
    }

    pub fn integrate_c<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let h = b - a;
        let mut s = C64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            s += f(a + h * x) * w;
        }
        s * h
    }
}

fn lagrange_basis(xs: &[f64], r: usize, t: f64) -> f64 {
    let mut v = 1.0;
    for (k, &xk) in xs.iter().enumerate() {
        if k != r {
            v *= (t - xk) / (xs[r] - xk);
        }
    }
    v
}

/// Lagrange weights for evaluating the interpolant through `xs` at `t`.
pub fn lagrange_weights(xs: &[f64], t: f64, out: &mut [f64]) {
    for r in 0..xs.len() {
        out[r] = lagrange_basis(xs, r, t);
    }
}

/// Finite-difference weights (Fornberg) for derivatives `0..=m` at `x0`.
/// Returns `w[d][j]`.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Composite Gauss–Legendre nodes and weights for `[a, b]` split into
/// `panels` equal panels of `n` points.
pub fn composite(a: f64, b: f64, panels: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussRule::get(n);
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * n);
    let mut w = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let a0 = a + p as f64 * h;
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            x.push(a0 + h * t);
            w.push(wt * h);
        }
    }
    (x, w)
}

/// Weights for integrating samples on a uniform grid of `n` points with unit
/// spacing, obtained by integrating the local degree-7 interpolant cell by
/// cell (one-sided stencils at the ends). Interior weights equal one.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    assert!(n >= 8, "uniform rule needs at least 8 samples");
    let rule = GaussRule::get(8);
    let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
    let mut table = vec![[0.0; 8]; 8];
    for (off, row) in table.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = rule.integrate(off as f64, off as f64 + 1.0, |x| lagrange_basis(&xs, j, x));
        }
    }
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let start = k.saturating_sub(3).min(n - 8);
        let off = k - start;
        for j in 0..8 {
            w[start + j] += table[off][j];
        }
    }
    w
}

/// Integral of uniformly spaced samples with spacing `h`.
pub fn uniform_integral(v: &[f64], h: f64) -> f64 {
    uniform_weights(v.len()).iter().zip(v).map(|(w, x)| w * x).sum::<f64>() * h
}

/// Complex version of [`uniform_integral`].
pub fn uniform_integral_c(v: &[C64], h: f64) -> C64 {
    let w = uniform_weights(v.len());
    let mut s = C64::new(0.0, 0.0);
    for (a, b) in w.iter().zip(v) {
        s += b * *a;
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exactness() {
        for n in [2, 4, 6, 8, 16] {
            let r = GaussRule::get(n);
            for d in 0..(2 * n) {
                let v = r.integrate(0.0, 1.0, |x| x.powi(d as i32));
                assert!((v - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn integration_matrix() {
        let r = GaussRule::get(6);
        for q in 0..6 {
            let xq = r.nodes[q];
            for d in 0..6 {
                let s: f64 = (0..6).map(|k| r.integ[q][k] * r.nodes[k].powi(d)).sum();
                assert!((s - xq.powi(d + 1) / (d as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fornberg_second_derivative() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fd_weights(0.0, &xs, 2);
        let exp = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert!((w[2][j] - exp[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_rule() {
        let h = 0.05;
        let v: Vec<f64> = (0..=200).map(|i| (-(i as f64 * h - 5.0).powi(2)).exp()).collect();
        assert!((uniform_integral(&v, h) - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        let w: Vec<f64> = (0..=100).map(|i| (i as f64 * 0.01).exp()).collect();
        assert!((uniform_integral(&w, 0.01) - (1f64.exp() - 1.0)).abs() < 1e-13);
        let ws = uniform_weights(40);
        assert!((ws[20] - 1.0).abs() < 1e-13);
    }
}
