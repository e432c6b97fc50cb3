//! Brute-force time integration of the linearized vorticity equation
//! `∂_t ω̂ + iα(u ω̂ + u″ ψ̂) = 0`, `ψ̂ = (2α)⁻¹∫e^{−α|y−z|} ω̂(z) dz`.

use crate::flow;
use crate::quad::{self, GaussRule};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::io::Write;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Symmetric uniform grid `y_j = −L + j h`, `j = 0..=n`, with `n` even so
/// that `y = 0` is a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub half_width: f64,
    pub h: f64,
    pub ys: Vec<f64>,
}

impl UniformGrid {
    /// Grid on `[−L, L]` with spacing close to `h` (rounded so `y = 0` is a node).
    pub fn new(half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0 && h < half_width) {
            return Err(Error::Grid(format!("bad grid L = {half_width}, h = {h}")));
        }
        let half = (half_width / h).round().max(4.0) as usize;
        let h = half_width / half as f64;
        let ys = (0..=2 * half).map(|j| -half_width + j as f64 * h).collect();
        Ok(UniformGrid { half_width, h, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn center(&self) -> usize {
        self.ys.len() / 2
    }

    pub fn sample<F: Fn(f64) -> C64>(&self, f: F) -> Vec<C64> {
        self.ys.iter().map(|&y| f(y)).collect()
    }

    /// Every `k`-th node of this grid.
    pub fn coarsen(&self, k: usize) -> Result<Self> {
        let n = self.ys.len() - 1;
        if k == 0 || n % (2 * k) != 0 {
            return Err(Error::Grid(format!("cannot coarsen {n} cells by {k}")));
        }
        Ok(UniformGrid { half_width: self.half_width, h: self.h * k as f64, ys: self.ys.iter().step_by(k).copied().collect() })
    }
}

/// Per-cell weights of `∫_0^h e^{−α(h−s)} p(s) ds` with `p` the degree-5
/// interpolant on six neighbouring nodes.
struct GreenWeights {
    decay: f64,
    /// `w[o][m]`: stencil starting `o` nodes left of the cell's left node
    w: [[f64; 6]; 6],
}

impl GreenWeights {
    fn new(alpha: f64, h: f64) -> Self {
        let rule = GaussRule::get(24);
        let mut w = [[0.0; 6]; 6];
        for (o, row) in w.iter_mut().enumerate() {
            // nodes at (m − o)·h, cell is [0, h]
            let xs: Vec<f64> = (0..6).map(|m| m as f64 - o as f64).collect();
            let mut l = [0.0; 6];
            for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
                quad::lagrange_weights(&xs, s, &mut l);
                let e = (-alpha * h * (1.0 - s)).exp() * ws * h;
                for m in 0..6 {
                    row[m] += e * l[m];
                }
            }
        }
        GreenWeights { decay: (-alpha * h).exp(), w }
    }
}

fn stencil_start(k: usize, n_nodes: usize) -> usize {
    // cell [k, k+1], preferred stencil k−2..=k+3
    k.saturating_sub(2).min(n_nodes - 6)
}

/// `ψ̂ = (2α)⁻¹∫e^{−α|y−z|} ω̂(z) dz` on a uniform grid, with `ω̂ = 0` outside.
pub fn greens_inverse(omega: &[C64], alpha: u32, grid: &UniformGrid) -> Result<Vec<C64>> {
    let n = omega.len();
    if n != grid.len() || n < 6 {
        return Err(Error::Grid("omega does not match the grid".into()));
    }
    if alpha == 0 {
        return Err(Error::Data("α = 0 has no decaying Green's function".into()));
    }
    let a = alpha as f64;
    let gw = GreenWeights::new(a, grid.h);
    let mut left = vec![ZERO; n];
    for k in 0..n - 1 {
        let s0 = stencil_start(k, n);
        let row = &gw.w[k - s0];
        let mut cell = ZERO;
        for m in 0..6 {
            cell += omega[s0 + m] * row[m];
        }
        left[k + 1] = left[k] * gw.decay + cell;
    }
    // mirror: the right sweep is the left sweep on the reversed cell
    let mut right = vec![ZERO; n];
    for k in (0..n - 1).rev() {
        // cell [k, k+1] seen from k+1 with reversed orientation
        let kr = n - 2 - k;
        let s0r = stencil_start(kr, n);
        let row = &gw.w[kr - s0r];
        let mut cell = ZERO;
        for m in 0..6 {
            cell += omega[n - 1 - (s0r + m)] * row[m];
        }
        right[k] = right[k + 1] * gw.decay + cell;
    }
    let inv = 1.0 / (2.0 * a);
    Ok(left.iter().zip(&right).map(|(l, r)| (l + r) * inv).collect())
}

/// `∂_t ω̂ = −iα(u ω̂ + u″ ψ̂)`.
pub fn rhs(omega: &[C64], alpha: u32, grid: &UniformGrid) -> Result<Vec<C64>> {
    let psi = greens_inverse(omega, alpha, grid)?;
    Ok(rhs_with(omega, &psi, alpha, grid))
}

fn rhs_with(omega: &[C64], psi: &[C64], alpha: u32, grid: &UniformGrid) -> Vec<C64> {
    let mi = C64::new(0.0, -(alpha as f64));
    grid.ys.iter().zip(omega.iter().zip(psi)).map(|(&y, (w, p))| mi * (w * flow::u(y) + p * flow::d2u(y))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VorticityState {
    pub alpha: u32,
    pub t: f64,
    pub omega: Vec<C64>,
    pub psi: Vec<C64>,
}

/// Classical RK4 from `omega0` with step at most `dt`, landing exactly on
/// each time in `t_out` (ascending, non-negative).
pub fn evolve(omega0: &[C64], alpha: u32, grid: &UniformGrid, t_out: &[f64], dt: f64) -> Result<Vec<VorticityState>> {
    if !(dt > 0.0) || dt > 0.5 / alpha.max(1) as f64 {
        return Err(Error::Config(format!("dt = {dt} violates dt ≤ 0.5/α")));
    }
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("output times must be ascending and ≥ 0".into()));
    }
    let n0 = l2_norm(omega0, grid.h);
    let mut w = omega0.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_out.len());
    let n = w.len();
    let mut tmp = vec![ZERO; n];
    for &target in t_out {
        let span = target - t;
        let steps = (span / dt).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(&w, alpha, grid)?;
                for i in 0..n {
                    tmp[i] = w[i] + k1[i] * (0.5 * h);
                }
                let k2 = rhs(&tmp, alpha, grid)?;
                for i in 0..n {
                    tmp[i] = w[i] + k2[i] * (0.5 * h);
                }
                let k3 = rhs(&tmp, alpha, grid)?;
                for i in 0..n {
                    tmp[i] = w[i] + k3[i] * h;
                }
                let k4 = rhs(&tmp, alpha, grid)?;
                for i in 0..n {
                    w[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
                t += h;
            }
            let nw = l2_norm(&w, grid.h);
            if !nw.is_finite() || (n0 > 0.0 && nw > 10.0 * n0) {
                return Err(Error::BlowUp { t, ratio: nw / n0 });
            }
        }
        t = target;
        let psi = greens_inverse(&w, alpha, grid)?;
        out.push(VorticityState { alpha, t, omega: w.clone(), psi });
    }
    Ok(out)
}

/// `L²` norm on a uniform grid.
pub fn l2_norm(v: &[C64], h: f64) -> f64 {
    let sq: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let s = quad::uniform_integral(&sq, h);
    if s.is_nan() {
        s
    } else {
        s.max(0.0).sqrt()
    }
}

/// `H¹` norm with centered differences for the derivative.
pub fn h1_norm(v: &[C64], h: f64) -> f64 {
    let d = centered_diff(v, h);
    let a = l2_norm(v, h);
    let b = l2_norm(&d, h);
    (a * a + b * b).sqrt()
}

/// Centered second-order differences, one-sided at the ends.
pub fn centered_diff(v: &[C64], h: f64) -> Vec<C64> {
    let n = v.len();
    let mut d = vec![ZERO; n];
    if n < 3 {
        return d;
    }
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (v[1] * 4.0 - v[0] * 3.0 - v[2]) / (2.0 * h);
    d[n - 1] = (v[n - 2] * -4.0 + v[n - 1] * 3.0 + v[n - 3]) / (2.0 * h);
    d
}

/// `a = p.v.∫ ω̂/sinh` as `∫_0^∞ (ω̂(y) − ω̂(−y))/sinh y dy` and `b = ω̂(0)`.
pub fn ab_functionals(omega: &[C64], grid: &UniformGrid) -> Result<(C64, C64)> {
    let n = omega.len();
    if n != grid.len() || n % 2 == 0 {
        return Err(Error::Grid("a, b need a symmetric grid with y = 0 as a node".into()));
    }
    let c = grid.center();
    let h = grid.h;
    let m = n - c;
    if m < 9 {
        return Err(Error::Grid("grid too small for the a functional".into()));
    }
    let mut g = vec![ZERO; m];
    for k in 1..m {
        g[k] = (omega[c + k] - omega[c - k]) / grid.ys[c + k].sinh();
    }
    // limit at y = 0 is 2ω̂′(0)
    let xs: Vec<f64> = (-4..=4).map(|k| k as f64 * h).collect();
    let fd = quad::fd_weights(0.0, &xs, 1);
    let mut d0 = ZERO;
    for (j, w) in fd[1].iter().enumerate() {
        d0 += omega[c + j - 4] * *w;
    }
    g[0] = d0 * 2.0;
    Ok((quad::uniform_integral_c(&g, h), omega[c]))
}

/// `(a(t), b(t))` along a mode-1 trajectory.
pub fn conserved_ab(traj: &[VorticityState], grid: &UniformGrid) -> Result<Vec<(f64, C64, C64)>> {
    traj.iter()
        .map(|s| {
            if s.alpha != 1 {
                return Err(Error::Data("a, b are conserved only for α = 1".into()));
            }
            let (a, b) = ab_functionals(&s.omega, grid)?;
            Ok((s.t, a, b))
        })
        .collect()
}

/// CSV rows `t, L2_omega, L2_psi, H1_psi, a, b` (a, b only for α = 1).
pub fn write_trajectory_csv<W: Write>(traj: &[VorticityState], grid: &UniformGrid, mut w: W) -> Result<()> {
    writeln!(w, "t,L2_omega,L2_psi,H1_psi,a_re,a_im,b_re,b_im")?;
    for s in traj {
        let (a, b) =
            if s.alpha == 1 { ab_functionals(&s.omega, grid)? } else { (C64::new(f64::NAN, f64::NAN), C64::new(f64::NAN, f64::NAN)) };
        writeln!(
            w,
            "{:.10e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            s.t,
            l2_norm(&s.omega, grid.h),
            l2_norm(&s.psi, grid.h),
            h1_norm(&s.psi, grid.h),
            a.re,
            a.im,
            b.re,
            b.im
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(y: f64) -> f64 {
        1.0 / y.cosh()
    }

    #[test]
    fn green_sech_cubed() {
        let g = UniformGrid::new(20.0, 0.02).unwrap();
        let w = g.sample(|y| C64::new(2.0 * sech(y).powi(3), 0.0));
        let p = greens_inverse(&w, 1, &g).unwrap();
        let err = g.ys.iter().zip(&p).map(|(&y, v)| ((v.re - sech(y)) / sech(y)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn green_exponential() {
        let g = UniformGrid::new(30.0, 0.01).unwrap();
        let w = g.sample(|y| C64::new((-y.abs()).exp(), 0.0));
        let p = greens_inverse(&w, 1, &g).unwrap();
        for (&y, v) in g.ys.iter().zip(&p) {
            if y.abs() < 10.0 {
                let want = 0.5 * (1.0 + y.abs()) * (-y.abs()).exp();
                // the kink at 0 limits the local interpolant
                assert!((v.re - want).abs() < 1e-5, "{y} {} {want}", v.re);
            }
        }
    }

    #[test]
    fn eigenfunction_is_steady() {
        let g = UniformGrid::new(20.0, 0.02).unwrap();
        let w = g.sample(|y| C64::new(2.0 * sech(y).powi(3), 0.0));
        let r = rhs(&w, 1, &g).unwrap();
        assert!(r.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9);
    }

    #[test]
    fn ab_of_odd_gaussian() {
        let g = UniformGrid::new(20.0, 0.02).unwrap();
        let w = g.sample(|y| C64::new(y.sinh() * (-y * y).exp(), 0.0));
        let (a, b) = ab_functionals(&w, &g).unwrap();
        assert!((a.re - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        assert_eq!(b, ZERO);
    }
}
