//! Homogeneous Rayleigh equation: `φ = (u − c) φ₁` with `φ₁` the fixed point
//! of `φ₁ = 1 + α² T φ₁`.
//!
//! `T` is the composition of two Volterra integrals anchored at the critical
//! point, `T f = T₀ T₂₂ f` with
//! `T₂₂ f(z) = ∫_{y_c}^z f (u − c)² dw / (u(z) − c)²` and `T₀ g = ∫_{y_c}^y g`.
//! Both are discretised by collocation on composite Gauss–Legendre panels:
//! the unknowns live at the Gauss points of each cell and running integrals
//! are advanced cell by cell with the spectral integration matrix, so the
//! iteration never interpolates and never evaluates `(u − c)⁻²` at `y_c`.

use crate::flow::{self, SpectralPoint};
use crate::quad::{self, GaussRule};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Grid and iteration settings for a single solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Uniform cell width; defaults to `0.05 / α`.
    pub h: Option<f64>,
    /// Half-width of the grid around `y_c`; defaults to `max(25/α, 20)`.
    pub half_width: Option<f64>,
    /// Gauss points per cell.
    pub n_gauss: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Geometric growth factor of the refined cells around `y_c` for complex `c`.
    pub refine_ratio: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { h: None, half_width: None, n_gauss: 6, tol: 1e-10, max_iter: 200, refine_ratio: 1.25 }
    }
}

impl SolveOptions {
    pub fn cell_width(&self, alpha: u32) -> f64 {
        self.h.unwrap_or(0.05 / alpha as f64)
    }

    pub fn span(&self, alpha: u32) -> f64 {
        self.half_width.unwrap_or((25.0 / alpha as f64).max(20.0))
    }
}

#[derive(Debug, Clone)]
struct Cell {
    /// index of the left node; the cell is `[nodes[k], nodes[k+1]]`
    k: usize,
    far: usize,
    h: f64,
    dir: f64,
    uc2: Vec<C64>,
    uc2_far: C64,
}

/// Cells and Gauss points around a critical point.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub point: SpectralPoint,
    pub nodes: Vec<f64>,
    /// index of `y_c` in `nodes`
    pub center: usize,
    pub n_gauss: usize,
    /// Gauss points, ascending, `n_gauss` per cell
    pub gy: Vec<f64>,
    /// Gauss weights including the cell width
    pub gw: Vec<f64>,
    right: Vec<Cell>,
    left: Vec<Cell>,
    m_right: Vec<Vec<f64>>,
    m_left: Vec<Vec<f64>>,
}

/// Result of applying `T` on a grid.
#[derive(Debug, Clone)]
pub struct TApplied {
    pub t_nodes: Vec<C64>,
    pub t_gauss: Vec<C64>,
    pub t22_nodes: Vec<C64>,
    pub t22_gauss: Vec<C64>,
}

impl PanelGrid {
    /// Default grid: uniform cells of width `h`, refined geometrically near
    /// `y_c` when `Im c ≠ 0` so the `|Im c|`-scale structure is resolved.
    pub fn around(point: &SpectralPoint, opts: &SolveOptions) -> Result<Self> {
        let h = opts.cell_width(point.alpha);
        let span = opts.span(point.alpha);
        if !(h > 0.0 && span > h) {
            return Err(Error::Grid(format!("bad cell width {h} or span {span}")));
        }
        let eps = point.c.im.abs();
        let mut h_min = h;
        if eps > 0.0 {
            let scale = eps / (1.0 - point.c.re * point.c.re);
            h_min = (0.2 * scale).clamp(1e-9, h);
        }
        let mut offs = vec![0.0];
        let mut d = 0.0;
        let mut s = h_min;
        while d < span - 1e-12 {
            d += s.min(span - d);
            offs.push(d);
            s = (s * opts.refine_ratio).min(h);
        }
        let mut nodes: Vec<f64> = offs.iter().rev().map(|o| point.y_c - o).collect();
        nodes.extend(offs.iter().skip(1).map(|o| point.y_c + o));
        Self::from_nodes(point, nodes, opts.n_gauss)
    }

    /// Grid on caller-supplied nodes. `y_c` is inserted if it is not a node.
    pub fn from_nodes(point: &SpectralPoint, mut nodes: Vec<f64>, n_gauss: usize) -> Result<Self> {
        if nodes.len() < 3 || nodes.iter().any(|y| !y.is_finite()) {
            return Err(Error::Grid("need at least three finite nodes".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        let yc = point.y_c;
        if yc <= nodes[0] || yc >= *nodes.last().unwrap() {
            return Err(Error::Grid(format!("grid does not cover y_c = {yc}")));
        }
        let pos = nodes.partition_point(|&y| y < yc);
        let center = if (nodes[pos] - yc).abs() <= 1e-13 * (1.0 + yc.abs()) {
            nodes[pos] = yc;
            pos
        } else {
            nodes.insert(pos, yc);
            pos
        };
        let rule = GaussRule::get(n_gauss);
        let n = n_gauss;
        let ncell = nodes.len() - 1;
        let mut gy = Vec::with_capacity(ncell * n);
        let mut gw = Vec::with_capacity(ncell * n);
        for k in 0..ncell {
            let h = nodes[k + 1] - nodes[k];
            for q in 0..n {
                gy.push(nodes[k] + h * rule.nodes[q]);
                gw.push(h * rule.weights[q]);
            }
        }
        let mk = |k: usize, _near: usize, far: usize, dir: f64| {
            let h = nodes[k + 1] - nodes[k];
            let uc2 = (0..n).map(|q| point.u_minus_c(gy[k * n + q]).powi(2)).collect();
            Cell { k, far, h, dir, uc2, uc2_far: point.u_minus_c(nodes[far]).powi(2) }
        };
        let right = (center..ncell).map(|k| mk(k, k, k + 1, 1.0)).collect();
        let left = (0..center).rev().map(|k| mk(k, k + 1, k, -1.0)).collect();
        let m_right = rule.integ.clone();
        let m_left = (0..n).map(|q| (0..n).map(|r| -(rule.weights[r] - rule.integ[q][r])).collect()).collect();
        Ok(PanelGrid { point: *point, nodes, center, n_gauss, gy, gw, right, left, m_right, m_left })
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Cell index containing `y` (clamped to the grid).
    pub fn cell_of(&self, y: f64) -> usize {
        let p = self.nodes.partition_point(|&x| x <= y);
        p.saturating_sub(1).min(self.n_cells() - 1)
    }

    /// Applies `T` to values given at the Gauss points.
    pub fn apply_t(&self, f: &[C64]) -> TApplied {
        let ng = self.gy.len();
        let nn = self.nodes.len();
        let mut out = TApplied { t_nodes: vec![ZERO; nn], t_gauss: vec![ZERO; ng], t22_nodes: vec![ZERO; nn], t22_gauss: vec![ZERO; ng] };
        let rule = GaussRule::get(self.n_gauss);
        let n = self.n_gauss;
        let mut g = vec![ZERO; n];
        let mut t22 = vec![ZERO; n];
        for (cells, m) in [(&self.right, &self.m_right), (&self.left, &self.m_left)] {
            let mut n_a = ZERO;
            let mut t_a = ZERO;
            for cell in cells.iter() {
                let base = cell.k * n;
                for r in 0..n {
                    g[r] = f[base + r] * cell.uc2[r];
                }
                for q in 0..n {
                    let mut s = ZERO;
                    for r in 0..n {
                        s += g[r] * m[q][r];
                    }
                    let nq = n_a + s * cell.h;
                    t22[q] = nq / cell.uc2[q];
                    out.t22_gauss[base + q] = t22[q];
                }
                for q in 0..n {
                    let mut s = ZERO;
                    for r in 0..n {
                        s += t22[r] * m[q][r];
                    }
                    out.t_gauss[base + q] = t_a + s * cell.h;
                }
                let mut sg = ZERO;
                let mut st = ZERO;
                for r in 0..n {
                    sg += g[r] * rule.weights[r];
                    st += t22[r] * rule.weights[r];
                }
                n_a += sg * (cell.h * cell.dir);
                t_a += st * (cell.h * cell.dir);
                out.t_nodes[cell.far] = t_a;
                out.t22_nodes[cell.far] = n_a / cell.uc2_far;
            }
        }
        out
    }

    /// Running integral `∫_{y_c}^y g` at Gauss points and nodes, for values of
    /// `g` given at the Gauss points.
    pub fn cumulative_from_center(&self, g: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n_gauss;
        let rule = GaussRule::get(n);
        let mut at_g = vec![ZERO; g.len()];
        let mut at_n = vec![ZERO; self.nodes.len()];
        for (cells, m) in [(&self.right, &self.m_right), (&self.left, &self.m_left)] {
            let mut acc = ZERO;
            for cell in cells.iter() {
                let base = cell.k * n;
                for q in 0..n {
                    let mut s = ZERO;
                    for r in 0..n {
                        s += g[base + r] * m[q][r];
                    }
                    at_g[base + q] = acc + s * cell.h;
                }
                let mut s = ZERO;
                for r in 0..n {
                    s += g[base + r] * rule.weights[r];
                }
                acc += s * (cell.h * cell.dir);
                at_n[cell.far] = acc;
            }
        }
        (at_g, at_n)
    }

    /// Running integrals from the left end, `∫_{y_0}^y g`, at Gauss points and nodes.
    pub fn cumulative_from_left(&self, g: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n_gauss;
        let rule = GaussRule::get(n);
        let mut at_g = vec![ZERO; g.len()];
        let mut at_n = vec![ZERO; self.nodes.len()];
        let mut acc = ZERO;
        for k in 0..self.n_cells() {
            let h = self.nodes[k + 1] - self.nodes[k];
            let base = k * n;
            for q in 0..n {
                let mut s = ZERO;
                for r in 0..n {
                    s += g[base + r] * rule.integ[q][r];
                }
                at_g[base + q] = acc + s * h;
            }
            let mut s = ZERO;
            for r in 0..n {
                s += g[base + r] * rule.weights[r];
            }
            acc += s * h;
            at_n[k + 1] = acc;
        }
        (at_g, at_n)
    }

    /// Running integrals to the right end, `∫_y^{y_N} g`, at Gauss points and nodes.
    pub fn cumulative_from_right(&self, g: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n_gauss;
        let rule = GaussRule::get(n);
        let mut at_g = vec![ZERO; g.len()];
        let mut at_n = vec![ZERO; self.nodes.len()];
        let mut acc = ZERO;
        for k in (0..self.n_cells()).rev() {
            let h = self.nodes[k + 1] - self.nodes[k];
            let base = k * n;
            let mut tot = ZERO;
            for r in 0..n {
                tot += g[base + r] * rule.weights[r];
            }
            for q in 0..n {
                let mut s = ZERO;
                for r in 0..n {
                    s += g[base + r] * (rule.weights[r] - rule.integ[q][r]);
                }
                at_g[base + q] = acc + s * h;
            }
            acc += tot * h;
            at_n[k] = acc;
        }
        (at_g, at_n)
    }

    /// Sum of `g` against the Gauss weights over the whole grid.
    pub fn integrate(&self, g: &[C64]) -> C64 {
        let mut s = ZERO;
        for (v, w) in g.iter().zip(&self.gw) {
            s += v * *w;
        }
        s
    }

    /// Interpolates a field known at the nodes and Gauss points to `y`, using
    /// the Gauss values and both end nodes of the enclosing cell.
    pub fn interp(&self, at_nodes: &[C64], at_gauss: &[C64], y: f64) -> C64 {
        let k = self.cell_of(y);
        let n = self.n_gauss;
        let mut xs = Vec::with_capacity(n + 2);
        let mut vs = Vec::with_capacity(n + 2);
        xs.push(self.nodes[k]);
        vs.push(at_nodes[k]);
        for q in 0..n {
            xs.push(self.gy[k * n + q]);
            vs.push(at_gauss[k * n + q]);
        }
        xs.push(self.nodes[k + 1]);
        vs.push(at_nodes[k + 1]);
        for (x, v) in xs.iter().zip(&vs) {
            if *x == y {
                return *v;
            }
        }
        let mut w = vec![0.0; xs.len()];
        quad::lagrange_weights(&xs, y, &mut w);
        let mut s = ZERO;
        for (a, b) in w.iter().zip(&vs) {
            s += b * *a;
        }
        s
    }
}

/// Converged `φ₁` with the derived fields used downstream.
#[derive(Debug, Clone)]
pub struct Phi1Field {
    pub point: SpectralPoint,
    pub grid: PanelGrid,
    /// node values
    pub phi1: Vec<C64>,
    pub dphi1: Vec<C64>,
    /// `φ₁ − 1`, accumulated without cancellation
    pub p: Vec<C64>,
    /// `(φ₁ − 1)/(u − c)²`, finite at `y_c`
    pub q: Vec<C64>,
    /// Gauss-point values of the same four fields
    pub g_phi1: Vec<C64>,
    pub g_dphi1: Vec<C64>,
    pub g_p: Vec<C64>,
    pub g_q: Vec<C64>,
    pub iterations: usize,
    /// last relative sup-update of the iteration
    pub update: f64,
    /// geometric mean ratio of successive updates over the last iterations
    pub contraction: f64,
    /// relative ODE defect (real `c` only; `NaN` otherwise)
    pub residual: f64,
}

/// Solves for `φ₁` on the default grid around the critical point.
pub fn solve_phi1(point: &SpectralPoint, opts: &SolveOptions) -> Result<Phi1Field> {
    let grid = PanelGrid::around(point, opts)?;
    solve_on(grid, opts.tol, opts.max_iter)
}

/// Solves for `φ₁` on a caller-supplied grid.
pub fn solve_phi1_on(point: &SpectralPoint, nodes: Vec<f64>, opts: &SolveOptions) -> Result<Phi1Field> {
    let grid = PanelGrid::from_nodes(point, nodes, opts.n_gauss)?;
    solve_on(grid, opts.tol, opts.max_iter)
}

fn solve_on(grid: PanelGrid, tol: f64, max_iter: usize) -> Result<Phi1Field> {
    if !(tol > 0.0) {
        return Err(Error::Data("tolerance must be positive".into()));
    }
    let point = grid.point;
    let a2 = point.alpha_f().powi(2);
    let mut f = vec![ONE; grid.gy.len()];
    let mut updates = Vec::new();
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    let mut applied = grid.apply_t(&f);
    while iterations < max_iter {
        iterations += 1;
        let mut upd: f64 = 0.0;
        for (fi, ti) in f.iter_mut().zip(&applied.t_gauss) {
            let nv = ONE + ti * a2;
            upd = upd.max((nv - *fi).norm() / nv.norm());
            *fi = nv;
        }
        if !upd.is_finite() {
            return Err(Error::NoConvergence { iterations, update: upd });
        }
        updates.push(upd);
        last = upd;
        applied = grid.apply_t(&f);
        if upd < tol {
            break;
        }
    }
    if last >= tol {
        return Err(Error::NoConvergence { iterations, update: last });
    }
    let contraction = {
        let k = updates.len();
        let tail: Vec<f64> = updates[k.saturating_sub(6)..].iter().copied().filter(|v| *v > 0.0).collect();
        if tail.len() >= 2 {
            (tail[tail.len() - 1] / tail[0]).powf(1.0 / (tail.len() - 1) as f64)
        } else {
            0.0
        }
    };
    // fields from the final application, consistent with φ₁ = 1 + p
    let g_p: Vec<C64> = applied.t_gauss.iter().map(|t| t * a2).collect();
    let g_phi1: Vec<C64> = g_p.iter().map(|p| ONE + p).collect();
    let g_dphi1: Vec<C64> = applied.t22_gauss.iter().map(|t| t * a2).collect();
    let g_q: Vec<C64> = g_p.iter().zip(&grid.gy).map(|(p, &y)| p / point.u_minus_c(y).powi(2)).collect();
    let p: Vec<C64> = applied.t_nodes.iter().map(|t| t * a2).collect();
    let phi1: Vec<C64> = p.iter().map(|p| ONE + p).collect();
    let mut dphi1: Vec<C64> = applied.t22_nodes.iter().map(|t| t * a2).collect();
    let mut q: Vec<C64> = p.iter().zip(&grid.nodes).map(|(p, &y)| p / point.u_minus_c(y).powi(2)).collect();
    let cc = grid.center;
    dphi1[cc] = ZERO;
    q[cc] = if point.is_real() {
        let d = 1.0 - point.c.re * point.c.re;
        C64::new(a2 / (6.0 * d * d), 0.0)
    } else {
        ZERO
    };
    let mut field =
        Phi1Field { point, grid, phi1, dphi1, p, q, g_phi1, g_dphi1, g_p, g_q, iterations, update: last, contraction, residual: f64::NAN };
    if point.is_real() {
        field.residual = ode_residual(&field);
    }
    Ok(field)
}

/// Samples of the solution fields at an arbitrary position.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub phi1: C64,
    pub dphi1: C64,
    pub p: C64,
    pub q: C64,
}

impl Phi1Field {
    pub fn y_c(&self) -> f64 {
        self.point.y_c
    }

    pub fn span(&self) -> (f64, f64) {
        (self.grid.nodes[0], *self.grid.nodes.last().unwrap())
    }

    pub fn contains(&self, y: f64) -> bool {
        let (a, b) = self.span();
        y >= a && y <= b
    }

    /// Interpolated fields at `y` (within the grid span).
    pub fn sample(&self, y: f64) -> Result<FieldSample> {
        if !self.contains(y) {
            return Err(Error::Grid(format!("y = {y} outside the solved span")));
        }
        let g = &self.grid;
        Ok(FieldSample {
            phi1: g.interp(&self.phi1, &self.g_phi1, y),
            dphi1: g.interp(&self.dphi1, &self.g_dphi1, y),
            p: g.interp(&self.p, &self.g_p, y),
            q: g.interp(&self.q, &self.g_q, y),
        })
    }

    /// `φ₁` at `y`.
    pub fn phi1_at(&self, y: f64) -> Result<C64> {
        Ok(self.sample(y)?.phi1)
    }
}

/// `(φ, ∂_y φ)` at `y` for `φ = (u − c)φ₁`.
pub fn phi_hom(field: &Phi1Field, y: f64) -> Result<(C64, C64)> {
    let s = field.sample(y)?;
    let uc = field.point.u_minus_c(y);
    Ok((uc * s.phi1, s.phi1 * flow::du(y) + uc * s.dphi1))
}

/// Half-width of the band around `y_c` excluded from [`ode_residual`].
pub const RESIDUAL_BAND: f64 = 1e-3;

/// Relative defect `|φ₁″ − α²φ₁ + 2u′φ₁′/(u − c)| / (α²|φ₁|)` at the nodes,
/// with `φ₁″` from five-point differences of the node values and `φ₁′` from
/// the converged field. Nodes within [`RESIDUAL_BAND`] of `y_c` and the two
/// nodes at each end are skipped.
pub fn ode_residual(field: &Phi1Field) -> f64 {
    residual_of(field.point, &field.grid.nodes, &field.phi1, &field.dphi1)
}

/// Same defect for arbitrary node values (used to check un-iterated input).
pub fn residual_of(point: SpectralPoint, nodes: &[f64], phi1: &[C64], dphi1: &[C64]) -> f64 {
    let a2 = point.alpha_f().powi(2);
    let mut worst: f64 = 0.0;
    for j in 2..nodes.len().saturating_sub(2) {
        let y = nodes[j];
        if (y - point.y_c).abs() < RESIDUAL_BAND {
            continue;
        }
        let xs = &nodes[j - 2..=j + 2];
        let w = quad::fd_weights(y, xs, 2);
        let mut d2 = ZERO;
        for i in 0..5 {
            d2 += phi1[j - 2 + i] * w[2][i];
        }
        let defect = d2 - phi1[j] * a2 + dphi1[j] * (2.0 * flow::du(y)) / point.u_minus_c(y);
        worst = worst.max(defect.norm() / (a2 * phi1[j].norm()));
    }
    worst
}

/// Reference evaluation of `T f (y)` through the double-parameter kernel
/// form with `n × n` Gauss–Legendre points. Accurate when `|y − y_c|` is
/// moderate; used to cross-check the panel discretisation.
pub fn apply_t_kernel_form<F: Fn(f64) -> C64>(point: &SpectralPoint, y: f64, f: F, n: usize) -> C64 {
    let rule = GaussRule::get(n);
    let d = y - point.y_c;
    if d == 0.0 {
        return ZERO;
    }
    let denom = point.u_minus_c(y);
    let mut acc = ZERO;
    for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
        // inner variable z = y_c + s d, outer w = y_c + t s d
        let z = point.y_c + s * d;
        let uz = point.u_minus_c(z);
        let mut inner = ZERO;
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let w = point.y_c + t * s * d;
            let ratio = point.u_minus_c(w) / uz;
            inner += f(w) * ratio * ratio * wt;
        }
        // ∫_{y_c}^z f(w)(u(w)−c)²dw/(u(z)−c)² = s d ∫_0^1 f(y_c + t s d) R² dt
        acc += inner * (s * ws);
    }
    let _ = denom;
    acc * (d * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_phi(y: f64) -> f64 {
        0.5 * (y.sinh() + y / y.cosh())
    }

    #[test]
    fn closed_form_alpha_one() {
        let pt = SpectralPoint::real(0.0, 1).unwrap();
        let f = solve_phi1(&pt, &SolveOptions::default()).unwrap();
        let v = f.phi1_at(1.0).unwrap();
        assert!((v.re - 1.196_999_381_527_282_8).abs() < 1e-10);
        let (phi, _) = phi_hom(&f, 1.0).unwrap();
        assert!((phi.re - closed_form_phi(1.0)).abs() < 1e-10);
        let (phim, _) = phi_hom(&f, -1.0).unwrap();
        assert!((phim.re + phi.re).abs() < 1e-12);
    }

    #[test]
    fn anchored_at_critical_point() {
        let pt = SpectralPoint::new(C64::new(0.3, 0.02), 2).unwrap();
        let f = solve_phi1(&pt, &SolveOptions::default()).unwrap();
        let c = f.grid.center;
        assert_eq!(f.phi1[c], ONE);
        assert_eq!(f.dphi1[c], ZERO);
    }

    #[test]
    fn kernel_form_matches_panels() {
        let pt = SpectralPoint::new(C64::new(0.4, 0.05), 1).unwrap();
        let grid = PanelGrid::around(&pt, &SolveOptions::default()).unwrap();
        let fun = |y: f64| C64::new((0.3 * y).cos(), 0.1 * y);
        let fv: Vec<C64> = grid.gy.iter().map(|&y| fun(y)).collect();
        let out = grid.apply_t(&fv);
        for &y in &[pt.y_c + 0.7, pt.y_c - 0.4] {
            let k = grid.nodes.iter().position(|&x| (x - y).abs() < 1e-9);
            let panel = match k {
                Some(k) => out.t_nodes[k],
                None => grid.interp(&out.t_nodes, &out.t_gauss, y),
            };
            let kern = apply_t_kernel_form(&pt, y, fun, 24);
            assert!((panel - kern).norm() < 1e-9 * (1.0 + kern.norm()), "{panel} vs {kern}");
        }
    }

    #[test]
    fn t_of_one_near_origin() {
        let pt = SpectralPoint::real(0.0, 1).unwrap();
        for &y in &[1e-2, 1e-3] {
            let v = apply_t_kernel_form(&pt, y, |_| ONE, 16);
            assert!((v.re / (y * y) - 1.0 / 6.0).abs() < 1e-3);
        }
    }
}
