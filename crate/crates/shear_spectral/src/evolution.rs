//! Stream function of each mode from the spectral representation: the
//! oscillatory `c`-integral for `α ≥ 2`, and for `α = 1` the split into the
//! eigen-projection, the rank-one term `a₀f₁` and regular integrals.

use crate::direct::{self, UniformGrid};
use crate::flow;
use crate::kernels::{self, chi0, chi1, Column, KernelTable};
use crate::quad::{self, GaussRule};
use crate::rayleigh::SolveOptions;
use crate::wronskian::{DerivativeModel, C_SWITCH, FD_STEP};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Named analytic initial-data families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `e^{−y²}`
    Gaussian,
    /// `sinh(y) e^{−y²}`
    OddGaussian,
    /// `2 sech³ y`
    SechCubed,
    /// `exp(1 − 1/(1 − (y/2)²))` on `|y| < 2`
    Bump,
}

impl Family {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Family::Gaussian => (-y * y).exp(),
            Family::OddGaussian => y.sinh() * (-y * y).exp(),
            Family::SechCubed => 2.0 / y.cosh().powi(3),
            Family::Bump => {
                let s = y / 2.0;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub family: Family,
    #[serde(default = "one")]
    pub coeff: f64,
    #[serde(default)]
    pub coeff_im: f64,
}

fn one() -> f64 {
    1.0
}

/// Initial vorticity of one mode: a combination of families or sampled values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSpec {
    Families(Vec<Term>),
    /// values on ascending `ys`, zero outside, six-point interpolation between
    Sampled {
        ys: Vec<f64>,
        re: Vec<f64>,
        im: Vec<f64>,
    },
}

impl DataSpec {
    pub fn family(f: Family) -> Self {
        DataSpec::Families(vec![Term { family: f, coeff: 1.0, coeff_im: 0.0 }])
    }

    pub fn validate(&self) -> Result<()> {
        if let DataSpec::Sampled { ys, re, im } = self {
            if ys.len() < 6 || re.len() != ys.len() || (im.len() != ys.len() && !im.is_empty()) {
                return Err(Error::Data("sampled data needs ≥ 6 points and matching lengths".into()));
            }
            if ys.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Data("sampled ys must be strictly ascending".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, y: f64) -> C64 {
        match self {
            DataSpec::Families(terms) => terms.iter().map(|t| C64::new(t.coeff, t.coeff_im) * t.family.eval(y)).sum(),
            DataSpec::Sampled { ys, re, im } => {
                let n = ys.len();
                if y < ys[0] || y > ys[n - 1] {
                    return ZERO;
                }
                let p = ys.partition_point(|&x| x <= y);
                let s = p.saturating_sub(3).min(n - 6);
                let mut w = [0.0; 6];
                quad::lagrange_weights(&ys[s..s + 6], y, &mut w);
                let mut v = ZERO;
                for k in 0..6 {
                    let imv = if im.is_empty() { 0.0 } else { im[s + k] };
                    v += C64::new(re[s + k], imv) * w[k];
                }
                v
            }
        }
    }
}

/// Initial vorticity of mode `α` on the output grid with its `a₀`, `b₀`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialData {
    pub alpha: u32,
    pub spec: DataSpec,
    pub grid: UniformGrid,
    pub omega0: Vec<C64>,
    pub a0: C64,
    pub b0: C64,
}

impl InitialData {
    pub fn new(alpha: u32, spec: DataSpec, grid: UniformGrid) -> Result<Self> {
        spec.validate()?;
        let omega0 = grid.sample(|y| spec.eval(y));
        let (a0, b0) = a0_b0(&omega0, &grid)?;
        Ok(InitialData { alpha, spec, grid, omega0, a0, b0 })
    }

    pub fn eval(&self, y: f64) -> C64 {
        self.spec.eval(y)
    }
}

/// `a₀ = p.v.∫ω₀/sinh` and `b₀ = ω₀(0)` from grid values.
pub fn a0_b0(omega0: &[C64], grid: &UniformGrid) -> Result<(C64, C64)> {
    direct::ab_functionals(omega0, grid)
}

/// `S(t) = −i∫ sin(ct) χ₀(c)(1 − c²)²/c dc`.
pub fn s_of(t: f64) -> C64 {
    let rule = GaussRule::get(16);
    let mut acc = 0.0;
    for (a, b) in [(0.0, 0.25), (0.25, 0.5)] {
        let panels = ((b - a) * t.abs() / (2.0 * PI) * 10.0 / 16.0).ceil().max(4.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            acc += rule.integrate(lo, lo + h, |c| {
                let d = 1.0 - c * c;
                (c * t).sin() * chi0(c) * d * d / c
            });
        }
    }
    C64::new(0.0, -2.0 * acc)
}

/// Layout of the `c`-quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CGridOptions {
    pub c_max: f64,
    /// boundary of the central region; beyond it `c = ±(1 − s²)`
    pub c_inner: f64,
    pub n_gauss: usize,
    pub min_panels: usize,
    pub points_per_oscillation: f64,
    /// below `|c| = c_switch` the mode-1 quotients come from the difference model
    pub c_switch: f64,
    /// every panel is split into this many equal parts
    pub subdivide: usize,
}

impl Default for CGridOptions {
    fn default() -> Self {
        CGridOptions {
            c_max: 0.999,
            c_inner: 0.9,
            n_gauss: 8,
            min_panels: 16,
            points_per_oscillation: 10.0,
            c_switch: C_SWITCH,
            subdivide: 1,
        }
    }
}

/// Quadrature nodes and weights on `[−c_max, c_max]` for `α`, resolving
/// `e^{−iαct}` up to `t_max`. Panel ends include `u(y_j)` for every output
/// node so the kink of `Γ(y_j, ·)` at `c = u(y_j)` falls on a panel boundary.
pub fn c_quadrature(alpha: u32, t_max: f64, y_grid: &[f64], o: &CGridOptions) -> Result<Vec<(f64, f64)>> {
    if !(o.c_inner > 0.0 && o.c_inner < o.c_max && o.c_max < 1.0) {
        return Err(Error::Config(format!("bad c-grid limits c_inner = {}, c_max = {}", o.c_inner, o.c_max)));
    }
    if !(o.c_switch > 0.0 && o.c_switch <= 10.0 * FD_STEP) {
        return Err(Error::Config(format!("c_switch = {} outside (0, {}]", o.c_switch, 10.0 * FD_STEP)));
    }
    if o.subdivide == 0 {
        return Err(Error::Config("subdivide must be ≥ 1".into()));
    }
    let rule = GaussRule::get(o.n_gauss);
    let osc = 2.0 * PI / (alpha as f64 * t_max.max(1e-9));
    let h_c = (o.n_gauss as f64 / o.points_per_oscillation * osc).min(2.0 * o.c_inner / o.min_panels as f64);
    let mut out = Vec::new();
    let mut push_panels = |bps: &mut Vec<f64>, max_w: f64, map: &dyn Fn(f64) -> (f64, f64)| {
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for w in bps.windows(2) {
            let m = ((w[1] - w[0]) / max_w).ceil().max(1.0) as usize * o.subdivide;
            let h = (w[1] - w[0]) / m as f64;
            for k in 0..m {
                let lo = w[0] + k as f64 * h;
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let (c, jac) = map(lo + x * h);
                    out.push((c, wt * h * jac));
                }
            }
        }
    };
    let mut central = vec![-o.c_inner, o.c_inner, -0.5, -0.25, -o.c_switch, 0.0, o.c_switch, 0.25, 0.5];
    central.extend(y_grid.iter().map(|&y| flow::u(y)).filter(|c| c.abs() < o.c_inner));
    push_panels(&mut central, h_c, &|c| (c, 1.0));
    let s_lo = (1.0 - o.c_max).sqrt();
    let s_hi = (1.0 - o.c_inner).sqrt();
    for sign in [-1.0, 1.0] {
        let mut bps = vec![s_lo, s_hi];
        bps.extend(
            y_grid.iter().map(|&y| flow::u(y)).filter(|&c| c * sign > o.c_inner && c * sign < o.c_max).map(|c| (1.0 - c.abs()).sqrt()),
        );
        let max_w = (h_c / (2.0 * s_hi)).min((s_hi - s_lo) / 4.0);
        push_panels(&mut bps, max_w, &|s| (sign * (1.0 - s * s), 2.0 * s));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Stream function of one mode at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeField {
    pub alpha: u32,
    pub t: f64,
    pub grid: UniformGrid,
    pub psi: Vec<C64>,
    /// `∂_y ψ̂` from `∂_y Γ` inside the `c`-integral
    pub dpsi: Vec<C64>,
    pub parts: Option<ModeParts>,
}

impl ModeField {
    pub fn l2(&self) -> f64 {
        direct::l2_norm(&self.psi, self.grid.h)
    }

    /// `H¹` norm with the spectrally computed derivative.
    pub fn h1(&self) -> f64 {
        h1_from(&self.psi, &self.dpsi, self.grid.h)
    }
}

/// `(‖v‖² + ‖v′‖²)^{1/2}`.
pub fn h1_from(v: &[C64], dv: &[C64], h: f64) -> f64 {
    let a = direct::l2_norm(v, h);
    let b = direct::l2_norm(dv, h);
    (a * a + b * b).sqrt()
}

/// `α = 1` bookkeeping: `psi = projection + rank_one + regular`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeParts {
    pub projection: Vec<C64>,
    pub rank_one: Vec<C64>,
    pub regular: Vec<C64>,
    pub d_projection: Vec<C64>,
    pub d_rank_one: Vec<C64>,
    pub d_regular: Vec<C64>,
}

impl ModeParts {
    /// `(v, ∂_y v)` for `psi` minus the projection and, if `rank_one`, minus `a₀f₁`.
    pub fn remainder(&self, field: &ModeField, rank_one: bool) -> (Vec<C64>, Vec<C64>) {
        let k = if rank_one { 1.0 } else { 0.0 };
        let v = (0..field.psi.len()).map(|j| field.psi[j] - self.projection[j] - self.rank_one[j] * k).collect();
        let dv = (0..field.psi.len()).map(|j| field.dpsi[j] - self.d_projection[j] - self.d_rank_one[j] * k).collect();
        (v, dv)
    }
}

/// `((a₀ + iπb₀)/(2πi)) sech y`.
pub fn eigen_projection(a0: C64, b0: C64, ys: &[f64]) -> Vec<C64> {
    let k = (a0 + I * PI * b0) / (I * 2.0 * PI);
    ys.iter().map(|&y| k / y.cosh()).collect()
}

/// Precomputed data for evaluating `ψ̂(t, 1, ·)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeOneTable {
    pub base: KernelTable,
    pub a0: C64,
    pub b0: C64,
    /// per `c`: the three regular density terms
    pub dens: Vec<[C64; 3]>,
    /// per `c`: `χ₀(1 − c²)²(Γ(y_j, c) − Γ(y_j, 0))/c`
    pub quot: Vec<Vec<f64>>,
    /// same for `∂_y Γ`
    pub dquot: Vec<Vec<f64>>,
    pub a_tilde: Vec<f64>,
    pub a_ttilde: Vec<f64>,
    pub t_tilde: Vec<C64>,
}

/// Table for one mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModeTable {
    General(KernelTable),
    One(ModeOneTable),
}

impl ModeTable {
    pub fn alpha(&self) -> u32 {
        match self {
            ModeTable::General(k) => k.alpha,
            ModeTable::One(m) => m.base.alpha,
        }
    }

    pub fn kernel(&self) -> &KernelTable {
        match self {
            ModeTable::General(k) => k,
            ModeTable::One(m) => &m.base,
        }
    }

    /// Builds the table for `data.alpha` resolving times up to `t_max`.
    pub fn build(data: &InitialData, t_max: f64, copts: &CGridOptions, opts: &SolveOptions) -> Result<Self> {
        let alpha = data.alpha;
        if alpha == 0 {
            return Err(Error::Data("mode α = 0 is stationary".into()));
        }
        let ys = &data.grid.ys;
        let nodes = c_quadrature(alpha, t_max, ys, copts)?;
        let f = |y: f64| data.eval(y);
        let base = KernelTable::build(alpha, &nodes, t_max, ys, &f, opts)?;
        if alpha >= 2 {
            return Ok(ModeTable::General(base));
        }
        // difference model at the embedding eigenvalue: components A, 𝒯(ω₀).
        // Γ(y, ·) has a kink at c = u(y), so its quotient is taken directly.
        let kk = 10i64;
        let cols: Result<Vec<Column>> = (-kk..=kk).into_par_iter().map(|k| kernels::column(k as f64 * FD_STEP, 1, &f, ys, opts)).collect();
        let cols = cols?;
        let rows: Vec<Vec<C64>> = cols.iter().map(|c| vec![C64::new(c.a, 0.0), c.t.pv]).collect();
        let t0 = cols[kk as usize].t.pv;
        // Γ(y, 0) = −sech y
        let gamma0: Vec<f64> = ys.iter().map(|y| -1.0 / y.cosh()).collect();
        let dgamma0: Vec<f64> = ys.iter().map(|y| y.tanh() / y.cosh()).collect();
        let ny = ys.len();
        let model = DerivativeModel::new(FD_STEP, rows)?;
        let n = base.c_grid.len();
        let mut dens = Vec::with_capacity(n);
        let mut quot = Vec::with_capacity(n);
        let mut dquot = Vec::with_capacity(n);
        let (mut at, mut att, mut tt) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let a0 = data.a0;
        for i in 0..n {
            let c = base.c_grid[i];
            let a = base.a_vals[i];
            let t = base.t_vals[i];
            let fc = base.f_c[i];
            let d2 = (1.0 - c * c).powi(2);
            let x0 = chi0(c);
            let x1 = chi1(c);
            let near = c.abs() < copts.c_switch;
            let q = if near { Some(model.quotient(c)) } else { None };
            let a_t = if let Some(q) = &q { q[0].re } else { a / c };
            let a_tt = if near { model.second_quotient(c)[0].re } else { a / (c * c) };
            let t_t = if let Some(q) = &q { q[1] } else { (t - t0) / c };
            let k1 = if x1 == 0.0 { ZERO } else { -kernels::lambda1_from(c, a, t, fc) * (x1 * d2 / (a * a + 4.0 * PI * PI * c * c)) };
            let l1t = kernels::lambda1_tilde_from(c, a_tt, t_t, fc);
            let k2 = -l1t * (x0 * d2 / (a_t * a_t + 4.0 * PI * PI));
            let k3 = a0 * (x0 * d2 * c * a_tt * a_tt / (2.0 * PI * PI * (a_t * a_t + 4.0 * PI * PI)));
            dens.push([k1, k2, k3]);
            let (row, drow): (Vec<f64>, Vec<f64>) = if x0 == 0.0 {
                (vec![0.0; ny], vec![0.0; ny])
            } else {
                (
                    base.gamma[i].iter().zip(&gamma0).map(|(g, g0)| x0 * d2 * (g - g0) / c).collect(),
                    base.dgamma[i].iter().zip(&dgamma0).map(|(g, g0)| x0 * d2 * (g - g0) / c).collect(),
                )
            };
            quot.push(row);
            dquot.push(drow);
            at.push(a_t);
            att.push(a_tt);
            tt.push(t_t);
        }
        Ok(ModeTable::One(ModeOneTable { base, a0, b0: data.b0, dens, quot, dquot, a_tilde: at, a_ttilde: att, t_tilde: tt }))
    }
}

fn check_t(t: f64, table: &KernelTable) -> Result<()> {
    if t.abs() > table.t_max * (1.0 + 1e-9) {
        return Err(Error::Config(format!(
            "t = {t} exceeds the resolved horizon {} of the c-grid (fewer than the required points per oscillation)",
            table.t_max
        )));
    }
    Ok(())
}

/// `Σ_i w_i e^{−iαc_i t} d_i row_i(y_j)`.
fn oscillatory_sum<R: AsRef<[f64]>>(table: &KernelTable, t: f64, dens: impl Fn(usize) -> C64, rows: &[R]) -> Vec<C64> {
    let ny = table.y_grid.len();
    let mut out = vec![ZERO; ny];
    let a = table.alpha as f64;
    for (i, row) in rows.iter().enumerate() {
        let d = dens(i);
        if d == ZERO {
            continue;
        }
        let c = table.c_grid[i];
        let coef = C64::from_polar(table.weights[i], -a * c * t) * d;
        for (o, g) in out.iter_mut().zip(row.as_ref()) {
            *o += coef * *g;
        }
    }
    out
}

/// `f₁(t, y) = (Ψ(t, y) + (S(t) + iπ) sech y)/(2π²)` on the table grid,
/// with its `y`-derivative.
pub fn f1_eval(t: f64, table: &ModeOneTable) -> Result<(Vec<C64>, Vec<C64>)> {
    check_t(t, &table.base)?;
    let m1 = |_| C64::new(-1.0, 0.0);
    let psi = oscillatory_sum(&table.base, t, m1, &table.quot);
    let dpsi = oscillatory_sum(&table.base, t, m1, &table.dquot);
    let s = s_of(t) + I * PI;
    let k = 1.0 / (2.0 * PI * PI);
    let ys = &table.base.y_grid;
    let f: Vec<C64> = psi.iter().zip(ys).map(|(p, &y)| (p + s / y.cosh()) * k).collect();
    let df: Vec<C64> = dpsi.iter().zip(ys).map(|(p, &y)| (p - s * (y.tanh() / y.cosh())) * k).collect();
    Ok((f, df))
}

/// `ψ̂(t, α, ·)` from the table.
pub fn psi_mode(t: f64, table: &ModeTable, grid: &UniformGrid) -> Result<ModeField> {
    let k = table.kernel();
    check_t(t, k)?;
    if grid.ys != k.y_grid {
        return Err(Error::Grid("output grid differs from the table grid".into()));
    }
    match table {
        ModeTable::General(k) => {
            let psi = oscillatory_sum(k, t, |i| k.mu_vals[i], &k.gamma);
            let dpsi = oscillatory_sum(k, t, |i| k.mu_vals[i], &k.dgamma);
            Ok(ModeField { alpha: k.alpha, t, grid: grid.clone(), psi, dpsi, parts: None })
        }
        ModeTable::One(m) => {
            let dens = |i: usize| m.dens[i][0] + m.dens[i][1] + m.dens[i][2];
            let regular = oscillatory_sum(&m.base, t, dens, &m.base.gamma);
            let d_regular = oscillatory_sum(&m.base, t, dens, &m.base.dgamma);
            let (f1, df1) = f1_eval(t, m)?;
            let rank_one: Vec<C64> = f1.iter().map(|v| v * m.a0).collect();
            let d_rank_one: Vec<C64> = df1.iter().map(|v| v * m.a0).collect();
            let projection = eigen_projection(m.a0, m.b0, &grid.ys);
            let d_projection: Vec<C64> = projection.iter().zip(&grid.ys).map(|(p, &y)| -p * y.tanh()).collect();
            let n = grid.len();
            let psi = (0..n).map(|j| projection[j] + rank_one[j] + regular[j]).collect();
            let dpsi = (0..n).map(|j| d_projection[j] + d_rank_one[j] + d_regular[j]).collect();
            let parts = ModeParts { projection, rank_one, regular, d_projection, d_rank_one, d_regular };
            Ok(ModeField { alpha: 1, t, grid: grid.clone(), psi, dpsi, parts: Some(parts) })
        }
    }
}

/// `ψ̂` at several times, in parallel.
pub fn psi_series(ts: &[f64], table: &ModeTable, grid: &UniformGrid) -> Result<Vec<ModeField>> {
    ts.par_iter().map(|&t| psi_mode(t, table, grid)).collect()
}

/// Squared velocity norms `(‖V‖², ‖V²‖²)` assembled from modes `±α` sharing
/// a grid and a time.
pub fn velocity_norms(fields: &[ModeField]) -> Result<(f64, f64)> {
    let mut v = 0.0;
    let mut v2 = 0.0;
    if let Some(f0) = fields.first() {
        for f in fields {
            if f.grid != f0.grid || f.t != f0.t {
                return Err(Error::Grid("velocity norms need a shared grid and time".into()));
            }
            let a2 = (f.alpha as f64).powi(2);
            let l = direct::l2_norm(&f.psi, f.grid.h).powi(2);
            let d = direct::l2_norm(&f.dpsi, f.grid.h).powi(2);
            v += 2.0 * (a2 * l + d);
            v2 += 2.0 * a2 * l;
        }
    }
    Ok((v, v2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_vanishes_at_zero_and_tends_to_minus_i_pi() {
        assert_eq!(s_of(0.0), ZERO);
        for t in [10.0, 100.0, 1000.0] {
            let e = (s_of(t) + I * PI).norm() * t * t;
            assert!(e < 50.0, "{t} {e}");
        }
    }

    #[test]
    fn projection_coefficients() {
        let ys = [0.0, 1.0];
        let p = eigen_projection(C64::new(0.0, 2.0 * PI), ZERO, &ys);
        assert!((p[1] - 1.0 / 1f64.cosh()).norm() < 1e-15);
        assert!(eigen_projection(ZERO, ZERO, &ys).iter().all(|z| *z == ZERO));
    }

    #[test]
    fn c_grid_covers_interval() {
        let g = UniformGrid::new(20.0, 0.05).unwrap();
        let nodes = c_quadrature(2, 10.0, &g.ys, &CGridOptions::default()).unwrap();
        let w: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((w - 2.0 * 0.999).abs() < 1e-12);
        let m: f64 = nodes.iter().map(|n| n.1 * n.0.powi(4)).sum();
        assert!((m - 2.0 * 0.999f64.powi(5) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_norm_gaussian() {
        let g = UniformGrid::new(20.0, 0.01).unwrap();
        let psi = g.sample(|y| C64::new((-y * y).exp(), 0.0));
        let f = ModeField { alpha: 2, t: 0.0, grid: g, dpsi: psi.clone(), psi, parts: None };
        let (_, v2) = velocity_norms(&[f]).unwrap();
        assert!((v2 - 8.0 * (PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sampled_data_interpolates() {
        let ys: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
        let re: Vec<f64> = ys.iter().map(|&y| Family::Gaussian.eval(y)).collect();
        let d = DataSpec::Sampled { ys, re, im: vec![] };
        assert!((d.eval(0.3123).re - (-0.3123f64 * 0.3123).exp()).abs() < 1e-8);
        assert_eq!(d.eval(11.0), ZERO);
    }
}
