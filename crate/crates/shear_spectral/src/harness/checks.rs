//! Verification checks. Each returns one or more [`Check`] rows naming the
//! config key its threshold came from.

use super::config::Tolerances;
use super::fit::{decay_fit, log_times, DecayFit};
use crate::direct::{self, UniformGrid};
use crate::evolution::{self, psi_series, s_of, InitialData, ModeTable};
use crate::flow::SpectralPoint;
use crate::kernels::{self, cal_t, solve_inhomogeneous};
use crate::rayleigh::{phi_hom, solve_phi1, SolveOptions};
use crate::wronskian::{self, richardson, wronskian_direct, wronskian_via_w1};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// One pass/fail row of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// `[max]` for upper bounds, `[lo, hi]` for intervals, `[min]` with `at_least`
    pub threshold: Vec<f64>,
    pub at_least: bool,
    /// config key of the threshold
    pub tolerance_key: String,
    pub detail: String,
    /// truncation and envelope constants the value depends on
    pub params: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl Check {
    fn new(name: &str, value: f64, threshold: Vec<f64>, key: &str) -> Self {
        Check {
            name: name.to_string(),
            passed: false,
            value,
            threshold,
            at_least: false,
            tolerance_key: format!("tolerances.{key}"),
            detail: String::new(),
            params: BTreeMap::new(),
            error: None,
            seconds: 0.0,
        }
    }

    /// Passes when `value < tol`.
    pub fn below(name: &str, value: f64, tol: f64, key: &str) -> Self {
        let mut c = Self::new(name, value, vec![tol], key);
        c.passed = value < tol;
        c
    }

    /// Passes when `value ≥ min`.
    pub fn at_least(name: &str, value: f64, min: f64, key: &str) -> Self {
        let mut c = Self::new(name, value, vec![min], key);
        c.at_least = true;
        c.passed = value >= min;
        c
    }

    /// Passes when `lo ≤ value ≤ hi`.
    pub fn within(name: &str, value: f64, w: [f64; 2], key: &str) -> Self {
        let mut c = Self::new(name, value, w.to_vec(), key);
        c.passed = value >= w[0] && value <= w[1];
        c
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, err: &Error) -> Self {
        let mut c = Self::new(name, f64::NAN, Vec::new(), "");
        c.tolerance_key.clear();
        c.error = Some(err.to_string());
        c
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn param(mut self, k: &str, v: f64) -> Self {
        self.params.insert(k.to_string(), v);
        self
    }

    /// One-line summary.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        if let Some(e) = &self.error {
            return format!("{status} {}: error: {e}", self.name);
        }
        let bound = match (self.threshold.as_slice(), self.at_least) {
            ([m], true) => format!(">= {m:.3e}"),
            ([m], false) => format!("< {m:.3e}"),
            ([lo, hi], _) => format!("in [{lo}, {hi}]"),
            _ => String::new(),
        };
        let mut s = format!("{status} {}: {:.6e} {bound} ({})", self.name, self.value, self.tolerance_key);
        if !self.detail.is_empty() {
            s.push_str(" ");
            s.push_str(&self.detail);
        }
        s
    }
}

/// Runs `f`, recording its wall time on every returned row; an error
/// becomes a single failed row named `name`.
pub fn timed<F: FnOnce() -> Result<Vec<Check>>>(name: &str, f: F) -> Vec<Check> {
    let t0 = Instant::now();
    let out = f();
    let dt = t0.elapsed().as_secs_f64();
    match out {
        Ok(mut v) => {
            for c in &mut v {
                c.seconds = dt;
            }
            v
        }
        Err(e) => {
            let mut c = Check::failed(name, &e);
            c.seconds = dt;
            vec![c]
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// `φ(y, 0)` at `α = 1` against `½(sinh y + y/cosh y)` on 200 nodes of `[−5, 5]`.
pub fn closed_form_phi(tol: &Tolerances, opts: &SolveOptions) -> Result<Vec<Check>> {
    let field = solve_phi1(&SpectralPoint::real(0.0, 1)?, opts)?;
    let mut worst: f64 = 0.0;
    for y in linspace(-5.0, 5.0, 200) {
        let (phi, _) = phi_hom(&field, y)?;
        let exact = 0.5 * (y.sinh() + y / y.cosh());
        worst = worst.max((phi - exact).norm() / exact.abs());
    }
    Ok(vec![Check::below("phi(y,0) closed form", worst, tol.closed_form, "closed_form")])
}

/// `ω₀ = 2 sech³` at `α = 1` stays put under the direct evolution up to `t = 10`.
pub fn steadiness(tol: &Tolerances, grid: &UniformGrid, dt: f64) -> Result<Vec<Check>> {
    let w0 = grid.sample(|y| C64::new(2.0 / y.cosh().powi(3), 0.0));
    let traj = direct::evolve(&w0, 1, grid, &[10.0], dt)?;
    let diff: Vec<C64> = traj[0].omega.iter().zip(&w0).map(|(a, b)| a - b).collect();
    let drift = direct::l2_norm(&diff, grid.h) / direct::l2_norm(&w0, grid.h);
    Ok(vec![Check::below("eigenfunction steadiness", drift, tol.steadiness, "steadiness").param("dt", dt).param("h", grid.h)])
}

/// `W(iε, 1)/(iε)` tends to `2πi`; Richardson over `ε ∈ {1e−1, 1e−2, 1e−3}`.
pub fn wronskian_limit(tol: &Tolerances, opts: &SolveOptions) -> Result<Vec<Check>> {
    let eps = [1e-1, 1e-2, 1e-3];
    let vals: Result<Vec<C64>> = eps
        .iter()
        .map(|&e| {
            let c = C64::new(0.0, e);
            let field = solve_phi1(&SpectralPoint::new(c, 1)?, opts)?;
            Ok(wronskian_via_w1(&field)? / c)
        })
        .collect();
    let vals = vals?;
    let target = 2.0 * PI * I;
    let ex = richardson(&vals, 10.0);
    let raw = (vals[2] - target).norm() / (2.0 * PI);
    Ok(vec![Check::below("W(ie,1)/(ie) -> 2 pi i", (ex - target).norm() / (2.0 * PI), tol.wronskian_limit, "wronskian_limit")
        .detail(format!("raw at 1e-3: {raw:.3e}"))])
}

/// `A(0, 1) = 0` and `∂_c A(0, 1) = 0`.
pub fn a_at_zero(tol: &Tolerances, opts: &SolveOptions) -> Result<Vec<Check>> {
    let a = wronskian::a_value(0.0, 1, opts)?;
    let (d1, _) = wronskian::a_derivatives(0.0, 1, opts)?;
    Ok(vec![
        Check::below("A(0,1)", a.abs(), tol.a_zero, "a_zero"),
        Check::below("dA/dc(0,1)", d1.abs(), tol.a_slope, "a_slope").param("fd_step", wronskian::FD_STEP),
    ])
}

/// `𝒯(sinh·e^{−y²})(0) = √π` at `α = 1`.
pub fn t_gaussian(tol: &Tolerances, opts: &SolveOptions) -> Result<Vec<Check>> {
    let field = solve_phi1(&SpectralPoint::real(0.0, 1)?, opts)?;
    let f = |y: f64| C64::new(y.sinh() * (-y * y).exp(), 0.0);
    let t = cal_t(&field, &f)?;
    let err = (t.pv - PI.sqrt()).norm();
    Ok(vec![Check::below("T(odd gaussian)(0)", err, tol.t_gaussian, "t_gaussian")])
}

/// Pseudo-random `c` strictly inside the thin domain.
pub fn random_domain_point(rng: &mut ChaCha8Rng, eps0: f64, c_o: f64) -> C64 {
    let cr: f64 = rng.gen_range(-0.95..0.95);
    let cap = eps0.min((1.0 - cr * cr) / c_o);
    let e: f64 = rng.gen_range(0.01..0.99) * cap;
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    C64::new(cr, sign * e)
}

/// Direct and `W₁`-based Wronskians agree at `n` random points for each `α`.
pub fn dual_wronskian(
    tol: &Tolerances,
    seed: u64,
    n: usize,
    alphas: &[u32],
    eps0: f64,
    c_o: f64,
    opts: &SolveOptions,
) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    for &a in alphas {
        for _ in 0..n {
            pts.push((random_domain_point(&mut rng, eps0, c_o), a));
        }
    }
    let errs: Result<Vec<(f64, C64, u32)>> = pts
        .par_iter()
        .map(|&(c, a)| {
            let field = solve_phi1(&SpectralPoint::with_domain(c, a, eps0, c_o)?, opts)?;
            let wd = wronskian_direct(&field)?;
            let ww = wronskian_via_w1(&field)?;
            Ok(((wd - ww).norm() / ww.norm(), c, a))
        })
        .collect();
    let errs = errs?;
    let (worst, c, a) = errs.iter().copied().fold((0.0, C64::new(0.0, 0.0), 0), |m, e| if e.0 > m.0 { e } else { m });
    Ok(vec![Check::below("dual Wronskian formulas", worst, tol.dual_wronskian, "dual_wronskian")
        .detail(format!("{} points, worst at c = {c:.4}, alpha = {a}", errs.len()))
        .param("eps0", eps0)
        .param("c_o", c_o)
        .param("seed", seed as f64)])
}

/// Spectral `ψ̂` against the direct solver on the table grid.
pub fn spectral_vs_direct(
    tol: &Tolerances,
    table: &ModeTable,
    data: &InitialData,
    fine: &UniformGrid,
    times: &[f64],
    dt: f64,
) -> Result<Vec<Check>> {
    let grid = &data.grid;
    let k = ((grid.h / fine.h).round() as usize).max(1);
    if fine.coarsen(k)?.ys != grid.ys {
        return Err(Error::Grid("fine grid does not restrict to the output grid".into()));
    }
    let w0 = fine.sample(|y| data.eval(y));
    let traj = direct::evolve(&w0, table.alpha(), fine, times, dt)?;
    let spec = psi_series(times, table, grid)?;
    let mut out = Vec::new();
    for (s, m) in traj.iter().zip(&spec) {
        let d: Vec<C64> = s.psi.iter().step_by(k).copied().collect();
        let diff: Vec<C64> = d.iter().zip(&m.psi).map(|(a, b)| a - b).collect();
        let rel = direct::l2_norm(&diff, grid.h) / direct::l2_norm(&d, grid.h);
        out.push(
            Check::below(
                &format!("spectral vs direct, alpha = {}, t = {}", table.alpha(), s.t),
                rel,
                tol.spectral_vs_direct,
                "spectral_vs_direct",
            )
            .param("c_nodes", table.kernel().c_grid.len() as f64)
            .param("t_max", table.kernel().t_max)
            .param("dt", dt)
            .param("h_direct", fine.h),
        );
    }
    Ok(out)
}

/// `L²` and `H¹` decay exponents of `ψ̂` over `window`.
pub fn decay_exponents(
    tol: &Tolerances,
    table: &ModeTable,
    grid: &UniformGrid,
    window: [f64; 2],
    samples: usize,
) -> Result<(Vec<Check>, Vec<DecayFit>)> {
    let ts = log_times(window[0], window[1], samples);
    let fields = psi_series(&ts, table, grid)?;
    let l2: Vec<(f64, f64)> = fields.iter().map(|f| (f.t, f.l2())).collect();
    let h1: Vec<(f64, f64)> = fields.iter().map(|f| (f.t, f.h1())).collect();
    let a = table.alpha();
    let fl = decay_fit(&format!("L2(psi), alpha = {a}"), &l2, (window[0], window[1]))?;
    let fh = decay_fit(&format!("H1(psi), alpha = {a}"), &h1, (window[0], window[1]))?;
    let t_max = table.kernel().t_max;
    let checks = vec![
        Check::within(&format!("L2 decay exponent, alpha = {a}"), fl.exponent, tol.l2_exponent, "l2_exponent")
            .detail(format!("+/- {:.3}", fl.half_width))
            .param("t_max", t_max),
        Check::within(&format!("H1 decay exponent, alpha = {a}"), fh.exponent, tol.h1_exponent, "h1_exponent")
            .detail(format!("+/- {:.3}", fh.half_width))
            .param("t_max", t_max),
    ];
    Ok((checks, vec![fl, fh]))
}

/// Mode-1 remainder fits with and without the rank-one term, and the
/// distance to the eigen-projection at the end of the window.
pub fn mode_one(
    tol: &Tolerances,
    table: &ModeTable,
    grid: &UniformGrid,
    window: [f64; 2],
    samples: usize,
) -> Result<(Vec<Check>, Vec<DecayFit>)> {
    if table.alpha() != 1 {
        return Err(Error::Data("mode-one checks need the α = 1 table".into()));
    }
    let ts = log_times(window[0], window[1], samples);
    let fields = psi_series(&ts, table, grid)?;
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for f in &fields {
        let parts = f.parts.as_ref().ok_or_else(|| Error::Data("mode-one parts missing".into()))?;
        let (v, dv) = parts.remainder(f, true);
        with.push((f.t, evolution::h1_from(&v, &dv, grid.h)));
        let (v, dv) = parts.remainder(f, false);
        without.push((f.t, evolution::h1_from(&v, &dv, grid.h)));
    }
    let w = (window[0], window[1]);
    let fs = decay_fit("H1(psi - projection - a0 f1), alpha = 1", &with, w)?;
    let fn_ = decay_fit("H1(psi - projection), alpha = 1", &without, w)?;
    let last = fields.last().expect("at least five samples");
    let parts = last.parts.as_ref().expect("checked above");
    let diff: Vec<C64> = last.psi.iter().zip(&parts.projection).map(|(a, b)| a - b).collect();
    let rel = direct::l2_norm(&diff, grid.h) / direct::l2_norm(&parts.projection, grid.h);
    let t_max = table.kernel().t_max;
    let checks = vec![
        Check::within("mode-1 remainder H1 exponent", fs.exponent, tol.mode_one_exponent, "mode_one_exponent")
            .detail(format!("+/- {:.3}", fs.half_width))
            .param("t_max", t_max),
        Check::at_least(
            "mode-1 exponent degradation without a0 f1",
            fn_.exponent - fs.exponent,
            tol.mode_one_degradation,
            "mode_one_degradation",
        )
        .detail(format!("without: {:.4}, with: {:.4}", fn_.exponent, fs.exponent)),
        Check::below(&format!("mode-1 distance to projection at t = {}", last.t), rel, tol.mode_one_projection, "mode_one_projection"),
    ];
    Ok((checks, vec![fs, fn_]))
}

/// `c·Φ(1, y, c)` near the embedded eigenvalue: along `c = iδ` against the
/// one-sided limit, and averaged over the circle `|c| = δ`.
pub fn lap(tol: &Tolerances, f: kernels::Profile, delta: f64, opts: &SolveOptions) -> Result<Vec<Check>> {
    let ys = [-2.0, -1.0, 1.0, 2.0];
    let f0 = f(0.0);
    let t0 = {
        let field = solve_phi1(&SpectralPoint::real(0.0, 1)?, opts)?;
        cal_t(&field, f)?.pv
    };
    let c_phi = |c: C64| -> Result<Vec<C64>> {
        let field = solve_phi1(&SpectralPoint::new(c, 1)?, opts)?;
        let s = solve_inhomogeneous(&field, f, &ys)?;
        Ok(s.phi.iter().map(|p| p * c).collect())
    };
    let up = c_phi(C64::new(0.0, delta))?;
    let k = (t0 + I * PI * f0) / (2.0 * PI * I);
    let mut worst: f64 = 0.0;
    for (v, &y) in up.iter().zip(&ys) {
        let exact = k / y.cosh();
        worst = worst.max((v - exact).norm() / exact.norm());
    }
    let n = 32;
    let ring: Result<Vec<Vec<C64>>> =
        (0..n).into_par_iter().map(|j| c_phi(C64::from_polar(delta, 2.0 * PI * (j as f64 + 0.5) / n as f64))).collect();
    let ring = ring?;
    let mut worst_avg: f64 = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let avg: C64 = ring.iter().map(|r| r[i]).sum::<C64>() / n as f64;
        let exact = f0 * 0.5 / y.cosh();
        worst_avg = worst_avg.max((avg - exact).norm() / exact.norm());
    }
    Ok(vec![
        Check::below("c Phi(1,y,i delta) vs one-sided limit", worst, tol.lap_pointwise, "lap_pointwise").param("delta", delta),
        Check::below("angular average of c Phi on |c| = delta", worst_avg, tol.lap_average, "lap_average")
            .param("delta", delta)
            .param("angles", n as f64),
    ])
}

/// `|S(t) + iπ| t²` stays bounded on `[10, 1000]`.
pub fn s_bound(tol: &Tolerances) -> Result<Vec<Check>> {
    let g = |t: f64| (s_of(t) + I * PI).norm() * t * t;
    let g10 = g(10.0);
    let sup = log_times(10.0, 1000.0, 61).into_iter().map(g).fold(0.0, f64::max);
    Ok(vec![Check::below("sup |S(t)+i pi| t^2 / value at t = 10", sup / g10, tol.s_growth, "s_growth")
        .detail(format!("sup {sup:.4e}, at 10: {g10:.4e}"))])
}

/// Drift of `a(t)` and `b(t)` along a direct `α = 1` run.
pub fn conservation(tol: &Tolerances, data: &InitialData, fine: &UniformGrid, t_end: f64, dt: f64) -> Result<Vec<Check>> {
    let w0 = fine.sample(|y| data.eval(y));
    let ts = log_times(1.0, t_end, 8);
    let traj = direct::evolve(&w0, 1, fine, &ts, dt)?;
    let (a0, b0) = direct::ab_functionals(&w0, fine)?;
    let scale = a0.norm().hypot(b0.norm());
    let rel = |d: f64, v: C64| d / if v.norm() > 1e-12 * scale { v.norm() } else { scale };
    let (mut da, mut db): (f64, f64) = (0.0, 0.0);
    for (_, a, b) in direct::conserved_ab(&traj, fine)? {
        da = da.max(rel((a - a0).norm(), a0));
        db = db.max(rel((b - b0).norm(), b0));
    }
    Ok(vec![
        Check::below(&format!("drift of a up to t = {t_end}"), da, tol.conservation, "conservation").param("dt", dt),
        Check::below(&format!("drift of b up to t = {t_end}"), db, tol.conservation, "conservation").param("dt", dt),
    ])
}
