//! Singular operator `𝒯`, the Green-type solution `Γ`, the spectral density
//! `μ`, the dual functionals `Λ`, the bilinear kernels `𝒦` and the
//! inhomogeneous Rayleigh solution `Φ`.

use crate::flow::{self, SpectralPoint};
use crate::quad::GaussRule;
use crate::rayleigh::{solve_phi1, Phi1Field, SolveOptions};
use crate::wronskian::{self, DerivativeModel, Side, C_MAX, C_SWITCH, FD_STEP};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A profile in `y` (initial vorticity, test function, ...).
pub type Profile<'a> = &'a (dyn Fn(f64) -> C64 + Sync);

/// Distance from `y_c` beyond which `Γ` is taken from the plain running
/// integral of `φ⁻²`; closer in, the closed-form primitive is used.
pub const GAMMA_NEAR: f64 = 0.5;

/// Smooth even cutoff: 1 on `|c| ≤ ¼`, 0 on `|c| ≥ ½`, quintic in between.
pub fn chi0(c: f64) -> f64 {
    let s = ((c.abs() - 0.25) / 0.25).clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

pub fn chi1(c: f64) -> f64 {
    1.0 - chi0(c)
}

fn on_gauss(field: &Phi1Field, f: Profile) -> Vec<C64> {
    field.grid.gy.iter().map(|&y| f(y)).collect()
}

/// `𝒯(f)` at real `c` with its two boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TValue {
    pub pv: C64,
    pub plus: C64,
    pub minus: C64,
    /// `f(y_c)`
    pub f_c: C64,
}

/// `I₁ + I₂` (the absolutely integrable part) and `f(y_c)`.
fn t_regular(field: &Phi1Field, f: Profile) -> (C64, C64) {
    let g = &field.grid;
    let pt = &field.point;
    let cr = pt.c.re;
    let yc = field.y_c();
    let fg = on_gauss(field, f);
    let f_c = f(yc);
    let (big_f, _) = g.cumulative_from_center(&fg);
    let fp: Vec<C64> = fg.iter().zip(&field.g_p).map(|(a, b)| a * b).collect();
    let (big_p, _) = g.cumulative_from_center(&fp);
    let d = 1.0 - cr * cr;
    let mut acc = ZERO;
    for j in 0..g.gy.len() {
        let y = g.gy[j];
        let u = flow::u(y);
        let du = flow::du(y);
        let uc = pt.u_minus_c(y);
        let ucr = flow::u_minus_uc(y, yc);
        let uc2 = uc * uc;
        let phi1 = field.g_phi1[j];
        let inv2 = (phi1 * phi1).inv();
        let ff = big_f[j];
        let i1 = big_p[j] / uc2 * inv2 - field.g_q[j] * (phi1 + 1.0) * ff * inv2 + ff * ((u + cr) * ucr) / (uc2 * d);
        let i2 = (ff - f_c * (ucr / d)) * du / (uc2 * d);
        acc += (i1 + i2) * g.gw[j];
    }
    (acc, f_c)
}

/// `𝒯(f)(c)` at real `c`: principal value and the limits from above and below.
pub fn cal_t(field: &Phi1Field, f: Profile) -> Result<TValue> {
    let c = real_c(field)?;
    let (reg, f_c) = t_regular(field, f);
    let d = 1.0 - c * c;
    let pv = reg + f_c * (((1.0 - c) / (1.0 + c)).ln() / (d * d));
    let jump = I * (PI / (d * d)) * f_c;
    Ok(TValue { pv, plus: pv + jump, minus: pv - jump, f_c })
}

/// `T(f)(c) = ∫ (∫_{y_c}^z φ₁f)/((u − c)²φ₁²) dz` at complex `c`.
pub fn cal_t_complex(field: &Phi1Field, f: Profile) -> Result<C64> {
    let c = field.point.c;
    if c.im == 0.0 {
        return Err(Error::Singular("cal_t_complex needs Im c ≠ 0".into()));
    }
    let (reg, f_c) = t_regular(field, f);
    let cr = c.re;
    let dr = 1.0 - cr * cr;
    let one_m = C64::new(1.0, 0.0) - c * c;
    let i3 = (wronskian::log_ratio(c) - I * (2.0 * c.im) / one_m) * f_c / (dr * dr);
    Ok(reg + i3)
}

/// `T(f)(c)` at complex `c` by direct quadrature of its defining integral.
pub fn cal_t_quadrature(field: &Phi1Field, f: Profile) -> Result<C64> {
    if field.point.is_real() {
        return Err(Error::Singular("direct quadrature of T needs Im c ≠ 0".into()));
    }
    let h = h_integrand(field, f);
    Ok(field.grid.integrate(&h))
}

/// `(∫_{y_c}^z φ₁f)/((u − c)²φ₁²)` at the Gauss points.
fn h_integrand(field: &Phi1Field, f: Profile) -> Vec<C64> {
    let g = &field.grid;
    let fg: Vec<C64> = on_gauss(field, f).iter().zip(&field.g_phi1).map(|(a, b)| a * b).collect();
    let (q, _) = g.cumulative_from_center(&fg);
    (0..g.gy.len())
        .map(|j| {
            let phi = field.point.u_minus_c(g.gy[j]) * field.g_phi1[j];
            q[j] / (phi * phi)
        })
        .collect()
}

/// `φ⁻²` at the Gauss points.
fn inv_phi2(field: &Phi1Field) -> Vec<C64> {
    let g = &field.grid;
    (0..g.gy.len())
        .map(|j| {
            let phi = field.point.u_minus_c(g.gy[j]) * field.g_phi1[j];
            (phi * phi).inv()
        })
        .collect()
}

fn real_c(field: &Phi1Field) -> Result<f64> {
    if !field.point.is_real() {
        return Err(Error::Data("real c required".into()));
    }
    let c = field.point.c.re;
    if c.abs() > C_MAX {
        return Err(Error::OutOfRange(format!("|c| = {} beyond c_max = {C_MAX}", c.abs())));
    }
    Ok(c)
}

/// Brute-force principal value of `𝒯(f)(c)`: the band `|u(y) − c| < h` is cut
/// out for `h = h0, h0/2, h0/4` and the results are extrapolated to `h = 0`.
pub fn cal_t_excision(field: &Phi1Field, f: Profile, h0: f64) -> Result<f64> {
    let c = real_c(field)?;
    let g = &field.grid;
    let fg = on_gauss(field, f);
    let q: Vec<C64> = fg.iter().zip(&field.g_phi1).map(|(a, b)| a * b).collect();
    let (q_g, q_n) = g.cumulative_from_center(&q);
    let (y0, y1) = field.span();
    let yc = field.y_c();
    let integrand = |y: f64| -> f64 {
        let s = field.sample(y).expect("inside span");
        let qv = g.interp(&q_n, &q_g, y);
        let uc = flow::u_minus_uc(y, yc);
        (qv / (s.phi1 * s.phi1)).re / (uc * uc)
    };
    let rule = GaussRule::get(8);
    let graded = |a: f64, b: f64, from_left: bool| -> f64 {
        // panels grow geometrically away from the excised band
        let mut acc = 0.0;
        let len = b - a;
        let mut step = (0.25 * len).min(0.02);
        let mut d = 0.0;
        while d < len - 1e-15 {
            let s = step.min(len - d);
            let (lo, hi) = if from_left { (a + d, a + d + s) } else { (b - d - s, b - d) };
            acc += rule.integrate(lo, hi, &integrand);
            d += s;
            step = (step * 1.3).min(0.05);
        }
        acc
    };
    let mut vals = Vec::new();
    for k in 0..3 {
        let h = h0 / f64::powi(2.0, k);
        if c - h <= -1.0 || c + h >= 1.0 {
            return Err(Error::OutOfRange("excision band leaves (−1, 1)".into()));
        }
        let yl = (c - h).atanh();
        let yr = (c + h).atanh();
        let left = graded(y0, yl, false);
        let right = graded(yr, y1, true);
        vals.push(C64::new(left + right, 0.0));
    }
    Ok(wronskian::richardson(&vals, 2.0).re)
}

/// `Γ(y, c)` on a solved field.
pub struct GammaFn<'a> {
    field: &'a Phi1Field,
    crl: (Vec<C64>, Vec<C64>),
    crr: (Vec<C64>, Vec<C64>),
    gl: (Vec<C64>, Vec<C64>),
    gr: (Vec<C64>, Vec<C64>),
}

impl<'a> GammaFn<'a> {
    pub fn new(field: &'a Phi1Field) -> Self {
        let g = &field.grid;
        let c = field.point.c;
        let r: Vec<C64> = (0..g.gy.len()).map(|j| wronskian::w1_integrand(g.gy[j], c, field.g_phi1[j], field.g_q[j])).collect();
        let ip = inv_phi2(field);
        GammaFn {
            field,
            crl: g.cumulative_from_left(&r),
            crr: g.cumulative_from_right(&r),
            gl: g.cumulative_from_left(&ip),
            gr: g.cumulative_from_right(&ip),
        }
    }

    /// `∫_{−∞}^y φ⁻²` (`y < y_c`) or `∫_{+∞}^y φ⁻²` (`y > y_c`) times `φ(y)`;
    /// zero outside the solved span.
    pub fn at(&self, y: f64) -> C64 {
        let field = self.field;
        if !field.contains(y) {
            return ZERO;
        }
        let g = &field.grid;
        let c = field.point.c;
        let phi1 = g.interp(&field.phi1, &field.g_phi1, y);
        let uc = field.point.u_minus_c(y);
        let d = y - field.y_c();
        if d.abs() >= GAMMA_NEAR {
            return if d < 0.0 {
                uc * phi1 * g.interp(&self.gl.1, &self.gl.0, y)
            } else {
                -uc * phi1 * g.interp(&self.gr.1, &self.gr.0, y)
            };
        }
        let one = C64::new(1.0, 0.0);
        let om = one - c * c;
        if uc == ZERO {
            return -phi1 / om;
        }
        let u = flow::u(y);
        let bracket = if d < 0.0 {
            let crl = g.interp(&self.crl.1, &self.crl.0, y);
            crl + (u + 1.0) - (one - c) + c * 2.0 * (uc / (-one - c)).ln()
        } else {
            let crr = g.interp(&self.crr.1, &self.crr.0, y);
            -crr + (u - 1.0) + (one + c) + c * 2.0 * (uc / (one - c)).ln()
        };
        (uc * phi1 * bracket - om * phi1) / (om * om)
    }

    /// `∂_y Γ(y, c)`, logarithmically singular at `y_c`.
    pub fn deriv(&self, y: f64) -> C64 {
        let field = self.field;
        if !field.contains(y) {
            return ZERO;
        }
        let g = &field.grid;
        let c = field.point.c;
        let s = field.sample(y).expect("inside span");
        let uc = field.point.u_minus_c(y);
        let du = flow::du(y);
        let phi = uc * s.phi1;
        let dphi = s.phi1 * du + uc * s.dphi1;
        let d = y - field.y_c();
        if d.abs() >= GAMMA_NEAR {
            let gv = if d < 0.0 { g.interp(&self.gl.1, &self.gl.0, y) } else { -g.interp(&self.gr.1, &self.gr.0, y) };
            return dphi * gv + phi.inv();
        }
        let one = C64::new(1.0, 0.0);
        let om = one - c * c;
        let u = flow::u(y);
        let r = wronskian::w1_integrand(y, c, s.phi1, s.q);
        let bracket = if d < 0.0 {
            let crl = g.interp(&self.crl.1, &self.crl.0, y);
            crl + (u + 1.0) - (one - c) + c * 2.0 * (uc / (-one - c)).ln()
        } else {
            let crr = g.interp(&self.crr.1, &self.crr.0, y);
            -crr + (u - 1.0) + (one + c) + c * 2.0 * (uc / (one - c)).ln()
        };
        // φ B′ with B′ = R + u′ + 2cu′/(u − c)
        let phi_db = phi * (r + du) + c * s.phi1 * (2.0 * du);
        (dphi * bracket + phi_db - om * s.dphi1) / (om * om)
    }

    pub fn sample(&self, ys: &[f64]) -> Vec<C64> {
        ys.iter().map(|&y| self.at(y)).collect()
    }
}

/// `Γ(y, c)` for real `c`, solving `φ₁` on the default grid.
pub fn gamma_fn(y: f64, c: f64, alpha: u32, opts: &SolveOptions) -> Result<f64> {
    let pt = SpectralPoint::real(c, alpha)?;
    let field = solve_phi1(&pt, opts)?;
    real_c(&field)?;
    Ok(GammaFn::new(&field).at(y).re)
}

/// Spectral density `μ(c, α)` from its constituents.
pub fn mu_from(c: f64, a: f64, t: C64, f_c: C64) -> Result<C64> {
    let d = 1.0 - c * c;
    let den = a * a + 4.0 * PI * PI * c * c;
    if den < 1e-24 {
        return Err(Error::Singular(format!("μ denominator {den:e} at c = {c}")));
    }
    Ok(-(t * (2.0 * c * d * d) - f_c * a) / den)
}

/// One-sided densities `μ±`.
pub fn mu_pm(c: f64, a: f64, t: C64, f_c: C64, side: Side) -> C64 {
    let d = 1.0 - c * c;
    let s = side.sign();
    -(t * (d * d) + I * (s * PI) * f_c) / C64::new(a, s * 2.0 * PI * c)
}

/// `μ(c, α)` for the profile `f`.
pub fn mu(c: f64, alpha: u32, f: Profile, opts: &SolveOptions) -> Result<C64> {
    let pt = SpectralPoint::real(c, alpha)?;
    let field = solve_phi1(&pt, opts)?;
    let a = wronskian::a_of(&field)?;
    let t = cal_t(&field, f)?;
    mu_from(c, a, t.pv, t.f_c)
}

pub fn lambda1_from(c: f64, a: f64, t: C64, f_c: C64) -> C64 {
    let d = 1.0 - c * c;
    t * (2.0 * c) - f_c * (a / (d * d))
}

pub fn lambda2_from(c: f64, a: f64, t_u2g: C64, g_c: C64) -> C64 {
    t_u2g + g_c * (a / (1.0 - c * c))
}

pub fn lambda1_tilde_from(c: f64, a_tt: f64, t_tilde: C64, f_c: C64) -> C64 {
    let d = 1.0 - c * c;
    t_tilde * 2.0 - f_c * (a_tt / (d * d))
}

pub fn lambda2_tilde_from(c: f64, a_t: f64, t_tilde_u2g: C64, g_c: C64) -> C64 {
    t_tilde_u2g + g_c * (a_t / (1.0 - c * c))
}

/// `u″g` for a profile `g`.
pub fn times_d2u<'a>(g: Profile<'a>) -> impl Fn(f64) -> C64 + Sync + 'a {
    move |y| g(y) * flow::d2u(y)
}

/// `Λ₁(f)(c)`.
pub fn lambda1(f: Profile, c: f64, alpha: u32, opts: &SolveOptions) -> Result<C64> {
    let field = solve_phi1(&SpectralPoint::real(c, alpha)?, opts)?;
    let a = wronskian::a_of(&field)?;
    let t = cal_t(&field, f)?;
    Ok(lambda1_from(c, a, t.pv, t.f_c))
}

/// `Λ₂(g)(c)`.
pub fn lambda2(g: Profile, c: f64, alpha: u32, opts: &SolveOptions) -> Result<C64> {
    let field = solve_phi1(&SpectralPoint::real(c, alpha)?, opts)?;
    let a = wronskian::a_of(&field)?;
    let ug = times_d2u(g);
    let t = cal_t(&field, &ug)?;
    Ok(lambda2_from(c, a, t.pv, g(field.y_c())))
}

/// Difference quotients at the embedding eigenvalue `c = 0` (`α = 1`) for `A`
/// and for `𝒯` applied to a list of profiles.
#[derive(Debug, Clone)]
pub struct NearZero {
    model: DerivativeModel,
    /// `𝒯(f_i)(0)`
    pub t0: Vec<C64>,
}

impl NearZero {
    pub fn build(profiles: &[Profile], opts: &SolveOptions) -> Result<Self> {
        let k = 10i64;
        let rows: Result<Vec<Vec<C64>>> = (-k..=k)
            .into_par_iter()
            .map(|i| {
                let c = i as f64 * FD_STEP;
                let field = solve_phi1(&SpectralPoint::real(c, 1)?, opts)?;
                let mut row = vec![C64::new(wronskian::a_of(&field)?, 0.0)];
                for f in profiles {
                    row.push(cal_t(&field, *f)?.pv);
                }
                Ok(row)
            })
            .collect();
        let rows = rows?;
        let t0 = rows[k as usize][1..].to_vec();
        Ok(NearZero { model: DerivativeModel::new(FD_STEP, rows)?, t0 })
    }

    /// `Ã(c)` given `A(c)`.
    pub fn a_tilde(&self, c: f64, a: f64) -> f64 {
        if c == 0.0 {
            0.0
        } else if c.abs() >= C_SWITCH {
            a / c
        } else {
            self.model.quotient(c)[0].re
        }
    }

    /// `Ã̃(c)` given `A(c)`.
    pub fn a_ttilde(&self, c: f64, a: f64) -> f64 {
        if c.abs() >= C_SWITCH {
            a / (c * c)
        } else {
            self.model.second_quotient(c)[0].re
        }
    }

    /// `𝒯̃(f_i)(c)` given `𝒯(f_i)(c)`.
    pub fn t_tilde(&self, i: usize, c: f64, t: C64) -> C64 {
        if c.abs() >= C_SWITCH {
            (t - self.t0[i]) / c
        } else {
            self.model.quotient(c)[i + 1]
        }
    }
}

/// `𝒯̃(f)(c)` at `α = 1`.
pub fn cal_t_tilde(f: Profile, c: f64, opts: &SolveOptions) -> Result<C64> {
    if c.abs() >= 0.5 {
        return Err(Error::OutOfRange(format!("|c| = {} outside (−½, ½)", c.abs())));
    }
    let nz = NearZero::build(&[f], opts)?;
    let t = if c.abs() >= C_SWITCH { cal_t(&solve_phi1(&SpectralPoint::real(c, 1)?, opts)?, f)?.pv } else { ZERO };
    Ok(nz.t_tilde(0, c, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KVariant {
    Full,
    K0,
    K0Tilde,
    K1,
}

/// Pointwise inputs of the bilinear kernels at one `c`.
#[derive(Debug, Clone, Copy)]
pub struct KInputs {
    pub c: f64,
    pub a: f64,
    pub a_tilde: f64,
    pub a_ttilde: f64,
    pub lambda1: C64,
    pub lambda1_tilde: C64,
    pub lambda2: C64,
}

/// `𝒦`, `𝒦₀`, `𝒦̃₀` or `𝒦₁` at one `c`.
pub fn kernel_k(variant: KVariant, k: &KInputs) -> C64 {
    let c = k.c;
    let d2 = (1.0 - c * c).powi(2);
    let pi2 = 4.0 * PI * PI;
    match variant {
        KVariant::Full => k.lambda1 * k.lambda2 * (d2 / (k.a * k.a + pi2 * c * c)),
        KVariant::K1 => {
            let x = chi1(c);
            if x == 0.0 {
                ZERO
            } else {
                k.lambda1 * k.lambda2 * (x * d2 / (k.a * k.a + pi2 * c * c))
            }
        }
        KVariant::K0 => k.lambda1_tilde * k.lambda2 * (chi0(c) * d2 / (k.a_tilde * k.a_tilde + pi2)),
        KVariant::K0Tilde => k.lambda2 * (chi0(c) * d2 * c * k.a_ttilde * k.a_ttilde / (k.a_tilde * k.a_tilde + pi2)),
    }
}

/// Solution of `(u − c)(Φ″ − α²Φ) − u″Φ = f` at complex `c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InhomogeneousSolution {
    pub point: SpectralPoint,
    pub y_grid: Vec<f64>,
    pub phi: Vec<C64>,
    pub mu_coeff: C64,
    pub t: C64,
    pub w: C64,
    /// relative mismatch of the left and right expressions at `y_c + 1`
    pub defect: f64,
}

struct Primitives {
    hl: (Vec<C64>, Vec<C64>),
    hr: (Vec<C64>, Vec<C64>),
    gl: (Vec<C64>, Vec<C64>),
    gr: (Vec<C64>, Vec<C64>),
}

fn primitives(field: &Phi1Field, f: Profile, zero_sides: bool) -> Primitives {
    let g = &field.grid;
    let h = h_integrand(field, f);
    let ip = inv_phi2(field);
    let yc = field.y_c();
    let side = |v: &[C64], left: bool| -> Vec<C64> {
        if !zero_sides {
            return v.to_vec();
        }
        v.iter().zip(&g.gy).map(|(x, &y)| if (y < yc) == left { *x } else { ZERO }).collect()
    };
    Primitives {
        hl: g.cumulative_from_left(&side(&h, true)),
        hr: g.cumulative_from_right(&side(&h, false)),
        gl: g.cumulative_from_left(&side(&ip, true)),
        gr: g.cumulative_from_right(&side(&ip, false)),
    }
}

impl Primitives {
    fn left(&self, field: &Phi1Field, y: f64, mu: C64) -> C64 {
        let g = &field.grid;
        let (phi, _) = crate::rayleigh::phi_hom(field, y).expect("inside span");
        phi * (g.interp(&self.hl.1, &self.hl.0, y) + mu * g.interp(&self.gl.1, &self.gl.0, y))
    }

    fn right(&self, field: &Phi1Field, y: f64, mu: C64) -> C64 {
        let g = &field.grid;
        let (phi, _) = crate::rayleigh::phi_hom(field, y).expect("inside span");
        -phi * (g.interp(&self.hr.1, &self.hr.0, y) + mu * g.interp(&self.gr.1, &self.gr.0, y))
    }
}

/// `Φ(α, y, c)` on `y_grid` for complex `c`, with `μ = −T(f)/W`.
pub fn solve_inhomogeneous(field: &Phi1Field, f: Profile, y_grid: &[f64]) -> Result<InhomogeneousSolution> {
    if field.point.is_real() {
        return Err(Error::Singular("solve_inhomogeneous needs Im c ≠ 0".into()));
    }
    let t = cal_t_complex(field, f)?;
    let w = wronskian::wronskian_via_w1(field)?;
    if !(w.norm() > 1e-300) {
        return Err(Error::Singular(format!("|W| = {:e}", w.norm())));
    }
    let mu = -t / w;
    let prim = primitives(field, f, false);
    let yc = field.y_c();
    let phi = y_grid
        .iter()
        .map(|&y| {
            if !field.contains(y) {
                ZERO
            } else if y <= yc {
                prim.left(field, y, mu)
            } else {
                prim.right(field, y, mu)
            }
        })
        .collect();
    let yk = yc + 1.0;
    let defect = if field.contains(yk) {
        let (l, r) = (prim.left(field, yk, mu), prim.right(field, yk, mu));
        (l - r).norm() / l.norm().max(r.norm()).max(1e-300)
    } else {
        f64::NAN
    };
    Ok(InhomogeneousSolution { point: field.point, y_grid: y_grid.to_vec(), phi, mu_coeff: mu, t, w, defect })
}

/// Boundary values `Φ±(α, y, c)` at real `c`, for `y ≠ y_c`.
pub fn phi_pm(field: &Phi1Field, f: Profile, side: Side, y_grid: &[f64]) -> Result<Vec<C64>> {
    let c = real_c(field)?;
    let a = wronskian::a_of(field)?;
    let t = cal_t(field, f)?;
    let mu = mu_pm(c, a, t.pv, t.f_c, side);
    let prim = primitives(field, f, true);
    let gam = GammaFn::new(field);
    let yc = field.y_c();
    Ok(y_grid
        .iter()
        .map(|&y| {
            if !field.contains(y) || y == yc {
                return ZERO;
            }
            let g = &field.grid;
            let (phi, _) = crate::rayleigh::phi_hom(field, y).expect("inside span");
            let part = if y < yc { phi * g.interp(&prim.hl.1, &prim.hl.0, y) } else { -phi * g.interp(&prim.hr.1, &prim.hr.0, y) };
            part + mu * gam.at(y)
        })
        .collect())
}

/// Per-`c` data of the spectral representation for one mode and one profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTable {
    pub alpha: u32,
    pub c_grid: Vec<f64>,
    /// quadrature weights attached to `c_grid`
    pub weights: Vec<f64>,
    pub t_vals: Vec<C64>,
    pub mu_vals: Vec<C64>,
    pub a_vals: Vec<f64>,
    pub f_c: Vec<C64>,
    pub y_grid: Vec<f64>,
    /// `gamma[i][j] = Γ(y_j, c_i)`
    pub gamma: Vec<Vec<f64>>,
    /// `dgamma[i][j] = ∂_y Γ(y_j, c_i)`
    pub dgamma: Vec<Vec<f64>>,
    pub chi0: Vec<f64>,
    pub chi1: Vec<f64>,
    /// largest `t` the `c`-grid resolves
    pub t_max: f64,
}

/// Solve-level data at one real `c`.
#[derive(Debug, Clone)]
pub struct Column {
    pub c: f64,
    pub a: f64,
    pub t: TValue,
    pub gamma: Vec<f64>,
    pub dgamma: Vec<f64>,
}

/// Solves at `c` and evaluates `A`, `𝒯(f)` and `Γ(·, c)` on `y_grid`.
pub fn column(c: f64, alpha: u32, f: Profile, y_grid: &[f64], opts: &SolveOptions) -> Result<Column> {
    let field = solve_phi1(&SpectralPoint::real(c, alpha)?, opts)?;
    let a = wronskian::a_of(&field)?;
    let t = cal_t(&field, f)?;
    let gf = GammaFn::new(&field);
    let gamma = y_grid.iter().map(|&y| gf.at(y).re).collect();
    let dgamma = y_grid.iter().map(|&y| gf.deriv(y).re).collect();
    Ok(Column { c, a, t, gamma, dgamma })
}

impl KernelTable {
    /// Builds the table on the quadrature nodes `(c_i, w_i)`.
    pub fn build(alpha: u32, nodes: &[(f64, f64)], t_max: f64, y_grid: &[f64], f: Profile, opts: &SolveOptions) -> Result<Self> {
        let cols: Result<Vec<Column>> = nodes.par_iter().map(|&(c, _)| column(c, alpha, f, y_grid, opts)).collect();
        Self::from_columns(alpha, nodes, t_max, y_grid, cols?)
    }

    pub fn from_columns(alpha: u32, nodes: &[(f64, f64)], t_max: f64, y_grid: &[f64], cols: Vec<Column>) -> Result<Self> {
        let mut mu_vals = Vec::with_capacity(cols.len());
        for col in &cols {
            let m = if alpha == 1 && col.c.abs() < 1e-12 { ZERO } else { mu_from(col.c, col.a, col.t.pv, col.t.f_c)? };
            mu_vals.push(m);
        }
        let c_grid: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        Ok(KernelTable {
            alpha,
            weights: nodes.iter().map(|n| n.1).collect(),
            t_vals: cols.iter().map(|c| c.t.pv).collect(),
            a_vals: cols.iter().map(|c| c.a).collect(),
            f_c: cols.iter().map(|c| c.t.f_c).collect(),
            chi0: c_grid.iter().map(|&c| chi0(c)).collect(),
            chi1: c_grid.iter().map(|&c| chi1(c)).collect(),
            dgamma: cols.iter().map(|c| c.dgamma.clone()).collect(),
            gamma: cols.into_iter().map(|c| c.gamma).collect(),
            mu_vals,
            c_grid,
            y_grid: y_grid.to_vec(),
            t_max,
        })
    }

    /// CSV with one row per `c` node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "c,weight,alpha,A,T_re,T_im,mu_re,mu_im,f_c_re,f_c_im,chi0")?;
        for i in 0..self.c_grid.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.c_grid[i],
                self.weights[i],
                self.alpha,
                self.a_vals[i],
                self.t_vals[i].re,
                self.t_vals[i].im,
                self.mu_vals[i].re,
                self.mu_vals[i].im,
                self.f_c[i].re,
                self.f_c[i].im,
                self.chi0[i]
            )?;
        }
        Ok(())
    }

    /// CSV of `Γ(y_j, c_i)`, one row per `c`.
    pub fn write_gamma_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "c")?;
        for y in &self.y_grid {
            write!(w, ",{y}")?;
        }
        writeln!(w)?;
        for (c, row) in self.c_grid.iter().zip(&self.gamma) {
            write!(w, "{c:.17e}")?;
            for v in row {
                write!(w, ",{v:.17e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
