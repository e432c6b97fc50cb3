//! Wronskian `W = ∫ φ⁻²`, its regular part `W₁`, the real-axis function
//! `A = W₁ + 2c ln((1−c)/(1+c))` and the quotients `A/c`, `A/c²`.

use crate::flow::{self, SpectralPoint};
use crate::quad::{self, GaussRule};
use crate::rayleigh::{solve_phi1, Phi1Field, SolveOptions};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Threshold below which the tilde quantities switch to derivative averages.
pub const C_SWITCH: f64 = 0.05;
/// Step of the five-point differences in `c`.
pub const FD_STEP: f64 = 1e-2;
/// Largest `|c|` admitted in real-axis tables.
pub const C_MAX: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Direct,
    ViaW1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianValue {
    pub point: SpectralPoint,
    pub w: C64,
    pub w1: C64,
    pub a: C64,
    pub method: Method,
}

/// Side of the real axis from which a limit is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }
}

/// Integrand of `W₁` at a Gauss point, with `q = (φ₁ − 1)/(u − c)²`.
#[inline]
pub(crate) fn w1_integrand(y: f64, c: C64, phi1: C64, q: C64) -> C64 {
    let u = flow::u(y);
    let du = flow::du(y);
    let inv2 = (phi1 * phi1).inv();
    (c + u).powi(2) * inv2 - (C64::new(1.0 + u * u, 0.0) - c * c * 2.0) * du * q * (phi1 + 1.0) * inv2
}

/// `W₁(c, α)` by quadrature on the solved grid.
pub fn w1(field: &Phi1Field) -> C64 {
    let c = field.point.c;
    let g = &field.grid;
    let vals: Vec<C64> = (0..g.gy.len()).map(|i| w1_integrand(g.gy[i], c, field.g_phi1[i], field.g_q[i])).collect();
    g.integrate(&vals)
}

/// Principal `ln((c − 1)/(c + 1))`.
pub fn log_ratio(c: C64) -> C64 {
    ((c - 1.0) / (c + 1.0)).ln()
}

/// One-sided limit of `ln((c_ε − 1)/(c_ε + 1))` as `ε → 0±` at real `c`.
pub fn log_ratio_limit(c: f64, side: Side) -> C64 {
    C64::new(((1.0 - c) / (1.0 + c)).ln(), side.sign() * PI)
}

/// `ln((c_ε − 1)/(c_ε + 1))` at `c_ε = c + iε` written through real parts,
/// `ln(|1−c_ε|/|1+c_ε|) + i·sgn(ε)(π − arctan(2|ε|/(1 − c² − ε²)))`, valid in
/// the thin domain where `1 − c² − ε² > 0`.
pub fn log_ratio_thin(c: C64) -> C64 {
    let (cr, e) = (c.re, c.im);
    let re = ((1.0 - c).norm() / (1.0 + c).norm()).ln();
    let im = e.signum() * (PI - (2.0 * e.abs() / (1.0 - cr * cr - e * e)).atan());
    C64::new(re, im)
}

/// `W = ∫ φ⁻² dy` by direct quadrature on the solved grid.
pub fn wronskian_direct(field: &Phi1Field) -> Result<C64> {
    if field.point.is_real() {
        return Err(Error::Singular("direct Wronskian needs Im c ≠ 0".into()));
    }
    let g = &field.grid;
    let vals: Vec<C64> = (0..g.gy.len()).map(|i| (field.point.u_minus_c(g.gy[i]) * field.g_phi1[i]).powi(2).inv()).collect();
    Ok(g.integrate(&vals))
}

/// `W = (1−c²)⁻²(W₁ + 2c ln((c−1)/(c+1)))`.
pub fn wronskian_via_w1(field: &Phi1Field) -> Result<C64> {
    let c = field.point.c;
    if c.im == 0.0 {
        return Err(Error::Singular("c on the branch cut; use wronskian_limit".into()));
    }
    Ok(via_w1_value(c, w1(field)))
}

pub(crate) fn via_w1_value(c: C64, w1: C64) -> C64 {
    let one_m = C64::new(1.0, 0.0) - c * c;
    (w1 + c * log_ratio(c) * 2.0) / (one_m * one_m)
}

/// One-sided boundary value `W^±(c) = (1−c²)⁻²(A(c) ± 2πci)` at real `c`.
pub fn wronskian_limit(a: f64, c: f64, side: Side) -> C64 {
    let d = 1.0 - c * c;
    C64::new(a, side.sign() * 2.0 * PI * c) / (d * d)
}

/// Full record for a complex point.
pub fn wronskian_value(field: &Phi1Field, method: Method) -> Result<WronskianValue> {
    let w1v = w1(field);
    let c = field.point.c;
    let w = match method {
        Method::Direct => wronskian_direct(field)?,
        Method::ViaW1 => wronskian_via_w1(field)?,
    };
    let a = w1v + c * ((C64::new(1.0, 0.0) - c) / (c + 1.0)).ln() * 2.0;
    Ok(WronskianValue { point: field.point, w, w1: w1v, a, method })
}

fn check_real(field: &Phi1Field) -> Result<f64> {
    if !field.point.is_real() {
        return Err(Error::Data("real c required".into()));
    }
    let c = field.point.c.re;
    if c.abs() > C_MAX {
        return Err(Error::OutOfRange(format!("|c| = {} beyond c_max = {C_MAX}", c.abs())));
    }
    Ok(c)
}

/// `A(c, α)` from the split `A = A₁ + A₂`: inside a band of half-width
/// `≈ 1/α` around `y_c` the principal-value part `2cu′/(u − c)` is
/// integrated in closed form, outside it the integrand is used as is.
pub fn a_of(field: &Phi1Field) -> Result<f64> {
    let c = check_real(field)?;
    let g = &field.grid;
    let n = g.n_gauss;
    let cc = g.center;
    let target = 1.0 / field.point.alpha_f();
    let mut kr = cc + 1;
    while kr + 1 < g.nodes.len() && g.nodes[kr] - field.y_c() < target {
        kr += 1;
    }
    let mut kl = cc - 1;
    while kl > 0 && field.y_c() - g.nodes[kl] < target {
        kl -= 1;
    }
    let (yl, yr) = (g.nodes[kl], g.nodes[kr]);
    let mut acc = 0.0;
    for k in 0..g.n_cells() {
        let in_band = k >= kl && k < kr;
        for j in k * n..(k + 1) * n {
            let y = g.gy[j];
            let u = flow::u(y);
            let du = flow::du(y);
            let uc = flow::u_minus_uc(y, field.y_c());
            let phi1 = field.g_phi1[j].re;
            let q = field.g_q[j].re;
            let inv2 = 1.0 / (phi1 * phi1);
            let regular = (u + c).powi(2) * inv2;
            let a2 = -(1.0 - c * c + uc * uc) * du * q * (phi1 + 1.0) * inv2;
            let sing = if in_band { -2.0 * c * du * uc * q * (phi1 + 1.0) * inv2 } else { 2.0 * c * du / (uc * phi1 * phi1) };
            acc += g.gw[j] * (regular + a2 + sing);
        }
    }
    let log = 2.0 * c * (flow::u_minus_uc(yr, field.y_c()) / -flow::u_minus_uc(yl, field.y_c())).ln();
    Ok(acc + log)
}

/// `A` assembled as `W₁ + 2c ln((1−c)/(1+c))`.
pub fn a_from_w1(field: &Phi1Field) -> Result<f64> {
    let c = check_real(field)?;
    Ok(w1(field).re + 2.0 * c * ((1.0 - c) / (1.0 + c)).ln())
}

/// Solves at real `c` and returns `A(c, α)`.
pub fn a_value(c: f64, alpha: u32, opts: &SolveOptions) -> Result<f64> {
    let pt = SpectralPoint::real(c, alpha)?;
    a_of(&solve_phi1(&pt, opts)?)
}

/// Five-point centered first and second differences with step `h`.
pub fn five_point<F: FnMut(f64) -> Result<f64>>(x: f64, h: f64, mut f: F) -> Result<(f64, f64)> {
    let fm2 = f(x - 2.0 * h)?;
    let fm1 = f(x - h)?;
    let f0 = f(x)?;
    let fp1 = f(x + h)?;
    let fp2 = f(x + 2.0 * h)?;
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    Ok((d1, d2))
}

/// `(∂_c A, ∂²_c A)` at `c` by five-point differences with step [`FD_STEP`].
pub fn a_derivatives(c: f64, alpha: u32, opts: &SolveOptions) -> Result<(f64, f64)> {
    five_point(c, FD_STEP, |x| a_value(x, alpha, opts))
}

/// Values tabulated on `c_k = k·h`, `|k| ≤ K`, with five-point derivative
/// tables, used to form difference quotients at the origin without
/// dividing by small `c`.
#[derive(Debug, Clone)]
pub struct DerivativeModel {
    pub h: f64,
    pub k_max: i64,
    /// `values[k + K][component]`
    pub values: Vec<Vec<C64>>,
    d1: Vec<Vec<C64>>,
    d2: Vec<Vec<C64>>,
}

impl DerivativeModel {
    /// `values` are ordered by `k = −K..=K`.
    pub fn new(h: f64, values: Vec<Vec<C64>>) -> Result<Self> {
        let m = values.len();
        if m % 2 == 0 || m < 11 {
            return Err(Error::Data("derivative model needs an odd count ≥ 11".into()));
        }
        let k_max = (m as i64 - 1) / 2;
        let width = values[0].len();
        let mut d1 = Vec::with_capacity(m - 4);
        let mut d2 = Vec::with_capacity(m - 4);
        for i in 2..m - 2 {
            let mut a = vec![ZERO; width];
            let mut b = vec![ZERO; width];
            for j in 0..width {
                let (fm2, fm1, f0, fp1, fp2) = (values[i - 2][j], values[i - 1][j], values[i][j], values[i + 1][j], values[i + 2][j]);
                a[j] = (fm2 - fm1 * 8.0 + fp1 * 8.0 - fp2) / (12.0 * h);
                b[j] = (-fm2 + fm1 * 16.0 - f0 * 30.0 + fp1 * 16.0 - fp2) / (12.0 * h * h);
            }
            d1.push(a);
            d2.push(b);
        }
        Ok(DerivativeModel { h, k_max, values, d1, d2 })
    }

    /// Largest `|c|` at which derivative interpolation stays inside the table.
    pub fn reach(&self) -> f64 {
        (self.k_max - 5) as f64 * self.h
    }

    fn interp(&self, table: &[Vec<C64>], x: f64) -> Vec<C64> {
        // table index i ↔ c = (i − (K − 2))·h
        let kk = self.k_max - 2;
        let pos = x / self.h + kk as f64;
        let m = table.len() as i64;
        let start = ((pos.floor() as i64) - 2).clamp(0, m - 6) as usize;
        let xs: Vec<f64> = (0..6).map(|i| (start + i) as f64).collect();
        let mut w = [0.0; 6];
        quad::lagrange_weights(&xs, pos, &mut w);
        let width = table[0].len();
        let mut out = vec![ZERO; width];
        for (i, wi) in w.iter().enumerate() {
            for j in 0..width {
                out[j] += table[start + i][j] * *wi;
            }
        }
        out
    }

    /// First derivative at `x`.
    pub fn derivative(&self, x: f64) -> Vec<C64> {
        self.interp(&self.d1, x)
    }

    /// `∫₀¹ ∂_c V(s c) ds`, i.e. `(V(c) − V(0))/c`.
    pub fn quotient(&self, c: f64) -> Vec<C64> {
        let rule = GaussRule::get(8);
        let width = self.values[0].len();
        let mut out = vec![ZERO; width];
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let d = self.interp(&self.d1, s * c);
            for j in 0..width {
                out[j] += d[j] * w;
            }
        }
        out
    }

    /// `∫₀¹∫₀¹ s ∂²_c V(s t c) ds dt`, i.e. `(V(c) − V(0) − c V′(0))/c²`.
    pub fn second_quotient(&self, c: f64) -> Vec<C64> {
        let rule = GaussRule::get(8);
        let width = self.values[0].len();
        let mut out = vec![ZERO; width];
        for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let d = self.interp(&self.d2, s * t * c);
                for j in 0..width {
                    out[j] += d[j] * (s * ws * wt);
                }
            }
        }
        out
    }
}

/// `A`, `Ã = A/c` and `Ã̃ = A/c²` for the embedding mode `α = 1`.
#[derive(Debug, Clone)]
pub struct ATilde {
    model: DerivativeModel,
    opts: SolveOptions,
}

impl ATilde {
    /// Tabulates `A(·, 1)` on the difference grid around the origin.
    pub fn build(opts: &SolveOptions) -> Result<Self> {
        use rayon::prelude::*;
        let k = 10i64;
        let vals: Result<Vec<Vec<C64>>> =
            (-k..=k).into_par_iter().map(|i| a_value(i as f64 * FD_STEP, 1, opts).map(|a| vec![C64::new(a, 0.0)])).collect();
        Ok(ATilde { model: DerivativeModel::new(FD_STEP, vals?)?, opts: *opts })
    }

    pub fn from_model(model: DerivativeModel, opts: &SolveOptions) -> Self {
        ATilde { model, opts: *opts }
    }

    pub fn model(&self) -> &DerivativeModel {
        &self.model
    }

    fn a_at(&self, c: f64, a: Option<f64>) -> Result<f64> {
        match a {
            Some(v) => Ok(v),
            None => a_value(c, 1, &self.opts),
        }
    }

    /// `Ã(c)`; pass a known `A(c)` to avoid a solve when `|c| ≥ c_switch`.
    pub fn a_tilde(&self, c: f64, a: Option<f64>) -> Result<f64> {
        if c == 0.0 {
            return Ok(0.0);
        }
        if c.abs() >= C_SWITCH {
            return Ok(self.a_at(c, a)? / c);
        }
        Ok(self.model.quotient(c)[0].re)
    }

    /// `Ã̃(c)`.
    pub fn a_ttilde(&self, c: f64, a: Option<f64>) -> Result<f64> {
        if c.abs() >= C_SWITCH {
            return Ok(self.a_at(c, a)? / (c * c));
        }
        Ok(self.model.second_quotient(c)[0].re)
    }
}

/// Richardson extrapolation to `ε → 0` of values sampled at geometrically
/// decreasing `ε` (ratio `r`), assuming an error expansion in integer powers.
pub fn richardson(values: &[C64], r: f64) -> C64 {
    let mut v = values.to_vec();
    let mut p = 1;
    while v.len() > 1 {
        let f = r.powi(p);
        v = v.windows(2).map(|w| (w[1] * f - w[0]) / (f - 1.0)).collect();
        p += 1;
    }
    v[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_branches() {
        let up = log_ratio(C64::new(0.0, 1e-9));
        let dn = log_ratio(C64::new(0.0, -1e-9));
        assert!((up.im - PI).abs() < 1e-6);
        assert!((dn.im + PI).abs() < 1e-6);
        let c = C64::new(0.3, 0.02);
        assert!((log_ratio(c) - log_ratio_thin(c)).norm() < 1e-13);
        let c = C64::new(-0.7, -0.01);
        assert!((log_ratio(c) - log_ratio_thin(c)).norm() < 1e-13);
    }

    #[test]
    fn richardson_linear() {
        let v: Vec<C64> = [1e-1, 1e-2, 1e-3].iter().map(|e| C64::new(2.0 + 3.0 * e + 5.0 * e * e, 0.0)).collect();
        assert!((richardson(&v, 10.0).re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_model_polynomial() {
        let vals: Vec<Vec<C64>> = (-10..=10).map(|k| k as f64 * 0.01).map(|c| vec![C64::new(c * c * (1.0 + c), 0.0)]).collect();
        let m = DerivativeModel::new(0.01, vals).unwrap();
        let c = 0.03;
        assert!((m.quotient(c)[0].re - c * (1.0 + c)).abs() < 1e-12);
        assert!((m.second_quotient(c)[0].re - (1.0 + c)).abs() < 1e-10);
    }
}

#[cfg(test)]
mod solve_tests {
    use super::*;

    fn field(c: C64, alpha: u32) -> Phi1Field {
        solve_phi1(&SpectralPoint::new(c, alpha).unwrap(), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn w1_at_origin() {
        let f = field(C64::new(0.0, 0.0), 1);
        assert!(w1(&f).norm() < 1e-7);
        assert!(a_of(&f).unwrap().abs() < 1e-7);
        let f = field(C64::new(0.0, 0.0), 2);
        assert!(w1(&f).norm() > 0.1);
    }

    #[test]
    fn a_split_matches_w1() {
        for (c, al) in [(0.3, 1), (-0.6, 2), (0.95, 3)] {
            let f = field(C64::new(c, 0.0), al);
            let (a, b) = (a_of(&f).unwrap(), a_from_w1(&f).unwrap());
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} {b}");
        }
    }

    #[test]
    fn dual_formulas_and_conjugation() {
        let c = C64::new(0.5, 0.02);
        let f = field(c, 2);
        let (d, v) = (wronskian_direct(&f).unwrap(), wronskian_via_w1(&f).unwrap());
        assert!((d - v).norm() < 1e-8 * v.norm());
        let c = C64::new(0.3, 0.05);
        let up = wronskian_via_w1(&field(c, 2)).unwrap();
        let dn = wronskian_via_w1(&field(c.conj(), 2)).unwrap();
        assert!((up - dn.conj()).norm() < 1e-10 * up.norm());
    }

    #[test]
    fn small_imaginary_c() {
        let e = 1e-3;
        let w = wronskian_via_w1(&field(C64::new(0.0, e), 1)).unwrap();
        let r = w / C64::new(0.0, e);
        assert!((r - C64::new(0.0, 2.0 * PI)).norm() / (2.0 * PI) < 1e-2);
    }

    #[test]
    fn boundary_values_nonvanishing() {
        for c in [-0.9, -0.4, 0.0, 0.2, 0.7] {
            let a = a_value(c, 2, &SolveOptions::default()).unwrap();
            assert!(a * a + 4.0 * PI * PI * c * c >= 0.5);
        }
    }
}
