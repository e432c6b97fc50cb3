//! Power-law fits of time series and field-by-field comparisons.

use crate::direct::{self, UniformGrid};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares fit of `log v = k log t + b` over a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub quantity: String,
    pub window: (f64, f64),
    pub exponent: f64,
    pub intercept: f64,
    /// root-mean-square residual in `log v`
    pub residual: f64,
    /// 95 % half-width of the exponent
    pub half_width: f64,
    pub samples: usize,
}

/// Fits the slope of `log v` against `log t` for the samples with `t` inside
/// `window` (inclusive).
pub fn decay_fit(quantity: &str, series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::Config(format!("bad fit window {window:?}")));
    }
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= window.0 && t <= window.1).collect();
    if pts.len() < 5 {
        return Err(Error::Data(format!("{quantity}: {} samples in the window, need ≥ 5", pts.len())));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Data(format!("{quantity}: non-positive value {v} at t = {t}")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Data(format!("{quantity}: degenerate time samples")));
    }
    let k = sxy / sxx;
    let b = my - k * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - k * x - b).powi(2)).sum();
    let dof = n - 2.0;
    let se = (ss / dof / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Data(e.to_string()))?.inverse_cdf(0.975);
    if !k.is_finite() {
        return Err(Error::Data(format!("{quantity}: non-finite exponent")));
    }
    Ok(DecayFit {
        quantity: quantity.to_string(),
        window,
        exponent: k,
        intercept: b,
        residual: (ss / n).sqrt(),
        half_width: q * se,
        samples: pts.len(),
    })
}

/// `n` log-spaced times covering `[t0, t1]`.
pub fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t0];
    }
    let (a, b) = (t0.ln(), t1.ln());
    (0..n)
        .map(|k| match k {
            0 => t0,
            _ if k == n - 1 => t1,
            _ => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Values of one field at one time, optionally with its `y`-derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<C64>,
    pub deriv: Option<Vec<C64>>,
}

impl Snapshot {
    pub fn new(t: f64, values: Vec<C64>) -> Self {
        Snapshot { t, values, deriv: None }
    }

    fn deriv_on(&self, grid: &UniformGrid) -> Vec<C64> {
        self.deriv.clone().unwrap_or_else(|| direct::centered_diff(&self.values, grid.h))
    }
}

/// Discrepancy of `a` against the reference `b` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t: f64,
    pub rel_l2: f64,
    pub linf: f64,
    pub rel_h1: f64,
}

fn rel(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Relative `L²`, absolute `L∞` and relative `H¹` discrepancies per time.
/// Derivatives default to centered differences when a snapshot carries none.
pub fn compare(grid: &UniformGrid, a: &[Snapshot], b: &[Snapshot]) -> Result<Vec<CompareRow>> {
    if a.len() != b.len() {
        return Err(Error::Grid(format!("{} snapshots against {}", a.len(), b.len())));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if (x.t - y.t).abs() > 1e-12 * x.t.abs().max(1.0) {
                return Err(Error::Grid(format!("times differ: {} vs {}", x.t, y.t)));
            }
            if x.values.len() != grid.len() || y.values.len() != grid.len() {
                return Err(Error::Grid("snapshot length differs from the grid".into()));
            }
            let d: Vec<C64> = x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect();
            let (dx, dy) = (x.deriv_on(grid), y.deriv_on(grid));
            let dd: Vec<C64> = dx.iter().zip(&dy).map(|(p, q)| p - q).collect();
            let h = grid.h;
            let l2 = direct::l2_norm(&d, h);
            let h1 = (l2 * l2 + direct::l2_norm(&dd, h).powi(2)).sqrt();
            let ref_l2 = direct::l2_norm(&y.values, h);
            let ref_h1 = (ref_l2 * ref_l2 + direct::l2_norm(&dy, h).powi(2)).sqrt();
            Ok(CompareRow {
                t: x.t,
                rel_l2: rel(l2, ref_l2),
                linf: d.iter().map(|z| z.norm()).fold(0.0, f64::max),
                rel_h1: rel(h1, ref_h1),
            })
        })
        .collect()
}
