//! The tanh profile, its derivatives, the critical-point map and the
//! complex spectral domains.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

pub const DEFAULT_EPS0: f64 = 0.25;
pub const DEFAULT_C_O: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub y: f64,
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub d3u: f64,
}

/// Evaluates `u = tanh y` and its first three derivatives.
pub fn eval_flow(y: f64) -> Result<FlowSample> {
    if !y.is_finite() {
        return Err(Error::NonFinite("y"));
    }
    Ok(flow_unchecked(y))
}

#[inline]
pub(crate) fn flow_unchecked(y: f64) -> FlowSample {
    let u = y.tanh();
    let s = 1.0 / y.cosh();
    let du = s * s;
    let d2u = -2.0 * u * du;
    let d3u = -2.0 * (du * du + u * d2u);
    FlowSample { y, u, du, d2u, d3u }
}

#[inline]
pub fn u(y: f64) -> f64 {
    y.tanh()
}

#[inline]
pub fn du(y: f64) -> f64 {
    let s = 1.0 / y.cosh();
    s * s
}

#[inline]
pub fn d2u(y: f64) -> f64 {
    -2.0 * y.tanh() * du(y)
}

/// `u(y) - u(y_c)` without cancellation near `y_c`.
#[inline]
pub fn u_minus_uc(y: f64, y_c: f64) -> f64 {
    (y - y_c).sinh() / (y.cosh() * y_c.cosh())
}

/// Inverse of the profile: the critical point `y_c` with `tanh y_c = c`.
pub fn critical_point(c: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::NonFinite("c"));
    }
    if c.abs() >= 1.0 {
        return Err(Error::OutOfRange(format!("|c| = {} must be < 1", c.abs())));
    }
    let y = 0.5 * ((1.0 + c) / (1.0 - c)).ln();
    if !y.is_finite() {
        return Err(Error::OutOfRange(format!("c = {c} too close to ±1")));
    }
    Ok(y)
}

/// Membership in the thin complex neighbourhood of `(-1, 1)`.
///
/// With `inclusive` set, real `c` in `(-1, 1)` is accepted as well. The
/// wavenumber does not enter the shape of the domain.
pub fn in_domain_o(c: C64, _alpha: u32, eps0: f64, c_o: f64, inclusive: bool) -> bool {
    if !(c.re.is_finite() && c.im.is_finite()) || c.re.abs() >= 1.0 {
        return false;
    }
    let eps = c.im.abs();
    if eps == 0.0 {
        return inclusive;
    }
    eps < ((1.0 - c.re * c.re) / c_o).min(eps0)
}

/// A spectral parameter together with its critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub c: C64,
    pub alpha: u32,
    pub y_c: f64,
    pub eps0: f64,
    pub c_o: f64,
}

impl SpectralPoint {
    /// Builds a point with the default domain constants. Complex `c` must lie
    /// in the open domain; real `c` must lie in `(-1, 1)`.
    pub fn new(c: C64, alpha: u32) -> Result<Self> {
        Self::with_domain(c, alpha, DEFAULT_EPS0, DEFAULT_C_O)
    }

    pub fn real(c: f64, alpha: u32) -> Result<Self> {
        Self::new(C64::new(c, 0.0), alpha)
    }

    pub fn with_domain(c: C64, alpha: u32, eps0: f64, c_o: f64) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::OutOfRange("alpha must be positive".into()));
        }
        if !in_domain_o(c, alpha, eps0, c_o, true) {
            return Err(Error::OutOfRange(format!("c = {c} outside the spectral domain")));
        }
        let y_c = critical_point(c.re)?;
        Ok(SpectralPoint { c, alpha, y_c, eps0, c_o })
    }

    pub fn is_real(&self) -> bool {
        self.c.im == 0.0
    }

    pub fn alpha_f(&self) -> f64 {
        self.alpha as f64
    }

    /// `u(y) - c` evaluated without cancellation.
    #[inline]
    pub fn u_minus_c(&self, y: f64) -> C64 {
        C64::new(u_minus_uc(y, self.y_c), -self.c.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values() {
        let s = eval_flow(0.0).unwrap();
        assert_eq!((s.u, s.du, s.d2u, s.d3u), (0.0, 1.0, 0.0, -2.0));
    }

    #[test]
    fn value_at_one() {
        // high-precision values of tanh and its derivatives at y = 1
        let s = eval_flow(1.0).unwrap();
        assert!((s.u - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!((s.du - 0.419_974_341_614_026_1).abs() < 1e-15);
        assert!((s.d2u + 0.639_700_008_449_224_5).abs() < 1e-15);
        assert!((s.d3u - 0.621_626_680_771_296_3).abs() < 1e-14);
    }

    #[test]
    fn parity() {
        let a = eval_flow(1.0).unwrap();
        let b = eval_flow(-1.0).unwrap();
        assert_eq!(b.u, -a.u);
        assert_eq!(b.du, a.du);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(eval_flow(f64::NAN).is_err());
        assert!(eval_flow(f64::INFINITY).is_err());
    }

    #[test]
    fn critical_points() {
        assert_eq!(critical_point(0.0).unwrap(), 0.0);
        let y = critical_point(0.5).unwrap();
        assert!((y - 0.549_306_144_334_054_8).abs() < 1e-15);
        assert_eq!(critical_point(-0.5).unwrap(), -y);
        assert!(critical_point(1.0).is_err());
        assert!(critical_point(-1.5).is_err());
        assert!(critical_point(1.0 - 1e-17).is_err());
    }

    #[test]
    fn domain_examples() {
        assert!(in_domain_o(C64::new(0.5, 0.01), 1, 0.25, 8.0, false));
        assert!(!in_domain_o(C64::new(0.99, 0.1), 1, 0.25, 8.0, false));
        assert!(in_domain_o(C64::new(0.3, 0.0), 1, 0.25, 8.0, true));
        assert!(!in_domain_o(C64::new(0.3, 0.0), 1, 0.25, 8.0, false));
    }
}
