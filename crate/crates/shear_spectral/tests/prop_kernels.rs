mod common;

use common::for_seeds;
use proptest::prelude::*;
use shear_spectral::evolution::Family;
use shear_spectral::flow::{self, SpectralPoint};
use shear_spectral::harness::checks;
use shear_spectral::harness::config::Tolerances;
use shear_spectral::kernels::{cal_t, cal_t_excision, GammaFn};
use shear_spectral::rayleigh::{solve_phi1, SolveOptions};
use shear_spectral::C64;

fn profile(k: [f64; 3]) -> impl Fn(f64) -> C64 + Sync {
    move |y| C64::new(k[0] * Family::Gaussian.eval(y) + k[1] * Family::OddGaussian.eval(y) + k[2] * Family::SechCubed.eval(y), 0.0)
}

fn coeffs() -> impl Strategy<Value = [f64; 3]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
}

#[test]
fn decomposition_matches_excised_principal_value() {
    let opts = SolveOptions::default();
    for_seeds(10, (coeffs(), -0.8..0.8f64, 1u32..=3), |(k, c, alpha)| {
        let field = solve_phi1(&SpectralPoint::real(c, alpha).unwrap(), &opts).unwrap();
        let f = profile(k);
        let t = cal_t(&field, &f).unwrap();
        let ex = cal_t_excision(&field, &f, 0.02).unwrap();
        prop_assert!((t.pv.re - ex).abs() < 1e-4, "{} vs {ex} at c = {c}, alpha = {alpha}", t.pv.re);
        prop_assert!(((t.plus + t.minus) / 2.0 - t.pv).norm() <= 1e-14 * t.pv.norm().max(1.0));
        Ok(())
    });
}

#[test]
fn gamma_solves_the_homogeneous_equation() {
    let opts = SolveOptions::default();
    for_seeds(4, (-0.8..0.8f64, 1u32..=3), |(c, alpha)| {
        let field = solve_phi1(&SpectralPoint::real(c, alpha).unwrap(), &opts).unwrap();
        let g = GammaFn::new(&field);
        let yc = field.y_c();
        let a2 = (alpha * alpha) as f64;
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in -600..=600 {
            let y = yc + 0.01 * k as f64;
            if (y - yc).abs() < 0.2 {
                continue;
            }
            let (gm, g0, gp) = (g.at(y - h).re, g.at(y).re, g.at(y + h).re);
            let d2 = (gp - 2.0 * g0 + gm) / (h * h);
            let res = d2 - a2 * g0 - flow::d2u(y) / flow::u_minus_uc(y, yc) * g0;
            worst = worst.max(res.abs());
            scale = scale.max(a2 * g0.abs());
        }
        prop_assert!(worst / scale < 1e-4, "residual {worst:e} against {scale:e}");
        Ok(())
    });
}

#[test]
fn angular_average_near_embedded_eigenvalue() {
    let opts = SolveOptions::default();
    let tol = Tolerances::default();
    for_seeds(1, (0.2..1.0f64, -1.0..1.0f64), |(kg, ko)| {
        let f = move |y: f64| C64::new(kg * Family::Gaussian.eval(y) + ko * Family::OddGaussian.eval(y), 0.0);
        for delta in [1e-2, 1e-3] {
            let r = checks::lap(&tol, &f, delta, &opts).unwrap();
            let avg = &r[1];
            prop_assert!(avg.passed, "delta {delta}: {}", avg.line());
        }
        Ok(())
    });
}
