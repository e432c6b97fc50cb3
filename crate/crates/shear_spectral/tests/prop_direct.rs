mod common;

use common::for_seeds;
use proptest::prelude::*;
use shear_spectral::direct::{self, UniformGrid};
use shear_spectral::evolution::{eigen_projection, CGridOptions, DataSpec, Family, InitialData, ModeTable};
use shear_spectral::harness::checks;
use shear_spectral::harness::config::Tolerances;
use shear_spectral::rayleigh::SolveOptions;
use shear_spectral::C64;

fn omega(g: &UniformGrid, k: [f64; 4]) -> Vec<C64> {
    let fam = [Family::Gaussian, Family::OddGaussian, Family::SechCubed, Family::Bump];
    g.sample(|y| C64::new(fam.iter().zip(k).map(|(f, c)| c * f.eval(y)).sum(), 0.0))
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
}

fn rel_l2(a: &[C64], b: &[C64], h: f64) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    direct::l2_norm(&d, h) / direct::l2_norm(b, h)
}

#[test]
fn rhs_is_linear() {
    let g = UniformGrid::new(20.0, 0.05).unwrap();
    for_seeds(8, (coeffs(), coeffs(), 1u32..=4), |(k1, k2, alpha)| {
        let (w1, w2) = (omega(&g, k1), omega(&g, k2));
        let sum: Vec<C64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let (r1, r2, rs) =
            (direct::rhs(&w1, alpha, &g).unwrap(), direct::rhs(&w2, alpha, &g).unwrap(), direct::rhs(&sum, alpha, &g).unwrap());
        let scale = rs.iter().chain(&r1).chain(&r2).map(|z| z.norm()).fold(0.0, f64::max);
        for j in 0..g.len() {
            prop_assert!((rs[j] - r1[j] - r2[j]).norm() <= 1e-13 * scale);
        }
        Ok(())
    });
}

#[test]
fn rhs_of_real_even_data_is_imaginary_and_odd() {
    let g = UniformGrid::new(20.0, 0.05).unwrap();
    let c = g.center();
    for_seeds(8, (coeffs(), 1u32..=4), |(mut k, alpha)| {
        k[1] = 0.0;
        let r = direct::rhs(&omega(&g, k), alpha, &g).unwrap();
        let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for j in 0..=c {
            prop_assert!(r[c + j].re.abs() <= 1e-14 * scale);
            prop_assert!((r[c + j] + r[c - j]).norm() <= 1e-13 * scale);
        }
        Ok(())
    });
}

#[test]
fn zero_data_stay_zero() {
    let g = UniformGrid::new(10.0, 0.1).unwrap();
    let w0 = vec![C64::new(0.0, 0.0); g.len()];
    for s in direct::evolve(&w0, 1, &g, &[1.0, 2.0], 0.1).unwrap() {
        assert!(s.omega.iter().chain(&s.psi).all(|z| z.norm() == 0.0));
    }
    let ab = direct::conserved_ab(&direct::evolve(&w0, 1, &g, &[1.0], 0.1).unwrap(), &g).unwrap();
    assert_eq!((ab[0].1.norm(), ab[0].2.norm()), (0.0, 0.0));
}

#[test]
fn fourth_order_in_time() {
    let g = UniformGrid::new(20.0, 0.05).unwrap();
    let w0 = omega(&g, [1.0, 1.0, 0.0, 0.0]);
    let at = |dt: f64| direct::evolve(&w0, 1, &g, &[5.0], dt).unwrap().remove(0).omega;
    let reference = at(0.025);
    let e1 = rel_l2(&at(0.2), &reference, g.h);
    let e2 = rel_l2(&at(0.1), &reference, g.h);
    let ratio = e1 / e2;
    assert!((16.0 * 0.8..=16.0 * 1.2).contains(&ratio), "{ratio} ({e1:e}, {e2:e})");
}

#[test]
fn ab_are_conserved() {
    let tol = Tolerances::default();
    let fine = UniformGrid::new(20.0, 0.0125).unwrap();
    for_seeds(1, coeffs(), |k| {
        let spec = DataSpec::Families(
            [Family::Gaussian, Family::OddGaussian, Family::SechCubed, Family::Bump]
                .into_iter()
                .zip(k)
                .map(|(family, coeff)| shear_spectral::evolution::Term { family, coeff, coeff_im: 0.0 })
                .collect(),
        );
        let data = InitialData::new(1, spec, UniformGrid::new(20.0, 0.05).unwrap()).unwrap();
        for c in checks::conservation(&tol, &data, &fine, 20.0, 0.01).unwrap() {
            prop_assert!(c.passed, "{}", c.line());
        }
        Ok(())
    });
}

#[test]
fn even_data_keep_a_zero() {
    let g = UniformGrid::new(20.0, 0.0125).unwrap();
    for_seeds(1, coeffs(), |mut k| {
        k[1] = 0.0;
        let traj = direct::evolve(&omega(&g, k), 1, &g, &[5.0, 10.0, 20.0], 0.01).unwrap();
        for (_, a, b) in direct::conserved_ab(&traj, &g).unwrap() {
            prop_assert!(a.norm() <= 1e-6 * b.norm().max(1.0), "a = {a}");
        }
        Ok(())
    });
}

#[test]
fn direct_agrees_with_spectral() {
    let tol = Tolerances::default();
    let grid = UniformGrid::new(20.0, 0.05).unwrap();
    let fine = UniformGrid::new(20.0, 0.0125).unwrap();
    let data = InitialData::new(2, DataSpec::family(Family::Bump), grid).unwrap();
    let table = ModeTable::build(&data, 10.0, &CGridOptions::default(), &SolveOptions::default()).unwrap();
    for c in checks::spectral_vs_direct(&tol, &table, &data, &fine, &[1.0, 5.0, 10.0], 0.01).unwrap() {
        assert!(c.passed, "{}", c.line());
    }
}

#[test]
fn direct_l2_damps_at_alpha_two() {
    let g = UniformGrid::new(20.0, 0.0125).unwrap();
    let ts = shear_spectral::harness::fit::log_times(10.0, 50.0, 9);
    let traj = direct::evolve(&omega(&g, [1.0, 0.5, 0.0, 0.0]), 2, &g, &ts, 0.01).unwrap();
    let series: Vec<_> = traj.iter().map(|s| (s.t, direct::l2_norm(&s.psi, g.h))).collect();
    assert!(series.windows(2).all(|w| w[1].1 < w[0].1), "{series:?}");
    let fit = shear_spectral::harness::decay_fit("L2", &series, (10.0, 50.0)).unwrap();
    assert!((-2.3..=-1.6).contains(&fit.exponent), "{}", fit.exponent);
}

#[test]
fn mode_one_approaches_projection() {
    let g = UniformGrid::new(20.0, 0.0125).unwrap();
    let w0 = omega(&g, [1.0, 1.0, 0.0, 0.0]);
    let (a0, b0) = direct::ab_functionals(&w0, &g).unwrap();
    assert!(a0.norm() > 0.1 && b0.norm() > 0.1);
    let proj = eigen_projection(a0, b0, &g.ys);
    let d: Vec<f64> = direct::evolve(&w0, 1, &g, &[10.0, 50.0], 0.01).unwrap().iter().map(|s| rel_l2(&s.psi, &proj, g.h)).collect();
    assert!(d[1] < d[0], "{d:?}");
}
