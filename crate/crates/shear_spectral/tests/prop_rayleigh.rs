mod common;

use common::{check_bounds, for_seeds};
use proptest::prelude::*;
use shear_spectral::flow::SpectralPoint;
use shear_spectral::rayleigh::{solve_phi1, SolveOptions};
use shear_spectral::C64;

#[test]
fn picard_monotonicity_and_bounds() {
    let opts = SolveOptions::default();
    for_seeds(50, (-0.95..0.95f64, 1u32..=4), |(c, alpha)| {
        let f = solve_phi1(&SpectralPoint::real(c, alpha).unwrap(), &opts).unwrap();
        prop_assert!(f.contraction < 1.0, "contraction {}", f.contraction);
        prop_assert!(f.update <= opts.tol);
        check_bounds(&f)
    });
}

#[test]
fn complex_perturbation_is_linear_in_eps() {
    let opts = SolveOptions::default();
    for alpha in 1..=3 {
        let base = solve_phi1(&SpectralPoint::real(0.3, alpha).unwrap(), &opts).unwrap();
        let dev = |e: f64| {
            let f = solve_phi1(&SpectralPoint::new(C64::new(0.3, e), alpha).unwrap(), &opts).unwrap();
            base.grid
                .nodes
                .iter()
                .zip(&base.phi1)
                .filter(|(y, _)| f.contains(**y))
                .map(|(&y, v)| (f.phi1_at(y).unwrap() / v - 1.0).norm())
                .fold(0.0, f64::max)
        };
        let (d2, d3) = (dev(1e-2), dev(1e-3));
        let ratio = d2 / d3;
        assert!((9.0..11.0).contains(&ratio), "alpha {alpha}: {d2:e} / {d3:e}");
    }
}

#[test]
fn complex_perturbation_stays_within_half_and_three_halves() {
    let opts = SolveOptions::default();
    for_seeds(4, (-0.8..0.8f64, 0.0..1.0f64, 1u32..=3), |(cr, s, alpha)| {
        let cap = 0.25f64.min((1.0 - cr * cr) / 8.0);
        let e = (0.01 + 0.98 * s) * cap;
        let base = solve_phi1(&SpectralPoint::real(cr, alpha).unwrap(), &opts).unwrap();
        let f = solve_phi1(&SpectralPoint::new(C64::new(cr, e), alpha).unwrap(), &opts).unwrap();
        for (j, &y) in base.grid.nodes.iter().enumerate() {
            if !f.contains(y) {
                continue;
            }
            let r = (f.phi1_at(y).unwrap() / base.phi1[j]).norm();
            prop_assert!((0.5..=1.5).contains(&r), "ratio {r} at y = {y}, c = {cr}+{e}i");
        }
        Ok(())
    });
}
