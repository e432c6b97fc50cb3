mod common;

use common::for_seeds;
use proptest::prelude::*;
use shear_spectral::direct::UniformGrid;
use shear_spectral::evolution::{h1_from, psi_mode, psi_series, CGridOptions, DataSpec, Family, InitialData, ModeTable, Term};
use shear_spectral::harness::fit::{decay_fit, log_times};
use shear_spectral::rayleigh::SolveOptions;
use std::sync::OnceLock;

fn grid() -> UniformGrid {
    UniformGrid::new(20.0, 0.05).unwrap()
}

fn term(family: Family, coeff: f64) -> Term {
    Term { family, coeff, coeff_im: 0.0 }
}

/// `α = 1`, gaussian plus odd gaussian (`a₀ = √π`, `b₀ = 1`), resolved to `t = 400`.
fn mode_one() -> &'static ModeTable {
    static T: OnceLock<ModeTable> = OnceLock::new();
    T.get_or_init(|| {
        let spec = DataSpec::Families(vec![term(Family::Gaussian, 1.0), term(Family::OddGaussian, 1.0)]);
        let data = InitialData::new(1, spec, grid()).unwrap();
        ModeTable::build(&data, 400.0, &CGridOptions::default(), &SolveOptions::default()).unwrap()
    })
}

const TIMES: [f64; 4] = [50.0, 100.0, 200.0, 400.0];

/// `t‖ψ̂ − projection [− a₀f₁]‖_{H¹}` at [`TIMES`].
fn weighted_remainders(rank_one: bool) -> Vec<f64> {
    let g = grid();
    psi_series(&TIMES, mode_one(), &g)
        .unwrap()
        .iter()
        .map(|f| {
            let (v, dv) = f.parts.as_ref().unwrap().remainder(f, rank_one);
            f.t * h1_from(&v, &dv, g.h)
        })
        .collect()
}

#[test]
fn parts_sum_to_psi() {
    let g = grid();
    for_seeds(3, 0.0..400.0f64, |t| {
        let f = psi_mode(t, mode_one(), &g).unwrap();
        let p = f.parts.as_ref().unwrap();
        let scale = f.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for j in 0..f.psi.len() {
            let s = p.projection[j] + p.rank_one[j] + p.regular[j];
            prop_assert!((f.psi[j] - s).norm() <= 1e-14 * scale);
            let ds = p.d_projection[j] + p.d_rank_one[j] + p.d_regular[j];
            prop_assert!((f.dpsi[j] - ds).norm() <= 1e-14 * f.dpsi.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        Ok(())
    });
}

#[test]
fn mode_one_remainder_decays_like_inverse_time() {
    let w = weighted_remainders(true);
    let cap = 2.0 * w[0];
    assert!(w.iter().all(|&v| v <= cap), "{w:?}");
}

/// Without the rank-one term the weighted remainder should grow. For this
/// datum it does not: `∂_y f₁` itself decays like `1/t`, so both variants
/// share the rate and this assertion fails.
#[test]
#[ignore = "does not hold numerically; f1 decays at the same 1/t rate in H1"]
fn mode_one_rank_one_term_is_necessary() {
    let w = weighted_remainders(false);
    assert!(w[3] > 2.0 * w[0], "{w:?}");
}

/// The asymptotic rates set in late at `α = 1`: local `L²` exponents are
/// still near −1.2 on `[10, 100]` and reach −1.9 only past `t = 200`.
#[test]
fn mode_one_without_singular_data_decays_like_higher_modes() {
    // even, vanishing at 0: a₀ = b₀ = 0
    let spec = DataSpec::Families(vec![term(Family::SechCubed, 1.0), term(Family::Gaussian, -2.0)]);
    let data = InitialData::new(1, spec, grid()).unwrap();
    assert!(data.a0.norm() < 1e-12 && data.b0.norm() < 1e-12);
    let window = (150.0, 400.0);
    let table = ModeTable::build(&data, window.1, &CGridOptions::default(), &SolveOptions::default()).unwrap();
    let fields = psi_series(&log_times(window.0, window.1, 9), &table, &data.grid).unwrap();
    let l2: Vec<_> = fields.iter().map(|f| (f.t, f.l2())).collect();
    let h1: Vec<_> = fields.iter().map(|f| (f.t, f.h1())).collect();
    let fl = decay_fit("L2", &l2, window).unwrap();
    let fh = decay_fit("H1", &h1, window).unwrap();
    assert!((-2.2..=-1.8).contains(&fl.exponent), "L2 exponent {}", fl.exponent);
    assert!((-1.2..=-0.8).contains(&fh.exponent), "H1 exponent {}", fh.exponent);
}

#[test]
fn c_grid_self_convergence() {
    let g = grid();
    let data = InitialData::new(2, DataSpec::family(Family::Gaussian), g.clone()).unwrap();
    let opts = SolveOptions::default();
    let coarse = CGridOptions::default();
    let fine = CGridOptions { subdivide: 2, ..coarse };
    let a = ModeTable::build(&data, 10.0, &coarse, &opts).unwrap();
    let b = ModeTable::build(&data, 10.0, &fine, &opts).unwrap();
    assert!(b.kernel().c_grid.len() == 2 * a.kernel().c_grid.len());
    for t in [1.0, 5.0, 10.0] {
        let (x, y) = (psi_mode(t, &a, &g).unwrap(), psi_mode(t, &b, &g).unwrap());
        let d: Vec<_> = x.psi.iter().zip(&y.psi).map(|(p, q)| p - q).collect();
        let rel = shear_spectral::direct::l2_norm(&d, g.h) / y.l2();
        assert!(rel < 1e-6, "t = {t}: {rel:e}");
    }
}
