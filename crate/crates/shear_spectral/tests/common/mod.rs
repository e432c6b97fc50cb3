#![allow(dead_code)]

use proptest::prop_assert;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use shear_spectral::rayleigh::Phi1Field;

pub const SEEDS: [u64; 3] = [11, 23, 37];

/// Runs `test` on `cases` draws from `strat` for each of the fixed seeds.
pub fn for_seeds<S: Strategy>(cases: u32, strat: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) {
    for seed in SEEDS {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&seed.to_le_bytes());
        let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &bytes);
        let cfg = Config { cases, failure_persistence: None, max_shrink_iters: 16, ..Config::default() };
        let mut runner = TestRunner::new_with_rng(cfg, rng);
        if let Err(e) = runner.run(&strat, &test) {
            panic!("seed {seed}: {e}");
        }
    }
}

/// Monotonicity away from `y_c`, `φ₁ ≥ 1`, and
/// `0 ≤ (y − y_c)φ₁′ ≤ α²(y − y_c)²φ₁` on the nodes of a real field.
pub fn check_bounds(f: &Phi1Field) -> Result<(), TestCaseError> {
    let yc = f.y_c();
    let a2 = f.point.alpha_f().powi(2);
    let nodes = &f.grid.nodes;
    let k = nodes.partition_point(|&y| y < yc);
    let rel = 1e-10;
    // right of y_c walking outwards, then left
    let right: Vec<usize> = (k..nodes.len()).collect();
    let left: Vec<usize> = (0..k).rev().collect();
    for side in [right, left] {
        let mut prev = 1.0;
        for j in side {
            let y = nodes[j];
            let v = f.phi1[j];
            prop_assert!(v.im == 0.0);
            let v = v.re;
            prop_assert!(v >= 1.0 - rel, "phi1({y}) = {v} < 1");
            prop_assert!(v >= prev * (1.0 - rel), "not monotone at {y}: {v} < {prev}");
            prev = v;
            let d = (y - yc) * f.dphi1[j].re;
            let cap = a2 * (y - yc).powi(2) * v;
            prop_assert!(d >= -rel * v, "(y - y_c) phi1' = {d} < 0 at {y}");
            prop_assert!(d <= cap * (1.0 + rel) + 1e-14, "(y - y_c) phi1' = {d} above {cap} at {y}");
        }
    }
    Ok(())
}
