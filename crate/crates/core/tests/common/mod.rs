#![allow(dead_code)]

use num_complex::Complex64 as C64;
use probclone::densec::CMatrix;
use probclone::optimizer::ChoiOperator;
use probclone::scenarios::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

/// `G G†` with `G` of random rank, scaled so that `Tr_out E ⪯ 1` is tight.
pub fn random_feasible(rng: &mut impl Rng, in_dim: usize, out_dim: usize) -> ChoiOperator {
    let n = in_dim * out_dim;
    let rank = rng.random_range(1..=n);
    let g = random_matrix(rng, n, rank);
    ChoiOperator::unchecked(&g * &g.adjoint(), in_dim, out_dim)
        .unwrap()
        .renormalized()
        .unwrap()
}

/// One or two points per scenario with moderate dimensions.
pub fn scenario_points() -> Vec<ScenarioBundle> {
    vec![
        universal_clone(2).unwrap(),
        universal_clone(4).unwrap(),
        transposition(2, 2).unwrap(),
        transposition(1, 3).unwrap(),
        phase_covariant(1, 2).unwrap(),
        phase_covariant(2, 4).unwrap(),
        coherent_clone(2, 0.7, 3).unwrap(),
        depol_purify(0.6, Encoding::Parallel).unwrap(),
        depol_purify(0.4, Encoding::Perpendicular).unwrap(),
        ad_purify(2, 0.7).unwrap(),
        ad_purify(3, 0.5).unwrap(),
    ]
}

pub fn arb_scenario() -> impl Strategy<Value = ScenarioBundle> {
    prop_oneof![
        (1usize..=5).prop_map(|m| universal_clone(m).unwrap()),
        (1usize..=3, 2usize..=3).prop_map(|(n, d)| transposition(n, d).unwrap()),
        (1usize..=4, 0usize..=2).prop_map(|(n, extra)| phase_covariant(n, n + extra).unwrap()),
        (2usize..=3, 0.2f64..1.0, 0usize..=6)
            .prop_map(|(m, r, c)| coherent_clone(m, r, c).unwrap()),
        (0.05f64..0.95, any::<bool>()).prop_map(|(eta, par)| {
            let enc = if par { Encoding::Parallel } else { Encoding::Perpendicular };
            depol_purify(eta, enc).unwrap()
        }),
        (1usize..=6, 0.05f64..0.99).prop_map(|(n, eta)| ad_purify(n, eta).unwrap()),
    ]
}

/// Number of twirl points exceeding every charge difference.
pub fn twirl_points(q: &[i64], r: &[i64]) -> usize {
    let span = |v: &[i64]| v.iter().max().unwrap() - v.iter().min().unwrap();
    (2 * (span(q) + span(r)) + 1) as usize
}
