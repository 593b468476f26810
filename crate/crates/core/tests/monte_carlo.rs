mod common;

use common::*;
use probclone::optimizer::{mean_success, twirl_phase, DEFAULT_CLUSTER_TOL};
use probclone::scenarios::*;
use probclone::verify::run_mc;

const N: usize = 20_000;

#[test]
fn optimal_maps_match_analytic_values() {
    let cases = vec![
        universal_clone(2).unwrap(),
        transposition(1, 3).unwrap(),
        phase_covariant(2, 3).unwrap(),
        coherent_clone(2, 0.7, 3).unwrap(),
        depol_purify(0.6, Encoding::Parallel).unwrap(),
        depol_purify(0.6, Encoding::Perpendicular).unwrap(),
        ad_purify(3, 0.7).unwrap(),
    ];
    for (i, b) in cases.iter().enumerate() {
        let s = b.solve(DEFAULT_CLUSTER_TOL).unwrap();
        let rep = run_mc(&s.choi, b, N, 7 + i as u64).unwrap();
        assert!(rep.f_within(s.optimum.f_max, 4.0), "{:?}: {rep:?} vs {}", b.name, s.optimum.f_max);
        assert!(rep.p_within(s.solution.p_bar, 4.0), "{:?}: {rep:?} vs {}", b.name, s.solution.p_bar);
        let p = mean_success(&s.choi, &b.closed_a).unwrap();
        assert!(rep.p_within(p, 4.0));
        let hi_f = 1.0 + 3.0 * rep.f_stderr;
        assert!(rep.f_mean >= 0.0 && rep.f_mean <= hi_f);
        assert!(rep.p_mean >= 0.0 && rep.p_mean <= 1.0 + 3.0 * rep.p_stderr);
    }
}

#[test]
fn depolarizing_closed_form_target() {
    let eta = 0.6;
    let b = depol_purify(eta, Encoding::Parallel).unwrap();
    let e = b.explicit_map.clone().unwrap();
    let rep = run_mc(&e, &b, 100_000, 2024).unwrap();
    assert!(rep.f_within(depol_parallel_fidelity(eta), 4.0));
    assert!(rep.p_within(depol_parallel_probability(eta), 4.0));
}

#[test]
fn non_universal_maps_have_statistical_error() {
    let b = ad_purify(2, 0.6).unwrap();
    let e = random_feasible(&mut rng(5), b.in_dim, b.out_dim);
    let rep = run_mc(&e, &b, N, 3).unwrap();
    assert!(rep.universality_spread > 1e-6);
    let f = probclone::optimizer::mean_fidelity(&e, &b.closed_a, &b.closed_r).unwrap();
    assert!(rep.f_within(f, 4.0), "{rep:?} vs {f}");
    assert!(rep.p_within(mean_success(&e, &b.closed_a).unwrap(), 4.0));
    assert!(rep.f_stderr > 0.0 && rep.p_stderr > 0.0);
}

#[test]
fn twirled_phase_covariant_map_is_universal() {
    let b = phase_covariant(1, 2).unwrap();
    let (q, r) = b.charges.clone().unwrap();
    let e = random_feasible(&mut rng(17), b.in_dim, b.out_dim);
    let t = twirl_phase(&e, &q, &r, twirl_points(&q, &r)).unwrap();
    let rep = run_mc(&t, &b, 1000, 1).unwrap();
    assert!(rep.universality_spread <= 1e-9);
    assert!(rep.p_spread <= 1e-9);
}

#[test]
fn reports_are_byte_identical_per_seed() {
    let b = ad_purify(2, 0.6).unwrap();
    let e = random_feasible(&mut rng(5), b.in_dim, b.out_dim);
    let a = run_mc(&e, &b, 5000, 99).unwrap().to_json().unwrap();
    let c = run_mc(&e, &b, 5000, 99).unwrap().to_json().unwrap();
    assert_eq!(a, c);
    let one_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let d = one_thread.install(|| run_mc(&e, &b, 5000, 99).unwrap().to_json().unwrap());
    assert_eq!(a, d);
}
