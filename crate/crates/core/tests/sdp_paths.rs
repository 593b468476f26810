use probclone::densec::herm_eig;
use probclone::optimizer::{optimize, OptimizerResult, DEFAULT_CLUSTER_TOL};
use probclone::scenarios::*;
use probclone::sdp::{lp_path, pg_path, solve, PgOptions, SdpPath, SdpProblem};
use probclone::Error;

fn problem(b: &ScenarioBundle) -> (OptimizerResult, SdpProblem) {
    let res = optimize(&b.closed_a, &b.closed_r, b.in_dim, b.out_dim, DEFAULT_CLUSTER_TOL).unwrap();
    let charges = b.charges.as_ref().map(|(q, r)| (q.as_slice(), r.as_slice()));
    let p = SdpProblem::new(&res, &b.closed_a, charges).unwrap();
    (res, p)
}

#[test]
fn projected_gradient_agrees_with_linear_program() {
    let cases = vec![
        depol_purify(0.3, Encoding::Parallel).unwrap(),
        depol_purify(0.8, Encoding::Parallel).unwrap(),
        ad_purify(2, 0.5).unwrap(),
        ad_purify(2, 0.95).unwrap(),
        ad_purify(4, 0.7).unwrap(),
        phase_covariant(2, 3).unwrap(),
        phase_covariant(3, 6).unwrap(),
        coherent_clone(2, 0.5, 2).unwrap(),
    ];
    for b in cases {
        let (res, p) = problem(&b);
        let lp = lp_path(&p).unwrap();
        let pg = pg_path(&p, PgOptions::default()).unwrap();
        assert_eq!(lp.path, SdpPath::LinearProgram);
        assert_eq!(pg.path, SdpPath::ProjectedGradient);
        assert!((lp.p_bar - pg.p_bar).abs() <= 1e-6, "{:?} {}: {} {}", b.name, b.label, lp.p_bar, pg.p_bar);
        assert!(pg.p_bar <= lp.p_bar + 1e-9);
        assert!(pg.duality_gap_estimate >= -1e-9);
        for sol in [&lp, &pg] {
            let e = sol.choi(&res).unwrap();
            e.validate().unwrap();
            assert!(herm_eig(&e.input_marginal()).unwrap().max() <= 1.0 + 1e-8);
        }
    }
}

#[test]
fn one_dimensional_cluster_has_closed_form() {
    for eta in [0.2, 0.6, 0.9] {
        let b = ad_purify(3, eta).unwrap();
        let (res, p) = problem(&b);
        assert_eq!(p.dim(), 1);
        let v = &res.k_basis()[0];
        let e = probclone::optimizer::ChoiOperator::unchecked(
            probclone::densec::CMatrix::projector(v),
            b.in_dim,
            b.out_dim,
        )
        .unwrap();
        let lmax = herm_eig(&e.input_marginal()).unwrap().max();
        let want = probclone::optimizer::mean_success(&e.scaled(1.0 / lmax), &b.closed_a).unwrap();
        for sol in [solve(&p).unwrap(), pg_path(&p, PgOptions::default()).unwrap()] {
            assert!((sol.p_bar - want).abs() < 1e-9);
        }
        assert!((want - ad_p3(eta)).abs() < 1e-9);
    }
}

#[test]
fn non_diagonal_problems_fall_back_to_gradient_path() {
    let b = depol_purify(0.5, Encoding::Perpendicular).unwrap();
    let (_, p) = problem(&b);
    assert!(matches!(lp_path(&p), Err(Error::NoLpStructure(_))));
    let s = solve(&p).unwrap();
    assert_eq!(s.path, SdpPath::ProjectedGradient);
    assert!(s.converged);
    assert!(s.duality_gap_estimate <= 1e-9);
}

#[test]
fn gradient_path_reports_unconverged_iterates() {
    let b = depol_purify(0.5, Encoding::Perpendicular).unwrap();
    let (res, p) = problem(&b);
    let opts = PgOptions { max_iter: 3, ..PgOptions::default() };
    let s = pg_path(&p, opts).unwrap();
    assert!(!s.converged);
    assert!(s.iterations <= 3);
    s.choi(&res).unwrap().validate().unwrap();
}

#[test]
fn trivial_bound_scenarios() {
    for b in [universal_clone(3).unwrap(), transposition(2, 3).unwrap(), phase_covariant(1, 2).unwrap()] {
        let (_, p) = problem(&b);
        let s = solve(&p).unwrap();
        assert_eq!(s.path, SdpPath::TrivialBound, "{:?}", b.name);
        assert!((s.p_bar - 1.0).abs() < 1e-9);
        assert!((p.trivial_bound().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn solution_serializes() {
    let (_, p) = problem(&ad_purify(2, 0.7).unwrap());
    let s = solve(&p).unwrap();
    let json = serde_json::to_value(&s).unwrap();
    assert_eq!(json["path"], "linear-program");
    assert!((json["p_bar"].as_f64().unwrap() - ad_p2(0.7)).abs() < 1e-9);
}
