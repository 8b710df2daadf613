use proptest::prelude::*;
use symstruct::generator_core::assemble_generator;
use symstruct::operator_algebra::{
    cplx, min_eigenvalue, superop_sandwich, CMatrix, DensityOperator, Superoperator, TimeGrid,
};
use symstruct::reference_models::{
    jc_coefficients, jc_exact_map, jc_rates, spin1_star, spinstar_exact_generator, spinstar_exact_map,
    JCConfig, Picture, SpinStarConfig,
};
use symstruct::symmetry_basis::{build_basis, FreeHamiltonian};
use symstruct::validators::{
    asymmetry_integral_check, cptp_check, damping_matrix_check, degeneracy_bound_check, majorizes,
    random_povm_effects, thermomajorization_check, trace_norm_monotone_check, transition_rates, Verdict,
    ASYMMETRY_TOL, CPTP_TOL, DAMPING_TOL, DEGENERACY_SLACK, MAJORIZATION_TOL, MONOTONE_TOL,
};

fn qubit_basis(omega: f64) -> symstruct::symmetry_basis::EigenoperatorBasis {
    build_basis(&FreeHamiltonian::new(symstruct::operator_algebra::pauli::sigma_z() * cplx(omega, 0.0)).unwrap())
}

#[test]
fn exact_maps_pass_the_map_level_checks() {
    let basis = qubit_basis(1.0);
    let grid = TimeGrid::uniform(8.0, 81).unwrap();
    for k in [1, 3, 7] {
        let cfg = SpinStarConfig::new(k, 0.6, 1.0).unwrap();
        let maps: Vec<Superoperator> = grid
            .points()
            .iter()
            .map(|&t| spinstar_exact_map(&cfg, t, Picture::Interaction).unwrap())
            .collect();
        assert_eq!(trace_norm_monotone_check(&maps, &basis, MONOTONE_TOL).unwrap().verdict, Verdict::Pass);
        for m in &maps {
            assert_eq!(cptp_check(m, CPTP_TOL).unwrap().verdict, Verdict::Pass);
            assert_eq!(damping_matrix_check(m, &basis, DAMPING_TOL).unwrap().verdict, Verdict::Pass);
        }
    }
    let cfg = JCConfig::thermal(1.0, 1.0, 0.5, 30).unwrap();
    for t in [0.5, 2.0, 7.5] {
        let m = jc_exact_map(&cfg, t, Picture::Interaction).unwrap();
        assert_eq!(cptp_check(&m, CPTP_TOL).unwrap().verdict, Verdict::Pass);
        assert_eq!(damping_matrix_check(&m, &qubit_basis(0.5), DAMPING_TOL).unwrap().verdict, Verdict::Pass);
    }
}

#[test]
fn vacuum_decay_is_asymmetry_monotone_before_the_first_zero() {
    let cfg = JCConfig::vacuum(1.0, 1.0);
    let grid = TimeGrid::uniform(1.5, 301).unwrap();
    let rates = jc_rates(&cfg, &grid);
    assert!(rates.singular.iter().all(|s| !s));
    let coeffs = jc_coefficients(&rates).unwrap();
    let basis = qubit_basis(0.5);
    let gens: Vec<Superoperator> =
        (0..coeffs.len()).map(|k| assemble_generator(&coeffs, &basis, k).unwrap()).collect();
    let a = transition_rates(&gens, &basis).unwrap();
    let report = asymmetry_integral_check(&a, &grid, None, ASYMMETRY_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    // the integrated rate is ln η⊥ = ln cos(gt), up to trapezoid error
    // from the steep −tan(gt) near the end of the window
    let last = *report.integrals[0].last().unwrap();
    assert!((last - 1.5f64.cos().ln()).abs() < 1e-3);
}

#[test]
fn crossing_a_singularity_is_inconclusive() {
    let cfg = SpinStarConfig::new(2, 1.0, 1.0).unwrap();
    let grid = TimeGrid::uniform(3.0, 601).unwrap();
    let gen = spinstar_exact_generator(&cfg, &grid);
    assert!(gen.singular.iter().any(|&s| s));
    // transition eigenvalue of the exact generator: −c − d₁₁/2 with c = −η/2
    let a: Vec<f64> = gen.eta.iter().zip(&gen.eta_z).map(|(e, z)| e / 2.0 - z / 2.0).collect();
    let report = asymmetry_integral_check(&[a.clone(), a], &grid, Some(&gen.singular), ASYMMETRY_TOL).unwrap();
    assert_ne!(report.verdict, Verdict::Pass);
}

#[test]
fn non_cp_and_symmetry_breaking_maps_are_caught() {
    let basis = qubit_basis(1.0);
    // a unitary rotation about x breaks covariance
    let h = symstruct::operator_algebra::pauli::sigma_x() * cplx(0.3, 0.0);
    let u = symstruct::operator_algebra::matrix_exponential(&h, cplx(0.0, -1.0)).unwrap();
    let rot = superop_sandwich(&u, &u).unwrap();
    let mono = trace_norm_monotone_check(&[rot], &basis, MONOTONE_TOL).unwrap();
    assert_eq!(mono.verdict, Verdict::Inconclusive);
    // amplifying coherences by 1.2 is not even positive
    let bad = symstruct::reference_models::phase_covariant_qubit_map(0.0, 1.0, cplx(1.2, 0.0), cplx(1.2, 0.0));
    assert_eq!(cptp_check(&bad, CPTP_TOL).unwrap().verdict, Verdict::Fail);
    assert_eq!(trace_norm_monotone_check(&[bad], &basis, MONOTONE_TOL).unwrap().verdict, Verdict::Fail);
}

#[test]
fn degeneracy_lifting_respects_the_linear_bound() {
    let eps = 1e-3;
    let m = spin1_star(3, 0.5, 1.0, eps).unwrap();
    let rho0 = DensityOperator::new(
        CMatrix::from_row_slice(
            3,
            3,
            &[
                cplx(0.5, 0.0), cplx(0.1, 0.05), cplx(0.0, 0.0),
                cplx(0.1, -0.05), cplx(0.3, 0.0), cplx(0.05, 0.0),
                cplx(0.0, 0.0), cplx(0.05, 0.0), cplx(0.2, 0.0),
            ],
        ),
        1e-12,
    )
    .unwrap();
    let povm = random_povm_effects(3, 10, 7);
    for e in &povm {
        assert!(min_eigenvalue(e).unwrap() >= -1e-14);
        assert!(min_eigenvalue(&(CMatrix::identity(3, 3) - e)).unwrap() >= -1e-14);
    }
    let grid = TimeGrid::uniform(10.0, 51).unwrap();
    let r = degeneracy_bound_check(
        &m.joint_degenerate,
        &m.joint_lifted,
        &m.rho_e,
        &rho0,
        &povm,
        &grid,
        m.lifted.distance,
        DEGENERACY_SLACK,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.max_difference > 0.0);
    assert!(r.worst_ratio <= 1.0);
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum::<f64>().max(1e-12);
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn infinite_temperature_thermomajorization_is_majorization(
        (p, q, e) in (2usize..6).prop_flat_map(|n| (distribution(n), distribution(n), prop::collection::vec(-2.0f64..2.0, n)))
    ) {
        prop_assume!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && (q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let r = thermomajorization_check(&p, &q, &e, 0.0, MAJORIZATION_TOL).unwrap();
        prop_assert_eq!(r.verdict == Verdict::Pass, majorizes(&p, &q, MAJORIZATION_TOL));
    }

    #[test]
    fn thermal_state_is_thermomajorized_by_everything(
        (p, e) in (2usize..6).prop_flat_map(|n| (distribution(n), prop::collection::vec(-2.0f64..2.0, n))),
        beta in 0.0f64..3.0,
    ) {
        prop_assume!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let z: f64 = e.iter().map(|x| (-beta * x).exp()).sum();
        let gibbs: Vec<f64> = e.iter().map(|x| (-beta * x).exp() / z).collect();
        let r = thermomajorization_check(&p, &gibbs, &e, beta, 1e-12).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass);
    }
}
