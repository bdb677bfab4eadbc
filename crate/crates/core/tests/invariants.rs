use num_complex::Complex64;
use proptest::prelude::*;

use qfluct::bloch::{bloch_stats, geometric_residual, BlochPoint, Vec3};
use qfluct::bounds::{mt_ml_times, snr_from_reports, Quadrature};
use qfluct::dynamics::TimeDepOperator;
use qfluct::fluctuation::{covariance, expectation, report_at, std_dev, variance};
use qfluct::hilbert::{displacement, quadratures, squeeze, truncated_mean_photon, FockSpace, ladder};
use qfluct::linops::{anticommutator, commutator, hermitian_defect, herm_expm, is_unitary, max_abs, r, CMatrix};
use qfluct::sampling::{dot_pauli, random_hermitian, random_qubit_hamiltonian, random_state, random_unit3, seeded};
use qfluct::timefn::ScalarFn;
use qfluct::verify::pair_stats;
use qfluct::Tolerances;

fn dims() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![2usize, 3, 4, 8])
}

fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn exponential_is_unitary(seed in any::<u64>(), dim in 1usize..=24, scale in 0.0f64..100.0, t in -3.0f64..3.0) {
        let mut rng = seeded(seed);
        let h = random_hermitian(&mut rng, dim, 1.0);
        let h = &h * r(scale / h.norm().max(1e-12));
        let u = herm_expm(&h, Complex64::new(0.0, -t)).unwrap();
        prop_assert!(is_unitary(&u, 1e-10).ok);
    }

    #[test]
    fn exponential_group_law(seed in any::<u64>(), dim in 1usize..=12, s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
        let mut rng = seeded(seed);
        let h = random_hermitian(&mut rng, dim, 2.0);
        let i = Complex64::new(0.0, -1.0);
        let lhs = herm_expm(&h, i * s1).unwrap() * herm_expm(&h, i * s2).unwrap();
        let rhs = herm_expm(&h, i * (s1 + s2)).unwrap();
        prop_assert!(rel_frobenius(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn bracket_symmetry(seed in any::<u64>(), dim in dims()) {
        let mut rng = seeded(seed);
        let a = random_hermitian(&mut rng, dim, 1.0);
        let b = random_hermitian(&mut rng, dim, 1.0);
        let comm = commutator(&a, &b).unwrap();
        let anti = anticommutator(&a, &b).unwrap();
        prop_assert!(max_abs(&(comm.adjoint() + &comm)) <= 1e-12);
        prop_assert!(hermitian_defect(&anti) <= 1e-12);
    }

    #[test]
    fn covariance_decomposition(seed in any::<u64>(), dim in dims()) {
        let mut rng = seeded(seed);
        let a = random_hermitian(&mut rng, dim, 1.0);
        let b = random_hermitian(&mut rng, dim, 1.0);
        let psi = random_state(&mut rng, dim);
        let p = pair_stats(&a, &b, &psi).unwrap();
        let lhs = 4.0 * p.corr.norm_sqr();
        let rhs = 4.0 * (p.comm * p.comm + p.sym * p.sym);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(rhs).max(1e-300));
        prop_assert!(p.var_a * p.var_b - p.corr.norm_sqr() >= -1e-10 * (p.var_a * p.var_b).max(1.0));
    }

    #[test]
    fn fluctuation_bounds_hold(seed in any::<u64>(), dim in dims(), t in 0.0f64..5.0) {
        let mut rng = seeded(seed);
        let h = if dim == 2 {
            random_qubit_hamiltonian(&mut rng).unwrap()
        } else {
            TimeDepOperator::from_terms(vec![
                (ScalarFn::cos_wave(1.0, 0.7), random_hermitian(&mut rng, dim, 1.0)),
                (ScalarFn::t(), random_hermitian(&mut rng, dim, 1.0)),
            ]).unwrap()
        };
        let a = TimeDepOperator::from_terms(vec![
            (ScalarFn::sin(ScalarFn::t()), random_hermitian(&mut rng, dim, 1.0)),
            (ScalarFn::Const(1.0), random_hermitian(&mut rng, dim, 1.0)),
        ]).unwrap();
        let psi = random_state(&mut rng, dim);
        let rep = report_at(&a, &h, &psi, t, 1.0, &Tolerances::default()).unwrap();
        let scale = (rep.sigma * rep.sigma * rep.sigma_v * rep.sigma_v).max(1.0);
        prop_assert!(rep.cs_residual >= -1e-10 * scale);
        if !rep.degenerate {
            prop_assert!(rep.residual_r1.unwrap() >= -1e-8);
            prop_assert!(rep.residual_r2.unwrap() >= -1e-8);
        }
        let v2 = rep.sigma_v * rep.sigma_v + rep.mu_dot * rep.mu_dot;
        prop_assert!((rep.v2_mean - v2).abs() <= 1e-8 * rep.v2_mean.max(1.0));
    }

    #[test]
    fn geometric_residual_is_nonnegative(seed in any::<u64>(), hs in 0.0f64..5.0, ms in 0.0f64..5.0, ds in 0.0f64..5.0) {
        let mut rng = seeded(seed);
        let p = BlochPoint {
            a: Vec3::from(random_unit3(&mut rng)),
            h: Vec3::from(random_unit3(&mut rng)) * hs,
            m: Vec3::from(random_unit3(&mut rng)) * ms,
            m_dot: Vec3::from(random_unit3(&mut rng)) * ds,
        };
        prop_assert!(geometric_residual(&p).value >= -1e-10);
    }

    #[test]
    fn bloch_stats_match_matrices(seed in any::<u64>(), hs in 0.1f64..3.0, ms in 0.1f64..3.0, ds in 0.0f64..3.0) {
        let mut rng = seeded(seed);
        let psi = random_state(&mut rng, 2);
        let (hv, mv, dv) = (
            Vec3::from(random_unit3(&mut rng)) * hs,
            Vec3::from(random_unit3(&mut rng)) * ms,
            Vec3::from(random_unit3(&mut rng)) * ds,
        );
        let sig = |v: Vec3| dot_pauli([v.x, v.y, v.z]);
        let h = TimeDepOperator::constant(sig(hv)).unwrap();
        let a = TimeDepOperator::from_terms(vec![(ScalarFn::Const(1.0), sig(mv)), (ScalarFn::t(), sig(dv))]).unwrap();
        let [x, y, z] = qfluct::hilbert::paulis();
        let bv = Vec3::new(
            expectation(&x, &psi).unwrap(),
            expectation(&y, &psi).unwrap(),
            expectation(&z, &psi).unwrap(),
        );
        let st = bloch_stats(&BlochPoint { a: bv, h: hv, m: mv, m_dot: dv });
        let rep = report_at(&a, &h, &psi, 0.0, 1.0, &Tolerances::default()).unwrap();
        prop_assert!((st.mean - rep.mu).abs() <= 1e-9);
        prop_assert!((st.sigma_sq - rep.sigma * rep.sigma).abs() <= 1e-9);
        prop_assert!((st.v_mean - rep.mu_dot).abs() <= 1e-9);
        prop_assert!((st.v2_mean - rep.v2_mean).abs() <= 1e-9);
    }

    #[test]
    fn displacement_and_squeeze_are_unitary(s in 1usize..=40, ar in -3.0f64..3.0, ai in -3.0f64..3.0, zr in -3.0f64..3.0, zi in -3.0f64..3.0) {
        let space = FockSpace::new(s).unwrap();
        let alpha = Complex64::new(ar, ai);
        let z = Complex64::new(zr, zi);
        prop_assume!(alpha.norm() <= 3.0 && z.norm() <= 3.0);
        prop_assert!(is_unitary(&displacement(&space, alpha).unwrap(), 1e-10).ok);
        prop_assert!(is_unitary(&squeeze(&space, z).unwrap(), 1e-10).ok);
    }

    #[test]
    fn quadratures_are_linear_in_ladder(s in 1usize..=30, hbar in 0.1f64..3.0, mass in 0.1f64..3.0, omega in 0.1f64..3.0) {
        let space = FockSpace::with_constants(s, hbar, mass, omega).unwrap();
        let (a, ad) = ladder(&space);
        let (x, p) = quadratures(&space);
        prop_assert!(hermitian_defect(&x) <= 1e-14 && hermitian_defect(&p) <= 1e-14);
        let sx = (hbar / (2.0 * mass * omega)).sqrt();
        let sp = (mass * omega * hbar / 2.0).sqrt();
        let a_back = (&x / r(sx) + &p * Complex64::new(0.0, 1.0 / sp)) * r(0.5);
        prop_assert!(max_abs(&(a_back - &a)) <= 1e-14 * (s as f64).sqrt().max(1.0));
        let ad_back = (&x / r(sx) - &p * Complex64::new(0.0, 1.0 / sp)) * r(0.5);
        prop_assert!(max_abs(&(ad_back - &ad)) <= 1e-14 * (s as f64).sqrt().max(1.0));
    }

    #[test]
    fn speed_limit_unified_is_max(seed in any::<u64>(), dim in dims(), shift in -2.0f64..4.0) {
        let mut rng = seeded(seed);
        let h = random_hermitian(&mut rng, dim, 1.0) + CMatrix::identity(dim, dim) * r(shift);
        let psi = random_state(&mut rng, dim);
        let rep = mt_ml_times(&h, &psi, 1.0, &Tolerances::default()).unwrap();
        match (rep.tau_mt, rep.tau_ml) {
            (Some(a), Some(b)) => prop_assert_eq!(rep.tau_unified, Some(a.max(b))),
            _ => prop_assert_eq!(rep.tau_unified, None),
        }
        prop_assert!((rep.delta_e - std_dev(&h, &psi).unwrap()).abs() == 0.0);
    }
}

#[test]
fn mean_photon_monotone_and_convergent() {
    for x in [1.0, 5.0, 10.0] {
        let vals: Vec<f64> = (0..=80).map(|s| truncated_mean_photon(x, s).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-15 * x), "|α|² = {x}");
        assert!((vals[80] - x).abs() <= 1e-12 * x);
    }
}

#[test]
fn upper_quadrature_never_raises_snr_floor() {
    let cfg = qfluct::verify::qubit_config(true, 800).unwrap();
    let rep = qfluct::scenarios::run_scenario(&cfg).unwrap();
    let reps = rep.reports();
    let tol = Tolerances::default();
    let upper = snr_from_reports(&reps, Quadrature::EndpointMax, &tol).unwrap();
    let trap = snr_from_reports(&reps, Quadrature::Trapezoid, &tol).unwrap();
    for (u, t) in upper.snr_min.iter().zip(&trap.snr_min) {
        if let (Some(u), Some(t)) = (u, t) {
            assert!(u <= t);
        }
    }
}

#[test]
fn covariance_matches_pair_stats() {
    let mut rng = seeded(11);
    for dim in [2, 3, 4, 8] {
        let a = random_hermitian(&mut rng, dim, 1.0);
        let b = random_hermitian(&mut rng, dim, 1.0);
        let psi = random_state(&mut rng, dim);
        let p = pair_stats(&a, &b, &psi).unwrap();
        assert!((covariance(&a, &b, &psi).unwrap() - p.sym).abs() <= 1e-12);
        assert!((variance(&a, &psi).unwrap() - p.var_a).abs() <= 1e-12);
    }
}
