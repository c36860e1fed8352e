use lattice_kms::gibbs::{diagonalize, TraceConvention};
use lattice_kms::graph::Graph;
use lattice_kms::interaction::{build_xyz, uniqueness_certificate, Couplings};
use lattice_kms::kms_fixed_point::{FixedPointOptions, KmsProblem};
use lattice_kms::operators::{random_operator, spin_matrices};
use lattice_kms::{DenseOperator, SiteSet, SpinValue, C64};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn xy_pair() -> lattice_kms::Interaction {
    let g = Graph::chain(2).unwrap();
    build_xyz(
        &g,
        SpinValue::HALF,
        &Couplings::uniform(&g, [1.0, 1.0, 0.0]),
    )
    .unwrap()
}

#[test]
fn kms_condition_on_heisenberg_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=4 {
        let g = Graph::chain(n).unwrap();
        let h = build_xyz(
            &g,
            SpinValue::HALF,
            &Couplings::uniform(&g, [1.0, 0.6, -0.4]),
        )
        .unwrap()
        .hamiltonian()
        .unwrap();
        for beta in [0.1, 1.0, 5.0] {
            let state = diagonalize(&h, beta, TraceConvention::Plain).unwrap();
            for _ in 0..5 {
                let a = random_operator(h.dim(), &mut rng);
                let b = random_operator(h.dim(), &mut rng);
                let r = state.kms_residual(&a, &b).unwrap();
                assert!(
                    r <= 1e-10 * a.operator_norm() * b.operator_norm(),
                    "n={n} beta={beta}: {r}"
                );
            }
        }
    }
}

#[test]
fn gibbs_weights_match_matrix_exponential() {
    let h = xy_pair().hamiltonian().unwrap();
    let beta = 1.3;
    let state = diagonalize(&h, beta, TraceConvention::Plain).unwrap();
    let rho: DMatrix<C64> = (h.matrix() * C64::new(-beta, 0.0)).exp();
    let z = rho.trace().re;
    assert!((state.partition_function() - z).abs() <= 1e-12 * z);
    let sm = spin_matrices(SpinValue::HALF);
    let zz = sm.s3.kron(&sm.s3);
    let want = (&rho * zz.matrix()).trace().re / z;
    assert!((state.expectation(&zz).unwrap().re - want).abs() < 1e-13);
}

#[test]
fn normalized_and_plain_states_agree() {
    let h = xy_pair().hamiltonian().unwrap();
    let plain = diagonalize(&h, 0.7, TraceConvention::Plain).unwrap();
    let norm = diagonalize(&h, 0.7, TraceConvention::Normalized).unwrap();
    assert!((plain.log_z() - norm.log_z() - 4f64.ln()).abs() < 1e-13);
    let x = DenseOperator::from_real_diagonal(&[1.0, 2.0, 3.0, 4.0]);
    assert!((plain.expectation(&x).unwrap() - norm.expectation(&x).unwrap()).norm() < 1e-13);
}

#[test]
fn certified_fixed_point_is_the_gibbs_functional() {
    let phi = xy_pair();
    let beta = 0.02;
    assert!(uniqueness_certificate(&phi, beta).unwrap().valid);
    let problem = KmsProblem::new(&phi, beta).unwrap();
    let sol = problem
        .solve_fixed_point(&FixedPointOptions::default())
        .unwrap();
    assert!(sol.converged);
    let gibbs = problem.gibbs_epsilon().unwrap();
    assert!(sol.epsilon.sup_distance(&gibbs) <= 1e-10);
}

#[test]
fn gibbs_functional_solves_the_equation_beyond_the_certificate() {
    let phi = xy_pair();
    let problem = KmsProblem::new(&phi, 0.5).unwrap();
    let eps = problem.gibbs_epsilon().unwrap();
    assert!(problem.equation_residual(&eps).unwrap() <= 1e-9);
    assert_eq!(eps.volume(), &SiteSet::range(2));
}
