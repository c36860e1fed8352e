use lattice_kms::graph::Graph;
use lattice_kms::interaction::Couplings;
use lattice_kms::mermin_wagner::{mw_verify, xi_optimize, XiOptions};
use lattice_kms::spin_inequalities::{
    check_duhamel_derivative, check_multi_point, check_two_point, CouplingSweep,
};
use lattice_kms::SpinValue;

#[test]
fn two_and_four_point_inequalities_on_a_ring() {
    for spin in [SpinValue::HALF, SpinValue::ONE] {
        let sweep = CouplingSweep::random(Graph::ring(4).unwrap(), spin, 1.0, 40, 5).unwrap();
        for x in 1..4 {
            assert!(check_two_point(&sweep, x).unwrap().holds);
        }
        assert!(
            check_multi_point(&sweep, &[0, 1, 2, 3], &[2, 1, 2, 1])
                .unwrap()
                .holds
        );
    }
}

#[test]
fn derivative_inequality_on_spin_one_pair() {
    let sweep =
        CouplingSweep::symmetric(Graph::chain(2).unwrap(), SpinValue::ONE, 0.7, 10, 9).unwrap();
    let r = check_duhamel_derivative(&sweep, (0, 1), (0, 1)).unwrap();
    assert!(r.holds, "{} {}", r.max_relative_error, r.min_margin);
}

#[test]
fn correlation_bound_on_a_grid() {
    let g = Graph::grid(3, 3).unwrap();
    let c = Couplings::uniform(&g, [1.0, 1.0, 0.0]);
    for beta in [0.5, 2.0] {
        for x in 0..9 {
            let r = mw_verify(&g, &c, beta, SpinValue::HALF, x, 2, &XiOptions::default()).unwrap();
            assert!(r.holds, "beta={beta} x={x}: {r:?}");
        }
    }
}

#[test]
fn xi_grows_with_distance_on_a_chain() {
    let g = Graph::chain(8).unwrap();
    let c = Couplings::uniform(&g, [1.0, 1.0, 0.0]);
    let xs: Vec<f64> = (0..8)
        .map(|x| {
            xi_optimize(&g, &c, 1.0, SpinValue::HALF, x, &XiOptions::default())
                .unwrap()
                .xi
        })
        .collect();
    assert!(xs.windows(2).all(|w| w[1] >= w[0]), "{xs:?}");
}
