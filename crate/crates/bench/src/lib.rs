//! Fixtures shared by the benchmarks.

use lattice_kms::graph::Graph;
use lattice_kms::interaction::{build_xyz, Couplings};
use lattice_kms::operators::random_traceless_hermitian;
use lattice_kms::{DenseOperator, Interaction, SpinValue};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Spin-1/2 chain with uniform couplings `(J^1, J^2, J^3)`.
pub fn chain(n: usize, j: [f64; 3]) -> Interaction {
    let g = Graph::chain(n).expect("positive length");
    build_xyz(&g, SpinValue::HALF, &Couplings::uniform(&g, j)).expect("couplings on graph edges")
}

/// Seeded random traceless hermitian matrices of dimension `n`.
pub fn traceless_matrices(n: usize, count: usize, seed: u64) -> Vec<DenseOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_traceless_hermitian(n, &mut rng))
        .collect()
}
