//! Correlation inequalities for quantum XYZ models, checked by exact
//! diagonalization over sweeps of couplings.
//!
//! With `|J^2_xy| ≤ J^1_xy` on every edge, correlations of the second spin
//! component are dominated by those of the first:
//! `|⟨S^2_0 S^2_x⟩| ≤ ⟨S^1_0 S^1_x⟩`, and likewise for products of several
//! spins with components in `{1, 2}`. On the symmetric manifold
//! `J^1 = J^2 ≥ 0` the same ordering holds for the derivatives with respect
//! to `J^1_xy`, which are Duhamel two-point functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gibbs::{diagonalize, ThermalState, TraceConvention};
use crate::graph::{Edge, Graph};
use crate::interaction::{build_xyz, Couplings};
use crate::operators::{product_operator, spin_matrices, DenseOperator, SpinValue};

/// Margins below this value count as violations.
pub const MARGIN_TOL: f64 = -1e-10;
/// Largest number of spin operators in a multi-point correlation.
pub const MAX_POINTS: usize = 6;
const FD_STEP: f64 = 1e-4;
const FD_REL_TOL: f64 = 1e-6;
/// Derivatives smaller than this are compared in absolute terms.
const FD_SCALE_FLOOR: f64 = 1e-4;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    /// `|J^2_xy| ≤ J^1_xy` on every edge.
    Dominated,
    /// `J^1_xy = J^2_xy ≥ 0` on every edge.
    Symmetric,
}

impl Hypothesis {
    pub fn check(self, couplings: &Couplings) -> Result<()> {
        for ((x, y), [j1, j2, _]) in couplings.iter() {
            let ok = match self {
                Hypothesis::Dominated => j2.abs() <= j1,
                Hypothesis::Symmetric => j1 == j2 && j1 >= 0.0,
            };
            if !ok {
                return Err(Error::Hypothesis(format!(
                    "edge ({x}, {y}) has J1 = {j1}, J2 = {j2}, violating {self:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Coupling samples on a fixed graph and temperature.
#[derive(Clone, Debug)]
pub struct CouplingSweep {
    pub graph: Graph,
    pub spin: SpinValue,
    pub samples: Vec<Couplings>,
    pub beta: f64,
    pub seed: u64,
}

impl CouplingSweep {
    pub fn new(
        graph: Graph,
        spin: SpinValue,
        beta: f64,
        samples: Vec<Couplings>,
        seed: u64,
    ) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(invalid(
                "beta",
                format!("must be finite and >= 0, got {beta}"),
            ));
        }
        for s in &samples {
            for ((x, y), _) in s.iter() {
                if !graph.has_edge(x, y) {
                    return Err(Error::UnknownEdge(x, y));
                }
            }
        }
        Ok(Self {
            graph,
            spin,
            samples,
            beta,
            seed,
        })
    }

    /// Per edge, in edge order: `J^1 ~ U(0, 2)`, `J^2 ~ U(-J^1, J^1)`,
    /// `J^3 ~ U(-1, 1)`.
    pub fn random(
        graph: Graph,
        spin: SpinValue,
        beta: f64,
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        let samples = sample_couplings(&graph, count, seed, false);
        Self::new(graph, spin, beta, samples, seed)
    }

    /// As [`CouplingSweep::random`] with `J^2 := J^1`.
    pub fn symmetric(
        graph: Graph,
        spin: SpinValue,
        beta: f64,
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        let samples = sample_couplings(&graph, count, seed, true);
        Self::new(graph, spin, beta, samples, seed)
    }

    fn check(&self, hypothesis: Hypothesis) -> Result<()> {
        self.samples.iter().try_for_each(|s| hypothesis.check(s))
    }

    fn state(&self, couplings: &Couplings) -> Result<ThermalState> {
        let h = build_xyz(&self.graph, self.spin, couplings)?.hamiltonian()?;
        diagonalize(&h, self.beta, TraceConvention::Plain)
    }

    fn spin_product(&self, factors: &[(usize, usize)]) -> Result<DenseOperator> {
        let sm = spin_matrices(self.spin);
        for &(x, _) in factors {
            if x >= self.graph.n_vertices() {
                return Err(Error::UnknownVertex(x));
            }
        }
        let ops: Vec<(usize, &DenseOperator)> =
            factors.iter().map(|&(x, i)| (x, sm.component(i))).collect();
        product_operator(&ops, &self.graph.vertex_set(), self.spin.dim())
    }
}

fn sample_couplings(graph: &Graph, count: usize, seed: u64, symmetric: bool) -> Vec<Couplings> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut c = Couplings::new();
            for &(x, y) in graph.edges() {
                let j1: f64 = rng.random_range(0.0..2.0);
                let j2: f64 = if j1 > 0.0 {
                    rng.random_range(-j1..j1)
                } else {
                    0.0
                };
                let j3: f64 = rng.random_range(-1.0..1.0);
                c.set(x, y, [j1, if symmetric { j1 } else { j2 }, j3]);
            }
            c
        })
        .collect()
}

/// One sample of an inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMargin {
    pub index: usize,
    pub couplings: Couplings,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub samples: Vec<SampleMargin>,
    pub min_margin: f64,
    /// Every margin is at least [`MARGIN_TOL`].
    pub holds: bool,
}

impl InequalityReport {
    fn from_samples(samples: Vec<SampleMargin>) -> Self {
        let min_margin = samples
            .iter()
            .map(|s| s.margin)
            .fold(f64::INFINITY, f64::min);
        let holds = samples.iter().all(|s| s.margin >= MARGIN_TOL);
        Self {
            samples,
            min_margin,
            holds,
        }
    }
}

/// `|⟨S^2_0 S^2_x⟩| ≤ ⟨S^1_0 S^1_x⟩`, with `0` the graph's origin.
pub fn check_two_point(sweep: &CouplingSweep, x: usize) -> Result<InequalityReport> {
    let o = sweep.graph.origin();
    check_multi_point(sweep, &[o, x], &[2, 2])
}

/// `|⟨S^{j_1}_{x_1} ⋯ S^{j_k}_{x_k}⟩| ≤ ⟨S^1_{x_1} ⋯ S^1_{x_k}⟩` for
/// components `j_i ∈ {1, 2}`.
pub fn check_multi_point(
    sweep: &CouplingSweep,
    sites: &[usize],
    components: &[usize],
) -> Result<InequalityReport> {
    if sites.len() != components.len() {
        return Err(invalid("components", "need one component per site"));
    }
    if sites.is_empty() || sites.len() > MAX_POINTS {
        return Err(invalid(
            "sites",
            format!("need between 1 and {MAX_POINTS} sites"),
        ));
    }
    if let Some(j) = components.iter().find(|&&j| j != 1 && j != 2) {
        return Err(invalid("components", format!("must be 1 or 2, got {j}")));
    }
    sweep.check(Hypothesis::Dominated)?;
    let mixed: Vec<(usize, usize)> = sites
        .iter()
        .copied()
        .zip(components.iter().copied())
        .collect();
    let first: Vec<(usize, usize)> = sites.iter().map(|&x| (x, 1)).collect();
    let lhs_op = sweep.spin_product(&mixed)?;
    let rhs_op = sweep.spin_product(&first)?;
    let samples = sweep
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, couplings)| {
            let state = sweep.state(couplings)?;
            let lhs = state.expectation(&lhs_op)?.norm();
            let rhs = state.expectation(&rhs_op)?.re;
            Ok(SampleMargin {
                index,
                couplings: couplings.clone(),
                lhs,
                rhs,
                margin: rhs - lhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_samples(samples))
}

/// Derivatives of `⟨S^i_z S^i_u⟩` with respect to `J^1_xy` for `i = 1, 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeSample {
    pub index: usize,
    pub couplings: Couplings,
    /// `β[(S^1_x S^1_y, S^i_z S^i_u) - ⟨S^1_x S^1_y⟩⟨S^i_z S^i_u⟩]`, `i = 1, 2`.
    pub duhamel: [f64; 2],
    /// Richardson-extrapolated central differences in `J^1_xy`.
    pub finite_difference: [f64; 2],
    /// `max_i |duhamel - fd| / max(|duhamel|, floor)`.
    pub relative_error: f64,
    /// `∂⟨S^1 S^1⟩ - ∂⟨S^2 S^2⟩`.
    pub derivative_margin: f64,
    /// `(S^1S^1, S^1S^1) - |(S^1S^1, S^2S^2)|`.
    pub duhamel_margin: f64,
    /// `|⟨S^1_z S^1_u⟩ - ⟨S^2_z S^2_u⟩|`.
    pub symmetry_defect: f64,
    /// `⟨S^+_z S^-_u⟩ - 2⟨S^1_z S^1_u⟩`.
    pub raising_lowering_defect: f64,
    pub raising_lowering: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeReport {
    pub samples: Vec<DerivativeSample>,
    pub max_relative_error: f64,
    pub min_margin: f64,
    /// Finite differences agree, both margins are at least [`MARGIN_TOL`],
    /// the symmetry identities hold and `⟨S^+S^-⟩ ≥ 0`.
    pub holds: bool,
}

/// Checks the derivative inequality `∂⟨S^2_z S^2_u⟩ ≤ ∂⟨S^1_z S^1_u⟩` on
/// the symmetric manifold, the intermediate Duhamel inequality, and the
/// Duhamel formula against finite differences that move `J^1_xy` alone.
pub fn check_duhamel_derivative(
    sweep: &CouplingSweep,
    edge_xy: Edge,
    pair: (usize, usize),
) -> Result<DerivativeReport> {
    sweep.check(Hypothesis::Symmetric)?;
    let (x, y) = edge_xy;
    if !sweep.graph.has_edge(x, y) {
        return Err(Error::UnknownEdge(x, y));
    }
    let (z, u) = pair;
    let bond = sweep.spin_product(&[(x, 1), (y, 1)])?;
    let targets = [
        sweep.spin_product(&[(z, 1), (u, 1)])?,
        sweep.spin_product(&[(z, 2), (u, 2)])?,
    ];
    let sm = spin_matrices(sweep.spin);
    let pm = product_operator(
        &[(z, &sm.plus), (u, &sm.minus)],
        &sweep.graph.vertex_set(),
        sweep.spin.dim(),
    )?;
    let beta = sweep.beta;

    let samples = sweep
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, couplings)| {
            let state = sweep.state(couplings)?;
            let bond_mean = state.expectation(&bond)?.re;
            let means = [
                state.expectation(&targets[0])?.re,
                state.expectation(&targets[1])?.re,
            ];
            let cross = [
                state.duhamel(&bond, &targets[0])?.re,
                state.duhamel(&bond, &targets[1])?.re,
            ];
            let duhamel = [
                beta * (cross[0] - bond_mean * means[0]),
                beta * (cross[1] - bond_mean * means[1]),
            ];

            let at = |h: f64| -> Result<[f64; 2]> {
                let mut c = couplings.clone();
                let mut j = c.get(x, y);
                j[0] += h;
                c.set(x, y, j);
                let s = sweep.state(&c)?;
                Ok([
                    s.expectation(&targets[0])?.re,
                    s.expectation(&targets[1])?.re,
                ])
            };
            let central = |h: f64| -> Result<[f64; 2]> {
                let (p, m) = (at(h)?, at(-h)?);
                Ok([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
            };
            let (coarse, fine) = (central(FD_STEP)?, central(FD_STEP / 2.0)?);
            let finite_difference = [
                (4.0 * fine[0] - coarse[0]) / 3.0,
                (4.0 * fine[1] - coarse[1]) / 3.0,
            ];
            let relative_error = (0..2)
                .map(|i| {
                    (duhamel[i] - finite_difference[i]).abs() / duhamel[i].abs().max(FD_SCALE_FLOOR)
                })
                .fold(0.0, f64::max);

            let auto = state
                .duhamel(&bond, &sweep.spin_product(&[(x, 1), (y, 1)])?)?
                .re;
            let plus_minus = state.expectation(&pm)?.re;
            Ok(DerivativeSample {
                index,
                couplings: couplings.clone(),
                duhamel,
                finite_difference,
                relative_error,
                derivative_margin: duhamel[0] - duhamel[1],
                duhamel_margin: auto - cross[1].abs(),
                symmetry_defect: (means[0] - means[1]).abs(),
                raising_lowering_defect: plus_minus - 2.0 * means[0],
                raising_lowering: plus_minus,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let max_relative_error = samples.iter().map(|s| s.relative_error).fold(0.0, f64::max);
    let min_margin = samples
        .iter()
        .map(|s| s.derivative_margin.min(s.duhamel_margin))
        .fold(f64::INFINITY, f64::min);
    let holds = max_relative_error <= FD_REL_TOL
        && min_margin >= MARGIN_TOL
        && samples.iter().all(|s| {
            s.symmetry_defect <= SYMMETRY_TOL
                && s.raising_lowering_defect.abs() <= SYMMETRY_TOL
                && s.raising_lowering >= -SYMMETRY_TOL
        });
    Ok(DerivativeReport {
        samples,
        max_relative_error,
        min_margin,
        holds,
    })
}
