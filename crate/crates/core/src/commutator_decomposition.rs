//! Writing a traceless hermitian matrix as a sum of commutators of
//! hermitian matrices, with a Hilbert–Schmidt norm budget.
//!
//! The contract is `a = Σ_j i[B_j, C_j]`: a commutator of two hermitian
//! matrices is anti-hermitian, so the factor `i` keeps every `B_j`, `C_j`
//! hermitian.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{DenseOperator, C64};

const TRACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CommutatorPair {
    pub b: DenseOperator,
    pub c: DenseOperator,
    /// Position `j` of the pair in the ordered eigenbasis.
    pub index: usize,
    /// Partial eigenvalue sum `ã_j`.
    pub partial_sum: f64,
}

#[derive(Clone, Debug)]
pub struct CommutatorDecomposition {
    pub pairs: Vec<CommutatorPair>,
    /// `Σ ‖B_j‖_HS ‖C_j‖_HS`, evaluated on the returned matrices.
    pub hs_budget: f64,
    /// Eigenvalue indices in the order used to form the partial sums.
    pub ordering: Vec<usize>,
    pub eigenvalues: Vec<f64>,
}

impl CommutatorDecomposition {
    /// `Σ_j i[B_j, C_j]`.
    pub fn reconstruct(&self, dim: usize) -> DenseOperator {
        let i = C64::new(0.0, 1.0);
        let mut sum = DMatrix::zeros(dim, dim);
        for p in &self.pairs {
            let (b, c) = (p.b.matrix(), p.c.matrix());
            sum += (b * c - c * b) * i;
        }
        DenseOperator::from_matrix_unchecked(sum)
    }

    /// `√N ‖a‖_HS`, the bound the budget must respect.
    pub fn budget_bound(&self) -> f64 {
        // √N · sqrt(Σ a² / N)
        self.eigenvalues.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

fn check_trace(a: &[f64]) -> Result<()> {
    let sum: f64 = a.iter().sum();
    let scale: f64 = a.iter().map(|v| v.abs()).sum();
    if sum.abs() > TRACE_TOL * scale || (scale == 0.0 && sum != 0.0) {
        return Err(Error::NonzeroTrace(sum));
    }
    Ok(())
}

/// Orders eigenvalues so that every partial sum is bounded by `max |a_i|`
/// (hence by `√N ‖A‖_HS`).
///
/// Greedy: after a positive partial sum take the most negative remaining
/// value, after a negative one the most positive; at zero take the largest
/// magnitude. Ties go to the lowest index.
pub fn order_eigenvalues(a: &[f64]) -> Result<Vec<usize>> {
    check_trace(a)?;
    let n = a.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut partial = 0.0;
    while !remaining.is_empty() {
        let pick = |key: &dyn Fn(f64) -> f64, admissible: &dyn Fn(f64) -> bool| {
            remaining
                .iter()
                .enumerate()
                .filter(|(_, &k)| admissible(a[k]))
                // strict comparison keeps the lowest index on ties
                .fold(None::<(usize, f64)>, |best, (pos, &k)| match best {
                    Some((_, v)) if key(a[k]) <= v => best,
                    _ => Some((pos, key(a[k]))),
                })
                .map(|(pos, _)| pos)
        };
        let chosen = if partial > 0.0 {
            pick(&|v| -v, &|v| v <= 0.0)
        } else if partial < 0.0 {
            pick(&|v| v, &|v| v >= 0.0)
        } else {
            pick(&|v| v.abs(), &|_| true)
        };
        let pos = chosen
            .or_else(|| pick(&|v| -(partial + v).abs(), &|_| true))
            .expect("remaining is nonempty");
        let k = remaining.remove(pos);
        partial += a[k];
        order.push(k);
    }
    Ok(order)
}

/// Decomposes a traceless hermitian `a` into at most `N - 1` pairs with
/// `a = Σ i[B_j, C_j]`.
///
/// In the ordered eigenbasis `(v_1, …, v_N)`, `B_j` is the Pauli `σ^1` on
/// the block `(j, j+1)` and `C_j = -(ã_j / 2) σ^2` on the same block, so
/// that `i[B_j, C_j] = ã_j σ^3`. Pairs with `ã_j = 0` are dropped.
pub fn decompose(a: &DenseOperator) -> Result<CommutatorDecomposition> {
    let dev = a.hermiticity_deviation();
    if dev > 1e-12 {
        return Err(Error::NotHermitian(dev));
    }
    let n = a.dim();
    let (vals, vecs) = a.eigh();
    let ordering = order_eigenvalues(&vals)?;
    let scale: f64 = vals.iter().map(|v| v.abs()).sum();
    let i = C64::new(0.0, 1.0);

    let mut pairs = Vec::new();
    let mut partial = 0.0;
    for j in 0..n.saturating_sub(1) {
        partial += vals[ordering[j]];
        if partial.abs() <= 1e-15 * scale {
            continue;
        }
        let u = vecs.column(ordering[j]);
        let v = vecs.column(ordering[j + 1]);
        let uv = u * v.adjoint();
        let vu = v * u.adjoint();
        let b = &uv + &vu;
        // -(ã/2) (-i uv* + i vu*)
        let c = (&uv - &vu) * (i * (partial / 2.0));
        pairs.push(CommutatorPair {
            b: DenseOperator::from_matrix_unchecked(b),
            c: DenseOperator::from_matrix_unchecked(c),
            index: j,
            partial_sum: partial,
        });
    }
    let hs_budget = pairs.iter().map(|p| p.b.hs_norm() * p.c.hs_norm()).sum();
    Ok(CommutatorDecomposition {
        pairs,
        hs_budget,
        ordering,
        eigenvalues: vals,
    })
}
