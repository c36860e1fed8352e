//! The KMS condition as a fixed-point equation `(1 - K_β) ε = δ` for the
//! coefficients of a state in a hermitian product basis.
//!
//! A state is written `ρ = tr + ε` where `ε(e_j) = ρ(e_j)` for `j ≠ 0` and
//! `ε(1) = 0`. Each `e_j` is split into commutators at one site of its
//! support; the KMS condition then turns `ε(e_j)` into `δ(e_j) + (K_β ε)(e_j)`.
//!
//! Everything here is exact at finite volume: the imaginary-time evolution
//! is the one generated by the finite-volume Hamiltonian.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::commutator_decomposition::decompose;
use crate::error::{Error, Result};
use crate::gibbs::{diagonalize, ThermalState, TraceConvention};
use crate::interaction::{uniqueness_certificate, Interaction, UniquenessCertificate};
use crate::operators::{embed, hermitian_basis, DenseOperator, SiteSet, C64};

/// Largest number of basis coefficients `N^{2|Λ|}` handled densely.
pub const MAX_COEFFICIENTS: usize = 1 << 16;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Values `φ(e_j)` on every product basis element `e_j = ⊗_x e_{j_x}`.
///
/// Multi-indices are flattened with the first site most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientFunctional {
    volume: SiteSet,
    site_dim: usize,
    values: Vec<C64>,
    sup_norm: f64,
}

impl CoefficientFunctional {
    pub fn zeros(volume: SiteSet, site_dim: usize) -> Result<Self> {
        let len = coefficient_count(site_dim, volume.len())?;
        Ok(Self {
            volume,
            site_dim,
            values: vec![zero(); len],
            sup_norm: 0.0,
        })
    }

    pub fn from_values(volume: SiteSet, site_dim: usize, values: Vec<C64>) -> Result<Self> {
        let len = coefficient_count(site_dim, volume.len())?;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: values.len(),
            });
        }
        let sup_norm = sup(&values);
        Ok(Self {
            volume,
            site_dim,
            values,
            sup_norm,
        })
    }

    /// Coefficients uniform in the unit square, zero on the identity.
    pub fn random<R: Rng + ?Sized>(volume: SiteSet, site_dim: usize, rng: &mut R) -> Result<Self> {
        let len = coefficient_count(site_dim, volume.len())?;
        let mut values: Vec<C64> = (0..len)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        values[0] = zero();
        Self::from_values(volume, site_dim, values)
    }

    pub fn volume(&self) -> &SiteSet {
        &self.volume
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `⦀φ⦀ = max_j |φ(e_j)|`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn get(&self, multi_index: &[usize]) -> C64 {
        self.values[self.flat_index(multi_index)]
    }

    pub fn flat_index(&self, multi_index: &[usize]) -> usize {
        let q = self.site_dim * self.site_dim;
        assert_eq!(multi_index.len(), self.volume.len(), "multi-index length");
        multi_index.iter().fold(0, |acc, &j| {
            assert!(j < q, "basis index {j} out of range");
            acc * q + j
        })
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        multi_index(flat, self.site_dim * self.site_dim, self.volume.len())
    }

    /// `⦀self - other⦀`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_values(self.volume.clone(), self.site_dim, values).expect("same shape")
    }
}

fn sup(values: &[C64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn multi_index(mut flat: usize, q: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = flat % q;
        flat /= q;
    }
    out
}

fn coefficient_count(site_dim: usize, sites: usize) -> Result<usize> {
    let q = site_dim * site_dim;
    let mut len: usize = 1;
    for _ in 0..sites {
        len = len
            .checked_mul(q)
            .filter(|&l| l <= MAX_COEFFICIENTS)
            .ok_or(Error::CapExceeded {
                what: "coefficient functional",
                size: q.saturating_pow(sites as u32),
                cap: MAX_COEFFICIENTS,
            })?;
    }
    Ok(len)
}

/// Applies `mats[x]` (shape `out_x × in_x`) along every mode `x` of a
/// row-major tensor with mode sizes `dims`.
fn mode_products(mut data: Vec<C64>, dims: &[usize], mats: &[DMatrix<C64>]) -> Vec<C64> {
    let mut dims = dims.to_vec();
    for (x, w) in mats.iter().enumerate() {
        debug_assert_eq!(w.ncols(), dims[x]);
        let inner: usize = dims[x + 1..].iter().product();
        let outer: usize = dims[..x].iter().product();
        let (n_in, n_out) = (dims[x], w.nrows());
        let mut next = vec![zero(); outer * n_out * inner];
        next.par_chunks_mut(n_out * inner)
            .enumerate()
            .for_each(|(o, block)| {
                let src = &data[o * n_in * inner..(o + 1) * n_in * inner];
                for k in 0..n_out {
                    let dst = &mut block[k * inner..(k + 1) * inner];
                    for p in 0..n_in {
                        let coeff = w[(k, p)];
                        if coeff == zero() {
                            continue;
                        }
                        let row = &src[p * inner..(p + 1) * inner];
                        for (d, s) in dst.iter_mut().zip(row) {
                            *d += coeff * s;
                        }
                    }
                }
            });
        data = next;
        dims[x] = n_out;
    }
    data
}

/// `Tr((⊗_x F_x[k_x]) M)` for every choice `(k_x)`, flattened row-major.
///
/// `factors[x]` lists the candidate operators at the `x`-th site of the
/// volume; each has dimension `site_dim`.
pub fn product_traces(
    m: &DenseOperator,
    site_dim: usize,
    factors: &[Vec<DenseOperator>],
) -> Result<Vec<C64>> {
    let sites = factors.len();
    let dim = site_dim.pow(sites as u32);
    if m.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        });
    }
    let n = site_dim;
    let q = n * n;
    // T[p], p_x = a_x N + b_x, holds M_{b a}
    let mut tensor = vec![zero(); dim * dim];
    let mm = m.matrix();
    for a in 0..dim {
        for b in 0..dim {
            let (mut p, mut sa, mut sb) = (0, a, b);
            let mut place = 1;
            for _ in 0..sites {
                p += ((sa % n) * n + sb % n) * place;
                place *= q;
                sa /= n;
                sb /= n;
            }
            tensor[p] = mm[(b, a)];
        }
    }
    let mats: Vec<DMatrix<C64>> = factors
        .iter()
        .map(|list| DMatrix::from_fn(list.len(), q, |k, p| list[k].get(p / n, p % n)))
        .collect();
    if let Some(bad) = factors.iter().flatten().find(|f| f.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    Ok(mode_products(tensor, &vec![q; sites], &mats))
}

/// Commutator pairs `e_k = Σ_i [b_i, c_i]` for each non-identity basis
/// element, with `c_i` anti-hermitian (`i` times the hermitian factor).
#[derive(Clone, Debug)]
pub struct DecompositionTable {
    pub entries: Vec<Vec<(DenseOperator, DenseOperator)>>,
}

impl DecompositionTable {
    pub fn new(basis: &[DenseOperator]) -> Result<Self> {
        let i = C64::new(0.0, 1.0);
        let mut entries = vec![Vec::new()];
        for e in &basis[1..] {
            let d = decompose(e)?;
            entries.push(d.pairs.into_iter().map(|p| (p.b, p.c.scale(i))).collect());
        }
        Ok(Self { entries })
    }
}

/// `ε(e_j) = ρ(e_j)` for `j ≠ 0`, `ε(1) = 0`.
pub fn state_to_epsilon(
    state: &ThermalState,
    volume: &SiteSet,
    site_dim: usize,
) -> Result<CoefficientFunctional> {
    coefficient_count(site_dim, volume.len())?;
    let basis = hermitian_basis(site_dim);
    let rho = DenseOperator::from_matrix_unchecked(state.density_matrix().clone());
    let factors = vec![basis; volume.len()];
    let mut values = product_traces(&rho, site_dim, &factors)?;
    values[0] = zero();
    CoefficientFunctional::from_values(volume.clone(), site_dim, values)
}

/// One `(y, k, i)` summand: `b_i^{(k)}` at the `y`-th site and
/// `(1 - α_{iβ})(1 ⊗ c_i^{(k)})` on the full volume.
#[derive(Clone, Debug)]
struct Summand {
    site: usize,
    k: usize,
    b: DenseOperator,
    g: DenseOperator,
}

/// Precomputed data for `δ` and `K_β` at fixed interaction and `β`.
#[derive(Clone, Debug)]
pub struct KmsProblem {
    volume: SiteSet,
    site_dim: usize,
    beta: f64,
    basis: Vec<DenseOperator>,
    state: ThermalState,
    summands: Vec<Summand>,
    support_sizes: Vec<usize>,
    certificate: UniquenessCertificate,
    delta: CoefficientFunctional,
}

impl KmsProblem {
    pub fn new(phi: &Interaction, beta: f64) -> Result<Self> {
        let volume = phi.volume().clone();
        let n = phi.site_dim();
        let len = coefficient_count(n, volume.len())?;
        let certificate = if beta > 0.0 {
            uniqueness_certificate(phi, beta)?
        } else {
            uniqueness_certificate(phi, f64::MIN_POSITIVE)?
        };
        let state = diagonalize(&phi.hamiltonian()?, beta, TraceConvention::Normalized)?;
        let basis = hermitian_basis(n);
        let table = DecompositionTable::new(&basis)?;

        let mut summands = Vec::new();
        for (pos, site) in volume.iter().enumerate() {
            for (k, pairs) in table.entries.iter().enumerate().skip(1) {
                for (b, c) in pairs {
                    let full = embed(c, &SiteSet::singleton(site), &volume, n)?;
                    let g = &full - &state.imaginary_time(&full)?;
                    summands.push(Summand {
                        site: pos,
                        k,
                        b: b.clone(),
                        g,
                    });
                }
            }
        }
        let q = n * n;
        let support_sizes = (0..len)
            .map(|j| {
                multi_index(j, q, volume.len())
                    .iter()
                    .filter(|&&v| v != 0)
                    .count()
            })
            .collect();
        let mut problem = Self {
            delta: CoefficientFunctional::zeros(volume.clone(), n)?,
            volume,
            site_dim: n,
            beta,
            basis,
            state,
            summands,
            support_sizes,
            certificate,
        };
        let dim = problem.state.dim() as f64;
        // δ uses the normalized trace
        let ops: Vec<DenseOperator> = problem
            .summands
            .iter()
            .map(|s| s.g.scale_real(1.0 / dim))
            .collect();
        problem.delta = problem.contract(&ops)?;
        Ok(problem)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn volume(&self) -> &SiteSet {
        &self.volume
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn basis(&self) -> &[DenseOperator] {
        &self.basis
    }

    pub fn state(&self) -> &ThermalState {
        &self.state
    }

    pub fn certificate(&self) -> &UniquenessCertificate {
        &self.certificate
    }

    /// `δ(e_j)`.
    pub fn delta(&self) -> &CoefficientFunctional {
        &self.delta
    }

    /// Exact Gibbs coefficients.
    pub fn gibbs_epsilon(&self) -> Result<CoefficientFunctional> {
        state_to_epsilon(&self.state, &self.volume, self.site_dim)
    }

    /// `Σ_{y,i} Tr(⊗_{x≠y} e_{j_x} ⊗ b_i · M_{y,i}) / |supp j|` with one
    /// operator `M` per summand.
    fn contract(&self, ops: &[DenseOperator]) -> Result<CoefficientFunctional> {
        let l = self.volume.len();
        let mut values = vec![zero(); self.support_sizes.len()];
        let q = self.site_dim * self.site_dim;
        for (s, m) in self.summands.iter().zip(ops) {
            let factors: Vec<Vec<DenseOperator>> = (0..l)
                .map(|x| {
                    if x == s.site {
                        vec![s.b.clone()]
                    } else {
                        self.basis.clone()
                    }
                })
                .collect();
            let traces = product_traces(m, self.site_dim, &factors)?;
            // traces are indexed by j with the y-th digit removed
            let inner = q.pow((l - 1 - s.site) as u32);
            for (r, t) in traces.into_iter().enumerate() {
                let (hi, lo) = (r / inner, r % inner);
                let j = (hi * q + s.k) * inner + lo;
                values[j] += t;
            }
        }
        for (v, &size) in values.iter_mut().zip(&self.support_sizes) {
            if size == 0 {
                *v = zero();
            } else {
                *v /= size as f64;
            }
        }
        CoefficientFunctional::from_values(self.volume.clone(), self.site_dim, values)
    }

    /// Operator `F` with `φ(Y) = Tr(F Y)` on the full volume.
    pub fn representing_operator(&self, phi: &CoefficientFunctional) -> Result<DenseOperator> {
        self.check(phi)?;
        let n = self.site_dim;
        let q = n * n;
        let l = self.volume.len();
        // V[(a,b)][m] = (e_m)_{ab} / Tr(e_m²)
        let v = DMatrix::from_fn(q, q, |p, m| {
            let e = &self.basis[m];
            let gram = (e * e).trace().re;
            e.get(p / n, p % n) / gram
        });
        let tensor = mode_products(phi.values.clone(), &vec![q; l], &vec![v; l]);
        let dim = n.pow(l as u32);
        let mut f = DMatrix::zeros(dim, dim);
        for (p, val) in tensor.into_iter().enumerate() {
            let (mut a, mut b, mut rest) = (0, 0, p);
            let mut place = 1;
            for _ in 0..l {
                let px = rest % q;
                rest /= q;
                a += (px / n) * place;
                b += (px % n) * place;
                place *= n;
            }
            f[(a, b)] = val;
        }
        Ok(DenseOperator::from_matrix_unchecked(f))
    }

    /// `(K_β φ)(e_j)`.
    pub fn k_beta_apply(&self, phi: &CoefficientFunctional) -> Result<CoefficientFunctional> {
        let f = self.representing_operator(phi)?;
        let ops: Vec<DenseOperator> = self.summands.iter().map(|s| &s.g * &f).collect();
        self.contract(&ops)
    }

    /// `⦀ε - (δ + K_β ε)⦀`.
    pub fn equation_residual(&self, epsilon: &CoefficientFunctional) -> Result<f64> {
        let rhs = self.delta.add(&self.k_beta_apply(epsilon)?);
        Ok(epsilon.sup_distance(&rhs))
    }

    /// `⦀K_β φ⦀ / ⦀φ⦀` over seeded random functionals; the largest ratio.
    pub fn lipschitz_ratio<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let phi = CoefficientFunctional::random(self.volume.clone(), self.site_dim, rng)?;
            let k = self.k_beta_apply(&phi)?;
            worst = worst.max(k.sup_norm() / phi.sup_norm());
        }
        Ok(worst)
    }

    /// Iterates `ε_{n+1} = δ + K_β ε_n` from `ε_0 = 0` until consecutive
    /// iterates differ by at most `tol` in sup norm.
    pub fn solve_fixed_point(&self, options: &FixedPointOptions) -> Result<FixedPointSolution> {
        if options.require_certificate && !self.certificate.valid {
            return Err(Error::NoCertificate(format!(
                "no uniqueness witness at beta = {}",
                self.beta
            )));
        }
        let mut eps = CoefficientFunctional::zeros(self.volume.clone(), self.site_dim)?;
        let mut trace = Vec::new();
        for it in 1..=options.max_iter {
            let next = self.delta.add(&self.k_beta_apply(&eps)?);
            let step = next.sup_distance(&eps);
            trace.push(step);
            eps = next;
            if step <= options.tol {
                return Ok(FixedPointSolution {
                    epsilon: eps,
                    iterations: it,
                    converged: true,
                    step_trace: trace,
                });
            }
            if !step.is_finite() {
                break;
            }
        }
        Err(Error::NoConvergence {
            iterations: options.max_iter,
            residual: trace.last().copied().unwrap_or(f64::NAN),
        })
    }

    fn check(&self, phi: &CoefficientFunctional) -> Result<()> {
        if phi.volume != self.volume || phi.site_dim != self.site_dim {
            return Err(Error::DimensionMismatch {
                expected: self.support_sizes.len(),
                found: phi.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Refuse to iterate without a valid uniqueness certificate.
    pub require_certificate: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1000,
            require_certificate: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub epsilon: CoefficientFunctional,
    pub iterations: usize,
    pub converged: bool,
    /// `⦀ε_{n+1} - ε_n⦀` per iteration.
    pub step_trace: Vec<f64>,
}

/// Convenience wrapper building a [`KmsProblem`] and solving it.
pub fn solve_fixed_point(
    phi: &Interaction,
    beta: f64,
    options: &FixedPointOptions,
) -> Result<FixedPointSolution> {
    KmsProblem::new(phi, beta)?.solve_fixed_point(options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::interaction::{build_xyz, Couplings};
    use crate::operators::{random_hermitian, random_operator, SpinValue};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(n: usize, j: [f64; 3]) -> Interaction {
        let g = Graph::chain(n).unwrap();
        build_xyz(&g, SpinValue::HALF, &Couplings::uniform(&g, j)).unwrap()
    }

    fn kron_all(ops: &[&DenseOperator]) -> DenseOperator {
        ops.iter()
            .skip(1)
            .fold(ops[0].clone(), |acc, o| acc.kron(o))
    }

    /// Coefficients of `y` in the product basis, by dense trace pairing.
    fn dense_coefficients(y: &DenseOperator, basis: &[DenseOperator], sites: usize) -> Vec<C64> {
        let q = basis.len();
        (0..q.pow(sites as u32))
            .map(|j| {
                let idx = multi_index(j, q, sites);
                let factors: Vec<&DenseOperator> = idx.iter().map(|&k| &basis[k]).collect();
                let e = kron_all(&factors);
                (&e * y).trace() / (&e * &e).trace().re
            })
            .collect()
    }

    #[test]
    fn product_traces_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_operator(8, &mut rng);
        let lists: Vec<Vec<DenseOperator>> = (0..3)
            .map(|x| (0..x + 1).map(|_| random_operator(2, &mut rng)).collect())
            .collect();
        let got = product_traces(&m, 2, &lists).unwrap();
        assert_eq!(got.len(), 6);
        let mut r = 0;
        for a in &lists[0] {
            for b in &lists[1] {
                for c in &lists[2] {
                    let want = (&kron_all(&[a, b, c]) * &m).trace();
                    assert!((got[r] - want).norm() < 1e-12);
                    r += 1;
                }
            }
        }
    }

    #[test]
    fn representing_operator_reproduces_functional() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = KmsProblem::new(&chain(2, [1.0, 0.5, 0.2]), 0.1).unwrap();
        let phi = CoefficientFunctional::random(SiteSet::range(2), 2, &mut rng).unwrap();
        let f = p.representing_operator(&phi).unwrap();
        for j in 0..phi.len() {
            let idx = phi.multi_index(j);
            let e = p.basis[idx[0]].kron(&p.basis[idx[1]]);
            assert!(((&f * &e).trace() - phi.values()[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn decomposition_table_reconstructs_basis() {
        let basis = hermitian_basis(3);
        let table = DecompositionTable::new(&basis).unwrap();
        for (k, pairs) in table.entries.iter().enumerate().skip(1) {
            let mut sum = DenseOperator::zeros(3);
            for (b, c) in pairs {
                sum = &sum + &(&(b * c) - &(c * b));
            }
            assert!((&sum - &basis[k]).max_abs() < 1e-12);
        }
    }

    #[test]
    fn zero_interaction() {
        let phi = Interaction::new(2, SiteSet::range(2)).unwrap();
        let p = KmsProblem::new(&phi, 1.0).unwrap();
        assert_eq!(p.delta().sup_norm(), 0.0);
        assert_eq!(p.gibbs_epsilon().unwrap().sup_norm(), 0.0);
        let sol = p.solve_fixed_point(&FixedPointOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.epsilon.sup_norm(), 0.0);
    }

    #[test]
    fn infinite_temperature_has_no_source_or_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = KmsProblem::new(&chain(2, [1.0, 1.0, 0.0]), 0.0).unwrap();
        assert!(p.delta().sup_norm() <= 1e-15);
        let phi = CoefficientFunctional::random(SiteSet::range(2), 2, &mut rng).unwrap();
        assert!(p.k_beta_apply(&phi).unwrap().sup_norm() <= 1e-15);
    }

    #[test]
    fn k_beta_is_linear_and_kills_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = KmsProblem::new(&chain(2, [1.0, 1.0, 0.0]), 0.3).unwrap();
        let zero = CoefficientFunctional::zeros(SiteSet::range(2), 2).unwrap();
        assert_eq!(p.k_beta_apply(&zero).unwrap().sup_norm(), 0.0);
        let a = CoefficientFunctional::random(SiteSet::range(2), 2, &mut rng).unwrap();
        let b = CoefficientFunctional::random(SiteSet::range(2), 2, &mut rng).unwrap();
        let lhs = p.k_beta_apply(&a.add(&b)).unwrap();
        let rhs = p
            .k_beta_apply(&a)
            .unwrap()
            .add(&p.k_beta_apply(&b).unwrap());
        assert!(lhs.sup_distance(&rhs) < 1e-13);
    }

    #[test]
    fn single_site_epsilon() {
        let phi = Interaction::new(2, SiteSet::singleton(0))
            .unwrap()
            .with_term(
                SiteSet::singleton(0),
                DenseOperator::from_real_diagonal(&[1.0, -1.0]),
            )
            .unwrap();
        let p = KmsProblem::new(&phi, 1.0).unwrap();
        let eps = p.gibbs_epsilon().unwrap();
        // basis: 1, σ1, σ2, σ3
        assert!((eps.get(&[3]).re + 1f64.tanh()).abs() < 1e-14);
        assert!(eps.get(&[1]).norm() < 1e-15 && eps.get(&[2]).norm() < 1e-15);
        assert!(eps.sup_norm() <= 1.0);
    }

    #[test]
    fn delta_and_kernel_match_dense_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = chain(2, [1.0, 1.0, 0.0]);
        let beta = 0.05;
        let p = KmsProblem::new(&phi, beta).unwrap();
        let state = p.state();
        let basis = hermitian_basis(2);
        let table = DecompositionTable::new(&basis).unwrap();
        let vol = SiteSet::range(2);
        let test_phi = CoefficientFunctional::random(vol.clone(), 2, &mut rng).unwrap();
        let k_phi = p.k_beta_apply(&test_phi).unwrap();
        for j in 1..16 {
            let idx = multi_index(j, 4, 2);
            let supp: Vec<usize> = (0..2).filter(|&x| idx[x] != 0).collect();
            let mut delta = C64::new(0.0, 0.0);
            let mut kval = C64::new(0.0, 0.0);
            for &y in &supp {
                for (b, c) in &table.entries[idx[y]] {
                    let mut left = Vec::new();
                    let mut right = Vec::new();
                    let eye = DenseOperator::identity(2);
                    for x in 0..2 {
                        left.push(if x == y {
                            b.clone()
                        } else {
                            basis[idx[x]].clone()
                        });
                        right.push(if x == y { c.clone() } else { eye.clone() });
                    }
                    let l = left[0].kron(&left[1]);
                    let r = right[0].kron(&right[1]);
                    let y_op = &l * &(&r - &state.imaginary_time(&r).unwrap());
                    delta += y_op.normalized_trace();
                    let coeffs = dense_coefficients(&y_op, &basis, 2);
                    kval += coeffs
                        .iter()
                        .zip(test_phi.values())
                        .map(|(a, b)| a * b)
                        .sum::<C64>();
                }
            }
            delta /= supp.len() as f64;
            kval /= supp.len() as f64;
            assert!(
                (p.delta().values()[j] - delta).norm() < 1e-10,
                "delta at {idx:?}"
            );
            assert!((k_phi.values()[j] - kval).norm() < 1e-10, "K at {idx:?}");
        }
    }

    #[test]
    fn gibbs_coefficients_solve_the_equation() {
        for (beta, j) in [
            (0.02, [1.0, 1.0, 0.0]),
            (0.5, [1.0, 1.0, 0.0]),
            (0.8, [0.3, -0.6, 1.0]),
        ] {
            let p = KmsProblem::new(&chain(3, j), beta).unwrap();
            let eps = p.gibbs_epsilon().unwrap();
            assert!(p.equation_residual(&eps).unwrap() <= 1e-9, "beta {beta}");
        }
    }

    #[test]
    fn random_interaction_solves_the_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut phi = Interaction::new(3, SiteSet::range(2)).unwrap();
        phi.insert(SiteSet::range(2), random_hermitian(9, &mut rng))
            .unwrap();
        phi.insert(SiteSet::singleton(1), random_hermitian(3, &mut rng))
            .unwrap();
        let p = KmsProblem::new(&phi, 0.4).unwrap();
        let eps = p.gibbs_epsilon().unwrap();
        assert!(p.equation_residual(&eps).unwrap() <= 1e-9);
    }

    #[test]
    fn fixed_point_matches_gibbs() {
        let p = KmsProblem::new(&chain(2, [1.0, 1.0, 0.0]), 0.02).unwrap();
        assert!(p.certificate().valid);
        let sol = p
            .solve_fixed_point(&FixedPointOptions {
                tol: 1e-12,
                max_iter: 200,
                require_certificate: true,
            })
            .unwrap();
        assert!(sol.converged);
        assert!(sol.epsilon.sup_distance(&p.gibbs_epsilon().unwrap()) <= 1e-10);
    }

    #[test]
    fn lipschitz_ratio_respects_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = KmsProblem::new(&chain(2, [1.0, 1.0, 0.0]), 0.02).unwrap();
        let cert = p.certificate().clone();
        assert!(cert.valid);
        let ratio = p.lipschitz_ratio(100, &mut rng).unwrap();
        assert!(
            ratio <= cert.contraction_bound + 1e-9,
            "{ratio} > {}",
            cert.contraction_bound
        );
    }

    #[test]
    fn missing_certificate_is_reported() {
        let p = KmsProblem::new(&chain(2, [1.0, 1.0, 0.0]), 5.0).unwrap();
        let opts = FixedPointOptions {
            tol: 1e-12,
            max_iter: 200,
            require_certificate: true,
        };
        assert!(matches!(
            p.solve_fixed_point(&opts),
            Err(Error::NoCertificate(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        // 4^9 coefficients
        let g = Graph::chain(9).unwrap();
        let phi = build_xyz(
            &g,
            SpinValue::HALF,
            &Couplings::uniform(&g, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            KmsProblem::new(&phi, 0.1),
            Err(Error::CapExceeded { .. })
        ));
    }
}
