//! Dense operator algebra on tensor products of `C^N`.
//!
//! Every observable, Hamiltonian and spin matrix in the crate is a
//! [`DenseOperator`]. Lattice Hilbert spaces are ordered by the sorted site
//! list of a [`SiteSet`]: the first site is the most significant digit of a
//! basis index, so `embed(A, {0}, {0,1})` is `A ⊗ 1`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Largest Hilbert-space dimension accepted for dense lattice operators.
pub const MAX_HILBERT_DIM: usize = 1 << 14;

const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    mat: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(invalid("dim", "operators must have positive dimension"));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { mat })
    }

    /// Like [`from_matrix`](Self::from_matrix) but also checks hermiticity.
    pub fn hermitian(mat: DMatrix<C64>) -> Result<Self> {
        let op = Self::from_matrix(mat)?;
        let dev = op.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(op)
    }

    /// Row-major construction.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = c(d);
        }
        Self::from_matrix_unchecked(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.mat.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_matrix_unchecked(&self.mat * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(c(factor))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.mat.kronecker(&other.mat))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_matrix_unchecked(&self.mat * &other.mat))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_matrix_unchecked(&self.mat + &other.mat))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_matrix_unchecked(&self.mat - &other.mat))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A - A*| relative to max |A| (0 for the zero matrix).
    pub fn hermiticity_deviation(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev / scale
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `Tr A / dim`.
    pub fn normalized_trace(&self) -> C64 {
        self.trace() / self.dim() as f64
    }

    /// Normalized Hilbert–Schmidt norm `sqrt(Tr A*A / dim)`.
    pub fn hs_norm(&self) -> f64 {
        (self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.dim() as f64).sqrt()
    }

    /// Largest singular value; hermitian inputs use the eigenvalue path.
    pub fn operator_norm(&self) -> f64 {
        if self.max_abs() == 0.0 {
            return 0.0;
        }
        if self.is_hermitian() {
            let (vals, _) = self.eigh();
            vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            self.mat
                .clone()
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max)
        }
    }

    /// Eigen-decomposition of the hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let herm = (&self.mat + self.mat.adjoint()) * c(0.5);
        let eig = herm.symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (vals, vecs)
    }
}

impl fmt::Display for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.try_mul(rhs).expect("operator dimensions must agree")
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        self.try_sub(rhs).expect("operator dimensions must agree")
    }
}

impl Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        self.scale_real(-1.0)
    }
}

pub fn normalized_trace(op: &DenseOperator) -> C64 {
    op.normalized_trace()
}

pub fn hs_norm(op: &DenseOperator) -> f64 {
    op.hs_norm()
}

pub fn operator_norm(op: &DenseOperator) -> f64 {
    op.operator_norm()
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    a.check_dim(b)?;
    Ok(DenseOperator::from_matrix_unchecked(
        &a.mat * &b.mat - &b.mat * &a.mat,
    ))
}

/// Strictly sorted set of lattice sites.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteSet(Vec<usize>);

impl SiteSet {
    /// Sorts the input; repeated sites are an error.
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = sites.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateSite(w[0]));
        }
        Ok(Self(v))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(site: usize) -> Self {
        Self(vec![site])
    }

    /// `{0, 1, ..., n-1}`.
    pub fn range(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn position(&self, site: usize) -> Option<usize> {
        self.0.binary_search(&site).ok()
    }

    pub fn is_subset_of(&self, other: &SiteSet) -> bool {
        self.0.iter().all(|&s| other.contains(s))
    }

    pub fn intersects(&self, other: &SiteSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        v.dedup();
        SiteSet(v)
    }
}

impl fmt::Display for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Spin quantum number stored as `2S`; the on-site dimension is `2S + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinValue {
    two_s: u32,
}

impl SpinValue {
    pub const HALF: SpinValue = SpinValue { two_s: 1 };
    pub const ONE: SpinValue = SpinValue { two_s: 2 };

    pub fn from_two_s(two_s: u32) -> Result<Self> {
        if two_s == 0 {
            return Err(invalid("spin", "spin must be positive"));
        }
        Ok(Self { two_s })
    }

    pub fn two_s(self) -> u32 {
        self.two_s
    }

    pub fn s(self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.two_s as usize + 1
    }
}

impl FromStr for SpinValue {
    type Err = Error;

    /// Accepts `"1/2"`, `"3/2"`, `"1"`, `"2"`, ...
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || invalid("spin", format!("cannot parse {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            if den.trim() != "2" || num.is_multiple_of(2) {
                return Err(bad());
            }
            Self::from_two_s(num)
        } else {
            let v: u32 = s.parse().map_err(|_| bad())?;
            Self::from_two_s(2 * v)
        }
    }
}

impl fmt::Display for SpinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_s.is_multiple_of(2) {
            write!(f, "{}", self.two_s / 2)
        } else {
            write!(f, "{}/2", self.two_s)
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub s1: DenseOperator,
    pub s2: DenseOperator,
    pub s3: DenseOperator,
    pub plus: DenseOperator,
    pub minus: DenseOperator,
}

impl SpinMatrices {
    /// `S^1`, `S^2` or `S^3` by component index.
    pub fn component(&self, i: usize) -> &DenseOperator {
        match i {
            1 => &self.s1,
            2 => &self.s2,
            3 => &self.s3,
            _ => panic!("spin component must be 1, 2 or 3, got {i}"),
        }
    }
}

/// Spin matrices in the `S^3` eigenbasis ordered `a = -S, ..., S`.
pub fn spin_matrices(spin: SpinValue) -> SpinMatrices {
    let n = spin.dim();
    let s = spin.s();
    let a = |k: usize| -s + k as f64;
    let mut plus = DMatrix::zeros(n, n);
    let mut minus = DMatrix::zeros(n, n);
    let mut s3 = DMatrix::zeros(n, n);
    for k in 0..n {
        s3[(k, k)] = c(a(k));
        if k + 1 < n {
            // S+|a> = sqrt(S(S+1) - a(a+1)) |a+1>
            plus[(k + 1, k)] = c((s * (s + 1.0) - a(k) * (a(k) + 1.0)).sqrt());
        }
        if k > 0 {
            // S-|a> = sqrt(S(S+1) - (a-1)a) |a-1>
            minus[(k - 1, k)] = c((s * (s + 1.0) - (a(k) - 1.0) * a(k)).sqrt());
        }
    }
    let s1 = (&plus + &minus) * c(0.5);
    let s2 = (&plus - &minus) * C64::new(0.0, -0.5);
    SpinMatrices {
        s1: DenseOperator::from_matrix_unchecked(s1),
        s2: DenseOperator::from_matrix_unchecked(s2),
        s3: DenseOperator::from_matrix_unchecked(s3),
        plus: DenseOperator::from_matrix_unchecked(plus),
        minus: DenseOperator::from_matrix_unchecked(minus),
    }
}

/// Hermitian basis of `M_n(C)` with `e_0 = 1`, traceless `e_i` for `i >= 1`
/// and unit operator norm: generalized Gell-Mann matrices, ordered as
/// identity, then (symmetric, antisymmetric) pairs for `j < k`, then the
/// diagonal elements `diag(1,..,1,-l,0,..)/l`.
pub fn hermitian_basis(n: usize) -> Vec<DenseOperator> {
    assert!(n >= 1, "basis dimension must be positive");
    let mut basis = Vec::with_capacity(n * n);
    basis.push(DenseOperator::identity(n));
    for j in 0..n {
        for k in (j + 1)..n {
            let mut sym = DMatrix::zeros(n, n);
            sym[(j, k)] = c(1.0);
            sym[(k, j)] = c(1.0);
            basis.push(DenseOperator::from_matrix_unchecked(sym));
            let mut anti = DMatrix::zeros(n, n);
            anti[(j, k)] = C64::new(0.0, -1.0);
            anti[(k, j)] = C64::new(0.0, 1.0);
            basis.push(DenseOperator::from_matrix_unchecked(anti));
        }
    }
    for l in 1..n {
        let mut diag = vec![0.0; n];
        for d in diag.iter_mut().take(l) {
            *d = 1.0 / l as f64;
        }
        diag[l] = -1.0;
        basis.push(DenseOperator::from_real_diagonal(&diag));
    }
    basis
}

/// Embeds `op` acting on `support` into the Hilbert space of `volume`,
/// acting as the identity on `volume \ support`.
pub fn embed(
    op: &DenseOperator,
    support: &SiteSet,
    volume: &SiteSet,
    site_dim: usize,
) -> Result<DenseOperator> {
    if !support.is_subset_of(volume) {
        return Err(Error::SupportNotInVolume {
            support: support.sites().to_vec(),
            volume: volume.sites().to_vec(),
        });
    }
    let expected = checked_pow(site_dim, support.len(), "support dimension")?;
    if op.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: op.dim(),
        });
    }
    let total = checked_pow(site_dim, volume.len(), "volume dimension")?;
    if total > MAX_HILBERT_DIM {
        return Err(Error::CapExceeded {
            what: "hilbert space dimension",
            size: total,
            cap: MAX_HILBERT_DIM,
        });
    }
    let l = volume.len();
    // place value of each volume site in the full index
    let stride: Vec<usize> = (0..l).map(|p| site_dim.pow((l - 1 - p) as u32)).collect();
    let sup_pos: Vec<usize> = support
        .iter()
        .map(|s| volume.position(s).expect("checked subset"))
        .collect();
    let m = support.len();
    let sub_stride: Vec<usize> = (0..m).map(|q| site_dim.pow((m - 1 - q) as u32)).collect();

    // offset contributed by sub-index `a` on the support sites
    let offsets: Vec<usize> = (0..expected)
        .map(|a| {
            (0..m)
                .map(|q| ((a / sub_stride[q]) % site_dim) * stride[sup_pos[q]])
                .sum()
        })
        .collect();

    let mut out = DMatrix::zeros(total, total);
    for i in 0..total {
        let mut sub_i = 0;
        let mut base = i;
        for q in 0..m {
            let digit = (i / stride[sup_pos[q]]) % site_dim;
            sub_i += digit * sub_stride[q];
            base -= digit * stride[sup_pos[q]];
        }
        for (sub_j, off) in offsets.iter().enumerate() {
            let v = op.mat[(sub_i, sub_j)];
            if v != C64::new(0.0, 0.0) {
                out[(i, base + off)] = v;
            }
        }
    }
    Ok(DenseOperator::from_matrix_unchecked(out))
}

/// Product `∏ (site, op)` embedded into `volume`. Factors on the same site
/// are multiplied in the given order; factors on different sites commute.
pub fn product_operator(
    factors: &[(usize, &DenseOperator)],
    volume: &SiteSet,
    site_dim: usize,
) -> Result<DenseOperator> {
    let support = SiteSet::new({
        let mut s: Vec<usize> = factors.iter().map(|(x, _)| *x).collect();
        s.sort_unstable();
        s.dedup();
        s
    })?;
    let mut local = DenseOperator::identity(1);
    for site in support.iter() {
        let mut on_site = DenseOperator::identity(site_dim);
        for (_, op) in factors.iter().filter(|(x, _)| *x == site) {
            if op.dim() != site_dim {
                return Err(Error::DimensionMismatch {
                    expected: site_dim,
                    found: op.dim(),
                });
            }
            on_site = &on_site * op;
        }
        local = local.kron(&on_site);
    }
    embed(&local, &support, volume, site_dim)
}

pub(crate) fn checked_pow(base: usize, exp: usize, what: &'static str) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or(Error::CapExceeded {
            what,
            size: usize::MAX,
            cap: MAX_HILBERT_DIM,
        })
}

/// Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = c(rng.random_range(-1.0..1.0));
        for j in (i + 1)..dim {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    DenseOperator::from_matrix_unchecked(m)
}

pub fn random_traceless_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let mut a = random_hermitian(dim, rng);
    let shift = a.normalized_trace();
    for i in 0..dim {
        a.mat[(i, i)] -= shift;
    }
    a
}

/// General complex matrix with entries uniform in the unit square.
pub fn random_operator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    DenseOperator::from_matrix_unchecked(DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli() -> [DenseOperator; 3] {
        let sm = spin_matrices(SpinValue::HALF);
        [
            sm.s1.scale_real(2.0),
            sm.s2.scale_real(2.0),
            sm.s3.scale_real(2.0),
        ]
    }

    /// Textbook Pauli matrices, `sigma_3 = diag(1, -1)`.
    fn standard_pauli() -> [DenseOperator; 3] {
        let i = C64::new(0.0, 1.0);
        let z = c(0.0);
        [
            DenseOperator::from_rows(&[vec![z, c(1.0)], vec![c(1.0), z]]).unwrap(),
            DenseOperator::from_rows(&[vec![z, -i], vec![i, z]]).unwrap(),
            DenseOperator::from_real_diagonal(&[1.0, -1.0]),
        ]
    }

    fn diff(a: &DenseOperator, b: &DenseOperator) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn spin_half_matrices() {
        let sm = spin_matrices(SpinValue::HALF);
        assert_eq!(sm.s3, DenseOperator::from_real_diagonal(&[-0.5, 0.5]));
        // S+ |-1/2> = |+1/2>
        assert_eq!(sm.plus.get(1, 0), c(1.0));
        assert_eq!(sm.plus.get(0, 1), c(0.0));
        let comm = commutator(&sm.s1, &sm.s2).unwrap();
        assert_eq!(diff(&comm, &sm.s3.scale(C64::i())), 0.0);
    }

    #[test]
    fn spin_one_raising_entries() {
        let sm = spin_matrices(SpinValue::ONE);
        let r2 = 2f64.sqrt();
        assert!((sm.plus.get(1, 0).re - r2).abs() < 1e-15);
        assert!((sm.plus.get(2, 1).re - r2).abs() < 1e-15);
        assert_eq!(sm.minus, sm.plus.adjoint());
    }

    #[test]
    fn spin_algebra_up_to_five_halves() {
        for two_s in 1..=5 {
            let sm = spin_matrices(SpinValue::from_two_s(two_s).unwrap());
            let ops = [&sm.s1, &sm.s2, &sm.s3];
            for k in 0..3 {
                let (a, b, c3) = (ops[k], ops[(k + 1) % 3], ops[(k + 2) % 3]);
                let comm = commutator(a, b).unwrap();
                let err = (&comm - &c3.scale(C64::i())).operator_norm();
                assert!(err <= 1e-12, "2S={two_s} k={k}: {err}");
            }
            // matrix elements of S1 nonnegative, |S2| <= S1 entrywise
            for i in 0..sm.s1.dim() {
                for j in 0..sm.s1.dim() {
                    assert!(sm.s1.get(i, j).re >= 0.0);
                    assert!(sm.s2.get(i, j).norm() <= sm.s1.get(i, j).re + 1e-15);
                }
            }
        }
    }

    #[test]
    fn pauli_basis_for_qubit() {
        let b = hermitian_basis(2);
        let p = standard_pauli();
        assert_eq!(b.len(), 4);
        assert_eq!(b[0], DenseOperator::identity(2));
        assert_eq!(b[1], p[0]);
        assert_eq!(b[2], p[1]);
        assert_eq!(b[3], p[2]);
    }

    #[test]
    fn qutrit_basis_diagonals() {
        let b = hermitian_basis(3);
        assert_eq!(b.len(), 9);
        assert_eq!(b[7], DenseOperator::from_real_diagonal(&[1.0, -1.0, 0.0]));
        assert_eq!(b[8], DenseOperator::from_real_diagonal(&[0.5, 0.5, -1.0]));
        for e in &b {
            assert!(e.is_hermitian());
            assert!((e.operator_norm() - 1.0).abs() < 1e-12);
        }
        for e in &b[1..] {
            assert!(e.trace().norm() < 1e-15);
        }
    }

    #[test]
    fn basis_gram_has_full_rank() {
        for n in 1..=5 {
            let b = hermitian_basis(n);
            let m = b.len();
            let gram = DMatrix::from_fn(m, m, |i, j| {
                (b[i].adjoint().matrix() * b[j].matrix()).trace()
            });
            let rank = gram.rank(1e-10);
            assert_eq!(rank, n * n);
        }
    }

    #[test]
    fn basis_spans_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let b = hermitian_basis(n);
            for _ in 0..10 {
                let a = random_hermitian(n, &mut rng);
                // orthogonal basis: coefficients via the trace inner product
                let mut rec = DenseOperator::zeros(n);
                for e in &b {
                    let coeff = (e * &a).trace() / (e * e).trace();
                    rec = &rec + &e.scale(coeff);
                }
                assert!(diff(&rec, &a) <= 1e-10);
            }
        }
    }

    #[test]
    fn embed_examples() {
        let p = standard_pauli();
        let vol = SiteSet::range(2);
        let e = embed(&p[2], &SiteSet::singleton(1), &vol, 2).unwrap();
        assert_eq!(
            e,
            DenseOperator::from_real_diagonal(&[1.0, -1.0, 1.0, -1.0])
        );
        // Kronecker oracle for the other site
        let e0 = embed(&p[0], &SiteSet::singleton(0), &vol, 2).unwrap();
        assert_eq!(e0, p[0].kron(&DenseOperator::identity(2)));

        let vol3 = SiteSet::range(3);
        let x = SiteSet::new([0, 2]).unwrap();
        let id = embed(&DenseOperator::identity(4), &x, &vol3, 2).unwrap();
        assert_eq!(id, DenseOperator::identity(8));
    }

    #[test]
    fn embed_matches_kron_with_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_operator(2, &mut rng);
        let b = random_operator(2, &mut rng);
        let ab = a.kron(&b);
        let got = embed(&ab, &SiteSet::new([0, 2]).unwrap(), &SiteSet::range(3), 2).unwrap();
        let want = product_operator(&[(0, &a), (2, &b)], &SiteSet::range(3), 2).unwrap();
        let oracle = a.kron(&DenseOperator::identity(2)).kron(&b);
        assert!(diff(&got, &oracle) < 1e-15);
        assert!(diff(&want, &oracle) < 1e-15);
    }

    #[test]
    fn embed_errors() {
        let p = pauli();
        let vol = SiteSet::range(2);
        assert!(matches!(
            embed(&p[0], &SiteSet::singleton(5), &vol, 2),
            Err(Error::SupportNotInVolume { .. })
        ));
        assert!(matches!(
            embed(&DenseOperator::identity(3), &SiteSet::singleton(0), &vol, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn disjoint_embeddings_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vol = SiteSet::range(3);
        let a = embed(
            &random_operator(4, &mut rng),
            &SiteSet::new([0, 1]).unwrap(),
            &vol,
            2,
        )
        .unwrap();
        let b = embed(
            &random_operator(2, &mut rng),
            &SiteSet::singleton(2),
            &vol,
            2,
        )
        .unwrap();
        assert!(commutator(&a, &b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn norms_examples() {
        let id = DenseOperator::identity(5);
        assert_eq!(id.normalized_trace(), c(1.0));
        assert!((id.hs_norm() - 1.0).abs() < 1e-15);
        assert!((id.operator_norm() - 1.0).abs() < 1e-14);
        let s3 = &pauli()[2];
        assert_eq!(s3.normalized_trace(), c(0.0));
        assert!((s3.hs_norm() - 1.0).abs() < 1e-15);
        assert!((s3.operator_norm() - 1.0).abs() < 1e-14);
        let d = DenseOperator::from_real_diagonal(&[2.0, -1.0, -1.0]);
        assert!((d.hs_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert!((d.operator_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_norm_uses_singular_values() {
        let sm = spin_matrices(SpinValue::HALF);
        assert!((sm.plus.operator_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        assert!(commutator(&DenseOperator::identity(2), &DenseOperator::identity(3)).is_err());
    }

    #[test]
    fn site_set_rules() {
        assert!(matches!(SiteSet::new([1, 1]), Err(Error::DuplicateSite(1))));
        let a = SiteSet::new([3, 1]).unwrap();
        assert_eq!(a.sites(), &[1, 3]);
        assert!(a.intersects(&SiteSet::new([3, 4]).unwrap()));
        assert!(!a.intersects(&SiteSet::new([0, 2]).unwrap()));
        assert_eq!(
            a.union(&SiteSet::singleton(2)),
            SiteSet::new([1, 2, 3]).unwrap()
        );
    }

    #[test]
    fn spin_parsing() {
        assert_eq!("1/2".parse::<SpinValue>().unwrap(), SpinValue::HALF);
        assert_eq!("1".parse::<SpinValue>().unwrap(), SpinValue::ONE);
        assert_eq!("3/2".parse::<SpinValue>().unwrap().dim(), 4);
        assert!("2/2".parse::<SpinValue>().is_err());
        assert!("0".parse::<SpinValue>().is_err());
        assert_eq!(SpinValue::from_two_s(3).unwrap().to_string(), "3/2");
    }

    #[test]
    fn hermitian_constructor_rejects() {
        let sm = spin_matrices(SpinValue::HALF);
        assert!(matches!(
            DenseOperator::hermitian(sm.plus.into_matrix()),
            Err(Error::NotHermitian(_))
        ));
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert_eq!(DenseOperator::from_matrix(m), Err(Error::NonFinite));
    }
}
