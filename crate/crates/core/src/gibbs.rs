//! Exact finite-volume Gibbs states from a full eigendecomposition.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::operators::{c, DenseOperator, C64};

/// Largest `β · (E_max - E_min)` accepted by imaginary-time conjugation.
pub const MAX_IMAGINARY_EXPONENT: f64 = 300.0;

const HERMITIAN_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-9;

/// Which trace the partition function is taken with. Expectations do not
/// depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceConvention {
    /// `tr = Tr / dim`
    Normalized,
    /// `Tr`
    Plain,
}

/// Eigenvalues (ascending) and eigenvectors of a hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        let dev = h.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let (energies, vectors) = h.eigh();
        Ok(Self { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn width(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }

    /// `U* A U`.
    pub fn to_eigenbasis(&self, a: &DenseOperator) -> Result<DMatrix<C64>> {
        self.check(a)?;
        Ok(self.vectors.adjoint() * a.matrix() * &self.vectors)
    }

    /// `U A' U*`.
    pub fn from_eigenbasis(&self, a: &DMatrix<C64>) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(&self.vectors * a * self.vectors.adjoint())
    }

    /// `U diag(E) U*`.
    pub fn reconstruct(&self) -> DenseOperator {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| c(e)),
        ));
        self.from_eigenbasis(&d)
    }

    fn check(&self, a: &DenseOperator) -> Result<()> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.dim(),
            });
        }
        Ok(())
    }
}

/// Gibbs state `e^{-βH} / Z` at a fixed `β ≥ 0`.
#[derive(Clone, Debug)]
pub struct ThermalState {
    spectrum: Arc<Spectrum>,
    beta: f64,
    convention: TraceConvention,
    probabilities: Vec<f64>,
    log_z: f64,
    density: OnceLock<DMatrix<C64>>,
}

/// Diagonalizes `h` and builds its Gibbs state.
pub fn diagonalize(
    h: &DenseOperator,
    beta: f64,
    convention: TraceConvention,
) -> Result<ThermalState> {
    ThermalState::new(Arc::new(Spectrum::new(h)?), beta, convention)
}

impl ThermalState {
    /// Reuses an existing spectrum, e.g. for a sweep over `β`.
    pub fn new(spectrum: Arc<Spectrum>, beta: f64, convention: TraceConvention) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(invalid(
                "beta",
                format!("must be finite and >= 0, got {beta}"),
            ));
        }
        let e0 = spectrum.ground_energy();
        let weights: Vec<f64> = spectrum
            .energies()
            .iter()
            .map(|&e| (-beta * (e - e0)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut log_z = total.ln() - beta * e0;
        if convention == TraceConvention::Normalized {
            log_z -= (spectrum.dim() as f64).ln();
        }
        Ok(Self {
            probabilities: weights.iter().map(|w| w / total).collect(),
            spectrum,
            beta,
            convention,
            log_z,
            density: OnceLock::new(),
        })
    }

    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn convention(&self) -> TraceConvention {
        self.convention
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn energies(&self) -> &[f64] {
        self.spectrum.energies()
    }

    /// Boltzmann weights of the eigenstates.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `log Z` under the state's trace convention.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn partition_function(&self) -> f64 {
        self.log_z.exp()
    }

    /// `e^{-βH} / Z`.
    pub fn density_matrix(&self) -> &DMatrix<C64> {
        self.density.get_or_init(|| {
            let u = self.spectrum.eigenvectors();
            let mut scaled = u.clone();
            for (j, p) in self.probabilities.iter().enumerate() {
                scaled.column_mut(j).scale_mut(*p);
            }
            scaled * u.adjoint()
        })
    }

    /// `⟨A⟩ = Tr(ρ A)`.
    pub fn expectation(&self, a: &DenseOperator) -> Result<C64> {
        self.spectrum.check(a)?;
        let rho = self.density_matrix();
        // Tr(ρA) = Σ_ij ρ_ji A_ij
        Ok(rho.transpose().component_mul(a.matrix()).sum())
    }

    /// Expectations of several observables, evaluated in parallel.
    pub fn expectations(&self, ops: &[DenseOperator]) -> Result<Vec<C64>> {
        self.density_matrix();
        ops.par_iter().map(|a| self.expectation(a)).collect()
    }

    /// `⟨AB⟩ - ⟨A⟩⟨B⟩`.
    pub fn truncated_correlation(&self, a: &DenseOperator, b: &DenseOperator) -> Result<C64> {
        let ab = a.try_mul(b)?;
        Ok(self.expectation(&ab)? - self.expectation(a)? * self.expectation(b)?)
    }

    fn check_overflow(&self) -> Result<()> {
        let x = self.beta * self.spectrum.width();
        if x > MAX_IMAGINARY_EXPONENT {
            return Err(Error::Overflow(x));
        }
        Ok(())
    }

    /// `α_{iβ}(A) = e^{-βH} A e^{βH}`.
    pub fn imaginary_time(&self, a: &DenseOperator) -> Result<DenseOperator> {
        self.conjugate(a, self.beta)
    }

    /// `e^{-tH} A e^{tH}` for any real `t` with `|t| · width ≤ 300`.
    pub fn conjugate(&self, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
        let x = t.abs() * self.spectrum.width();
        if x > MAX_IMAGINARY_EXPONENT {
            return Err(Error::Overflow(x));
        }
        let mut m = self.spectrum.to_eigenbasis(a)?;
        let e = self.spectrum.energies();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= (-t * (e[i] - e[j])).exp();
            }
        }
        Ok(self.spectrum.from_eigenbasis(&m))
    }

    /// `|ρ(AB) - ρ(B α_{iβ}(A))|`; zero up to roundoff for a Gibbs state.
    pub fn kms_residual(&self, a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
        self.check_overflow()?;
        let lhs = self.expectation(&a.try_mul(b)?)?;
        let rhs = self.expectation(&b.try_mul(&self.imaginary_time(a)?)?)?;
        Ok((lhs - rhs).norm())
    }

    /// Duhamel two-point function
    /// `(A, B) = Z^{-1} ∫_0^1 Tr A e^{-sβH} B e^{-(1-s)βH} ds`.
    pub fn duhamel(&self, a: &DenseOperator, b: &DenseOperator) -> Result<C64> {
        let am = self.spectrum.to_eigenbasis(a)?;
        let bm = self.spectrum.to_eigenbasis(b)?;
        let e = self.spectrum.energies();
        let e0 = e[0];
        let width = self.spectrum.width();
        let total: f64 = e.iter().map(|&x| (-self.beta * (x - e0)).exp()).sum();
        let n = e.len();
        let sum: C64 = (0..n)
            .into_par_iter()
            .map(|m| {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    let kernel = duhamel_kernel(self.beta, e[m] - e0, e[k] - e0, width);
                    acc += am[(m, k)] * bm[(k, m)] * kernel;
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(sum / total)
    }
}

/// `∫_0^1 e^{-sβE' - (1-s)βE} ds` for shifted energies `E, E' ≥ 0`.
fn duhamel_kernel(beta: f64, e: f64, e_prime: f64, width: f64) -> f64 {
    let lo = e.min(e_prime);
    let y = beta * (e - e_prime).abs();
    let factor = if (e - e_prime).abs() <= DEGENERACY_TOL * width || y == 0.0 {
        1.0 - y / 2.0 + y * y / 6.0
    } else {
        -(-y).exp_m1() / y
    };
    (-beta * lo).exp() * factor
}
