//! Interactions `(Φ_X)`, their weighted norms, finite-volume Hamiltonians,
//! XYZ spin models and the high-temperature uniqueness certificate.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::graph::{edge, Edge, Graph};
use crate::operators::{
    checked_pow, embed, spin_matrices, DenseOperator, SiteSet, SpinValue, MAX_HILBERT_DIM,
};

#[derive(Clone, Debug)]
struct Term {
    op: DenseOperator,
    norm: f64,
}

/// Map from site sets `X ⊂ Λ` to hermitian on-support operators `Φ_X`.
#[derive(Clone, Debug)]
pub struct Interaction {
    site_dim: usize,
    volume: SiteSet,
    terms: BTreeMap<SiteSet, Term>,
}

impl Interaction {
    pub fn new(site_dim: usize, volume: SiteSet) -> Result<Self> {
        if site_dim == 0 {
            return Err(invalid("site_dim", "must be positive"));
        }
        Ok(Self {
            site_dim,
            volume,
            terms: BTreeMap::new(),
        })
    }

    /// Adds `Φ_X`. Repeated supports are rejected rather than summed.
    pub fn insert(&mut self, support: SiteSet, op: DenseOperator) -> Result<()> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        if !support.is_subset_of(&self.volume) {
            return Err(Error::SupportNotInVolume {
                support: support.sites().to_vec(),
                volume: self.volume.sites().to_vec(),
            });
        }
        let expected = checked_pow(self.site_dim, support.len(), "term dimension")?;
        if op.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: op.dim(),
            });
        }
        let dev = op.hermiticity_deviation();
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        if self.terms.contains_key(&support) {
            return Err(Error::DuplicateTerm(support.sites().to_vec()));
        }
        let norm = op.operator_norm();
        self.terms.insert(support, Term { op, norm });
        Ok(())
    }

    pub fn with_term(mut self, support: SiteSet, op: DenseOperator) -> Result<Self> {
        self.insert(support, op)?;
        Ok(self)
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn volume(&self) -> &SiteSet {
        &self.volume
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (lexicographic support) order.
    pub fn terms(&self) -> impl Iterator<Item = (&SiteSet, &DenseOperator)> {
        self.terms.iter().map(|(x, t)| (x, &t.op))
    }

    pub fn supports(&self) -> Vec<SiteSet> {
        self.terms.keys().cloned().collect()
    }

    pub fn term(&self, support: &SiteSet) -> Option<&DenseOperator> {
        self.terms.get(support).map(|t| &t.op)
    }

    /// Cached operator norm `‖Φ_X‖`.
    pub fn term_norm(&self, support: &SiteSet) -> Option<f64> {
        self.terms.get(support).map(|t| t.norm)
    }

    /// `Σ_{X ∋ x} w(X) ‖Φ_X‖` for a per-set weight.
    pub fn weighted_site_sum(&self, site: usize, weight: impl Fn(&SiteSet) -> f64) -> f64 {
        self.terms
            .iter()
            .filter(|(x, _)| x.contains(site))
            .map(|(x, t)| t.norm * weight(x))
            .sum()
    }

    /// `max_{x ∈ Λ} Σ_{X ∋ x} w(X) ‖Φ_X‖`.
    pub fn weighted_sup(&self, weight: impl Fn(&SiteSet) -> f64) -> f64 {
        self.volume
            .iter()
            .map(|x| self.weighted_site_sum(x, &weight))
            .fold(0.0, f64::max)
    }

    /// Per-site contribution to `‖Φ‖_r`.
    pub fn site_norm(&self, site: usize, r: f64) -> f64 {
        self.weighted_site_sum(site, |x| r.powi(x.len() as i32))
    }

    /// `‖Φ‖_r = max_x Σ_{X ∋ x} ‖Φ_X‖ r^{|X|}`.
    pub fn norm(&self, r: f64) -> f64 {
        self.weighted_sup(|x| r.powi(x.len() as i32))
    }

    pub fn hilbert_dim(&self) -> Result<usize> {
        let d = checked_pow(self.site_dim, self.volume.len(), "hilbert space dimension")?;
        if d > MAX_HILBERT_DIM {
            return Err(Error::CapExceeded {
                what: "hilbert space dimension",
                size: d,
                cap: MAX_HILBERT_DIM,
            });
        }
        Ok(d)
    }

    /// `H_Λ = Σ_X Φ_X` on the full volume.
    pub fn hamiltonian(&self) -> Result<DenseOperator> {
        if self.volume.is_empty() {
            return Err(Error::EmptySupport);
        }
        let d = self.hilbert_dim()?;
        let mut h = DenseOperator::zeros(d);
        for (x, t) in &self.terms {
            h = &h + &embed(&t.op, x, &self.volume, self.site_dim)?;
        }
        Ok(h)
    }
}

/// `‖Φ‖_r`; requires `r >= 1`.
pub fn interaction_norm(phi: &Interaction, r: f64) -> Result<f64> {
    if r.is_nan() || r < 1.0 {
        return Err(invalid("r", format!("must be >= 1, got {r}")));
    }
    Ok(phi.norm(r))
}

/// Exchange couplings `(J^1, J^2, J^3)` per unordered edge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Couplings {
    map: BTreeMap<Edge, [f64; 3]>,
}

impl Couplings {
    pub fn new() -> Self {
        Self::default()
    }

    /// The same `(J^1, J^2, J^3)` on every edge of `graph`.
    pub fn uniform(graph: &Graph, j: [f64; 3]) -> Self {
        Self {
            map: graph.edges().iter().map(|&e| (e, j)).collect(),
        }
    }

    pub fn set(&mut self, x: usize, y: usize, j: [f64; 3]) {
        self.map.insert(edge(x, y), j);
    }

    pub fn with(mut self, x: usize, y: usize, j: [f64; 3]) -> Self {
        self.set(x, y, j);
        self
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.map.get(&edge(x, y)).copied().unwrap_or([0.0; 3])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, [f64; 3])> + '_ {
        self.map.iter().map(|(&e, &j)| (e, j))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `max |J^i_xy|` over all edges and components.
    pub fn max_abs(&self) -> f64 {
        self.map
            .values()
            .flat_map(|j| j.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// XYZ model `H = -Σ_{edges} (J^1 S^1 S^1 + J^2 S^2 S^2 + J^3 S^3 S^3)`.
///
/// This is the ordered-pair form `-1/2 Σ_{x,y}` with each unordered edge
/// counted once; all-zero edges produce no term.
pub fn build_xyz(graph: &Graph, spin: SpinValue, couplings: &Couplings) -> Result<Interaction> {
    let sm = spin_matrices(spin);
    let pairs = [sm.s1.kron(&sm.s1), sm.s2.kron(&sm.s2), sm.s3.kron(&sm.s3)];
    let mut phi = Interaction::new(spin.dim(), graph.vertex_set())?;
    for ((x, y), j) in couplings.iter() {
        if !graph.has_edge(x, y) {
            return Err(Error::UnknownEdge(x, y));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(invalid(
                "couplings",
                format!("non-finite coupling on ({x}, {y})"),
            ));
        }
        if j == [0.0; 3] {
            continue;
        }
        let dim = spin.dim() * spin.dim();
        let mut term = DenseOperator::zeros(dim);
        for (ji, p) in j.iter().zip(&pairs) {
            if *ji != 0.0 {
                term = &term - &p.scale_real(*ji);
            }
        }
        phi.insert(SiteSet::new([x, y])?, term)?;
    }
    Ok(phi)
}

/// Witness for the high-temperature contraction `‖K_β‖ <= N s < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessCertificate {
    pub beta: f64,
    pub s_witness: f64,
    /// `‖Φ‖_{N(1+s)}` at the witness.
    pub norm_at_witness: f64,
    /// `N s`, the bound on the norm of `K_β`.
    pub contraction_bound: f64,
    /// `2β‖Φ‖_{N(1+s)} < s` and `s < 1/N`.
    pub valid: bool,
    /// `β‖Φ‖_{N+1} < (2N)^{-1}`.
    pub simple_condition: bool,
    /// `(2N ‖Φ‖_{N+1})^{-1}`; infinite for the zero interaction.
    pub simple_threshold_beta: f64,
}

const GRID_POINTS: usize = 64;
const BISECTION_STEPS: usize = 40;

/// Searches `s ∈ (0, 1/N)` with `2β‖Φ‖_{N(1+s)} < s`, preferring the
/// smallest such `s` (smallest contraction bound).
pub fn uniqueness_certificate(phi: &Interaction, beta: f64) -> Result<UniquenessCertificate> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    let n = phi.site_dim() as f64;
    let norm_simple = phi.norm(n + 1.0);
    let simple_condition = beta * norm_simple < 1.0 / (2.0 * n);
    let simple_threshold_beta = if norm_simple > 0.0 {
        1.0 / (2.0 * n * norm_simple)
    } else {
        f64::INFINITY
    };

    let g = |s: f64| 2.0 * beta * phi.norm(n * (1.0 + s)) - s;

    let s_witness = if phi.norm(n) == 0.0 {
        1.0 / (2.0 * n)
    } else {
        let lo = 1e-4 / n;
        let hi = 0.999 / n;
        let grid: Vec<f64> = (0..GRID_POINTS)
            .map(|i| lo * (hi / lo).powf(i as f64 / (GRID_POINTS - 1) as f64))
            .collect();
        match grid.iter().position(|&s| g(s) < 0.0) {
            None => grid[GRID_POINTS - 1],
            Some(0) => grid[0],
            Some(i) => {
                let (mut bad, mut good) = (grid[i - 1], grid[i]);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (bad + good);
                    if g(mid) < 0.0 {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                good
            }
        }
    };
    let norm_at_witness = phi.norm(n * (1.0 + s_witness));
    let valid = 2.0 * beta * norm_at_witness < s_witness && s_witness < 1.0 / n;
    Ok(UniquenessCertificate {
        beta,
        s_witness,
        norm_at_witness,
        contraction_bound: n * s_witness,
        valid,
        simple_condition,
        simple_threshold_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{commutator, random_hermitian};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ising_chain(n: usize) -> Interaction {
        let g = Graph::chain(n).unwrap();
        build_xyz(
            &g,
            SpinValue::HALF,
            &Couplings::uniform(&g, [0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    fn sorted_spectrum(h: &DenseOperator) -> Vec<f64> {
        h.eigh().0
    }

    #[test]
    fn empty_interaction_norm_is_zero() {
        let phi = Interaction::new(2, SiteSet::range(3)).unwrap();
        assert_eq!(interaction_norm(&phi, 1.0).unwrap(), 0.0);
        assert_eq!(interaction_norm(&phi, 7.0).unwrap(), 0.0);
        assert!(interaction_norm(&phi, 0.5).is_err());
    }

    #[test]
    fn ising_chain_norm() {
        let phi = ising_chain(4);
        for r in [1.0, 2.0, 3.0, 4.5] {
            assert!((phi.norm(r) - 0.5 * r * r).abs() < 1e-14);
        }
        // endpoint sees one edge
        assert!((phi.site_norm(0, 3.0) - 0.25 * 9.0).abs() < 1e-14);
        assert!((phi.norm(3.0) - 4.5).abs() < 1e-14);
    }

    #[test]
    fn single_site_hamiltonian() {
        let sz = spin_matrices(SpinValue::HALF).s3.scale_real(2.0);
        let phi = Interaction::new(2, SiteSet::singleton(0))
            .unwrap()
            .with_term(SiteSet::singleton(0), sz.clone())
            .unwrap();
        assert_eq!(phi.hamiltonian().unwrap(), sz);
    }

    #[test]
    fn two_site_xy_spectrum() {
        let g = Graph::chain(2).unwrap();
        let phi = build_xyz(
            &g,
            SpinValue::HALF,
            &Couplings::uniform(&g, [1.0, 1.0, 0.0]),
        )
        .unwrap();
        let spec = sorted_spectrum(&phi.hamiltonian().unwrap());
        let want = [-0.5, 0.0, 0.0, 0.5];
        for (a, b) in spec.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn two_site_heisenberg_spectrum() {
        let g = Graph::chain(2).unwrap();
        let phi = build_xyz(&g, SpinValue::HALF, &Couplings::uniform(&g, [1.0; 3])).unwrap();
        let spec = sorted_spectrum(&phi.hamiltonian().unwrap());
        let want = [-0.25, -0.25, -0.25, 0.75];
        for (a, b) in spec.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn zero_couplings_give_zero_hamiltonian() {
        let g = Graph::chain(3).unwrap();
        let phi = build_xyz(&g, SpinValue::ONE, &Couplings::uniform(&g, [0.0; 3])).unwrap();
        assert!(phi.is_empty());
        assert_eq!(phi.hamiltonian().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ising_is_diagonal() {
        let h = ising_chain(3).hamiltonian().unwrap();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                if i != j {
                    assert_eq!(h.get(i, j).norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn unknown_edge_is_rejected() {
        let g = Graph::chain(3).unwrap();
        let j = Couplings::new().with(0, 2, [1.0, 0.0, 0.0]);
        assert_eq!(
            build_xyz(&g, SpinValue::HALF, &j).unwrap_err(),
            Error::UnknownEdge(0, 2)
        );
    }

    #[test]
    fn duplicate_term_is_rejected() {
        let mut phi = Interaction::new(2, SiteSet::range(2)).unwrap();
        phi.insert(SiteSet::singleton(0), DenseOperator::identity(2))
            .unwrap();
        assert!(matches!(
            phi.insert(SiteSet::singleton(0), DenseOperator::identity(2)),
            Err(Error::DuplicateTerm(_))
        ));
    }

    #[test]
    fn hamiltonian_is_hermitian_for_random_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut phi = Interaction::new(2, SiteSet::range(3)).unwrap();
        phi.insert(SiteSet::new([0, 1]).unwrap(), random_hermitian(4, &mut rng))
            .unwrap();
        phi.insert(SiteSet::new([1, 2]).unwrap(), random_hermitian(4, &mut rng))
            .unwrap();
        phi.insert(SiteSet::singleton(2), random_hermitian(2, &mut rng))
            .unwrap();
        assert!(phi.hamiltonian().unwrap().is_hermitian());
    }

    #[test]
    fn xy_conserves_total_magnetization() {
        let g = Graph::ring(4).unwrap();
        let phi = build_xyz(
            &g,
            SpinValue::HALF,
            &Couplings::uniform(&g, [0.7, 0.7, -0.3]),
        )
        .unwrap();
        let h = phi.hamiltonian().unwrap();
        let s3 = spin_matrices(SpinValue::HALF).s3;
        let vol = g.vertex_set();
        let mut total = DenseOperator::zeros(h.dim());
        for x in vol.iter() {
            total = &total + &embed(&s3, &SiteSet::singleton(x), &vol, 2).unwrap();
        }
        assert!(commutator(&h, &total).unwrap().operator_norm() <= 1e-12);
    }

    #[test]
    fn relabeling_preserves_spectrum() {
        let g = Graph::chain(4).unwrap();
        let j = Couplings::new()
            .with(0, 1, [1.0, 0.4, 0.2])
            .with(1, 2, [0.3, -0.2, 0.9])
            .with(2, 3, [0.5, 0.5, 0.1]);
        let perm = [2, 0, 3, 1];
        let g2 = Graph::new(4, g.edges().iter().map(|&(x, y)| (perm[x], perm[y]))).unwrap();
        let mut j2 = Couplings::new();
        for ((x, y), v) in j.iter() {
            j2.set(perm[x], perm[y], v);
        }
        let s1 = sorted_spectrum(
            &build_xyz(&g, SpinValue::HALF, &j)
                .unwrap()
                .hamiltonian()
                .unwrap(),
        );
        let s2 = sorted_spectrum(
            &build_xyz(&g2, SpinValue::HALF, &j2)
                .unwrap()
                .hamiltonian()
                .unwrap(),
        );
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn certificate_zero_interaction() {
        let phi = Interaction::new(2, SiteSet::range(2)).unwrap();
        let cert = uniqueness_certificate(&phi, 1.0).unwrap();
        assert!(cert.valid);
        assert_eq!(cert.s_witness, 0.25);
        assert!(cert.simple_condition);
    }

    #[test]
    fn certificate_ising_threshold() {
        let phi = ising_chain(4);
        let cert = uniqueness_certificate(&phi, 0.01).unwrap();
        assert!((cert.simple_threshold_beta - 1.0 / 18.0).abs() <= 1e-12 / 18.0);
        assert!(cert.simple_condition);
        assert!(cert.valid);
        // soundness at the witness
        assert!(2.0 * 0.01 * phi.norm(2.0 * (1.0 + cert.s_witness)) < cert.s_witness);
        assert!(
            !uniqueness_certificate(&phi, 1.0 / 18.0 + 1e-9)
                .unwrap()
                .simple_condition
        );
    }

    #[test]
    fn certificate_fails_at_unit_beta() {
        let phi = ising_chain(4);
        let cert = uniqueness_certificate(&phi, 1.0).unwrap();
        assert!(!cert.valid);
        // g(s) = 4(1+s)^2 - s > 0 everywhere
        for k in 1..100 {
            let s = k as f64 / 200.0;
            assert!(2.0 * phi.norm(2.0 * (1.0 + s)) - s > 0.0);
        }
    }

    #[test]
    fn certificate_rejects_nonpositive_beta() {
        let phi = ising_chain(2);
        assert!(uniqueness_certificate(&phi, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn norm_is_monotone_in_r(seed in 0u64..500, r1 in 1.0f64..4.0, dr in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut phi = Interaction::new(2, SiteSet::range(3)).unwrap();
            phi.insert(SiteSet::new([0, 1]).unwrap(), random_hermitian(4, &mut rng)).unwrap();
            phi.insert(SiteSet::singleton(1), random_hermitian(2, &mut rng)).unwrap();
            phi.insert(SiteSet::range(3), random_hermitian(8, &mut rng)).unwrap();
            prop_assert!(phi.norm(r1) <= phi.norm(r1 + dr));
        }

        #[test]
        fn certificate_is_sound(seed in 0u64..200, beta in 0.001f64..0.2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut phi = Interaction::new(2, SiteSet::range(3)).unwrap();
            phi.insert(SiteSet::new([0, 1]).unwrap(), random_hermitian(4, &mut rng)).unwrap();
            phi.insert(SiteSet::new([1, 2]).unwrap(), random_hermitian(4, &mut rng)).unwrap();
            let cert = uniqueness_certificate(&phi, beta).unwrap();
            if cert.valid {
                prop_assert!(2.0 * beta * phi.norm(2.0 * (1.0 + cert.s_witness)) < cert.s_witness);
                prop_assert!(cert.s_witness < 0.5);
            }
        }
    }
}
