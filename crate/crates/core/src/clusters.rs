//! High-temperature cluster expansion: clusters of interaction supports,
//! their weights, Ursell coefficients, truncated series for `log Z` and
//! for expectations, convergence certificates, and the resulting bound on
//! truncated two-point functions.
//!
//! Traces are normalized, and a cluster `(X_1, …, X_n)` carries the weight
//! `(-β)^n / n! · tr Φ_{X_1} ⋯ Φ_{X_n}`, the `n`-th term of the Taylor
//! series of `tr e^{-βH}`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gibbs::{diagonalize, TraceConvention};
use crate::interaction::Interaction;
use crate::operators::{embed, DenseOperator, SiteSet, C64};

/// Largest number of clusters accepted by [`ursell_phi`].
pub const MAX_URSELL_K: usize = 9;
const BRUTE_FORCE_K: usize = 6;
/// Weights below this fraction of their a-priori bound are treated as zero.
const PRUNE_RELATIVE: f64 = 1e-15;
/// Largest Hilbert space used for the exact comparison values.
const EXACT_DIM_LIMIT: usize = 4096;

/// Sequence `(X_1, …, X_n)` of interaction supports whose overlap graph is
/// connected (together with the anchor, when present).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterSeq {
    sets: Vec<SiteSet>,
    support: SiteSet,
    anchor: Option<SiteSet>,
}

impl ClusterSeq {
    pub fn new(sets: Vec<SiteSet>) -> Result<Self> {
        Self::build(sets, None)
    }

    /// Cluster `(X_0, X_1, …, X_n)` with `X_0 = anchor`.
    pub fn anchored(anchor: SiteSet, sets: Vec<SiteSet>) -> Result<Self> {
        Self::build(sets, Some(anchor))
    }

    fn build(sets: Vec<SiteSet>, anchor: Option<SiteSet>) -> Result<Self> {
        if sets.is_empty() && anchor.is_none() {
            return Err(invalid("cluster", "a cluster needs at least one set"));
        }
        let mut all: Vec<&SiteSet> = anchor.iter().collect();
        all.extend(sets.iter());
        if !overlap_connected(&all) {
            return Err(invalid("cluster", "overlap graph is not connected"));
        }
        let support = all.iter().fold(SiteSet::empty(), |acc, s| acc.union(s));
        Ok(Self {
            sets,
            support,
            anchor,
        })
    }

    pub fn sets(&self) -> &[SiteSet] {
        &self.sets
    }

    /// `n(C)`, the number of interaction sets (the anchor not counted).
    pub fn order(&self) -> usize {
        self.sets.len()
    }

    /// `supp C`, including the anchor.
    pub fn support(&self) -> &SiteSet {
        &self.support
    }

    pub fn anchor(&self) -> Option<&SiteSet> {
        self.anchor.as_ref()
    }
}

fn overlap_connected(sets: &[&SiteSet]) -> bool {
    let k = sets.len();
    if k <= 1 {
        return true;
    }
    let mut seen = vec![false; k];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if !seen[j] && sets[i].intersects(sets[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Every cluster over the interaction's supports with `n ≤ max_n` and
/// `|supp C| ≤ max_support`, in lexicographic order of the sequences.
/// Anchored clusters have `n ≥ 1`; the bare anchor is not listed.
pub fn enumerate_clusters(
    phi: &Interaction,
    anchor: Option<&SiteSet>,
    max_n: usize,
    max_support: usize,
) -> Vec<ClusterSeq> {
    let alphabet = phi.supports();
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let start = anchor.cloned().unwrap_or_else(SiteSet::empty);
    if start.len() > max_support {
        return out;
    }
    extend_clusters(
        &alphabet,
        anchor,
        &start,
        max_n,
        max_support,
        &mut stack,
        &mut out,
    );
    out
}

fn extend_clusters(
    alphabet: &[SiteSet],
    anchor: Option<&SiteSet>,
    support: &SiteSet,
    max_n: usize,
    max_support: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<ClusterSeq>,
) {
    if stack.len() == max_n {
        return;
    }
    for (idx, x) in alphabet.iter().enumerate() {
        let union = support.union(x);
        if union.len() > max_support {
            continue;
        }
        stack.push(idx);
        let sets: Vec<SiteSet> = stack.iter().map(|&i| alphabet[i].clone()).collect();
        let mut all: Vec<&SiteSet> = anchor.iter().copied().collect();
        all.extend(sets.iter());
        if overlap_connected(&all) {
            out.push(ClusterSeq {
                sets,
                support: union.clone(),
                anchor: anchor.cloned(),
            });
        }
        extend_clusters(alphabet, anchor, &union, max_n, max_support, stack, out);
        stack.pop();
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(-β)^n / n! · tr(A Φ_{X_1} ⋯ Φ_{X_n})` on `supp C`.
fn product_weight(
    cluster: &ClusterSeq,
    head: Option<(&DenseOperator, &SiteSet)>,
    phi: &Interaction,
    beta: f64,
) -> Result<C64> {
    let n = phi.site_dim();
    let support = cluster.support();
    let mut prod = match head {
        Some((a, s)) => embed(a, s, support, n)?,
        None => DenseOperator::identity(n.pow(support.len() as u32)),
    };
    for x in cluster.sets() {
        let term = phi
            .term(x)
            .ok_or_else(|| Error::UnknownSet(x.sites().to_vec()))?;
        prod = &prod * &embed(term, x, support, n)?;
    }
    let k = cluster.order();
    Ok(prod.normalized_trace() * ((-beta).powi(k as i32) / factorial(k)))
}

/// `w(C) = (-β)^n / n! · tr Φ_{X_1} ⋯ Φ_{X_n}`.
pub fn weight(cluster: &ClusterSeq, phi: &Interaction, beta: f64) -> Result<C64> {
    product_weight(cluster, None, phi, beta)
}

/// `w_A(C_A) = (-β)^n / n! · tr A Φ_{X_1} ⋯ Φ_{X_n}` with `A` acting on
/// the cluster's anchor; `tr A` when `n = 0`.
pub fn weight_anchored(
    cluster: &ClusterSeq,
    a: &DenseOperator,
    phi: &Interaction,
    beta: f64,
) -> Result<C64> {
    let anchor = cluster
        .anchor()
        .ok_or_else(|| invalid("cluster", "anchored weight needs an anchored cluster"))?;
    product_weight(cluster, Some((a, anchor)), phi, beta)
}

/// `β^n / n! · Π ‖Φ_{X_i}‖`.
fn weight_bound(cluster: &ClusterSeq, phi: &Interaction, beta: f64) -> f64 {
    let k = cluster.order();
    let norms: f64 = cluster
        .sets()
        .iter()
        .map(|x| phi.term_norm(x).unwrap_or(0.0))
        .product();
    beta.powi(k as i32) / factorial(k) * norms
}

/// Adjacency of the overlap graph of `supports`.
pub fn overlap_graph(supports: &[&SiteSet]) -> Vec<Vec<bool>> {
    let k = supports.len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| i != j && supports[i].intersects(supports[j]))
                .collect()
        })
        .collect()
}

/// `Σ_{g ∈ Conn(k)} Π_{ij ∈ g} (-1)` over connected spanning subgraphs of
/// the given graph, by enumerating edge subsets.
pub fn ursell_brute_force(adjacency: &[Vec<bool>]) -> i64 {
    let k = adjacency.len();
    if k == 1 {
        return 1;
    }
    let edges: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .filter(|&(i, j)| adjacency[i][j])
        .collect();
    let mut total = 0i64;
    for mask in 0u64..(1u64 << edges.len()) {
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut components = k;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                    components -= 1;
                }
            }
        }
        if components == 1 {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    total
}

/// Same quantity by the subset recursion
/// `c(S) = f(S) - Σ_{T ∋ min S, T ⊊ S} c(T) f(S \ T)`, where `f(S) = 1`
/// if `S` spans no edge and `0` otherwise.
pub fn ursell_recursive(adjacency: &[Vec<bool>]) -> i64 {
    let k = adjacency.len();
    let full = (1usize << k) - 1;
    let independent: Vec<bool> = (0..=full)
        .map(|s| {
            (0..k).all(|i| {
                s >> i & 1 == 0 || ((i + 1)..k).all(|j| s >> j & 1 == 0 || !adjacency[i][j])
            })
        })
        .collect();
    let f = |s: usize| i64::from(independent[s]);
    let mut c = vec![0i64; full + 1];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut value = f(s);
        // proper subsets T of s containing the lowest element
        let mut sub = rest;
        loop {
            let t = sub | low;
            if t != s {
                value -= c[t] * f(s ^ t);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        c[s] = value;
    }
    c[full]
}

/// `φ(C_1, …, C_k)` from the supports of the clusters.
pub fn ursell_phi(supports: &[&SiteSet]) -> Result<i64> {
    let k = supports.len();
    if k == 0 {
        return Err(invalid("k", "needs at least one cluster"));
    }
    if k > MAX_URSELL_K {
        return Err(Error::CapExceeded {
            what: "Ursell function arity",
            size: k,
            cap: MAX_URSELL_K,
        });
    }
    let adj = overlap_graph(supports);
    Ok(if k <= BRUTE_FORCE_K {
        ursell_brute_force(&adj)
    } else {
        ursell_recursive(&adj)
    })
}

/// Truncation of the series: total order `Σ n(C_i) ≤ max_n`, at most
/// `max_k` clusters per Ursell term, and `|supp C| ≤ max_support` per
/// cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub max_n: usize,
    pub max_k: usize,
    pub max_support: usize,
}

impl Truncation {
    pub fn new(max_n: usize, max_k: usize, max_support: usize) -> Result<Self> {
        if max_n == 0 || max_k == 0 {
            return Err(invalid("truncation", "max_n and max_k must be positive"));
        }
        if max_k > MAX_URSELL_K {
            return Err(Error::CapExceeded {
                what: "Ursell function arity",
                size: max_k,
                cap: MAX_URSELL_K,
            });
        }
        Ok(Self {
            max_n,
            max_k,
            max_support,
        })
    }
}

#[derive(Clone, Debug)]
struct WeightedCluster {
    order: usize,
    support: SiteSet,
    weight: C64,
}

/// The connected terms `φ(C_1, …, C_k) Π w(C_i) / k!` of `log Z`, grouped
/// by total order and joint support.
#[derive(Clone, Debug)]
pub struct ConnectedSeries {
    terms: BTreeMap<(usize, SiteSet), C64>,
    pub cluster_count: usize,
    pub tuple_count: usize,
}

impl ConnectedSeries {
    pub fn new(phi: &Interaction, beta: f64, trunc: &Truncation) -> Result<Self> {
        let clusters = enumerate_clusters(phi, None, trunc.max_n, trunc.max_support);
        let weighted: Vec<WeightedCluster> = clusters
            .par_iter()
            .map(|c| {
                let w = weight(c, phi, beta)?;
                Ok((c, w))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|(c, w)| w.norm() > PRUNE_RELATIVE * weight_bound(c, phi, beta))
            .map(|(c, w)| WeightedCluster {
                order: c.order(),
                support: c.support().clone(),
                weight: w,
            })
            .collect();

        let mut series = Self {
            terms: BTreeMap::new(),
            cluster_count: weighted.len(),
            tuple_count: 0,
        };
        let mut chosen = Vec::new();
        series.extend_tuples(&weighted, trunc, 0, &mut chosen)?;
        Ok(series)
    }

    fn extend_tuples(
        &mut self,
        clusters: &[WeightedCluster],
        trunc: &Truncation,
        order: usize,
        chosen: &mut Vec<usize>,
    ) -> Result<()> {
        if !chosen.is_empty() {
            let supports: Vec<&SiteSet> = chosen.iter().map(|&i| &clusters[i].support).collect();
            let ursell = ursell_phi(&supports)?;
            if ursell != 0 {
                let k = chosen.len();
                let prod: C64 = chosen.iter().map(|&i| clusters[i].weight).product();
                let union = supports
                    .iter()
                    .fold(SiteSet::empty(), |acc, s| acc.union(s));
                *self.terms.entry((order, union)).or_default() +=
                    prod * (ursell as f64 / factorial(k));
                self.tuple_count += 1;
            }
        }
        if chosen.len() == trunc.max_k {
            return Ok(());
        }
        for (i, c) in clusters.iter().enumerate() {
            if order + c.order <= trunc.max_n {
                chosen.push(i);
                self.extend_tuples(clusters, trunc, order + c.order, chosen)?;
                chosen.pop();
            }
        }
        Ok(())
    }

    /// Sum of all terms: the truncated `log Z`.
    pub fn total(&self) -> C64 {
        self.terms.values().sum()
    }

    /// Contribution of each total order `0..=max_order`.
    pub fn per_order(&self, max_order: usize) -> Vec<f64> {
        let mut out = vec![0.0; max_order + 1];
        for ((n, _), v) in &self.terms {
            out[*n] += v.re;
        }
        out
    }

    /// Terms of order `≤ budget` whose joint support meets `region`.
    pub fn touching(&self, region: &SiteSet, budget: usize) -> C64 {
        self.terms
            .iter()
            .filter(|((n, s), _)| *n <= budget && s.intersects(region))
            .map(|(_, v)| v)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogZSeries {
    pub value: f64,
    /// Contribution of total order `n` at index `n`.
    pub per_order: Vec<f64>,
    /// Exact normalized-trace `log Z`, when the volume is small enough.
    pub exact: Option<f64>,
    pub abs_error: Option<f64>,
    pub cluster_count: usize,
    pub tuple_count: usize,
}

fn exact_state(phi: &Interaction, beta: f64) -> Result<Option<crate::gibbs::ThermalState>> {
    match phi.hilbert_dim() {
        Ok(d) if d <= EXACT_DIM_LIMIT => Ok(Some(diagonalize(
            &phi.hamiltonian()?,
            beta,
            TraceConvention::Normalized,
        )?)),
        _ => Ok(None),
    }
}

/// Truncated `log Z = Σ_k 1/k! Σ φ(C_1, …, C_k) Π w(C_i)` (normalized
/// trace), with the exact value for comparison on small volumes.
pub fn log_z_series(phi: &Interaction, beta: f64, trunc: &Truncation) -> Result<LogZSeries> {
    check_beta(beta)?;
    let series = ConnectedSeries::new(phi, beta, trunc)?;
    let value = series.total().re;
    let exact = exact_state(phi, beta)?.map(|s| s.log_z());
    Ok(LogZSeries {
        value,
        per_order: series.per_order(trunc.max_n),
        exact,
        abs_error: exact.map(|e| (value - e).abs()),
        cluster_count: series.cluster_count,
        tuple_count: series.tuple_count,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationSeries {
    pub value: f64,
    /// Imaginary part of the truncated sum; zero for hermitian `A` up to
    /// roundoff.
    pub imaginary: f64,
    pub exact: Option<f64>,
    pub abs_error: Option<f64>,
    pub anchored_count: usize,
}

/// `⟨A⟩ ≈ Σ_{C_A} w_A(C_A) exp(-Σ (connected terms meeting supp C_A))`.
///
/// The anchored cluster of order `n` is combined with connected terms of
/// order at most `max_n - n`.
pub fn expectation_series(
    a: &DenseOperator,
    support: &SiteSet,
    phi: &Interaction,
    beta: f64,
    trunc: &Truncation,
) -> Result<ExpectationSeries> {
    check_beta(beta)?;
    if !support.is_subset_of(phi.volume()) {
        return Err(Error::SupportNotInVolume {
            support: support.sites().to_vec(),
            volume: phi.volume().sites().to_vec(),
        });
    }
    let expected = phi.site_dim().pow(support.len() as u32);
    if a.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: a.dim(),
        });
    }
    let series = ConnectedSeries::new(phi, beta, trunc)?;
    let mut anchored = vec![ClusterSeq::anchored(support.clone(), Vec::new())?];
    if !support.is_empty() {
        anchored.extend(enumerate_clusters(
            phi,
            Some(support),
            trunc.max_n,
            trunc.max_support,
        ));
    }
    let terms: Vec<C64> = anchored
        .par_iter()
        .map(|c| {
            let w = weight_anchored(c, a, phi, beta)?;
            if w == C64::new(0.0, 0.0) {
                return Ok(w);
            }
            let t = series.touching(c.support(), trunc.max_n - c.order());
            Ok(w * (-t).exp())
        })
        .collect::<Result<_>>()?;
    let total: C64 = terms.iter().sum();
    let exact = match exact_state(phi, beta)? {
        Some(state) => Some(
            state
                .expectation(&embed(a, support, phi.volume(), phi.site_dim())?)?
                .re,
        ),
        None => None,
    };
    Ok(ExpectationSeries {
        value: total.re,
        imaginary: total.im,
        exact,
        abs_error: exact.map(|e| (total.re - e).abs()),
        anchored_count: anchored.len(),
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(invalid(
            "beta",
            format!("must be finite and >= 0, got {beta}"),
        ));
    }
    Ok(())
}

/// Nonnegative decay weight `b(X)` on interaction supports.
#[derive(Clone, Debug, PartialEq)]
pub enum DecayFunction {
    Constant(f64),
    PerSet {
        values: BTreeMap<SiteSet, f64>,
        default: f64,
    },
}

impl DecayFunction {
    pub fn value(&self, x: &SiteSet) -> f64 {
        match self {
            Self::Constant(b) => *b,
            Self::PerSet { values, default } => values.get(x).copied().unwrap_or(*default),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant(b) => *b >= 0.0,
            Self::PerSet { values, default } => {
                *default >= 0.0 && values.values().all(|v| *v >= 0.0)
            }
        };
        if !ok {
            return Err(invalid("b", "decay function must be nonnegative"));
        }
        Ok(())
    }
}

impl Default for DecayFunction {
    fn default() -> Self {
        Self::Constant(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KpVariant {
    /// `β ‖Φ‖_{e^a (1+a)} ≤ a`.
    Plain,
    /// `β sup_x Σ_{X ∋ x} ‖Φ_X‖ e^{3a|X|/2 + b(X)} < a`.
    Strengthened,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpCertificate {
    pub variant: KpVariant,
    pub a: f64,
    /// Left-hand side of the hypothesis.
    pub lhs: f64,
    pub holds: bool,
    /// `R_0 = 0, R_1, …` until a fixed point or divergence.
    pub r_trace: Vec<f64>,
    /// Every `R_m ≤ a`.
    pub bounded: bool,
}

const R_MAX_STEPS: usize = 500;

/// Checks the convergence hypothesis and iterates the majorizing map
/// `R_m = β sup_x Σ_{X ∋ x} ‖Φ_X‖ g(X) (s (1 + R_{m-1}))^{|X|}`, with
/// `(g, s) = (1, e^a)` for the plain criterion and `(e^{b(X)}, e^{a/2})`
/// for the strengthened one. In both cases the hypothesis gives
/// `R_{m-1} ≤ a ⇒ R_m ≤ a` because `1 + a ≤ e^a`.
pub fn kp_certificate(
    phi: &Interaction,
    beta: f64,
    a: f64,
    b: Option<&DecayFunction>,
    variant: KpVariant,
) -> Result<KpCertificate> {
    if !a.is_finite() || a <= 0.0 {
        return Err(invalid("a", format!("must be positive, got {a}")));
    }
    check_beta(beta)?;
    let zero_decay = DecayFunction::default();
    let b = b.unwrap_or(&zero_decay);
    b.validate()?;
    let (lhs, holds, scale) = match variant {
        KpVariant::Plain => {
            let lhs = beta * phi.norm(a.exp() * (1.0 + a));
            (lhs, lhs <= a, a.exp())
        }
        KpVariant::Strengthened => {
            let lhs = beta * phi.weighted_sup(|x| (1.5 * a * x.len() as f64 + b.value(x)).exp());
            (lhs, lhs < a, (0.5 * a).exp())
        }
    };
    let step = |r: f64| {
        beta * phi.weighted_sup(|x| {
            let g = match variant {
                KpVariant::Plain => 1.0,
                KpVariant::Strengthened => b.value(x).exp(),
            };
            g * (scale * (1.0 + r)).powi(x.len() as i32)
        })
    };
    let mut trace = vec![0.0];
    let mut r = 0.0;
    for _ in 0..R_MAX_STEPS {
        let next = step(r);
        trace.push(next);
        let done = (next - r).abs() <= 1e-15 * next.max(1.0) || !next.is_finite() || next > 1e6;
        r = next;
        if done {
            break;
        }
    }
    let bounded = trace.iter().all(|&v| v <= a + 1e-12);
    Ok(KpCertificate {
        variant,
        a,
        lhs,
        holds,
        r_trace: trace,
        bounded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `μ(X, Y)`: the least `Σ b(X_i)` over chains of interaction supports
/// `X_1, …, X_n` with `X ∩ X_1`, `X_i ∩ X_{i+1}` and `X_n ∩ Y` nonempty.
/// Zero when `X ∩ Y ≠ ∅`, infinite when no chain exists.
pub fn chain_distance(x: &SiteSet, y: &SiteSet, phi: &Interaction, b: &DecayFunction) -> f64 {
    if x.intersects(y) {
        return 0.0;
    }
    let nodes = phi.supports();
    let cost: Vec<f64> = nodes.iter().map(|s| b.value(s)).collect();
    let mut best = vec![f64::INFINITY; nodes.len()];
    let mut heap = BinaryHeap::new();
    for (i, s) in nodes.iter().enumerate() {
        if s.intersects(x) {
            best[i] = cost[i];
            heap.push(Frontier {
                cost: cost[i],
                node: i,
            });
        }
    }
    while let Some(Frontier { cost: d, node }) = heap.pop() {
        if d > best[node] {
            continue;
        }
        if nodes[node].intersects(y) {
            return d;
        }
        for (j, s) in nodes.iter().enumerate() {
            if j != node && s.intersects(&nodes[node]) {
                let nd = d + cost[j];
                if nd < best[j] {
                    best[j] = nd;
                    heap.push(Frontier { cost: nd, node: j });
                }
            }
        }
    }
    f64::INFINITY
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub bound: f64,
    pub measured: f64,
    pub holds: bool,
    /// `k(A, B)`.
    pub prefactor: f64,
    pub mu: f64,
    pub certificate: KpCertificate,
}

/// Bound `|⟨AB⟩ - ⟨A⟩⟨B⟩| ≤ k(A,B) e^{-μ(supp A, supp B)}` with
/// `k(A,B) = ‖A‖‖B‖(a|supp A| + a|supp B| + 3a²|supp A||supp B|)`, checked
/// against exact diagonalization. Refuses to report a bound unless the
/// strengthened criterion holds.
#[allow(clippy::too_many_arguments)]
pub fn decay_bound(
    a_op: &DenseOperator,
    a_support: &SiteSet,
    b_op: &DenseOperator,
    b_support: &SiteSet,
    phi: &Interaction,
    beta: f64,
    a: f64,
    b: &DecayFunction,
) -> Result<DecayReport> {
    let certificate = kp_certificate(phi, beta, a, Some(b), KpVariant::Strengthened)?;
    if !certificate.holds {
        return Err(Error::NoCertificate(format!(
            "strengthened criterion fails: {} >= {}",
            certificate.lhs, a
        )));
    }
    let (sa, sb) = (a_support.len() as f64, b_support.len() as f64);
    let prefactor =
        a_op.operator_norm() * b_op.operator_norm() * (a * sa + a * sb + 3.0 * a * a * sa * sb);
    let mu = chain_distance(a_support, b_support, phi, b);
    let bound = prefactor * (-mu).exp();

    let n = phi.site_dim();
    let vol = phi.volume();
    let state = diagonalize(&phi.hamiltonian()?, beta, TraceConvention::Plain)?;
    let full_a = embed(a_op, a_support, vol, n)?;
    let full_b = embed(b_op, b_support, vol, n)?;
    let measured = state.truncated_correlation(&full_a, &full_b)?.norm();
    Ok(DecayReport {
        bound,
        measured,
        holds: measured <= bound,
        prefactor,
        mu,
        certificate,
    })
}
