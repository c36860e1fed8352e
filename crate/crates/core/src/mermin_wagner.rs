//! Correlation decay in XY-symmetric models by complex rotations.
//!
//! For couplings with `J^1 = J^2` the two-point function obeys
//! `|⟨S^i_0 S^i_x⟩| ≤ S² e^{-ξ(x)}` where
//! `ξ(x) = sup_{φ_x = 0} [φ_0 - 2βS² Σ_{y,z} |J^1_yz| (cosh(φ_y - φ_z) - 1)]`
//! and the sum runs over ordered pairs.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::gibbs::{diagonalize, TraceConvention};
use crate::graph::Graph;
use crate::interaction::{build_xyz, Couplings};
use crate::operators::{product_operator, spin_matrices, DenseOperator, SpinValue, C64};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Slack allowed in the correlation bound.
pub const BOUND_TOL: f64 = -1e-9;
const DISCONNECTED_TOL: f64 = 1e-12;

/// Field `φ` on the vertices, pinned to zero at one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationProfile {
    values: Vec<f64>,
    pinned: usize,
}

impl RotationProfile {
    pub fn new(mut values: Vec<f64>, pinned: usize) -> Result<Self> {
        if pinned >= values.len() {
            return Err(Error::UnknownVertex(pinned));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("profile", "values must be finite"));
        }
        values[pinned] = 0.0;
        Ok(Self { values, pinned })
    }

    pub fn zero(n: usize, pinned: usize) -> Result<Self> {
        Self::new(vec![0.0; n], pinned)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, y: usize) -> f64 {
        self.values[y]
    }

    pub fn pinned(&self) -> usize {
        self.pinned
    }
}

fn penalty_prefactor(beta: f64, spin: SpinValue) -> f64 {
    // 2βS² per ordered pair, so 4βS² per edge
    4.0 * beta * spin.s() * spin.s()
}

fn check_graph_couplings(graph: &Graph, couplings: &Couplings) -> Result<()> {
    for ((x, y), _) in couplings.iter() {
        if !graph.has_edge(x, y) {
            return Err(Error::Hypothesis(format!(
                "coupling on ({x}, {y}) is not a nearest-neighbour edge"
            )));
        }
    }
    Ok(())
}

fn check_xy(couplings: &Couplings) -> Result<()> {
    for ((x, y), [j1, j2, _]) in couplings.iter() {
        if j1 != j2 {
            return Err(Error::Hypothesis(format!(
                "J1 = {j1} differs from J2 = {j2} on ({x}, {y})"
            )));
        }
    }
    Ok(())
}

/// `φ_0 - 2βS² Σ_{y,z} |J^1_yz| (cosh(φ_y - φ_z) - 1)`, ordered pairs, with
/// `0` the graph's origin.
pub fn xi_objective(
    graph: &Graph,
    couplings: &Couplings,
    profile: &RotationProfile,
    beta: f64,
    spin: SpinValue,
) -> f64 {
    let k = penalty_prefactor(beta, spin);
    let p = profile.values();
    let penalty: f64 = couplings
        .iter()
        .map(|((y, z), j)| j[0].abs() * ((p[y] - p[z]).cosh() - 1.0))
        .sum();
    p[graph.origin()] - k * penalty
}

/// Gradient and penalty Hessian of the objective, restricted to `free`.
fn derivatives(
    couplings: &Couplings,
    phi: &[f64],
    free: &[Option<usize>],
    n_free: usize,
    origin: usize,
    k: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut grad = DVector::zeros(n_free);
    let mut hess = DMatrix::zeros(n_free, n_free);
    if let Some(i) = free[origin] {
        grad[i] = 1.0;
    }
    for ((y, z), j) in couplings.iter() {
        let w = k * j[0].abs();
        if w == 0.0 {
            continue;
        }
        let d = phi[y] - phi[z];
        let (s, c) = (w * d.sinh(), w * d.cosh());
        if let Some(i) = free[y] {
            grad[i] -= s;
            hess[(i, i)] += c;
        }
        if let Some(i) = free[z] {
            grad[i] += s;
            hess[(i, i)] += c;
        }
        if let (Some(a), Some(b)) = (free[y], free[z]) {
            hess[(a, b)] -= c;
            hess[(b, a)] -= c;
        }
    }
    (grad, hess)
}

/// Vertices reachable from `start` along edges with `J^1 ≠ 0`.
fn coupled_component(graph: &Graph, couplings: &Couplings, start: usize) -> Vec<bool> {
    let mut seen = vec![false; graph.n_vertices()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in graph.neighbors(v) {
            if !seen[w] && couplings.get(v, w)[0] != 0.0 {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// `K = max_ℓ #{edges between shells ℓ and ℓ+1} / (ℓ+1)`, shells taken by
/// graph distance from the origin. Zero for an isolated origin.
pub fn shell_constant(graph: &Graph) -> f64 {
    let dist = graph.distances_from(graph.origin());
    let mut counts: Vec<usize> = Vec::new();
    for &(x, y) in graph.edges() {
        if let (Some(a), Some(b)) = (dist[x], dist[y]) {
            if a.abs_diff(b) == 1 {
                let l = a.min(b);
                if counts.len() <= l {
                    counts.resize(l + 1, 0);
                }
                counts[l] += 1;
            }
        }
    }
    counts
        .iter()
        .enumerate()
        .map(|(l, &c)| c as f64 / (l + 1) as f64)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaBound {
    /// Objective evaluated on the logarithmic profile: a lower bound on `ξ`.
    pub bound: f64,
    /// `c = (8βS²JK)^{-1}`.
    pub c: f64,
    pub shell_constant: f64,
    /// `J = max |J^i_xy|`.
    pub j_max: f64,
    /// `c log(d+1) - 4βS²JK Σ_{ℓ<d} (cosh(c log((ℓ+2)/(ℓ+1))) - 1)(ℓ+1)`.
    pub shell_estimate: f64,
    /// Prefactor `(16βJS²K)^{-1}` of the asymptotic `log(d+1)` growth.
    pub asymptotic_rate: f64,
    /// `rate · log(d+1) - bound`, the constant needed at this distance.
    pub empirical_constant: f64,
    pub profile: RotationProfile,
}

/// Logarithmic test profile
/// `φ_y = c log((d(0,x)+1)/(d(0,y)+1))` for `d(0,y) ≤ d(0,x)`, else `0`.
pub fn lemma_bound(
    graph: &Graph,
    couplings: &Couplings,
    beta: f64,
    spin: SpinValue,
    x: usize,
) -> Result<LemmaBound> {
    if x >= graph.n_vertices() {
        return Err(Error::UnknownVertex(x));
    }
    check_graph_couplings(graph, couplings)?;
    let j_max = couplings.max_abs();
    let k_shell = shell_constant(graph);
    let s2 = spin.s() * spin.s();
    let dist = graph.distances_from(graph.origin());
    let n = graph.n_vertices();
    let d = match dist[x] {
        Some(d) => d,
        None => {
            return Err(Error::Hypothesis(format!(
                "vertex {x} is not connected to the origin"
            )))
        }
    };
    if d == 0 {
        let profile = RotationProfile::zero(n, x)?;
        return Ok(LemmaBound {
            bound: 0.0,
            c: 0.0,
            shell_constant: k_shell,
            j_max,
            shell_estimate: 0.0,
            asymptotic_rate: 0.0,
            empirical_constant: 0.0,
            profile,
        });
    }
    if !(beta > 0.0 && j_max > 0.0 && k_shell > 0.0) {
        return Err(Error::Hypothesis("beta, J and K must be positive".into()));
    }
    let c = 1.0 / (8.0 * beta * s2 * j_max * k_shell);
    let values: Vec<f64> = dist
        .iter()
        .map(|dy| match dy {
            Some(dy) if *dy <= d => c * (((d + 1) as f64) / ((dy + 1) as f64)).ln(),
            _ => 0.0,
        })
        .collect();
    let profile = RotationProfile::new(values, x)?;
    let bound = xi_objective(graph, couplings, &profile, beta, spin);
    let shell_sum: f64 = (0..d)
        .map(|l| ((c * ((l + 2) as f64 / (l + 1) as f64).ln()).cosh() - 1.0) * (l + 1) as f64)
        .sum();
    let shell_estimate = c * ((d + 1) as f64).ln() - 4.0 * beta * s2 * j_max * k_shell * shell_sum;
    let asymptotic_rate = c / 2.0;
    Ok(LemmaBound {
        bound,
        c,
        shell_constant: k_shell,
        j_max,
        shell_estimate,
        asymptotic_rate,
        empirical_constant: asymptotic_rate * ((d + 1) as f64).ln() - bound,
        profile,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct XiResult {
    /// `+∞` when the origin and `x` are not joined by edges with `J^1 ≠ 0`.
    pub xi: f64,
    pub disconnected: bool,
    pub optimizer: RotationProfile,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Sup norm of the objective's gradient at the optimizer.
    pub gradient_norm: f64,
    /// Smallest eigenvalue of the penalty Hessian at the optimizer.
    pub penalty_hessian_min_eigenvalue: f64,
    pub lemma: Option<LemmaBound>,
    pub shell_constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for XiOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Maximizes the concave objective over profiles pinned at `x` by damped
/// Newton with step halving, starting from the logarithmic profile.
pub fn xi_optimize(
    graph: &Graph,
    couplings: &Couplings,
    beta: f64,
    spin: SpinValue,
    x: usize,
    options: &XiOptions,
) -> Result<XiResult> {
    let n = graph.n_vertices();
    if x >= n {
        return Err(Error::UnknownVertex(x));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(invalid(
            "beta",
            format!("must be finite and >= 0, got {beta}"),
        ));
    }
    check_graph_couplings(graph, couplings)?;
    let origin = graph.origin();
    let k_shell = shell_constant(graph);
    let lemma = lemma_bound(graph, couplings, beta, spin, x).ok();
    let k = penalty_prefactor(beta, spin);

    let component = coupled_component(graph, couplings, x);
    let finish = |xi: f64,
                  disconnected: bool,
                  profile: RotationProfile,
                  trace: Vec<f64>,
                  it: usize,
                  g: f64,
                  h: f64| XiResult {
        xi,
        disconnected,
        optimizer: profile,
        objective_trace: trace,
        iterations: it,
        gradient_norm: g,
        penalty_hessian_min_eigenvalue: h,
        lemma: lemma.clone(),
        shell_constant: k_shell,
    };
    if x == origin {
        return Ok(finish(
            0.0,
            false,
            RotationProfile::zero(n, x)?,
            vec![0.0],
            0,
            0.0,
            0.0,
        ));
    }
    if !component[origin] || k == 0.0 {
        return Ok(finish(
            f64::INFINITY,
            true,
            RotationProfile::zero(n, x)?,
            Vec::new(),
            0,
            0.0,
            0.0,
        ));
    }

    let mut free = vec![None; n];
    let mut n_free = 0;
    for v in 0..n {
        if v != x && component[v] {
            free[v] = Some(n_free);
            n_free += 1;
        }
    }
    let objective = |p: &[f64]| -> f64 {
        let pen: f64 = couplings
            .iter()
            .map(|((y, z), j)| j[0].abs() * ((p[y] - p[z]).cosh() - 1.0))
            .sum();
        p[origin] - k * pen
    };

    let mut phi = vec![0.0; n];
    if let Some(l) = &lemma {
        let start: Vec<f64> = (0..n)
            .map(|v| {
                if component[v] {
                    l.profile.value(v)
                } else {
                    0.0
                }
            })
            .collect();
        if objective(&start).is_finite() && objective(&start) > objective(&phi) {
            phi = start;
        }
    }
    let mut f = objective(&phi);
    let mut trace = vec![f];
    let mut iterations = 0;
    loop {
        let (grad, hess) = derivatives(couplings, &phi, &free, n_free, origin, k);
        let gnorm = grad.amax();
        if gnorm <= options.tol {
            let min_eig = hess.clone().symmetric_eigenvalues().min();
            return Ok(finish(
                f,
                false,
                RotationProfile::new(phi, x)?,
                trace,
                iterations,
                gnorm,
                min_eig,
            ));
        }
        if iterations >= options.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: gnorm,
            });
        }
        iterations += 1;
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Hypothesis("penalty Hessian is not positive definite".into()))?
            .solve(&grad);
        let mut t = 1.0;
        let mut accepted = false;
        // Below the roundoff level of f a line search cannot discriminate;
        // the full Newton step is taken instead.
        let predicted = grad.dot(&step);
        let searches = if predicted <= 1e-12 * f.abs().max(1.0) {
            0
        } else {
            60
        };
        for _ in 0..searches {
            let mut trial = phi.clone();
            for v in 0..n {
                if let Some(i) = free[v] {
                    trial[v] += t * step[i];
                }
            }
            let ft = objective(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * t * grad.dot(&step) {
                phi = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            let mut trial = phi.clone();
            for v in 0..n {
                if let Some(i) = free[v] {
                    trial[v] += step[i];
                }
            }
            let ft = objective(&trial);
            if !(ft.is_finite() && ft >= f - 1e-14 * f.abs().max(1.0)) {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: gnorm,
                });
            }
            phi = trial;
            f = ft;
        }
        trace.push(f);
    }
}

#[derive(Clone, Debug)]
pub struct RotationSplit {
    /// `-½ Σ_{y,z} J^1_yz (cosh(φ_y - φ_z) - 1) S^+_y S^-_z`.
    pub b: DenseOperator,
    /// `-½ Σ_{y,z} J^1_yz sinh(φ_y - φ_z) S^+_y S^-_z`.
    pub c: DenseOperator,
    /// `max |A H A^{-1} - (H + B + C)|` with `A = Π e^{φ_y S^3_y}`.
    pub conjugation_residual: f64,
    /// `max |B - B*|`.
    pub b_hermiticity: f64,
    /// `max |C + C*|`.
    pub c_antihermiticity: f64,
    pub b_norm: f64,
    /// `S² Σ_{y,z} |J^1_yz| (cosh(φ_y - φ_z) - 1)`.
    pub b_norm_bound: f64,
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Splits the rotated Hamiltonian `A H A^{-1} = H + B + C` into its
/// hermitian and anti-hermitian corrections and checks the identity.
pub fn rotation_split(
    graph: &Graph,
    couplings: &Couplings,
    profile: &RotationProfile,
    spin: SpinValue,
) -> Result<RotationSplit> {
    check_xy(couplings)?;
    check_graph_couplings(graph, couplings)?;
    let n = graph.n_vertices();
    if profile.values().len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: profile.values().len(),
        });
    }
    let sm = spin_matrices(spin);
    let vol = graph.vertex_set();
    let d = spin.dim();
    let p = profile.values();
    let h = build_xyz(graph, spin, couplings)?.hamiltonian()?;
    let dim = h.dim();
    let mut b = DMatrix::<C64>::zeros(dim, dim);
    let mut c = DMatrix::<C64>::zeros(dim, dim);
    let mut b_norm_bound = 0.0;
    for ((y, z), j) in couplings.iter() {
        let j1 = j[0];
        if j1 == 0.0 {
            continue;
        }
        for (u, v) in [(y, z), (z, y)] {
            let delta = p[u] - p[v];
            let hop = product_operator(&[(u, &sm.plus), (v, &sm.minus)], &vol, d)?;
            b -= hop.matrix() * C64::from(0.5 * j1 * (delta.cosh() - 1.0));
            c -= hop.matrix() * C64::from(0.5 * j1 * delta.sinh());
            b_norm_bound += spin.s() * spin.s() * j1.abs() * (delta.cosh() - 1.0);
        }
    }

    // A is diagonal with entries exp(Σ_y φ_y m_y); m_y runs -S..S per digit.
    let s = spin.s();
    let weights: Vec<f64> = (0..dim)
        .map(|idx| {
            let mut rest = idx;
            let mut e = 0.0;
            for y in (0..n).rev() {
                let digit = rest % d;
                rest /= d;
                e += p[y] * (-s + digit as f64);
            }
            e
        })
        .collect();
    let mut rotated = h.matrix().clone();
    for j in 0..dim {
        for i in 0..dim {
            rotated[(i, j)] *= (weights[i] - weights[j]).exp();
        }
    }
    let residual = max_abs(&(rotated - (h.matrix() + &b + &c)));
    let b_hermiticity = max_abs(&(&b - b.adjoint()));
    let c_antihermiticity = max_abs(&(&c + c.adjoint()));
    let b = DenseOperator::from_matrix(b)?;
    let b_norm = b.operator_norm();
    Ok(RotationSplit {
        b,
        c: DenseOperator::from_matrix(c)?,
        conjugation_residual: residual,
        b_hermiticity,
        c_antihermiticity,
        b_norm,
        b_norm_bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MwReport {
    pub x: usize,
    pub component: usize,
    pub distance: Option<usize>,
    /// `|⟨S^i_0 S^i_x⟩|`.
    pub correlation: f64,
    pub xi: f64,
    /// `S² e^{-ξ}`.
    pub rhs: f64,
    pub margin: f64,
    /// `⟨S^+_0 S^-_x⟩`, which equals `2⟨S^1_0 S^1_x⟩`.
    pub raising_lowering: f64,
    pub raising_lowering_defect: f64,
    pub lemma_bound: Option<f64>,
    pub disconnected: bool,
    pub holds: bool,
}

/// Exact `|⟨S^i_0 S^i_x⟩|` against `S² e^{-ξ(x)}` for `i ∈ {1, 2}`.
pub fn mw_verify(
    graph: &Graph,
    couplings: &Couplings,
    beta: f64,
    spin: SpinValue,
    x: usize,
    component: usize,
    options: &XiOptions,
) -> Result<MwReport> {
    let mut out = mw_verify_many(graph, couplings, beta, spin, &[(x, component)], options)?;
    Ok(out.remove(0))
}

/// [`mw_verify`] for several `(x, component)` pairs sharing one
/// diagonalization; reports come back in input order.
pub fn mw_verify_many(
    graph: &Graph,
    couplings: &Couplings,
    beta: f64,
    spin: SpinValue,
    jobs: &[(usize, usize)],
    options: &XiOptions,
) -> Result<Vec<MwReport>> {
    for &(x, component) in jobs {
        if component != 1 && component != 2 {
            return Err(invalid(
                "component",
                format!("must be 1 or 2, got {component}"),
            ));
        }
        if x >= graph.n_vertices() {
            return Err(Error::UnknownVertex(x));
        }
    }
    check_xy(couplings)?;
    let phi = build_xyz(graph, spin, couplings)?;
    let state = diagonalize(&phi.hamiltonian()?, beta, TraceConvention::Plain)?;
    let sm = spin_matrices(spin);
    let vol = graph.vertex_set();
    let o = graph.origin();
    let s2 = spin.s() * spin.s();
    let pair = |a: &DenseOperator, b: &DenseOperator, x: usize| -> Result<C64> {
        state.expectation(&product_operator(&[(o, a), (x, b)], &vol, spin.dim())?)
    };
    let mut xi_cache: Vec<Option<XiResult>> = vec![None; graph.n_vertices()];
    let mut out = Vec::with_capacity(jobs.len());
    for &(x, component) in jobs {
        if xi_cache[x].is_none() {
            xi_cache[x] = Some(xi_optimize(graph, couplings, beta, spin, x, options)?);
        }
        let xi = xi_cache[x].as_ref().expect("just filled");
        let op = sm.component(component);
        let corr = pair(op, op, x)?.norm();
        let s1s1 = pair(&sm.s1, &sm.s1, x)?.re;
        let pm = pair(&sm.plus, &sm.minus, x)?.re;
        let rhs = s2 * (-xi.xi).exp();
        let margin = rhs - corr;
        let holds = if xi.disconnected {
            corr <= DISCONNECTED_TOL
        } else {
            margin >= BOUND_TOL
        };
        out.push(MwReport {
            x,
            component,
            distance: graph.distance(o, x),
            correlation: corr,
            xi: xi.xi,
            rhs,
            margin,
            raising_lowering: pm,
            raising_lowering_defect: pm - 2.0 * s1s1,
            lemma_bound: xi.lemma.as_ref().map(|l| l.bound),
            disconnected: xi.disconnected,
            holds,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xy(graph: &Graph, j: f64) -> Couplings {
        Couplings::uniform(graph, [j, j, 0.0])
    }

    /// Maximizer of `t - a(cosh t - 1)`: `sinh t = 1/a`.
    fn single_edge_closed_form(a: f64) -> f64 {
        let t = (1.0 / a).asinh();
        t - a * (t.cosh() - 1.0)
    }

    #[test]
    fn zero_profile_has_zero_objective() {
        let g = Graph::chain(4).unwrap();
        let p = RotationProfile::zero(4, 3).unwrap();
        assert_eq!(
            xi_objective(&g, &xy(&g, 1.0), &p, 1.0, SpinValue::HALF),
            0.0
        );
    }

    #[test]
    fn pinning_is_enforced() {
        let p = RotationProfile::new(vec![1.0, 2.0], 1).unwrap();
        assert_eq!(p.values(), &[1.0, 0.0]);
        assert!(RotationProfile::new(vec![1.0], 3).is_err());
    }

    #[test]
    fn origin_gives_zero() {
        let g = Graph::chain(3).unwrap();
        let r = xi_optimize(
            &g,
            &xy(&g, 1.0),
            1.0,
            SpinValue::HALF,
            0,
            &XiOptions::default(),
        )
        .unwrap();
        assert_eq!(r.xi, 0.0);
    }

    #[test]
    fn single_edge_matches_closed_form() {
        let g = Graph::chain(2).unwrap();
        for (beta, spin, j) in [
            (1.0, SpinValue::HALF, 1.0),
            (0.3, SpinValue::ONE, 0.7),
            (2.0, SpinValue::HALF, 0.25),
        ] {
            let r = xi_optimize(&g, &xy(&g, j), beta, spin, 1, &XiOptions::default()).unwrap();
            let a = 4.0 * beta * spin.s() * spin.s() * j;
            assert!((r.xi - single_edge_closed_form(a)).abs() <= 1e-9);
            assert!((r.optimizer.value(0) - (1.0 / a).asinh()).abs() <= 1e-9);
        }
    }

    #[test]
    fn path_stationarity() {
        let g = Graph::chain(3).unwrap();
        let c = xy(&g, 1.0);
        let r = xi_optimize(&g, &c, 1.0, SpinValue::HALF, 2, &XiOptions::default()).unwrap();
        let p = r.optimizer.values();
        let s2 = 0.25;
        for y in 0..2 {
            let lhs: f64 = g.neighbors(y).iter().map(|&z| (p[y] - p[z]).sinh()).sum();
            let rhs = if y == 0 { 1.0 / (4.0 * s2) } else { 0.0 };
            assert!((lhs - rhs).abs() <= 1e-9, "vertex {y}: {lhs} vs {rhs}");
        }
        assert!(r.penalty_hessian_min_eigenvalue >= 0.0);
        assert!(r.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }

    #[test]
    fn disconnected_vertex_gives_infinity() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let r = xi_optimize(
            &g,
            &xy(&g, 1.0),
            1.0,
            SpinValue::HALF,
            3,
            &XiOptions::default(),
        )
        .unwrap();
        assert!(r.disconnected && r.xi == f64::INFINITY);
        let m = mw_verify(
            &g,
            &xy(&g, 1.0),
            1.0,
            SpinValue::HALF,
            3,
            1,
            &XiOptions::default(),
        )
        .unwrap();
        assert!(m.holds && m.correlation <= 1e-12);
    }

    #[test]
    fn shell_constants() {
        assert_eq!(shell_constant(&Graph::chain(6).unwrap()), 1.0);
        assert_eq!(shell_constant(&Graph::star(7).unwrap()), 7.0);
        let grid = Graph::grid(5, 5).unwrap().with_origin(12).unwrap();
        // brute-force census
        let dist = grid.distances_from(12);
        let mut best: f64 = 0.0;
        for l in 0..8 {
            let count = (0..25)
                .flat_map(|a| (0..25).map(move |b| (a, b)))
                .filter(|&(a, b)| {
                    grid.has_edge(a, b) && dist[a] == Some(l) && dist[b] == Some(l + 1)
                })
                .count();
            best = best.max(count as f64 / (l + 1) as f64);
        }
        assert_eq!(shell_constant(&grid), best);
        assert_eq!(best, 6.0);
    }

    #[test]
    fn lemma_constants() {
        let g = Graph::chain(5).unwrap();
        let l = lemma_bound(&g, &xy(&g, 1.0), 1.0, SpinValue::HALF, 4).unwrap();
        assert_eq!(l.shell_constant, 1.0);
        assert_eq!(l.c, 0.5);
        assert!(l.bound >= l.shell_estimate - 1e-12);
        let zero = lemma_bound(&g, &xy(&g, 1.0), 1.0, SpinValue::HALF, 0).unwrap();
        assert_eq!(zero.bound, 0.0);
        assert!(zero.profile.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn foreign_coupling_is_rejected() {
        let g = Graph::chain(3).unwrap();
        let c = xy(&g, 1.0).with(0, 2, [1.0, 1.0, 0.0]);
        assert!(matches!(
            lemma_bound(&g, &c, 1.0, SpinValue::HALF, 2),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn optimizer_dominates_log_profile() {
        let graphs = [
            Graph::chain(6).unwrap(),
            Graph::ring(7).unwrap(),
            Graph::grid(4, 4).unwrap(),
            Graph::grid(5, 5).unwrap().with_origin(12).unwrap(),
            Graph::star(5).unwrap(),
        ];
        for g in &graphs {
            for beta in [0.3, 1.0, 3.0] {
                for x in 0..g.n_vertices() {
                    let r = xi_optimize(
                        g,
                        &xy(g, 1.0),
                        beta,
                        SpinValue::HALF,
                        x,
                        &XiOptions::default(),
                    )
                    .unwrap();
                    let l = r.lemma.as_ref().unwrap();
                    assert!(r.xi >= l.bound - 1e-9, "{x}: {} < {}", r.xi, l.bound);
                    assert!(r.gradient_norm <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn xi_decreases_with_beta() {
        let g = Graph::grid(3, 3).unwrap();
        let c = xy(&g, 1.0);
        let xs: Vec<f64> = [0.2, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&b| {
                xi_optimize(&g, &c, b, SpinValue::HALF, 8, &XiOptions::default())
                    .unwrap()
                    .xi
            })
            .collect();
        assert!(xs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{xs:?}");
    }

    #[test]
    fn constant_profile_has_trivial_split() {
        let g = Graph::chain(3).unwrap();
        let p = RotationProfile::new(vec![0.0, 0.0, 0.0], 0).unwrap();
        let r = rotation_split(&g, &xy(&g, 1.0), &p, SpinValue::HALF).unwrap();
        assert_eq!(r.b.max_abs(), 0.0);
        assert_eq!(r.c.max_abs(), 0.0);
    }

    #[test]
    fn single_edge_b_norm() {
        let g = Graph::chain(2).unwrap();
        for t in [0.1, 0.7, 2.0] {
            let p = RotationProfile::new(vec![t, 0.0], 1).unwrap();
            let r = rotation_split(&g, &xy(&g, 1.0), &p, SpinValue::HALF).unwrap();
            let stated = 0.25 * 2.0 * (t.cosh() - 1.0);
            assert!((r.b_norm_bound - stated).abs() < 1e-14);
            assert!(r.b_norm <= stated + 1e-12);
        }
    }

    #[test]
    fn rotation_identity_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for spin in [SpinValue::HALF, SpinValue::ONE] {
            let g = Graph::ring(3).unwrap();
            for _ in 0..10 {
                let mut c = Couplings::new();
                for &(x, y) in g.edges() {
                    let j: f64 = rng.random_range(-1.0..1.0);
                    c.set(x, y, [j, j, rng.random_range(-1.0..1.0)]);
                }
                let p =
                    RotationProfile::new((0..3).map(|_| rng.random_range(-1.5..1.5)).collect(), 0)
                        .unwrap();
                let r = rotation_split(&g, &c, &p, spin).unwrap();
                assert!(r.conjugation_residual <= 1e-9);
                assert!(r.b_hermiticity <= 1e-12 && r.c_antihermiticity <= 1e-12);
                assert!(r.b_norm <= r.b_norm_bound + 1e-12);
            }
        }
    }

    #[test]
    fn two_site_xy_bound() {
        let g = Graph::chain(2).unwrap();
        let r = mw_verify(
            &g,
            &xy(&g, 1.0),
            1.0,
            SpinValue::HALF,
            1,
            1,
            &XiOptions::default(),
        )
        .unwrap();
        assert!(r.holds && r.margin > 0.0);
        assert!(r.raising_lowering_defect.abs() <= 1e-12 && r.raising_lowering >= 0.0);
        // ⟨S1 S1⟩ = tanh(β/2)/4 for the XY pair with eigenvalues ∓1/2, 0, 0
        let exact = 0.25 * (0.5f64).sinh() / (1.0 + (0.5f64).cosh());
        assert!(
            (r.correlation - exact).abs() < 1e-14,
            "{} vs {exact}",
            r.correlation
        );
    }

    #[test]
    fn same_site_saturates() {
        let g = Graph::chain(2).unwrap();
        let r = mw_verify(
            &g,
            &xy(&g, 1.0),
            1.0,
            SpinValue::HALF,
            0,
            1,
            &XiOptions::default(),
        )
        .unwrap();
        assert!((r.correlation - 0.25).abs() < 1e-14);
        assert!(r.margin.abs() < 1e-14 && r.holds);
    }

    #[test]
    fn non_xy_couplings_are_rejected() {
        let g = Graph::chain(2).unwrap();
        let c = Couplings::uniform(&g, [1.0, 0.5, 0.0]);
        assert!(matches!(
            mw_verify(&g, &c, 1.0, SpinValue::HALF, 1, 1, &XiOptions::default()),
            Err(Error::Hypothesis(_))
        ));
    }
}
