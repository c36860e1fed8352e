//! The experiment drivers. Each turns a validated configuration into a
//! [`ResultSet`].

use lattice_kms::clusters::{self, DecayFunction, Truncation};
use lattice_kms::commutator_decomposition::decompose;
use lattice_kms::gibbs::TraceConvention;
use lattice_kms::graph::Graph;
use lattice_kms::interaction::{uniqueness_certificate, Couplings};
use lattice_kms::kms_fixed_point::{FixedPointOptions, KmsProblem};
use lattice_kms::mermin_wagner::{self, XiOptions};
use lattice_kms::operators::{product_operator, random_traceless_hermitian, spin_matrices};
use lattice_kms::spin_inequalities::{self, CouplingSweep};
use lattice_kms::{DenseOperator, Interaction, SiteSet, SpinValue};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{Cell, ResultSet, Table};

const DEFAULT_DIMS: std::ops::RangeInclusive<usize> = 2..=10;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    match cfg.experiment {
        Experiment::Decompose => run_decompose(cfg),
        Experiment::Uniqueness => run_uniqueness(cfg),
        Experiment::LogzSeries => run_logz(cfg),
        Experiment::ExpectationSeries => run_expectation(cfg),
        Experiment::DecayBound => run_decay(cfg),
        Experiment::InequalitySweep => run_inequality(cfg),
        Experiment::DuhamelCheck => run_duhamel(cfg),
        Experiment::KmsFixedPoint => run_kms(cfg),
        Experiment::MwBound => run_mw_bound(cfg),
        Experiment::MwVerify => run_mw_verify(cfg),
    }
}

fn truncation(cfg: &ExperimentConfig) -> Result<Truncation, CliError> {
    let t = &cfg.truncation;
    Ok(Truncation::new(t.max_n, t.max_k, t.max_support)?)
}

fn max_or_nan(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NAN, f64::max)
}

fn min_or_nan(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NAN, f64::min)
}

fn run_decompose(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let dims: Vec<usize> = cfg
        .params
        .dims
        .clone()
        .unwrap_or_else(|| DEFAULT_DIMS.collect());
    let samples = cfg.params.samples.unwrap_or(500);
    // one independent stream per dimension keeps the output thread-count free
    let per_dim: Vec<Vec<[f64; 3]>> = dims
        .par_iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            (0..samples)
                .map(|_| {
                    let a = random_traceless_hermitian(n, &mut rng);
                    let d = decompose(&a)?;
                    let residual = (&d.reconstruct(n) - &a).hs_norm();
                    let scale = a.hs_norm().max(f64::MIN_POSITIVE);
                    Ok([residual / scale, d.hs_budget, d.budget_bound()])
                })
                .collect::<Result<Vec<_>, lattice_kms::Error>>()
        })
        .collect::<Result<_, _>>()?;

    let mut out = ResultSet {
        table: Table::new(&["n", "sample", "relative_residual", "budget", "bound"]),
        ..ResultSet::default()
    };
    let mut curve = Table::new(&["n", "max_relative_residual", "max_budget_ratio"]);
    let (mut worst_res, mut worst_ratio) = (0.0f64, 0.0f64);
    for (&n, rows) in dims.iter().zip(&per_dim) {
        let (mut r_n, mut q_n) = (0.0f64, 0.0f64);
        for (s, [res, budget, bound]) in rows.iter().enumerate() {
            out.table.push(vec![
                n.into(),
                s.into(),
                (*res).into(),
                (*budget).into(),
                (*bound).into(),
            ]);
            r_n = r_n.max(*res);
            if *bound > 0.0 {
                q_n = q_n.max(budget / bound);
            }
        }
        curve.push(vec![n.into(), r_n.into(), q_n.into()]);
        worst_res = worst_res.max(r_n);
        worst_ratio = worst_ratio.max(q_n);
    }
    out.put("max_relative_residual", worst_res);
    out.put("max_budget_ratio", worst_ratio);
    out.put("count", dims.len() * samples);
    out.curve = Some(curve);
    Ok(out)
}

fn run_uniqueness(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let phi = cfg.model()?.build_interaction()?;
    let betas = match &cfg.params.betas {
        Some(b) => b.clone(),
        None => vec![cfg.beta()?],
    };
    let mut out = ResultSet {
        table: Table::new(&[
            "beta",
            "s_witness",
            "norm_at_witness",
            "contraction_bound",
            "valid",
            "simple_condition",
            "simple_threshold_beta",
        ]),
        ..ResultSet::default()
    };
    let mut curve = Table::new(&["beta", "contraction_bound"]);
    let mut all_valid = true;
    for beta in betas {
        let c = uniqueness_certificate(&phi, beta)?;
        all_valid &= c.valid;
        out.table.push(vec![
            beta.into(),
            c.s_witness.into(),
            c.norm_at_witness.into(),
            c.contraction_bound.into(),
            c.valid.into(),
            c.simple_condition.into(),
            c.simple_threshold_beta.into(),
        ]);
        curve.push(vec![beta.into(), c.contraction_bound.into()]);
    }
    out.put("all_valid", all_valid);
    out.curve = Some(curve);
    Ok(out)
}

fn run_logz(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let phi = cfg.model()?.build_interaction()?;
    let beta = cfg.beta()?;
    let trunc = truncation(cfg)?;
    let s = clusters::log_z_series(&phi, beta, &trunc)?;
    let mut out = ResultSet::default();
    out.put("series", s.value);
    out.put("exact", s.exact);
    out.put("abs_error", s.abs_error);
    out.put("per_order", s.per_order.clone());
    out.put("cluster_count", s.cluster_count);
    out.put("tuple_count", s.tuple_count);
    out.table = Table::new(&["order", "contribution"]);
    for (m, c) in s.per_order.iter().enumerate() {
        out.table.push(vec![m.into(), (*c).into()]);
    }
    let mut curve = Table::new(&["max_n", "series", "abs_error"]);
    let mut partial = 0.0;
    for (m, c) in s.per_order.iter().enumerate() {
        partial += c;
        if m == 0 {
            continue;
        }
        let err = s.exact.map(|e| (partial - e).abs());
        curve.push(vec![m.into(), partial.into(), err.into()]);
    }
    out.curve = Some(curve);
    Ok(out)
}

/// `∏ S^{j}_x / S` over distinct sorted sites.
fn local_observable(
    spin: SpinValue,
    sites: &[usize],
    components: &[usize],
) -> Result<(DenseOperator, SiteSet), CliError> {
    if sites.len() != components.len() {
        return Err(CliError::Validation {
            field: Some("params.components".into()),
            message: "need one component per site".into(),
        });
    }
    let support = SiteSet::new(sites.iter().copied()).map_err(|e| CliError::Validation {
        field: Some("params.sites".into()),
        message: e.to_string(),
    })?;
    let sm = spin_matrices(spin);
    let scaled: Vec<DenseOperator> = components
        .iter()
        .map(|&j| sm.component(j).scale_real(1.0 / spin.s()))
        .collect();
    let mut factors: Vec<(usize, &DenseOperator)> =
        sites.iter().copied().zip(scaled.iter()).collect();
    factors.sort_by_key(|(x, _)| *x);
    let op = product_operator(&factors, &support, spin.dim())?;
    Ok((op, support))
}

fn sites_and_components(
    cfg: &ExperimentConfig,
    default_sites: Vec<usize>,
    default_component: usize,
) -> (Vec<usize>, Vec<usize>) {
    let sites = cfg.params.sites.clone().unwrap_or(default_sites);
    let components = cfg
        .params
        .components
        .clone()
        .unwrap_or_else(|| vec![default_component; sites.len()]);
    (sites, components)
}

fn run_expectation(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let model = cfg.model()?;
    let graph = model.build_graph()?;
    let spin = model.spin()?;
    let phi = model.build_interaction()?;
    let beta = cfg.beta()?;
    let (sites, comps) = sites_and_components(cfg, vec![graph.origin()], 3);
    let (op, support) = local_observable(spin, &sites, &comps)?;

    let mut out = ResultSet::default();
    let mut curve = Table::new(&["max_n", "series", "abs_error"]);
    let t = &cfg.truncation;
    let mut last = None;
    for m in 1..=t.max_n {
        let trunc = Truncation::new(m, t.max_k, t.max_support)?;
        let s = clusters::expectation_series(&op, &support, &phi, beta, &trunc)?;
        curve.push(vec![m.into(), s.value.into(), s.abs_error.into()]);
        last = Some(s);
    }
    let s = last.expect("max_n is positive");
    out.put("value", s.value);
    out.put("exact", s.exact);
    out.put("abs_error", s.abs_error);
    out.put("imaginary", s.imaginary);
    out.put("anchored_count", s.anchored_count);
    out.table = curve.clone();
    out.curve = Some(curve);
    Ok(out)
}

fn run_decay(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let model = cfg.model()?;
    let graph = model.build_graph()?;
    let spin = model.spin()?;
    let phi = model.build_interaction()?;
    let beta = cfg.beta()?;
    let last = graph.n_vertices() - 1;
    let (sites, comps) = sites_and_components(cfg, vec![graph.origin(), last], 3);
    if sites.len() != 2 || comps.len() != 2 {
        return Err(CliError::Validation {
            field: Some("params.sites".into()),
            message: "decay-bound takes exactly two sites and two components".into(),
        });
    }
    let a = cfg.params.a.unwrap_or(0.1);
    let b = DecayFunction::Constant(cfg.params.b.unwrap_or(1.0));
    let (op_a, sup_a) = local_observable(spin, &sites[..1], &comps[..1])?;

    let mut out = ResultSet {
        table: Table::new(&["y", "distance", "mu", "bound", "measured", "holds"]),
        ..ResultSet::default()
    };
    let mut points = Vec::new();
    for y in 0..graph.n_vertices() {
        if y == sites[0] {
            continue;
        }
        let (op_b, sup_b) = local_observable(spin, &[y], &comps[1..])?;
        let r = clusters::decay_bound(&op_a, &sup_a, &op_b, &sup_b, &phi, beta, a, &b)?;
        let d = graph.distance(sites[0], y);
        out.table.push(vec![
            y.into(),
            d.into(),
            r.mu.into(),
            r.bound.into(),
            r.measured.into(),
            r.holds.into(),
        ]);
        points.push((r.mu, r.bound, r.measured));
        if y == sites[1] {
            out.put("bound", r.bound);
            out.put("measured", r.measured);
            out.put("prefactor", r.prefactor);
            out.put("mu", r.mu);
            out.put("kp_lhs", r.certificate.lhs);
            out.put("holds", r.holds);
        }
    }
    let all = out.table.rows.iter().all(|r| r[5] == Cell::Bool(true));
    out.put("all_hold", all);
    points.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut curve = Table::new(&["mu", "bound", "measured"]);
    for (mu, bound, measured) in points {
        curve.push(vec![mu.into(), bound.into(), measured.into()]);
    }
    out.curve = Some(curve);
    Ok(out)
}

fn coupling_cells(c: &Couplings, graph: &Graph) -> [Cell; 3] {
    let j = graph
        .edges()
        .first()
        .map(|&(x, y)| c.get(x, y))
        .unwrap_or([0.0; 3]);
    [j[0].into(), j[1].into(), j[2].into()]
}

fn run_inequality(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let model = cfg.model()?;
    let graph = model.build_graph()?;
    let spin = model.spin()?;
    let beta = cfg.beta()?;
    let last = graph.n_vertices() - 1;
    let (sites, comps) = sites_and_components(cfg, vec![graph.origin(), last], 2);
    let samples = cfg.params.samples.unwrap_or(100);
    let sweep = CouplingSweep::random(graph.clone(), spin, beta, samples, cfg.seed)?;
    let report = spin_inequalities::check_multi_point(&sweep, &sites, &comps)?;

    let mut out = ResultSet::default();
    out.put("min_margin", report.min_margin);
    out.put("holds", report.holds);
    out.table = Table::new(&["sample", "J1", "J2", "J3", "lhs", "rhs", "margin"]);
    for s in &report.samples {
        let [j1, j2, j3] = coupling_cells(&s.couplings, &graph);
        out.table.push(vec![
            s.index.into(),
            j1,
            j2,
            j3,
            s.lhs.into(),
            s.rhs.into(),
            s.margin.into(),
        ]);
    }
    Ok(out)
}

fn run_duhamel(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let model = cfg.model()?;
    let graph = model.build_graph()?;
    let spin = model.spin()?;
    let beta = cfg.beta()?;
    let edge = match cfg.params.edge {
        Some([x, y]) => (x, y),
        None => *graph.edges().first().ok_or_else(|| CliError::Validation {
            field: Some("model.graph".into()),
            message: "duhamel-check needs at least one edge".into(),
        })?,
    };
    let pair = cfg
        .params
        .pair
        .map(|[z, u]| (z, u))
        .unwrap_or((graph.origin(), graph.n_vertices() - 1));
    let samples = cfg.params.samples.unwrap_or(50);
    let sweep = CouplingSweep::symmetric(graph.clone(), spin, beta, samples, cfg.seed)?;
    let report = spin_inequalities::check_duhamel_derivative(&sweep, edge, pair)?;

    let mut out = ResultSet::default();
    out.put("max_relative_error", report.max_relative_error);
    out.put("min_margin", report.min_margin);
    out.put("holds", report.holds);
    out.table = Table::new(&[
        "sample",
        "J1",
        "J3",
        "duhamel_11",
        "fd_11",
        "duhamel_22",
        "fd_22",
        "relative_error",
        "derivative_margin",
        "duhamel_margin",
    ]);
    for s in &report.samples {
        let [j1, _, j3] = coupling_cells(&s.couplings, &graph);
        out.table.push(vec![
            s.index.into(),
            j1,
            j3,
            s.duhamel[0].into(),
            s.finite_difference[0].into(),
            s.duhamel[1].into(),
            s.finite_difference[1].into(),
            s.relative_error.into(),
            s.derivative_margin.into(),
            s.duhamel_margin.into(),
        ]);
    }
    Ok(out)
}

fn run_kms(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let phi: Interaction = cfg.model()?.build_interaction()?;
    let beta = cfg.beta()?;
    let problem = KmsProblem::new(&phi, beta)?;
    let options = FixedPointOptions {
        tol: cfg.tolerance("fixed_point", 1e-12),
        ..FixedPointOptions::default()
    };
    let sol = problem.solve_fixed_point(&options)?;
    let gibbs = problem.gibbs_epsilon()?;
    let cert = problem.certificate();

    let mut out = ResultSet::default();
    out.put("valid", cert.valid);
    out.put("s_witness", cert.s_witness);
    out.put("contraction_bound", cert.contraction_bound);
    out.put("simple_condition", cert.simple_condition);
    out.put("converged", sol.converged);
    out.put("iterations", sol.iterations);
    out.put("sup_distance_to_gibbs", sol.epsilon.sup_distance(&gibbs));
    out.put(
        "equation_residual",
        problem.equation_residual(&sol.epsilon)?,
    );
    out.put("gibbs_residual", problem.equation_residual(&gibbs)?);
    out.put("coefficients", sol.epsilon.len());
    if let Some(n) = cfg.params.samples.filter(|&n| n > 0) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        out.put("lipschitz_ratio", problem.lipschitz_ratio(n, &mut rng)?);
    }
    debug_assert_eq!(problem.state().convention(), TraceConvention::Normalized);
    out.table = Table::new(&["iteration", "step"]);
    for (i, s) in sol.step_trace.iter().enumerate() {
        out.table.push(vec![(i + 1).into(), (*s).into()]);
    }
    out.curve = Some(out.table.clone());
    Ok(out)
}

fn xi_options(cfg: &ExperimentConfig) -> XiOptions {
    XiOptions {
        tol: cfg.tolerance("xi_gradient", mermin_wagner::DEFAULT_TOL),
        ..XiOptions::default()
    }
}

fn mw_vertices(cfg: &ExperimentConfig, graph: &Graph) -> Vec<usize> {
    cfg.params
        .vertices
        .clone()
        .unwrap_or_else(|| (0..graph.n_vertices()).collect())
}

fn run_mw_bound(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let model = cfg.model()?;
    let graph = model.build_graph()?;
    let spin = model.spin()?;
    let couplings = model.build_couplings(&graph)?;
    let beta = cfg.beta()?;
    let component = cfg
        .params
        .components
        .as_ref()
        .and_then(|c| c.first().copied())
        .unwrap_or(1);
    let opts = xi_options(cfg);
    let jobs: Vec<(usize, usize)> = mw_vertices(cfg, &graph)
        .into_iter()
        .map(|x| (x, component))
        .collect();
    let mut reports = mermin_wagner::mw_verify_many(&graph, &couplings, beta, spin, &jobs, &opts)?;
    reports.sort_by_key(|r| (r.distance.unwrap_or(usize::MAX), r.x));

    let mut out = ResultSet::default();
    out.put("shell_constant", mermin_wagner::shell_constant(&graph));
    out.put("min_margin", min_or_nan(reports.iter().map(|r| r.margin)));
    out.put("holds", reports.iter().all(|r| r.holds));
    out.table = Table::new(&["x", "distance", "xi", "lemma_bound", "correlation", "rhs"]);
    let mut curve = Table::new(&["distance", "xi", "lemma_bound", "correlation", "rhs"]);
    for r in &reports {
        out.table.push(vec![
            r.x.into(),
            r.distance.into(),
            r.xi.into(),
            r.lemma_bound.into(),
            r.correlation.into(),
            r.rhs.into(),
        ]);
        curve.push(vec![
            r.distance.into(),
            r.xi.into(),
            r.lemma_bound.into(),
            r.correlation.into(),
            r.rhs.into(),
        ]);
    }
    out.curve = Some(curve);
    Ok(out)
}

fn run_mw_verify(cfg: &ExperimentConfig) -> Result<ResultSet, CliError> {
    let model = cfg.model()?;
    let graph = model.build_graph()?;
    let spin = model.spin()?;
    let couplings = model.build_couplings(&graph)?;
    let beta = cfg.beta()?;
    let components = cfg.params.components.clone().unwrap_or_else(|| vec![1, 2]);
    let opts = xi_options(cfg);
    let jobs: Vec<(usize, usize)> = mw_vertices(cfg, &graph)
        .into_iter()
        .flat_map(|x| components.iter().map(move |&c| (x, c)))
        .collect();
    let reports = mermin_wagner::mw_verify_many(&graph, &couplings, beta, spin, &jobs, &opts)?;

    let mut out = ResultSet::default();
    out.put("min_margin", min_or_nan(reports.iter().map(|r| r.margin)));
    out.put(
        "max_raising_lowering_defect",
        max_or_nan(reports.iter().map(|r| r.raising_lowering_defect.abs())),
    );
    out.put("holds", reports.iter().all(|r| r.holds));
    out.table = Table::new(&[
        "x",
        "distance",
        "component",
        "correlation",
        "xi",
        "rhs",
        "margin",
        "holds",
    ]);
    for r in &reports {
        out.table.push(vec![
            r.x.into(),
            r.distance.into(),
            r.component.into(),
            r.correlation.into(),
            r.xi.into(),
            r.rhs.into(),
            r.margin.into(),
            r.holds.into(),
        ]);
    }
    Ok(out)
}
