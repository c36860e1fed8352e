//! Experiment configuration: strict TOML schema, validation, and model
//! construction.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use lattice_kms::graph::{edge, Graph};
use lattice_kms::interaction::{build_xyz, Couplings};
use lattice_kms::operators::spin_matrices;
use lattice_kms::{Interaction, SiteSet, SpinValue};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Decompose,
    Uniqueness,
    LogzSeries,
    ExpectationSeries,
    DecayBound,
    InequalitySweep,
    DuhamelCheck,
    KmsFixedPoint,
    MwBound,
    MwVerify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Decompose => "decompose",
            Self::Uniqueness => "uniqueness",
            Self::LogzSeries => "logz-series",
            Self::ExpectationSeries => "expectation-series",
            Self::DecayBound => "decay-bound",
            Self::InequalitySweep => "inequality-sweep",
            Self::DuhamelCheck => "duhamel-check",
            Self::KmsFixedPoint => "kms-fixed-point",
            Self::MwBound => "mw-bound",
            Self::MwVerify => "mw-verify",
        }
    }

    fn needs_model(self) -> bool {
        self != Self::Decompose
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_spin")]
    pub spin: String,
    pub graph: GraphConfig,
    #[serde(default)]
    pub couplings: CouplingsConfig,
    /// Uniform single-site field `h`, adding `-Σ_i h_i S^i` at every site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<[f64; 3]>,
}

fn default_spin() -> String {
    "1/2".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Chain,
    Ring,
    Grid,
    Star,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(rename = "type")]
    pub kind: GraphKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaves: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Ising,
    Xy,
    Heisenberg,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    /// Strength of the preset; 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<[f64; 3]>,
    /// Per-edge values, applied after the preset or uniform value. With
    /// none of the three the couplings vanish.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeCoupling>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeCoupling {
    pub x: usize,
    pub y: usize,
    pub j: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub max_n: usize,
    pub max_k: usize,
    pub max_support: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            max_k: 4,
            max_support: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_path")]
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_output_path() -> PathBuf {
    PathBuf::from("results")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: default_output_path(),
            format: Format::default(),
        }
    }
}

/// Experiment-specific settings; each experiment reads the fields it
/// needs and rejects the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<usize>>,
}

impl Params {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { out.push(stringify!($f)); } )* };
        }
        check!(samples, dims, betas, sites, components, edge, pair, a, b, vertices);
        out
    }
}

/// Tolerance keys understood by the runner.
pub const TOLERANCE_KEYS: [&str; 2] = ["fixed_point", "xi_gradient"];

fn allowed_params(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::Decompose => &["samples", "dims"],
        Experiment::Uniqueness => &["betas"],
        Experiment::LogzSeries => &[],
        Experiment::ExpectationSeries => &["sites", "components"],
        Experiment::DecayBound => &["sites", "components", "a", "b"],
        Experiment::InequalitySweep => &["samples", "sites", "components"],
        Experiment::DuhamelCheck => &["samples", "edge", "pair"],
        Experiment::KmsFixedPoint => &["samples"],
        Experiment::MwBound => &["components", "vertices"],
        Experiment::MwVerify => &["components", "vertices"],
    }
}

fn field_error(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation {
        field: Some(field.to_string()),
        message: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation {
            field: None,
            message: e.to_string(),
        })
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    /// The output directory is left out so reruns elsewhere hash equal.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.path = PathBuf::new();
        let canonical = serde_json::to_vec(&c).expect("configuration serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(beta) = self.beta {
            if !beta.is_finite() || beta < 0.0 {
                return Err(field_error(
                    "beta",
                    format!("must be finite and nonnegative, got {beta}"),
                ));
            }
        }
        if let Some(betas) = &self.params.betas {
            if betas.is_empty() || betas.iter().any(|b| !b.is_finite() || *b <= 0.0) {
                return Err(field_error(
                    "params.betas",
                    "must be a nonempty list of positive numbers",
                ));
            }
        }
        let needs_beta = !matches!(
            self.experiment,
            Experiment::Decompose | Experiment::Uniqueness
        ) || (self.experiment == Experiment::Uniqueness
            && self.params.betas.is_none());
        if needs_beta && self.beta.is_none() {
            return Err(field_error(
                "beta",
                format!("required by {}", self.experiment),
            ));
        }
        match (&self.model, self.experiment.needs_model()) {
            (None, true) => {
                return Err(field_error(
                    "model",
                    format!("required by {}", self.experiment),
                ))
            }
            (Some(_), false) => {
                return Err(field_error(
                    "model",
                    format!("not used by {}", self.experiment),
                ))
            }
            (Some(m), true) => {
                m.build_graph()?;
                m.spin()?;
                m.build_couplings(&m.build_graph()?)?;
            }
            (None, false) => {}
        }
        let t = &self.truncation;
        if t.max_n == 0 || t.max_k == 0 || t.max_support == 0 {
            return Err(field_error(
                "truncation",
                "max_n, max_k and max_support must be positive",
            ));
        }
        if t.max_k > lattice_kms::clusters::MAX_URSELL_K {
            return Err(field_error(
                "truncation.max_k",
                format!("at most {}", lattice_kms::clusters::MAX_URSELL_K),
            ));
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCE_KEYS.contains(&k.as_str()) {
                return Err(field_error(&format!("tolerances.{k}"), "unknown tolerance"));
            }
            if !v.is_finite() || *v <= 0.0 {
                return Err(field_error(&format!("tolerances.{k}"), "must be positive"));
            }
        }
        let allowed = allowed_params(self.experiment);
        for p in self.params.present() {
            if !allowed.contains(&p) {
                return Err(field_error(
                    &format!("params.{p}"),
                    format!("not used by {}", self.experiment),
                ));
            }
        }
        if let Some(c) = &self.params.components {
            if c.iter().any(|&j| !(1..=3).contains(&j)) {
                return Err(field_error(
                    "params.components",
                    "components must be 1, 2 or 3",
                ));
            }
        }
        if let Some(dims) = &self.params.dims {
            if dims.is_empty() || dims.iter().any(|&n| !(2..=64).contains(&n)) {
                return Err(field_error("params.dims", "dimensions must lie in 2..=64"));
            }
        }
        for (name, v) in [("params.a", self.params.a), ("params.b", self.params.b)] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(field_error(name, "must be finite and nonnegative"));
                }
            }
        }
        if let Some(m) = &self.model {
            let n = m.build_graph()?.n_vertices();
            let sites = [
                (
                    "params.sites",
                    self.params.sites.clone().unwrap_or_default(),
                ),
                (
                    "params.vertices",
                    self.params.vertices.clone().unwrap_or_default(),
                ),
                (
                    "params.edge",
                    self.params.edge.map(|e| e.to_vec()).unwrap_or_default(),
                ),
                (
                    "params.pair",
                    self.params.pair.map(|e| e.to_vec()).unwrap_or_default(),
                ),
            ];
            for (name, list) in sites {
                if let Some(v) = list.iter().find(|&&v| v >= n) {
                    return Err(field_error(name, format!("vertex {v} is out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| field_error("model", format!("required by {}", self.experiment)))
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        self.beta.ok_or_else(|| field_error("beta", "required"))
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}

impl ModelConfig {
    pub fn spin(&self) -> Result<SpinValue, CliError> {
        self.spin
            .parse()
            .map_err(|e: lattice_kms::Error| field_error("model.spin", e.to_string()))
    }

    pub fn build_graph(&self) -> Result<Graph, CliError> {
        let g = &self.graph;
        let need = |v: Option<usize>, name: &str| {
            v.filter(|&v| v > 0).ok_or_else(|| {
                field_error(
                    &format!("model.graph.{name}"),
                    "required and positive for this graph type",
                )
            })
        };
        let (used, graph): (&[&str], _) = match g.kind {
            GraphKind::Chain => (&["size"], Graph::chain(need(g.size, "size")?)),
            GraphKind::Ring => (&["size"], Graph::ring(need(g.size, "size")?)),
            GraphKind::Grid => (
                &["width", "height"],
                Graph::grid(need(g.width, "width")?, need(g.height, "height")?),
            ),
            GraphKind::Star => (&["leaves"], Graph::star(need(g.leaves, "leaves")?)),
            GraphKind::Custom => {
                let edges = g.edges.clone().unwrap_or_default();
                (
                    &["vertices", "edges"],
                    Graph::new(
                        need(g.vertices, "vertices")?,
                        edges.iter().map(|e| edge(e[0], e[1])),
                    ),
                )
            }
        };
        let present = [
            ("size", g.size.is_some()),
            ("width", g.width.is_some()),
            ("height", g.height.is_some()),
            ("leaves", g.leaves.is_some()),
            ("vertices", g.vertices.is_some()),
            ("edges", g.edges.is_some()),
        ];
        for (name, is) in present {
            if is && !used.contains(&name) {
                return Err(field_error(
                    &format!("model.graph.{name}"),
                    "not used by this graph type",
                ));
            }
        }
        let graph = graph.map_err(|e| field_error("model.graph", e.to_string()))?;
        match g.origin {
            Some(o) => graph
                .with_origin(o)
                .map_err(|e| field_error("model.graph.origin", e.to_string())),
            None => Ok(graph),
        }
    }

    pub fn build_couplings(&self, graph: &Graph) -> Result<Couplings, CliError> {
        let c = &self.couplings;
        if c.preset.is_some() && c.uniform.is_some() {
            return Err(field_error(
                "model.couplings",
                "give either preset or uniform, not both",
            ));
        }
        if c.j.is_some() && c.preset.is_none() {
            return Err(field_error(
                "model.couplings.j",
                "only used together with a preset",
            ));
        }
        let j = c.j.unwrap_or(1.0);
        let base = match (c.preset, c.uniform) {
            (Some(Preset::Ising), _) => Some([0.0, 0.0, j]),
            (Some(Preset::Xy), _) => Some([j, j, 0.0]),
            (Some(Preset::Heisenberg), _) => Some([j, j, j]),
            (None, Some(u)) => Some(u),
            (None, None) => None,
        };
        let mut out = base
            .map(|b| Couplings::uniform(graph, b))
            .unwrap_or_default();
        for e in &c.edges {
            if !graph.has_edge(e.x, e.y) {
                return Err(field_error(
                    "model.couplings.edges",
                    format!("({}, {}) is not an edge of the graph", e.x, e.y),
                ));
            }
            out.set(e.x, e.y, e.j);
        }
        if out.iter().flat_map(|(_, j)| j).any(|v| !v.is_finite()) {
            return Err(field_error("model.couplings", "couplings must be finite"));
        }
        Ok(out)
    }

    /// XYZ interaction plus the optional single-site field.
    pub fn build_interaction(&self) -> Result<Interaction, CliError> {
        let graph = self.build_graph()?;
        let spin = self.spin()?;
        let couplings = self.build_couplings(&graph)?;
        let mut phi = build_xyz(&graph, spin, &couplings)?;
        if let Some(h) = self.field {
            let sm = spin_matrices(spin);
            let mut term = lattice_kms::DenseOperator::zeros(spin.dim());
            for (i, hi) in h.iter().enumerate() {
                term = &term - &sm.component(i + 1).scale_real(*hi);
            }
            if term.max_abs() > 0.0 {
                for x in 0..graph.n_vertices() {
                    phi.insert(SiteSet::singleton(x), term.clone())?;
                }
            }
        }
        Ok(phi)
    }
}
