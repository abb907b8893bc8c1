//! JSON experiment configs. Unknown keys are rejected; every optional field
//! has a documented default, and [`ExperimentConfig::resolve`] writes them
//! back into the config it returns.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{self, Objective, ObjectiveKind};
use crate::optimizer::Hyperparams;
use crate::topology::{self, Family, Graph, TopologySpec, DEFAULT_WS_BETA};

pub const DEFAULT_DENSITY: f64 = 0.5;
pub const DEFAULT_SYNTHETIC_DIM: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Target density; generator parameters are matched to it when the
    /// family-specific ones are absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Explicit graph (family `custom`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_list: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperparamsConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub broadcast_probability: f64,
    pub weight_decay: f64,
    pub degree_normalize: bool,
}

impl Default for HyperparamsConfig {
    fn default() -> Self {
        let hp = Hyperparams::default();
        HyperparamsConfig {
            alpha: hp.alpha,
            sigma: hp.sigma,
            broadcast_probability: hp.broadcast_probability,
            weight_decay: hp.weight_decay,
            degree_normalize: hp.degree_normalize,
        }
    }
}

impl From<HyperparamsConfig> for Hyperparams {
    fn from(c: HyperparamsConfig) -> Self {
        Hyperparams {
            alpha: c.alpha,
            sigma: c.sigma,
            broadcast_probability: c.broadcast_probability,
            weight_decay: c.weight_decay,
            degree_normalize: c.degree_normalize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Standard deviation of the Gaussian initial parameters.
    pub scale: f64,
    /// Every agent starts from the same draw.
    pub shared: bool,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            scale: 0.05,
            shared: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateauConfig {
    pub enabled: bool,
    pub window: usize,
    pub threshold: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        PlateauConfig {
            enabled: true,
            window: 50,
            threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Record the variance bound on every update iteration.
    pub enabled: bool,
    /// Skip the bound for populations larger than this.
    pub max_agents: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            enabled: false,
            max_agents: crate::diagnostics::DEFAULT_F_CAP,
        }
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn default_iterations() -> u64 {
    1000
}
fn default_eval_probability() -> f64 {
    0.08
}
fn default_eval_episodes() -> usize {
    1
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_max_connect_attempts() -> u32 {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub objective: ObjectiveConfig,
    pub topology: TopologyConfig,
    pub agents: usize,
    #[serde(default)]
    pub hyperparams: HyperparamsConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_eval_probability")]
    pub eval_probability: f64,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default)]
    pub plateau: PlateauConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_max_connect_attempts")]
    pub max_connect_attempts: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// How each seed obtains its graph.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Generated(TopologySpec),
    Fixed(Graph),
}

/// A validated config together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub objective: Objective,
    pub topology: TopologySource,
    pub hyperparams: Hyperparams,
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads, validates and resolves an experiment config.
pub fn load_config(path: &Path) -> Result<Experiment> {
    let mut config: ExperimentConfig = parse_json(&read_text(path)?, path)?;
    // edge-list paths are relative to the config file
    if let (Some(edges), Some(dir)) = (&config.topology.edge_list, path.parent()) {
        if edges.is_relative() {
            config.topology.edge_list = Some(dir.join(edges));
        }
    }
    config.resolve()
}

fn in_unit(field: &str, v: f64, open_low: bool) -> Result<()> {
    let ok = if open_low { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
    if !ok {
        let range = if open_low { "(0, 1]" } else { "[0, 1]" };
        return Err(Error::config(field, format!("must be in {range}, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text, Path::new("<inline>"))
    }

    /// Validates every field and fills all defaults in place.
    pub fn resolve(mut self) -> Result<Experiment> {
        if self.agents < 2 || !self.agents.is_multiple_of(2) {
            return Err(Error::config(
                "agents",
                format!("must be an even number >= 2 (mirrored pairs), got {}", self.agents),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.iterations < 1 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        in_unit("eval_probability", self.eval_probability, false)?;
        if self.eval_episodes < 1 {
            return Err(Error::config("eval_episodes", "must be at least 1"));
        }
        if self.plateau.window < 1 {
            return Err(Error::config("plateau.window", "must be at least 1"));
        }
        if !(self.plateau.threshold >= 0.0) {
            return Err(Error::config("plateau.threshold", "must be non-negative"));
        }
        if self.init.scale < 0.0 || !self.init.scale.is_finite() {
            return Err(Error::config("init.scale", "must be finite and non-negative"));
        }
        if self.max_connect_attempts < 1 {
            return Err(Error::config("max_connect_attempts", "must be at least 1"));
        }
        let hyperparams = Hyperparams::from(self.hyperparams);
        hyperparams.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::config(format!("hyperparams.{name}"), reason),
            other => other,
        })?;

        let objective = self.resolve_objective()?;
        let topology = self.resolve_topology()?;
        Ok(Experiment {
            config: self,
            objective,
            topology,
            hyperparams,
        })
    }

    fn resolve_objective(&mut self) -> Result<Objective> {
        let o = &mut self.objective;
        let kind: ObjectiveKind = o.kind.parse().map_err(|_| {
            Error::config(
                "objective.kind",
                format!("unknown objective `{}`; valid kinds: {}", o.kind, ObjectiveKind::VALID_NAMES),
            )
        })?;
        o.kind = kind.as_str().into();
        if kind == ObjectiveKind::PointMass {
            let hidden = *o.hidden.get_or_insert(objectives::DEFAULT_HIDDEN);
            let length = *o.episode_length.get_or_insert(objectives::DEFAULT_EPISODE_LENGTH);
            let task_seed = *o.task_seed.get_or_insert(0);
            if hidden < 1 || length < 1 {
                return Err(Error::config("objective", "hidden and episode_length must be positive"));
            }
            let obj = Objective::point_mass(hidden, length, task_seed)?;
            if let Some(dim) = o.dim {
                if dim != obj.dim() {
                    return Err(Error::config(
                        "objective.dim",
                        format!("point_mass policy has {} parameters, config says {dim}", obj.dim()),
                    ));
                }
            }
            o.dim = Some(obj.dim());
            Ok(obj)
        } else {
            if o.hidden.is_some() || o.episode_length.is_some() || o.task_seed.is_some() {
                return Err(Error::config(
                    "objective",
                    "hidden, episode_length and task_seed only apply to point_mass",
                ));
            }
            let dim = *o.dim.get_or_insert(DEFAULT_SYNTHETIC_DIM);
            Objective::synthetic(kind, dim).map_err(|e| Error::config("objective.dim", e.to_string()))
        }
    }

    fn resolve_topology(&mut self) -> Result<TopologySource> {
        let n = self.agents;
        let t = &mut self.topology;
        let family: Family = t.family.parse().map_err(|_| {
            Error::config(
                "topology.family",
                format!("unknown family `{}`; valid families: {}", t.family, Family::VALID_NAMES),
            )
        })?;
        t.family = family.as_str().into();
        let bad = |field: &str, reason: String| Error::config(format!("topology.{field}"), reason);
        if let Some(d) = t.density {
            in_unit("topology.density", d, true)?;
        }
        if family != Family::Custom && t.edge_list.is_some() {
            return Err(bad("edge_list", "only valid with family `custom`".into()));
        }
        let spec = match family {
            Family::Complete => TopologySpec::Complete,
            Family::Edgeless => TopologySpec::Edgeless,
            Family::ErdosRenyi => {
                let p = *t.p.get_or_insert(t.density.unwrap_or(DEFAULT_DENSITY));
                in_unit("topology.p", p, true)?;
                TopologySpec::ErdosRenyi { p }
            }
            Family::SmallWorld => {
                let k = match t.k {
                    Some(k) => k,
                    None => match TopologySpec::matched(family, n, t.density.unwrap_or(DEFAULT_DENSITY))? {
                        TopologySpec::WattsStrogatz { k, .. } => k,
                        _ => unreachable!(),
                    },
                };
                let beta = *t.beta.get_or_insert(DEFAULT_WS_BETA);
                if k % 2 != 0 || k >= n {
                    return Err(bad("k", format!("must be even and below agents={n}, got {k}")));
                }
                in_unit("topology.beta", beta, false)?;
                t.k = Some(k);
                TopologySpec::WattsStrogatz { k, beta }
            }
            Family::ScaleFree => {
                let m = match t.m {
                    Some(m) => m,
                    None => match TopologySpec::matched(family, n, t.density.unwrap_or(DEFAULT_DENSITY))? {
                        TopologySpec::BarabasiAlbert { m } => m,
                        _ => unreachable!(),
                    },
                };
                if m < 1 || m >= n {
                    return Err(bad("m", format!("need 1 <= m < agents={n}, got {m}")));
                }
                t.m = Some(m);
                TopologySpec::BarabasiAlbert { m }
            }
            Family::Custom => {
                let path = t
                    .edge_list
                    .as_ref()
                    .ok_or_else(|| bad("edge_list", "family `custom` needs an edge_list path".into()))?;
                let g = topology::read_edge_list(path)?;
                if g.n() != n {
                    return Err(bad("edge_list", format!("graph has {} nodes, agents is {n}", g.n())));
                }
                return Ok(TopologySource::Fixed(g));
            }
        };
        Ok(TopologySource::Generated(spec))
    }
}

/// Named ablation presets.
pub const PRESETS: [&str; 6] = [
    "netes",
    "broadcast-only",
    "shared-init-no-broadcast",
    "shared-init-broadcast",
    "distinct-init-no-broadcast",
    "distinct-init-broadcast",
];

const PRESET_BROADCAST: f64 = 0.8;

fn broadcast_on(current: f64) -> f64 {
    if current > 0.0 {
        current
    } else {
        PRESET_BROADCAST
    }
}

/// Rewrites the topology, initialization and broadcast settings of
/// `config` to one of the ablation controls. The name gets the preset
/// appended.
pub fn apply_preset(mut config: ExperimentConfig, preset: &str) -> Result<ExperimentConfig> {
    let complete = TopologyConfig {
        family: Family::Complete.as_str().into(),
        p: None,
        density: None,
        k: None,
        beta: None,
        m: None,
        edge_list: None,
    };
    let hp = &mut config.hyperparams;
    match preset {
        "netes" => {
            if config.topology.family.parse::<Family>().ok() != Some(Family::ErdosRenyi) {
                config.topology = TopologyConfig {
                    family: Family::ErdosRenyi.as_str().into(),
                    p: Some(DEFAULT_DENSITY),
                    ..complete
                };
            }
            config.init.shared = false;
            hp.broadcast_probability = broadcast_on(hp.broadcast_probability);
        }
        "broadcast-only" => {
            config.topology = TopologyConfig {
                family: Family::Edgeless.as_str().into(),
                ..complete
            };
            config.init.shared = false;
            hp.broadcast_probability = broadcast_on(hp.broadcast_probability);
        }
        "shared-init-no-broadcast" | "shared-init-broadcast" | "distinct-init-no-broadcast"
        | "distinct-init-broadcast" => {
            config.topology = complete;
            config.init.shared = preset.starts_with("shared");
            hp.broadcast_probability = if preset.ends_with("no-broadcast") {
                0.0
            } else {
                broadcast_on(hp.broadcast_probability)
            };
        }
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}`; valid presets: {}", PRESETS.join(", ")),
            ))
        }
    }
    config.name = format!("{}-{preset}", config.name);
    Ok(config)
}

/// Config for `netes scatter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub n: usize,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_samples")]
    pub samples_per_family: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_connect_attempts")]
    pub max_connect_attempts: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}
fn default_samples() -> usize {
    50
}

impl ScatterConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let c: ScatterConfig = parse_json(&read_text(path)?, path)?;
        if c.n < 2 {
            return Err(Error::config("n", "must be at least 2"));
        }
        in_unit("density", c.density, true)?;
        if c.samples_per_family < 1 {
            return Err(Error::config("samples_per_family", "must be at least 1"));
        }
        Ok(c)
    }
}

/// Config for `netes bound-sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_min_agents")]
    pub min_agents: usize,
    #[serde(default = "default_max_agents")]
    pub max_agents: usize,
    #[serde(default = "default_min_dim")]
    pub min_dim: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_true")]
    pub mirrored: bool,
    #[serde(default = "default_f_cap")]
    pub f_cap: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_instances() -> usize {
    1000
}
fn default_min_agents() -> usize {
    6
}
fn default_max_agents() -> usize {
    40
}
fn default_min_dim() -> usize {
    1
}
fn default_max_dim() -> usize {
    8
}
fn default_true() -> bool {
    true
}
fn default_f_cap() -> usize {
    crate::diagnostics::DEFAULT_F_CAP
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let c: SweepConfig = parse_json(&read_text(path)?, path)?;
        if c.min_agents < 2 || c.min_agents > c.max_agents {
            return Err(Error::config("min_agents", "need 2 <= min_agents <= max_agents"));
        }
        if c.min_dim < 1 || c.min_dim > c.max_dim {
            return Err(Error::config("min_dim", "need 1 <= min_dim <= max_dim"));
        }
        Ok(c)
    }

    pub fn options(&self) -> crate::diagnostics::SweepOptions {
        crate::diagnostics::SweepOptions {
            instances: self.instances,
            seed: self.seed,
            min_agents: self.min_agents,
            max_agents: self.max_agents,
            min_dim: self.min_dim,
            max_dim: self.max_dim,
            mirrored: self.mirrored,
            f_cap: self.f_cap,
            ..Default::default()
        }
    }
}
