//! The training/evaluation protocol for one experiment.

use rand::Rng;
use rayon::prelude::*;

use super::config::{Experiment, TopologySource};
use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::optimizer::{self, Population, StepOptions};
use crate::rng::{self, Purpose};
use crate::topology::{self, Graph, TopologySpec};

/// One line of the iteration CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub iteration: u64,
    pub best_raw_reward: f64,
    pub mean_raw_reward: f64,
    pub broadcast: bool,
    pub eval_reward: Option<f64>,
    pub update_variance: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub bound_holds: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Plateau,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Seed of the graph actually used (after connectivity resampling).
    pub graph_seed: u64,
    pub rows: Vec<RunRow>,
    /// Best noise-free reward among the initial agents.
    pub initial_metric: f64,
    /// Maximum over the recorded evaluation entries.
    pub final_metric: f64,
    pub stop: StopReason,
}

impl RunResult {
    pub fn eval_history(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.eval_reward).collect()
    }
}

/// Outcome of one seed; a failed seed keeps its error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub result: std::result::Result<RunResult, String>,
}

/// Mean noise-free return of `theta` over `episodes` evaluations.
pub fn evaluate_policy(theta: &[f64], objective: &Objective, episodes: usize) -> Result<f64> {
    if episodes < 1 {
        return Err(Error::param("episodes", "must be at least 1"));
    }
    if objective.is_deterministic() {
        return objective.evaluate(theta);
    }
    let mut total = 0.0;
    for _ in 0..episodes {
        total += objective.evaluate(theta)?;
    }
    Ok(total / episodes as f64)
}

/// True once the moving average over the last `window` entries differs
/// from the one `window` entries earlier by at most `threshold` of the
/// latter's magnitude.
pub fn detect_plateau(history: &[f64], window: usize, threshold: f64) -> bool {
    if window == 0 || history.len() < 2 * window {
        return false;
    }
    let w = window as f64;
    let len = history.len();
    let now = history[len - window..].iter().sum::<f64>() / w;
    let before = history[len - 2 * window..len - window].iter().sum::<f64>() / w;
    let change = (now - before).abs();
    if before == 0.0 {
        change <= 1e-8
    } else {
        change <= threshold * before.abs()
    }
}

pub fn build_graph(source: &TopologySource, n: usize, seed: u64, max_attempts: u32) -> Result<Graph> {
    match source {
        TopologySource::Fixed(g) => Ok(g.clone()),
        TopologySource::Generated(TopologySpec::Edgeless) => topology::generate_edgeless(n),
        TopologySource::Generated(spec) => topology::sample_connected(*spec, n, seed, max_attempts),
    }
}

/// Runs one seed: build the topology, initialize, iterate until plateau or
/// the iteration cap.
pub fn run_seed(exp: &Experiment, seed: u64) -> Result<RunResult> {
    let cfg = &exp.config;
    let n = cfg.agents;
    let d = exp.objective.dim();
    let graph = build_graph(&exp.topology, n, seed, cfg.max_connect_attempts)?;
    let mut pop = Population::init(n, d, cfg.init.scale, cfg.init.shared, seed)?;

    let initial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| evaluate_policy(pop.theta.row(i), &exp.objective, cfg.eval_episodes))
        .collect::<Result<_>>()?;
    let initial_metric = initial.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let options = StepOptions {
        bound_cap: cfg.diagnostics.enabled.then_some(cfg.diagnostics.max_agents),
    };
    let mut rows = Vec::new();
    let mut history = Vec::new();
    let mut stop = StopReason::IterationCap;
    let mut last_best = 0;
    for t in 0..cfg.iterations {
        let (next, record) =
            optimizer::step_with(&pop, &graph, &exp.hyperparams, &exp.objective, seed, options)?;
        pop = next;
        last_best = record.best_agent;
        let mut eval_rng = rng::stream(seed, Purpose::Evaluation, 0, t);
        let eval_reward = if eval_rng.random::<f64>() < cfg.eval_probability {
            Some(evaluate_policy(pop.theta.row(record.best_agent), &exp.objective, cfg.eval_episodes)?)
        } else {
            None
        };
        rows.push(RunRow {
            iteration: t,
            best_raw_reward: record.best_raw_reward,
            mean_raw_reward: record.mean_raw_reward,
            broadcast: record.broadcast.happened,
            eval_reward,
            update_variance: record.update_variance,
            bound_rhs: record.bound.map(|b| b.rhs_bound),
            bound_holds: record.bound.map(|b| b.holds),
        });
        if let Some(v) = eval_reward {
            history.push(v);
            if cfg.plateau.enabled && detect_plateau(&history, cfg.plateau.window, cfg.plateau.threshold) {
                stop = StopReason::Plateau;
                break;
            }
        }
    }
    if history.is_empty() {
        // no evaluation was drawn: evaluate the final best agent once
        let v = evaluate_policy(pop.theta.row(last_best), &exp.objective, cfg.eval_episodes)?;
        history.push(v);
        if let Some(last) = rows.last_mut() {
            last.eval_reward = Some(v);
        }
    }
    let final_metric = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RunResult {
        seed,
        graph_seed: graph.seed(),
        rows,
        initial_metric,
        final_metric,
        stop,
    })
}

/// Runs every configured seed in parallel. A failing seed does not stop
/// the others.
pub fn run_experiment(exp: &Experiment) -> Vec<SeedOutcome> {
    exp.config
        .seeds
        .par_iter()
        .map(|&seed| SeedOutcome {
            seed,
            result: run_seed(exp, seed).map_err(|e| e.to_string()),
        })
        .collect()
}
