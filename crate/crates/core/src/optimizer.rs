//! The networked ES optimizer.
//!
//! One iteration: every agent evaluates its mirrored perturbation, then with
//! probability `p_b` the best candidate is broadcast to everyone; otherwise
//! each agent moves along the reward-weighted offsets of its neighbors'
//! candidates (itself included) and weight decay is applied.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::diagnostics::{self, BoundReport};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::objectives::Objective;
use crate::rng::{self, Purpose};
use crate::topology::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub theta: Matrix,
    pub iteration: u64,
}

impl Population {
    pub fn new(theta: Matrix) -> Result<Self> {
        if theta.rows() < 2 {
            return Err(Error::InvalidSize(format!("need at least 2 agents, got {}", theta.rows())));
        }
        if theta.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("initial parameters must be finite".into()));
        }
        Ok(Population { theta, iteration: 0 })
    }

    /// Gaussian initialization with standard deviation `scale`. Agent `i`
    /// draws from its own stream; with `shared`, every agent copies agent
    /// 0's draw.
    pub fn init(n: usize, d: usize, scale: f64, shared: bool, seed: u64) -> Result<Self> {
        let mut theta = Matrix::zeros(n, d);
        for i in 0..n {
            let key = if shared { 0 } else { i as u64 };
            let mut rng = rng::stream(seed, Purpose::Init, key, 0);
            for x in theta.row_mut(i) {
                *x = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Population::new(theta)
    }

    pub fn agents(&self) -> usize {
        self.theta.rows()
    }

    pub fn dim(&self) -> usize {
        self.theta.cols()
    }
}

/// Perturbation directions for one iteration; rows `2k` and `2k+1` are
/// negatives of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbations {
    pub epsilon: Matrix,
}

impl Perturbations {
    /// Mirror partner of row `i`.
    pub fn partner(i: usize) -> usize {
        i ^ 1
    }

    /// Candidate parameters `θ_i + σ ε_i`.
    pub fn candidates(&self, pop: &Population, sigma: f64) -> Result<Matrix> {
        pop.theta.same_shape(&self.epsilon, "population vs perturbations")?;
        let mut out = pop.theta.clone();
        for (c, e) in out.as_mut_slice().iter_mut().zip(self.epsilon.as_slice()) {
            *c += sigma * e;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub alpha: f64,
    pub sigma: f64,
    pub broadcast_probability: f64,
    pub weight_decay: f64,
    pub degree_normalize: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.01,
            sigma: 0.02,
            broadcast_probability: 0.8,
            weight_decay: 0.005,
            degree_normalize: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.broadcast_probability) {
            return Err(Error::param(
                "broadcast_probability",
                format!("must be in [0, 1], got {}", self.broadcast_probability),
            ));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay < 1.0) {
            return Err(Error::param(
                "weight_decay",
                format!("must be in [0, 1), got {}", self.weight_decay),
            ));
        }
        Ok(())
    }
}

/// Raw returns and their rank-shaped counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewards {
    pub raw: Vec<f64>,
    pub shaped: Vec<f64>,
}

impl Rewards {
    pub fn new(raw: Vec<f64>) -> Self {
        let shaped = shape_fitness(&raw);
        Rewards { raw, shaped }
    }
}

/// Draws `N/2` standard-normal rows for iteration `iteration` and mirrors
/// each into its partner row.
pub fn perturb(pop: &Population, sigma: f64, seed: u64) -> Result<Perturbations> {
    let n = pop.agents();
    if !n.is_multiple_of(2) {
        return Err(Error::Pairing(n));
    }
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let mut epsilon = Matrix::zeros(n, pop.dim());
    for pair in 0..n / 2 {
        let mut rng = rng::stream(seed, Purpose::Perturb, pair as u64, pop.iteration);
        for x in epsilon.row_mut(2 * pair) {
            *x = rng.sample(StandardNormal);
        }
        let (head, tail) = epsilon.as_mut_slice().split_at_mut((2 * pair + 1) * pop.dim());
        let first = &head[2 * pair * pop.dim()..];
        for (m, x) in tail[..pop.dim()].iter_mut().zip(first) {
            *m = -x;
        }
    }
    Ok(Perturbations { epsilon })
}

/// Centered ranks: `rank / (N − 1) − 0.5`, rank 0 for the worst return,
/// ties resolved by agent index.
pub fn shape_fitness(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut shaped = vec![0.0; n];
    for (rank, &agent) in order.iter().enumerate() {
        shaped[agent] = rank as f64 / (n - 1) as f64 - 0.5;
    }
    shaped
}

/// Index of the highest finite reward; the lowest index wins ties.
pub fn best_index(raw: &[f64]) -> Option<usize> {
    raw.iter()
        .enumerate()
        .filter(|(_, r)| !r.is_nan())
        .fold(None, |best: Option<(usize, f64)>, (i, &r)| match best {
            Some((_, b)) if b >= r => best,
            _ => Some((i, r)),
        })
        .map(|(i, _)| i)
}

/// Reward-weighted neighbor offsets:
/// `u_i = scale_i · Σ_{j ∈ N(i) ∪ {i}} w_j (c_j − θ_i)`.
pub(crate) fn neighborhood_update(
    pop: &Population,
    candidates: &Matrix,
    weights: &[f64],
    graph: &Graph,
    scale: impl Fn(usize, usize) -> f64,
) -> Matrix {
    let (n, d) = (pop.agents(), pop.dim());
    let mut out = Matrix::zeros(n, d);
    for i in 0..n {
        let theta_i = pop.theta.row(i);
        let mut acc = vec![0.0; d];
        let mut size = 0;
        for j in std::iter::once(i).chain(graph.neighbors(i)) {
            size += 1;
            let w = weights[j];
            for ((a, c), t) in acc.iter_mut().zip(candidates.row(j)).zip(theta_i) {
                *a += w * (c - t);
            }
        }
        let s = scale(i, size);
        for (o, a) in out.row_mut(i).iter_mut().zip(&acc) {
            *o = s * a;
        }
    }
    out
}

fn check_update_inputs(
    pop: &Population,
    perturbations: &Perturbations,
    shaped: &[f64],
    graph: &Graph,
) -> Result<()> {
    pop.theta.same_shape(&perturbations.epsilon, "population vs perturbations")?;
    if shaped.len() != pop.agents() {
        return Err(Error::Shape(format!(
            "{} rewards for {} agents",
            shaped.len(),
            pop.agents()
        )));
    }
    if graph.n() != pop.agents() {
        return Err(Error::Shape(format!(
            "graph has {} nodes for {} agents",
            graph.n(),
            pop.agents()
        )));
    }
    if let Some(i) = shaped.iter().position(|r| !r.is_finite()) {
        return Err(Error::Numeric(format!("reward of agent {i} is {}", shaped[i])));
    }
    Ok(())
}

/// Networked update for every agent. The population is not modified.
///
/// `u_i = α / (N σ²) · Σ_j â_ij s_j (θ_j + σ ε_j − θ_i)` where `â` is the
/// adjacency with a forced self-entry. With `degree_normalize`, `1/N` is
/// replaced by `1/|Â_i|`.
pub fn compute_update(
    pop: &Population,
    perturbations: &Perturbations,
    shaped: &[f64],
    graph: &Graph,
    hp: &Hyperparams,
) -> Result<Matrix> {
    check_update_inputs(pop, perturbations, shaped, graph)?;
    let candidates = perturbations.candidates(pop, hp.sigma)?;
    let n = pop.agents() as f64;
    let base = hp.alpha / (hp.sigma * hp.sigma);
    Ok(neighborhood_update(pop, &candidates, shaped, graph, |_, size| {
        if hp.degree_normalize {
            base / size as f64
        } else {
            base / n
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BroadcastOutcome {
    pub happened: bool,
    pub source: Option<usize>,
}

/// Draws `β ~ U(0, 1)`; if `β < p_b`, every agent takes the candidate
/// parameters of the agent with the highest raw reward.
pub fn apply_broadcast<R: Rng + ?Sized>(
    pop: &Population,
    candidates: &Matrix,
    raw: &[f64],
    p_b: f64,
    rng: &mut R,
) -> Result<(Population, BroadcastOutcome)> {
    pop.theta.same_shape(candidates, "population vs candidates")?;
    let beta: f64 = rng.random();
    let source = if beta < p_b { best_index(raw) } else { None };
    let Some(src) = source else {
        return Ok((
            pop.clone(),
            BroadcastOutcome {
                happened: false,
                source: None,
            },
        ));
    };
    let mut next = pop.clone();
    let best = candidates.row(src);
    for i in 0..next.agents() {
        next.theta.row_mut(i).copy_from_slice(best);
    }
    Ok((
        next,
        BroadcastOutcome {
            happened: true,
            source: Some(src),
        },
    ))
}

/// Everything recorded about one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub raw_rewards: Vec<f64>,
    pub best_raw_reward: f64,
    pub mean_raw_reward: f64,
    pub best_agent: usize,
    pub broadcast: BroadcastOutcome,
    /// Variance of the applied updates; `None` on broadcast iterations.
    pub update_variance: Option<f64>,
    pub bound: Option<BoundReport>,
}

/// Evaluates every candidate. Agents are independent, so this runs in
/// parallel; the result order is the agent order.
pub fn evaluate_candidates(objective: &Objective, candidates: &Matrix) -> Result<Vec<f64>> {
    (0..candidates.rows())
        .into_par_iter()
        .map(|i| objective.evaluate(candidates.row(i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOptions {
    /// When set, compute the variance bound report on update iterations if
    /// the population is at most this large.
    pub bound_cap: Option<usize>,
}

/// One full iteration. Returns the next population and the record.
pub fn step(
    pop: &Population,
    graph: &Graph,
    hp: &Hyperparams,
    objective: &Objective,
    seed: u64,
) -> Result<(Population, IterationRecord)> {
    step_with(pop, graph, hp, objective, seed, StepOptions::default())
}

pub fn step_with(
    pop: &Population,
    graph: &Graph,
    hp: &Hyperparams,
    objective: &Objective,
    seed: u64,
    options: StepOptions,
) -> Result<(Population, IterationRecord)> {
    if graph.n() != pop.agents() {
        return Err(Error::Shape(format!(
            "graph has {} nodes for {} agents",
            graph.n(),
            pop.agents()
        )));
    }
    let t = pop.iteration;
    let perturbations = perturb(pop, hp.sigma, seed)?;
    let candidates = perturbations.candidates(pop, hp.sigma)?;
    let raw = evaluate_candidates(objective, &candidates)?;
    let best_agent = best_index(&raw).ok_or_else(|| Error::Numeric("all rewards are NaN".into()))?;
    let best_raw_reward = raw[best_agent];
    let mean_raw_reward = raw.iter().sum::<f64>() / raw.len() as f64;

    let mut beta_rng = rng::stream(seed, Purpose::Broadcast, 0, t);
    let (mut next, broadcast) =
        apply_broadcast(pop, &candidates, &raw, hp.broadcast_probability, &mut beta_rng)?;

    let mut update_variance = None;
    let mut bound = None;
    if !broadcast.happened {
        let shaped = shape_fitness(&raw);
        let updates = compute_update(pop, &perturbations, &shaped, graph, hp)?;
        update_variance = Some(diagnostics::update_variance(&updates));
        if let Some(cap) = options.bound_cap {
            if pop.agents() <= cap && crate::topology::is_connected(graph) {
                bound = Some(diagnostics::theorem1_bound(
                    pop,
                    &perturbations,
                    &shaped,
                    graph,
                    hp.sigma,
                    cap,
                )?);
            }
        }
        let keep = 1.0 - hp.weight_decay;
        for (x, u) in next.theta.as_mut_slice().iter_mut().zip(updates.as_slice()) {
            *x = keep * (*x + u);
        }
        if let Some(i) = next.theta.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} diverged at iteration {t}")));
        }
    }
    next.iteration = t + 1;

    Ok((
        next,
        IterationRecord {
            iteration: t,
            raw_rewards: raw,
            best_raw_reward,
            mean_raw_reward,
            best_agent,
            broadcast,
            update_variance,
            bound,
        },
    ))
}
