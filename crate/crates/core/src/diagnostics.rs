//! Update-diversity variance and its upper bound in terms of the topology's
//! reachability and homogeneity.
//!
//! The bound is checked against the degree-normalized, unit-learning-rate
//! update
//!
//! ```text
//! u_i = 1/σ² · 1/|Â_i| · Σ_j â_ij s_j (θ_j + σ ε_j − θ_i)
//! ```
//!
//! with `â` the adjacency plus self-loops, which is the update the bound's
//! derivation expands. The right-hand side uses the simple graph's
//! reachability and homogeneity.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics;
use crate::optimizer::{self, Perturbations, Population};
use crate::rng::{self, Purpose};
use crate::topology::{self, Family, Graph, TopologySpec};

/// Default population cap for [`compute_f`].
pub const DEFAULT_F_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lhs_variance: f64,
    pub rhs_bound: f64,
    pub f_term: f64,
    pub g_term: f64,
    pub reach_term: f64,
    pub homog_term: f64,
    pub holds: bool,
}

/// Trace of the across-agent covariance of the update rows, with
/// population (1/N) normalization.
pub fn update_variance(updates: &Matrix) -> f64 {
    let n = updates.rows() as f64;
    if updates.rows() == 0 {
        return 0.0;
    }
    (0..updates.cols())
        .map(|c| {
            let mean = updates.iter_rows().map(|r| r[c]).sum::<f64>() / n;
            updates.iter_rows().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n
        })
        .sum()
}

/// `√(Σ_{j,k,m} ((c_j − θ_m)·(c_k − θ_m))²)` with `c_j = θ_j + σ ε_j`,
/// evaluated as the literal triple sum. Cost is `O(N³ d)`, hence the cap.
pub fn compute_f(pop: &Population, perturbations: &Perturbations, sigma: f64, cap: usize) -> Result<f64> {
    let n = pop.agents();
    if n > cap {
        return Err(Error::Resource {
            what: "f term",
            n,
            cap,
        });
    }
    let candidates = perturbations.candidates(pop, sigma)?;
    // per-anchor partial sums, added in a fixed order so the result does
    // not depend on the thread count
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|m| {
            let anchor = pop.theta.row(m);
            let offsets: Vec<Vec<f64>> = candidates
                .iter_rows()
                .map(|c| c.iter().zip(anchor).map(|(a, b)| a - b).collect())
                .collect();
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let dot: f64 = offsets[j].iter().zip(&offsets[k]).map(|(a, b)| a * b).sum();
                    s += dot * dot;
                }
            }
            s
        })
        .collect();
    Ok(partial.iter().sum::<f64>().sqrt())
}

/// `σ²/N · Σ_{i,j} ε_i·ε_j = σ²/N · ‖Σ_i ε_i‖²`.
pub fn compute_g(perturbations: &Perturbations, sigma: f64) -> f64 {
    let eps = &perturbations.epsilon;
    let n = eps.rows() as f64;
    let norm_sq: f64 = (0..eps.cols())
        .map(|c| eps.iter_rows().map(|r| r[c]).sum::<f64>().powi(2))
        .sum();
    sigma * sigma / n * norm_sq
}

/// The degree-normalized, `α = 1` update the bound is stated for.
pub fn proof_update(
    pop: &Population,
    perturbations: &Perturbations,
    shaped: &[f64],
    graph: &Graph,
    sigma: f64,
) -> Result<Matrix> {
    pop.theta.same_shape(&perturbations.epsilon, "population vs perturbations")?;
    if shaped.len() != pop.agents() || graph.n() != pop.agents() {
        return Err(Error::Shape("rewards, graph and population disagree in size".into()));
    }
    let candidates = perturbations.candidates(pop, sigma)?;
    let base = 1.0 / (sigma * sigma);
    Ok(optimizer::neighborhood_update(pop, &candidates, shaped, graph, |_, size| {
        base / size as f64
    }))
}

/// Relative slack allowed when comparing the two sides.
const SLACK: f64 = 1e-9;

/// Evaluates both sides of the variance bound on one instance.
///
/// Requires normalized rewards (`min = −max`), which rank shaping
/// guarantees.
pub fn theorem1_bound(
    pop: &Population,
    perturbations: &Perturbations,
    shaped: &[f64],
    graph: &Graph,
    sigma: f64,
    f_cap: usize,
) -> Result<BoundReport> {
    let max = shaped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = shaped.iter().copied().fold(f64::INFINITY, f64::min);
    if !((min + max).abs() <= 1e-12 * max.abs().max(1.0)) {
        return Err(Error::Premise(format!(
            "rewards must satisfy min = -max, got min {min}, max {max}"
        )));
    }
    let reach_term = metrics::reachability(graph)?;
    let homog_term = metrics::homogeneity(graph)?;
    let f_term = compute_f(pop, perturbations, sigma, f_cap)?;
    let g_term = compute_g(perturbations, sigma);
    let updates = proof_update(pop, perturbations, shaped, graph, sigma)?;
    let lhs_variance = update_variance(&updates);
    let n = pop.agents() as f64;
    let rhs_bound = max * max / (n * sigma.powi(4)) * (reach_term * f_term - homog_term * g_term);
    let holds = lhs_variance <= rhs_bound + SLACK * rhs_bound.abs().max(lhs_variance.abs());
    Ok(BoundReport {
        lhs_variance,
        rhs_bound,
        f_term,
        g_term,
        reach_term,
        homog_term,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub instances: usize,
    pub seed: u64,
    pub min_agents: usize,
    pub max_agents: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    /// Mirrored perturbation pairs (as the optimizer draws them). When
    /// false, every row is an independent draw.
    pub mirrored: bool,
    pub f_cap: usize,
    pub max_attempts: u32,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            instances: 1000,
            seed: 0,
            min_agents: 6,
            max_agents: 40,
            min_dim: 1,
            max_dim: 8,
            mirrored: true,
            f_cap: DEFAULT_F_CAP,
            max_attempts: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub instance: usize,
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub report: BoundReport,
}

/// One random bound instance: family cycles with the instance index, the
/// rest is drawn from the instance's own stream.
pub fn sweep_instance(index: usize, opts: &SweepOptions) -> Result<SweepRow> {
    if opts.min_agents < 2 || opts.min_agents > opts.max_agents || opts.min_dim < 1 || opts.min_dim > opts.max_dim {
        return Err(Error::param("sweep", "inconsistent agent or dimension range"));
    }
    let mut rng = rng::stream(opts.seed, Purpose::Instance, index as u64, 0);
    let family = Family::GENERATED[index % Family::GENERATED.len()];
    let lo = opts.min_agents.div_ceil(2);
    let hi = opts.max_agents / 2;
    if lo > hi {
        return Err(Error::param("sweep", "agent range holds no even count"));
    }
    let n = 2 * rng.random_range(lo..=hi);
    let d = rng.random_range(opts.min_dim..=opts.max_dim);
    let density = rng.random_range(0.2..0.9);
    let spec = match family {
        Family::ErdosRenyi => TopologySpec::ErdosRenyi { p: density },
        Family::SmallWorld => {
            let k = match TopologySpec::matched(family, n, density)? {
                TopologySpec::WattsStrogatz { k, .. } => k,
                _ => unreachable!(),
            };
            TopologySpec::WattsStrogatz {
                k,
                beta: rng.random_range(0.0..=1.0),
            }
        }
        other => TopologySpec::matched(other, n, density)?,
    };
    let graph = topology::sample_connected(spec, n, rng.random(), opts.max_attempts)?;

    let scale: f64 = rng.random_range(0.0..2.0);
    let sigma: f64 = rng.random_range(0.01..1.0);
    let mut theta = Matrix::zeros(n, d);
    for x in theta.as_mut_slice() {
        *x = scale * rng.sample::<f64, _>(StandardNormal);
    }
    let pop = Population::new(theta)?;
    let perturbations = if opts.mirrored {
        optimizer::perturb(&pop, sigma, rng.random())?
    } else {
        let mut eps = Matrix::zeros(n, d);
        for x in eps.as_mut_slice() {
            *x = rng.sample(StandardNormal);
        }
        Perturbations { epsilon: eps }
    };
    let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let shaped = optimizer::shape_fitness(&raw);
    let report = theorem1_bound(&pop, &perturbations, &shaped, &graph, sigma, opts.f_cap)?;
    Ok(SweepRow {
        instance: index,
        family,
        n,
        d,
        report,
    })
}

pub fn bound_sweep(opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    (0..opts.instances)
        .into_par_iter()
        .map(|i| sweep_instance(i, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::generate_complete;

    fn perturbations(rows: &[Vec<f64>]) -> Perturbations {
        Perturbations {
            epsilon: Matrix::from_rows(rows).unwrap(),
        }
    }

    /// Same quantity through per-anchor Gram matrices:
    /// Σ_m ‖D_mᵀ D_m‖_F² equals Σ_m Σ_jk (d_jm·d_km)².
    fn f_via_gram(pop: &Population, p: &Perturbations, sigma: f64) -> f64 {
        let c = p.candidates(pop, sigma).unwrap();
        let (n, d) = (pop.agents(), pop.dim());
        let mut total = 0.0;
        for m in 0..n {
            let mut gram = vec![0.0; d * d];
            for j in 0..n {
                let off: Vec<f64> = (0..d).map(|x| c.row(j)[x] - pop.theta.row(m)[x]).collect();
                for a in 0..d {
                    for b in 0..d {
                        gram[a * d + b] += off[a] * off[b];
                    }
                }
            }
            total += gram.iter().map(|v| v * v).sum::<f64>();
        }
        total.sqrt()
    }

    #[test]
    fn variance_examples() {
        let same = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(update_variance(&same), 0.0);
        let pm = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(update_variance(&pm), 1.0);
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 2.0], vec![-4.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![-4.0, 1.0], vec![1.0, 0.0], vec![3.0, 2.0]]).unwrap();
        assert!((update_variance(&a) - update_variance(&b)).abs() < 1e-12);
    }

    #[test]
    fn f_examples() {
        let pop = Population::new(Matrix::zeros(2, 1)).unwrap();
        let zero = perturbations(&[vec![0.0], vec![0.0]]);
        assert_eq!(compute_f(&pop, &zero, 1.0, 64).unwrap(), 0.0);
        let pm = perturbations(&[vec![1.0], vec![-1.0]]);
        assert!((compute_f(&pop, &pm, 1.0, 64).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        let big = Population::new(Matrix::zeros(6, 1)).unwrap();
        let p6 = perturbations(&vec![vec![0.0]; 6]);
        assert!(matches!(compute_f(&big, &p6, 1.0, 4), Err(Error::Resource { n: 6, cap: 4, .. })));
    }

    #[test]
    fn f_scales_quadratically() {
        let pop = Population::init(6, 3, 0.7, false, 4).unwrap();
        let p = optimizer::perturb(&pop, 0.3, 1).unwrap();
        let base = compute_f(&pop, &p, 0.3, 64).unwrap();
        let mut scaled = pop.clone();
        for x in scaled.theta.as_mut_slice() {
            *x *= 2.5;
        }
        let f2 = compute_f(&scaled, &p, 0.3 * 2.5, 64).unwrap();
        assert!((f2 - 2.5 * 2.5 * base).abs() < 1e-9 * f2);
    }

    #[test]
    fn f_matches_gram_form() {
        for seed in 0..5 {
            let pop = Population::init(8, 4, 1.0, false, seed).unwrap();
            let p = optimizer::perturb(&pop, 0.5, seed).unwrap();
            let direct = compute_f(&pop, &p, 0.5, 64).unwrap();
            assert!((direct - f_via_gram(&pop, &p, 0.5)).abs() < 1e-9 * direct);
        }
    }

    #[test]
    fn g_examples() {
        let pm = perturbations(&[vec![1.0, 3.0], vec![-1.0, -3.0]]);
        assert_eq!(compute_g(&pm, 0.4), 0.0);
        let same = perturbations(&[vec![1.0], vec![1.0]]);
        assert_eq!(compute_g(&same, 1.0), 2.0);
        let pop = Population::init(10, 5, 1.0, false, 0).unwrap();
        let mirrored = optimizer::perturb(&pop, 0.2, 3).unwrap();
        assert!(compute_g(&mirrored, 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_instance() {
        let pop = Population::new(Matrix::from_rows(&vec![vec![0.3, 0.1]; 4]).unwrap()).unwrap();
        let zero = perturbations(&vec![vec![0.0, 0.0]; 4]);
        let g = generate_complete(4).unwrap();
        let shaped = optimizer::shape_fitness(&[1.0, 2.0, 3.0, 4.0]);
        let r = theorem1_bound(&pop, &zero, &shaped, &g, 0.1, 64).unwrap();
        assert_eq!(r.lhs_variance, 0.0);
        assert_eq!(r.rhs_bound, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn premise_is_enforced() {
        let pop = Population::init(4, 2, 1.0, false, 0).unwrap();
        let p = optimizer::perturb(&pop, 0.1, 0).unwrap();
        let g = generate_complete(4).unwrap();
        let err = theorem1_bound(&pop, &p, &[0.0, 1.0, 2.0, 3.0], &g, 0.1, 64).unwrap_err();
        assert!(matches!(err, Error::Premise(_)));
    }

    #[test]
    fn mirrored_instances_hold() {
        let opts = SweepOptions {
            instances: 40,
            seed: 11,
            ..SweepOptions::default()
        };
        for row in bound_sweep(&opts).unwrap() {
            assert!(row.report.g_term.abs() < 1e-9);
            assert!(row.report.holds, "{row:?}");
            assert!(row.report.f_term >= 0.0);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let opts = SweepOptions {
            instances: 8,
            ..SweepOptions::default()
        };
        assert_eq!(bound_sweep(&opts).unwrap(), bound_sweep(&opts).unwrap());
    }
}
