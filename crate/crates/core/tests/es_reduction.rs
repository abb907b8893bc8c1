//! On a complete graph with identical starting points and no broadcast,
//! every agent must follow plain centralized ES exactly. The reference
//! below is written from scratch: its own sphere, its own centered ranks,
//! its own update loop. Only the noise stream is shared.

use netes::optimizer::{self, Hyperparams, Population};
use netes::rng::{self, Purpose};
use netes::topology::generate_complete;
use netes::Objective;
use netes::ObjectiveKind;
use rand::Rng;
use rand_distr::StandardNormal;

struct CentralEs {
    theta: Vec<f64>,
    alpha: f64,
    sigma: f64,
    n: usize,
    seed: u64,
    t: u64,
}

impl CentralEs {
    fn noise(&self) -> Vec<Vec<f64>> {
        let d = self.theta.len();
        let mut eps = Vec::with_capacity(self.n);
        for k in 0..self.n / 2 {
            let mut r = rng::stream(self.seed, Purpose::Perturb, k as u64, self.t);
            let z: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
            eps.push(z.iter().map(|x| -x).collect());
            eps.insert(eps.len() - 1, z);
        }
        eps
    }

    fn step(&mut self) {
        let eps = self.noise();
        let rewards: Vec<f64> = eps
            .iter()
            .map(|e| {
                -self
                    .theta
                    .iter()
                    .zip(e)
                    .map(|(t, e)| (t + self.sigma * e).powi(2))
                    .sum::<f64>()
            })
            .collect();
        // rank 0 for the worst, ties by index
        let mut shaped = vec![0.0; self.n];
        for i in 0..self.n {
            let below = (0..self.n)
                .filter(|&j| rewards[j] < rewards[i] || (rewards[j] == rewards[i] && j < i))
                .count();
            shaped[i] = below as f64 / (self.n - 1) as f64 - 0.5;
        }
        let coef = self.alpha / (self.n as f64 * self.sigma);
        for (k, th) in self.theta.iter_mut().enumerate() {
            let g: f64 = (0..self.n).map(|j| shaped[j] * eps[j][k]).sum();
            *th += coef * g;
        }
        self.t += 1;
    }
}

fn run(n: usize, d: usize, seed: u64, iterations: usize, degree_normalize: bool) -> f64 {
    let objective = Objective::synthetic(ObjectiveKind::Sphere, d).unwrap();
    let graph = generate_complete(n).unwrap();
    let hp = Hyperparams {
        alpha: 0.05,
        sigma: 0.1,
        broadcast_probability: 0.0,
        weight_decay: 0.0,
        degree_normalize,
    };
    let mut pop = Population::init(n, d, 1.0, true, seed).unwrap();
    let mut oracle = CentralEs {
        theta: pop.theta.row(0).to_vec(),
        alpha: hp.alpha,
        sigma: hp.sigma,
        n,
        seed,
        t: 0,
    };
    let mut worst: f64 = 0.0;
    for _ in 0..iterations {
        pop = optimizer::step(&pop, &graph, &hp, &objective, seed).unwrap().0;
        oracle.step();
        for row in pop.theta.iter_rows() {
            for (a, b) in row.iter().zip(&oracle.theta) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

#[test]
fn complete_graph_matches_centralized_es() {
    let dev = run(20, 8, 7, 100, false);
    assert!(dev < 1e-9, "max deviation {dev:e}");
}

#[test]
fn degree_normalization_is_a_no_op_on_the_complete_graph() {
    let dev = run(12, 5, 3, 50, true);
    assert!(dev < 1e-9, "max deviation {dev:e}");
}

#[test]
fn reduction_holds_across_seeds() {
    for seed in 0..5 {
        let dev = run(8, 3, seed, 30, false);
        assert!(dev < 1e-9, "seed {seed}: {dev:e}");
    }
}
