//! Reward functions. Everything is maximized: synthetic test functions
//! return `-f(θ)`, the point-mass task returns the episode return of an MLP
//! policy whose weights are `θ`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Sphere,
    Rastrigin,
    Ackley,
    Rosenbrock,
    PointMass,
}

impl ObjectiveKind {
    pub const VALID_NAMES: &'static str = "sphere, rastrigin, ackley, rosenbrock, point_mass";

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Sphere => "sphere",
            ObjectiveKind::Rastrigin => "rastrigin",
            ObjectiveKind::Ackley => "ackley",
            ObjectiveKind::Rosenbrock => "rosenbrock",
            ObjectiveKind::PointMass => "point_mass",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sphere" => ObjectiveKind::Sphere,
            "rastrigin" => ObjectiveKind::Rastrigin,
            "ackley" => ObjectiveKind::Ackley,
            "rosenbrock" => ObjectiveKind::Rosenbrock,
            "point_mass" | "pointmass" => ObjectiveKind::PointMass,
            other => {
                return Err(Error::param(
                    "objective",
                    format!("unknown objective `{other}`; valid kinds: {}", Self::VALID_NAMES),
                ))
            }
        })
    }
}

/// Feed-forward network with tanh hidden layers and a linear output layer.
/// Parameters are laid out layer by layer, each layer as its row-major
/// `out × in` weight matrix followed by its bias vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpPolicy {
    layer_sizes: Vec<usize>,
}

impl MlpPolicy {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::param(
                "layer_sizes",
                format!("need at least two non-zero layer sizes, got {layer_sizes:?}"),
            ));
        }
        Ok(MlpPolicy { layer_sizes })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn forward(&self, params: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "policy expects {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        if obs.len() != self.layer_sizes[0] {
            return Err(Error::Shape(format!(
                "policy expects observation of length {}, got {}",
                self.layer_sizes[0],
                obs.len()
            )));
        }
        let layers = self.layer_sizes.len() - 1;
        let mut x = obs.to_vec();
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &params[offset..offset + fan_in * fan_out];
            let bias = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            x = (0..fan_out)
                .map(|o| {
                    let row = &weights[o * fan_in..(o + 1) * fan_in];
                    let z = bias[o] + row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                    if l + 1 < layers {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
        }
        Ok(x)
    }
}

/// 2-D point mass pushed by a clipped force toward a goal. Observation is
/// `(position − goal, velocity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub episode_length: usize,
    pub dt: f64,
    pub friction: f64,
    pub action_clip: f64,
}

impl PointMass {
    pub const OBS_DIM: usize = 4;
    pub const ACT_DIM: usize = 2;

    /// Starts at the origin at rest; the goal is uniform in `[-1, 1]²`,
    /// drawn from `task_seed`.
    pub fn from_seed(task_seed: u64, episode_length: usize) -> Self {
        let mut rng = rng::stream(task_seed, Purpose::Instance, u64::MAX, 0);
        let goal = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        PointMass {
            start: [0.0, 0.0],
            goal,
            episode_length,
            dt: 0.05,
            friction: 0.1,
            action_clip: 1.0,
        }
    }

    pub fn rollout(&self, policy: &MlpPolicy, params: &[f64]) -> Result<f64> {
        let sizes = policy.layer_sizes();
        if sizes[0] != Self::OBS_DIM || sizes[sizes.len() - 1] != Self::ACT_DIM {
            return Err(Error::Shape(format!(
                "point mass needs a {}-in/{}-out policy, got {sizes:?}",
                Self::OBS_DIM,
                Self::ACT_DIM
            )));
        }
        let mut pos = self.start;
        let mut vel = [0.0; 2];
        let mut total = 0.0;
        for _ in 0..self.episode_length {
            let obs = [pos[0] - self.goal[0], pos[1] - self.goal[1], vel[0], vel[1]];
            let act = policy.forward(params, &obs)?;
            for a in 0..2 {
                let force = act[a].clamp(-self.action_clip, self.action_clip);
                pos[a] += vel[a] * self.dt;
                vel[a] += force * self.dt - self.friction * vel[a];
            }
            let dx = pos[0] - self.goal[0];
            let dy = pos[1] - self.goal[1];
            total -= (dx * dx + dy * dy).sqrt();
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Sphere { dim: usize },
    Rastrigin { dim: usize },
    Ackley { dim: usize },
    Rosenbrock { dim: usize },
    PointMass {
        task: PointMass,
        policy: MlpPolicy,
        task_seed: u64,
    },
}

pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_EPISODE_LENGTH: usize = 100;

impl Objective {
    pub fn synthetic(kind: ObjectiveKind, dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(match kind {
            ObjectiveKind::Sphere => Objective::Sphere { dim },
            ObjectiveKind::Rastrigin => Objective::Rastrigin { dim },
            ObjectiveKind::Ackley => Objective::Ackley { dim },
            ObjectiveKind::Rosenbrock => Objective::Rosenbrock { dim },
            ObjectiveKind::PointMass => {
                return Err(Error::param("kind", "use Objective::point_mass for the control task"))
            }
        })
    }

    /// Point-mass task with a `[4, hidden, hidden, 2]` policy.
    pub fn point_mass(hidden: usize, episode_length: usize, task_seed: u64) -> Result<Self> {
        let policy = MlpPolicy::new(vec![PointMass::OBS_DIM, hidden, hidden, PointMass::ACT_DIM])?;
        Ok(Objective::PointMass {
            task: PointMass::from_seed(task_seed, episode_length),
            policy,
            task_seed,
        })
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self {
            Objective::Sphere { .. } => ObjectiveKind::Sphere,
            Objective::Rastrigin { .. } => ObjectiveKind::Rastrigin,
            Objective::Ackley { .. } => ObjectiveKind::Ackley,
            Objective::Rosenbrock { .. } => ObjectiveKind::Rosenbrock,
            Objective::PointMass { .. } => ObjectiveKind::PointMass,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Sphere { dim }
            | Objective::Rastrigin { dim }
            | Objective::Ackley { dim }
            | Objective::Rosenbrock { dim } => *dim,
            Objective::PointMass { policy, .. } => policy.param_count(),
        }
    }

    /// Location of the global maximum for the synthetic functions.
    pub fn optimum(&self) -> Option<Vec<f64>> {
        match self {
            Objective::Sphere { dim } | Objective::Rastrigin { dim } | Objective::Ackley { dim } => {
                Some(vec![0.0; *dim])
            }
            Objective::Rosenbrock { dim } => Some(vec![1.0; *dim]),
            Objective::PointMass { .. } => None,
        }
    }

    /// All built-in objectives are noise-free.
    pub fn is_deterministic(&self) -> bool {
        true
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::Shape(format!(
                "objective expects {} parameters, got {}",
                self.dim(),
                theta.len()
            )));
        }
        if let Some(i) = theta.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} is {}", theta[i])));
        }
        let reward = match self {
            Objective::Sphere { .. } => -theta.iter().map(|x| x * x).sum::<f64>(),
            Objective::Rastrigin { dim } => {
                let s: f64 = theta.iter().map(|x| x * x - 10.0 * (2.0 * PI * x).cos()).sum();
                -(10.0 * *dim as f64 + s)
            }
            Objective::Ackley { dim } => {
                let d = *dim as f64;
                let sq = theta.iter().map(|x| x * x).sum::<f64>() / d;
                let cs = theta.iter().map(|x| (2.0 * PI * x).cos()).sum::<f64>() / d;
                let f = 20.0 * (1.0 - (-0.2 * sq.sqrt()).exp()) + (E - cs.exp());
                -f.max(0.0)
            }
            Objective::Rosenbrock { .. } => -theta
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum::<f64>(),
            Objective::PointMass { task, policy, .. } => task.rollout(policy, theta)?,
        };
        if !reward.is_finite() {
            return Err(Error::Numeric(format!("objective returned {reward}")));
        }
        Ok(reward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_are_exactly_zero() {
        for kind in [
            ObjectiveKind::Sphere,
            ObjectiveKind::Rastrigin,
            ObjectiveKind::Ackley,
            ObjectiveKind::Rosenbrock,
        ] {
            for dim in [1, 2, 7, 20] {
                let obj = Objective::synthetic(kind, dim).unwrap();
                let opt = obj.optimum().unwrap();
                assert_eq!(obj.evaluate(&opt).unwrap(), 0.0, "{kind} d={dim}");
            }
        }
    }

    #[test]
    fn rastrigin_at_ones() {
        let obj = Objective::synthetic(ObjectiveKind::Rastrigin, 2).unwrap();
        assert!((obj.evaluate(&[1.0, 1.0]).unwrap() + 2.0).abs() < 1e-12);
        assert!((obj.evaluate(&[-1.0, 1.0]).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_values_off_optimum() {
        let sphere = Objective::synthetic(ObjectiveKind::Sphere, 3).unwrap();
        assert_eq!(sphere.evaluate(&[1.0, 2.0, 2.0]).unwrap(), -9.0);
        let rosen = Objective::synthetic(ObjectiveKind::Rosenbrock, 2).unwrap();
        assert_eq!(rosen.evaluate(&[0.0, 0.0]).unwrap(), -1.0);
        let ackley = Objective::synthetic(ObjectiveKind::Ackley, 2).unwrap();
        assert!(ackley.evaluate(&[1.0, 1.0]).unwrap() < -3.0);
    }

    #[test]
    fn rejects_bad_input() {
        let obj = Objective::synthetic(ObjectiveKind::Sphere, 2).unwrap();
        assert!(matches!(obj.evaluate(&[f64::NAN, 0.0]), Err(Error::Numeric(_))));
        assert!(matches!(obj.evaluate(&[0.0]), Err(Error::Shape(_))));
        assert!(Objective::synthetic(ObjectiveKind::Sphere, 0).is_err());
        assert!("hexagon".parse::<ObjectiveKind>().unwrap_err().to_string().contains("rastrigin"));
    }

    #[test]
    fn mlp_zero_weights_give_zero_action() {
        let p = MlpPolicy::new(vec![4, 16, 16, 2]).unwrap();
        assert_eq!(p.param_count(), 4 * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
        let params = vec![0.0; p.param_count()];
        assert_eq!(p.forward(&params, &[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn mlp_identity_layer() {
        let p = MlpPolicy::new(vec![3, 3]).unwrap();
        let mut params = vec![0.0; 12];
        for i in 0..3 {
            params[i * 3 + i] = 1.0;
        }
        assert_eq!(p.forward(&params, &[0.5, -7.0, 2.0]).unwrap(), vec![0.5, -7.0, 2.0]);
    }

    #[test]
    fn mlp_hidden_is_bounded_and_output_linear() {
        // one hidden unit with a huge weight, output reads it with weight 1
        let p = MlpPolicy::new(vec![1, 1, 1]).unwrap();
        let params = [1e6, 0.0, 1.0, 0.0];
        let out = p.forward(&params, &[3.0]).unwrap()[0];
        assert!(out > 0.999 && out <= 1.0);
        let params = [1e6, 0.0, 5.0, 0.0];
        assert!(p.forward(&params, &[3.0]).unwrap()[0] > 4.99);
    }

    #[test]
    fn mlp_shape_errors() {
        let p = MlpPolicy::new(vec![2, 2]).unwrap();
        assert!(p.forward(&[0.0; 6], &[1.0]).is_err());
        assert!(p.forward(&[0.0; 5], &[1.0, 2.0]).is_err());
        assert!(MlpPolicy::new(vec![3]).is_err());
    }

    fn zero_task(start: [f64; 2], goal: [f64; 2]) -> PointMass {
        PointMass {
            start,
            goal,
            episode_length: 100,
            dt: 0.05,
            friction: 0.1,
            action_clip: 1.0,
        }
    }

    #[test]
    fn point_mass_zero_policy() {
        let policy = MlpPolicy::new(vec![4, 16, 16, 2]).unwrap();
        let zeros = vec![0.0; policy.param_count()];
        assert_eq!(zero_task([0.0, 0.0], [0.0, 0.0]).rollout(&policy, &zeros).unwrap(), 0.0);
        let r = zero_task([1.0, 0.0], [0.0, 0.0]).rollout(&policy, &zeros).unwrap();
        assert_eq!(r, -100.0);
    }

    #[test]
    fn point_mass_constant_push_moves_toward_goal() {
        // linear policy with bias +1 on x: accelerates right toward goal (1, 0)
        let policy = MlpPolicy::new(vec![4, 2]).unwrap();
        let mut push = vec![0.0; policy.param_count()];
        push[8] = 1.0;
        let zeros = vec![0.0; policy.param_count()];
        let task = zero_task([0.0, 0.0], [1.0, 0.0]);
        assert!(task.rollout(&policy, &push).unwrap() > task.rollout(&policy, &zeros).unwrap());
    }

    #[test]
    fn point_mass_objective_is_deterministic() {
        let obj = Objective::point_mass(8, 50, 3).unwrap();
        let theta: Vec<f64> = (0..obj.dim()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 10.0).collect();
        assert_eq!(obj.evaluate(&theta).unwrap(), obj.evaluate(&theta).unwrap());
        let zero = vec![0.0; obj.dim()];
        let Objective::PointMass { task, .. } = &obj else { unreachable!() };
        let dist = (task.goal[0].powi(2) + task.goal[1].powi(2)).sqrt();
        assert!((obj.evaluate(&zero).unwrap() + 50.0 * dist).abs() < 1e-9);
        assert_eq!(Objective::point_mass(8, 50, 3).unwrap(), obj);
    }
}
