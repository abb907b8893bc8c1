//! Reachability and homogeneity of a topology, plus the large-graph
//! approximations for Erdős–Rényi graphs.
//!
//! All metrics are computed on the simple graph (zero diagonal).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::topology::{self, degree_stats, Family, Graph, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyMetrics {
    pub reachability: f64,
    pub homogeneity: f64,
    pub n: usize,
    pub density: f64,
}

fn min_max_degree(g: &Graph) -> Result<(usize, usize)> {
    let stats = degree_stats(g);
    if stats.min_degree == 0 {
        return Err(Error::UndefinedMetric(
            "graph has an isolated node (minimum degree 0)".into(),
        ));
    }
    Ok((stats.min_degree, stats.max_degree))
}

/// `‖A²‖_F`, summing squared walk counts over all node pairs.
pub fn frobenius_of_square(g: &Graph) -> f64 {
    let n = g.n();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let diag = g.degree(j) as f64;
            let off: f64 = ((j + 1)..n)
                .map(|k| {
                    let c = g.common_neighbors(j, k) as f64;
                    c * c
                })
                .sum();
            diag * diag + 2.0 * off
        })
        .collect();
    rows.iter().sum::<f64>().sqrt()
}

/// Square root of the total number of length-2 walks, `√(Σ_jk (A²)_jk)`.
pub fn walk_count_norm(g: &Graph) -> f64 {
    let total: usize = g.degrees().iter().map(|d| d * d).sum();
    (total as f64).sqrt()
}

/// `‖A²‖_F / (min degree)²`.
pub fn reachability(g: &Graph) -> Result<f64> {
    let (kmin, _) = min_max_degree(g)?;
    Ok(frobenius_of_square(g) / (kmin * kmin) as f64)
}

/// Squared-ratio variant `(‖A²‖_F / min degree)²`.
pub fn reachability_squared_ratio(g: &Graph) -> Result<f64> {
    let (kmin, _) = min_max_degree(g)?;
    let r = frobenius_of_square(g) / kmin as f64;
    Ok(r * r)
}

/// Walk-count variant `√(Σ_jk (A²)_jk) / (min degree)²`. This is the
/// quantity the ER approximation below actually estimates; it is always
/// bounded above by [`reachability`].
pub fn walk_reachability(g: &Graph) -> Result<f64> {
    let (kmin, _) = min_max_degree(g)?;
    Ok(walk_count_norm(g) / (kmin * kmin) as f64)
}

/// `(min degree / max degree)²`.
pub fn homogeneity(g: &Graph) -> Result<f64> {
    let (kmin, kmax) = min_max_degree(g)?;
    let r = kmin as f64 / kmax as f64;
    Ok(r * r)
}

pub fn density(g: &Graph) -> f64 {
    let n = g.n() as f64;
    g.edge_count() as f64 / (n * (n - 1.0) / 2.0)
}

pub fn topology_metrics(g: &Graph) -> Result<TopologyMetrics> {
    Ok(TopologyMetrics {
        reachability: reachability(g)?,
        homogeneity: homogeneity(g)?,
        n: g.n(),
        density: density(g),
    })
}

fn check_np(n: usize, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("need at least 2 nodes, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("must be in (0, 1], got {p}")));
    }
    Ok(())
}

/// Mean-minus/plus-two-sigma estimates of the extreme degrees of an ER graph.
fn degree_extremes(n: usize, p: f64) -> (f64, f64) {
    let mean = p * (n - 1) as f64;
    let spread = 2.0 * (mean * (1.0 - p)).sqrt();
    (mean - spread, mean + spread)
}

/// `√(p²n³) / [p(n−1) − 2√(p(n−1)(1−p))]²`.
pub fn approx_reachability_er(n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    let (kmin, _) = degree_extremes(n, p);
    if kmin <= 0.0 {
        return Err(Error::ApproximationDomain(format!(
            "estimated minimum degree {kmin:.3} is not positive for n={n}, p={p}"
        )));
    }
    let n = n as f64;
    Ok((p * p * n.powi(3)).sqrt() / (kmin * kmin))
}

/// Large-n shorthand `1 / (p √n)`.
pub fn approx_reachability_er_large_n(n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    Ok(1.0 / (p * (n as f64).sqrt()))
}

/// The alternative closed form `(pN)^(-1/2)`; differs from the large-n
/// shorthand by a factor `√p`.
pub fn approx_reachability_er_lemma(n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    Ok((p * n as f64).powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogeneityForm {
    /// `((k̂min) / (k̂max))²` with the two-sigma degree estimates.
    Ratio,
    /// `1 − 8√((1−p)/(np))`.
    Shorthand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approximation {
    pub value: f64,
    /// Set when the raw expression went negative and was clamped to 0.
    pub clamped: bool,
}

pub fn approx_homogeneity_er(n: usize, p: f64, form: HomogeneityForm) -> Result<Approximation> {
    check_np(n, p)?;
    let raw = match form {
        HomogeneityForm::Ratio => {
            let (lo, hi) = degree_extremes(n, p);
            if lo < 0.0 {
                return Ok(Approximation {
                    value: 0.0,
                    clamped: true,
                });
            }
            let r = lo / hi;
            r * r
        }
        HomogeneityForm::Shorthand => 1.0 - 8.0 * ((1.0 - p) / (n as f64 * p)).sqrt(),
    };
    Ok(Approximation {
        value: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub family: Family,
    pub seed: u64,
    pub n: usize,
    pub density: f64,
    pub reachability: f64,
    pub homogeneity: f64,
}

/// Metric pairs for `samples_per_family` connected graphs of each generated
/// family at matched density. Sample `s` of every family uses base seed
/// `seed + s * max_attempts`; the recorded seed is the one that produced a
/// connected graph.
pub fn family_scatter(
    n: usize,
    density: f64,
    samples_per_family: usize,
    seed: u64,
    max_attempts: u32,
) -> Result<Vec<ScatterPoint>> {
    if samples_per_family < 1 {
        return Err(Error::param("samples_per_family", "must be at least 1"));
    }
    let mut jobs = Vec::new();
    for family in Family::GENERATED {
        let spec = TopologySpec::matched(family, n, density)?;
        for s in 0..samples_per_family {
            jobs.push((spec, seed.wrapping_add(s as u64 * max_attempts as u64)));
        }
    }
    jobs.into_par_iter()
        .map(|(spec, base)| {
            let g = topology::sample_connected(spec, n, base, max_attempts)?;
            let m = topology_metrics(&g)?;
            Ok(ScatterPoint {
                family: g.family(),
                seed: g.seed(),
                n,
                density: m.density,
                reachability: m.reachability,
                homogeneity: m.homogeneity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_complete, generate_edgeless, generate_watts_strogatz};

    /// Plain O(n³) dense product, independent of the bitset path.
    fn dense_frobenius_of_square(g: &Graph) -> f64 {
        let a = g.to_dense();
        let n = a.len();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| a[i][k] * a[k][j]).sum();
                sum += v * v;
            }
        }
        sum.sqrt()
    }

    fn star(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (0, i)), Family::Custom, 0).unwrap()
    }

    #[test]
    fn complete_three_by_hand() {
        let g = generate_complete(3).unwrap();
        assert!((frobenius_of_square(&g) - 18f64.sqrt()).abs() < 1e-12);
        assert!((reachability(&g).unwrap() - 18f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn complete_closed_form() {
        for n in [4usize, 10, 100] {
            let g = generate_complete(n).unwrap();
            let nf = n as f64;
            let closed = (nf * (nf - 1.0).powi(2) + nf * (nf - 1.0) * (nf - 2.0).powi(2)).sqrt()
                / (nf - 1.0).powi(2);
            assert!((reachability(&g).unwrap() - closed).abs() < 1e-12);
            assert!((frobenius_of_square(&g) - dense_frobenius_of_square(&g)).abs() < 1e-9);
        }
        // sqrt(100*99^2 + 9900*98^2) / 99^2 = 9801.005.. / 9801
        let r100 = reachability(&generate_complete(100).unwrap()).unwrap();
        assert!((r100 - 1.0000005).abs() < 1e-7, "{r100}");
    }

    #[test]
    fn bitset_matches_dense_on_random_graphs() {
        for seed in 0..5 {
            let g = topology::generate_erdos_renyi(70, 0.2, seed).unwrap();
            assert!((frobenius_of_square(&g) - dense_frobenius_of_square(&g)).abs() < 1e-9);
        }
    }

    #[test]
    fn homogeneity_examples() {
        assert_eq!(homogeneity(&generate_complete(9).unwrap()).unwrap(), 1.0);
        assert_eq!(homogeneity(&star(5)).unwrap(), 0.0625);
        let ring = generate_watts_strogatz(10, 4, 0.0, 0).unwrap();
        assert_eq!(homogeneity(&ring).unwrap(), 1.0);
    }

    #[test]
    fn disconnected_is_undefined() {
        let g = generate_edgeless(4).unwrap();
        assert!(matches!(reachability(&g), Err(Error::UndefinedMetric(_))));
        assert!(matches!(homogeneity(&g), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn variants_relate() {
        let g = topology::generate_erdos_renyi(50, 0.3, 1).unwrap();
        let r = reachability(&g).unwrap();
        let kmin = degree_stats(&g).min_degree as f64;
        assert!((reachability_squared_ratio(&g).unwrap() - (r * kmin).powi(2)).abs() < 1e-6 * r * r * kmin.powi(2));
        assert!(walk_reachability(&g).unwrap() <= r);
    }

    #[test]
    fn approx_reachability_values() {
        let v = approx_reachability_er(100, 1.0).unwrap();
        assert!((v - 1000.0 / 9801.0).abs() < 1e-12);
        let short = approx_reachability_er_large_n(1000, 0.5).unwrap();
        assert!((short - 0.0632).abs() < 1e-4);
        let a = approx_reachability_er(100, 0.5).unwrap();
        let b = approx_reachability_er(1000, 0.5).unwrap();
        let c = approx_reachability_er(10000, 0.5).unwrap();
        assert!(a > b && b > c);
        assert!(matches!(
            approx_reachability_er(10, 0.05),
            Err(Error::ApproximationDomain(_))
        ));
        let lemma = approx_reachability_er_lemma(1000, 0.5).unwrap();
        assert!((lemma - short * 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn approx_homogeneity_values() {
        let full = approx_homogeneity_er(50, 1.0, HomogeneityForm::Ratio).unwrap();
        assert_eq!(full, Approximation { value: 1.0, clamped: false });
        let s = approx_homogeneity_er(1000, 0.5, HomogeneityForm::Shorthand).unwrap();
        assert!((s.value - (1.0 - 8.0 * 0.001f64.sqrt())).abs() < 1e-12);
        assert!((s.value - 0.747).abs() < 1e-3);
        let sparse = approx_homogeneity_er(10, 0.05, HomogeneityForm::Ratio).unwrap();
        assert!(sparse.clamped && sparse.value == 0.0);
        let sparse = approx_homogeneity_er(10, 0.05, HomogeneityForm::Shorthand).unwrap();
        assert!(sparse.clamped && sparse.value == 0.0);
    }

    #[test]
    fn approximation_tracks_walk_count_form() {
        // n=1000, p=0.5, 10 graphs: the ER approximation follows the
        // walk-count form closely, not the squared-entry Frobenius form.
        let (mut walk, mut fro, mut hom) = (0.0, 0.0, 0.0);
        for seed in 0..10 {
            let g = topology::generate_erdos_renyi(1000, 0.5, seed).unwrap();
            walk += walk_reachability(&g).unwrap() / 10.0;
            fro += reachability(&g).unwrap() / 10.0;
            hom += homogeneity(&g).unwrap() / 10.0;
        }
        let approx = approx_reachability_er(1000, 0.5).unwrap();
        assert!((walk - approx).abs() / approx < 0.15, "walk {walk} vs {approx}");
        assert!(fro / approx > 10.0, "frobenius {fro} vs {approx}");
        let ratio = approx_homogeneity_er(1000, 0.5, HomogeneityForm::Ratio).unwrap().value;
        assert!(hom < ratio, "two-sigma extremes overestimate homogeneity");
    }

    #[test]
    fn scatter_shape() {
        let pts = family_scatter(30, 0.5, 3, 0, 50).unwrap();
        assert_eq!(pts.len(), 12);
        let complete: Vec<_> = pts.iter().filter(|p| p.family == Family::Complete).collect();
        assert!(complete.windows(2).all(|w| w[0].reachability == w[1].reachability));
        assert!(complete.iter().all(|p| p.homogeneity == 1.0));
        assert!(family_scatter(30, 0.5, 0, 0, 50).is_err());
    }
}
