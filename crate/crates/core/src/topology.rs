//! Communication graphs: the four generator families, connectivity
//! enforcement, degree statistics and edge-list I/O.
//!
//! Adjacency is stored dense as one bitset row per node. Rows never carry a
//! self-loop; the optimizer adds self-influence on its own.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Graph family tag, as written in edge-list headers and configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Complete,
    ErdosRenyi,
    SmallWorld,
    ScaleFree,
    /// Self-loops only (added by the optimizer); the broadcast-only control.
    Edgeless,
    /// Loaded from an edge list without generator parameters.
    Custom,
}

impl Family {
    pub const GENERATED: [Family; 4] = [
        Family::Complete,
        Family::ErdosRenyi,
        Family::SmallWorld,
        Family::ScaleFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::ErdosRenyi => "erdos_renyi",
            Family::SmallWorld => "watts_strogatz",
            Family::ScaleFree => "barabasi_albert",
            Family::Edgeless => "edgeless",
            Family::Custom => "custom",
        }
    }

    pub const VALID_NAMES: &'static str =
        "complete, erdos_renyi, watts_strogatz, barabasi_albert, edgeless, custom";
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "complete" | "fully_connected" => Family::Complete,
            "erdos_renyi" | "er" => Family::ErdosRenyi,
            "watts_strogatz" | "small_world" | "ws" => Family::SmallWorld,
            "barabasi_albert" | "scale_free" | "ba" => Family::ScaleFree,
            "edgeless" | "disconnected" => Family::Edgeless,
            "custom" => Family::Custom,
            other => {
                return Err(Error::param(
                    "family",
                    format!("unknown family `{other}`; valid families: {}", Family::VALID_NAMES),
                ))
            }
        })
    }
}

/// A generator family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologySpec {
    Complete,
    ErdosRenyi { p: f64 },
    WattsStrogatz { k: usize, beta: f64 },
    BarabasiAlbert { m: usize },
    Edgeless,
}

/// Rewiring probability used when a small-world graph is requested by density.
pub const DEFAULT_WS_BETA: f64 = 0.1;

impl TopologySpec {
    pub fn family(&self) -> Family {
        match self {
            TopologySpec::Complete => Family::Complete,
            TopologySpec::ErdosRenyi { .. } => Family::ErdosRenyi,
            TopologySpec::WattsStrogatz { .. } => Family::SmallWorld,
            TopologySpec::BarabasiAlbert { .. } => Family::ScaleFree,
            TopologySpec::Edgeless => Family::Edgeless,
        }
    }

    /// Parameters for `family` that match the edge budget of an ER graph
    /// with density `density` on `n` nodes.
    ///
    /// Small-world: `k = round(density * (n - 1))`, rounded to the nearest
    /// even value. Scale-free: the largest `m` whose edge count
    /// `m(m-1)/2 + m(n-m)` does not exceed `density * n(n-1)/2`.
    pub fn matched(family: Family, n: usize, density: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("need at least 2 nodes, got {n}")));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::param("density", format!("must be in (0, 1], got {density}")));
        }
        Ok(match family {
            Family::Complete => TopologySpec::Complete,
            Family::ErdosRenyi => TopologySpec::ErdosRenyi { p: density },
            Family::SmallWorld => {
                let target = density * (n - 1) as f64;
                let mut k = 2 * (target / 2.0).round() as usize;
                let max_even = if (n - 1).is_multiple_of(2) { n - 1 } else { n - 2 };
                k = k.clamp(2, max_even.max(2));
                TopologySpec::WattsStrogatz {
                    k,
                    beta: DEFAULT_WS_BETA,
                }
            }
            Family::ScaleFree => {
                let budget = density * (n * (n - 1)) as f64 / 2.0;
                let m = (1..n)
                    .take_while(|&m| ba_edge_count(n, m) as f64 <= budget)
                    .last()
                    .unwrap_or(1);
                TopologySpec::BarabasiAlbert { m }
            }
            Family::Edgeless => TopologySpec::Edgeless,
            Family::Custom => {
                return Err(Error::param("family", "custom graphs cannot be generated"))
            }
        })
    }
}

fn ba_edge_count(n: usize, m: usize) -> usize {
    m * (m - 1) / 2 + m * (n - m)
}

/// Undirected simple graph with a dense bitset adjacency.
#[derive(Clone, PartialEq)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    family: Family,
    spec: Option<TopologySpec>,
    seed: u64,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .field("family", &self.family)
            .field("spec", &self.spec)
            .field("seed", &self.seed)
            .finish()
    }
}

impl Graph {
    fn empty(n: usize, family: Family, spec: Option<TopologySpec>, seed: u64) -> Self {
        let words = n.div_ceil(64);
        Graph {
            n,
            words,
            rows: vec![0; n * words],
            family,
            spec,
            seed,
        }
    }

    /// Builds a graph from an explicit edge list. Self-loops and
    /// out-of-range endpoints are rejected; duplicates collapse.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        family: Family,
        seed: u64,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        let mut g = Graph::empty(n, family, None, seed);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::param("edge", format!("({i}, {j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::param("edge", format!("self-loop at node {i}")));
            }
            g.insert(i, j);
        }
        Ok(g)
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / 64] |= 1 << (j % 64);
        self.rows[j * self.words + i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / 64] &= !(1 << (j % 64));
        self.rows[j * self.words + i / 64] &= !(1 << (i % 64));
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn spec(&self) -> Option<TopologySpec> {
        self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Number of length-2 walks between `j` and `k`, i.e. the `(j, k)`
    /// entry of `A²`.
    pub fn common_neighbors(&self, j: usize, k: usize) -> usize {
        self.row(j)
            .iter()
            .zip(self.row(k))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.degrees().iter().sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Copy with nodes relabelled: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Shape(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let mut g = Graph::empty(self.n, self.family, self.spec, self.seed);
        for (i, j) in self.edges() {
            g.insert(perm[i], perm[j]);
        }
        Ok(g)
    }

    /// Dense 0/1 matrix, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| if self.has_edge(i, j) { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("need at least 2 nodes, got {n}")));
    }
    Ok(())
}

pub fn generate_complete(n: usize) -> Result<Graph> {
    check_n(n)?;
    let mut g = Graph::empty(n, Family::Complete, Some(TopologySpec::Complete), 0);
    for i in 0..n {
        for j in (i + 1)..n {
            g.insert(i, j);
        }
    }
    Ok(g)
}

fn topology_rng(seed: u64) -> ChaCha8Rng {
    rng::stream(seed, Purpose::Topology, 0, 0)
}

pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_n(n)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("must be in (0, 1], got {p}")));
    }
    let spec = TopologySpec::ErdosRenyi { p };
    let mut g = Graph::empty(n, Family::ErdosRenyi, Some(spec), seed);
    let mut rng = topology_rng(seed);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                g.insert(i, j);
            }
        }
    }
    Ok(g)
}

/// Ring lattice of even degree `k` with each lattice edge rewired with
/// probability `beta` to a uniformly chosen new endpoint. Rewiring moves
/// edges, so the edge count stays `n*k/2`.
pub fn generate_watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Result<Graph> {
    check_n(n)?;
    if !k.is_multiple_of(2) {
        return Err(Error::param("k", format!("ring degree must be even, got {k}")));
    }
    if k >= n {
        return Err(Error::param("k", format!("ring degree {k} must be below n={n}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("beta", format!("must be in [0, 1], got {beta}")));
    }
    let spec = TopologySpec::WattsStrogatz { k, beta };
    let mut g = Graph::empty(n, Family::SmallWorld, Some(spec), seed);
    for i in 0..n {
        for offset in 1..=k / 2 {
            g.insert(i, (i + offset) % n);
        }
    }
    let mut rng = topology_rng(seed);
    for offset in 1..=k / 2 {
        for u in 0..n {
            let v = (u + offset) % n;
            if rng.random::<f64>() >= beta {
                continue;
            }
            if !g.has_edge(u, v) || g.degree(u) >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !g.has_edge(u, w) {
                    break w;
                }
            };
            g.remove(u, v);
            g.insert(u, w);
        }
    }
    Ok(g)
}

/// Preferential attachment grown from an `m`-node clique. Each new node
/// attaches to `m` distinct existing nodes chosen with probability
/// proportional to degree.
pub fn generate_barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Graph> {
    check_n(n)?;
    if m < 1 || m >= n {
        return Err(Error::param("m", format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    let spec = TopologySpec::BarabasiAlbert { m };
    let mut g = Graph::empty(n, Family::ScaleFree, Some(spec), seed);
    // one entry per edge endpoint, so uniform picks are degree-proportional
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * ba_edge_count(n, m));
    for i in 0..m {
        for j in (i + 1)..m {
            g.insert(i, j);
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    let mut rng = topology_rng(seed);
    let mut chosen = Vec::with_capacity(m);
    for v in m..n {
        chosen.clear();
        while chosen.len() < m {
            let u = match endpoints.choose(&mut rng) {
                Some(&u) => u,
                None => rng.random_range(0..v),
            };
            if !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        for &u in &chosen {
            g.insert(u, v);
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    Ok(g)
}

/// Graph with no edges; every agent sees only itself.
pub fn generate_edgeless(n: usize) -> Result<Graph> {
    check_n(n)?;
    Ok(Graph::empty(n, Family::Edgeless, Some(TopologySpec::Edgeless), 0))
}

/// Generates one graph of the requested family.
pub fn generate(spec: TopologySpec, n: usize, seed: u64) -> Result<Graph> {
    match spec {
        TopologySpec::Complete => generate_complete(n),
        TopologySpec::ErdosRenyi { p } => generate_erdos_renyi(n, p, seed),
        TopologySpec::WattsStrogatz { k, beta } => generate_watts_strogatz(n, k, beta, seed),
        TopologySpec::BarabasiAlbert { m } => generate_barabasi_albert(n, m, seed),
        TopologySpec::Edgeless => generate_edgeless(n),
    }
}

/// Rejection-samples until a connected graph appears. Attempt `a`
/// (0-based) uses seed `seed + a`.
pub fn sample_connected(spec: TopologySpec, n: usize, seed: u64, max_attempts: u32) -> Result<Graph> {
    if max_attempts < 1 {
        return Err(Error::param("max_attempts", "must be at least 1"));
    }
    for attempt in 0..max_attempts {
        let g = generate(spec, n, seed.wrapping_add(attempt as u64))?;
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::Exhausted {
        attempts: max_attempts,
    })
}

/// Breadth-first search from node 0.
pub fn is_connected(g: &Graph) -> bool {
    if g.n == 0 {
        return true;
    }
    let mut seen = vec![false; g.n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == g.n
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub degrees: Vec<usize>,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let degrees = g.degrees();
    let min_degree = degrees.iter().copied().min().unwrap_or(0);
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let mean_degree = if degrees.is_empty() {
        0.0
    } else {
        degrees.iter().sum::<usize>() as f64 / degrees.len() as f64
    };
    DegreeStats {
        min_degree,
        max_degree,
        mean_degree,
        degrees,
    }
}

/// Serializes to the edge-list format: a `# netes-graph` header followed by
/// one `i j` line per edge, `i < j`, sorted.
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("# netes-graph n={} family={} seed={}\n", g.n, g.family, g.seed);
    for (i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

pub fn parse_edge_list(text: &str) -> std::result::Result<Graph, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let rest = header
        .strip_prefix("# netes-graph")
        .ok_or("missing `# netes-graph` header")?;
    let (mut n, mut family, mut seed) = (None, Family::Custom, 0u64);
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{field}`"))?;
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|e| format!("bad n: {e}"))?),
            "family" => family = value.parse().map_err(|e: Error| e.to_string())?,
            "seed" => seed = value.parse().map_err(|e| format!("bad seed: {e}"))?,
            other => return Err(format!("unknown header field `{other}`")),
        }
    }
    let n = n.ok_or("header lacks n=")?;
    let mut edges = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |s: Option<&str>| -> std::result::Result<usize, String> {
            s.ok_or_else(|| format!("line {}: expected two node indices", lineno + 2))?
                .parse()
                .map_err(|e| format!("line {}: {e}", lineno + 2))
        };
        let (i, j) = (parse(parts.next())?, parse(parts.next())?);
        if parts.next().is_some() {
            return Err(format!("line {}: trailing tokens", lineno + 2));
        }
        edges.push((i, j));
    }
    Graph::from_edges(n, edges, family, seed).map_err(|e| e.to_string())
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text).map_err(|reason| Error::EdgeList {
        path: path.to_path_buf(),
        reason,
    })
}
