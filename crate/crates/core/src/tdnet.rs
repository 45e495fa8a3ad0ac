//! The connected time-dependent network: one node per active (user, day),
//! hashtag-sharing edges within a day and between consecutive days.
//!
//! Ordering nodes by `(day, user)` makes the adjacency matrix
//! block-tridiagonal: day blocks on the diagonal, consecutive-day blocks on
//! the first off-diagonals, zero elsewhere.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PostRecord;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TemporalNode {
    pub user: String,
    pub day: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub weight: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    /// Every hashtag-sharing pair gets weight 1.
    #[default]
    Binary,
    /// Weight is the number of shared hashtags.
    Weighted,
}

impl std::str::FromStr for EdgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(EdgeMode::Binary),
            "weighted" => Ok(EdgeMode::Weighted),
            other => Err(Error::arg(format!("unknown edge mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub mode: EdgeMode,
    /// Largest (day, hashtag) user group expanded into a clique. Larger groups
    /// are truncated to their first `cap` users, in user order.
    pub clique_cap: Option<usize>,
}

/// Undirected weighted graph over temporal nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemporalGraph {
    nodes: Vec<TemporalNode>,
    /// Sorted by `(u, v)` with `u < v`.
    edges: Vec<Edge>,
    adj_offsets: Vec<usize>,
    adj: Vec<(u32, u32)>,
    n_days: u32,
    capped_groups: usize,
}

impl TemporalGraph {
    /// Assembles a graph from explicit parts. Edges may be given in any order
    /// and orientation; self-edges, zero weights, out-of-range endpoints and
    /// repeated pairs are rejected. No block structure is enforced here.
    pub fn from_parts(nodes: Vec<TemporalNode>, edges: Vec<Edge>) -> Result<Self> {
        let n = nodes.len();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                if e.u as usize >= n || e.v as usize >= n {
                    Err(Error::arg(format!("edge {}-{} out of range", e.u, e.v)))
                } else if e.u == e.v {
                    Err(Error::arg(format!("self-edge on node {}", e.u)))
                } else if e.weight == 0 {
                    Err(Error::arg(format!("zero weight on edge {}-{}", e.u, e.v)))
                } else {
                    Ok(Edge {
                        u: e.u.min(e.v),
                        v: e.u.max(e.v),
                        weight: e.weight,
                    })
                }
            })
            .collect::<Result<_>>()?;
        edges.sort_unstable();
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v))
        {
            return Err(Error::arg(format!("duplicate edge {}-{}", w[0].u, w[0].v)));
        }
        let n_days = nodes.iter().map(|x| x.day + 1).max().unwrap_or(0);
        Ok(Self::assemble(nodes, edges, n_days, 0))
    }

    /// Graph with every node on day 0, named by its index. Handy for
    /// structural fixtures.
    pub fn from_edge_list(n: usize, pairs: &[(u32, u32)]) -> Result<Self> {
        let nodes = (0..n)
            .map(|i| TemporalNode {
                user: i.to_string(),
                day: 0,
            })
            .collect();
        let edges = pairs
            .iter()
            .map(|&(u, v)| Edge { u, v, weight: 1 })
            .collect();
        Self::from_parts(nodes, edges)
    }

    fn assemble(nodes: Vec<TemporalNode>, edges: Vec<Edge>, n_days: u32, capped: usize) -> Self {
        let n = nodes.len();
        let mut deg = vec![0usize; n + 1];
        for e in &edges {
            deg[e.u as usize + 1] += 1;
            deg[e.v as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let adj_offsets = deg;
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0u32, 0u32); adj_offsets[n]];
        // Sorted edges fill each row in ascending neighbor order.
        for e in &edges {
            adj[fill[e.u as usize]] = (e.v, e.weight);
            fill[e.u as usize] += 1;
            adj[fill[e.v as usize]] = (e.u, e.weight);
            fill[e.v as usize] += 1;
        }
        TemporalGraph {
            nodes,
            edges,
            adj_offsets,
            adj,
            n_days,
            capped_groups: capped,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_days(&self) -> u32 {
        self.n_days
    }

    pub fn nodes(&self) -> &[TemporalNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TemporalNode {
        &self.nodes[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted `(neighbor, weight)` pairs of node `i`.
    pub fn neighbors(&self, i: usize) -> &[(u32, u32)] {
        &self.adj[self.adj_offsets[i]..self.adj_offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj_offsets[i + 1] - self.adj_offsets[i]
    }

    /// Number of (day, hashtag) groups truncated by the clique cap.
    pub fn capped_groups(&self) -> usize {
        self.capped_groups
    }

    /// Node count per day.
    pub fn nodes_per_day(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_days as usize];
        for x in &self.nodes {
            counts[x.day as usize] += 1;
        }
        counts
    }

    /// Looks up a node by user and day.
    pub fn node_index(&self) -> HashMap<(&str, u32), u32> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, x)| ((x.user.as_str(), x.day), i as u32))
            .collect()
    }
}

/// Per-day hashtag sets of one layer.
struct Layer<'a> {
    offset: u32,
    /// Users in ascending order; local node id is the position.
    users: Vec<&'a str>,
    /// Hashtag id → members (global node ids, ascending), after capping.
    groups: BTreeMap<u32, Vec<u32>>,
    /// Hashtags through which each local node takes part in a group.
    node_tags: Vec<Vec<u32>>,
}

impl Layer<'_> {
    fn len(&self) -> usize {
        self.users.len()
    }
}

/// Builds the network from day-binned, stoplist-filtered records.
///
/// Nodes are numbered by `(day, user)`. Intra-layer edges join two users who
/// used a common hashtag on the same day; inter-layer edges join `(u, d)` and
/// `(v, d + 1)` when the day-`d` hashtags of `u` meet the day-`d + 1` hashtags
/// of `v`, including `u == v`.
pub fn build_network(days: &[Vec<PostRecord>], opts: BuildOptions) -> TemporalGraph {
    let mut tag_ids: HashMap<&str, u32> = HashMap::new();
    {
        let all: BTreeSet<&str> = days
            .iter()
            .flatten()
            .flat_map(|r| r.hashtags.iter().map(String::as_str))
            .collect();
        for (i, t) in all.into_iter().enumerate() {
            tag_ids.insert(t, i as u32);
        }
    }

    let mut layers = Vec::with_capacity(days.len());
    let mut nodes = Vec::new();
    let mut capped = 0usize;
    for (d, records) in days.iter().enumerate() {
        let mut per_user: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
        for r in records {
            let tags = per_user.entry(r.user.as_str()).or_default();
            tags.extend(r.hashtags.iter().map(|t| tag_ids[t.as_str()]));
        }
        let offset = nodes.len() as u32;
        let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (i, tags) in per_user.values().enumerate() {
            for &t in tags {
                groups.entry(t).or_default().push(offset + i as u32);
            }
        }
        if let Some(cap) = opts.clique_cap {
            for (t, members) in groups.iter_mut() {
                if members.len() > cap {
                    log::warn!(
                        "day {d}: hashtag #{t} used by {} users, truncating group to {cap}",
                        members.len()
                    );
                    members.truncate(cap);
                    capped += 1;
                }
            }
        }
        let mut node_tags = vec![Vec::new(); per_user.len()];
        for (&t, members) in &groups {
            for &m in members {
                node_tags[(m - offset) as usize].push(t);
            }
        }
        nodes.extend(per_user.keys().map(|u| TemporalNode {
            user: (*u).to_string(),
            day: d as u32,
        }));
        layers.push(Layer {
            offset,
            users: per_user.keys().copied().collect(),
            groups,
            node_tags,
        });
    }

    let weighted = opts.mode == EdgeMode::Weighted;
    let blocks: Vec<Vec<Edge>> = (0..layers.len())
        .into_par_iter()
        .flat_map_iter(|d| {
            let intra = block_edges(&layers[d], &layers[d], true, weighted);
            let inter = layers
                .get(d + 1)
                .map(|next| block_edges(&layers[d], next, false, weighted));
            std::iter::once(intra).chain(inter)
        })
        .collect();
    let mut edges: Vec<Edge> = blocks.into_iter().flatten().collect();
    edges.par_sort_unstable();

    TemporalGraph::assemble(nodes, edges, days.len() as u32, capped)
}

/// Edges between every node of `from` and the nodes of `to` sharing a
/// hashtag. For the diagonal block only pairs with `u < v` are emitted.
fn block_edges(from: &Layer, to: &Layer, diagonal: bool, weighted: bool) -> Vec<Edge> {
    let mut count = vec![0u32; to.len()];
    let mut touched: Vec<u32> = Vec::new();
    let mut out = Vec::new();
    for (i, tags) in from.node_tags.iter().enumerate() {
        let u = from.offset + i as u32;
        for t in tags {
            let Some(members) = to.groups.get(t) else {
                continue;
            };
            let start = if diagonal {
                members.partition_point(|&m| m <= u)
            } else {
                0
            };
            for &v in &members[start..] {
                let slot = &mut count[(v - to.offset) as usize];
                if *slot == 0 {
                    touched.push(v);
                }
                *slot += 1;
            }
        }
        touched.sort_unstable();
        for &v in &touched {
            let slot = &mut count[(v - to.offset) as usize];
            out.push(Edge {
                u,
                v,
                weight: if weighted { *slot } else { 1 },
            });
            *slot = 0;
        }
        touched.clear();
    }
    out
}

/// Degree, clustering and size summary of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub avg_local_clustering: Option<f64>,
}

impl GraphStats {
    pub fn compute(g: &TemporalGraph, sample: Option<(usize, u64)>) -> Self {
        GraphStats {
            n_nodes: g.n_nodes(),
            n_edges: g.n_edges(),
            degree_histogram: degree_distribution(g),
            avg_local_clustering: avg_local_clustering(g, sample).ok(),
        }
    }
}

/// Number of nodes per degree; weights are ignored.
pub fn degree_distribution(g: &TemporalGraph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for i in 0..g.n_nodes() {
        *hist.entry(g.degree(i)).or_insert(0) += 1;
    }
    hist
}

/// Local clustering coefficient of every node, `0` where the degree is below 2.
pub fn local_clustering(g: &TemporalGraph) -> Vec<f64> {
    local_clustering_of(g, &(0..g.n_nodes()).collect::<Vec<_>>())
}

fn local_clustering_of(g: &TemporalGraph, which: &[usize]) -> Vec<f64> {
    which
        .par_iter()
        .map_init(
            || vec![false; g.n_nodes()],
            |mark, &i| {
                let nb = g.neighbors(i);
                let k = nb.len();
                if k < 2 {
                    return 0.0;
                }
                for &(j, _) in nb {
                    mark[j as usize] = true;
                }
                let mut links = 0u64;
                for &(j, _) in nb {
                    links += g
                        .neighbors(j as usize)
                        .iter()
                        .filter(|&&(x, _)| x > j && mark[x as usize])
                        .count() as u64;
                }
                for &(j, _) in nb {
                    mark[j as usize] = false;
                }
                2.0 * links as f64 / (k as f64 * (k as f64 - 1.0))
            },
        )
        .collect()
}

/// Mean local clustering coefficient. With `sample = Some((size, seed))`
/// the mean is taken over `size` nodes drawn without replacement.
pub fn avg_local_clustering(g: &TemporalGraph, sample: Option<(usize, u64)>) -> Result<f64> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::Undefined("clustering of an empty graph".into()));
    }
    let values = match sample {
        Some((size, seed)) if size < n => {
            if size == 0 {
                return Err(Error::arg("clustering sample size must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = index::sample(&mut rng, n, size).into_vec();
            picked.sort_unstable();
            local_clustering_of(g, &picked)
        }
        _ => local_clustering(g),
    };
    // sequential sum keeps the result independent of the thread count
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockViolation {
    pub edge: Edge,
    pub day_u: u32,
    pub day_v: u32,
}

/// Edges spanning more than one day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockViolations {
    /// The first violations in edge order, at most [`MAX_REPORTED_VIOLATIONS`].
    pub first: Vec<BlockViolation>,
    pub total: usize,
}

pub const MAX_REPORTED_VIOLATIONS: usize = 10;

impl fmt::Display for BlockViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} edge(s) cross non-consecutive days:", self.total)?;
        for x in &self.first {
            write!(
                f,
                " {}(day {})-{}(day {})",
                x.edge.u, x.day_u, x.edge.v, x.day_v
            )?;
        }
        Ok(())
    }
}

/// Checks that every edge joins nodes at most one day apart.
pub fn validate_block_structure(g: &TemporalGraph) -> std::result::Result<(), BlockViolations> {
    let mut report = BlockViolations {
        first: Vec::new(),
        total: 0,
    };
    for e in g.edges() {
        let (du, dv) = (g.node(e.u as usize).day, g.node(e.v as usize).day);
        if du.abs_diff(dv) > 1 {
            report.total += 1;
            if report.first.len() < MAX_REPORTED_VIOLATIONS {
                report.first.push(BlockViolation {
                    edge: *e,
                    day_u: du,
                    day_v: dv,
                });
            }
        }
    }
    if report.total == 0 {
        Ok(())
    } else {
        Err(report)
    }
}

/// Writes the graph as TSV: optional `# ` header lines, then `#nodes` with
/// `node_id user day` rows, then `#edges` with `u v weight` rows.
pub fn write_graph_tsv<W: Write>(g: &TemporalGraph, mut w: W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "#nodes")?;
    for (i, x) in g.nodes().iter().enumerate() {
        if x.user.contains(['\t', '\n', '\r']) {
            return Err(Error::arg(format!(
                "user id {:?} contains a tab or newline",
                x.user
            )));
        }
        writeln!(w, "{i}\t{}\t{}", x.user, x.day)?;
    }
    writeln!(w, "#edges")?;
    for e in g.edges() {
        writeln!(w, "{}\t{}\t{}", e.u, e.v, e.weight)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_graph_tsv<R: BufRead>(r: R) -> Result<TemporalGraph> {
    enum Section {
        None,
        Nodes,
        Edges,
    }
    let mut section = Section::None;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() || line.starts_with("# ") {
            continue;
        }
        match line.trim_end() {
            "#nodes" => {
                section = Section::Nodes;
                continue;
            }
            "#edges" => {
                section = Section::Edges;
                continue;
            }
            _ => {}
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::parse(lineno, format!("expected integer, got {s:?}")))
        };
        match section {
            Section::Nodes => {
                let [id, user, day] = cols[..] else {
                    return Err(Error::parse(lineno, "node row needs 3 columns"));
                };
                if num(id)? as usize != nodes.len() {
                    return Err(Error::parse(lineno, "node ids must be dense and ordered"));
                }
                nodes.push(TemporalNode {
                    user: user.to_string(),
                    day: num(day)?,
                });
            }
            Section::Edges => {
                let [u, v, weight] = cols[..] else {
                    return Err(Error::parse(lineno, "edge row needs 3 columns"));
                };
                edges.push(Edge {
                    u: num(u)?,
                    v: num(v)?,
                    weight: num(weight)?,
                });
            }
            Section::None => return Err(Error::parse(lineno, "data before #nodes")),
        }
    }
    TemporalGraph::from_parts(nodes, edges)
}

/// Node ranges of each day for graphs whose nodes are sorted by day.
pub fn day_ranges(g: &TemporalGraph) -> Vec<Range<usize>> {
    let counts = g.nodes_per_day();
    let mut start = 0;
    counts
        .into_iter()
        .map(|c| {
            let r = start..start + c;
            start += c;
            r
        })
        .collect()
}
