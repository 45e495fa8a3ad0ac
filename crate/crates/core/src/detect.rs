//! Records in, communities out: network construction plus map-equation
//! optimization with the degenerate cases handled.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::PostRecord;
use crate::mapeq::{optimize, CodelengthBreakdown, FlowGraph, OptimizeConfig};
use crate::tdnet::{build_network, BuildOptions, TemporalGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub build: BuildOptions,
    pub optimize: OptimizeConfig,
    /// Smallest community (in nodes) that is counted or reported.
    pub size_floor: usize,
}

impl DetectConfig {
    pub fn new(build: BuildOptions, optimize: OptimizeConfig) -> Self {
        DetectConfig {
            build,
            optimize,
            size_floor: DEFAULT_SIZE_FLOOR,
        }
    }
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig::new(BuildOptions::default(), OptimizeConfig::default())
    }
}

pub const DEFAULT_SIZE_FLOOR: usize = 3;

#[derive(Debug, Clone)]
pub struct Detected {
    pub graph: TemporalGraph,
    /// Community of every node; 0 is the largest.
    pub assignment: Vec<u32>,
    /// `None` when the graph has no edges and the walk is undefined.
    pub codelength: Option<CodelengthBreakdown<f64>>,
    pub one_level: Option<f64>,
    pub best_trial: Option<usize>,
}

impl Detected {
    pub fn n_communities(&self) -> usize {
        self.assignment
            .iter()
            .map(|&m| m as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Communities with at least `floor` nodes.
    pub fn count_at_floor(&self, floor: usize) -> usize {
        count_communities(&self.assignment, floor)
    }
}

pub fn count_communities(assignment: &[u32], floor: usize) -> usize {
    let k = assignment
        .iter()
        .map(|&m| m as usize + 1)
        .max()
        .unwrap_or(0);
    let mut sizes = vec![0usize; k];
    for &m in assignment {
        sizes[m as usize] += 1;
    }
    sizes.iter().filter(|&&s| s >= floor.max(1)).count()
}

/// Builds the network and optimizes it. A graph without edges gets one
/// singleton community per node.
pub fn detect(days: &[Vec<PostRecord>], cfg: &DetectConfig) -> Result<Detected> {
    let graph = build_network(days, cfg.build);
    detect_on(graph, cfg)
}

pub fn detect_on(graph: TemporalGraph, cfg: &DetectConfig) -> Result<Detected> {
    if graph.n_edges() == 0 {
        let n = graph.n_nodes() as u32;
        return Ok(Detected {
            graph,
            assignment: (0..n).collect(),
            codelength: None,
            one_level: None,
            best_trial: None,
        });
    }
    let flow: FlowGraph<f64> = (&graph).into();
    let best = optimize(&flow, &cfg.optimize)?;
    Ok(Detected {
        assignment: best.partition.assignment().to_vec(),
        codelength: Some(best.codelength),
        one_level: Some(best.one_level),
        best_trial: Some(best.best_trial),
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_time_str;

    fn post(user: &str, tags: &[&str]) -> PostRecord {
        PostRecord::new(user, parse_time_str("2015-05-11T12:00:00Z").unwrap(), tags).unwrap()
    }

    #[test]
    fn edgeless_gives_singletons() {
        let days = vec![vec![post("a", &["x"]), post("b", &["y"])]];
        let d = detect(&days, &DetectConfig::default()).unwrap();
        assert_eq!(d.assignment, vec![0, 1]);
        assert!(d.codelength.is_none());
        let d = detect(&[], &DetectConfig::default()).unwrap();
        assert!(d.assignment.is_empty());
        assert_eq!(d.n_communities(), 0);
    }

    #[test]
    fn counts_at_floor() {
        assert_eq!(count_communities(&[0, 0, 0, 1, 1, 2], 3), 1);
        assert_eq!(count_communities(&[0, 0, 0, 1, 1, 2], 1), 3);
        assert_eq!(count_communities(&[], 3), 0);
    }
}
