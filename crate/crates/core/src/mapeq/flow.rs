use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tdnet::TemporalGraph;

/// Undirected weighted graph in CSR form, the input of the map-equation code.
///
/// Self-loops are kept apart from the adjacency lists; they add twice their
/// weight to a node's strength but never cross a module boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph<F> {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<F>,
    self_weight: Vec<F>,
    strength: Vec<F>,
    total_weight: F,
}

impl<F: Real> FlowGraph<F> {
    /// Builds the graph from `(u, v, weight)` triples. Repeated pairs are
    /// summed; `u == v` is a self-loop.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, F)>,
    {
        let mut self_weight = vec![F::zero(); n];
        let mut pairs = Vec::new();
        for (u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::arg(format!(
                    "edge {u}-{v} out of range for {n} nodes"
                )));
            }
            if !(w.is_finite() && w > F::zero()) {
                return Err(Error::arg(format!(
                    "edge {u}-{v} has non-positive weight {w}"
                )));
            }
            if u == v {
                self_weight[u as usize] = self_weight[u as usize] + w;
            } else {
                pairs.push((u, v, w));
                pairs.push((v, u, w));
            }
        }
        pairs.sort_unstable_by_key(|&(a, b, _)| (a, b));

        let mut offsets = vec![0usize; n + 1];
        let mut neighbors = Vec::with_capacity(pairs.len());
        let mut weights: Vec<F> = Vec::with_capacity(pairs.len());
        let mut last: Option<(u32, u32)> = None;
        for (a, b, w) in pairs {
            if last == Some((a, b)) {
                let x = weights.last_mut().unwrap();
                *x = *x + w;
                continue;
            }
            last = Some((a, b));
            neighbors.push(b);
            weights.push(w);
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self::finish(offsets, neighbors, weights, self_weight))
    }

    pub(crate) fn finish(
        offsets: Vec<usize>,
        neighbors: Vec<u32>,
        weights: Vec<F>,
        self_weight: Vec<F>,
    ) -> Self {
        let n = self_weight.len();
        let strength: Vec<F> = (0..n)
            .map(|i| {
                let two = F::one() + F::one();
                weights[offsets[i]..offsets[i + 1]]
                    .iter()
                    .copied()
                    .sum::<F>()
                    + two * self_weight[i]
            })
            .collect();
        let half = F::of(0.5);
        let total_weight = strength.iter().copied().sum::<F>() * half;
        FlowGraph {
            offsets,
            neighbors,
            weights,
            self_weight,
            strength,
            total_weight,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.self_weight.len()
    }

    /// Neighbor ids and weights of node `i`, excluding its self-loop.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (u32, F)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn self_weight(&self, i: usize) -> F {
        self.self_weight[i]
    }

    pub fn strength(&self, i: usize) -> F {
        self.strength[i]
    }

    /// Sum of all edge weights, self-loops included once.
    pub fn total_weight(&self) -> F {
        self.total_weight
    }

    /// Every undirected edge once, as `(u, v, weight)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, F)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| v as usize > u)
                .map(move |(v, w)| (u as u32, v, w))
        })
    }

    /// Same graph with every weight multiplied by `c`.
    pub fn scaled(&self, c: F) -> Self {
        Self::finish(
            self.offsets.clone(),
            self.neighbors.clone(),
            self.weights.iter().map(|&w| w * c).collect(),
            self.self_weight.iter().map(|&w| w * c).collect(),
        )
    }

    /// Collapses each module of `assignment` (ids `0..n_modules`) into one
    /// node. Internal weight becomes the super-node's self-loop.
    pub fn aggregate(&self, assignment: &[u32], n_modules: usize) -> Self {
        let mut self_weight = vec![F::zero(); n_modules];
        let mut pairs: Vec<(u32, u32, F)> = Vec::new();
        for u in 0..self.n_nodes() {
            let mu = assignment[u];
            self_weight[mu as usize] = self_weight[mu as usize] + self.self_weight[u];
            for (v, w) in self.neighbors(u) {
                let mv = assignment[v as usize];
                if mu == mv {
                    // each internal edge is seen from both ends
                    if (v as usize) > u {
                        self_weight[mu as usize] = self_weight[mu as usize] + w;
                    }
                } else {
                    pairs.push((mu, mv, w));
                }
            }
        }
        pairs.sort_unstable_by_key(|&(a, b, _)| (a, b));
        let mut offsets = vec![0usize; n_modules + 1];
        let mut neighbors = Vec::new();
        let mut weights: Vec<F> = Vec::new();
        let mut last = None;
        for (a, b, w) in pairs {
            if last == Some((a, b)) {
                let x = weights.last_mut().unwrap();
                *x = *x + w;
                continue;
            }
            last = Some((a, b));
            neighbors.push(b);
            weights.push(w);
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n_modules {
            offsets[i + 1] += offsets[i];
        }
        Self::finish(offsets, neighbors, weights, self_weight)
    }
}

impl<F: Real> From<&TemporalGraph> for FlowGraph<F> {
    fn from(g: &TemporalGraph) -> Self {
        FlowGraph::from_edges(
            g.n_nodes(),
            g.edges()
                .iter()
                .map(|e| (e.u, e.v, F::of(f64::from(e.weight)))),
        )
        .expect("temporal graph edges are valid")
    }
}

/// Stationary visit rates of an undirected random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDistribution<F> {
    pub visit_rate: Vec<F>,
    pub total_weight: F,
}

impl<F: Real> FlowDistribution<F> {
    /// Entropy of the visit rates in bits, `-Σ p log2 p`.
    pub fn entropy(&self) -> F {
        -self.visit_rate.iter().map(|&p| p.plogp()).sum::<F>()
    }
}

/// `p_α = strength_α / 2W`. Fails on graphs without edges.
pub fn visit_rates<F: Real>(g: &FlowGraph<F>) -> Result<FlowDistribution<F>> {
    let w = g.total_weight();
    if w <= F::zero() {
        return Err(Error::Undefined(
            "visit rates of a graph without edges".into(),
        ));
    }
    let two_w = w + w;
    Ok(FlowDistribution {
        visit_rate: (0..g.n_nodes()).map(|i| g.strength(i) / two_w).collect(),
        total_weight: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapeq::fixtures;

    #[test]
    fn cycle_is_uniform() {
        let p = visit_rates(&fixtures::cycle4::<f64>()).unwrap();
        assert_eq!(p.visit_rate, vec![0.25; 4]);
        assert_eq!(p.total_weight, 4.0);
    }

    #[test]
    fn barbell_rates() {
        let p = visit_rates(&fixtures::barbell::<f64>()).unwrap();
        let expect = [
            1.0 / 7.0,
            1.0 / 7.0,
            3.0 / 14.0,
            3.0 / 14.0,
            1.0 / 7.0,
            1.0 / 7.0,
        ];
        for (a, b) in p.visit_rate.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((p.visit_rate.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_heavy_edge() {
        let g = FlowGraph::from_edges(2, [(0, 1, 5.0f64)]).unwrap();
        assert_eq!(visit_rates(&g).unwrap().visit_rate, vec![0.5, 0.5]);
    }

    #[test]
    fn isolated_node_has_zero_rate() {
        let g = FlowGraph::from_edges(3, [(0, 1, 1.0f64)]).unwrap();
        assert_eq!(visit_rates(&g).unwrap().visit_rate, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn edgeless_is_undefined() {
        let g = FlowGraph::<f64>::from_edges(3, []).unwrap();
        assert!(visit_rates(&g).is_err());
    }

    #[test]
    fn duplicates_merge_and_self_loops_count_twice() {
        let g = FlowGraph::from_edges(2, [(0, 1, 1.0f64), (1, 0, 2.0), (1, 1, 1.5)]).unwrap();
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![(1, 3.0)]);
        assert_eq!(g.strength(1), 6.0);
        assert_eq!(g.total_weight(), 4.5);
    }

    #[test]
    fn aggregation_keeps_flow() {
        let g = fixtures::barbell::<f64>();
        let agg = g.aggregate(&[0, 0, 0, 1, 1, 1], 2);
        assert_eq!(agg.self_weight(0), 3.0);
        assert_eq!(agg.neighbors(0).collect::<Vec<_>>(), vec![(1, 1.0)]);
        assert_eq!(agg.total_weight(), g.total_weight());
        let p = visit_rates(&agg).unwrap();
        assert_eq!(p.visit_rate, vec![0.5, 0.5]);
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(FlowGraph::from_edges(2, [(0, 1, 0.0f64)]).is_err());
        assert!(FlowGraph::from_edges(2, [(0, 1, f64::NAN)]).is_err());
        assert!(FlowGraph::from_edges(2, [(0, 2, 1.0f64)]).is_err());
    }
}
