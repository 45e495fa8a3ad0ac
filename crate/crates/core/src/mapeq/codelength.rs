//! Two-level map equation for undirected flow.
//!
//! With module exit rates `q_i`, total exit `q = Σ q_i`, module flow
//! `p_i = Σ_{α∈i} p_α` and `p↻_i = q_i + p_i`:
//!
//! ```text
//! L = q·H(Q) + Σ_i p↻_i·H(P_i)
//!   = plogp(q) - 2·Σ plogp(q_i) - Σ_α plogp(p_α) + Σ plogp(p↻_i)
//! ```
//!
//! The expanded form is what makes single-node moves O(degree).

use std::collections::HashMap;

use serde::Serialize;

use super::flow::{visit_rates, FlowDistribution, FlowGraph};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModuleStats<F> {
    /// Σ of member visit rates.
    pub flow: F,
    /// Exit rate: cut weight / 2W.
    pub exit: F,
    pub n_nodes: usize,
}

impl<F: Real> ModuleStats<F> {
    /// `q_i + Σ p_α`, the usage rate of the module codebook.
    pub fn codebook_rate(&self) -> F {
        self.exit + self.flow
    }
}

/// Module assignment of every node, with per-module flow statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<F> {
    assignment: Vec<u32>,
    modules: Vec<ModuleStats<F>>,
}

impl<F: Real> Partition<F> {
    /// Computes module statistics for arbitrary labels. Labels are renumbered
    /// `0..k` in order of first appearance.
    pub fn new(g: &FlowGraph<F>, flow: &FlowDistribution<F>, labels: &[u32]) -> Result<Self> {
        if labels.len() != g.n_nodes() {
            return Err(Error::arg(format!(
                "partition covers {} of {} nodes",
                labels.len(),
                g.n_nodes()
            )));
        }
        let assignment = compact_labels(labels);
        let k = assignment
            .iter()
            .map(|&m| m as usize + 1)
            .max()
            .unwrap_or(0);
        let mut modules = vec![
            ModuleStats {
                flow: F::zero(),
                exit: F::zero(),
                n_nodes: 0
            };
            k
        ];
        let two_w = flow.total_weight + flow.total_weight;
        for (a, &m) in assignment.iter().enumerate() {
            let s = &mut modules[m as usize];
            s.flow = s.flow + flow.visit_rate[a];
            s.n_nodes += 1;
            for (b, w) in g.neighbors(a) {
                if assignment[b as usize] != m {
                    s.exit = s.exit + w / two_w;
                }
            }
        }
        Ok(Partition {
            assignment,
            modules,
        })
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn modules(&self) -> &[ModuleStats<F>] {
        &self.modules
    }

    pub fn n_modules(&self) -> usize {
        self.modules.len()
    }

    /// Renumbers modules by decreasing node count, ties by smallest member.
    pub fn canonical(mut self) -> Self {
        let k = self.modules.len();
        let mut first = vec![usize::MAX; k];
        for (a, &m) in self.assignment.iter().enumerate() {
            first[m as usize] = first[m as usize].min(a);
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&m| (std::cmp::Reverse(self.modules[m].n_nodes), first[m]));
        let mut rank = vec![0u32; k];
        for (r, &m) in order.iter().enumerate() {
            rank[m] = r as u32;
        }
        for m in self.assignment.iter_mut() {
            *m = rank[*m as usize];
        }
        self.modules = order.iter().map(|&m| self.modules[m]).collect();
        self
    }
}

/// Maps labels to `0..k` by first appearance.
pub fn compact_labels(labels: &[u32]) -> Vec<u32> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len() as u32;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Map-equation value split into its index and module codebook parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodelengthBreakdown<F> {
    /// `L`, bits per step.
    pub total: F,
    /// `q·H(Q)`.
    pub index_term: F,
    /// `Σ p↻_i·H(P_i)`.
    pub module_term: F,
    pub n_modules: usize,
}

impl<F: Real> CodelengthBreakdown<F> {
    /// Evaluates the map equation from module statistics and the node term
    /// `Σ_α plogp(p_α)`.
    pub fn from_modules(modules: &[ModuleStats<F>], node_plogp: F) -> Self {
        let total_exit: F = modules.iter().map(|m| m.exit).sum();
        let exit_plogp: F = modules.iter().map(|m| m.exit.plogp()).sum();
        let codebook_plogp: F = modules.iter().map(|m| m.codebook_rate().plogp()).sum();
        let index_term = total_exit.plogp() - exit_plogp;
        let module_term = codebook_plogp - exit_plogp - node_plogp;
        CodelengthBreakdown {
            total: index_term + module_term,
            index_term,
            module_term,
            n_modules: modules.iter().filter(|m| m.n_nodes > 0).count(),
        }
    }
}

/// Codelength of a labelling of `g`.
pub fn codelength<F: Real>(g: &FlowGraph<F>, labels: &[u32]) -> Result<CodelengthBreakdown<F>> {
    let flow = visit_rates(g)?;
    let p = Partition::new(g, &flow, labels)?;
    Ok(partition_codelength(&p, &flow))
}

pub fn partition_codelength<F: Real>(
    p: &Partition<F>,
    flow: &FlowDistribution<F>,
) -> CodelengthBreakdown<F> {
    let node_plogp = flow.visit_rate.iter().map(|&x| x.plogp()).sum();
    CodelengthBreakdown::from_modules(p.modules(), node_plogp)
}

/// Change in `L` when a node with flow `node_flow` and external exit
/// `node_exit` leaves `old` for `new`. `link_old` and `link_new` are the
/// flow-unit weights between the node and the other members of each module.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn move_delta<F: Real>(
    total_exit: F,
    old: (F, F),
    new: (F, F),
    node_flow: F,
    node_exit: F,
    link_old: F,
    link_new: F,
) -> F {
    let (old_flow, old_exit) = old;
    let (new_flow, new_exit) = new;
    let two = F::one() + F::one();
    let old_exit2 = old_exit - node_exit + two * link_old;
    let new_exit2 = new_exit + node_exit - two * link_new;
    let total2 = total_exit - old_exit - new_exit + old_exit2 + new_exit2;

    let index = total2.plogp() - total_exit.plogp();
    let exits = old_exit2.plogp() + new_exit2.plogp() - old_exit.plogp() - new_exit.plogp();
    let books = (old_exit2 + old_flow - node_flow).plogp()
        + (new_exit2 + new_flow + node_flow).plogp()
        - (old_exit + old_flow).plogp()
        - (new_exit + new_flow).plogp();
    index - two * exits + books
}

/// Where a node moves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Module(u32),
    /// A fresh, empty module.
    New,
}

/// Mutable partition supporting O(degree) move deltas.
#[derive(Debug, Clone)]
pub struct MoveState<'g, F> {
    graph: &'g FlowGraph<F>,
    flow: FlowDistribution<F>,
    node_exit: Vec<F>,
    module_of: Vec<u32>,
    modules: Vec<ModuleStats<F>>,
    total_exit: F,
    node_plogp: F,
}

impl<'g, F: Real> MoveState<'g, F> {
    pub fn new(graph: &'g FlowGraph<F>, labels: &[u32]) -> Result<Self> {
        let flow = visit_rates(graph)?;
        let p = Partition::new(graph, &flow, labels)?;
        let two_w = flow.total_weight + flow.total_weight;
        let node_exit = (0..graph.n_nodes())
            .map(|a| graph.neighbors(a).map(|(_, w)| w).sum::<F>() / two_w)
            .collect();
        let node_plogp = flow.visit_rate.iter().map(|&x| x.plogp()).sum();
        let total_exit = p.modules.iter().map(|m| m.exit).sum();
        Ok(MoveState {
            graph,
            flow,
            node_exit,
            module_of: p.assignment,
            modules: p.modules,
            total_exit,
            node_plogp,
        })
    }

    pub fn module_of(&self, node: usize) -> u32 {
        self.module_of[node]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.module_of
    }

    /// Codelength from the tracked module statistics.
    pub fn codelength(&self) -> CodelengthBreakdown<F> {
        CodelengthBreakdown::from_modules(&self.modules, self.node_plogp)
    }

    fn links(&self, node: usize, old: u32, target: Option<u32>) -> (F, F) {
        let two_w = self.flow.total_weight + self.flow.total_weight;
        let mut to_old = F::zero();
        let mut to_new = F::zero();
        for (b, w) in self.graph.neighbors(node) {
            let m = self.module_of[b as usize];
            if m == old {
                to_old = to_old + w / two_w;
            } else if Some(m) == target {
                to_new = to_new + w / two_w;
            }
        }
        (to_old, to_new)
    }

    fn resolve(&self, target: Target) -> Result<Option<u32>> {
        match target {
            Target::New => Ok(None),
            Target::Module(m) if (m as usize) < self.modules.len() => Ok(Some(m)),
            Target::Module(m) => Err(Error::arg(format!("no module {m}"))),
        }
    }

    /// `L(after) - L(before)` for moving `node` to `target`.
    pub fn delta(&self, node: usize, target: Target) -> Result<F> {
        if node >= self.module_of.len() {
            return Err(Error::arg(format!("no node {node}")));
        }
        let old = self.module_of[node];
        let target = self.resolve(target)?;
        if target == Some(old) {
            return Ok(F::zero());
        }
        let (link_old, link_new) = self.links(node, old, target);
        let o = self.modules[old as usize];
        let n = target.map_or((F::zero(), F::zero()), |t| {
            let s = self.modules[t as usize];
            (s.flow, s.exit)
        });
        Ok(move_delta(
            self.total_exit,
            (o.flow, o.exit),
            n,
            self.flow.visit_rate[node],
            self.node_exit[node],
            link_old,
            link_new,
        ))
    }

    /// Applies a move and returns the id of the destination module.
    pub fn apply(&mut self, node: usize, target: Target) -> Result<u32> {
        let old = self.module_of[node];
        let target = self.resolve(target)?;
        if target == Some(old) {
            return Ok(old);
        }
        let (link_old, link_new) = self.links(node, old, target);
        let dest = match target {
            Some(t) => t,
            None => {
                self.modules.push(ModuleStats {
                    flow: F::zero(),
                    exit: F::zero(),
                    n_nodes: 0,
                });
                (self.modules.len() - 1) as u32
            }
        };
        let two = F::one() + F::one();
        let p = self.flow.visit_rate[node];
        let e = self.node_exit[node];
        let o = &mut self.modules[old as usize];
        let old_exit = o.exit;
        o.exit = o.exit - e + two * link_old;
        o.flow = o.flow - p;
        o.n_nodes -= 1;
        let old_exit2 = o.exit;
        let d = &mut self.modules[dest as usize];
        let new_exit = d.exit;
        d.exit = d.exit + e - two * link_new;
        d.flow = d.flow + p;
        d.n_nodes += 1;
        self.total_exit = self.total_exit - old_exit - new_exit + old_exit2 + d.exit;
        self.module_of[node] = dest;
        Ok(dest)
    }
}
