//! Greedy two-level map-equation search: randomized single-node moves,
//! aggregation of modules into super-nodes, repeat. Several independent
//! trials; the lowest codelength wins.

use std::borrow::Cow;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codelength::{
    compact_labels, move_delta, partition_codelength, CodelengthBreakdown, Partition,
};
use super::flow::{visit_rates, FlowDistribution, FlowGraph};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub n_trials: usize,
    pub seed: u64,
    /// Cap on move sweeps per aggregation level.
    pub max_sweeps: usize,
    /// Sweeps stop once one improves `L` by less than this many bits.
    pub tolerance: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            n_trials: 10,
            seed: 1,
            max_sweeps: 100,
            tolerance: 1e-10,
        }
    }
}

/// Best partition found and how it scored.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimized<F> {
    /// Canonically numbered: module 0 is the largest.
    pub partition: Partition<F>,
    pub codelength: CodelengthBreakdown<F>,
    /// Codelength with every node in one module.
    pub one_level: F,
    pub best_trial: usize,
    pub trial_codelengths: Vec<F>,
}

/// SplitMix64 finalizer over `(seed, trial)`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Minimizes the map equation over partitions of `g`.
///
/// Trials run in parallel; each owns an RNG derived from `(seed, trial)`, so
/// the result does not depend on the number of threads. Ties between trials
/// go to the lower trial index.
pub fn optimize<F: Real>(g: &FlowGraph<F>, cfg: &OptimizeConfig) -> Result<Optimized<F>> {
    if cfg.n_trials == 0 {
        return Err(Error::arg("n_trials must be at least 1"));
    }
    let flow = visit_rates(g)?;
    let trials: Vec<(Vec<u32>, CodelengthBreakdown<F>)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, t));
            let labels = run_trial(g, &flow, cfg, &mut rng);
            let p = Partition::new(g, &flow, &labels).expect("labels cover the graph");
            let l = partition_codelength(&p, &flow);
            (labels, l)
        })
        .collect();

    let mut best = 0;
    for (t, (_, l)) in trials.iter().enumerate() {
        if l.total < trials[best].1.total {
            best = t;
        }
    }
    let trial_codelengths = trials.iter().map(|(_, l)| l.total).collect();
    let (labels, codelength) = trials.into_iter().nth(best).unwrap();
    let partition = Partition::new(g, &flow, &labels)?.canonical();
    Ok(Optimized {
        partition,
        codelength,
        one_level: flow.entropy(),
        best_trial: best,
        trial_codelengths,
    })
}

fn run_trial<F: Real>(
    g: &FlowGraph<F>,
    flow: &FlowDistribution<F>,
    cfg: &OptimizeConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let two_w = flow.total_weight + flow.total_weight;
    let node_plogp: F = flow.visit_rate.iter().map(|&p| p.plogp()).sum();
    let mut leaf: Vec<u32> = (0..g.n_nodes() as u32).collect();
    let mut level: Cow<FlowGraph<F>> = Cow::Borrowed(g);
    loop {
        let assign = local_moves(&level, two_w, node_plogp, cfg, rng);
        let k = assign.iter().map(|&m| m as usize + 1).max().unwrap_or(0);
        if k == level.n_nodes() {
            break;
        }
        for l in leaf.iter_mut() {
            *l = assign[*l as usize];
        }
        if k <= 1 {
            break;
        }
        level = Cow::Owned(level.aggregate(&assign, k));
    }
    leaf
}

/// Greedy node moves on one level, starting from singletons. Returns module
/// ids compacted to `0..k`.
fn local_moves<F: Real>(
    g: &FlowGraph<F>,
    two_w: F,
    node_plogp: F,
    cfg: &OptimizeConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let n = g.n_nodes();
    let two = F::one() + F::one();
    let min_move = F::epsilon() * F::of(64.0);
    let tolerance = F::of(cfg.tolerance);

    let node_flow: Vec<F> = (0..n).map(|a| g.strength(a) / two_w).collect();
    let node_exit: Vec<F> = (0..n)
        .map(|a| (g.strength(a) - two * g.self_weight(a)) / two_w)
        .collect();
    let mut module_of: Vec<u32> = (0..n as u32).collect();
    let mut mflow = node_flow.clone();
    let mut mexit = node_exit.clone();
    let mut msize = vec![1usize; n];
    let mut total_exit: F = mexit.iter().copied().sum();
    let mut empty: BinaryHeap<Reverse<u32>> = BinaryHeap::new();

    let codelength = |mflow: &[F], mexit: &[F]| -> F {
        let modules = mflow.iter().zip(mexit).map(|(&f, &e)| super::ModuleStats {
            flow: f,
            exit: e,
            n_nodes: 1,
        });
        CodelengthBreakdown::from_modules(&modules.collect::<Vec<_>>(), node_plogp).total
    };

    let mut link = vec![F::zero(); n];
    let mut is_touched = vec![false; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut current = codelength(&mflow, &mexit);

    for _ in 0..cfg.max_sweeps {
        order.shuffle(rng);
        let mut moved = 0usize;
        for &a in &order {
            let a = a as usize;
            if g.degree(a) == 0 {
                continue;
            }
            let old = module_of[a];
            let mut link_old = F::zero();
            for (b, w) in g.neighbors(a) {
                let m = module_of[b as usize];
                let w = w / two_w;
                if m == old {
                    link_old = link_old + w;
                } else {
                    if !is_touched[m as usize] {
                        is_touched[m as usize] = true;
                        touched.push(m);
                    }
                    link[m as usize] = link[m as usize] + w;
                }
            }
            let new_id = if msize[old as usize] > 1 {
                empty.peek().map(|r| r.0)
            } else {
                None
            };
            if let Some(id) = new_id {
                touched.push(id);
            }
            touched.sort_unstable();

            let old_stats = (mflow[old as usize], mexit[old as usize]);
            let mut best = old;
            let mut best_delta = F::zero();
            let mut best_link = F::zero();
            for &m in &touched {
                let mu = m as usize;
                let delta = move_delta(
                    total_exit,
                    old_stats,
                    (mflow[mu], mexit[mu]),
                    node_flow[a],
                    node_exit[a],
                    link_old,
                    link[mu],
                );
                if delta < best_delta {
                    best = m;
                    best_delta = delta;
                    best_link = link[mu];
                }
            }
            for &m in &touched {
                link[m as usize] = F::zero();
                is_touched[m as usize] = false;
            }
            touched.clear();

            if best != old && best_delta < -min_move {
                let (o, d) = (old as usize, best as usize);
                if Some(best) == new_id {
                    empty.pop();
                }
                let old_exit2 = mexit[o] - node_exit[a] + two * link_old;
                let new_exit2 = mexit[d] + node_exit[a] - two * best_link;
                total_exit = total_exit - mexit[o] - mexit[d] + old_exit2 + new_exit2;
                mexit[o] = old_exit2;
                mexit[d] = new_exit2;
                mflow[o] = mflow[o] - node_flow[a];
                mflow[d] = mflow[d] + node_flow[a];
                msize[o] -= 1;
                msize[d] += 1;
                if msize[o] == 0 {
                    mflow[o] = F::zero();
                    mexit[o] = F::zero();
                    empty.push(Reverse(old));
                }
                module_of[a] = best;
                moved += 1;
            }
        }
        let next = codelength(&mflow, &mexit);
        let gain = current - next;
        current = next;
        if moved == 0 || gain < tolerance {
            break;
        }
    }
    compact_labels(&module_of)
}
