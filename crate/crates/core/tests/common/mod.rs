//! Reference implementations used as test oracles. They work straight from
//! an edge list and share no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type EdgeList = Vec<(usize, usize, f64)>;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Two-level map equation evaluated term by term.
pub fn direct_codelength(n: usize, edges: &[(usize, usize, f64)], labels: &[u32]) -> f64 {
    let total: f64 = edges.iter().map(|e| e.2).sum();
    let mut strength = vec![0.0; n];
    for &(u, v, w) in edges {
        strength[u] += w;
        strength[v] += w;
    }
    let k = labels.iter().map(|&m| m as usize + 1).max().unwrap_or(0);
    let mut flow = vec![0.0; k];
    let mut exit = vec![0.0; k];
    for i in 0..n {
        flow[labels[i] as usize] += strength[i] / (2.0 * total);
    }
    for &(u, v, w) in edges {
        let (a, b) = (labels[u] as usize, labels[v] as usize);
        if a != b {
            exit[a] += w / (2.0 * total);
            exit[b] += w / (2.0 * total);
        }
    }
    let q: f64 = exit.iter().sum();
    let mut l = plogp(q);
    for m in 0..k {
        l -= 2.0 * plogp(exit[m]);
        l += plogp(exit[m] + flow[m]);
    }
    for s in strength {
        l -= plogp(s / (2.0 * total));
    }
    l
}

/// Every set partition of `0..n`, each as a label vector.
pub fn all_partitions(n: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, n: usize, k: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for m in 0..=k {
            cur.push(m);
            rec(i + 1, n, k.max(m + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, 0, &mut Vec::new(), &mut out);
    out
}

/// Random simple graph with at least one edge and integer weights in `1..=3`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> EdgeList {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v, rng.gen_range(1..=3) as f64));
                }
            }
        }
        if !edges.is_empty() {
            return edges;
        }
    }
}

/// Suite of `count` small graphs with 2 to `max_n` nodes.
pub fn small_graph_suite(seed: u64, count: usize, max_n: usize) -> Vec<(usize, EdgeList)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=max_n);
            let p = rng.gen_range(0.25..0.8);
            (n, random_graph(&mut rng, n, p))
        })
        .collect()
}

/// Mean local clustering by explicit triangle enumeration.
pub fn clustering_by_enumeration(n: usize, pairs: &[(usize, usize)]) -> f64 {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in pairs {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    let mut sum = 0.0;
    for i in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&j| adj[i][j]).collect();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut t = 0;
        for a in 0..k {
            for b in a + 1..k {
                if adj[nb[a]][nb[b]] {
                    t += 1;
                }
            }
        }
        sum += 2.0 * t as f64 / (k * (k - 1)) as f64;
    }
    sum / n as f64
}
