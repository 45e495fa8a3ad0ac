use super::codelength::{partition_codelength, CodelengthBreakdown, Partition};
use super::flow::{visit_rates, FlowGraph};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest graph the exhaustive search accepts; Bell(12) ≈ 4.2 million partitions.
pub const MAX_EXHAUSTIVE_NODES: usize = 12;

/// Calls `f` with every set partition of `0..n` as a restricted growth
/// string, in lexicographic order.
pub fn for_each_set_partition(n: usize, mut f: impl FnMut(&[u32])) {
    if n == 0 {
        f(&[]);
        return;
    }
    let mut a = vec![0u32; n];
    // max label among a[..=i]
    let mut m = vec![0u32; n];
    loop {
        f(&a);
        // rightmost position that can still grow
        let mut i = n - 1;
        while i > 0 && a[i] > m[i - 1] {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        a[i] += 1;
        m[i] = m[i - 1].max(a[i]);
        for j in i + 1..n {
            a[j] = 0;
            m[j] = m[i];
        }
    }
}

/// Global map-equation minimum by enumerating every partition. Ties (within
/// `1e-13` bits) keep the lexicographically smallest assignment.
pub fn brute_force_optimum<F: Real>(
    g: &FlowGraph<F>,
) -> Result<(Vec<u32>, CodelengthBreakdown<F>)> {
    let n = g.n_nodes();
    if n > MAX_EXHAUSTIVE_NODES {
        return Err(Error::arg(format!(
            "exhaustive search refused: {n} nodes > {MAX_EXHAUSTIVE_NODES}"
        )));
    }
    let flow = visit_rates(g)?;
    let eps = F::of(1e-13);
    let mut best: Option<(Vec<u32>, CodelengthBreakdown<F>)> = None;
    for_each_set_partition(n, |labels| {
        let p = Partition::new(g, &flow, labels).expect("full labelling");
        let l = partition_codelength(&p, &flow);
        if best.as_ref().is_none_or(|(_, b)| l.total < b.total - eps) {
            best = Some((labels.to_vec(), l));
        }
    });
    Ok(best.expect("at least one partition"))
}
