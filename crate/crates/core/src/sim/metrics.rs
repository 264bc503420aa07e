//! Clustering and parameter-recovery metrics: the Hubert-Arabie adjusted
//! Rand index and absolute-bias / root-mean-squared-error summaries per
//! parameter block.

use crate::error::{Error, Result};
use crate::family::MixtureModel;
use std::collections::HashMap;

/// Hubert-Arabie adjusted Rand index between two labelings.
pub fn ari(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::DimensionMismatch {
            context: "ari",
            expected: labels_a.len(),
            got: labels_b.len(),
        });
    }
    let n = labels_a.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty labelings".into()));
    }
    let mut cont: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b.iter()) {
        *cont.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let c2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = cont.values().map(|&v| c2(v)).sum();
    let sum_rows: f64 = rows.values().map(|&v| c2(v)).sum();
    let sum_cols: f64 = cols.values().map(|&v| c2(v)).sum();
    let total = c2(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-12 {
        // degenerate table; identical partitions score 1
        return Ok(if (index - expected).abs() < 1e-12 && sum_rows == sum_cols {
            1.0
        } else {
            0.0
        });
    }
    Ok((index - expected) / (max_index - expected))
}

/// Absolute bias and RMSE of one parameter block for one component:
/// AB = (1/B) sum_b sum_i |est - truth|, RMSE = sqrt((1/B) sum_b sum_i (est - truth)^2).
#[derive(Debug, Clone)]
pub struct BlockMetric {
    pub block: &'static str,
    pub component: usize,
    pub ab: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryMetrics {
    pub blocks: Vec<BlockMetric>,
}

/// Parameter blocks summarized per component: mixing weight, location,
/// skewness, scale trace, and scale anti-trace (sum of off-diagonal
/// entries).
pub const BLOCKS: [&str; 5] = ["weight", "location", "skewness", "scale_trace", "scale_anti_trace"];

fn block_values(model: &MixtureModel, g: usize, block: &str) -> Vec<f64> {
    let c = model.component(g);
    match block {
        "weight" => vec![model.weights()[g]],
        "location" => c.mu().iter().cloned().collect(),
        "skewness" => c.lambda().iter().cloned().collect(),
        "scale_trace" => vec![c.sigma().as_matrix().trace()],
        "scale_anti_trace" => {
            let m = c.sigma().as_matrix();
            let p = m.nrows();
            let mut s = 0.0;
            for i in 0..p {
                for j in 0..p {
                    if i != j {
                        s += m[(i, j)];
                    }
                }
            }
            vec![s]
        }
        _ => unreachable!(),
    }
}

fn permutations(g: usize) -> Vec<Vec<usize>> {
    if g == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..g).collect();
    heap_permute(&mut idx, g, &mut out);
    out.sort();
    out
}

fn heap_permute(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(idx.clone());
        return;
    }
    for i in 0..k {
        heap_permute(idx, k - 1, out);
        if k % 2 == 0 {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// Matches each estimate's components to the truth by the permutation with
/// minimal total location distance, then accumulates AB and RMSE per block.
pub fn ab_rmse(truth: &MixtureModel, estimates: &[MixtureModel]) -> Result<RecoveryMetrics> {
    let g = truth.n_components();
    for est in estimates {
        if est.n_components() != g {
            return Err(Error::DimensionMismatch {
                context: "ab_rmse components",
                expected: g,
                got: est.n_components(),
            });
        }
    }
    let b = estimates.len().max(1) as f64;
    let perms = permutations(g);
    let mut abs = vec![vec![0.0; g]; BLOCKS.len()];
    let mut sqs = vec![vec![0.0; g]; BLOCKS.len()];
    for est in estimates {
        // component matching by total location distance
        let perm = perms
            .iter()
            .min_by(|pa, pb| {
                let da: f64 = (0..g)
                    .map(|t| (est.component(pa[t]).mu() - truth.component(t).mu()).norm())
                    .sum();
                let db: f64 = (0..g)
                    .map(|t| (est.component(pb[t]).mu() - truth.component(t).mu()).norm())
                    .sum();
                da.partial_cmp(&db).unwrap()
            })
            .expect("at least one permutation");
        for (bi, block) in BLOCKS.iter().enumerate() {
            for t in 0..g {
                let tv = block_values(truth, t, block);
                let ev = block_values(est, perm[t], block);
                for (tv_i, ev_i) in tv.iter().zip(ev.iter()) {
                    abs[bi][t] += (ev_i - tv_i).abs();
                    sqs[bi][t] += (ev_i - tv_i) * (ev_i - tv_i);
                }
            }
        }
    }
    let mut blocks = Vec::new();
    for (bi, block) in BLOCKS.iter().enumerate() {
        for t in 0..g {
            blocks.push(BlockMetric {
                block,
                component: t,
                ab: abs[bi][t] / b,
                rmse: (sqs[bi][t] / b).sqrt(),
            });
        }
    }
    Ok(RecoveryMetrics { blocks })
}

impl RecoveryMetrics {
    pub fn get(&self, block: &str, component: usize) -> Option<&BlockMetric> {
        self.blocks
            .iter()
            .find(|m| m.block == block && m.component == component)
    }
}
