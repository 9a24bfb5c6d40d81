use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::graph::Masks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Random disjoint train/val/test masks.
///
/// With `stratify_by` set, each split takes classes in proportion to their
/// share of the population (largest-remainder rounding, ties to the lower
/// class id), drawing nodes uniformly within each class.
pub fn split_masks(
    num_nodes: usize,
    sizes: SplitSizes,
    seed: u64,
    stratify_by: Option<&[usize]>,
) -> Result<Masks, DataError> {
    if sizes.total() > num_nodes {
        return Err(DataError::SplitTooLarge {
            requested: sizes.total(),
            available: num_nodes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = match stratify_by {
        None => {
            let mut nodes: Vec<usize> = (0..num_nodes).collect();
            nodes.shuffle(&mut rng);
            let (train, rest) = nodes.split_at(sizes.train);
            let (val, rest) = rest.split_at(sizes.val);
            [train.to_vec(), val.to_vec(), rest[..sizes.test].to_vec()]
        }
        Some(labels) => {
            if labels.len() != num_nodes {
                return Err(DataError::LabelCount {
                    len: labels.len(),
                    num_nodes,
                });
            }
            stratified(labels, sizes, &mut rng)
        }
    };
    let mut masks = [
        vec![false; num_nodes],
        vec![false; num_nodes],
        vec![false; num_nodes],
    ];
    for (mask, nodes) in masks.iter_mut().zip(&order) {
        for &v in nodes {
            mask[v] = true;
        }
    }
    let [train, val, test] = masks;
    Ok(Masks::new(train, val, test)?)
}

fn stratified(labels: &[usize], sizes: SplitSizes, rng: &mut ChaCha8Rng) -> [Vec<usize>; 3] {
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (v, &c) in labels.iter().enumerate() {
        pools[c].push(v);
    }
    for pool in &mut pools {
        pool.shuffle(rng);
    }
    let mut out: [Vec<usize>; 3] = Default::default();
    for (k, want) in [sizes.train, sizes.val, sizes.test].into_iter().enumerate() {
        let available: usize = pools.iter().map(Vec::len).sum();
        let quotas = proportional_quotas(&pools, want, available);
        for (pool, q) in pools.iter_mut().zip(quotas) {
            let start = pool.len() - q;
            out[k].extend(pool.drain(start..));
        }
        out[k].sort_unstable();
    }
    out
}

fn proportional_quotas(pools: &[Vec<usize>], want: usize, available: usize) -> Vec<usize> {
    if available == 0 {
        return vec![0; pools.len()];
    }
    let exact: Vec<f64> = pools
        .iter()
        .map(|p| want as f64 * p.len() as f64 / available as f64)
        .collect();
    let mut quotas: Vec<usize> = exact
        .iter()
        .zip(pools)
        .map(|(&e, p)| (e.floor() as usize).min(p.len()))
        .collect();
    let mut short = want - quotas.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..pools.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    // Largest remainders first; keep cycling in case a pool is exhausted.
    while short > 0 {
        let before = short;
        for &c in &by_remainder {
            if short > 0 && quotas[c] < pools[c].len() {
                quotas[c] += 1;
                short -= 1;
            }
        }
        assert!(short < before, "requested more nodes than available");
    }
    quotas
}
