use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use ndarray::{s, Array2, Axis};
use rayon::prelude::*;

use super::DataError;

const ROW_BLOCK: usize = 256;

/// Candidate pair ranked by similarity, then by ascending `(i, j)`.
/// `Greater` means a better candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    sim: f64,
    i: usize,
    j: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sim
            .total_cmp(&other.sim)
            .then_with(|| (other.i, other.j).cmp(&(self.i, self.j)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn push_bounded(heap: &mut BinaryHeap<Reverse<Candidate>>, c: Candidate, cap: usize) {
    if heap.len() < cap {
        heap.push(Reverse(c));
    } else if let Some(Reverse(worst)) = heap.peek() {
        if c > *worst {
            heap.pop();
            heap.push(Reverse(c));
        }
    }
}

/// Unweighted edge list of the `top_m` most cosine-similar node pairs over the
/// whole matrix. Ties go to the lexicographically smaller pair. Returned pairs
/// are `(i, j)` with `i < j`, sorted ascending.
pub fn cosine_similarity_graph(
    features: &Array2<f64>,
    top_m: usize,
) -> Result<Vec<(usize, usize)>, DataError> {
    let n = features.nrows();
    let pairs = n * n.saturating_sub(1) / 2;
    if top_m > pairs {
        return Err(DataError::TooManyPairs {
            requested: top_m,
            available: pairs,
        });
    }
    let mut unit = features.clone();
    for (row, mut x) in unit.axis_iter_mut(Axis(0)).enumerate() {
        let norm = x.dot(&x).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(DataError::ZeroNormRow(row));
        }
        x /= norm;
    }
    if top_m == 0 {
        return Ok(Vec::new());
    }
    let starts: Vec<usize> = (0..n).step_by(ROW_BLOCK).collect();
    let heaps: Vec<BinaryHeap<Reverse<Candidate>>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + ROW_BLOCK).min(n);
            let block = unit.slice(s![start..end, ..]);
            let rest = unit.slice(s![start.., ..]);
            let sims = block.dot(&rest.t());
            let mut heap = BinaryHeap::with_capacity(top_m.min(1 << 20) + 1);
            for (r, row) in sims.axis_iter(Axis(0)).enumerate() {
                let i = start + r;
                for (c, &sim) in row.iter().enumerate().skip(r + 1) {
                    push_bounded(
                        &mut heap,
                        Candidate {
                            sim,
                            i,
                            j: start + c,
                        },
                        top_m,
                    );
                }
            }
            heap
        })
        .collect();
    let mut best = BinaryHeap::with_capacity(top_m + 1);
    for heap in heaps {
        for Reverse(c) in heap {
            push_bounded(&mut best, c, top_m);
        }
    }
    let mut edges: Vec<(usize, usize)> = best.into_iter().map(|Reverse(c)| (c.i, c.j)).collect();
    edges.sort_unstable();
    Ok(edges)
}
