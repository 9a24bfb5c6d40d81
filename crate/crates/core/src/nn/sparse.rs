use ndarray::Array2;
use rayon::prelude::*;

use super::HomophilicNorm;
use crate::graph::Graph;

/// Square sparse matrix in CSR layout. Column indices within a row ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Unit-weight adjacency without self-loops.
    pub fn adjacency(g: &Graph) -> Self {
        let n = g.num_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(g.num_arcs());
        for v in 0..n {
            cols.extend_from_slice(g.neighbors(v));
            offsets.push(cols.len());
        }
        let vals = vec![1.0; cols.len()];
        Self {
            offsets,
            cols,
            vals,
        }
    }

    /// `A + I`, optionally with symmetric degree normalization.
    pub fn propagation(g: &Graph, norm: HomophilicNorm) -> Self {
        let n = g.num_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(g.num_arcs() + n);
        for v in 0..n {
            let nbrs = g.neighbors(v);
            let split = nbrs.partition_point(|&w| w < v);
            cols.extend_from_slice(&nbrs[..split]);
            cols.push(v);
            cols.extend_from_slice(&nbrs[split..]);
            offsets.push(cols.len());
        }
        let vals = match norm {
            HomophilicNorm::Raw => vec![1.0; cols.len()],
            HomophilicNorm::Symmetric => {
                let inv_sqrt: Vec<f64> = (0..n)
                    .map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt())
                    .collect();
                (0..n)
                    .flat_map(|v| {
                        let inv_sqrt = &inv_sqrt;
                        cols[offsets[v]..offsets[v + 1]]
                            .iter()
                            .map(move |&w| inv_sqrt[v] * inv_sqrt[w])
                    })
                    .collect()
            }
        };
        Self {
            offsets,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `self * x`. Rows are computed independently, so the result does not
    /// depend on thread scheduling.
    pub fn matmul(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.dim(), "sparse matmul dimension mismatch");
        let k = x.ncols();
        let mut out = Array2::<f64>::zeros((self.dim(), k));
        if k == 0 {
            return out;
        }
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        out.as_slice_mut()
            .expect("fresh array is contiguous")
            .par_chunks_mut(k)
            .with_min_len(64)
            .enumerate()
            .for_each(|(i, row)| {
                for idx in self.offsets[i]..self.offsets[i + 1] {
                    let (j, a) = (self.cols[idx], self.vals[idx]);
                    for (o, &xv) in row.iter_mut().zip(&xs[j * k..(j + 1) * k]) {
                        *o += a * xv;
                    }
                }
            });
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.dim();
        let mut d = Array2::zeros((n, n));
        for i in 0..n {
            for idx in self.offsets[i]..self.offsets[i + 1] {
                d[[i, self.cols[idx]]] = self.vals[idx];
            }
        }
        d
    }
}
