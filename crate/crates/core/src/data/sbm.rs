use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::graph::{Graph, Masks};

fn default_mean_scale() -> f64 {
    1.0
}

/// Planted-partition random graph.
///
/// Block `b` owns nodes `b * block_size .. (b + 1) * block_size`. Node
/// features are unit-variance Gaussians centred on `mean_scale * e_(b mod d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub blocks: usize,
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    #[serde(default = "default_mean_scale")]
    pub mean_scale: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let ok = (0.0..=1.0).contains(&self.p_out)
            && (0.0..=1.0).contains(&self.p_in)
            && self.p_out <= self.p_in;
        if !ok {
            return Err(DataError::InvalidSbm(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if self.mean_scale.is_nan() {
            return Err(DataError::InvalidSbm("mean_scale is NaN".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.blocks * self.block_size
    }
}

pub fn generate_sbm(spec: &SbmSpec) -> Result<Graph, DataError> {
    spec.validate()?;
    let n = spec.num_nodes();
    let block = |v: usize| v / spec.block_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block(u) == block(v) {
                spec.p_in
            } else {
                spec.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let mut features = Array2::<f64>::zeros((n, spec.feature_dim));
    for ((v, j), x) in features.indexed_iter_mut() {
        let noise: f64 = rng.sample(StandardNormal);
        let mean = if j == block(v) % spec.feature_dim.max(1) {
            spec.mean_scale
        } else {
            0.0
        };
        *x = mean + noise;
    }
    let labels = (0..n).map(block).collect();
    let g = Graph::build(n, &edges, features, labels, Masks::unassigned(n))?;
    Ok(g.with_num_classes(spec.blocks)?)
}
