use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::{backward, forward};
use super::{softmax_cross_entropy, HomophilicNorm, ModelConfig, ModelInputs, ModelParams};
use crate::decouple::{decouple, DecoupleConfig};
use crate::graph::{Graph, Masks};
use crate::topo::MetricKind;

const STEP: f64 = 1e-5;
const FLOOR: f64 = 1e-6;
const FEATURES: usize = 4;
const CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradTarget {
    /// Every parameter of both branches and the head.
    Joint,
    /// Heterophilic weights zeroed; homophilic weights and head checked.
    HomophilicOnly,
    /// Homophilic weights zeroed; heterophilic weights and head checked.
    HeterophilicOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation crossed an activation kink.
    pub skipped: usize,
}

/// Seeded random instance with `n` nodes, decoupled so both branches are
/// exercised.
fn instance(n: usize, seed: u64, norm: HomophilicNorm) -> ModelInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < 0.4 {
                edges.push((u, v));
            }
        }
    }
    let features = Array2::from_shape_simple_fn((n, FEATURES), || rng.sample(StandardNormal));
    let labels = (0..n).map(|_| rng.random_range(0..CLASSES)).collect();
    let masks = Masks::new(vec![true; n], vec![false; n], vec![false; n]).expect("disjoint");
    let g = Graph::build(n, &edges, features, labels, masks)
        .and_then(|g| g.with_num_classes(CLASSES))
        .expect("valid instance");
    let cfg = DecoupleConfig {
        metric: MetricKind::Random { seed },
        kappa: g.num_edges() / 2,
        mu: 4,
    };
    ModelInputs::duo(&decouple(&g, &cfg).expect("valid decoupling"), norm)
}

/// Compares analytic gradients of the training loss against central
/// differences on a tiny instance of `probe_size` nodes (clamped to 3..=12).
/// Dropout is off. Relative error is `|a - n| / max(|a| + |n|, 1e-6)`.
pub fn gradient_check(cfg: &ModelConfig, probe_size: usize, target: GradTarget) -> GradCheckReport {
    let n = probe_size.clamp(3, 12);
    let inputs = instance(n, cfg.seed, cfg.homophilic_norm);

    let mut params = ModelParams::init(cfg, FEATURES, CLASSES, true);
    let num_ho = params.w_ho.len();
    let num_total = params.named().len();
    // Index range of matrices checked, in canonical order; w_out is last.
    let checked: Vec<usize> = match target {
        GradTarget::Joint => (0..num_total).collect(),
        GradTarget::HomophilicOnly => {
            let he = params.heterophilic.as_mut().expect("duo params");
            he.w_he
                .iter_mut()
                .chain(he.w_he_self.iter_mut())
                .for_each(|m| m.fill(0.0));
            he.w_he_out.fill(0.0);
            (0..num_ho).chain([num_total - 1]).collect()
        }
        GradTarget::HeterophilicOnly => {
            params.w_ho.iter_mut().for_each(|m| m.fill(0.0));
            (num_ho..num_total).collect()
        }
    };

    let train_nodes: Vec<usize> = (0..n).collect();
    let loss_and_pattern = |p: &ModelParams| {
        let fwd = forward(&inputs, p, cfg, None).expect("consistent shapes");
        let (loss, _) = softmax_cross_entropy(&fwd.logits, &inputs.labels, &train_nodes);
        (loss, fwd.activation_pattern())
    };

    let fwd = forward(&inputs, &params, cfg, None).expect("consistent shapes");
    let (_, grad_logits) = softmax_cross_entropy(&fwd.logits, &inputs.labels, &train_nodes);
    let grads = backward(&inputs, &params, cfg, &fwd, &grad_logits);
    let base_pattern = fwd.activation_pattern();

    let analytic: Vec<Array2<f64>> = grads.named().into_iter().map(|(_, m)| m.clone()).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for &k in &checked {
        let shape = analytic[k].dim();
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let mut probe = params.clone();
                let original = probe.matrices_mut()[k][[i, j]];
                probe.matrices_mut()[k][[i, j]] = original + STEP;
                let (up, up_pattern) = loss_and_pattern(&probe);
                probe.matrices_mut()[k][[i, j]] = original - STEP;
                let (down, down_pattern) = loss_and_pattern(&probe);
                if up_pattern != base_pattern || down_pattern != base_pattern {
                    report.skipped += 1;
                    continue;
                }
                let numeric = (up - down) / (2.0 * STEP);
                let a = analytic[k][[i, j]];
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(FLOOR);
                report.max_rel_error = report.max_rel_error.max(rel);
                report.checked += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    fn cfg(seed: u64) -> ModelConfig {
        ModelConfig {
            num_layers: 3,
            hidden_dim: 4,
            dropout_rate: 0.5,
            activation: Activation::Relu,
            homophilic_norm: HomophilicNorm::Symmetric,
            seed,
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for seed in 0..3 {
            for target in [
                GradTarget::Joint,
                GradTarget::HomophilicOnly,
                GradTarget::HeterophilicOnly,
            ] {
                let r = gradient_check(&cfg(seed), 8, target);
                assert!(r.checked > 0, "{target:?}");
                assert!(r.max_rel_error < 1e-4, "seed {seed} {target:?}: {r:?}");
            }
        }
    }

    #[test]
    fn raw_norm_identity_activation_and_single_layer() {
        let mut c = cfg(9);
        c.homophilic_norm = HomophilicNorm::Raw;
        c.activation = Activation::Identity;
        let r = gradient_check(&c, 6, GradTarget::Joint);
        assert_eq!(r.skipped, 0);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
        c.num_layers = 1;
        c.activation = Activation::Relu;
        assert!(gradient_check(&c, 6, GradTarget::Joint).max_rel_error < 1e-4);
    }

    #[test]
    fn repeatable() {
        assert_eq!(
            gradient_check(&cfg(2), 7, GradTarget::Joint),
            gradient_check(&cfg(2), 7, GradTarget::Joint)
        );
    }
}
