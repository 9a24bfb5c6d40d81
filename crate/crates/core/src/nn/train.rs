use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Zip;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::metrics_from_logits;
use super::model::{backward, forward};
use super::{softmax_cross_entropy, ModelConfig, ModelInputs, ModelParams, NnError, TrainConfig};
use crate::graph::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Loss of the dropout pass the gradient came from.
    pub train_loss: f64,
    pub train_acc: f64,
    /// `None` when the validation mask is empty.
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from `best_epoch`.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    /// Epoch with the highest validation accuracy (first on ties), or the
    /// last epoch without validation nodes. 0 if no epoch ran.
    pub best_epoch: usize,
    /// Wall-clock milliseconds of each training step (forward, backward,
    /// update), excluding evaluation.
    pub epoch_ms: Vec<f64>,
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    fn new(params: &ModelParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let grads = grads.named();
        for (((p, m), v), (_, g)) in params
            .matrices_mut()
            .into_iter()
            .zip(self.m.matrices_mut())
            .zip(self.v.matrices_mut())
            .zip(grads)
        {
            Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
            });
        }
    }
}

/// Full-batch training with Adam and early stopping on validation accuracy.
/// Weights come from `model_cfg.seed`, dropout masks from `train_cfg.seed`.
pub fn train(
    inputs: &ModelInputs,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome, NnError> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    let train_nodes = inputs.masks.nodes(Split::Train);
    if train_nodes.is_empty() {
        return Err(NnError::NoTrainNodes);
    }
    let val_nodes = inputs.masks.nodes(Split::Val);
    let mut params = ModelParams::init(
        model_cfg,
        inputs.feature_dim(),
        inputs.num_classes,
        inputs.heterophilic.is_some(),
    );
    params.check(model_cfg, inputs)?;
    let mut adam = Adam::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);

    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_val = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut epoch_ms = Vec::new();

    for epoch in 1..=train_cfg.max_epochs {
        let start = Instant::now();
        let fwd = forward(inputs, &params, model_cfg, Some(&mut rng))?;
        let (loss, grad_logits) = softmax_cross_entropy(&fwd.logits, &inputs.labels, &train_nodes);
        if !loss.is_finite() {
            return Err(NnError::NonFiniteLoss { epoch });
        }
        let grads = backward(inputs, &params, model_cfg, &fwd, &grad_logits);
        adam.step(&mut params, &grads, train_cfg);
        epoch_ms.push(start.elapsed().as_secs_f64() * 1e3);

        let logits = forward(inputs, &params, model_cfg, None)?.logits;
        let train_acc = metrics_from_logits(&logits, inputs, &train_nodes).accuracy;
        let val_acc = (!val_nodes.is_empty())
            .then(|| metrics_from_logits(&logits, inputs, &val_nodes).accuracy);
        history.push(EpochRecord {
            epoch,
            train_loss: loss,
            train_acc,
            val_acc,
        });
        match val_acc {
            Some(acc) if acc > best_val => {
                best_val = acc;
                best_epoch = epoch;
                best.clone_from(&params);
            }
            Some(_) => {
                if epoch - best_epoch >= train_cfg.patience {
                    break;
                }
            }
            None => {
                best_epoch = epoch;
                best.clone_from(&params);
            }
        }
    }
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
        epoch_ms,
    })
}

/// `epoch,train_loss,train_acc,val_acc`; a missing validation accuracy is
/// left empty.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_acc\n");
    for r in history {
        let val = r.val_acc.map(|v| format!("{v:?}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:?},{:?},{}",
            r.epoch, r.train_loss, r.train_acc, val
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, Masks};
    use crate::nn::HomophilicNorm;
    use ndarray::Array2;

    /// Two disjoint 5-cliques; every node of clique `c` carries feature
    /// `e_c`, label `c`.
    fn cliques(train: Vec<bool>, val: Vec<bool>) -> Graph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j));
                }
            }
        }
        let features = Array2::from_shape_fn((10, 2), |(v, j)| f64::from(u8::from(v / 5 == j)));
        let labels = (0..10).map(|v| v / 5).collect();
        let masks = Masks::new(train, val, vec![false; 10]).unwrap();
        Graph::build(10, &edges, features, labels, masks).unwrap()
    }

    fn small_cfg() -> ModelConfig {
        ModelConfig {
            hidden_dim: 8,
            ..ModelConfig::new(8)
        }
    }

    #[test]
    fn separable_cliques_reach_full_train_accuracy() {
        let g = cliques(vec![true; 10], vec![false; 10]);
        let inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        let cfg = TrainConfig {
            learning_rate: 0.01,
            max_epochs: 200,
            ..TrainConfig::default()
        };
        let out = train(&inputs, &small_cfg(), &cfg).unwrap();
        assert_eq!(out.history.len(), 200);
        assert!(out.history.iter().any(|r| r.train_acc == 1.0));
        assert_eq!(out.history.last().unwrap().train_acc, 1.0);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let g = cliques(vec![true; 10], vec![false; 10]);
        let inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 15,
            ..TrainConfig::default()
        };
        let out = train(&inputs, &small_cfg(), &cfg).unwrap();
        assert_eq!(out.params, ModelParams::init(&small_cfg(), 2, 2, false));
    }

    #[test]
    fn same_seed_gives_identical_history() {
        let mut val = vec![false; 10];
        val[4] = true;
        val[9] = true;
        let train_mask = val.iter().map(|v| !v).collect();
        let g = cliques(train_mask, val);
        let inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        let cfg = TrainConfig {
            max_epochs: 30,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train(&inputs, &small_cfg(), &cfg).unwrap();
        let b = train(&inputs, &small_cfg(), &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(history_csv(&a.history), history_csv(&b.history));
        assert_eq!(a.params, b.params);
        let other = train(&inputs, &small_cfg(), &TrainConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.history, other.history);
    }

    #[test]
    fn early_stopping_keeps_best_epoch() {
        let mut val = vec![false; 10];
        val[4] = true;
        val[9] = true;
        let train_mask = val.iter().map(|v| !v).collect();
        let g = cliques(train_mask, val);
        let inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        let cfg = TrainConfig {
            learning_rate: 0.01,
            patience: 5,
            max_epochs: 500,
            ..TrainConfig::default()
        };
        let out = train(&inputs, &small_cfg(), &cfg).unwrap();
        let last = out.history.last().unwrap().epoch;
        assert_eq!(last - out.best_epoch, 5);
        let best_val = out.history[out.best_epoch - 1].val_acc.unwrap();
        assert!(out.history.iter().all(|r| r.val_acc.unwrap() <= best_val));
    }

    #[test]
    fn training_errors() {
        let g = cliques(vec![false; 10], vec![false; 10]);
        let inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        assert!(matches!(
            train(&inputs, &small_cfg(), &TrainConfig::default()),
            Err(NnError::NoTrainNodes)
        ));
        let g = cliques(vec![true; 10], vec![false; 10]);
        let mut inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        inputs.features[[0, 0]] = f64::NAN;
        assert!(matches!(
            train(&inputs, &small_cfg(), &TrainConfig::default()),
            Err(NnError::NonFiniteLoss { epoch: 1 })
        ));
    }

    #[test]
    fn history_csv_layout() {
        let csv = history_csv(&[
            EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                train_acc: 1.0,
                val_acc: Some(0.25),
            },
            EpochRecord {
                epoch: 2,
                train_loss: 0.5,
                train_acc: 1.0,
                val_acc: None,
            },
        ]);
        assert_eq!(
            csv,
            "epoch,train_loss,train_acc,val_acc\n1,0.5,1.0,0.25\n2,0.5,1.0,\n"
        );
    }
}
