use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::forward;
use super::{ModelConfig, ModelInputs, ModelParams, NnError};
use crate::graph::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Mean one-vs-rest `TN / (TN + FP)` over classes with at least one
    /// negative among the evaluated nodes.
    pub macro_specificity: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub loss: f64,
}

fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (c, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = c;
        }
    }
    best
}

/// Accuracy, macro specificity and confusion counts of `predicted` against
/// `labels`. A class whose one-vs-rest negatives are all absent is skipped;
/// with no scorable class the specificity is 1.
pub fn score_predictions(
    predicted: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> (f64, f64, Vec<Vec<usize>>) {
    let mut confusion = vec![vec![0; num_classes]; num_classes];
    for (&p, &y) in predicted.iter().zip(labels) {
        confusion[y][p] += 1;
    }
    let total = predicted.len();
    let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
    let mut spec_sum = 0.0;
    let mut scored = 0;
    for (c, row) in confusion.iter().enumerate() {
        let positives: usize = row.iter().sum();
        let fp: usize = (0..num_classes)
            .filter(|&y| y != c)
            .map(|y| confusion[y][c])
            .sum();
        let negatives = total - positives;
        if negatives == 0 {
            continue;
        }
        let tn = negatives - fp;
        spec_sum += tn as f64 / negatives as f64;
        scored += 1;
    }
    let specificity = if scored == 0 {
        1.0
    } else {
        spec_sum / scored as f64
    };
    let accuracy = if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    };
    (accuracy, specificity, confusion)
}

/// Logits in evaluation mode (no dropout).
pub fn predict(
    params: &ModelParams,
    inputs: &ModelInputs,
    cfg: &ModelConfig,
) -> Result<Array2<f64>, NnError> {
    Ok(forward(inputs, params, cfg, None)?.logits)
}

pub(crate) fn metrics_from_logits(
    logits: &Array2<f64>,
    inputs: &ModelInputs,
    nodes: &[usize],
) -> Metrics {
    let predicted: Vec<usize> = nodes.iter().map(|&v| argmax(logits.row(v))).collect();
    let labels: Vec<usize> = nodes.iter().map(|&v| inputs.labels[v]).collect();
    let (accuracy, macro_specificity, confusion) =
        score_predictions(&predicted, &labels, inputs.num_classes);
    let (loss, _) = super::softmax_cross_entropy(logits, &inputs.labels, nodes);
    Metrics {
        accuracy,
        macro_specificity,
        confusion,
        loss,
    }
}

pub fn evaluate(
    params: &ModelParams,
    inputs: &ModelInputs,
    cfg: &ModelConfig,
    split: Split,
) -> Result<Metrics, NnError> {
    let nodes = inputs.masks.nodes(split);
    if nodes.is_empty() {
        return Err(NnError::EmptyMask(split));
    }
    let logits = predict(params, inputs, cfg)?;
    Ok(metrics_from_logits(&logits, inputs, &nodes))
}

/// Sum of Euclidean distances between the rows of every unordered node pair
/// with different labels. Small values mean classes have collapsed together.
pub fn class_separation(x: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = x.nrows();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            if labels[u] != labels[v] {
                let d: f64 = x
                    .row(u)
                    .iter()
                    .zip(x.row(v).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                total += d.sqrt();
            }
        }
    }
    total
}

/// [`class_separation`] of each homophilic layer output, evaluation mode.
pub fn oversmoothing_profile(
    params: &ModelParams,
    inputs: &ModelInputs,
    cfg: &ModelConfig,
) -> Result<Vec<f64>, NnError> {
    let fwd = forward(inputs, params, cfg, None)?;
    Ok(fwd
        .homophilic_layers()
        .iter()
        .map(|x| class_separation(x, &inputs.labels))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, Masks};
    use crate::nn::HomophilicNorm;
    use ndarray::array;

    #[test]
    fn perfect_predictions() {
        let (acc, spec, conf) = score_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], 3);
        assert_eq!((acc, spec), (1.0, 1.0));
        assert_eq!(conf, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn three_class_hand_example() {
        let (acc, spec, conf) = score_predictions(&[0, 0, 0], &[0, 1, 2], 3);
        assert!((acc - 1.0 / 3.0).abs() < 1e-15);
        assert!((spec - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(conf.iter().flatten().sum::<usize>(), 3);
    }

    #[test]
    fn single_class_population_skips_undefined_specificity() {
        // Class 0 has no negatives and is skipped.
        let (_, spec, _) = score_predictions(&[0, 0], &[0, 0], 3);
        assert_eq!(spec, 1.0);
        let (_, spec, _) = score_predictions(&[1, 0], &[0, 0], 3);
        assert_eq!(spec, (0.5 + 1.0) / 2.0);
    }

    #[test]
    fn separation_counts_only_cross_label_pairs() {
        let x = array![[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]];
        assert_eq!(class_separation(&x, &[0, 1, 1]), 5.0 + 0.0);
        assert_eq!(class_separation(&x, &[0, 0, 0]), 0.0);
    }

    #[test]
    fn evaluate_rejects_empty_mask() {
        let g = Graph::build(
            2,
            &[(0, 1)],
            array![[1.0], [2.0]],
            vec![0, 1],
            Masks::unassigned(2),
        )
        .unwrap();
        let cfg = crate::nn::ModelConfig::new(2);
        let inputs = ModelInputs::gcn(&g, HomophilicNorm::Symmetric);
        let params = ModelParams::init(&cfg, 1, 2, false);
        assert!(matches!(
            evaluate(&params, &inputs, &cfg, Split::Test),
            Err(NnError::EmptyMask(Split::Test))
        ));
        let profile = oversmoothing_profile(&params, &inputs, &cfg).unwrap();
        assert_eq!(profile.len(), 3);
        assert!(profile.iter().all(|&d| d >= 0.0));
    }
}
