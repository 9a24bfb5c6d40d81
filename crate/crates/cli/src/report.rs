use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use duognn_core::decouple::HomophilyReport;
use duognn_core::nn::Metrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoupleSummary {
    pub edges_removed: usize,
    pub components: usize,
    pub representatives: usize,
    pub g_he_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilySet {
    pub g: HomophilyReport,
    pub g_ho: HomophilyReport,
    pub g_he: HomophilyReport,
}

/// Outcome of training one model with one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub weight_seed: u64,
    pub dropout_seed: u64,
    /// Set when training failed; the metric fields are then absent.
    pub error: Option<String>,
    pub test: Option<Metrics>,
    pub val_accuracy: Option<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub epoch_ms: Option<MeanStd>,
    pub train_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub index: usize,
    pub duognn: ModelRun,
    pub gcn: ModelRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub accuracy: Option<MeanStd>,
    pub macro_specificity: Option<MeanStd>,
    /// Over every epoch of every successful run.
    pub epoch_ms: Option<MeanStd>,
}

impl Aggregate {
    pub fn over<'a>(runs: impl IntoIterator<Item = &'a ModelRun>, epoch_samples: &[f64]) -> Self {
        let runs: Vec<&ModelRun> = runs.into_iter().collect();
        let ok: Vec<&Metrics> = runs.iter().filter_map(|r| r.test.as_ref()).collect();
        let acc: Vec<f64> = ok.iter().map(|m| m.accuracy).collect();
        let spec: Vec<f64> = ok.iter().map(|m| m.macro_specificity).collect();
        Self {
            runs_ok: ok.len(),
            runs_failed: runs.len() - ok.len(),
            accuracy: MeanStd::of(&acc),
            macro_specificity: MeanStd::of(&spec),
            epoch_ms: MeanStd::of(epoch_samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load_ms: f64,
    pub decouple_ms: f64,
    pub train_duognn_ms: f64,
    pub train_gcn_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetSummary,
    pub decouple: DecoupleSummary,
    pub homophily: HomophilySet,
    pub runs: Vec<SeedRun>,
    pub duognn: Aggregate,
    pub gcn: Aggregate,
    pub timings: StageTimings,
}

impl RunReport {
    pub fn any_failed(&self) -> bool {
        self.duognn.runs_failed + self.gcn.runs_failed > 0
    }

    fn rows(&self) -> [(&'static str, &Aggregate); 2] {
        [("DuoGNN", &self.duognn), ("GCN", &self.gcn)]
    }

    /// Accuracy and macro specificity in percent, mean ± std over seeds.
    pub fn table_text(&self) -> String {
        let cell = |m: Option<MeanStd>| match m {
            Some(m) => format!("{:.2} ± {:.2}", 100.0 * m.mean, 100.0 * m.std),
            None => "n/a".to_string(),
        };
        let mut out = format!(
            "{:<8}  {:<16}  {:<16}\n",
            "model", "accuracy", "specificity"
        );
        for (name, agg) in self.rows() {
            writeln!(
                out,
                "{:<8}  {:<16}  {:<16}",
                name,
                cell(agg.accuracy),
                cell(agg.macro_specificity)
            )
            .unwrap();
        }
        out
    }

    /// Same table as CSV, fractions rather than percent.
    pub fn table_csv(&self) -> String {
        let pair = |m: Option<MeanStd>| match m {
            Some(m) => format!("{:?},{:?}", m.mean, m.std),
            None => ",".to_string(),
        };
        let mut out = String::from(
            "model,accuracy_mean,accuracy_std,macro_specificity_mean,macro_specificity_std\n",
        );
        for (name, agg) in self.rows() {
            writeln!(
                out,
                "{name},{},{}",
                pair(agg.accuracy),
                pair(agg.macro_specificity)
            )
            .unwrap();
        }
        out
    }
}
