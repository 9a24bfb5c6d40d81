//! Experiment configuration. Unknown keys are rejected everywhere; omitted
//! keys take documented defaults, and the filled-in result is written next to
//! every run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use duognn_core::data::{
    cosine_similarity_graph, generate_sbm, load_node_table, read_matrix, split_masks, SbmSpec,
    SplitSizes,
};
use duognn_core::decouple::DecoupleConfig;
use duognn_core::graph::{Graph, Masks};
use duognn_core::nn::{ModelConfig, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// `id<TAB>features..<TAB>label` rows plus an `id<TAB>id` edge list.
    NodeTable {
        nodes: PathBuf,
        edges: PathBuf,
    },
    Sbm(SbmSpec),
    /// Dense feature matrix, one label per line, and the `top_m` most
    /// cosine-similar pairs as edges.
    Matrix {
        features: PathBuf,
        labels: PathBuf,
        top_m: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stratify: bool,
}

fn default_num_seeds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub decouple: DecoupleConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Run `i` uses weight seed `model.seed + i` and dropout seed
    /// `train.seed + i`; the split is shared by all runs.
    #[serde(default = "default_num_seeds")]
    pub num_seeds: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses `path`; relative paths inside are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetConfig::NodeTable { nodes, edges } => {
                fix(nodes);
                fix(edges);
            }
            DatasetConfig::Matrix {
                features, labels, ..
            } => {
                fix(features);
                fix(labels);
            }
            DatasetConfig::Sbm(_) => {}
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.num_seeds == 0 {
            return Err(CliError::Config("num_seeds must be at least 1".into()));
        }
        if let DatasetConfig::Sbm(spec) = &self.dataset {
            spec.validate()?;
        }
        self.decouple.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builds the input graph with split masks applied.
    pub fn load_graph(&self) -> Result<Graph, CliError> {
        let g = load_dataset(&self.dataset)?;
        let s = &self.split;
        let masks: Masks = split_masks(
            g.num_nodes(),
            SplitSizes {
                train: s.train,
                val: s.val,
                test: s.test,
            },
            s.seed,
            s.stratify.then(|| g.labels()),
        )?;
        Ok(g.with_masks(masks)
            .map_err(duognn_core::data::DataError::from)?)
    }
}

fn load_dataset(cfg: &DatasetConfig) -> Result<Graph, CliError> {
    match cfg {
        DatasetConfig::NodeTable { nodes, edges } => Ok(load_node_table(nodes, edges)?.graph),
        DatasetConfig::Sbm(spec) => Ok(generate_sbm(spec)?),
        DatasetConfig::Matrix {
            features,
            labels,
            top_m,
        } => {
            let x = read_matrix(features)?;
            let text = fs::read_to_string(labels).map_err(CliError::io(labels))?;
            let raw: Vec<&str> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            if raw.len() != x.nrows() {
                return Err(duognn_core::data::DataError::LabelCount {
                    len: raw.len(),
                    num_nodes: x.nrows(),
                }
                .into());
            }
            let mut names: Vec<&str> = raw.clone();
            names.sort_unstable();
            names.dedup();
            let y: Vec<usize> = raw
                .iter()
                .map(|l| names.binary_search(l).expect("present"))
                .collect();
            let edges = cosine_similarity_graph(&x, *top_m)?;
            let n = x.nrows();
            let g = Graph::build(n, &edges, x, y, Masks::unassigned(n))
                .and_then(|g| g.with_num_classes(names.len()))
                .map_err(duognn_core::data::DataError::from)?;
            Ok(g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": {"kind": "sbm", "blocks": 2, "block_size": 10, "p_in": 0.5,
                    "p_out": 0.05, "feature_dim": 4, "seed": 1},
        "split": {"train": 8, "val": 4, "test": 8},
        "decouple": {"metric": {"kind": "curvature"}, "kappa": 3, "mu": 2},
        "model": {"hidden_dim": 8},
        "output_dir": "out"
    }"#;

    #[test]
    fn defaults_are_filled_and_round_trip() {
        let cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.num_seeds, 5);
        assert_eq!(cfg.model.num_layers, 3);
        assert_eq!(cfg.train, TrainConfig::default());
        let again: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let typo = MINIMAL.replace("\"kappa\"", "\"kapa\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&typo).is_err());
        let extra = MINIMAL.replace("\"hidden_dim\": 8", "\"hidden_dim\": 8, \"hiden\": 2");
        assert!(serde_json::from_str::<ExperimentConfig>(&extra).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        fs::write(&path, MINIMAL).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        let g = cfg.load_graph().unwrap();
        assert_eq!(g.num_nodes(), 20);
        assert_eq!(g.masks().count(duognn_core::graph::Split::Val), 4);
    }

    #[test]
    fn invalid_values_map_to_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        fs::write(&path, MINIMAL.replace("\"mu\": 2", "\"mu\": 0")).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap_err().exit_code(), 2);
        fs::write(&path, MINIMAL.replace("\"p_out\": 0.05", "\"p_out\": 0.9")).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap_err().exit_code(), 2);
        assert_eq!(
            ExperimentConfig::load(&dir.path().join("none.json"))
                .unwrap_err()
                .exit_code(),
            3
        );
    }
}
