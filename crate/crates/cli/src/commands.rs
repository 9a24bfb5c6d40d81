use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use duognn_core::decouple::{decouple, homophily_report, DecoupleResult};
use duognn_core::graph::{Graph, Split};
use duognn_core::nn::{
    evaluate, history_csv, save_checkpoint, train, ModelConfig, ModelInputs, NnError, TrainConfig,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{
    Aggregate, DatasetSummary, DecoupleSummary, HomophilySet, MeanStd, ModelRun, RunReport,
    SeedRun, StageTimings,
};

pub const REPORT_FILE: &str = "metrics.json";
pub const CONFIG_FILE: &str = "effective_config.json";

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct CommandArgs {
    pub config: PathBuf,
    /// Replaces `output_dir` from the config.
    pub out: Option<PathBuf>,
    pub overwrite: bool,
    /// Replaces both `model.seed` and `train.seed`.
    pub seed: Option<u64>,
}

/// The configuration after file defaults and command-line overrides.
pub fn effective_config(args: &CommandArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.model.seed = seed;
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, body).map_err(CliError::io(path))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// Creates `dir`, refusing a non-empty existing one unless `overwrite`.
fn prepare_output(dir: &Path, overwrite: bool) -> Result<(), CliError> {
    if dir.exists() && !overwrite {
        let mut entries = fs::read_dir(dir).map_err(CliError::io(dir))?;
        if entries.next().is_some() {
            return Err(CliError::Config(format!(
                "{} already exists and is not empty; pass --overwrite to replace its contents",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn write_decouple_artifacts(
    dir: &Path,
    g: &Graph,
    d: &DecoupleResult,
) -> Result<HomophilySet, CliError> {
    d.write_artifacts(dir).map_err(CliError::io(dir))?;
    write(&dir.join("edge_scores.csv"), d.scores.to_csv(g))?;
    let set = HomophilySet {
        g: homophily_report(g),
        g_ho: homophily_report(&d.g_ho),
        g_he: homophily_report(&d.g_he),
    };
    for (name, r) in [("g", &set.g), ("g_ho", &set.g_ho), ("g_he", &set.g_he)] {
        write(
            &dir.join(format!("homophily_{name}.csv")),
            r.histogram_csv(),
        )?;
    }
    let summary = serde_json::json!({
        "g": set.g.summary(),
        "g_ho": set.g_ho.summary(),
        "g_he": set.g_he.summary(),
    });
    write(&dir.join("homophily.json"), to_json(&summary))?;
    Ok(set)
}

fn decouple_summary(g: &Graph, d: &DecoupleResult) -> DecoupleSummary {
    DecoupleSummary {
        edges_removed: g.num_edges() - d.g_ho.num_edges(),
        components: d.labeling.num_components(),
        representatives: d.representatives.len(),
        g_he_edges: d.g_he.num_edges(),
    }
}

/// Writes the filtered and condensed graphs, edge scores and homophily
/// histograms. Returns a one-line summary.
pub fn cmd_decouple(args: &CommandArgs) -> Result<String, CliError> {
    let cfg = effective_config(args)?;
    let g = cfg.load_graph()?;
    let d = decouple(&g, &cfg.decouple)?;
    prepare_output(&cfg.output_dir, args.overwrite)?;
    write(&cfg.output_dir.join(CONFIG_FILE), cfg.to_json())?;
    write_decouple_artifacts(&cfg.output_dir, &g, &d)?;
    let s = decouple_summary(&g, &d);
    Ok(format!(
        "removed {} of {} edges; {} components; |V_he| = {} ({} edges)",
        s.edges_removed,
        g.num_edges(),
        s.components,
        s.representatives,
        s.g_he_edges
    ))
}

/// Trains one model and evaluates it on the test split. A non-finite loss
/// is recorded in the returned run; any other failure aborts.
fn run_model(
    inputs: &ModelInputs,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    dir: &Path,
    name: &str,
) -> Result<(ModelRun, Vec<f64>), CliError> {
    let start = Instant::now();
    let mut run = ModelRun {
        weight_seed: model.seed,
        dropout_seed: train_cfg.seed,
        error: None,
        test: None,
        val_accuracy: None,
        best_epoch: 0,
        epochs_run: 0,
        epoch_ms: None,
        train_ms: 0.0,
    };
    let outcome = match train(inputs, model, train_cfg) {
        Ok(o) => o,
        Err(e @ NnError::NonFiniteLoss { .. }) => {
            run.error = Some(e.to_string());
            run.train_ms = ms_since(start);
            return Ok((run, Vec::new()));
        }
        Err(e) => return Err(e.into()),
    };
    run.train_ms = ms_since(start);
    run.best_epoch = outcome.best_epoch;
    run.epochs_run = outcome.history.len();
    run.epoch_ms = MeanStd::of(&outcome.epoch_ms);
    run.test = Some(evaluate(&outcome.params, inputs, model, Split::Test)?);
    if inputs.masks.count(Split::Val) > 0 {
        run.val_accuracy = Some(evaluate(&outcome.params, inputs, model, Split::Val)?.accuracy);
    }
    write(
        &dir.join(format!("{name}_history.csv")),
        history_csv(&outcome.history),
    )?;
    save_checkpoint(
        &dir.join(format!("{name}.ckpt")),
        &outcome.params,
        model,
        model.seed,
        outcome.best_epoch,
    )?;
    Ok((run, outcome.epoch_ms))
}

/// Trains DuoGNN and the GCN control for every seed and writes checkpoints,
/// histories and `metrics.json`. Fails with a numeric error after writing
/// everything if any seed diverged.
pub fn cmd_train(args: &CommandArgs) -> Result<RunReport, CliError> {
    let cfg = effective_config(args)?;
    let t = Instant::now();
    let g = cfg.load_graph()?;
    let load_ms = ms_since(t);
    if g.masks().count(Split::Test) == 0 {
        return Err(CliError::Config("the test split is empty".into()));
    }
    let t = Instant::now();
    let d = decouple(&g, &cfg.decouple)?;
    let decouple_ms = ms_since(t);

    prepare_output(&cfg.output_dir, args.overwrite)?;
    write(&cfg.output_dir.join(CONFIG_FILE), cfg.to_json())?;
    let homophily = write_decouple_artifacts(&cfg.output_dir, &g, &d)?;

    let norm = cfg.model.homophilic_norm;
    let duo_inputs = ModelInputs::duo(&d, norm);
    let gcn_inputs = ModelInputs::gcn(&g, norm);
    let mut runs = Vec::new();
    let (mut duo_epochs, mut gcn_epochs) = (Vec::new(), Vec::new());
    let (mut duo_ms, mut gcn_ms) = (0.0, 0.0);
    for i in 0..cfg.num_seeds {
        let dir = cfg.output_dir.join(format!("seed_{i}"));
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        let model = ModelConfig {
            seed: cfg.model.seed + i as u64,
            ..cfg.model.clone()
        };
        let train_cfg = TrainConfig {
            seed: cfg.train.seed + i as u64,
            ..cfg.train.clone()
        };
        let (duognn, e) = run_model(&duo_inputs, &model, &train_cfg, &dir, "duognn")?;
        duo_epochs.extend(e);
        duo_ms += duognn.train_ms;
        let (gcn, e) = run_model(&gcn_inputs, &model, &train_cfg, &dir, "gcn")?;
        gcn_epochs.extend(e);
        gcn_ms += gcn.train_ms;
        runs.push(SeedRun {
            index: i,
            duognn,
            gcn,
        });
    }

    let masks = g.masks();
    let report = RunReport {
        dataset: DatasetSummary {
            num_nodes: g.num_nodes(),
            num_edges: g.num_edges(),
            num_classes: g.num_classes(),
            feature_dim: g.feature_dim(),
            train: masks.count(Split::Train),
            val: masks.count(Split::Val),
            test: masks.count(Split::Test),
        },
        decouple: decouple_summary(&g, &d),
        homophily,
        duognn: Aggregate::over(runs.iter().map(|r| &r.duognn), &duo_epochs),
        gcn: Aggregate::over(runs.iter().map(|r| &r.gcn), &gcn_epochs),
        runs,
        timings: StageTimings {
            load_ms,
            decouple_ms,
            train_duognn_ms: duo_ms,
            train_gcn_ms: gcn_ms,
        },
    };
    write(&cfg.output_dir.join(REPORT_FILE), to_json(&report))?;
    if report.any_failed() {
        return Err(CliError::Numeric(format!(
            "{} DuoGNN and {} GCN runs hit a non-finite loss; see {}",
            report.duognn.runs_failed,
            report.gcn.runs_failed,
            cfg.output_dir.join(REPORT_FILE).display()
        )));
    }
    Ok(report)
}

pub const REPORT_OUTPUTS: [&str; 5] = [
    "comparison.txt",
    "comparison.csv",
    "histogram_g.csv",
    "histogram_g_ho.csv",
    "histogram_g_he.csv",
];

/// Renders the comparison table and histogram CSVs from a finished run
/// directory. Returns the text table.
pub fn cmd_report(args: &CommandArgs) -> Result<String, CliError> {
    let cfg = effective_config(args)?;
    let dir = &cfg.output_dir;
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::Config(format!(
            "no run artifacts at {} ({e}); run `duognn train` first",
            path.display()
        ))
    })?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !args.overwrite {
        if let Some(existing) = REPORT_OUTPUTS
            .iter()
            .map(|f| dir.join(f))
            .find(|p| p.exists())
        {
            return Err(CliError::Config(format!(
                "{} already exists; pass --overwrite to replace it",
                existing.display()
            )));
        }
    }
    let table = report.table_text();
    let h = &report.homophily;
    let histograms = [&h.g, &h.g_ho, &h.g_he].map(|r| r.histogram_csv());
    let bodies = [
        table.clone(),
        report.table_csv(),
        histograms[0].clone(),
        histograms[1].clone(),
        histograms[2].clone(),
    ];
    for (name, body) in REPORT_OUTPUTS.iter().zip(bodies) {
        write(&dir.join(name), body)?;
    }
    Ok(table)
}
