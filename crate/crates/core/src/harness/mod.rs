//! Experiment orchestration: per-fold augmentation, per-seed repetition,
//! aggregation and reports.

mod report;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{aggregate, format_hms, Report, ReportRow};

use crate::augment::{augment, AugmenterSpec, FitContext, FitObserver, StageConfig};
use crate::classifiers::{forward_feature_selection, train, ModelSpec};
use crate::data::{grouped_kfold, GroupedFolds, TabularDataset};
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::stats::auc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Baseline cells only.
    Replicate,
    /// Baseline plus every configured technique.
    Augment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BhFamily {
    /// One adjustment across every non-baseline row of the report.
    Global,
    /// A separate adjustment per model.
    PerModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub models: Vec<ModelSpec>,
    /// Techniques besides the baseline, which is always run.
    pub techniques: Vec<AugmenterSpec>,
    pub n_seeds: usize,
    pub bootstrap_b: usize,
    pub fdr_q: f64,
    pub bh_family: BhFamily,
    pub master_seed: u64,
    pub use_ffs: bool,
    pub mode: Mode,
    pub stages: StageConfig,
    /// A cell with a larger share of failed runs is marked unreliable.
    pub unreliable_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: crate::classifiers::Architecture::ALL.into_iter().map(ModelSpec::default_for).collect(),
            techniques: Vec::new(),
            n_seeds: 100,
            bootstrap_b: 1000,
            fdr_q: 0.05,
            bh_family: BhFamily::Global,
            master_seed: 0,
            use_ffs: false,
            mode: Mode::Augment,
            stages: StageConfig::default(),
            unreliable_fraction: 0.05,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        if self.n_seeds == 0 || self.bootstrap_b == 0 {
            return Err(Error::Config("n_seeds and bootstrap_b must be positive".into()));
        }
        if !(self.fdr_q > 0.0 && self.fdr_q < 1.0) {
            return Err(Error::Config(format!("fdr_q {} not in (0, 1)", self.fdr_q)));
        }
        if !(0.0..=1.0).contains(&self.unreliable_fraction) {
            return Err(Error::Config("unreliable_fraction not in [0, 1]".into()));
        }
        let mut names: Vec<&str> = self.models.iter().map(ModelSpec::name).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.models.len() {
            return Err(Error::Config("duplicate model".into()));
        }
        self.stages.generation.validate()
    }

    /// Techniques actually run: the baseline first, then the configured ones
    /// (augment mode only), without duplicates.
    pub fn cell_techniques(&self) -> Vec<AugmenterSpec> {
        let mut out = vec![AugmenterSpec::identity()];
        if self.mode == Mode::Augment {
            for t in &self.techniques {
                if !out.iter().any(|o| o.name() == t.name()) {
                    out.push(t.clone());
                }
            }
        }
        out
    }
}

/// One (model, technique, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub technique: String,
    pub seed: u64,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
    pub elapsed_seconds: f64,
    /// Copied from seed 0 because model and augmentation are deterministic.
    pub replicated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub model: String,
    pub technique: String,
    pub seed: u64,
    pub fold: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

/// Stream for one run; depends only on names and indices, never on schedule.
pub fn run_stream(master_seed: u64, model: &str, technique: &str, seed: u64) -> SeedStream {
    SeedStream::new(master_seed).derive_str(model).derive_str(technique).derive(seed)
}

fn run_fold(
    model: &ModelSpec,
    aug: &AugmenterSpec,
    data: &TabularDataset,
    folds: &GroupedFolds,
    k: usize,
    cfg: &ExperimentConfig,
    seed: u64,
    observer: &dyn FitObserver,
) -> Result<f64> {
    let fold = &folds.folds[k];
    let technique = aug.name();
    let rng = run_stream(cfg.master_seed, model.name(), &technique, seed).derive(k as u64);
    let mut train_rows = data.subset(&fold.train);
    let mut test_rows = data.subset(&fold.test);
    if cfg.use_ffs {
        let inner = grouped_kfold(&train_rows)?;
        let cols = forward_feature_selection(model, &train_rows, &inner, &rng.derive_str("ffs"))?;
        train_rows = train_rows.select_columns(&cols);
        test_rows = test_rows.select_columns(&cols);
    }
    let ctx = FitContext {
        model: model.name(),
        technique: &technique,
        seed,
        fold: k,
        stage: "",
    };
    let out = augment(aug, train_rows, test_rows, &cfg.stages, &rng.derive_str("augment"), observer, ctx)?;
    let fitted = train(model, &out.train, &rng.derive_str("model"))?;
    auc(&fitted.score(&out.test)?, out.test.labels())
}

/// Runs every fold for one seed.
pub fn run_seed(
    model: &ModelSpec,
    aug: &AugmenterSpec,
    data: &TabularDataset,
    folds: &GroupedFolds,
    cfg: &ExperimentConfig,
    seed: u64,
    observer: &dyn FitObserver,
) -> std::result::Result<RunRecord, RunFailure> {
    let start = Instant::now();
    let mut fold_aucs = Vec::with_capacity(folds.len());
    for k in 0..folds.len() {
        match run_fold(model, aug, data, folds, k, cfg, seed, observer) {
            Ok(a) => fold_aucs.push(a),
            Err(e) => {
                return Err(RunFailure {
                    model: model.name().to_string(),
                    technique: aug.name(),
                    seed,
                    fold: k,
                    message: e.to_string(),
                })
            }
        }
    }
    let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
    Ok(RunRecord {
        model: model.name().to_string(),
        technique: aug.name(),
        seed,
        fold_aucs,
        mean_auc,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        replicated: false,
    })
}

/// Whether seeds can only differ through scheduling noise.
pub fn is_replicable(model: &ModelSpec, aug: &AugmenterSpec) -> bool {
    model.is_deterministic() && !aug.is_stochastic()
}

fn replicate(first: std::result::Result<RunRecord, RunFailure>, n_seeds: usize) -> CellOutcome {
    let mut out = CellOutcome::default();
    for s in 0..n_seeds as u64 {
        match &first {
            Ok(r) => out.records.push(RunRecord {
                seed: s,
                elapsed_seconds: if s == 0 { r.elapsed_seconds } else { 0.0 },
                replicated: s > 0,
                ..r.clone()
            }),
            Err(f) => out.failures.push(RunFailure { seed: s, ..f.clone() }),
        }
    }
    out
}

/// All `n_seeds` runs of one (model, technique) cell.
pub fn run_cell(
    model: &ModelSpec,
    aug: &AugmenterSpec,
    data: &TabularDataset,
    cfg: &ExperimentConfig,
    observer: &dyn FitObserver,
) -> Result<CellOutcome> {
    let folds = grouped_kfold(data)?;
    if is_replicable(model, aug) {
        return Ok(replicate(run_seed(model, aug, data, &folds, cfg, 0, observer), cfg.n_seeds));
    }
    let results: Vec<_> = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|s| run_seed(model, aug, data, &folds, cfg, s, observer))
        .collect();
    let mut out = CellOutcome::default();
    for r in results {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub n_folds: usize,
}

/// Runs the whole grid in parallel and returns records ordered by (model,
/// technique, seed) as configured.
pub fn run_experiment(data: &TabularDataset, cfg: &ExperimentConfig, observer: &dyn FitObserver) -> Result<ExperimentResult> {
    cfg.validate()?;
    let folds = grouped_kfold(data)?;
    let techniques = cfg.cell_techniques();
    let mut jobs = Vec::new();
    for (mi, m) in cfg.models.iter().enumerate() {
        for (ti, t) in techniques.iter().enumerate() {
            let seeds = if is_replicable(m, t) { 1 } else { cfg.n_seeds as u64 };
            jobs.extend((0..seeds).map(|s| (mi, ti, s)));
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(mi, ti, s)| run_seed(&cfg.models[mi], &techniques[ti], data, &folds, cfg, s, observer))
        .collect();
    let mut out = ExperimentResult {
        records: Vec::new(),
        failures: Vec::new(),
        n_folds: folds.len(),
    };
    for (&(mi, ti, _), r) in jobs.iter().zip(results) {
        let cell = if is_replicable(&cfg.models[mi], &techniques[ti]) {
            replicate(r, cfg.n_seeds)
        } else {
            match r {
                Ok(rec) => CellOutcome { records: vec![rec], failures: vec![] },
                Err(f) => CellOutcome { records: vec![], failures: vec![f] },
            }
        };
        out.records.extend(cell.records);
        out.failures.extend(cell.failures);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
