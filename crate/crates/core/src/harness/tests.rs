use std::collections::BTreeSet;
use std::sync::Mutex;

use super::*;
use crate::augment::{FitContext, FitObserver, NoObserver};
use crate::classifiers::{Architecture, ForestParams};
use crate::data::synthetic::SyntheticConfig;
use crate::generation::GenerationConfig;

fn small_data() -> TabularDataset {
    SyntheticConfig {
        rows: 240,
        features: 5,
        informative: 3,
        ..SyntheticConfig::default()
    }
    .generate()
    .unwrap()
}

fn small_cfg(models: &[Architecture], techniques: &[&str], n_seeds: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        models: models
            .iter()
            .map(|&a| match ModelSpec::default_for(a) {
                ModelSpec::Rf(p) => ModelSpec::Rf(ForestParams { n_trees: 10, ..p }),
                s => s,
            })
            .collect(),
        techniques: techniques.iter().map(|t| AugmenterSpec::parse(t).unwrap()).collect(),
        n_seeds,
        bootstrap_b: 200,
        master_seed: 7,
        ..ExperimentConfig::default()
    };
    cfg.stages.generation = GenerationConfig {
        latent_dim: 4,
        epochs: 2,
        hidden: vec![8, 8],
        ..GenerationConfig::default()
    };
    cfg
}

fn strip_time(mut r: RunRecord) -> RunRecord {
    r.elapsed_seconds = 0.0;
    r.replicated = false;
    r
}

#[test]
fn deterministic_baseline_replicates_records() {
    let data = small_data();
    let cfg = small_cfg(&[Architecture::Lr], &[], 4);
    let out = run_cell(&cfg.models[0], &AugmenterSpec::identity(), &data, &cfg, &NoObserver).unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert_eq!(r.fold_aucs.len(), 4);
        assert_eq!(r.fold_aucs, out.records[0].fold_aucs);
        let m = r.fold_aucs.iter().sum::<f64>() / r.fold_aucs.len() as f64;
        assert!((r.mean_auc - m).abs() < 1e-12);
    }
    assert_eq!(out.records.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert!(out.records[1..].iter().all(|r| r.replicated && r.elapsed_seconds == 0.0));
}

#[test]
fn cell_records_match_inside_and_outside_the_grid() {
    let data = small_data();
    let cfg = small_cfg(&[Architecture::Lr, Architecture::Rf], &["SMOTE", "NearMiss"], 3);
    let grid = run_experiment(&data, &cfg, &NoObserver).unwrap();
    assert_eq!(grid.records.len(), 2 * 3 * 3);
    assert!(grid.failures.is_empty());
    for model in &cfg.models {
        for tech in cfg.cell_techniques() {
            let alone = run_cell(model, &tech, &data, &cfg, &NoObserver).unwrap();
            let inside: Vec<RunRecord> = grid
                .records
                .iter()
                .filter(|r| r.model == model.name() && r.technique == tech.name())
                .cloned()
                .map(strip_time)
                .collect();
            assert_eq!(alone.records.into_iter().map(strip_time).collect::<Vec<_>>(), inside);
        }
    }
}

/// Records every fit input and flags rows whose origin lies in the test fold.
struct LeakageAudit {
    test_sets: Vec<BTreeSet<usize>>,
    fits: Mutex<usize>,
    violations: Mutex<Vec<String>>,
}

impl FitObserver for LeakageAudit {
    fn before_fit(&self, ctx: &FitContext<'_>, rows: &TabularDataset) -> crate::error::Result<()> {
        *self.fits.lock().unwrap() += 1;
        for o in rows.origin().iter().flatten() {
            if self.test_sets[ctx.fold].contains(o) {
                self.violations
                    .lock()
                    .unwrap()
                    .push(format!("{} {} seed {} fold {} row {o}", ctx.model, ctx.stage, ctx.seed, ctx.fold));
            }
        }
        Ok(())
    }
}

#[test]
fn no_test_row_reaches_an_augmentation_fit() {
    let data = small_data();
    let folds = grouped_kfold(&data).unwrap();
    let audit = LeakageAudit {
        test_sets: folds.iter().map(|f| f.test.iter().copied().collect()).collect(),
        fits: Mutex::new(0),
        violations: Mutex::new(Vec::new()),
    };
    let cfg = small_cfg(&[Architecture::Lr], &["SMOTE-ENN", "PCA+SMOTE", "Standardization+GAN", "SMOTE+GAN", "VAE"], 2);
    run_experiment(&data, &cfg, &audit).unwrap();
    // stages: 1 + 2 + 2 + 2 + 1 per fold and seed
    assert_eq!(*audit.fits.lock().unwrap(), 8 * 4 * 2);
    assert!(audit.violations.lock().unwrap().is_empty());
}

/// Captures the training-row origins seen by the first stage of each fold.
struct FoldRows(Mutex<Vec<(usize, Vec<usize>)>>);

impl FitObserver for FoldRows {
    fn before_fit(&self, ctx: &FitContext<'_>, rows: &TabularDataset) -> crate::error::Result<()> {
        let mut o: Vec<usize> = rows.origin().iter().flatten().copied().collect();
        o.sort_unstable();
        self.0.lock().unwrap().push((ctx.fold, o));
        Ok(())
    }
}

#[test]
fn feature_selection_keeps_fold_structure() {
    let data = small_data();
    let mut cfg = small_cfg(&[Architecture::Lr], &["NearMiss"], 1);
    let collect = |cfg: &ExperimentConfig| {
        let obs = FoldRows(Mutex::new(Vec::new()));
        let res = run_experiment(&data, cfg, &obs).unwrap();
        let mut rows = obs.0.into_inner().unwrap();
        rows.sort();
        (rows, res)
    };
    let (plain, a) = collect(&cfg);
    cfg.use_ffs = true;
    let (selected, b) = collect(&cfg);
    assert_eq!(plain, selected);
    assert_eq!(a.n_folds, b.n_folds);
}

/// Fails every stage fit of the chosen seeds.
struct FailSeeds(Vec<u64>);

impl FitObserver for FailSeeds {
    fn before_fit(&self, ctx: &FitContext<'_>, _: &TabularDataset) -> crate::error::Result<()> {
        if self.0.contains(&ctx.seed) {
            Err(crate::error::Error::InvalidParameter("injected fault".into()))
        } else {
            Ok(())
        }
    }
}

#[test]
fn failures_mark_cells_unreliable() {
    let data = small_data();
    let cfg = small_cfg(&[Architecture::Rf], &["SMOTE"], 20);
    let one = run_experiment(&data, &cfg, &FailSeeds(vec![3])).unwrap();
    assert_eq!(one.failures.len(), 1);
    assert_eq!(one.failures[0].fold, 0);
    assert!(one.failures[0].message.contains("injected fault"));
    let report = aggregate(&one.records, &one.failures, &cfg).unwrap();
    // 1 of 20 = 5%, not above the threshold
    assert!(!report.any_unreliable());
    let two = run_experiment(&data, &cfg, &FailSeeds(vec![3, 4])).unwrap();
    let report = aggregate(&two.records, &two.failures, &cfg).unwrap();
    let row = report.row("RF", "SMOTE").unwrap();
    assert!(row.unreliable);
    assert_eq!((row.failed_runs, row.runs), (2, 18));
    assert!(!report.row("RF", "Baseline").unwrap().unreliable);
}

fn fake_records(model: &str, technique: &str, values: &[f64]) -> Vec<RunRecord> {
    values
        .iter()
        .enumerate()
        .map(|(s, &v)| RunRecord {
            model: model.into(),
            technique: technique.into(),
            seed: s as u64,
            fold_aucs: vec![v; 4],
            mean_auc: v,
            elapsed_seconds: 1.0,
            replicated: false,
        })
        .collect()
}

#[test]
fn aggregate_matches_stats_oracle() {
    let cfg = small_cfg(&[Architecture::Lr, Architecture::Mlp], &["SMOTE", "NearMiss"], 10);
    let spread = |c: f64, w: f64| (0..10).map(|i| c + w * (i as f64 - 4.5) / 10.0).collect::<Vec<_>>();
    let mut records = Vec::new();
    records.extend(fake_records("LR", "Baseline", &[0.7; 10]));
    records.extend(fake_records("LR", "SMOTE", &spread(0.7, 0.01)));
    records.extend(fake_records("LR", "NearMiss", &[0.68; 10]));
    records.extend(fake_records("MLP", "Baseline", &spread(0.65, 0.02)));
    records.extend(fake_records("MLP", "SMOTE", &spread(0.69, 0.02)));
    records.extend(fake_records("MLP", "NearMiss", &spread(0.651, 0.02)));
    let report = aggregate(&records, &[], &cfg).unwrap();
    assert_eq!(report.rows.len(), 2 * 3);
    assert!(report.rows.iter().filter(|r| r.technique == "Baseline").all(|r| r.comparison.is_none() && !r.significant()));

    // oracle: same bootstrap streams, then BH by hand over the four comparisons
    let boot = |m: &str, t: &str, v: &[f64]| {
        let rng = SeedStream::new(cfg.master_seed).derive_str("bootstrap").derive_str(m).derive_str(t);
        crate::stats::bootstrap_auc_distribution(v, cfg.bootstrap_b, &rng).unwrap()
    };
    let cells = [
        ("LR", "SMOTE", spread(0.7, 0.01), vec![0.7; 10]),
        ("LR", "NearMiss", vec![0.68; 10], vec![0.7; 10]),
        ("MLP", "SMOTE", spread(0.69, 0.02), spread(0.65, 0.02)),
        ("MLP", "NearMiss", spread(0.651, 0.02), spread(0.65, 0.02)),
    ];
    let p: Vec<f64> = cells
        .iter()
        .map(|(m, t, v, b)| {
            crate::stats::compare_distributions(&boot(m, "Baseline", b), &boot(m, t, v)).unwrap().p_value
        })
        .collect();
    let flags = crate::stats::benjamini_hochberg(&p, 0.05);
    for ((m, t, _, _), (&pv, &flag)) in cells.iter().zip(p.iter().zip(&flags)) {
        let row = report.row(m, t).unwrap();
        assert_eq!(row.comparison.unwrap().p_value, pv);
        assert_eq!(row.significant(), flag, "{m} {t}");
    }
    assert!(report.row("LR", "NearMiss").unwrap().comparison.unwrap().degenerate);
    assert!(report.row("MLP", "SMOTE").unwrap().significant());
    assert!(!report.row("MLP", "NearMiss").unwrap().significant());

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("model,technique,category,mean_auc,sd_auc,z,p,p_adj_significant,runtime_seconds,failed_runs\n"));
    assert_eq!(text.lines().count(), 7);
    let md = report.to_markdown();
    assert!(md.contains("| SMOTE | sampling |"));
    assert!(md.contains("*0.690"));
    assert!(md.contains("00:00:20"));
}

#[test]
fn missing_baseline_is_an_error() {
    let cfg = small_cfg(&[Architecture::Lr], &["SMOTE"], 2);
    let records = fake_records("LR", "SMOTE", &[0.7, 0.71]);
    assert!(matches!(aggregate(&records, &[], &cfg), Err(crate::error::Error::MissingBaseline(_))));
}

#[test]
fn hms_formatting() {
    assert_eq!(format_hms(0.0), "00:00:00");
    assert_eq!(format_hms(3725.4), "01:02:05");
    assert_eq!(format_hms(59.6), "00:01:00");
}

#[test]
fn replicate_mode_runs_baseline_only() {
    let mut cfg = small_cfg(&[Architecture::Lr], &["SMOTE"], 2);
    cfg.mode = Mode::Replicate;
    assert_eq!(cfg.cell_techniques().len(), 1);
    cfg.n_seeds = 0;
    assert!(cfg.validate().is_err());
}
