use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use augbench::augment::{enumerate_chains, AugmenterSpec, FitObserver, NoObserver};
use augbench::data::{bkt_features as mastery_features, fit_bkt_grid, load_bkt_params, write_bkt_params, ResponseLog};
use augbench::data::{grouped_kfold, load_csv, TabularDataset};
use augbench::harness::{aggregate, is_replicable, run_experiment, ExperimentConfig, ExperimentResult, Report};
use augbench::stats::power_analysis;
use augbench::SeedStream;
use serde::Serialize;

use crate::config::Config;
use crate::GlobalArgs;

/// `println!` that returns an error instead of panicking on a closed pipe.
macro_rules! outln {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_UNRELIABLE: u8 = 2;

#[derive(Serialize)]
struct CellSummary<'a> {
    model: &'a str,
    technique: &'a str,
    runs: usize,
    failed_runs: usize,
    unreliable: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_sha256: String,
    master_seed: u64,
    effective_config: String,
    n_rows: usize,
    n_folds: usize,
    cells: Vec<CellSummary<'a>>,
    failures: &'a [augbench::harness::RunFailure],
    records: &'a [augbench::harness::RunRecord],
}

fn write_outputs(out: &Path, cfg: &Config, n_rows: usize, result: &ExperimentResult, report: &Report) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    report.write_csv(BufWriter::new(File::create(out.join("report.csv"))?))?;
    std::fs::write(out.join("report.md"), report.to_markdown())?;
    let manifest = Manifest {
        config_sha256: cfg.hash()?,
        master_seed: cfg.evaluation.master_seed,
        effective_config: cfg.to_toml()?,
        n_rows,
        n_folds: result.n_folds,
        cells: report
            .rows
            .iter()
            .map(|r| CellSummary {
                model: &r.model,
                technique: &r.technique,
                runs: r.runs,
                failed_runs: r.failed_runs,
                unreliable: r.unreliable,
            })
            .collect(),
        failures: &result.failures,
        records: &result.records,
    };
    let mut w = BufWriter::new(File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// `techniques` replaces the configured technique list when given.
pub fn run(args: &GlobalArgs, techniques: Option<Vec<AugmenterSpec>>) -> Result<u8> {
    let cfg = Config::load(args.config.as_deref(), &args.overrides)?;
    let mut exp = cfg.experiment()?;
    if let Some(t) = techniques {
        exp.techniques = t;
    }
    if args.dry_run {
        for m in &exp.models {
            for t in exp.cell_techniques() {
                let runs = if is_replicable(m, &t) { 1 } else { exp.n_seeds };
                outln!("{}\t{}\t{} run(s)", m.name(), t.name(), runs);
            }
        }
        return Ok(EXIT_OK);
    }
    let data = cfg.load_data()?;
    execute(&cfg, &exp, &data, &NoObserver, &args.out)
}

/// Runs the grid, writes the outputs and maps the report to an exit code.
fn execute(
    cfg: &Config,
    exp: &ExperimentConfig,
    data: &TabularDataset,
    observer: &dyn FitObserver,
    out: &Path,
) -> Result<u8> {
    let result = run_experiment(data, exp, observer)?;
    for f in &result.failures {
        eprintln!(
            "warning: run failed (model {}, technique {}, seed {}, fold {}): {}",
            f.model, f.technique, f.seed, f.fold, f.message
        );
    }
    let report = aggregate(&result.records, &result.failures, exp)?;
    write_outputs(out, cfg, data.n_rows(), &result, &report)?;
    outln!("{}", report.to_markdown());
    if report.any_unreliable() {
        eprintln!("warning: at least one cell exceeded the failed-run threshold");
        return Ok(EXIT_UNRELIABLE);
    }
    Ok(EXIT_OK)
}

pub fn chains(args: &GlobalArgs, category: Option<&str>) -> Result<u8> {
    let mut list = enumerate_chains();
    if let Some(c) = category {
        let wanted = c.replace('→', "->").replace(' ', "").to_ascii_lowercase();
        list.retain(|s| s.category() == wanted);
        if list.is_empty() {
            bail!("no chains in category {c:?}");
        }
    }
    if args.dry_run {
        for s in &list {
            outln!("{}\t{}", s.category(), s.name());
        }
        return Ok(EXIT_OK);
    }
    run(args, Some(list))
}

pub fn power(args: &GlobalArgs, delta: Option<f64>, n: Vec<usize>, base_auc: Option<f64>, reps: Option<usize>) -> Result<u8> {
    let cfg = Config::load(args.config.as_deref(), &args.overrides)?;
    let p = &cfg.power;
    let delta = delta.unwrap_or(p.delta);
    let base = base_auc.unwrap_or(p.base_auc);
    let reps = reps.unwrap_or(p.reps);
    let sizes = if n.is_empty() { p.n.clone() } else { n };
    for size in sizes {
        let rng = SeedStream::new(p.seed).derive(size as u64);
        let power = power_analysis(delta, size, base, reps, &p.model, &rng)?;
        outln!("n={size}\tdelta={delta}\tbase_auc={base}\treps={reps}\tpower={power:.4}");
    }
    Ok(EXIT_OK)
}

pub fn bkt_features(args: &GlobalArgs, responses: &Path, params: Option<&Path>) -> Result<u8> {
    let log = ResponseLog::read_csv(File::open(responses).with_context(|| format!("opening {}", responses.display()))?)?;
    let params = match params {
        Some(p) => load_bkt_params(File::open(p).with_context(|| format!("opening {}", p.display()))?)?,
        None => log
            .topics()
            .into_iter()
            .map(|t| {
                let fitted = fit_bkt_grid(&log.sequences_for(&t));
                (t, fitted)
            })
            .collect::<BTreeMap<_, _>>(),
    };
    let (x, names) = mastery_features(&log, &params)?;
    std::fs::create_dir_all(&args.out)?;
    write_bkt_params(&params, File::create(args.out.join("bkt_params.csv"))?)?;
    let mut w = csv_writer(&args.out.join("bkt_features.csv"))?;
    let mut header = vec!["student".to_string()];
    header.extend(names);
    w.write_record(&header)?;
    for (i, (student, _)) in log.students.iter().enumerate() {
        let mut row = vec![student.clone()];
        row.extend(x.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    outln!("{} students x {} topics -> {}", x.nrows(), x.ncols(), args.out.join("bkt_features.csv").display());
    Ok(EXIT_OK)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn validate_data(args: &GlobalArgs, data: Option<&Path>) -> Result<u8> {
    let cfg = Config::load(args.config.as_deref(), &args.overrides)?;
    let ds = match data {
        Some(p) => load_csv(p, &cfg.data.label, &cfg.data.group).with_context(|| format!("loading {}", p.display()))?,
        None => cfg.load_data()?,
    };
    let [c0, c1] = ds.class_counts();
    let folds = grouped_kfold(&ds)?;
    outln!("rows: {}", ds.n_rows());
    outln!("features: {}", ds.n_features());
    outln!("class counts: 0={c0} 1={c1}");
    outln!("groups/folds: {}", folds.len());
    for f in folds.iter() {
        outln!("  {}: train {} test {}", f.group, f.train.len(), f.test.len());
    }
    Ok(EXIT_OK)
}
