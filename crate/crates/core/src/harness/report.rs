use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{BhFamily, ExperimentConfig, RunFailure, RunRecord};
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::stats::{benjamini_hochberg, bootstrap_auc_distribution, compare_distributions, ComparisonResult};
use crate::util::{mean, sample_variance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub model: String,
    pub technique: String,
    pub category: String,
    pub runs: usize,
    pub mean_auc: Option<f64>,
    pub sd_auc: Option<f64>,
    /// Against the same model's baseline; `None` for the baseline itself or
    /// when every run failed.
    pub comparison: Option<ComparisonResult>,
    pub runtime_seconds: f64,
    pub failed_runs: usize,
    pub unreliable: bool,
}

impl ReportRow {
    pub fn significant(&self) -> bool {
        self.comparison.is_some_and(|c| c.significant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub models: Vec<String>,
    pub techniques: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Seconds as `hh:mm:ss` (rounded to the nearest second).
pub fn format_hms(seconds: f64) -> String {
    let s = seconds.max(0.0).round() as u64;
    format!("{:02}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Summarizes records per (model, technique), compares each technique with
/// its model's baseline and applies Benjamini-Hochberg.
pub fn aggregate(records: &[RunRecord], failures: &[RunFailure], cfg: &ExperimentConfig) -> Result<Report> {
    let techniques = cfg.cell_techniques();
    let mut by_cell: BTreeMap<(&str, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_cell.entry((r.model.as_str(), r.technique.clone())).or_default().push(r);
    }
    let boot_root = SeedStream::new(cfg.master_seed).derive_str("bootstrap");
    let mut rows = Vec::new();
    for model in &cfg.models {
        let name = model.name();
        let mut base_boot: Option<Vec<f64>> = None;
        for tech in &techniques {
            let tname = tech.name();
            let mut cell = by_cell.remove(&(name, tname.clone())).unwrap_or_default();
            cell.sort_by_key(|r| r.seed);
            let means: Vec<f64> = cell.iter().map(|r| r.mean_auc).collect();
            let failed = failures.iter().filter(|f| f.model == name && f.technique == tname).count();
            let boot = if means.is_empty() {
                None
            } else {
                let rng = boot_root.derive_str(name).derive_str(&tname);
                Some(bootstrap_auc_distribution(&means, cfg.bootstrap_b, &rng)?)
            };
            let comparison = if tech.is_baseline() {
                base_boot = Some(boot.clone().ok_or_else(|| Error::MissingBaseline(name.to_string()))?);
                None
            } else {
                let base = base_boot.as_ref().ok_or_else(|| Error::MissingBaseline(name.to_string()))?;
                boot.as_ref().map(|b| compare_distributions(base, b)).transpose()?
            };
            rows.push(ReportRow {
                model: name.to_string(),
                technique: tname,
                category: tech.category(),
                runs: means.len(),
                mean_auc: (!means.is_empty()).then(|| mean(&means)),
                sd_auc: (!means.is_empty()).then(|| sample_variance(&means).sqrt()),
                comparison,
                runtime_seconds: cell.iter().map(|r| r.elapsed_seconds).sum(),
                failed_runs: failed,
                unreliable: failed as f64 > cfg.unreliable_fraction * cfg.n_seeds as f64,
            });
        }
    }
    apply_bh(&mut rows, cfg);
    Ok(Report {
        models: cfg.models.iter().map(|m| m.name().to_string()).collect(),
        techniques: techniques.iter().map(|t| t.name()).collect(),
        rows,
    })
}

fn apply_bh(rows: &mut [ReportRow], cfg: &ExperimentConfig) {
    let mut families: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        if r.comparison.is_some() {
            let key = match cfg.bh_family {
                BhFamily::Global => String::new(),
                BhFamily::PerModel => r.model.clone(),
            };
            families.entry(key).or_default().push(i);
        }
    }
    for members in families.values() {
        let p: Vec<f64> = members.iter().map(|&i| rows[i].comparison.expect("member").p_value).collect();
        for (&i, reject) in members.iter().zip(benjamini_hochberg(&p, cfg.fdr_q)) {
            if let Some(c) = rows[i].comparison.as_mut() {
                c.significant = reject;
            }
        }
    }
}

impl Report {
    pub fn row(&self, model: &str, technique: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model && r.technique == technique)
    }

    pub fn any_unreliable(&self) -> bool {
        self.rows.iter().any(|r| r.unreliable)
    }

    /// Machine-readable report, one row per (model, technique).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record([
            "model",
            "technique",
            "category",
            "mean_auc",
            "sd_auc",
            "z",
            "p",
            "p_adj_significant",
            "runtime_seconds",
            "failed_runs",
        ])
        .map_err(err)?;
        for r in &self.rows {
            let c = r.comparison.as_ref();
            w.write_record([
                r.model.clone(),
                r.technique.clone(),
                r.category.clone(),
                fmt_opt(r.mean_auc),
                fmt_opt(r.sd_auc),
                fmt_opt(c.map(|c| c.z)),
                fmt_opt(c.map(|c| c.p_value)),
                r.significant().to_string(),
                format!("{:.3}", r.runtime_seconds),
                r.failed_runs.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    /// Human-readable table: one row per technique, one column per model,
    /// `*` marking BH-significant differences from the baseline.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Technique | Category |");
        for m in &self.models {
            out.push_str(&format!(" {m} |"));
        }
        out.push_str(" Overall | Runtime |\n|---|---|");
        out.push_str(&"---|".repeat(self.models.len() + 2));
        out.push('\n');
        for t in &self.techniques {
            let cells: Vec<&ReportRow> = self.rows.iter().filter(|r| &r.technique == t).collect();
            let category = cells.first().map(|r| r.category.as_str()).unwrap_or("");
            out.push_str(&format!("| {t} | {category} |"));
            for m in &self.models {
                let text = match cells.iter().find(|r| &r.model == m) {
                    Some(r) => match (r.mean_auc, r.sd_auc) {
                        (Some(mu), Some(sd)) => format!(
                            "{}{mu:.3} ({sd:.3}){}",
                            if r.significant() { "*" } else { "" },
                            if r.unreliable { " !" } else { "" }
                        ),
                        _ => "failed".to_string(),
                    },
                    None => String::new(),
                };
                out.push_str(&format!(" {text} |"));
            }
            let means: Vec<f64> = cells.iter().filter_map(|r| r.mean_auc).collect();
            let overall = if means.len() == self.models.len() && !means.is_empty() {
                format!("{:.3}", mean(&means))
            } else {
                "n/a".to_string()
            };
            let runtime: f64 = cells.iter().map(|r| r.runtime_seconds).sum();
            out.push_str(&format!(" {overall} | {} |\n", format_hms(runtime)));
        }
        out.push_str("\nCells show mean AUC (SD) across runs. `*` marks a difference from the same model's baseline that is significant after Benjamini-Hochberg adjustment; `!` marks a cell whose failed-run share exceeds the reliability threshold.\n");
        out
    }
}
