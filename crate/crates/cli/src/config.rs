//! Sectioned TOML configuration with `--set key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use augbench::augment::{catalog, enumerate_chains, AugmenterSpec, StageConfig};
use augbench::classifiers::{Architecture, ForestParams, LogisticParams, MlpParams, ModelSpec, SvmParams};
use augbench::data::synthetic::SyntheticConfig;
use augbench::data::{load_csv, TabularDataset};
use augbench::generation::GenerationConfig;
use augbench::harness::{BhFamily, ExperimentConfig, Mode};
use augbench::perturbation::PerturbationConfig;
use augbench::stats::PowerConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// CSV file; the bundled synthetic benchmark is used when absent.
    pub path: Option<PathBuf>,
    pub label: String,
    pub group: String,
    pub synthetic: SyntheticConfig,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            path: None,
            label: "label".into(),
            group: "group".into(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    pub names: Vec<String>,
    pub lr: LogisticParams,
    pub svm: SvmParams,
    pub rf: ForestParams,
    pub mlp: MlpParams,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection {
            names: Architecture::ALL.iter().map(|a| a.name().to_string()).collect(),
            lr: LogisticParams::default(),
            svm: SvmParams::default(),
            rf: ForestParams::default(),
            mlp: MlpParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationSection {
    /// Technique names such as `SMOTE` or `NoiseAddition+SMOTE-ENN`; the
    /// words `singles` and `chains` expand to the 21 techniques and the 99
    /// chains.
    pub techniques: Vec<String>,
    pub noise_scale: f64,
    pub generation: GenerationConfig,
}

impl Default for AugmentationSection {
    fn default() -> Self {
        AugmentationSection {
            techniques: Vec::new(),
            noise_scale: PerturbationConfig::default().noise_scale,
            generation: GenerationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub n_seeds: usize,
    pub bootstrap_b: usize,
    pub fdr_q: f64,
    pub bh_family: BhFamily,
    pub master_seed: u64,
    pub use_ffs: bool,
    pub mode: Mode,
    pub unreliable_fraction: f64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        EvaluationSection {
            n_seeds: e.n_seeds,
            bootstrap_b: e.bootstrap_b,
            fdr_q: e.fdr_q,
            bh_family: e.bh_family,
            master_seed: 20_240_501,
            use_ffs: e.use_ffs,
            mode: e.mode,
            unreliable_fraction: e.unreliable_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSection {
    pub delta: f64,
    pub n: Vec<usize>,
    pub base_auc: f64,
    pub reps: usize,
    pub seed: u64,
    pub model: PowerConfig,
}

impl Default for PowerSection {
    fn default() -> Self {
        PowerSection {
            delta: 0.05,
            n: vec![1709, 591],
            base_auc: 0.64,
            reps: 2000,
            seed: 20_240_501,
            model: PowerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub data: DataSection,
    pub models: ModelsSection,
    pub augmentation: AugmentationSection,
    pub evaluation: EvaluationSection,
    pub power: PowerSection,
}

fn parse_value(text: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(text.to_string()),
    }
}

/// Applies one `section.key=value` override to a raw table.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("bad override key {key:?}");
    }
    let mut at = table;
    for p in &parts[..parts.len() - 1] {
        at = at
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {key:?} descends into a non-table value"))?;
    }
    at.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

impl Config {
    /// Reads `path` (if any), applies overrides and rejects unknown keys.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<Table>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: Config = Value::Table(table).try_into().context("invalid configuration")?;
        if let (Some(data), Some(dir)) = (cfg.data.path.as_mut(), path.and_then(Path::parent)) {
            if data.is_relative() {
                *data = dir.join(&*data);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the effective configuration text.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn load_data(&self) -> Result<TabularDataset> {
        match &self.data.path {
            Some(p) => load_csv(p, &self.data.label, &self.data.group).with_context(|| format!("loading {}", p.display())),
            None => Ok(self.data.synthetic.generate()?),
        }
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        self.models
            .names
            .iter()
            .map(|n| {
                Ok(match Architecture::parse(n)? {
                    Architecture::Lr => ModelSpec::Lr(self.models.lr.clone()),
                    Architecture::Svm => ModelSpec::Svm(self.models.svm.clone()),
                    Architecture::Rf => ModelSpec::Rf(self.models.rf.clone()),
                    Architecture::Mlp => ModelSpec::Mlp(self.models.mlp.clone()),
                })
            })
            .collect()
    }

    pub fn techniques(&self) -> Result<Vec<AugmenterSpec>> {
        let mut out = Vec::new();
        for t in &self.augmentation.techniques {
            match t.trim().to_ascii_lowercase().as_str() {
                "singles" => out.extend(catalog().into_iter().map(AugmenterSpec::single)),
                "chains" => out.extend(enumerate_chains()),
                _ => out.push(AugmenterSpec::parse(t)?),
            }
        }
        Ok(out)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let e = &self.evaluation;
        let cfg = ExperimentConfig {
            models: self.model_specs()?,
            techniques: self.techniques()?,
            n_seeds: e.n_seeds,
            bootstrap_b: e.bootstrap_b,
            fdr_q: e.fdr_q,
            bh_family: e.bh_family,
            master_seed: e.master_seed,
            use_ffs: e.use_ffs,
            mode: e.mode,
            stages: StageConfig {
                perturbation: PerturbationConfig {
                    noise_scale: self.augmentation.noise_scale,
                },
                generation: self.augmentation.generation.clone(),
            },
            unreliable_fraction: e.unreliable_fraction,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_and_replace_keys() {
        let mut t: Table = toml::from_str("[evaluation]\nn_seeds = 5\n").unwrap();
        apply_override(&mut t, "evaluation.n_seeds=2").unwrap();
        apply_override(&mut t, "augmentation.techniques=[\"SMOTE\"]").unwrap();
        apply_override(&mut t, "data.label=outcome").unwrap();
        let cfg: Config = Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.evaluation.n_seeds, 2);
        assert_eq!(cfg.augmentation.techniques, vec!["SMOTE"]);
        assert_eq!(cfg.data.label, "outcome");
        assert!(apply_override(&mut Table::new(), "novalue").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::load(None, &["evaluation.n_sedes=3".into()]).is_err());
        assert!(Config::load(None, &["bogus.x=1".into()]).is_err());
        assert!(Config::load(None, &["augmentation.generation.width=1".into()]).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = Config::load(None, &["evaluation.n_seeds=3".into(), "models.rf.n_trees=7".into()]).unwrap();
        let text = cfg.to_toml().unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        assert_eq!(cfg.hash().unwrap().len(), 64);
    }

    #[test]
    fn technique_keywords_expand() {
        let cfg = Config::load(None, &["augmentation.techniques=[\"singles\", \"chains\"]".into()]).unwrap();
        assert_eq!(cfg.techniques().unwrap().len(), 21 + 99);
        let bad = Config::load(None, &["augmentation.techniques=[\"SMOTE+SMOTE\"]".into()]).unwrap();
        assert!(bad.experiment().is_err());
    }
}
