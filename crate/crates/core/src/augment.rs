//! Technique catalog, chaining rules and the per-fold augmentation pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::generation::{augment_by_generation, train_generator, GenerationConfig, GenerationKind};
use crate::perturbation::{apply_transform, fit_transform, PerturbationConfig, PerturbationKind};
use crate::sampling::{apply_sampling, SamplingSpec, SamplingTechnique, SamplingWarning};
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Sampling,
    Perturbation,
    Generation,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Sampling => "sampling",
            Category::Perturbation => "perturbation",
            Category::Generation => "generation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stage {
    Sampling(SamplingSpec),
    Perturbation(PerturbationKind),
    Generation(GenerationKind),
}

impl Stage {
    pub fn category(&self) -> Category {
        match self {
            Stage::Sampling(_) => Category::Sampling,
            Stage::Perturbation(_) => Category::Perturbation,
            Stage::Generation(_) => Category::Generation,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Sampling(s) => s.technique.name(),
            Stage::Perturbation(p) => p.name(),
            Stage::Generation(g) => g.name(),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            Stage::Sampling(s) => s.technique.is_stochastic(),
            Stage::Perturbation(p) => p.is_stochastic(),
            Stage::Generation(_) => true,
        }
    }

    /// Looks a stage up by its display name (case-insensitive).
    pub fn parse(name: &str) -> Result<Stage> {
        catalog()
            .into_iter()
            .find(|s| s.name().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::InvalidTechnique(format!("unknown technique {name:?}")))
    }
}

/// All 21 single techniques: 9 sampling, 9 perturbation, 3 generation.
pub fn catalog() -> Vec<Stage> {
    SamplingTechnique::ALL
        .into_iter()
        .map(|t| Stage::Sampling(SamplingSpec::new(t)))
        .chain(PerturbationKind::ALL.into_iter().map(Stage::Perturbation))
        .chain(GenerationKind::ALL.into_iter().map(Stage::Generation))
        .collect()
}

const CHAIN_RULES: [(Category, Category); 3] = [
    (Category::Sampling, Category::Generation),
    (Category::Perturbation, Category::Sampling),
    (Category::Perturbation, Category::Generation),
];

/// Zero (baseline), one or two augmentation stages applied in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Stage>", into = "Vec<Stage>")]
pub struct AugmenterSpec {
    stages: Vec<Stage>,
}

impl TryFrom<Vec<Stage>> for AugmenterSpec {
    type Error = Error;

    fn try_from(stages: Vec<Stage>) -> Result<Self> {
        AugmenterSpec::new(stages)
    }
}

impl From<AugmenterSpec> for Vec<Stage> {
    fn from(spec: AugmenterSpec) -> Self {
        spec.stages
    }
}

pub const BASELINE_NAME: &str = "Baseline";

impl AugmenterSpec {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        match stages.as_slice() {
            [] | [_] => {}
            [a, b] => {
                if a.name() == b.name() {
                    return Err(Error::InvalidTechnique(format!("{} repeated in chain", a.name())));
                }
                if !CHAIN_RULES.contains(&(a.category(), b.category())) {
                    return Err(Error::InvalidTechnique(format!(
                        "chain {} -> {} not allowed",
                        a.category().name(),
                        b.category().name()
                    )));
                }
            }
            _ => return Err(Error::InvalidTechnique("at most two stages per chain".into())),
        }
        Ok(AugmenterSpec { stages })
    }

    pub fn identity() -> Self {
        AugmenterSpec { stages: Vec::new() }
    }

    pub fn single(stage: Stage) -> Self {
        AugmenterSpec { stages: vec![stage] }
    }

    /// Parses `"Baseline"`, `"SMOTE"` or `"NoiseAddition+SMOTE-ENN"`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case(BASELINE_NAME) || text.is_empty() {
            return Ok(Self::identity());
        }
        let stages = text.split('+').map(Stage::parse).collect::<Result<Vec<_>>>()?;
        Self::new(stages)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn is_baseline(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn name(&self) -> String {
        if self.is_baseline() {
            return BASELINE_NAME.to_string();
        }
        self.stages.iter().map(Stage::name).collect::<Vec<_>>().join("+")
    }

    /// `baseline`, a single category name, or `first->second` for chains.
    pub fn category(&self) -> String {
        match self.stages.as_slice() {
            [] => "baseline".to_string(),
            stages => stages.iter().map(|s| s.category().name()).collect::<Vec<_>>().join("->"),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.stages.iter().any(Stage::is_stochastic)
    }
}

impl fmt::Display for AugmenterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The 99 evaluated chains: every sampling technique followed by GAN, every
/// perturbation followed by every sampling technique, and every perturbation
/// followed by GAN. Sorted by (category pair, stage names).
pub fn enumerate_chains() -> Vec<AugmenterSpec> {
    let sampling: Vec<Stage> = catalog().into_iter().filter(|s| s.category() == Category::Sampling).collect();
    let perturbation: Vec<Stage> = catalog().into_iter().filter(|s| s.category() == Category::Perturbation).collect();
    let gan = Stage::Generation(GenerationKind::Gan);
    let mut chains: Vec<AugmenterSpec> = Vec::with_capacity(99);
    for s in &sampling {
        chains.push(AugmenterSpec::new(vec![*s, gan]).expect("valid chain"));
    }
    for p in &perturbation {
        for s in &sampling {
            chains.push(AugmenterSpec::new(vec![*p, *s]).expect("valid chain"));
        }
        chains.push(AugmenterSpec::new(vec![*p, gan]).expect("valid chain"));
    }
    chains.sort_by_key(|c| (c.category(), c.stages.iter().map(|s| s.name()).collect::<Vec<_>>()));
    chains
}

/// Knobs forwarded to the stages.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageConfig {
    pub perturbation: PerturbationConfig,
    pub generation: GenerationConfig,
}

/// Identifies one stage fit for observers.
#[derive(Debug, Clone, PartialEq)]
pub struct FitContext<'a> {
    pub model: &'a str,
    pub technique: &'a str,
    pub seed: u64,
    pub fold: usize,
    pub stage: &'a str,
}

/// Called with the exact rows every augmentation stage is fitted on. An error
/// aborts the run the stage belongs to.
pub trait FitObserver: Sync {
    fn before_fit(&self, ctx: &FitContext<'_>, rows: &TabularDataset) -> Result<()>;
}

/// Observer that does nothing.
pub struct NoObserver;

impl FitObserver for NoObserver {
    fn before_fit(&self, _: &FitContext<'_>, _: &TabularDataset) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub warnings: Vec<SamplingWarning>,
}

/// Runs every stage of `spec` on the training rows. Perturbations fitted on
/// the training rows are replayed on `test`; the other stages leave it alone.
pub fn augment(
    spec: &AugmenterSpec,
    train: TabularDataset,
    test: TabularDataset,
    cfg: &StageConfig,
    rng: &SeedStream,
    observer: &dyn FitObserver,
    ctx: FitContext<'_>,
) -> Result<Augmented> {
    let mut out = Augmented {
        train,
        test,
        warnings: Vec::new(),
    };
    for (i, stage) in spec.stages.iter().enumerate() {
        observer.before_fit(&FitContext { stage: stage.name(), ..ctx.clone() }, &out.train)?;
        let r = rng.derive(i as u64);
        match stage {
            Stage::Sampling(s) => {
                let res = apply_sampling(s, &out.train, &r)?;
                out.train = res.data;
                out.warnings.extend(res.warnings);
            }
            Stage::Perturbation(kind) => {
                let (fitted, train) = fit_transform(*kind, &out.train, &r, &cfg.perturbation)?;
                out.test = apply_transform(&fitted, &out.test)?;
                out.train = train;
            }
            Stage::Generation(kind) => {
                let model = train_generator(*kind, &out.train, &cfg.generation, &r.derive(0))?;
                out.train = augment_by_generation(&out.train, &model, &r.derive(1))?;
            }
        }
    }
    Ok(out)
}
