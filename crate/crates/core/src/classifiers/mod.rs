//! Baseline binary classifiers behind one train/score interface.

mod ffs;
mod forest;
mod logistic;
mod mlp;
mod svm;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use ffs::{forward_feature_selection, FFS_MIN_IMPROVEMENT};
pub use forest::{Forest, ForestParams, Tree};
pub use logistic::{LogisticModel, LogisticParams};
pub use mlp::{mlp_loss, MlpModel, MlpParams};
pub use svm::{SvmModel, SvmParams};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "MLP")]
    Mlp,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Architecture::Lr, Architecture::Svm, Architecture::Rf, Architecture::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Lr => "LR",
            Architecture::Svm => "SVM",
            Architecture::Rf => "RF",
            Architecture::Mlp => "MLP",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("unknown model {name:?}")))
    }

    /// LR and SVM fit the same parameters regardless of seed.
    pub fn is_deterministic(self) -> bool {
        matches!(self, Architecture::Lr | Architecture::Svm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture")]
pub enum ModelSpec {
    #[serde(rename = "LR")]
    Lr(LogisticParams),
    #[serde(rename = "SVM")]
    Svm(SvmParams),
    #[serde(rename = "RF")]
    Rf(ForestParams),
    #[serde(rename = "MLP")]
    Mlp(MlpParams),
}

impl ModelSpec {
    pub fn default_for(arch: Architecture) -> Self {
        match arch {
            Architecture::Lr => ModelSpec::Lr(LogisticParams::default()),
            Architecture::Svm => ModelSpec::Svm(SvmParams::default()),
            Architecture::Rf => ModelSpec::Rf(ForestParams::default()),
            Architecture::Mlp => ModelSpec::Mlp(MlpParams::default()),
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            ModelSpec::Lr(_) => Architecture::Lr,
            ModelSpec::Svm(_) => Architecture::Svm,
            ModelSpec::Rf(_) => Architecture::Rf,
            ModelSpec::Mlp(_) => Architecture::Mlp,
        }
    }

    pub fn name(&self) -> &'static str {
        self.architecture().name()
    }

    pub fn is_deterministic(&self) -> bool {
        self.architecture().is_deterministic()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Lr(LogisticModel),
    Svm(SvmModel),
    Rf(Forest),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn architecture(&self) -> Architecture {
        match self {
            TrainedModel::Lr(_) => Architecture::Lr,
            TrainedModel::Svm(_) => Architecture::Svm,
            TrainedModel::Rf(_) => Architecture::Rf,
            TrainedModel::Mlp(_) => Architecture::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Lr(m) => m.weights.len(),
            TrainedModel::Svm(m) => m.support.ncols(),
            TrainedModel::Rf(m) => m.n_features,
            TrainedModel::Mlp(m) => m.net.input_dim(),
        }
    }

    /// Class-1 ranking scores: probability (LR, MLP), decision value (SVM),
    /// vote fraction (RF).
    pub fn score_matrix(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        Ok(match self {
            TrainedModel::Lr(m) => m.score(x),
            TrainedModel::Svm(m) => m.score(x),
            TrainedModel::Rf(m) => m.score(x),
            TrainedModel::Mlp(m) => m.score(x),
        })
    }

    pub fn score(&self, data: &TabularDataset) -> Result<Vec<f64>> {
        self.score_matrix(data.features())
    }
}

pub fn train(spec: &ModelSpec, data: &TabularDataset, rng: &SeedStream) -> Result<TrainedModel> {
    data.require_both_classes("classifier training")?;
    if data.n_rows() < 2 {
        return Err(Error::InvalidDataset("need at least two rows".into()));
    }
    if data.features().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset("non-finite features".into()));
    }
    let x = data.features();
    let y = data.labels();
    Ok(match spec {
        ModelSpec::Lr(p) => TrainedModel::Lr(logistic::fit(p, x, y)?),
        ModelSpec::Svm(p) => TrainedModel::Svm(svm::fit(p, x, y)?),
        ModelSpec::Rf(p) => TrainedModel::Rf(forest::fit(p, x, y, rng)?),
        ModelSpec::Mlp(p) => TrainedModel::Mlp(mlp::fit(p, x, y, rng)?),
    })
}
