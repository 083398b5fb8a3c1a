//! Class-rebalancing resamplers. Each takes a training split and returns a new
//! dataset; original rows are kept verbatim by every oversampler.

mod adasyn;
mod borderline;
mod cleaning;
mod kmeans;
mod nearmiss;
mod random;
mod smote;

use serde::{Deserialize, Serialize};

pub use adasyn::adasyn;
pub use borderline::borderline_smote;
pub use cleaning::{enn_filter, tomek_filter, tomek_filter_removing, tomek_links};
pub use kmeans::{kmeans, kmeans_smote, KMeans};
pub use nearmiss::nearmiss;
pub use random::{random_resample, ResampleMode};
pub use smote::{interpolate, smote, smote_enn, smote_tomek};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SamplingTechnique {
    Smote,
    Adasyn,
    BorderlineSmote,
    KMeansSmote,
    SmoteTomek,
    SmoteEnn,
    RandomOversample,
    RandomUndersample,
    NearMiss,
}

impl SamplingTechnique {
    pub const ALL: [SamplingTechnique; 9] = [
        SamplingTechnique::Smote,
        SamplingTechnique::Adasyn,
        SamplingTechnique::BorderlineSmote,
        SamplingTechnique::KMeansSmote,
        SamplingTechnique::SmoteTomek,
        SamplingTechnique::SmoteEnn,
        SamplingTechnique::RandomOversample,
        SamplingTechnique::RandomUndersample,
        SamplingTechnique::NearMiss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplingTechnique::Smote => "SMOTE",
            SamplingTechnique::Adasyn => "ADASYN",
            SamplingTechnique::BorderlineSmote => "BorderlineSMOTE",
            SamplingTechnique::KMeansSmote => "KMeansSMOTE",
            SamplingTechnique::SmoteTomek => "SMOTE-Tomek",
            SamplingTechnique::SmoteEnn => "SMOTE-ENN",
            SamplingTechnique::RandomOversample => "RandomOversample",
            SamplingTechnique::RandomUndersample => "RandomUndersample",
            SamplingTechnique::NearMiss => "NearMiss",
        }
    }

    /// Whether the output depends on the random stream.
    pub fn is_stochastic(self) -> bool {
        !matches!(self, SamplingTechnique::NearMiss)
    }
}

/// Technique plus its neighbourhood and clustering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub technique: SamplingTechnique,
    pub k_neighbors: usize,
    pub enn_neighbors: usize,
    pub kmeans_clusters: usize,
    pub nearmiss_version: u8,
}

impl SamplingSpec {
    pub fn new(technique: SamplingTechnique) -> Self {
        SamplingSpec {
            technique,
            k_neighbors: 5,
            enn_neighbors: 3,
            kmeans_clusters: 8,
            nearmiss_version: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 || self.enn_neighbors == 0 || self.kmeans_clusters == 0 {
            return Err(Error::InvalidParameter(
                "neighbour and cluster counts must be positive".into(),
            ));
        }
        if !(1..=3).contains(&self.nearmiss_version) {
            return Err(Error::InvalidParameter(format!(
                "NearMiss version {} not in {{1,2,3}}",
                self.nearmiss_version
            )));
        }
        Ok(())
    }
}

/// Non-fatal conditions raised while resampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplingWarning {
    NoDangerPoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub data: TabularDataset,
    pub warnings: Vec<SamplingWarning>,
}

impl From<TabularDataset> for Resampled {
    fn from(data: TabularDataset) -> Self {
        Resampled {
            data,
            warnings: Vec::new(),
        }
    }
}

pub fn apply_sampling(spec: &SamplingSpec, train: &TabularDataset, rng: &SeedStream) -> Result<Resampled> {
    spec.validate()?;
    let k = spec.k_neighbors;
    Ok(match spec.technique {
        SamplingTechnique::Smote => smote(train, k, rng)?.into(),
        SamplingTechnique::Adasyn => adasyn(train, k, rng)?.into(),
        SamplingTechnique::BorderlineSmote => borderline_smote(train, k, rng)?,
        SamplingTechnique::KMeansSmote => kmeans_smote(train, k, spec.kmeans_clusters, rng)?.into(),
        SamplingTechnique::SmoteTomek => smote_tomek(train, k, rng)?.into(),
        SamplingTechnique::SmoteEnn => smote_enn(train, k, spec.enn_neighbors, rng)?.into(),
        SamplingTechnique::RandomOversample => random_resample(train, ResampleMode::Over, rng)?.into(),
        SamplingTechnique::RandomUndersample => random_resample(train, ResampleMode::Under, rng)?.into(),
        SamplingTechnique::NearMiss => nearmiss(train, spec.nearmiss_version, k)?.into(),
    })
}

/// Minority/majority bookkeeping shared by the resamplers.
pub(crate) struct ClassSplit {
    pub minority_label: u8,
    pub minority: Vec<usize>,
    pub majority: Vec<usize>,
}

impl ClassSplit {
    pub fn of(data: &TabularDataset) -> Result<Self> {
        data.require_both_classes("resampling needs both classes")?;
        let minority_label = data.minority_label();
        Ok(ClassSplit {
            minority_label,
            minority: data.indices_of_label(minority_label),
            majority: data.indices_of_label(1 - minority_label),
        })
    }

    pub fn deficit(&self) -> usize {
        self.majority.len() - self.minority.len()
    }

    pub fn require_more_than(&self, k: usize) -> Result<()> {
        if self.minority.len() <= k {
            Err(Error::TooFewMinority {
                minority: self.minority.len(),
                k,
            })
        } else {
            Ok(())
        }
    }
}
