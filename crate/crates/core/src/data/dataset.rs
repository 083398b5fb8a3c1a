use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// Group identifier given to rows produced by generative augmentation.
pub const SYNTHETIC_GROUP: &str = "synthetic";

/// Feature matrix with binary labels and group identifiers.
///
/// `origin` tracks, for each row, the index of the source row in the dataset
/// it was ultimately derived from (`None` for synthetic rows). It is
/// bookkeeping only and takes no part in any computation.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    groups: Vec<String>,
    feature_names: Vec<String>,
    origin: Vec<Option<usize>>,
}

impl TabularDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<u8>,
        groups: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        let origin = (0..n).map(Some).collect();
        let ds = TabularDataset {
            features,
            labels,
            groups,
            feature_names,
            origin,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if self.labels.len() != n || self.groups.len() != n || self.origin.len() != n {
            return Err(Error::InvalidDataset(format!(
                "row count mismatch: features {n}, labels {}, groups {}",
                self.labels.len(),
                self.groups.len()
            )));
        }
        if self.feature_names.len() != self.features.ncols() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                self.feature_names.len(),
                self.features.ncols()
            )));
        }
        if let Some(i) = self.labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidLabel {
                row: i,
                value: self.labels[i].to_string(),
            });
        }
        if let Some(((r, c), _)) = self.features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value at row {r}, column {c}"
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn origin(&self) -> &[Option<usize>] {
        &self.origin
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// `[count of label 0, count of label 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn has_both_classes(&self) -> bool {
        let c = self.class_counts();
        c[0] > 0 && c[1] > 0
    }

    pub fn require_both_classes(&self, context: &str) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(Error::SingleClass(context.to_string()))
        }
    }

    /// Label of the smaller class; ties resolve to label 1.
    pub fn minority_label(&self) -> u8 {
        let c = self.class_counts();
        if c[0] < c[1] {
            0
        } else {
            1
        }
    }

    pub fn label_vector(&self) -> Array1<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    pub fn indices_of_label(&self, label: u8) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> TabularDataset {
        TabularDataset {
            features: self.features.select(Axis(1), columns),
            labels: self.labels.clone(),
            groups: self.groups.clone(),
            feature_names: columns
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            origin: self.origin.clone(),
        }
    }

    /// Same rows, labels and groups with a replaced feature matrix.
    pub fn with_features(&self, features: Array2<f64>, names: Vec<String>) -> Result<Self> {
        let ds = TabularDataset {
            features,
            labels: self.labels.clone(),
            groups: self.groups.clone(),
            feature_names: names,
            origin: self.origin.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Appends synthetic rows (origin `None`).
    pub fn append_synthetic(
        &self,
        features: &Array2<f64>,
        labels: &[u8],
        group: &str,
    ) -> Result<Self> {
        if features.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: features.ncols(),
            });
        }
        let n = self.n_rows();
        let m = features.nrows();
        let mut all = Array2::zeros((n + m, self.n_features()));
        all.slice_mut(s![..n, ..]).assign(&self.features);
        all.slice_mut(s![n.., ..]).assign(features);
        let mut out_labels = self.labels.clone();
        out_labels.extend_from_slice(labels);
        let mut groups = self.groups.clone();
        groups.extend(std::iter::repeat_n(group.to_string(), m));
        let mut origin = self.origin.clone();
        origin.extend(std::iter::repeat_n(None, m));
        let ds = TabularDataset {
            features: all,
            labels: out_labels,
            groups,
            feature_names: self.feature_names.clone(),
            origin,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Rows of `self` followed by copies of the rows at `indices`.
    pub fn append_copies(&self, indices: &[usize]) -> TabularDataset {
        let mut order: Vec<usize> = (0..self.n_rows()).collect();
        order.extend_from_slice(indices);
        self.subset(&order)
    }

    /// Rows as plain vectors, for order-insensitive multiset comparisons.
    pub fn row_multiset(&self) -> Vec<(Vec<u64>, u8)> {
        let mut rows: Vec<(Vec<u64>, u8)> = (0..self.n_rows())
            .map(|i| {
                (
                    self.features.row(i).iter().map(|v| v.to_bits()).collect(),
                    self.labels[i],
                )
            })
            .collect();
        rows.sort();
        rows
    }
}
