use std::collections::BTreeMap;

use super::dataset::TabularDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub group: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Leave-one-group-out folds, ordered by group identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedFolds {
    pub folds: Vec<Fold>,
}

impl GroupedFolds {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fold> {
        self.folds.iter()
    }
}

pub fn grouped_kfold(data: &TabularDataset) -> Result<GroupedFolds> {
    let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in data.groups().iter().enumerate() {
        by_group.entry(g.as_str()).or_default().push(i);
    }
    if by_group.len() < 2 {
        return Err(Error::GroupedCvImpossible(format!(
            "{} distinct group(s)",
            by_group.len()
        )));
    }
    let labels = data.labels();
    let mut folds = Vec::with_capacity(by_group.len());
    for (group, test) in &by_group {
        let train: Vec<usize> = (0..data.n_rows())
            .filter(|&i| data.groups()[i] != *group)
            .collect();
        let ones = train.iter().filter(|&&i| labels[i] == 1).count();
        if ones == 0 || ones == train.len() {
            return Err(Error::SingleClass(format!(
                "training rows of fold {group:?} contain a single class"
            )));
        }
        folds.push(Fold {
            group: group.to_string(),
            train,
            test: test.clone(),
        });
    }
    Ok(GroupedFolds { folds })
}
