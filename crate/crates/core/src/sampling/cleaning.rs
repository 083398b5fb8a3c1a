use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::neighbors::knn_table;

/// Edited nearest neighbours: drops every row whose label disagrees with the
/// majority label of its `enn_k` nearest neighbours (itself excluded).
pub fn enn_filter(data: &TabularDataset, enn_k: usize) -> Result<TabularDataset> {
    if enn_k == 0 {
        return Err(Error::InvalidParameter("ENN needs at least one neighbour".into()));
    }
    if data.n_rows() <= enn_k {
        return Err(Error::InvalidParameter(format!(
            "ENN with k={enn_k} needs more than {enn_k} rows, got {}",
            data.n_rows()
        )));
    }
    let all: Vec<usize> = (0..data.n_rows()).collect();
    let table = knn_table(data.features(), &all, &all, enn_k);
    let labels = data.labels();
    let keep: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| {
            let disagree = table[i].iter().filter(|&&j| labels[j] != labels[i]).count();
            2 * disagree <= enn_k
        })
        .collect();
    let out = data.subset(&keep);
    if !out.has_both_classes() {
        return Err(Error::EnnRemovedClass);
    }
    Ok(out)
}

/// Cross-class pairs `(i, j)`, `i < j`, that are each other's nearest neighbour.
pub fn tomek_links(data: &TabularDataset) -> Vec<(usize, usize)> {
    if data.n_rows() < 2 {
        return Vec::new();
    }
    let all: Vec<usize> = (0..data.n_rows()).collect();
    let nn: Vec<usize> = knn_table(data.features(), &all, &all, 1)
        .into_iter()
        .map(|v| v[0])
        .collect();
    let labels = data.labels();
    (0..data.n_rows())
        .filter_map(|i| {
            let j = nn[i];
            (i < j && nn[j] == i && labels[i] != labels[j]).then_some((i, j))
        })
        .collect()
}

/// Removes the majority-class member of every Tomek link (both members when
/// the classes are tied).
pub fn tomek_filter(data: &TabularDataset) -> TabularDataset {
    let [zeros, ones] = data.class_counts();
    let target = match zeros.cmp(&ones) {
        std::cmp::Ordering::Greater => Some(0),
        std::cmp::Ordering::Less => Some(1),
        std::cmp::Ordering::Equal => None,
    };
    tomek_filter_removing(data, target)
}

/// Removes link members carrying `label`, or both members for `None`.
pub fn tomek_filter_removing(data: &TabularDataset, label: Option<u8>) -> TabularDataset {
    let mut drop = vec![false; data.n_rows()];
    for (i, j) in tomek_links(data) {
        for m in [i, j] {
            if label.is_none_or(|l| data.labels()[m] == l) {
                drop[m] = true;
            }
        }
    }
    let keep: Vec<usize> = (0..data.n_rows()).filter(|&i| !drop[i]).collect();
    data.subset(&keep)
}
