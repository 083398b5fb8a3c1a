use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::dataset::TabularDataset;
use crate::error::{Error, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Loads a comma-separated file with a mandatory header row. Every column other
/// than the label and group columns becomes a feature, in header order.
pub fn load_csv(path: &Path, label_column: &str, group_column: &str) -> Result<TabularDataset> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_csv(file, label_column, group_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: &str, group_column: &str) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyFile);
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_idx = find(label_column)?;
    let group_idx = find(group_column)?;
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && i != group_idx)
        .collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let raw_label = record.get(label_idx).unwrap_or("").trim();
        let label = match raw_label.parse::<f64>() {
            Ok(0.0) => 0u8,
            Ok(1.0) => 1u8,
            _ => {
                return Err(Error::InvalidLabel {
                    row,
                    value: raw_label.to_string(),
                })
            }
        };
        labels.push(label);
        groups.push(record.get(group_idx).unwrap_or("").trim().to_string());
        for &c in &feature_idx {
            let cell = record.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: header[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    column: header[c].clone(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyFile);
    }
    let features = Array2::from_shape_vec((labels.len(), feature_idx.len()), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let names = feature_idx.iter().map(|&i| header[i].clone()).collect();
    TabularDataset::new(features, labels, groups, names)
}

/// Writes features, then the label column, then the group column. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_csv<W: Write>(
    data: &TabularDataset,
    writer: W,
    label_column: &str,
    group_column: &str,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push(label_column);
    header.push(group_column);
    wtr.write_record(&header)
        .map_err(|e| Error::Csv(e.to_string()))?;
    for i in 0..data.n_rows() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(data.labels()[i].to_string());
        rec.push(data.groups()[i].clone());
        wtr.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
