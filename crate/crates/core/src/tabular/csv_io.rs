use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, TabularError};

/// Loads a comma-separated file with a header row.
///
/// Empty fields and the tokens `NaN`/`nan` become missing cells. Anything
/// else that does not parse to a finite number is rejected. Labels map to
/// dense ids in first-appearance order unless `class_names` fixes the
/// dictionary.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    class_names: Option<&[String]>,
) -> Result<Dataset, TabularError> {
    read_csv(File::open(path)?, label_column, class_names)
}

pub fn read_csv<R: Read>(
    reader: R,
    label_column: &str,
    class_names: Option<&[String]>,
) -> Result<Dataset, TabularError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let label_idx = header
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| TabularError::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let fixed_dictionary = class_names.is_some();
    let mut classes: Vec<String> = class_names.map(<[String]>::to_vec).unwrap_or_default();
    let mut cells = Vec::new();
    let mut labels = Vec::new();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut col = 0;
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            cells.push(parse_cell(field, row, col)?);
            col += 1;
        }
        let token = record[label_idx].trim();
        let id = match classes.iter().position(|c| c == token) {
            Some(id) => id,
            None if fixed_dictionary => {
                return Err(TabularError::UnknownClassLabel(token.to_string()))
            }
            None => {
                classes.push(token.to_string());
                classes.len() - 1
            }
        };
        labels.push(id);
    }
    Dataset::from_cells(feature_names, cells, labels, classes)
}

fn parse_cell(field: &str, row: usize, col: usize) -> Result<Option<f64>, TabularError> {
    let token = field.trim();
    if token.is_empty() || token == "NaN" || token == "nan" {
        return Ok(None);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(TabularError::NonNumericFeature { row, col, token: token.to_string() }),
    }
}

/// Writes `d` in the dialect `load_csv` reads: features in order, then the
/// label column carrying class names. Missing cells are empty fields.
pub fn write_csv<W: Write>(d: &Dataset, writer: W, label_column: &str) -> Result<(), TabularError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header)?;
    for (row, &label) in d.rows().zip(d.labels()) {
        let mut fields: Vec<String> = row
            .iter()
            .map(|c| c.map(|v| v.to_string()).unwrap_or_default())
            .collect();
        fields.push(d.class_names()[label].clone());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
