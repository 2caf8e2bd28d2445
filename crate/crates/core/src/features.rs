//! Numeric feature matrices and the structured (stage-1) encoding.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::ClassifiedRecord;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot fit an encoder on zero records")]
    EmptyInput,
    #[error("matrix has {cols} columns but {names} column names")]
    ShapeMismatch { cols: usize, names: usize },
    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },
}

/// Dense real matrix with named columns; rows line up with records.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    values: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(column_names: Vec<String>, values: DMatrix<f64>) -> Result<Self, FeatureError> {
        if column_names.len() != values.ncols() {
            return Err(FeatureError::ShapeMismatch { cols: values.ncols(), names: column_names.len() });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, col) = (idx % values.nrows(), idx / values.nrows());
            return Err(FeatureError::NonFinite { row, column: column_names[col].clone() });
        }
        Ok(Self { column_names, values })
    }

    /// Builds from row vectors. Panics if rows have differing lengths.
    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, FeatureError> {
        let ncols = column_names.len();
        let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(column_names, values)
    }

    pub fn empty(column_names: Vec<String>) -> Self {
        let ncols = column_names.len();
        Self { column_names, values: DMatrix::zeros(0, ncols) }
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        let names = indices.iter().map(|&i| self.column_names[i].clone()).collect();
        let values = self.values.select_columns(indices);
        Self { column_names: names, values }
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self { column_names: self.column_names.clone(), values: self.values.select_rows(indices) }
    }

    pub fn into_parts(self) -> (Vec<String>, DMatrix<f64>) {
        (self.column_names, self.values)
    }
}

/// One-hot encoder for the nominal location field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "EncoderFile")]
pub struct LocationEncoder {
    /// Distinct labels in first-appearance order.
    pub locations: Vec<String>,
    #[serde(skip)]
    column_names: Vec<String>,
}

impl LocationEncoder {
    pub fn new(locations: Vec<String>) -> Self {
        let column_names = locations.iter().map(|l| location_column_name(l)).collect();
        Self { locations, column_names }
    }

    /// Column names, `loc_` followed by the normalised label.
    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Index of the location column a label maps to, if any.
    pub fn index_of(&self, location: &str) -> Option<usize> {
        let name = location_column_name(location);
        self.column_names.iter().position(|c| *c == name)
    }
}

#[derive(Deserialize)]
struct EncoderFile {
    locations: Vec<String>,
}

impl From<EncoderFile> for LocationEncoder {
    fn from(file: EncoderFile) -> Self {
        Self::new(file.locations)
    }
}

/// `"Dubai Marina"` becomes `"loc_dubai_marina"`: lower-cased, spaces to
/// underscores, other non-alphanumerics dropped.
pub fn location_column_name(label: &str) -> String {
    let mut out = String::from("loc_");
    for c in label.trim().chars() {
        if c == ' ' {
            out.push('_');
        } else if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Labels are distinct by their normalised column name, so `"Dubai Marina"`
/// and `"dubai marina"` share a column.
pub fn fit_location_encoder(records: &[ClassifiedRecord]) -> Result<LocationEncoder, FeatureError> {
    if records.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut seen = std::collections::HashSet::new();
    let locations = records
        .iter()
        .filter(|r| seen.insert(location_column_name(&r.location)))
        .map(|r| r.location.clone())
        .collect();
    Ok(LocationEncoder::new(locations))
}

pub const STRUCTURED_COLUMNS: [&str; 3] = ["beds", "baths", "size"];

/// `[beds, baths, size, loc_*...]`. Unseen locations encode as all zeros.
pub fn encode_structured(records: &[ClassifiedRecord], encoder: &LocationEncoder) -> FeatureMatrix {
    let locs = encoder.column_names();
    let ncols = STRUCTURED_COLUMNS.len() + locs.len();
    let mut values = DMatrix::zeros(records.len(), ncols);
    for (i, r) in records.iter().enumerate() {
        values[(i, 0)] = f64::from(r.beds);
        values[(i, 1)] = f64::from(r.baths);
        values[(i, 2)] = r.size as f64;
        if let Some(j) = encoder.index_of(&r.location) {
            values[(i, STRUCTURED_COLUMNS.len() + j)] = 1.0;
        }
    }
    let names = STRUCTURED_COLUMNS.iter().map(|s| s.to_string()).chain(locs.iter().cloned()).collect();
    FeatureMatrix { column_names: names, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(location: &str) -> ClassifiedRecord {
        ClassifiedRecord {
            title: String::new(),
            description: String::new(),
            beds: 2,
            baths: 2,
            size: 1400,
            location: location.into(),
            price: 100_000,
        }
    }

    #[test]
    fn encoder_first_appearance_order() {
        let enc = fit_location_encoder(&[rec("Dubai Marina"), rec("Palm Jumeirah"), rec("Dubai Marina")]).unwrap();
        assert_eq!(enc.column_names(), ["loc_dubai_marina", "loc_palm_jumeirah"]);
        assert_eq!(fit_location_encoder(&[rec("JLT")]).unwrap().locations.len(), 1);
        assert_eq!(fit_location_encoder(&[]).unwrap_err(), FeatureError::EmptyInput);
    }

    #[test]
    fn column_name_normalisation() {
        assert_eq!(location_column_name("Jumeirah Lake Towers (JLT)"), "loc_jumeirah_lake_towers_jlt");
        assert_eq!(location_column_name("Al Barsha-1"), "loc_al_barsha1");
    }

    #[test]
    fn encodes_rows() {
        let enc = fit_location_encoder(&[rec("Dubai Marina"), rec("Palm Jumeirah")]).unwrap();
        let m = encode_structured(&[rec("Dubai Marina"), rec("New Area")], &enc);
        assert_eq!(m.column_names(), ["beds", "baths", "size", "loc_dubai_marina", "loc_palm_jumeirah"]);
        assert_eq!(m.values().row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 2.0, 1400.0, 1.0, 0.0]);
        assert_eq!(m.values().row(1).iter().copied().collect::<Vec<_>>(), vec![2.0, 2.0, 1400.0, 0.0, 0.0]);
        let empty = encode_structured(&[], &enc);
        assert_eq!(empty.nrows(), 0);
        assert_eq!(empty.ncols(), 5);
    }

    #[test]
    fn single_location_all_ones() {
        let recs = vec![rec("Marina"); 4];
        let enc = fit_location_encoder(&recs).unwrap();
        let m = encode_structured(&recs, &enc);
        assert!(m.values().column(3).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn matrix_validation() {
        let err = FeatureMatrix::from_rows(vec!["a".into()], &[vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, FeatureError::NonFinite { row: 0, .. }));
        assert!(FeatureMatrix::new(vec![], DMatrix::zeros(2, 1)).is_err());
    }
}
