//! Labelled feature matrices shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which semantic speech dimension a feature set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionTag {
    Emotional,
    Linguistic,
    Pathological,
}

impl DimensionTag {
    pub const ALL: [DimensionTag; 3] = [
        DimensionTag::Emotional,
        DimensionTag::Linguistic,
        DimensionTag::Pathological,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DimensionTag::Emotional => "emotional",
            DimensionTag::Linguistic => "linguistic",
            DimensionTag::Pathological => "pathological",
        }
    }
}

impl fmt::Display for DimensionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DimensionTag {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "emotional" => Ok(DimensionTag::Emotional),
            "linguistic" => Ok(DimensionTag::Linguistic),
            "pathological" => Ok(DimensionTag::Pathological),
            other => Err(MatrixError::UnknownDimension(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("unknown dimension tag `{0}`")]
    UnknownDimension(String),
    #[error("matrix is {rows}x{cols} but {ids} sample ids and {names} column names were given")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        ids: usize,
        names: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
}

/// An N×d matrix of real-valued features with row and column labels.
///
/// Every entry is finite; construction rejects NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    column_names: Vec<String>,
    sample_ids: Vec<String>,
    tag: DimensionTag,
}

impl FeatureMatrix {
    pub fn new(
        values: Array2<f64>,
        column_names: Vec<String>,
        sample_ids: Vec<String>,
        tag: DimensionTag,
    ) -> Result<Self, MatrixError> {
        let (rows, cols) = values.dim();
        if sample_ids.len() != rows || column_names.len() != cols {
            return Err(MatrixError::ShapeMismatch {
                rows,
                cols,
                ids: sample_ids.len(),
                names: column_names.len(),
            });
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MatrixError::NonFinite { row, col });
        }
        Ok(Self {
            values,
            column_names,
            sample_ids,
            tag,
        })
    }

    /// Builds a matrix with generated `x0..x{d-1}` column names and `s0..s{n-1}` sample ids.
    pub fn from_values(values: Array2<f64>, tag: DimensionTag) -> Result<Self, MatrixError> {
        let (rows, cols) = values.dim();
        let names = (0..cols).map(|c| format!("x{c}")).collect();
        let ids = (0..rows).map(|r| format!("s{r}")).collect();
        Self::new(values, names, ids, tag)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn tag(&self) -> DimensionTag {
        self.tag
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Replaces the values, keeping labels. The new array must have the same shape.
    pub(crate) fn with_values(&self, values: Array2<f64>) -> Result<Self, MatrixError> {
        Self::new(
            values,
            self.column_names.clone(),
            self.sample_ids.clone(),
            self.tag,
        )
    }

    pub fn into_parts(self) -> (Array2<f64>, Vec<String>, Vec<String>, DimensionTag) {
        (self.values, self.column_names, self.sample_ids, self.tag)
    }
}
