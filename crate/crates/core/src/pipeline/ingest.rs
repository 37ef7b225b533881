use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;

use super::config::has_extension;
use super::PipelineError;
use crate::acoustics::{assemble_features, feature_matrix, load_audio, FeatureSchema, FeatureVector};
use crate::matrix::FeatureMatrix;

/// A dimension's feature matrix with ingestion bookkeeping.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub matrix: FeatureMatrix,
    pub imputed_values: usize,
    pub warnings: Vec<String>,
}

/// Reads one dimension of a combination: a directory of WAV files (analysed
/// in filename order) or a feature CSV whose columns match the schema.
pub fn ingest_dimension(
    input: &Path,
    schema: &FeatureSchema,
    sample_rate: u32,
) -> Result<Ingested, PipelineError> {
    if !input.exists() {
        return Err(PipelineError::MissingInput(input.to_path_buf()));
    }
    if input.is_dir() {
        return ingest_audio(input, schema, sample_rate);
    }
    Ok(Ingested {
        matrix: read_feature_csv(input, schema)?,
        imputed_values: 0,
        warnings: vec![],
    })
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(dir).map_err(|e| PipelineError::Io {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut files: Vec<PathBuf> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_file() && has_extension(p, "wav"))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn ingest_audio(dir: &Path, schema: &FeatureSchema, sample_rate: u32) -> Result<Ingested, PipelineError> {
    let files = wav_files(dir)?;
    if files.is_empty() {
        return Err(PipelineError::EmptyCorpus(dir.to_path_buf()));
    }
    let vectors: Vec<FeatureVector> = files
        .par_iter()
        .map(|f| -> Result<FeatureVector, PipelineError> {
            let clip = load_audio(f, sample_rate)?;
            Ok(assemble_features(&clip, schema)?)
        })
        .collect::<Result<_, _>>()?;
    let warnings = vectors.iter().flat_map(|v| v.warnings.iter().cloned()).collect();
    let (matrix, imputed_values) = feature_matrix(&vectors, schema)?;
    Ok(Ingested {
        matrix,
        imputed_values,
        warnings,
    })
}

/// Parses `source_id,<schema names...>` with an optional trailing `label`
/// column, which is ignored.
pub fn read_feature_csv(path: &Path, schema: &FeatureSchema) -> Result<FeatureMatrix, PipelineError> {
    let mismatch = |reason: String| PipelineError::SchemaMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| mismatch(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let names = schema.names();
    let mut columns = header.clone();
    if columns.first().map(String::as_str) != Some("source_id") {
        return Err(mismatch("first column must be `source_id`".into()));
    }
    columns.remove(0);
    if columns.last().map(String::as_str) == Some("label") && !names.iter().any(|n| n == "label") {
        columns.pop();
    }
    if columns.len() != names.len() {
        return Err(mismatch(format!(
            "{} feature columns, schema has {}",
            columns.len(),
            names.len()
        )));
    }
    if let Some((got, want)) = columns.iter().zip(&names).find(|(a, b)| a != b) {
        return Err(mismatch(format!("column `{got}` where the schema expects `{want}`")));
    }

    let d = names.len();
    let mut ids = vec![];
    let mut flat = vec![];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| mismatch(e.to_string()))?;
        if record.len() < d + 1 {
            return Err(mismatch(format!("row {} has {} fields", r + 1, record.len())));
        }
        ids.push(record[0].to_string());
        for c in 0..d {
            let v: f64 = record[c + 1]
                .parse()
                .map_err(|_| mismatch(format!("row {} column `{}` is not a number", r + 1, names[c])))?;
            flat.push(v);
        }
    }
    if ids.is_empty() {
        return Err(PipelineError::EmptyCorpus(path.to_path_buf()));
    }
    let values = Array2::from_shape_vec((ids.len(), d), flat).expect("row-major fill");
    Ok(FeatureMatrix::new(values, names, ids, schema.tag())?)
}

pub fn write_feature_csv(m: &FeatureMatrix, path: &Path) -> Result<(), PipelineError> {
    let io = |e: csv::Error| PipelineError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["source_id".to_string()];
    header.extend(m.column_names().iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (i, id) in m.sample_ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(m.values().row(i).iter().map(f64::to_string));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
