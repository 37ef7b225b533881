use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::kde::KdeGrid;
use super::types::AuditReport;
use super::ReportError;
use crate::matrix::DimensionTag;

/// 2-D coordinates with row labels; `groups` is empty unless rows come
/// from several dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPlot {
    pub sample_ids: Vec<String>,
    pub y: Array2<f64>,
    pub groups: Vec<String>,
}

/// Plot-ready data that accompanies a report but is not part of `report.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    pub embeddings: BTreeMap<DimensionTag, EmbeddingPlot>,
    pub kde: BTreeMap<DimensionTag, KdeGrid>,
    pub pooled: Option<EmbeddingPlot>,
}

/// Writes `report.json`, `embedding_<dim>.csv` and `kde_<dim>.csv` per
/// dimension, `embedding_pooled.csv` when present, and `confound.csv`.
/// Returns the written paths in order.
pub fn emit_report(report: &AuditReport, plots: &PlotData, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = vec![];

    let path = dir.join("report.json");
    let mut json = report.to_json();
    json.push('\n');
    fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    written.push(path);

    for (tag, plot) in &plots.embeddings {
        let path = dir.join(format!("embedding_{tag}.csv"));
        write_embedding(plot, &path)?;
        written.push(path);
    }
    if let Some(plot) = &plots.pooled {
        let path = dir.join("embedding_pooled.csv");
        write_embedding(plot, &path)?;
        written.push(path);
    }
    for (tag, grid) in &plots.kde {
        let path = dir.join(format!("kde_{tag}.csv"));
        let mut out = String::from("x,y,density\n");
        for (iy, row) in grid.density.iter().enumerate() {
            for (ix, v) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", grid.grid_x[ix], grid.grid_y[iy], v));
            }
        }
        fs::write(&path, out).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }

    let path = dir.join("confound.csv");
    let mut out = String::from("kind,index,value\n");
    if let Some(c) = &report.confound {
        for (j, v) in c.observed.per_cluster.iter().enumerate() {
            out.push_str(&format!("observed,{j},{v}\n"));
        }
        out.push_str(&format!("observed_mean,,{}\n", c.observed.mean));
        out.push_str(&format!("observed_max,,{}\n", c.observed.max));
        for (r, v) in c.null.values.iter().enumerate() {
            out.push_str(&format!("null,{r},{v}\n"));
        }
        out.push_str(&format!("null_p5,,{}\n", c.null.p5));
        out.push_str(&format!("null_p95,,{}\n", c.null.p95));
    }
    fs::write(&path, out).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

fn write_embedding(plot: &EmbeddingPlot, path: &Path) -> Result<(), ReportError> {
    let grouped = !plot.groups.is_empty();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let header: &[&str] = if grouped {
        &["sample_id", "group", "x", "y"]
    } else {
        &["sample_id", "x", "y"]
    };
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for (i, id) in plot.sample_ids.iter().enumerate() {
        let (x, y) = (plot.y[[i, 0]].to_string(), plot.y[[i, 1]].to_string());
        let record = if grouped {
            vec![id.clone(), plot.groups[i].clone(), x, y]
        } else {
            vec![id.clone(), x, y]
        };
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}
