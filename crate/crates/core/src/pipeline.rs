//! File formats, run manifests, log-metric/accuracy correlation and report
//! emission.
//!
//! Matrices are read and written as DMAT (`dmat 1 <rows> <cols>` followed by
//! space-separated rows) or headerless CSV. Floats are always written with
//! the shortest representation that round-trips, so DMAT files reload
//! bit-identically.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::SynthTable;
use crate::graph::{constant_unit_vector, gcn_dominant_eigenvector, Graph};
use crate::linalg::DenseMatrix;
use crate::metrics::{metric_suite, Metric, MetricReport};

/// Values are clamped below at this floor before taking logs.
pub const LOG_FLOOR: f64 = 1e-15;
pub const TRACE_HEADER: &str = "layer,e_dir,e_dir_norm,e_proj,e_proj_norm,mad,erank,num_rank,frob_norm";
pub const REPORT_HEADER: &str =
    "e_dir,e_dir_norm,e_proj,e_proj_norm,mad,erank,num_rank,stable_rank,frob_norm,skipped_mad_edges";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Dmat,
    Csv,
}

impl MatrixFormat {
    /// CSV for a `.csv` extension, DMAT otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Dmat,
        }
    }
}

/// Shortest round-trip decimal, `NaN` for anything non-finite.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        "NaN".to_string()
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), format_f64)
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value {token:?}"),
        });
    }
    Ok(v)
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<DenseMatrix> {
    match format {
        MatrixFormat::Dmat => parse_dmat(text),
        MatrixFormat::Csv => parse_csv(text),
    }
}

fn parse_dmat(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse {
        line: 1,
        message: format!("expected `dmat 1 <rows> <cols>`, found {header:?}"),
    };
    if fields.len() != 4 || fields[0] != "dmat" || fields[1] != "1" {
        return Err(bad_header());
    }
    let rows: usize = fields[2].parse().map_err(|_| bad_header())?;
    let cols: usize = fields[3].parse().map_err(|_| bad_header())?;
    if rows == 0 || cols == 0 {
        return Err(Error::shape(format!("declared shape {rows}x{cols}")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line, content) in lines {
        if content.is_empty() {
            continue;
        }
        if seen == rows {
            return Err(Error::Parse {
                line,
                message: format!("more than the declared {rows} rows"),
            });
        }
        let before = data.len();
        for token in content.split_whitespace() {
            data.push(parse_value(token, line)?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse {
                line,
                message: format!("{} values, expected {cols}", data.len() - before),
            });
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::shape(format!("declared {rows} rows, found {seen}")));
    }
    DenseMatrix::new(rows, cols, data)
}

fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, content) in text.lines().enumerate() {
        let line = i + 1;
        if content.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for token in content.split(',') {
            data.push(parse_value(token, line)?);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    line,
                    message: format!("{width} values, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    DenseMatrix::new(rows, cols, data)
}

pub fn format_matrix(m: &DenseMatrix, format: MatrixFormat) -> String {
    let (sep, mut out) = match format {
        MatrixFormat::Dmat => (" ", format!("dmat 1 {} {}\n", m.rows(), m.cols())),
        MatrixFormat::Csv => (",", String::new()),
    };
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&row.join(sep));
        out.push('\n');
    }
    out
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, format)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(m, format)).map_err(|e| Error::io(path, e))
}

/// Reads a vector stored as a single-column or single-row matrix.
pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = load_matrix(path, MatrixFormat::from_path(path))?;
    if m.cols() == 1 || m.rows() == 1 {
        Ok(m.into_data())
    } else {
        Err(Error::shape(format!("expected a vector, found a {}x{} matrix", m.rows(), m.cols())))
    }
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateInput(format!("{} samples, need at least 3", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // spread at the level of accumulated roundoff counts as constant
    let floor = |v: &[f64]| {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (4.0 * n * f64::EPSILON * scale).powi(2)
    };
    if sxx <= floor(xs) || syy <= floor(ys) {
        return Err(Error::DegenerateInput("constant sequence".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Where the dominant eigenvector for a run comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum USource {
    /// `√(1 + dᵢ)`, normalized.
    GcnClosedForm,
    Constant,
    /// Vector file, normalized on load.
    FromFile(PathBuf),
}

/// One trained run: its depth, test accuracy and feature dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub depth: usize,
    pub accuracy: f64,
    pub layer_paths: Vec<PathBuf>,
    pub arch_label: String,
    pub u_source: USource,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.layer_paths.is_empty() {
            return Err(Error::InvalidParameter("manifest lists no layer files".into()));
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::InvalidParameter(format!("accuracy {} outside [0, 1]", self.accuracy)));
        }
        Ok(())
    }

    /// Features at the last listed layer.
    pub fn last_layer(&self) -> Result<DenseMatrix> {
        let path = self.layer_paths.last().expect("validated manifest");
        load_matrix(path, MatrixFormat::from_path(path))
    }

    pub fn dominant_vector(&self, graph: &Graph) -> Result<Vec<f64>> {
        match &self.u_source {
            USource::GcnClosedForm => gcn_dominant_eigenvector(graph),
            USource::Constant => Ok(constant_unit_vector(graph.node_count())),
            USource::FromFile(path) => {
                let v = load_vector(path)?;
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm > 0.0) {
                    return Err(Error::ZeroMatrix);
                }
                Ok(v.into_iter().map(|x| x / norm).collect())
            }
        }
    }
}

/// Parses a JSON manifest; relative paths inside it are resolved against the
/// manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in &mut m.layer_paths {
        *p = base.join(&*p);
    }
    if let USource::FromFile(p) = &mut m.u_source {
        *p = base.join(&*p);
    }
    m.validate()?;
    Ok(m)
}

/// How metric values were turned into regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub subtract_one: Vec<Metric>,
    pub clamp_floor: f64,
}

impl Default for TransformRecord {
    fn default() -> Self {
        Self {
            subtract_one: Metric::ALL.iter().copied().filter(|m| m.is_rank()).collect(),
            clamp_floor: LOG_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// One entry per metric in [`Metric::ALL`]; metrics that cannot be
    /// correlated carry the reason instead of a value.
    pub correlations: Vec<(Metric, std::result::Result<f64, Error>)>,
    /// Accuracy at the largest depth over accuracy at the smallest depth
    /// (runs at the same depth are averaged).
    pub accuracy_ratio: f64,
    pub run_count: usize,
    pub transform: TransformRecord,
}

impl CorrelationReport {
    pub fn r(&self, metric: Metric) -> Option<f64> {
        self.correlations
            .iter()
            .find(|(m, _)| *m == metric)
            .and_then(|(_, r)| r.as_ref().ok().copied())
    }
}

/// Metric values of one run at its last hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunValues {
    pub depth: usize,
    pub accuracy: f64,
    pub report: MetricReport,
}

/// `ln(max(v, LOG_FLOOR))`.
pub fn log_transform(v: f64) -> f64 {
    v.max(LOG_FLOOR).ln()
}

/// Pearson r between transformed metric values and accuracies. Pass values
/// already shifted by one for the rank metrics (as [`MetricReport::get`]
/// returns them).
pub fn log_metric_correlation(values: &[f64], accuracies: &[f64]) -> Result<f64> {
    let logs: Vec<f64> = values.iter().map(|&v| log_transform(v)).collect();
    pearson(&logs, accuracies)
}

pub fn correlate_values(runs: &[RunValues]) -> Result<CorrelationReport> {
    let mut by_depth: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in runs {
        by_depth.entry(r.depth).or_default().push(r.accuracy);
    }
    if runs.len() < 3 || by_depth.len() < 3 {
        return Err(Error::InsufficientRuns(format!(
            "{} runs over {} distinct depths, need at least 3 of each",
            runs.len(),
            by_depth.len()
        )));
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let shallow = mean(by_depth.values().next().unwrap());
    let deep = mean(by_depth.values().next_back().unwrap());
    let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let correlations = Metric::ALL
        .iter()
        .map(|&metric| {
            let values: Option<Vec<f64>> = runs.iter().map(|r| r.report.get(metric)).collect();
            let r = match values {
                Some(v) => log_metric_correlation(&v, &accuracies),
                None => Err(Error::DegenerateInput(format!("{metric} undefined for some run"))),
            };
            (metric, r)
        })
        .collect();
    Ok(CorrelationReport {
        correlations,
        accuracy_ratio: deep / shallow,
        run_count: runs.len(),
        transform: TransformRecord::default(),
    })
}

/// Computes the metric suite at each run's last layer and correlates.
pub fn correlate(manifests: &[RunManifest], graph: &Graph) -> Result<CorrelationReport> {
    if manifests.len() < 3 {
        return Err(Error::InsufficientRuns(format!("{} manifests, need at least 3", manifests.len())));
    }
    let runs = manifests
        .iter()
        .map(|m| {
            m.validate()?;
            let x = m.last_layer()?;
            let u = m.dominant_vector(graph)?;
            Ok(RunValues {
                depth: m.depth,
                accuracy: m.accuracy,
                report: metric_suite(&x, graph, &u)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    correlate_values(&runs)
}

/// Per-layer metric reports written as `trace_<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrace {
    pub name: String,
    pub reports: Vec<MetricReport>,
}

/// Traces named `<row>_<seed index>`.
pub fn synth_traces(table: &SynthTable) -> Vec<NamedTrace> {
    table
        .rows
        .iter()
        .flat_map(|r| r.runs.iter())
        .map(|run| NamedTrace {
            name: format!("{}_{}", run.row, run.seed_index),
            reports: run.reports.clone(),
        })
        .collect()
}

pub fn correlations_csv(report: &CorrelationReport) -> String {
    let mut out = String::from("metric,r\n");
    for (metric, r) in &report.correlations {
        let value = r.as_ref().map_or_else(|_| "NaN".to_string(), |v| format_f64(*v));
        out.push_str(&format!("{metric},{value}\n"));
    }
    out
}

pub fn grid_csv(table: &SynthTable) -> String {
    let mut out = String::from("row,metric,verdict\n");
    for (row, metric, decayed) in table.cells() {
        let verdict = if decayed { "decayed" } else { "not_decayed" };
        out.push_str(&format!("{row},{metric},{verdict}\n"));
    }
    out
}

pub fn trace_csv(reports: &[MetricReport]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (layer, r) in reports.iter().enumerate() {
        out.push_str(&format!(
            "{layer},{},{},{},{},{},{},{},{}\n",
            format_f64(r.e_dir),
            format_opt(r.e_dir_norm),
            format_f64(r.e_proj),
            format_opt(r.e_proj_norm),
            format_opt(r.mad),
            format_opt(r.erank),
            format_opt(r.num_rank),
            format_f64(r.frob_norm),
        ));
    }
    out
}

/// One CSV line (without header) with every field of a report.
pub fn report_csv_line(r: &MetricReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        format_f64(r.e_dir),
        format_opt(r.e_dir_norm),
        format_f64(r.e_proj),
        format_opt(r.e_proj_norm),
        format_opt(r.mad),
        format_opt(r.erank),
        format_opt(r.num_rank),
        format_opt(r.stable_rank),
        format_f64(r.frob_norm),
        r.skipped_mad_edges,
    )
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `correlations.csv`, `grid.csv` and `trace_<name>.csv` for
/// whatever is supplied; returns the written paths.
pub fn write_report(
    report: Option<&CorrelationReport>,
    grid: Option<&SynthTable>,
    traces: &[NamedTrace],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(report) = report {
        written.push(write_file(dir.join("correlations.csv"), &correlations_csv(report))?);
    }
    if let Some(grid) = grid {
        written.push(write_file(dir.join("grid.csv"), &grid_csv(grid))?);
    }
    for t in traces {
        written.push(write_file(dir.join(format!("trace_{}.csv", t.name)), &trace_csv(&t.reports))?);
    }
    Ok(written)
}
