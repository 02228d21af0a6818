//! CSV files written by the harness.
//!
//! | file | columns |
//! |------|---------|
//! | `trials.csv` | function, N, algorithm, alpha, seed, success, evaluations, best_f, termination |
//! | `summary.csv` | function, N, algorithm, alpha, trials, successes, median_evals, iqr |
//! | `sweep.csv` | m, n, alpha, success_rate, median_evals, iqr |
//! | `trace_<k>.csv` | iteration, evaluations, sigma, best_f, then `m_<kind><j>` and `sd_<kind><j>` per dimension |
//! | `mo_trace_<k>.csv` | iteration, hypervolume, p_med_min, p_med_median |
//! | `mo_final_<k>.csv` | individual, f1, f2, `x<j>` per dimension |
//! | `mo_summary.csv` | trial, seed, algorithm, alpha, final_hypervolume, min_p_med, final_p_med_median, corrections, encoding_changes |
//!
//! `<kind>` is `c`, `b` or `i` for continuous, binary and integer
//! coordinates, and `<j>` is 1-based. Missing values are empty fields.

use std::fs::File;
use std::path::Path;

use margin_cma::space::MixedIntegerSpace;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::aggregate::Summary;
use crate::error::HarnessError;
use crate::mo_run::MoTrialRecord;
use crate::sweep::SweepCell;
use crate::trial::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub function: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub algorithm: String,
    pub alpha: f64,
    pub seed: u64,
    pub success: bool,
    pub evaluations: u64,
    pub best_f: f64,
    pub termination: String,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            function: r.function.clone(),
            n: r.dim,
            algorithm: r.algorithm.to_string(),
            alpha: r.alpha,
            seed: r.seed,
            success: r.success,
            evaluations: r.evaluations,
            best_f: r.best_f,
            termination: r.termination.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub function: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub algorithm: String,
    pub alpha: f64,
    pub trials: usize,
    pub successes: usize,
    pub median_evals: Option<f64>,
    pub iqr: Option<f64>,
}

impl From<&Summary> for SummaryRow {
    fn from(s: &Summary) -> Self {
        Self {
            function: s.function.clone(),
            n: s.dim,
            algorithm: s.algorithm.to_string(),
            alpha: s.alpha,
            trials: s.trials,
            successes: s.successes,
            median_evals: s.median_evals,
            iqr: s.iqr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
    pub success_rate: f64,
    pub median_evals: Option<f64>,
    pub iqr: Option<f64>,
}

impl From<&SweepCell> for SweepRow {
    fn from(c: &SweepCell) -> Self {
        Self {
            m: c.m,
            n: c.n,
            alpha: c.alpha,
            success_rate: c.summary.success_rate(),
            median_evals: c.summary.median_evals,
            iqr: c.summary.iqr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoTraceRow {
    pub iteration: usize,
    pub hypervolume: f64,
    pub p_med_min: Option<f64>,
    pub p_med_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoSummaryRow {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: String,
    pub alpha: f64,
    pub final_hypervolume: f64,
    pub min_p_med: Option<f64>,
    pub final_p_med_median: Option<f64>,
    pub corrections: usize,
    pub encoding_changes: usize,
}

impl MoSummaryRow {
    pub fn new(trial: usize, r: &MoTrialRecord) -> Self {
        Self {
            trial,
            seed: r.seed,
            algorithm: r.algorithm.to_string(),
            alpha: r.alpha,
            final_hypervolume: r.final_hypervolume(),
            min_p_med: r.min_p_med,
            final_p_med_median: r.final_p_med_median(),
            corrections: r.corrections,
            encoding_changes: r.encoding_changes,
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    ensure_parent(path)?;
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err(path))
}

fn flush(mut w: csv::Writer<File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write serializable rows with a header. An empty slice still produces the
/// header line.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    ensure_parent(path)?;
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

pub const TRIALS_HEADER: [&str; 9] = [
    "function",
    "N",
    "algorithm",
    "alpha",
    "seed",
    "success",
    "evaluations",
    "best_f",
    "termination",
];
pub const SUMMARY_HEADER: [&str; 8] = [
    "function",
    "N",
    "algorithm",
    "alpha",
    "trials",
    "successes",
    "median_evals",
    "iqr",
];
pub const SWEEP_HEADER: [&str; 6] = ["m", "n", "alpha", "success_rate", "median_evals", "iqr"];
pub const MO_TRACE_HEADER: [&str; 4] = ["iteration", "hypervolume", "p_med_min", "p_med_median"];
pub const MO_SUMMARY_HEADER: [&str; 9] = [
    "trial",
    "seed",
    "algorithm",
    "alpha",
    "final_hypervolume",
    "min_p_med",
    "final_p_med_median",
    "corrections",
    "encoding_changes",
];

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    let rows: Vec<TrialRow> = records.iter().map(TrialRow::from).collect();
    write_rows(path, &TRIALS_HEADER, &rows)
}

pub fn write_summaries(path: &Path, summaries: &[Summary]) -> Result<(), HarnessError> {
    let rows: Vec<SummaryRow> = summaries.iter().map(SummaryRow::from).collect();
    write_rows(path, &SUMMARY_HEADER, &rows)
}

pub fn write_sweep(path: &Path, cells: &[SweepCell]) -> Result<(), HarnessError> {
    let rows: Vec<SweepRow> = cells.iter().map(SweepRow::from).collect();
    write_rows(path, &SWEEP_HEADER, &rows)
}

pub fn write_mo_trace(path: &Path, record: &MoTrialRecord) -> Result<(), HarnessError> {
    let rows: Vec<MoTraceRow> = record
        .trace
        .iter()
        .map(|t| MoTraceRow {
            iteration: t.iteration,
            hypervolume: t.hypervolume,
            p_med_min: t.p_med_min,
            p_med_median: t.p_med_median,
        })
        .collect();
    write_rows(path, &MO_TRACE_HEADER, &rows)
}

pub fn write_mo_summary(path: &Path, records: &[MoTrialRecord]) -> Result<(), HarnessError> {
    let rows: Vec<MoSummaryRow> = records.iter().enumerate().map(|(k, r)| MoSummaryRow::new(k, r)).collect();
    write_rows(path, &MO_SUMMARY_HEADER, &rows)
}

pub fn write_mo_final(path: &Path, record: &MoTrialRecord) -> Result<(), HarnessError> {
    let n = record.dim;
    let mut w = writer(path)?;
    let mut header = vec!["individual".to_string(), "f1".into(), "f2".into()];
    header.extend((1..=n).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (k, ind) in record.final_population.iter().enumerate() {
        let mut row = vec![k.to_string(), ind.f1.to_string(), ind.f2.to_string()];
        row.extend(ind.encoded.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    flush(w, path)
}

fn kind_letter(space: &MixedIntegerSpace, j: usize) -> char {
    if space.is_binary(j) {
        'b'
    } else if space.is_discrete(j) {
        'i'
    } else {
        'c'
    }
}

/// Per-iteration distribution trace of one single-objective trial.
pub fn write_trace(path: &Path, record: &TrialRecord, space: &MixedIntegerSpace) -> Result<(), HarnessError> {
    let n = record.dim;
    let mut w = writer(path)?;
    let mut header = vec![
        "iteration".to_string(),
        "evaluations".into(),
        "sigma".into(),
        "best_f".into(),
    ];
    header.extend((0..n).map(|j| format!("m_{}{}", kind_letter(space, j), j + 1)));
    header.extend((0..n).map(|j| format!("sd_{}{}", kind_letter(space, j), j + 1)));
    w.write_record(&header).map_err(csv_err(path))?;
    for h in &record.history {
        let mut row = vec![
            h.iteration.to_string(),
            h.evaluations.to_string(),
            h.sigma.to_string(),
            h.best_f.to_string(),
        ];
        row.extend(h.mean.iter().map(|v| v.to_string()));
        row.extend(h.std.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    flush(w, path)
}

/// A trace file read back: column names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_trace(path: &Path) -> Result<TraceTable, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| HarnessError::Config(format!("{}: bad number {v:?}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(TraceTable { header, rows })
}
