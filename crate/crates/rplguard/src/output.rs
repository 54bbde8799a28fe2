//! CSV results: one file per metric, a per-run file, and a summary.
//!
//! Comma-separated with a header row, LF line endings, four decimals.
//! `NA` marks a metric whose denominator was zero, `error` a failed run.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::matrix::{Cell, JobResult, RunMetrics};

pub const METRICS: [Metric; 4] = [Metric::Dr, Metric::Fpr, Metric::Fnr, Metric::Pdr];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Dr,
    Fpr,
    Fnr,
    Pdr,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Dr => "dr",
            Metric::Fpr => "fpr",
            Metric::Fnr => "fnr",
            Metric::Pdr => "pdr",
        }
    }

    pub fn of(self, m: &RunMetrics) -> Option<f64> {
        match self {
            Metric::Dr => m.dr,
            Metric::Fpr => m.fpr,
            Metric::Fnr => m.fnr,
            Metric::Pdr => m.pdr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    NotApplicable,
    Error,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x:.4}"),
            Value::NotApplicable => f.write_str("NA"),
            Value::Error => f.write_str("error"),
        }
    }
}

impl Value {
    fn parse(s: &str) -> Option<Value> {
        match s {
            "NA" => Some(Value::NotApplicable),
            "error" => Some(Value::Error),
            _ => s.parse().ok().map(Value::Num),
        }
    }
}

/// One row of a per-metric CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scenario: String,
    pub attack_interval: String,
    pub defense_mode: String,
    pub seed: u64,
    pub value: Value,
}

const HEADER: [&str; 5] = [
    "scenario",
    "attack_interval",
    "defense_mode",
    "seed",
    "value",
];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn metric_rows(metric: Metric, cells: &[Cell], results: &[JobResult]) -> Vec<MetricRow> {
    results
        .iter()
        .map(|r| {
            let c = &cells[r.cell];
            let value = match &r.outcome {
                Ok(m) => metric.of(m).map_or(Value::NotApplicable, Value::Num),
                Err(_) => Value::Error,
            };
            MetricRow {
                scenario: c.scenario.clone(),
                attack_interval: c.attack_interval.to_string(),
                defense_mode: c.defense.as_str().to_string(),
                seed: r.seed,
                value,
            }
        })
        .collect()
}

pub fn write_metric_csv<W: Write>(w: W, rows: &[MetricRow]) -> csv::Result<()> {
    let mut w = writer(w);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.as_str(),
            &r.attack_interval,
            &r.defense_mode,
            &r.seed.to_string(),
            &r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {0}: malformed")]
    Row(usize),
}

pub fn read_metric_csv<R: Read>(r: R) -> Result<Vec<MetricRow>, ReadError> {
    let mut rd = csv::Reader::from_reader(r);
    let h = rd.headers()?;
    if h.iter().ne(HEADER) {
        return Err(ReadError::Header(h.iter().map(String::from).collect()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = || ReadError::Row(i + 1);
        let seed = rec[3].parse().map_err(|_| bad())?;
        let value = Value::parse(&rec[4]).ok_or_else(bad)?;
        rows.push(MetricRow {
            scenario: rec[0].into(),
            attack_interval: rec[1].into(),
            defense_mode: rec[2].into(),
            seed,
            value,
        });
    }
    Ok(rows)
}

/// Aggregate of one metric over the seeds of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: &'static str,
    pub scenario: String,
    pub attack_interval: String,
    pub defense_mode: String,
    /// Runs with a numeric value.
    pub n: usize,
    pub na: usize,
    pub errors: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two values.
    pub sd: Option<f64>,
}

pub fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1)
        .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

/// Groups rows by cell in order of first appearance.
pub fn summarize(metric: Metric, rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, &str, &str)> = Vec::new();
    for r in rows {
        let k = (
            r.scenario.as_str(),
            r.attack_interval.as_str(),
            r.defense_mode.as_str(),
        );
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<&MetricRow> = rows
                .iter()
                .filter(|r| {
                    (
                        r.scenario.as_str(),
                        r.attack_interval.as_str(),
                        r.defense_mode.as_str(),
                    ) == k
                })
                .collect();
            let xs: Vec<f64> = group
                .iter()
                .filter_map(|r| match r.value {
                    Value::Num(x) => Some(x),
                    _ => None,
                })
                .collect();
            let (mean, sd) = mean_sd(&xs);
            SummaryRow {
                metric: metric.name(),
                scenario: k.0.into(),
                attack_interval: k.1.into(),
                defense_mode: k.2.into(),
                n: xs.len(),
                na: group
                    .iter()
                    .filter(|r| r.value == Value::NotApplicable)
                    .count(),
                errors: group.iter().filter(|r| r.value == Value::Error).count(),
                mean,
                sd,
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or(Value::NotApplicable, Value::Num).to_string()
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "metric",
    "scenario",
    "attack_interval",
    "defense_mode",
    "n",
    "na",
    "errors",
    "mean",
    "sd",
];

fn summary_fields(s: &SummaryRow) -> [String; 9] {
    [
        s.metric.into(),
        s.scenario.clone(),
        s.attack_interval.clone(),
        s.defense_mode.clone(),
        s.n.to_string(),
        s.na.to_string(),
        s.errors.to_string(),
        opt(s.mean),
        opt(s.sd),
    ]
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = writer(w);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record(summary_fields(s))?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned plain-text table with a short legend.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut grid: Vec<[String; 9]> = vec![SUMMARY_HEADER.map(String::from)];
    grid.extend(rows.iter().map(summary_fields));
    let mut width = [0usize; 9];
    for r in &grid {
        for (w, f) in width.iter_mut().zip(r) {
            *w = (*w).max(f.len());
        }
    }
    let mut out = String::from(
        "# rates in percent; fnr = fn / (fn + tp); sd is the sample standard deviation over seeds\n",
    );
    for r in &grid {
        let line: Vec<String> = r
            .iter()
            .zip(width)
            .map(|(f, w)| format!("{f:>w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub const RUNS_HEADER: [&str; 13] = [
    "scenario",
    "attack_interval",
    "defense_mode",
    "seed",
    "tp",
    "fp",
    "tn",
    "fn",
    "unprobed",
    "dr",
    "fpr",
    "fnr",
    "pdr",
];

/// Counts and all metrics of every run, one row each.
pub fn write_runs_csv<W: Write>(w: W, cells: &[Cell], results: &[JobResult]) -> csv::Result<()> {
    let mut w = writer(w);
    w.write_record(RUNS_HEADER)?;
    for r in results {
        let c = &cells[r.cell];
        let mut rec = vec![
            c.scenario.clone(),
            c.attack_interval.to_string(),
            c.defense.as_str().to_string(),
            r.seed.to_string(),
        ];
        match &r.outcome {
            Ok(m) => {
                let k = m.counts;
                rec.extend([k.tp, k.fp, k.tn, k.fn_, m.unprobed].map(|x| x.to_string()));
                rec.extend(METRICS.map(|x| opt(x.of(m))));
            }
            Err(_) => rec.extend(std::iter::repeat_n("error".to_string(), 9)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<metric>.csv`, `runs.csv` and `summary.csv` into `dir`.
pub fn write_matrix_outputs(
    dir: &Path,
    cells: &[Cell],
    results: &[JobResult],
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = Vec::new();
    for m in METRICS {
        let rows = metric_rows(m, cells, results);
        write_metric_csv(
            std::fs::File::create(dir.join(format!("{}.csv", m.name())))?,
            &rows,
        )?;
        summary.extend(summarize(m, &rows));
    }
    write_runs_csv(std::fs::File::create(dir.join("runs.csv"))?, cells, results)?;
    write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?, &summary)?;
    Ok(())
}

/// Summary of the metric CSVs found in `dir`.
pub fn summarize_dir(dir: &Path) -> anyhow::Result<Vec<SummaryRow>> {
    let mut out = Vec::new();
    let mut found = false;
    for m in METRICS {
        let p = dir.join(format!("{}.csv", m.name()));
        if !p.exists() {
            continue;
        }
        found = true;
        let rows = read_metric_csv(std::fs::File::open(&p)?)
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
        out.extend(summarize(m, &rows));
    }
    anyhow::ensure!(found, "no metric CSVs in {}", dir.display());
    Ok(out)
}
