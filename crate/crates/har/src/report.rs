//! Human tables and machine-readable rows for evaluation results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use har_core::eval::ClassMetrics;
use har_core::{Algorithm, PredictionRecord};
use serde::Serialize;

use crate::bench::{BatchRow, RunOutput};

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Headline metrics of one run as a flat row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub windows: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub train_time_s: f64,
    pub predict_time_s: f64,
}

impl SummaryRow {
    pub fn of(run: &RunOutput) -> Self {
        let r = &run.report;
        SummaryRow {
            algorithm: run.algorithm,
            seed: run.seed,
            windows: r.windows,
            precision: r.macro_metrics.precision,
            recall: r.macro_metrics.recall,
            f1: r.macro_metrics.f1,
            accuracy: r.accuracy,
            train_time_s: r.avg_train_time_s,
            predict_time_s: r.avg_predict_time_s,
        }
    }
}

const SUMMARY_HEAD: &str = "algorithm,seed,windows,precision,recall,f1,accuracy,train_time_s,predict_time_s";

fn summary_csv_line(r: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.algorithm.as_str(),
        r.seed,
        r.windows,
        r.precision,
        r.recall,
        r.f1,
        r.accuracy,
        r.train_time_s,
        r.predict_time_s
    )
}

fn metrics_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>9} {:>9} {:>9} {:>9} {:>15} {:>15}",
        "Algorithm", "Precision", "Recall", "F1-Score", "Accuracy", "Training Time", "Prediction Time"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>9} {:>9} {:>9} {:>9} {:>15.3e} {:>15.3e}",
            r.algorithm.display_name(),
            pct(r.precision),
            pct(r.recall),
            pct(r.f1),
            pct(r.accuracy),
            r.train_time_s,
            r.predict_time_s
        );
    }
    out
}

/// Metrics, per-class breakdown and confusion matrix of one run.
/// Rates are printed in percent, times in seconds per window.
pub fn human_report(run: &RunOutput) -> String {
    let mut out = String::new();
    let r = &run.report;
    let _ = writeln!(
        out,
        "{} (seed {}), {} windows, {} correct\n",
        run.algorithm.display_name(),
        run.seed,
        r.windows,
        r.correct
    );
    out.push_str(&metrics_table(&[SummaryRow::of(run)]));
    out.push('\n');
    let name = |c: usize| run.labels.get(c).map(String::as_str).unwrap_or("?");
    let width = run.labels.iter().map(String::len).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "{:<width$} {:>7} {:>9} {:>9} {:>9}", "Class", "Support", "Precision", "Recall", "F1-Score");
    for m in r.confusion.per_class() {
        if m.support == 0 && m.predicted == 0 {
            continue;
        }
        let _ = writeln!(
            out,
            "{:<width$} {:>7} {:>9} {:>9} {:>9}",
            name(m.class),
            m.support,
            pct(m.precision),
            pct(m.recall),
            pct(m.f1)
        );
    }
    out.push_str("\nConfusion (rows true, columns predicted)\n");
    let n = r.confusion.n_classes();
    let _ = write!(out, "{:<width$}", "");
    for c in 0..n {
        let _ = write!(out, " {:>6}", c);
    }
    let _ = writeln!(out, " {:>6}", "none");
    for t in 0..n {
        let _ = write!(out, "{:<width$}", name(t));
        for p in 0..n {
            let _ = write!(out, " {:>6}", r.confusion.get(t, p));
        }
        let _ = writeln!(out, " {:>6}", r.confusion.none_count(t));
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    algorithm: Algorithm,
    seed: u64,
    labels: &'a [String],
    summary: SummaryRow,
    per_class: Vec<NamedClassMetrics<'a>>,
    report: &'a har_core::eval::EvalReport,
}

#[derive(Serialize)]
struct NamedClassMetrics<'a> {
    label: &'a str,
    #[serde(flatten)]
    metrics: ClassMetrics,
}

pub fn json_report(run: &RunOutput) -> String {
    let per_class = run
        .report
        .confusion
        .per_class()
        .into_iter()
        .map(|metrics| NamedClassMetrics {
            label: run.labels.get(metrics.class).map(String::as_str).unwrap_or(""),
            metrics,
        })
        .collect();
    serde_json::to_string(&JsonReport {
        algorithm: run.algorithm,
        seed: run.seed,
        labels: &run.labels,
        summary: SummaryRow::of(run),
        per_class,
        report: &run.report,
    })
    .expect("report serializes")
}

/// One JSON object per line, in window order.
pub fn write_predictions<W: Write>(mut w: W, records: &[PredictionRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn predictions_jsonl(records: &[PredictionRecord]) -> String {
    let mut buf = Vec::new();
    write_predictions(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// `window,accuracy` with the cumulative accuracy after each window.
pub fn curve_csv(run: &RunOutput) -> String {
    let mut out = String::from("window,accuracy\n");
    for p in &run.report.curve {
        let _ = writeln!(out, "{},{}", p.window, p.accuracy);
    }
    out
}

pub fn comparison_table(runs: &[RunOutput]) -> String {
    metrics_table(&runs.iter().map(SummaryRow::of).collect::<Vec<_>>())
}

pub fn comparison_csv(runs: &[RunOutput]) -> String {
    let mut out = format!("{SUMMARY_HEAD}\n");
    for r in runs {
        out.push_str(&summary_csv_line(&SummaryRow::of(r)));
        out.push('\n');
    }
    out
}

/// Mean of each metric per algorithm over all runs (for example several
/// seeds standing in for several subjects).
pub fn averages(runs: &[RunOutput]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<Algorithm, Vec<SummaryRow>> = BTreeMap::new();
    for r in runs {
        groups.entry(r.algorithm).or_default().push(SummaryRow::of(r));
    }
    groups
        .into_iter()
        .map(|(algorithm, rows)| {
            let n = rows.len() as f64;
            let mean = |f: fn(&SummaryRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
            SummaryRow {
                algorithm,
                seed: rows[0].seed,
                windows: rows.iter().map(|r| r.windows).sum(),
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                f1: mean(|r| r.f1),
                accuracy: mean(|r| r.accuracy),
                train_time_s: mean(|r| r.train_time_s),
                predict_time_s: mean(|r| r.predict_time_s),
            }
        })
        .collect()
}

/// Averages as CSV; `seed` is the first seed of each group and `windows`
/// the total over the group.
pub fn averages_csv(runs: &[RunOutput]) -> String {
    let mut out = format!("{SUMMARY_HEAD}\n");
    for r in averages(runs) {
        out.push_str(&summary_csv_line(&r));
        out.push('\n');
    }
    out
}

pub fn averages_table(runs: &[RunOutput]) -> String {
    metrics_table(&averages(runs))
}

pub fn batch_table(rows: &[BatchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>10} {:>10} {:>12} {:>8}",
        "Algorithm", "Epochs", "Test acc", "Train acc", "Online acc", "Gap"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>10} {:>10} {:>12} {:>8}",
            r.algorithm.display_name(),
            r.holdout.epochs,
            pct(r.holdout.test_accuracy),
            pct(r.holdout.train_accuracy),
            pct(r.prequential_accuracy),
            pct(r.gap)
        );
    }
    out
}

pub fn batch_csv(rows: &[BatchRow]) -> String {
    let mut out = String::from("algorithm,epochs,test_accuracy,train_accuracy,prequential_accuracy,gap\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.algorithm.as_str(),
            r.holdout.epochs,
            r.holdout.test_accuracy,
            r.holdout.train_accuracy,
            r.prequential_accuracy,
            r.gap
        );
    }
    out
}
