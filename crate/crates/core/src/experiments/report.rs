use std::str::FromStr;

use super::{ExperimentError, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" | "text" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(ExperimentError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

const HEADER: [&str; 4] = ["Approach Implemented", "ROUGE-1", "ROUGE-2", "ROUGE-4"];

fn cells(run: &RunRecord) -> [String; 4] {
    let f = |n| run.f1(n).map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    [run.label.clone(), f(1), f(2), f(4)]
}

/// One row per run, in the given order, with ROUGE-1/2/4 F1 to 4 decimals.
pub fn render_report(runs: &[RunRecord], format: ReportFormat) -> Result<String, ExperimentError> {
    if runs.is_empty() {
        return Err(ExperimentError::EmptyReport);
    }
    let rows: Vec<[String; 4]> = runs.iter().map(cells).collect();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| ExperimentError::Config(e.to_string());
            w.write_record(HEADER).map_err(csv_err)?;
            for row in &rows {
                w.write_record(row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
        }
        ReportFormat::Table => {
            let width = rows
                .iter()
                .map(|r| r[0].chars().count())
                .chain([HEADER[0].len()])
                .max()
                .unwrap_or(0);
            let mut out = format!("{:<width$}  {:>7}  {:>7}  {:>7}\n", HEADER[0], HEADER[1], HEADER[2], HEADER[3]);
            for [label, r1, r2, r4] in &rows {
                let pad = width - label.chars().count();
                out.push_str(&format!("{label}{}  {r1:>7}  {r2:>7}  {r4:>7}\n", " ".repeat(pad)));
            }
            Ok(out)
        }
    }
}
