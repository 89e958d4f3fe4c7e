//! Metrics tables as text, CSV or JSON.

use clap::ValueEnum;
use healthgrid_core::policy::PolicyKind;
use healthgrid_core::sim::{Metrics, SweepPoint};
use serde::Serialize;

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

const HEADER: [&str; 10] = [
    "policy",
    "V",
    "avg_hospitalizations",
    "avg_co2",
    "avg_hap",
    "co2_violation",
    "hap_violation",
    "total_shortfall",
    "q_co2",
    "q_hap",
];

pub fn policy_label(m: &Metrics) -> String {
    match m.policy.kind {
        PolicyKind::Lyapunov => format!("lyapunov(V={})", m.policy.v),
        kind => kind.name().to_string(),
    }
}

fn cells(m: &Metrics) -> Vec<String> {
    vec![
        m.policy.kind.name().to_string(),
        m.policy.v.to_string(),
        m.avg_hospitalizations.to_string(),
        m.avg_co2.to_string(),
        m.avg_hap.to_string(),
        m.cap_violation.co2.to_string(),
        m.cap_violation.hap.to_string(),
        m.total_shortfall.to_string(),
        m.terminal_queues.q_co2.to_string(),
        m.terminal_queues.q_hap.to_string(),
    ]
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    let mut out = line(header);
    out += &line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in rows {
        out += &line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

fn short(x: f64) -> String {
    format!("{x:.4}")
}

fn table_cells(m: &Metrics) -> Vec<String> {
    vec![
        policy_label(m),
        short(m.avg_hospitalizations),
        short(m.avg_co2),
        short(m.avg_hap),
        short(m.cap_violation.co2),
        short(m.cap_violation.hap),
        short(m.total_shortfall),
        short(m.terminal_queues.q_co2),
        short(m.terminal_queues.q_hap),
    ]
}

const TABLE_HEADER: [&str; 9] = [
    "policy",
    "hospitalizations",
    "co2",
    "hap",
    "co2_over",
    "hap_over",
    "shortfall",
    "q_co2",
    "q_hap",
];

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| AppError::internal(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| AppError::internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AppError::internal(e.to_string()))
}

fn json_text<T: Serialize + ?Sized>(value: &T) -> Result<String, AppError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| AppError::internal(e.to_string()))
}

pub fn render_metrics(rows: &[Metrics], format: Format) -> Result<String, AppError> {
    match format {
        Format::Table => Ok(table(&TABLE_HEADER, &rows.iter().map(table_cells).collect::<Vec<_>>())),
        Format::Csv => csv_text(&HEADER, &rows.iter().map(cells).collect::<Vec<_>>()),
        Format::Json => json_text(rows),
    }
}

/// A single run renders as one object in JSON and one row otherwise.
pub fn render_run(m: &Metrics, format: Format) -> Result<String, AppError> {
    match format {
        Format::Json => json_text(m),
        _ => render_metrics(std::slice::from_ref(m), format),
    }
}

pub fn render_sweep(points: &[SweepPoint], format: Format) -> Result<String, AppError> {
    match format {
        Format::Json => json_text(points),
        Format::Table => {
            let mut header = vec!["value"];
            header.extend(TABLE_HEADER);
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    let mut row = vec![p.value.to_string()];
                    row.extend(table_cells(&p.metrics));
                    row
                })
                .collect();
            Ok(table(&header, &rows))
        }
        Format::Csv => {
            let mut header = vec!["axis", "value"];
            header.extend(HEADER);
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    let axis = serde_json::to_value(p.axis).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
                    let mut row = vec![axis, p.value.to_string()];
                    row.extend(cells(&p.metrics));
                    row
                })
                .collect();
            csv_text(&header, &rows)
        }
    }
}
