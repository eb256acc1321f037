//! Rendering of evaluation reports and sweep tables.
//!
//! Reports render as methods x groups tables (SIER in percent) followed by
//! an improvement row; sweep tables list one grid point per line.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{config, Error, Result};
use crate::evaluation::{EvalReport, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(config(format!("unknown report format '{other}' (csv, json, md)"))),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn provenance(report: &EvalReport) -> String {
    format!(
        "config_hash={} seed={}",
        report.config_hash.as_deref().unwrap_or("none"),
        report.seed.map_or("none".to_string(), |s| s.to_string())
    )
}

pub fn render(report: &EvalReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(to_json(report)?),
        Format::Csv => Ok(render_csv(report)),
        Format::Markdown => Ok(render_markdown(report)),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json(report: &EvalReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn render_csv(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", provenance(report));
    let mut header = vec!["family".to_string(), "method".to_string()];
    header.extend(report.groups.iter().map(|g| csv_field(g)));
    header.push("overall".into());
    let _ = writeln!(out, "{}", header.join(","));
    for row in &report.rows {
        let mut fields = vec![row.family.clone(), csv_field(&row.label)];
        fields.extend(report.groups.iter().map(|g| row.sier(g).map_or(String::new(), pct)));
        fields.push(pct(row.overall.sier));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    let mut fields = vec!["improvement".to_string(), "relative improvement (%)".to_string()];
    fields.extend(report.groups.iter().map(|g| {
        report.improvement.get(g).and_then(|c| c.improvement).map_or(String::new(), |x| format!("{x:.1}"))
    }));
    fields.push(String::new());
    let _ = writeln!(out, "{}", fields.join(","));
    out
}

pub fn render_markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SIER (%) per household group, micro-averaged.\n");
    let _ = writeln!(out, "| Family | Method | {} | overall |", report.groups.join(" | "));
    let _ = writeln!(out, "|---|---|{}---|", "---|".repeat(report.groups.len()));
    for row in &report.rows {
        let best_in_group = |g: &str| {
            report
                .rows
                .iter()
                .filter(|r| r.family == row.family)
                .filter_map(|r| r.sier(g))
                .fold(f64::INFINITY, f64::min)
        };
        let cells: Vec<String> = report
            .groups
            .iter()
            .map(|g| match row.sier(g) {
                Some(x) if x == best_in_group(g) => format!("**{}**", pct(x)),
                Some(x) => pct(x),
                None => "-".into(),
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            row.family,
            row.label,
            cells.join(" | "),
            pct(row.overall.sier)
        );
    }
    let cells: Vec<String> = report
        .groups
        .iter()
        .map(|g| {
            report
                .improvement
                .get(g)
                .and_then(|c| c.improvement)
                .map_or("-".into(), |x| format!("{x:.1}"))
        })
        .collect();
    let _ = writeln!(out, "| Improvement (%) | best graph row vs best baseline | {} | |", cells.join(" | "));
    let _ = writeln!(out);
    for note in &report.notes {
        let _ = writeln!(out, "- {note}");
    }
    let _ = writeln!(out, "- {}", provenance(report));
    out
}

pub fn sweep_csv(result: &SweepResult, config_hash: Option<&str>, seed: Option<u64>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# config_hash={} seed={}",
        config_hash.unwrap_or("none"),
        seed.map_or("none".to_string(), |s| s.to_string())
    );
    let mut header: Vec<String> = result.axes.clone();
    header.extend(["errors", "total", "sier", "best", "failure"].map(String::from));
    let _ = writeln!(out, "{}", header.join(","));
    for (i, row) in result.rows.iter().enumerate() {
        let mut fields: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
        fields.push(row.errors.to_string());
        fields.push(row.total.to_string());
        fields.push(row.sier.map_or(String::new(), |s| s.to_string()));
        fields.push(if i == result.best { "1" } else { "0" }.to_string());
        fields.push(row.failure.as_deref().map_or(String::new(), csv_field));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}
