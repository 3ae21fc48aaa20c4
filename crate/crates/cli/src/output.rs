use std::io::Write;

use crate::config::{Format, OutputSpec};
use crate::error::CliError;
use crate::scenarios::{Row, ScenarioResult};

pub const CSV_COLUMNS: [&str; 8] = ["scenario", "symbol", "status", "value", "lo", "hi", "n", "seed"];

pub fn to_csv(result: &ScenarioResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &result.rows {
        w.serialize(row).expect("rows serialize to csv");
    }
    if result.rows.is_empty() {
        w.write_record(CSV_COLUMNS).expect("header");
    }
    let mut out = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8");
    // the verdict as a final row keeps the file self-describing
    let mut v = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    v.serialize(Row {
        scenario: result.scenario,
        symbol: "verdict".into(),
        status: result.verdict.to_string(),
        value: None,
        lo: None,
        hi: None,
        n: None,
        seed: None,
    })
    .expect("verdict row");
    out.push_str(std::str::from_utf8(&v.into_inner().expect("in-memory writer")).expect("utf-8"));
    out
}

pub fn to_json(result: &ScenarioResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result serializes to json");
    s.push('\n');
    s
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn to_table(result: &ScenarioResult) -> String {
    let header = ["symbol", "status", "value", "lo", "hi", "n", "seed"].map(String::from);
    let mut lines: Vec<[String; 7]> = vec![header];
    for r in &result.rows {
        lines.push([
            r.symbol.clone(),
            r.status.clone(),
            cell(r.value),
            cell(r.lo),
            cell(r.hi),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]);
    }
    let widths: Vec<usize> = (0..7)
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("scenario {}\n", result.scenario);
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out.push_str(&format!("verdict: {}\n", result.verdict));
    out
}

pub fn render(result: &ScenarioResult, format: Format) -> String {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => to_json(result),
        Format::Table => to_table(result),
    }
}

/// Writes the rendered result to the configured file, or stdout.
pub fn emit(result: &ScenarioResult, output: &OutputSpec) -> Result<(), CliError> {
    let text = render(result, output.format);
    match &output.path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| CliError::io(path, e))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
