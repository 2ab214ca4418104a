use std::fmt::Write;

use postsel_core::analysis::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report is plain data");
    s.push('\n');
    s
}

/// Header `name,value,std_error,count`, then one row per quantity. Missing
/// fields are left empty.
pub fn to_csv(report: &Report) -> String {
    let mut s = String::from("name,value,std_error,count\n");
    for q in &report.quantities {
        let se = q.std_error.map(|e| e.to_string()).unwrap_or_default();
        let n = q.count.map(|c| c.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{}", q.name, q.value, se, n).expect("writing to a String");
    }
    s
}
