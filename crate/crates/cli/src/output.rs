use std::io::Write;

use lebdiff::ExactScalar;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

/// Flat rows for CSV emission. Exact columns come in `num`/`den` pairs;
/// `*_approx` columns are lossy decimals for plotting.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Header triple for an exact column.
    pub fn exact(name: &str) -> [String; 3] {
        [
            format!("{name}_num"),
            format!("{name}_den"),
            format!("{name}_approx"),
        ]
    }

    pub fn with_exact(mut self, names: &[&str]) -> Self {
        for n in names {
            self.headers.extend(Self::exact(n));
        }
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

pub fn cells(v: &ExactScalar) -> [String; 3] {
    let r = v.to_ratio();
    [
        r.numer().to_string(),
        r.denom().to_string(),
        format!("{:.12}", v.to_f64()),
    ]
}

pub fn opt_cells(v: Option<&ExactScalar>) -> [String; 3] {
    v.map(cells).unwrap_or_default()
}

/// What a command produced; `passed = false` maps to exit code 1.
pub struct Report {
    pub json: serde_json::Value,
    pub table: Table,
    pub passed: bool,
}

impl Report {
    pub fn new(value: &impl Serialize, table: Table) -> CliResult<Self> {
        Ok(Report {
            json: serde_json::to_value(value)
                .map_err(|e| crate::error::CliError::Usage(e.to_string()))?,
            table,
            passed: true,
        })
    }

    pub fn passed(mut self, passed: bool) -> Self {
        self.passed = passed;
        self
    }
}

pub fn render(report: &Report, format: Format) -> CliResult<Vec<u8>> {
    Ok(match format {
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(&report.json)
                .map_err(|e| crate::error::CliError::Usage(e.to_string()))?;
            buf.push(b'\n');
            buf
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&report.table.headers)?;
            for row in &report.table.rows {
                w.write_record(row)?;
            }
            w.into_inner()
                .map_err(|e| crate::error::CliError::Io(e.into_error()))?
        }
    })
}

/// Single writer: everything goes out in one buffered write.
pub fn emit(report: &Report, cfg: &RunConfig) -> CliResult<()> {
    let bytes = render(report, cfg.format)?;
    match &cfg.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, bytes)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}
