//! Table emission: CSV (primary, plot-ready) and JSON (programmatic mirror).
//!
//! CSV files start with a `# config = {json}` provenance comment holding the
//! resolved configuration; the body is `{}`-formatted numbers, which gives
//! shortest round-trip representations and byte-identical output for
//! identical runs. No timestamps anywhere, so whole files compare equal.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v}"),
            Cell::U(v) => format!("{v}"),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::U(v) => serde_json::Value::from(*v),
            Cell::S(s) => serde_json::Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `# key = value` comment lines after the config header.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn write_csv<W: Write>(mut w: W, config: &ExperimentConfig, table: &Table) -> io::Result<()> {
    writeln!(w, "# config = {}", config.provenance_json())?;
    for note in &table.notes {
        writeln!(w, "# {note}")?;
    }
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn write_json<W: Write>(mut w: W, config: &ExperimentConfig, table: &Table) -> io::Result<()> {
    let rows: Vec<Vec<serde_json::Value>> = table
        .rows
        .iter()
        .map(|r| r.iter().map(Cell::json).collect())
        .collect();
    let doc = serde_json::json!({
        "config": config,
        "notes": table.notes,
        "columns": table.columns,
        "rows": rows,
    });
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
}

/// Write to `config.out` or stdout, in the configured format.
pub fn emit(config: &ExperimentConfig, table: &Table) -> Result<(), CliError> {
    let write_to = |w: &mut dyn Write| -> io::Result<()> {
        match config.format {
            OutputFormat::Csv => write_csv(w, config, table),
            OutputFormat::Json => write_json(w, config, table),
        }
    };
    let result = match &config.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                CliError::Validation(format!("cannot create {}: {e}", path.display()))
            })?;
            let mut w = BufWriter::new(file);
            write_to(&mut w).and_then(|()| w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_to(&mut w).and_then(|()| w.flush())
        }
    };
    result.map_err(|e| CliError::Validation(format!("write failed: {e}")))?;
    if let Some(path) = &config.out {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

/// Parse the `# config = {...}` header line back into a configuration.
pub fn parse_provenance(line: &str) -> Option<ExperimentConfig> {
    let json = line.strip_prefix("# config = ")?;
    serde_json::from_str(json).ok()
}

/// Strip `#` comment lines: the CSV body used for byte-comparisons.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
