//! Self-describing CSV tables.
//!
//! ```text
//! # optospring <title>
//! # config_hash=<16 hex digits>
//! # units=<name>[<unit>];<name>[<unit>];...
//! # <key>=<value>             (any extra metadata)
//! <name>,<name>,...
//! <value>,<value>,...
//! ```
//!
//! Numbers are written with `{:e}` (shortest round-trip form), flags as
//! `0`/`1`, undefined values as `NaN`.

use std::io::{BufRead, Write};

use super::SweepError;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub title: String,
    pub columns: Vec<Column>,
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(title: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            title: title.to_string(),
            columns: columns.iter().map(|(n, u)| Column::new(n, u)).collect(),
            meta: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, mut w: W, config_hash: &str) -> std::io::Result<()> {
        writeln!(w, "# optospring {}", self.title)?;
        writeln!(w, "# config_hash={config_hash}")?;
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}[{}]", c.name, c.unit))
            .collect();
        writeln!(w, "# units={}", units.join(";"))?;
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        writeln!(w, "{}", names.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_bytes(&self, config_hash: &str) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf, config_hash)
            .expect("writing to memory");
        buf
    }
}

/// Reads a table written by [`CsvTable::write`]; the config hash is returned
/// separately and left out of `meta`.
pub fn read_csv<R: BufRead>(r: R) -> Result<(CsvTable, String), SweepError> {
    let err = |line: usize, m: String| SweepError::Parse {
        path: None,
        message: format!("line {line}: {m}"),
    };
    let mut table = CsvTable::new("", &[]);
    let mut hash = String::new();
    let mut units: Vec<(String, String)> = Vec::new();
    let mut header_seen = false;
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| err(n, e.to_string()))?;
        if let Some(body) = line.strip_prefix('#') {
            let body = body.trim();
            if let Some(title) = body.strip_prefix("optospring ") {
                table.title = title.to_string();
            } else if let Some((k, v)) = body.split_once('=') {
                match k {
                    "config_hash" => hash = v.to_string(),
                    "units" => {
                        units = v
                            .split(';')
                            .filter_map(|u| {
                                let (name, rest) = u.split_once('[')?;
                                Some((name.to_string(), rest.trim_end_matches(']').to_string()))
                            })
                            .collect()
                    }
                    _ => table.meta.push((k.to_string(), v.to_string())),
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            table.columns = line
                .split(',')
                .map(|name| {
                    let unit = units
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, u)| u.clone())
                        .unwrap_or_default();
                    Column::new(name, &unit)
                })
                .collect();
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| err(n, format!("`{c}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != table.columns.len() {
            return Err(err(
                n,
                format!("{} cells, expected {}", row.len(), table.columns.len()),
            ));
        }
        table.rows.push(row);
    }
    Ok((table, hash))
}
