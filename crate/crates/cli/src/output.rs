//! CSV rendering with a fixed numeric format so identical runs produce
//! byte-identical files.

use std::fs;
use std::io;
use std::path::Path;

use crate::engines::Table;

/// 17 significant digits: enough for f64 round-tripping, and a fixed
/// width so output bytes depend only on the values.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.header.join(","));
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_table(path: &Path, table: &Table) -> io::Result<()> {
    fs::write(path, render(table))
}
