//! Fixed-format MPS export (and a reader for the same dialect).
//!
//! Fixed format limits names to eight characters, so rows and columns are
//! written as `R0000000`/`C0000000` by index; the original labels follow as
//! `*` comment lines so a file stays readable. Numbers are printed in the
//! shortest form that fits the 12-character field, which keeps output
//! byte-for-byte reproducible.

use std::fmt::Write as _;
use std::io;

use super::{LpBuilder, LpError, RowSense, SparseLp};

#[derive(Debug, thiserror::Error)]
pub enum MpsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn row_name(i: usize) -> String {
    format!("R{i:07}")
}

fn col_name(j: usize) -> String {
    format!("C{j:07}")
}

/// Formats `v` into at most 12 characters.
pub fn format_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (0..=10).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn field_line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) {
    // Columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
    let mut line = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}");
    if !f5.is_empty() {
        let _ = write!(line, "   {f5:<8}  {f6:>12}");
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

pub fn to_mps_string(lp: &SparseLp, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    for (j, label) in lp.column_labels().iter().enumerate() {
        let _ = writeln!(out, "* {} {label}", col_name(j));
    }
    for (i, row) in lp.rows().iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row_name(i), row.label);
    }
    out.push_str("ROWS\n");
    field_line(&mut out, "N", "COST", "", "", "", "");
    for (i, row) in lp.rows().iter().enumerate() {
        let t = match row.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        field_line(&mut out, t, &row_name(i), "", "", "", "");
    }

    out.push_str("COLUMNS\n");
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n_vars()];
    for &(r, c, v) in lp.entries() {
        by_col[c].push((r, v));
    }
    for (j, col) in by_col.iter().enumerate() {
        let c = col_name(j);
        let mut items: Vec<(String, f64)> = Vec::new();
        if lp.objective()[j] != 0.0 {
            items.push(("COST".to_string(), lp.objective()[j]));
        }
        items.extend(col.iter().map(|&(r, v)| (row_name(r), v)));
        if items.is_empty() {
            // Keep the column declared even without coefficients.
            items.push(("COST".to_string(), 0.0));
        }
        for pair in items.chunks(2) {
            let (r1, v1) = &pair[0];
            let (r2, v2) = pair
                .get(1)
                .map(|(r, v)| (r.clone(), format_number(*v)))
                .unwrap_or_default();
            field_line(&mut out, "", &c, r1, &format_number(*v1), &r2, &v2);
        }
    }

    out.push_str("RHS\n");
    let nonzero: Vec<(String, f64)> = lp
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rhs != 0.0)
        .map(|(i, r)| (row_name(i), r.rhs))
        .collect();
    for pair in nonzero.chunks(2) {
        let (r1, v1) = &pair[0];
        let (r2, v2) = pair
            .get(1)
            .map(|(r, v)| (r.clone(), format_number(*v)))
            .unwrap_or_default();
        field_line(&mut out, "", "RHS", r1, &format_number(*v1), &r2, &v2);
    }

    out.push_str("BOUNDS\n");
    for j in 0..lp.n_vars() {
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        let c = col_name(j);
        if lo == hi {
            field_line(&mut out, "FX", "BND", &c, &format_number(lo), "", "");
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            field_line(&mut out, "FR", "BND", &c, "", "", "");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            field_line(&mut out, "MI", "BND", &c, "", "", "");
        } else if lo != 0.0 {
            field_line(&mut out, "LO", "BND", &c, &format_number(lo), "", "");
        }
        if hi != f64::INFINITY {
            field_line(&mut out, "UP", "BND", &c, &format_number(hi), "", "");
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps<W: io::Write>(lp: &SparseLp, name: &str, mut w: W) -> io::Result<()> {
    w.write_all(to_mps_string(lp, name).as_bytes())
}

/// Reads the dialect produced by [`to_mps_string`]; fields are whitespace separated.
pub fn parse_mps(text: &str) -> Result<SparseLp, MpsError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let syntax = |line: usize, msg: &str| MpsError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let num = |line: usize, s: &str| -> Result<f64, MpsError> {
        s.parse::<f64>()
            .map_err(|_| syntax(line, &format!("bad number {s:?}")))
    };

    let mut section = Section::None;
    let mut objective_row = String::new();
    let mut row_index = std::collections::HashMap::new();
    let mut rows: Vec<(String, RowSense)> = Vec::new();
    let mut col_index = std::collections::HashMap::new();
    let mut cols: Vec<String> = Vec::new();
    let mut cost: Vec<f64> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match f[0] {
                "NAME" => Section::None,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(syntax(line, &format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(syntax(line, "expected row type and name"));
                }
                let sense = match f[0] {
                    "N" => {
                        objective_row = f[1].to_string();
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(syntax(line, &format!("unknown row type {t}"))),
                };
                row_index.insert(f[1].to_string(), rows.len());
                rows.push((f[1].to_string(), sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(syntax(line, "expected 3 or 5 fields"));
                }
                let j = *col_index.entry(f[0].to_string()).or_insert_with(|| {
                    cols.push(f[0].to_string());
                    cost.push(0.0);
                    entries.push(Vec::new());
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                    cols.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let v = num(line, pair[1])?;
                    if pair[0] == objective_row {
                        cost[j] = v;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| syntax(line, &format!("unknown row {}", pair[0])))?;
                        entries[j].push((r, v));
                    }
                }
            }
            Section::Rhs => {
                for pair in f[1..].chunks(2) {
                    if pair.len() != 2 {
                        return Err(syntax(line, "dangling RHS field"));
                    }
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| syntax(line, &format!("unknown row {}", pair[0])))?;
                    rhs[r] = num(line, pair[1])?;
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(syntax(line, "short bound line"));
                }
                let j = *col_index
                    .get(f[2])
                    .ok_or_else(|| syntax(line, &format!("unknown column {}", f[2])))?;
                let value = || f.get(3).map(|s| num(line, s)).transpose();
                match f[0] {
                    "UP" => upper[j] = value()?.ok_or_else(|| syntax(line, "missing value"))?,
                    "LO" => lower[j] = value()?.ok_or_else(|| syntax(line, "missing value"))?,
                    "FX" => {
                        let v = value()?.ok_or_else(|| syntax(line, "missing value"))?;
                        lower[j] = v;
                        upper[j] = v;
                    }
                    "FR" => {
                        lower[j] = f64::NEG_INFINITY;
                        upper[j] = f64::INFINITY;
                    }
                    "MI" => lower[j] = f64::NEG_INFINITY,
                    "PL" => upper[j] = f64::INFINITY,
                    t => return Err(syntax(line, &format!("unknown bound type {t}"))),
                }
            }
            Section::None => return Err(syntax(line, "data outside a section")),
        }
    }

    let mut b = LpBuilder::new();
    for j in 0..cols.len() {
        b.add_column(cols[j].clone(), cost[j], lower[j], upper[j]);
    }
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    for (j, col) in entries.iter().enumerate() {
        for &(r, v) in col {
            by_row[r].push((j, v));
        }
    }
    for (i, (name, sense)) in rows.into_iter().enumerate() {
        b.add_row(name, sense, rhs[i], &by_row[i]);
    }
    Ok(b.build()?)
}
