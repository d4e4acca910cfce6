//! Fixed-format MPS. Fields sit at the standard column offsets; a name longer
//! than its field pushes the rest of the record right, so readers must split
//! on whitespace (as [`read_mps`] does).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model_ir::{Domain, LinearExpr, ModelIR, Sense, VarId};

const OBJ_ROW: &str = "OBJ";

/// Pads `field` to `width` and always leaves a separating space.
fn field(out: &mut String, value: &str, width: usize) {
    let _ = write!(out, "{value:<width$}");
    if value.len() >= width {
        out.push(' ');
    }
}

fn record(out: &mut String, kind: &str, name: &str, entries: &[(&str, i64)]) {
    out.push(' ');
    field(out, kind, 3);
    field(out, name, 10);
    for (i, (row, value)) in entries.iter().enumerate() {
        field(out, row, 10);
        if i + 1 == entries.len() {
            let _ = write!(out, "{value:>12}");
        } else {
            field(out, &format!("{value:>12}"), 15);
        }
    }
    out.push('\n');
}

pub fn mps_string(model: &ModelIR) -> String {
    let mut out = String::from("NAME          BINREG\nROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    let names: Vec<String> = super::row_names(model);
    for (row, name) in model.constraints().iter().zip(&names) {
        let kind = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {kind}  {name}");
    }

    let mut columns: Vec<Vec<(usize, i64)>> = vec![Vec::new(); model.num_vars()];
    for (r, row) in model.constraints().iter().enumerate() {
        for (v, c) in row.expr.terms() {
            columns[v.0].push((r, c));
        }
    }
    out.push_str("COLUMNS\n");
    out.push_str("    MARKER                 'MARKER'                 'INTORG'\n");
    for var in model.variables() {
        let mut entries: Vec<(&str, i64)> = Vec::new();
        let obj = model.objective().coeff(var.id);
        if obj != 0 {
            entries.push((OBJ_ROW, obj));
        }
        entries.extend(
            columns[var.id.0]
                .iter()
                .map(|&(r, c)| (names[r].as_str(), c)),
        );
        if entries.is_empty() {
            // keeps the column declared
            entries.push((OBJ_ROW, 0));
        }
        for pair in entries.chunks(2) {
            record(&mut out, "", &var.name, pair);
        }
    }
    out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");

    out.push_str("RHS\n");
    let constant = model.objective().constant;
    if constant != 0 {
        record(&mut out, "", "RHS", &[(OBJ_ROW, -constant)]);
    }
    for (row, name) in model.constraints().iter().zip(&names) {
        if row.rhs != 0 {
            record(&mut out, "", "RHS", &[(name.as_str(), row.rhs)]);
        }
    }

    out.push_str("BOUNDS\n");
    for var in model.variables() {
        if var.is_binary() && var.lower == 0 && var.upper == 1 {
            record(&mut out, "BV", "BND", &[(var.name.as_str(), 1)]);
        } else if var.lower == var.upper {
            record(&mut out, "FX", "BND", &[(var.name.as_str(), var.lower)]);
        } else {
            record(&mut out, "LI", "BND", &[(var.name.as_str(), var.lower)]);
            record(&mut out, "UI", "BND", &[(var.name.as_str(), var.upper)]);
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(model: &ModelIR, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mps_string(model)).map_err(|e| Error::io(path, e))
}

pub fn read_mps(path: impl AsRef<Path>) -> Result<ModelIR> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mps(&text, path)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Head,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Ranges,
}

fn parse_value(tok: &str) -> Option<i64> {
    if let Ok(v) = tok.parse::<i64>() {
        return Some(v);
    }
    let f: f64 = tok.parse().ok()?;
    (f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
}

struct Column {
    name: String,
    integer: bool,
    entries: Vec<(usize, i64)>,
    obj: i64,
    lower: Option<i64>,
    upper: Option<i64>,
    binary: bool,
}

pub fn parse_mps(text: &str, path: &Path) -> Result<ModelIR> {
    let mut section = Section::Head;
    let mut objective_row: Option<String> = None;
    let mut rows: Vec<(String, Sense, i64)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut columns: Vec<Column> = Vec::new();
    let mut column_index: HashMap<String, usize> = HashMap::new();
    let mut in_integer_block = false;
    let mut obj_constant = 0i64;

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |m: String| Error::parse(path, line_no, m);
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') {
            let head = raw.split_whitespace().next().unwrap_or("");
            section = match head {
                "NAME" => Section::Head,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => Section::Ranges,
                "ENDATA" => break,
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match section {
            Section::Head => return Err(err("data before ROWS".into())),
            Section::Ranges => return Err(err("RANGES are not supported".into())),
            Section::Rows => {
                let [kind, name] = toks[..] else {
                    return Err(err("ROWS record needs a type and a name".into()));
                };
                let sense = match kind {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(err(format!("unknown row type {kind}"))),
                };
                row_index.insert(name.to_string(), rows.len());
                rows.push((name.to_string(), sense, 0));
            }
            Section::Columns => {
                if toks.len() == 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" => in_integer_block = true,
                        "'INTEND'" => in_integer_block = false,
                        other => return Err(err(format!("unknown marker {other}"))),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err("COLUMNS record needs one or two row entries".into()));
                }
                let name = toks[0];
                let idx = *column_index.entry(name.to_string()).or_insert_with(|| {
                    columns.push(Column {
                        name: name.to_string(),
                        integer: in_integer_block,
                        entries: Vec::new(),
                        obj: 0,
                        lower: None,
                        upper: None,
                        binary: false,
                    });
                    columns.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let value = parse_value(pair[1])
                        .ok_or_else(|| err(format!("non-integer coefficient {}", pair[1])))?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        columns[idx].obj += value;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        columns[idx].entries.push((r, value));
                    }
                }
            }
            Section::Rhs => {
                let entries = match toks.len() {
                    2 | 4 => &toks[..],
                    3 | 5 => &toks[1..],
                    _ => return Err(err("malformed RHS record".into())),
                };
                for pair in entries.chunks(2) {
                    let value = parse_value(pair[1])
                        .ok_or_else(|| err(format!("non-integer right-hand side {}", pair[1])))?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        obj_constant = -value;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        rows[r].2 = value;
                    }
                }
            }
            Section::Bounds => {
                let (kind, name, value) = match toks[..] {
                    [kind, _, name, value] => (kind, name, Some(value)),
                    [kind, _, name] => (kind, name, None),
                    _ => return Err(err("malformed BOUNDS record".into())),
                };
                let idx = *column_index
                    .get(name)
                    .ok_or_else(|| err(format!("bound on unknown column {name}")))?;
                let value = match value {
                    Some(v) => {
                        Some(parse_value(v).ok_or_else(|| err(format!("non-integer bound {v}")))?)
                    }
                    None => None,
                };
                let need = || value.ok_or_else(|| err(format!("{kind} bound needs a value")));
                let col = &mut columns[idx];
                match kind {
                    "BV" => {
                        col.binary = true;
                        col.lower = Some(0);
                        col.upper = Some(1);
                    }
                    "LO" | "LI" => col.lower = Some(need()?),
                    "UP" | "UI" => col.upper = Some(need()?),
                    "FX" => {
                        let v = need()?;
                        col.lower = Some(v);
                        col.upper = Some(v);
                    }
                    _ => return Err(err(format!("unsupported bound type {kind}"))),
                }
            }
        }
    }

    let mut model = ModelIR::new();
    let mut ids: Vec<VarId> = Vec::with_capacity(columns.len());
    for col in &columns {
        let lower = col.lower.unwrap_or(0);
        let upper = match col.upper {
            Some(u) => u,
            None if col.integer && col.lower.is_none() => 1,
            None => {
                return Err(Error::parse(
                    path,
                    0,
                    format!("column {} has no finite upper bound", col.name),
                ))
            }
        };
        if !col.integer && !col.binary {
            return Err(Error::parse(
                path,
                0,
                format!("column {} is continuous", col.name),
            ));
        }
        let domain =
            if col.binary || (lower == 0 && upper == 1 && col.integer && col.lower.is_none()) {
                Domain::Binary
            } else {
                Domain::Integer
            };
        ids.push(model.add_variable(col.name.clone(), domain, lower, upper)?);
    }
    let mut exprs = vec![LinearExpr::new(); rows.len()];
    let mut objective = LinearExpr::constant(obj_constant);
    for (col, &id) in columns.iter().zip(&ids) {
        objective.add_term(id, col.obj);
        for &(r, c) in &col.entries {
            exprs[r].add_term(id, c);
        }
    }
    for ((name, sense, rhs), expr) in rows.into_iter().zip(exprs) {
        model.add_constraint(expr, sense, rhs, name)?;
    }
    model.set_objective(objective)?;
    Ok(model)
}
