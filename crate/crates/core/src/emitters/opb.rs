//! OPB for pseudo-Boolean solvers. Variable `j` (by `VarId`) is written as
//! `x{j+1}`; the sidecar `<path>.names` maps each `x` name back to the model.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model_ir::{LinearExpr, ModelIR, Sense};

pub fn opb_name(index: usize) -> String {
    format!("x{}", index + 1)
}

/// Inverse of [`opb_name`].
pub fn opb_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<usize>().ok()?.checked_sub(1)
}

fn push_terms(out: &mut String, expr: &LinearExpr, sign: i64) {
    for (v, c) in expr.terms() {
        let _ = write!(out, "{:+} {} ", sign * c, opb_name(v.0));
    }
}

/// Normalized `>=` lines for every row.
fn constraint_lines(model: &ModelIR) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for row in model.constraints() {
        if row.expr.is_empty() {
            if row.sense.holds(0, row.rhs) {
                continue;
            }
            return Err(Error::InvalidModel(format!(
                "row {} has no terms and cannot hold",
                row.name
            )));
        }
        let signs: &[i64] = match row.sense {
            Sense::Ge => &[1],
            Sense::Le => &[-1],
            Sense::Eq => &[1, -1],
        };
        for &s in signs {
            let mut line = String::new();
            push_terms(&mut line, &row.expr, s);
            let _ = write!(line, ">= {} ;", s * row.rhs);
            lines.push(line);
        }
    }
    Ok(lines)
}

pub fn opb_string(model: &ModelIR) -> Result<String> {
    if let Some(v) = model.variables().iter().find(|v| !v.is_binary()) {
        return Err(Error::InvalidModel(format!(
            "OPB needs binary variables only; {} has domain [{}, {}]",
            v.name, v.lower, v.upper
        )));
    }
    let lines = constraint_lines(model)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "* #variable= {} #constraint= {}",
        model.num_vars(),
        lines.len()
    );
    let _ = writeln!(out, "* objective offset: {}", model.objective().constant);
    out.push_str("min: ");
    push_terms(&mut out, model.objective(), 1);
    out.push_str(";\n");
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    // Fixed binaries are not expressible as domains in OPB.
    for v in model.variables().iter().filter(|v| v.lower == v.upper) {
        let _ = writeln!(out, "+1 {} >= {} ;", opb_name(v.id.0), v.lower);
        let _ = writeln!(out, "-1 {} >= {} ;", opb_name(v.id.0), -v.lower);
    }
    Ok(out)
}

pub fn names_string(model: &ModelIR) -> String {
    let mut out = String::new();
    for v in model.variables() {
        let _ = writeln!(out, "{} {}", opb_name(v.id.0), v.name);
    }
    out
}

pub fn names_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".names");
    PathBuf::from(s)
}

/// Writes `path` and the name map `path.names`.
pub fn write_opb(model: &ModelIR, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = opb_string(model)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    let sidecar = names_path(path);
    std::fs::write(&sidecar, names_string(model)).map_err(|e| Error::io(&sidecar, e))
}
