#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn is_integer(tok: &str) -> bool {
    let digits = tok.strip_prefix(['+', '-']).unwrap_or(tok);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn variable_index(tok: &str) -> Option<usize> {
    let digits = tok.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Checks a linear OPB document against the pseudo-Boolean competition
/// grammar: header comment, optional objective, `>=`/`=` constraints, each
/// term an integer followed by a declared variable, each statement ending
/// in ` ;`.
pub fn check_opb(text: &str) -> Result<(), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty document")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (vars, cons) = match fields.as_slice() {
        ["*", "#variable=", v, "#constraint=", c, ..] => (
            v.parse::<usize>().map_err(|_| "bad #variable")?,
            c.parse::<usize>().map_err(|_| "bad #constraint")?,
        ),
        _ => return Err(format!("bad header {header:?}")),
    };
    let mut seen_constraints = 0;
    let mut seen_objective = false;
    for (n, line) in lines.enumerate() {
        let n = n + 2;
        if line.starts_with('*') {
            continue;
        }
        let body = line
            .strip_suffix(" ;")
            .or_else(|| line.strip_suffix(';'))
            .ok_or(format!("line {n}: missing ';'"))?;
        let mut toks: Vec<&str> = body.split_whitespace().collect();
        let objective = toks.first() == Some(&"min:");
        if objective {
            if seen_objective || seen_constraints > 0 {
                return Err(format!("line {n}: objective must come first and once"));
            }
            seen_objective = true;
            toks.remove(0);
        } else {
            let rhs = toks.pop().ok_or(format!("line {n}: empty constraint"))?;
            let op = toks.pop().ok_or(format!("line {n}: missing operator"))?;
            if op != ">=" && op != "=" {
                return Err(format!("line {n}: operator {op:?}"));
            }
            if !is_integer(rhs) {
                return Err(format!("line {n}: right-hand side {rhs:?}"));
            }
            seen_constraints += 1;
        }
        if !toks.len().is_multiple_of(2) || (!objective && toks.is_empty()) {
            return Err(format!(
                "line {n}: terms must be coefficient/variable pairs"
            ));
        }
        for pair in toks.chunks(2) {
            if !is_integer(pair[0]) {
                return Err(format!("line {n}: coefficient {:?}", pair[0]));
            }
            match variable_index(pair[1]) {
                Some(j) if (1..=vars).contains(&j) => {}
                _ => return Err(format!("line {n}: variable {:?}", pair[1])),
            }
        }
    }
    if seen_constraints != cons {
        return Err(format!(
            "header declares {cons} constraints, found {seen_constraints}"
        ));
    }
    Ok(())
}
