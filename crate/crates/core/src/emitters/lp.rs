//! CPLEX LP text format (our dialect: integer coefficients, every variable
//! bounded, one section per domain).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model_ir::{Domain, LinearExpr, ModelIR, Sense};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, model: &ModelIR, expr: &LinearExpr, with_constant: bool) {
    let mut first = true;
    let mut on_line = 0;
    for (v, c) in expr.terms() {
        if on_line == TERMS_PER_LINE {
            out.push_str("\n   ");
            on_line = 0;
        }
        let name = &model.variable(v).name;
        if c == 1 {
            if first {
                let _ = write!(out, " {name}");
            } else {
                let _ = write!(out, " + {name}");
            }
        } else if c < 0 {
            let _ = write!(out, " - {} {name}", -c);
        } else if first {
            let _ = write!(out, " {c} {name}");
        } else {
            let _ = write!(out, " + {c} {name}");
        }
        first = false;
        on_line += 1;
    }
    if with_constant && (expr.constant != 0 || first) {
        let k = expr.constant;
        if first {
            let _ = write!(out, " {k}");
        } else if k < 0 {
            let _ = write!(out, " - {}", -k);
        } else {
            let _ = write!(out, " + {k}");
        }
    }
}

pub fn lp_string(model: &ModelIR) -> String {
    let mut out = String::new();
    out.push_str("\\ binarized classifier training model\n");
    out.push_str("Minimize\n obj:");
    push_terms(&mut out, model, model.objective(), true);
    out.push_str("\nSubject To\n");
    for (row, name) in model.constraints().iter().zip(super::row_names(model)) {
        let _ = write!(out, "{name}:");
        if row.expr.is_empty() {
            out.push_str(" 0");
        } else {
            push_terms(&mut out, model, &row.expr, false);
        }
        let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
    }
    out.push_str("Bounds\n");
    for var in model.variables().iter().filter(|v| !v.is_binary()) {
        if var.lower == var.upper {
            let _ = writeln!(out, " {} = {}", var.name, var.lower);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", var.lower, var.name, var.upper);
        }
    }
    for (title, domain) in [("Binaries", Domain::Binary), ("Generals", Domain::Integer)] {
        let names: Vec<&str> = model
            .variables()
            .iter()
            .filter(|v| v.domain == domain)
            .map(|v| v.name.as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(model: &ModelIR, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, lp_string(model)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "generals" | "general" | "gen" | "integers" => Some(Section::Generals),
        _ => None,
    }
}

fn parse_int(tok: &str) -> Option<i64> {
    if let Ok(v) = tok.parse::<i64>() {
        return Some(v);
    }
    let f: f64 = tok.parse().ok()?;
    (f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
}

fn is_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Linear terms as `(name, coeff)` plus a constant.
fn parse_terms(
    tokens: &[&str],
    err: &dyn Fn(String) -> Error,
) -> Result<(Vec<(String, i64)>, i64)> {
    let mut terms = Vec::new();
    let mut constant = 0i64;
    let mut sign = 1i64;
    let mut coeff: Option<i64> = None;
    for &tok in tokens {
        match tok {
            "+" => {
                if let Some(c) = coeff.take() {
                    constant += sign * c;
                }
                sign = 1;
            }
            "-" => {
                if let Some(c) = coeff.take() {
                    constant += sign * c;
                }
                sign = -1;
            }
            _ => {
                if let Some(v) = parse_int(tok) {
                    if let Some(c) = coeff.replace(v) {
                        return Err(err(format!("two numbers in a row: {c} {tok}")));
                    }
                } else if tok.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
                    return Err(err(format!("non-integer coefficient {tok}")));
                } else {
                    terms.push((tok.to_string(), sign * coeff.take().unwrap_or(1)));
                    sign = 1;
                }
            }
        }
    }
    if let Some(c) = coeff {
        constant += sign * c;
    }
    Ok((terms, constant))
}

/// Reads the dialect produced by [`write_lp`].
pub fn read_lp(path: impl AsRef<Path>) -> Result<ModelIR> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lp(&text, path)
}

pub fn parse_lp(text: &str, path: &Path) -> Result<ModelIR> {
    // Collect tokens per section, remembering the line of each token.
    let mut section = Section::None;
    let mut objective: Vec<(usize, String)> = Vec::new();
    let mut constraints: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut generals: Vec<String> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("end") {
            break;
        }
        if let Some(s) = section_of(line) {
            section = s;
            continue;
        }
        let toks = line.split_whitespace().map(|t| (ln + 1, t.to_string()));
        match section {
            Section::None => {
                return Err(Error::parse(
                    path,
                    ln + 1,
                    "content before a section header",
                ))
            }
            Section::Objective => objective.extend(toks),
            Section::Constraints => constraints.extend(toks),
            Section::Bounds => bounds.push((ln + 1, line.to_string())),
            Section::Binaries => binaries.extend(line.split_whitespace().map(String::from)),
            Section::Generals => generals.extend(line.split_whitespace().map(String::from)),
        }
    }

    // Variables are declared in order of first appearance.
    let mut model = ModelIR::new();
    let mut order: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut note = |name: &str| {
        if seen.insert(name.to_string()) {
            order.push(name.to_string());
        }
    };

    let obj_tokens: Vec<&str> = objective
        .iter()
        .map(|(_, t)| t.as_str())
        .filter(|t| !t.ends_with(':'))
        .collect();
    let obj_line = objective.first().map_or(0, |(l, _)| *l);
    let (obj_terms, obj_const) = parse_terms(&obj_tokens, &|m| Error::parse(path, obj_line, m))?;
    obj_terms.iter().for_each(|(n, _)| note(n));

    struct Row {
        name: String,
        terms: Vec<(String, i64)>,
        constant: i64,
        sense: Sense,
        rhs: i64,
    }
    let mut rows = Vec::new();
    let mut i = 0;
    while i < constraints.len() {
        let line = constraints[i].0;
        let err = |m: String| Error::parse(path, line, m);
        let mut name = String::new();
        if let Some(n) = constraints[i].1.strip_suffix(':') {
            name = n.to_string();
            i += 1;
        }
        let start = i;
        while i < constraints.len() && is_sense(&constraints[i].1).is_none() {
            i += 1;
        }
        if i + 1 >= constraints.len() {
            return Err(err("constraint without sense and right-hand side".into()));
        }
        let toks: Vec<&str> = constraints[start..i]
            .iter()
            .map(|(_, t)| t.as_str())
            .collect();
        let sense = is_sense(&constraints[i].1).unwrap();
        let mut rhs_tok = constraints[i + 1].1.clone();
        i += 2;
        if (rhs_tok == "-" || rhs_tok == "+") && i < constraints.len() {
            rhs_tok.push_str(&constraints[i].1);
            i += 1;
        }
        let rhs =
            parse_int(&rhs_tok).ok_or_else(|| err(format!("invalid right-hand side {rhs_tok}")))?;
        let (terms, constant) = parse_terms(&toks, &err)?;
        terms.iter().for_each(|(n, _)| note(n));
        rows.push(Row {
            name,
            terms,
            constant,
            sense,
            rhs,
        });
    }

    let mut var_bounds: std::collections::HashMap<String, (Option<i64>, Option<i64>)> =
        std::collections::HashMap::new();
    for (line, text) in &bounds {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let err = |m: &str| Error::parse(path, *line, format!("{m}: {text}"));
        match toks[..] {
            [lo, "<=", name, "<=", hi] => {
                let lo = parse_int(lo).ok_or_else(|| err("bad lower bound"))?;
                let hi = parse_int(hi).ok_or_else(|| err("bad upper bound"))?;
                note(name);
                var_bounds.insert(name.to_string(), (Some(lo), Some(hi)));
            }
            [name, "=", v] => {
                let v = parse_int(v).ok_or_else(|| err("bad fixed value"))?;
                note(name);
                var_bounds.insert(name.to_string(), (Some(v), Some(v)));
            }
            [name, op, v] if is_sense(op).is_some() => {
                let v = parse_int(v).ok_or_else(|| err("bad bound"))?;
                note(name);
                let entry = var_bounds.entry(name.to_string()).or_insert((None, None));
                match is_sense(op).unwrap() {
                    Sense::Le => entry.1 = Some(v),
                    Sense::Ge => entry.0 = Some(v),
                    Sense::Eq => *entry = (Some(v), Some(v)),
                }
            }
            _ => return Err(err("unsupported bound")),
        }
    }
    binaries.iter().for_each(|n| note(n));
    generals.iter().for_each(|n| note(n));

    let binary_set: std::collections::HashSet<&String> = binaries.iter().collect();
    for name in &order {
        if binary_set.contains(name) {
            model.add_variable(name.clone(), Domain::Binary, 0, 1)?;
            continue;
        }
        let (lo, hi) = var_bounds.get(name).copied().unwrap_or((Some(0), None));
        let lo = lo.unwrap_or(0);
        let hi = hi.ok_or_else(|| {
            Error::parse(
                path,
                0,
                format!("variable {name} has no finite upper bound"),
            )
        })?;
        model.add_variable(name.clone(), Domain::Integer, lo, hi)?;
    }
    let expr_of = |terms: &[(String, i64)], constant: i64, model: &ModelIR| -> LinearExpr {
        let mut e = LinearExpr::constant(constant);
        for (n, c) in terms {
            e.add_term(model.var_by_name(n).expect("declared above"), *c);
        }
        e
    };
    for row in rows {
        let e = expr_of(&row.terms, row.constant, &model);
        model.add_constraint(e, row.sense, row.rhs, row.name)?;
    }
    let obj = expr_of(&obj_terms, obj_const, &model);
    model.set_objective(obj)?;
    Ok(model)
}
