//! Reader for solver solution files.
//!
//! Accepted lines: `name value` (trailing tokens ignored), OPB `v` literal
//! lines, `o <objective>`, `s <status>`, and comments starting with `c`, `#`
//! or `*`. Any line mentioning "objective value" sets the objective from its
//! last number.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use log::warn;

use super::opb::opb_index;
use crate::error::{Error, Result};
use crate::model_ir::{ModelIR, VarId};

const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionFile {
    /// Total over the model's variables.
    pub assignments: BTreeMap<String, i64>,
    pub objective: Option<f64>,
}

impl SolutionFile {
    pub fn to_dense(&self, model: &ModelIR) -> Result<Vec<i64>> {
        model
            .variables()
            .iter()
            .map(|v| {
                self.assignments
                    .get(&v.name)
                    .copied()
                    .ok_or_else(|| Error::PartialAssignment(v.name.clone()))
            })
            .collect()
    }

    pub fn to_map(&self, model: &ModelIR) -> Result<HashMap<VarId, i64>> {
        Ok(self
            .to_dense(model)?
            .into_iter()
            .enumerate()
            .map(|(j, v)| (VarId(j), v))
            .collect())
    }
}

fn resolve(model: &ModelIR, name: &str) -> Option<VarId> {
    model
        .var_by_name(name)
        .or_else(|| opb_index(name).filter(|&j| j < model.num_vars()).map(VarId))
}

fn integer_value(tok: &str) -> Option<i64> {
    if let Ok(v) = tok.parse::<i64>() {
        return Some(v);
    }
    let f: f64 = tok.parse().ok()?;
    let r = f.round();
    ((f - r).abs() <= INTEGRALITY_TOL && r.abs() < 9.0e15).then_some(r as i64)
}

pub fn parse_solution(path: impl AsRef<Path>, model: &ModelIR) -> Result<SolutionFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution_str(&text, path, model)
}

pub fn parse_solution_str(text: &str, path: &Path, model: &ModelIR) -> Result<SolutionFile> {
    let mut values: Vec<Option<i64>> = vec![None; model.num_vars()];
    let mut objective = None;
    for (ln, raw) in text.lines().enumerate() {
        let err = |m: String| Error::parse(path, ln + 1, m);
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let Some(&head) = toks.first() else {
            continue;
        };
        if raw.to_ascii_lowercase().contains("objective value") {
            objective = toks.iter().rev().find_map(|t| t.parse::<f64>().ok());
            continue;
        }
        match head {
            "c" | "s" => continue,
            _ if head.starts_with('#') || head.starts_with('*') => continue,
            "o" => {
                let tok = toks
                    .get(1)
                    .ok_or_else(|| err("objective line without value".into()))?;
                objective = Some(
                    tok.parse()
                        .map_err(|_| err(format!("invalid objective {tok}")))?,
                );
            }
            "v" => {
                for lit in &toks[1..] {
                    let (name, value) = match lit.strip_prefix('-') {
                        Some(n) => (n, 0),
                        None => (*lit, 1),
                    };
                    let v = resolve(model, name)
                        .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
                    values[v.0] = Some(value);
                }
            }
            name => {
                let Some(tok) = toks.get(1) else {
                    return Err(err(format!("variable {name} without value")));
                };
                let v =
                    resolve(model, name).ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
                let value = integer_value(tok)
                    .ok_or_else(|| err(format!("non-integer value {tok} for {name}")))?;
                values[v.0] = Some(value);
            }
        }
    }
    let missing: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| values[v.id.0].is_none())
        .map(|v| v.name.as_str())
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).copied().collect();
        warn!(
            "{}: {} variables missing, set to their lower bounds (first: {})",
            path.display(),
            missing.len(),
            shown.join(", ")
        );
    }
    let assignments = model
        .variables()
        .iter()
        .map(|v| (v.name.clone(), values[v.id.0].unwrap_or(v.lower)))
        .collect();
    Ok(SolutionFile {
        assignments,
        objective,
    })
}
