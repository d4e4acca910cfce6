//! Exhaustive search used to certify the solver on small models.
//!
//! The enumerable variables are assigned every value in their bounds (with
//! pruning on constraints that become fully assigned). Each complete point is
//! then extended: equalities with a single open variable are solved for it,
//! and the variables still open must come in pairs `(u, v)` that appear in
//! every remaining row as `k * (u - v)`. Such a pair is optimized exactly by
//! scanning `u` over its domain and taking the cheapest admissible `v`.

use crate::error::{Error, Result};
use crate::model_ir::{ModelIR, Sense, VarId};

/// Default cap on the product of the enumerable domain sizes.
pub const DEFAULT_ORACLE_CAP: u128 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSolution {
    pub objective: i64,
    /// Indexed by `VarId`.
    pub assignment: Vec<i64>,
    /// Enumerated points that survived pruning.
    pub points: u64,
}

struct Pair {
    u: usize,
    v: usize,
    /// `(row, k)` with the row containing `k * (u - v)`.
    rows: Vec<(usize, i64)>,
}

struct Plan {
    order: Vec<usize>,
    /// Rows to check right after `order[k]` is assigned.
    checks: Vec<Vec<usize>>,
    /// `(row, var, coeff)`: solve `row` for `var`, in order.
    solves: Vec<(usize, usize, i64)>,
    pairs: Vec<Pair>,
}

pub fn brute_force_oracle(model: &ModelIR, enumerable: &[VarId]) -> Result<Option<OracleSolution>> {
    brute_force_oracle_with_cap(model, enumerable, DEFAULT_ORACLE_CAP)
}

/// Returns `None` when no feasible point exists.
pub fn brute_force_oracle_with_cap(
    model: &ModelIR,
    enumerable: &[VarId],
    cap: u128,
) -> Result<Option<OracleSolution>> {
    let size = enumerable.iter().try_fold(1u128, |acc, v| {
        let var = model.variable(*v);
        acc.checked_mul((var.upper - var.lower + 1) as u128)
    });
    match size {
        Some(s) if s <= cap => {}
        other => {
            return Err(Error::OracleCap {
                size: other.unwrap_or(u128::MAX),
                cap,
            })
        }
    }
    let plan = make_plan(model, enumerable)?;
    let compile = |expr: &crate::model_ir::LinearExpr, sense: Sense, rhs: i64| Row {
        terms: expr.terms().map(|(v, a)| (v.0, a)).collect(),
        sense,
        rhs,
    };
    let mut search = Enumerator {
        model,
        plan: &plan,
        rows: model
            .constraints()
            .iter()
            .map(|c| compile(&c.expr, c.sense, c.rhs))
            .collect(),
        objective: compile(model.objective(), Sense::Eq, 0),
        values: model.lower_bounds(),
        best: None,
        points: 0,
    };
    search.dfs(0);
    let points = search.points;
    Ok(search.best.map(|(objective, assignment)| OracleSolution {
        objective,
        assignment,
        points,
    }))
}

fn make_plan(model: &ModelIR, enumerable: &[VarId]) -> Result<Plan> {
    let n = model.num_vars();
    let rows = model.constraints();
    let mut assigned_at = vec![usize::MAX; n];
    for (k, v) in enumerable.iter().enumerate() {
        assigned_at[v.0] = k;
    }
    let mut checks = vec![Vec::new(); enumerable.len()];
    let mut known = vec![false; n];
    for v in enumerable {
        known[v.0] = true;
    }
    for (r, row) in rows.iter().enumerate() {
        if row.expr.terms().all(|(v, _)| known[v.0]) {
            match row.expr.terms().map(|(v, _)| assigned_at[v.0]).max() {
                Some(last) => checks[last].push(r),
                None => {
                    if !row.sense.holds(0, row.rhs) {
                        return Err(Error::InvalidModel(format!(
                            "row {} is violated by construction",
                            row.name
                        )));
                    }
                }
            }
        }
    }

    // Equalities with one open variable, propagated to a fixpoint.
    let mut solves = Vec::new();
    loop {
        let mut progress = false;
        for (r, row) in rows.iter().enumerate() {
            if row.sense != Sense::Eq {
                continue;
            }
            let open: Vec<(VarId, i64)> = row.expr.terms().filter(|(v, _)| !known[v.0]).collect();
            if let [(v, a)] = open[..] {
                solves.push((r, v.0, a));
                known[v.0] = true;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }

    let mut pairs: Vec<Pair> = Vec::new();
    let mut pair_of = vec![usize::MAX; n];
    for (r, row) in rows.iter().enumerate() {
        let open: Vec<(VarId, i64)> = row.expr.terms().filter(|(v, _)| !known[v.0]).collect();
        if open.is_empty() {
            continue;
        }
        let unsupported =
            || Error::InvalidModel(format!("oracle cannot complete row {}", row.name));
        let [(a, ka), (b, kb)] = open[..] else {
            return Err(unsupported());
        };
        if ka != -kb {
            return Err(unsupported());
        }
        // orient so that the row holds k * (u - v)
        let (u, v, k) = (a.0, b.0, ka);
        let idx = match (pair_of[u], pair_of[v]) {
            (usize::MAX, usize::MAX) => {
                pairs.push(Pair {
                    u,
                    v,
                    rows: Vec::new(),
                });
                pair_of[u] = pairs.len() - 1;
                pair_of[v] = pairs.len() - 1;
                pairs.len() - 1
            }
            (p, q) if p == q => p,
            _ => return Err(unsupported()),
        };
        let pair = &mut pairs[idx];
        let k = if pair.u == u { k } else { -k };
        pair.rows.push((r, k));
    }
    for j in 0..n {
        if !known[j] && pair_of[j] == usize::MAX {
            // appears in no row: take the objective-preferred bound later
            pairs.push(Pair {
                u: j,
                v: j,
                rows: Vec::new(),
            });
        }
    }
    Ok(Plan {
        order: enumerable.iter().map(|v| v.0).collect(),
        checks,
        solves,
        pairs,
    })
}

/// A row as flat `(var, coeff)` terms.
struct Row {
    terms: Vec<(usize, i64)>,
    sense: Sense,
    rhs: i64,
}

impl Row {
    fn lhs(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    fn holds(&self, values: &[i64]) -> bool {
        self.sense.holds(self.lhs(values), self.rhs)
    }
}

struct Enumerator<'a> {
    model: &'a ModelIR,
    plan: &'a Plan,
    rows: Vec<Row>,
    objective: Row,
    values: Vec<i64>,
    best: Option<(i64, Vec<i64>)>,
    points: u64,
}

impl Enumerator<'_> {
    fn dfs(&mut self, depth: usize) {
        if depth == self.plan.order.len() {
            self.points += 1;
            self.complete();
            return;
        }
        let j = self.plan.order[depth];
        let var = self.model.variable(VarId(j));
        for value in var.lower..=var.upper {
            self.values[j] = value;
            let ok = self.plan.checks[depth]
                .iter()
                .all(|&r| self.rows[r].holds(&self.values));
            if ok {
                self.dfs(depth + 1);
            }
        }
        self.values[j] = var.lower;
    }

    fn complete(&mut self) {
        let rows = &self.rows;
        for &(r, j, a) in &self.plan.solves {
            self.values[j] = 0;
            let rest = rows[r].lhs(&self.values);
            let num = rows[r].rhs - rest;
            if num % a != 0 {
                return;
            }
            let value = num / a;
            let var = self.model.variable(VarId(j));
            if value < var.lower || value > var.upper {
                return;
            }
            self.values[j] = value;
        }
        let obj = self.model.objective();
        let rows = &self.rows;
        for pair in &self.plan.pairs {
            if pair.u == pair.v {
                let var = self.model.variable(VarId(pair.u));
                self.values[pair.u] = if obj.coeff(var.id) < 0 {
                    var.upper
                } else {
                    var.lower
                };
                continue;
            }
            // t = u - v must satisfy every row: k * t  (sense)  rhs - rest
            let mut t_lo = i64::MIN;
            let mut t_hi = i64::MAX;
            self.values[pair.u] = 0;
            self.values[pair.v] = 0;
            for &(r, k) in &pair.rows {
                let row = &rows[r];
                let room = row.rhs - row.lhs(&self.values);
                let (le, ge) = match row.sense {
                    Sense::Le => (true, false),
                    Sense::Ge => (false, true),
                    Sense::Eq => (true, true),
                };
                // k * t <= room  /  k * t >= room
                if le {
                    if k > 0 {
                        t_hi = t_hi.min(floor_div(room, k));
                    } else {
                        t_lo = t_lo.max(ceil_div(room, k));
                    }
                }
                if ge {
                    if k > 0 {
                        t_lo = t_lo.max(ceil_div(room, k));
                    } else {
                        t_hi = t_hi.min(floor_div(room, k));
                    }
                }
            }
            let (cu, cv) = (obj.coeff(VarId(pair.u)), obj.coeff(VarId(pair.v)));
            let (u_var, v_var) = (
                self.model.variable(VarId(pair.u)),
                self.model.variable(VarId(pair.v)),
            );
            let mut best: Option<(i64, i64, i64)> = None;
            for u in u_var.lower..=u_var.upper {
                // v in [u - t_hi, u - t_lo] ∩ [v.lower, v.upper]
                let lo = v_var.lower.max(u.saturating_sub(t_hi));
                let hi = v_var.upper.min(u.saturating_sub(t_lo));
                if lo > hi {
                    continue;
                }
                let v = if cv >= 0 { lo } else { hi };
                let cost = cu * u + cv * v;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, u, v));
                }
            }
            let Some((_, u, v)) = best else {
                return;
            };
            self.values[pair.u] = u;
            self.values[pair.v] = v;
        }
        let objective = self.objective.lhs(&self.values) + obj.constant;
        if self.best.as_ref().is_none_or(|(b, _)| objective < *b) {
            let eval = self
                .model
                .evaluate_dense(&self.values)
                .expect("completed assignment is within bounds");
            assert!(
                eval.feasible,
                "oracle completion produced an infeasible point"
            );
            self.best = Some((objective, self.values.clone()));
        }
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if a % b != 0 && (a < 0) != (b < 0) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if a % b != 0 && (a < 0) == (b < 0) {
        q + 1
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_ir::{Domain, LinearExpr};

    #[test]
    fn rounded_division_signs() {
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(ceil_div(7, -2), -3);
        assert_eq!(ceil_div(-7, -2), 4);
        assert_eq!(ceil_div(6, 3), 2);
        assert_eq!(floor_div(7, 2), 3);
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(floor_div(7, -2), -4);
        assert_eq!(floor_div(-7, -2), 3);
    }

    #[test]
    fn fully_fixed_model_evaluates_single_point() {
        let mut m = ModelIR::new();
        let x = m.add_variable("x", Domain::Integer, 2, 2).unwrap();
        m.set_objective(LinearExpr::new().with_term(x, 3)).unwrap();
        let sol = brute_force_oracle(&m, &[]).unwrap().unwrap();
        assert_eq!(sol.points, 1);
        // x appears in no row: it takes its only value
        assert_eq!(sol.objective, 6);
    }

    #[test]
    fn cap_is_enforced() {
        let mut m = ModelIR::new();
        let vars: Vec<_> = (0..10)
            .map(|i| m.add_binary(format!("x{i}")).unwrap())
            .collect();
        assert!(matches!(
            brute_force_oracle_with_cap(&m, &vars, 1000),
            Err(Error::OracleCap { size: 1024, .. })
        ));
    }

    #[test]
    fn pair_completion_matches_closed_form() {
        // e+ - e- <= m ; min -2 e+ + 5 e-
        for m_val in -3..=3 {
            let mut m = ModelIR::new();
            let s = m.add_variable("s", Domain::Integer, m_val, m_val).unwrap();
            let ep = m.add_variable("ep", Domain::Integer, 0, 10).unwrap();
            let em = m.add_variable("em", Domain::Integer, 0, 10).unwrap();
            m.add_constraint(
                LinearExpr::new()
                    .with_term(s, 1)
                    .with_term(ep, -1)
                    .with_term(em, 1),
                Sense::Ge,
                0,
                "margin",
            )
            .unwrap();
            m.set_objective(LinearExpr::new().with_term(ep, -2).with_term(em, 5))
                .unwrap();
            let sol = brute_force_oracle(&m, &[s]).unwrap().unwrap();
            assert_eq!(sol.assignment[ep.0], m_val.max(0));
            assert_eq!(sol.assignment[em.0], (-m_val).max(0));
        }
    }
}
