//! Solver-agnostic bounded integer linear programs.
//!
//! A [`ModelIR`] is a minimization problem over integer variables with finite
//! bounds, linear constraints with integer coefficients, and a linear objective.
//! The encoders build it, the solvers consume it, and the emitters serialize it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a variable within one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub domain: Domain,
    pub lower: i64,
    pub upper: i64,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.domain == Domain::Binary
    }
}

/// Sparse linear expression with an integer constant term.
///
/// Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearExpr {
    terms: BTreeMap<VarId, i64>,
    pub constant: i64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: i64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: value,
        }
    }

    /// Adds `coeff * var`, merging with an existing term.
    pub fn add_term(&mut self, var: VarId, coeff: i64) -> &mut Self {
        if coeff != 0 {
            let entry = self.terms.entry(var).or_insert(0);
            *entry += coeff;
            if *entry == 0 {
                self.terms.remove(&var);
            }
        }
        self
    }

    pub fn with_term(mut self, var: VarId, coeff: i64) -> Self {
        self.add_term(var, coeff);
        self
    }

    pub fn add_constant(&mut self, value: i64) -> &mut Self {
        self.constant += value;
        self
    }

    pub fn coeff(&self, var: VarId) -> i64 {
        self.terms.get(&var).copied().unwrap_or(0)
    }

    /// Terms in increasing `VarId` order.
    pub fn terms(&self) -> impl ExactSizeIterator<Item = (VarId, i64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value of the expression (including the constant) at a dense assignment.
    pub fn eval(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<i64>() + self.constant
    }
}

impl FromIterator<(VarId, i64)> for LinearExpr {
    fn from_iter<T: IntoIterator<Item = (VarId, i64)>>(iter: T) -> Self {
        let mut expr = LinearExpr::new();
        for (v, c) in iter {
            expr.add_term(v, c);
        }
        expr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// `expr sense rhs`, with the constant of `expr` already folded into `rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: i64,
    pub name: String,
}

impl Constraint {
    pub fn is_satisfied(&self, values: &[i64]) -> bool {
        self.sense.holds(self.expr.eval(values), self.rhs)
    }
}

/// Result of checking an assignment against a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub objective: i64,
    pub feasible: bool,
    pub violated: Vec<usize>,
}

/// A bounded integer linear program, always minimized.
#[derive(Debug, Clone, Default)]
pub struct ModelIR {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: LinearExpr,
    names: HashMap<String, VarId>,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        domain: Domain,
        lower: i64,
        upper: i64,
    ) -> Result<VarId> {
        let name = name.into();
        if lower > upper {
            return Err(Error::BoundInversion { name, lower, upper });
        }
        if domain == Domain::Binary && (lower < 0 || upper > 1) {
            return Err(Error::InvalidModel(format!(
                "binary variable {name} must have bounds within [0, 1], got [{lower}, {upper}]"
            )));
        }
        if self.names.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        let id = VarId(self.variables.len());
        self.names.insert(name.clone(), id);
        self.variables.push(Variable {
            id,
            name,
            domain,
            lower,
            upper,
        });
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_variable(name, Domain::Binary, 0, 1)
    }

    /// Appends `expr sense rhs`; the constant of `expr` is moved to the right-hand side.
    pub fn add_constraint(
        &mut self,
        mut expr: LinearExpr,
        sense: Sense,
        rhs: i64,
        name: impl Into<String>,
    ) -> Result<usize> {
        self.check_vars(&expr)?;
        let rhs = rhs - expr.constant;
        expr.constant = 0;
        self.constraints.push(Constraint {
            expr,
            sense,
            rhs,
            name: name.into(),
        });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, expr: LinearExpr) -> Result<()> {
        self.check_vars(&expr)?;
        self.objective = expr;
        Ok(())
    }

    fn check_vars(&self, expr: &LinearExpr) -> Result<()> {
        match expr.terms().find(|(v, _)| v.0 >= self.variables.len()) {
            Some((v, _)) => Err(Error::UnknownVariable(v.to_string())),
            None => Ok(()),
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinearExpr {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn lower_bounds(&self) -> Vec<i64> {
        self.variables.iter().map(|v| v.lower).collect()
    }

    pub fn all_binary(&self) -> bool {
        self.variables.iter().all(Variable::is_binary)
    }

    /// Checks a total assignment exactly. Bounds violations are errors, not
    /// infeasibility, because the caller promised an in-bounds assignment.
    pub fn evaluate(&self, assignment: &HashMap<VarId, i64>) -> Result<Evaluation> {
        let mut values = vec![0; self.variables.len()];
        for var in &self.variables {
            values[var.id.0] = *assignment
                .get(&var.id)
                .ok_or_else(|| Error::PartialAssignment(var.name.clone()))?;
        }
        self.evaluate_dense(&values)
    }

    /// Same as [`ModelIR::evaluate`] for an assignment indexed by `VarId`.
    pub fn evaluate_dense(&self, values: &[i64]) -> Result<Evaluation> {
        if values.len() != self.variables.len() {
            return Err(Error::PartialAssignment(format!(
                "expected {} values, got {}",
                self.variables.len(),
                values.len()
            )));
        }
        for var in &self.variables {
            let v = values[var.id.0];
            if v < var.lower || v > var.upper {
                return Err(Error::OutOfBounds {
                    name: var.name.clone(),
                    value: v,
                });
            }
        }
        let violated: Vec<usize> = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_satisfied(values))
            .map(|(i, _)| i)
            .collect();
        Ok(Evaluation {
            objective: self.objective.eval(values),
            feasible: violated.is_empty(),
            violated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_has_unit_bounds() {
        let mut m = ModelIR::new();
        let v = m.add_binary("w+_0_0").unwrap();
        let var = m.variable(v);
        assert_eq!((var.lower, var.upper), (0, 1));
        assert_eq!(var.domain, Domain::Binary);
    }

    #[test]
    fn integer_bounds_stored_verbatim() {
        let mut m = ModelIR::new();
        let v = m.add_variable("b_0", Domain::Integer, -784, 784).unwrap();
        assert_eq!((m.variable(v).lower, m.variable(v).upper), (-784, 784));
    }

    #[test]
    fn rejects_inverted_bounds_and_duplicates() {
        let mut m = ModelIR::new();
        assert!(matches!(
            m.add_variable("x", Domain::Integer, 3, 2),
            Err(Error::BoundInversion { .. })
        ));
        m.add_binary("x").unwrap();
        assert!(matches!(m.add_binary("x"), Err(Error::DuplicateName(_))));
    }

    #[test]
    fn constant_is_folded_into_rhs() {
        let mut m = ModelIR::new();
        let x = m.add_binary("x").unwrap();
        let y = m.add_binary("y").unwrap();
        let c = m
            .add_constraint(
                LinearExpr::constant(3).with_term(x, 1).with_term(y, 1),
                Sense::Le,
                5,
                "c0",
            )
            .unwrap();
        let row = &m.constraints()[c];
        assert_eq!(row.rhs, 2);
        assert_eq!(row.expr.constant, 0);
        assert_eq!(row.expr.len(), 2);
    }

    #[test]
    fn duplicate_constraint_names_allowed() {
        let mut m = ModelIR::new();
        let x = m.add_binary("x").unwrap();
        m.add_constraint(LinearExpr::new().with_term(x, 1), Sense::Le, 1, "c")
            .unwrap();
        m.add_constraint(LinearExpr::new().with_term(x, 1), Sense::Ge, 0, "c")
            .unwrap();
        assert_eq!(m.num_constraints(), 2);
    }

    #[test]
    fn unknown_var_rejected() {
        let mut m = ModelIR::new();
        let err = m
            .add_constraint(LinearExpr::new().with_term(VarId(4), 1), Sense::Le, 1, "c")
            .unwrap_err();
        assert!(matches!(err, Error::UnknownVariable(_)));
    }

    #[test]
    fn zero_terms_cancel() {
        let mut e = LinearExpr::new();
        e.add_term(VarId(0), 2)
            .add_term(VarId(0), -2)
            .add_term(VarId(1), 0);
        assert!(e.is_empty());
    }

    #[test]
    fn evaluate_reports_violations() {
        let mut m = ModelIR::new();
        let x = m.add_binary("x").unwrap();
        let y = m.add_binary("y").unwrap();
        m.add_constraint(
            LinearExpr::new().with_term(x, 1).with_term(y, 1),
            Sense::Le,
            1,
            "pack",
        )
        .unwrap();
        m.add_constraint(LinearExpr::new().with_term(x, 1), Sense::Eq, 1, "fix")
            .unwrap();
        m.set_objective(LinearExpr::new().with_term(x, 2).with_term(y, -1))
            .unwrap();

        let zero = m.evaluate_dense(&[0, 0]).unwrap();
        assert_eq!(zero.violated, vec![1]);
        assert!(!zero.feasible);

        let both = m.evaluate_dense(&[1, 1]).unwrap();
        assert_eq!(both.violated, vec![0]);

        let ok = m.evaluate_dense(&[1, 0]).unwrap();
        assert!(ok.feasible);
        assert_eq!(ok.objective, 2);
    }

    #[test]
    fn evaluate_rejects_partial_assignment() {
        let mut m = ModelIR::new();
        let x = m.add_binary("x").unwrap();
        m.add_binary("y").unwrap();
        let partial = HashMap::from([(x, 1)]);
        assert!(matches!(
            m.evaluate(&partial),
            Err(Error::PartialAssignment(_))
        ));
    }
}
