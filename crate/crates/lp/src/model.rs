use std::fmt;

use crate::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

/// One row `Σ coeff·x (rel) rhs`, stored sparsely. Column indices are unique
/// and each one is below the program width.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization program over variables with finite lower bounds.
///
/// Invariants are enforced by the builder methods: every row has the width of
/// the objective, bounds are ordered, and binary variables live inside `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    objective_offset: f64,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<usize, LpError> {
        let index = self.variables.len();
        check_bounds(index, lower, upper, kind)?;
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.objective.push(0.0);
        Ok(index)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<usize, LpError> {
        self.add_variable(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<usize, LpError> {
        self.add_variable(name, lower, upper, VarKind::Continuous)
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        let v = self
            .variables
            .get_mut(var)
            .ok_or(LpError::ColumnOutOfRange {
                column: var,
                width: self.objective.len(),
            })?;
        check_bounds(var, lower, upper, v.kind)?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) -> Result<(), LpError> {
        if !coeff.is_finite() {
            return Err(LpError::NonFinite);
        }
        let width = self.objective.len();
        let slot = self
            .objective
            .get_mut(var)
            .ok_or(LpError::ColumnOutOfRange { column: var, width })?;
        *slot = coeff;
        Ok(())
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.objective_offset = offset;
    }

    /// Adds a row; repeated columns in `terms` are summed and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<usize, LpError> {
        if !rhs.is_finite() {
            return Err(LpError::NonFinite);
        }
        let width = self.objective.len();
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (column, coeff) in terms {
            if column >= width {
                return Err(LpError::ColumnOutOfRange { column, width });
            }
            if !coeff.is_finite() {
                return Err(LpError::NonFinite);
            }
            match merged.iter_mut().find(|(c, _)| *c == column) {
                Some(slot) => slot.1 += coeff,
                None => merged.push((column, coeff)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        merged.sort_by_key(|&(c, _)| c);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            relation,
            rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn binary_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    /// The same program with every binary flag dropped; bounds are kept.
    pub fn relaxation(&self) -> LinearProgram {
        let mut relaxed = self.clone();
        for v in &mut relaxed.variables {
            v.kind = VarKind::Continuous;
        }
        relaxed
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xv)| (v.lower - xv).max(xv - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }
}

fn check_bounds(index: usize, lower: f64, upper: f64, kind: VarKind) -> Result<(), LpError> {
    if !lower.is_finite() || upper.is_nan() || upper == f64::NEG_INFINITY || lower > upper {
        return Err(LpError::InvalidBounds {
            column: index,
            lower,
            upper,
        });
    }
    if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
        return Err(LpError::InvalidBounds {
            column: index,
            lower,
            upper,
        });
    }
    Ok(())
}
