//! Small, dependency-free linear and 0/1 programming.
//!
//! [`solve_lp`] runs a bounded revised primal simplex with a dense basis inverse and
//! [`solve_milp`] wraps it in depth-first branch-and-bound over the binary
//! columns. Both are deterministic: re-solving a program returns bit-identical
//! results. The intended scale is a few hundred rows and columns.

mod branch;
mod format;
mod model;
mod simplex;

pub use branch::{solve_milp, solve_milp_with, BranchOptions, MilpReport};
pub use model::{Constraint, LinearProgram, Relation, VarKind, Variable};
pub use simplex::{solve_lp, solve_lp_with, Pricing, SimplexOptions, FEASIBILITY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless a point is available.
    pub values: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective_value: f64::NAN,
        }
    }

    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("column {column} is outside a program of width {width}")]
    ColumnOutOfRange { column: usize, width: usize },
    #[error("invalid bounds [{lower}, {upper}] for column {column}")]
    InvalidBounds {
        column: usize,
        lower: f64,
        upper: f64,
    },
    #[error("coefficients and right-hand sides must be finite")]
    NonFinite,
}
