use crate::simplex::{SimplexOptions, Solver, WarmStart};
use crate::{LinearProgram, LpSolution, LpStatus};

#[derive(Clone, Copy, Debug)]
pub struct BranchOptions {
    /// Maximum number of LP relaxations solved before giving up.
    pub node_budget: usize,
    pub integrality_tol: f64,
    /// Known spacing of objective values over integral points (for example
    /// `1.0` when every integral solution has an integer objective). Lets a
    /// node be pruned once it cannot improve on the incumbent by a full step.
    pub objective_step: Option<f64>,
    pub simplex: SimplexOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            node_budget: 1_000_000,
            integrality_tol: 1e-6,
            objective_step: None,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MilpReport {
    pub solution: LpSolution,
    /// LP relaxations solved, root included.
    pub nodes: usize,
    /// Branching decisions taken (two children each).
    pub branches: usize,
}

struct Node {
    fixings: Vec<(usize, f64)>,
    start: Start,
}

enum Start {
    Cold,
    Warm(WarmStart),
    /// Continue from the solver in `carried`.
    Parent,
}

pub fn solve_milp(prog: &LinearProgram) -> LpSolution {
    solve_milp_with(prog, &BranchOptions::default()).solution
}

/// Depth-first branch-and-bound over the binary columns of `prog`.
///
/// Branches on the most fractional binary (lowest index on ties) and explores
/// the `= 1` child first. With the node budget exhausted the status is
/// `IterationLimit` and `values` holds the incumbent, or is empty if none.
pub fn solve_milp_with(prog: &LinearProgram, opts: &BranchOptions) -> MilpReport {
    let binaries: Vec<usize> = prog.binary_columns().collect();
    let base_lower: Vec<f64> = prog.variables().iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = prog.variables().iter().map(|v| v.upper).collect();

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut stack: Vec<Node> = vec![Node {
        fixings: Vec::new(),
        start: Start::Cold,
    }];
    let mut nodes = 0;
    let mut branches = 0;
    let mut complete = true;
    let mut root_status = None;
    // Solver of the node just branched on. Its `= 1` child is the next node
    // popped and continues from it directly.
    let mut carried: Option<Solver> = None;

    let mut lower = base_lower.clone();
    let mut upper = base_upper.clone();

    while let Some(Node { fixings, start }) = stack.pop() {
        if nodes >= opts.node_budget {
            complete = false;
            break;
        }
        nodes += 1;

        lower.copy_from_slice(&base_lower);
        upper.copy_from_slice(&base_upper);
        for &(j, v) in &fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let mut solver = match (start, carried.take()) {
            (Start::Parent, Some(mut s)) => {
                let &(j, v) = fixings.last().expect("child has a fixing");
                s.fix(j, v);
                s
            }
            (Start::Warm(warm), _) => Solver::with_basis(prog, &lower, &upper, &warm),
            _ => Solver::new(prog, &lower, &upper),
        };
        let relaxed = solver.solve(prog, &opts.simplex);
        if root_status.is_none() {
            root_status = Some(relaxed.status);
        }
        match relaxed.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded if incumbent.is_none() && fixings.is_empty() => {
                return MilpReport {
                    solution: LpSolution::without_point(LpStatus::Unbounded),
                    nodes,
                    branches,
                };
            }
            LpStatus::Unbounded | LpStatus::IterationLimit => {
                complete = false;
                continue;
            }
        }

        if let Some((_, best)) = &incumbent {
            let margin = match opts.objective_step {
                Some(step) => step - opts.integrality_tol,
                None => opts.integrality_tol,
            };
            if relaxed.objective_value > best - margin {
                continue;
            }
        }

        let branch_on = binaries
            .iter()
            .map(|&j| {
                let x = relaxed.values[j];
                (j, (x - x.floor()).min(x.ceil() - x))
            })
            .filter(|&(_, frac)| frac > opts.integrality_tol)
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some((_, f)) if f >= cand.1 => best,
                _ => Some(cand),
            });

        match branch_on {
            None => {
                let mut values = relaxed.values;
                for &j in &binaries {
                    values[j] = values[j].round();
                }
                let objective = prog.evaluate(&values);
                if incumbent.as_ref().is_none_or(|(_, best)| objective < *best) {
                    incumbent = Some((values, objective));
                }
            }
            Some((j, _)) => {
                branches += 1;
                let mut zero = fixings.clone();
                zero.push((j, 0.0));
                let mut one = fixings;
                one.push((j, 1.0));
                stack.push(Node {
                    fixings: zero,
                    start: Start::Warm(solver.warm_start()),
                });
                stack.push(Node {
                    fixings: one,
                    start: Start::Parent,
                });
                carried = Some(solver);
            }
        }
    }

    let status = match (&incumbent, complete) {
        (Some(_), true) => LpStatus::Optimal,
        (None, true) => LpStatus::Infeasible,
        (_, false) => LpStatus::IterationLimit,
    };
    let solution = match incumbent {
        Some((values, objective_value)) => LpSolution {
            status,
            values,
            objective_value,
        },
        None => LpSolution::without_point(status),
    };
    MilpReport {
        solution,
        nodes,
        branches,
    }
}
