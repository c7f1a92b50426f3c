//! Exact position-based 0/1 program for mapping one request, and the
//! decoding of its solutions.
//!
//! Variables: `xi[i, j, k] = 1` when function `i` takes position `k` in the
//! queue extension of node `j`; `t[i]` is the completion time of function `i`
//! and `tau[j, k]` the completion time of position `k` on node `j`.
//!
//! Row families, in emission order:
//! - `buffer_j`: demands placed on `j` fit its available buffer;
//! - `cap_i_j`: at most one position of `j` for function `i`;
//! - `slot_j_k`: at most one function per position;
//! - `assign_i`: every function gets exactly one position;
//! - `chain_i`: `t[i] >= t[i-1] + rho`;
//! - `order_j_k`: `tau[j,k] >= tau[j,k-1] + rho`;
//! - `first_fn`, `first_pos_j`: nothing completes before arrival plus `rho`;
//! - `queue_i`, `queue_pos_j_k`: nothing completes before the node's queue
//!   completion plus `rho`;
//! - `link_lo_i_j_k`, `link_hi_i_j_k`: big-M rows tying `t[i] = tau[j,k]`
//!   when `xi[i,j,k] = 1`;
//! - `deadline`: the last completion is within the deadline.
//!
//! Pairs that can never be part of a feasible mapping (incapable node, demand
//! above the available buffer, deadline unreachable even on idle successors)
//! get no variables. Positions are limited to what the node can take from
//! this request, and function `i` may only use position `k` if at least `k`
//! eligible functions precede it, which removes mappings that differ only by
//! leaving low positions empty.

use std::collections::BTreeMap;

use nfms_lp::{
    solve_milp_with, BranchOptions, LinearProgram, LpSolution, LpStatus, Relation, VarKind,
};
use serde::{Deserialize, Serialize};

use crate::model::{FunctionSpec, MappingSolution, NetworkState, NodeId, ServiceRequest, Time};
use crate::schedule::{schedule_assignment, RejectReason, Rejection, Scratch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// Completion of the last function minus the arrival time.
    FlowTime,
    /// Weighted flow time plus a load-balancing term on buffer use.
    MultiObjective,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpObjectiveConfig {
    pub mode: ObjectiveMode,
    pub alpha: f64,
    pub lambda: f64,
    /// Keeps the load-balancing denominator positive on a drained node.
    pub small_delta: f64,
}

impl Default for MilpObjectiveConfig {
    fn default() -> Self {
        Self {
            mode: ObjectiveMode::FlowTime,
            alpha: 1.0,
            lambda: 0.0,
            small_delta: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpConfig {
    pub objective: MilpObjectiveConfig,
    pub node_budget: usize,
    /// Upper limit on positions per node, on top of the structural limits.
    pub positions_cap: Option<usize>,
}

impl Default for MilpConfig {
    fn default() -> Self {
        Self {
            objective: MilpObjectiveConfig::default(),
            node_budget: 1_000_000,
            positions_cap: None,
        }
    }
}

/// Column indices of a built program.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpVariables {
    pub xi: BTreeMap<(usize, NodeId, usize), usize>,
    pub t: Vec<usize>,
    pub tau: BTreeMap<(NodeId, usize), usize>,
    pub positions_per_node: BTreeMap<NodeId, usize>,
    pub big_m: f64,
}

impl MilpVariables {
    /// Number of assignment columns.
    pub fn assignment_count(&self) -> usize {
        self.xi.len()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("the solution has no point (status {0:?})")]
    NoPoint(LpStatus),
    #[error("assignment column for function {function}, node {node}, position {position} is fractional ({value})")]
    Fractional {
        function: usize,
        node: NodeId,
        position: usize,
        value: f64,
    },
    #[error("function {0} is not assigned exactly once")]
    Unassigned(usize),
    #[error("decoded mapping does not schedule: {0}")]
    Unschedulable(Rejection),
}

pub fn build_milp(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &MilpConfig,
) -> (LinearProgram, MilpVariables) {
    build_program(
        net,
        &Scratch::new(net),
        req.functions(),
        req.arrival_time(),
        req.deadline(),
        cfg,
    )
}

/// Builds the program for `functions` arriving at `arrival`, against the
/// buffers and queue completions in `scratch`.
pub(crate) fn build_program(
    net: &NetworkState,
    scratch: &Scratch,
    functions: &[FunctionSpec],
    arrival: Time,
    deadline: Time,
    cfg: &MilpConfig,
) -> (LinearProgram, MilpVariables) {
    let nodes = net.nodes();
    let m = functions.len();
    let rho = |i: usize, j: usize| nodes[j].processing_time(functions[i].kind);

    // Fastest possible processing of each function anywhere.
    let fastest: Vec<Time> = (0..m)
        .map(|i| {
            (0..nodes.len())
                .filter_map(|j| rho(i, j))
                .min()
                .unwrap_or(0)
        })
        .collect();
    let before: Vec<Time> = (0..m)
        .map(|i| arrival + fastest[..i].iter().sum::<Time>())
        .collect();
    let after: Vec<Time> = (0..m).map(|i| fastest[i + 1..].iter().sum()).collect();

    let eligible = |i: usize, j: usize| match rho(i, j) {
        Some(r) => {
            functions[i].buffer_demand <= scratch.available[j]
                && scratch.ready[j].max(before[i]) + r + after[i] <= deadline
        }
        None => false,
    };

    // Positions per node and the rank of each eligible function on it.
    let mut rank: Vec<Vec<Option<usize>>> = vec![vec![None; nodes.len()]; m];
    let mut positions = vec![0usize; nodes.len()];
    for j in 0..nodes.len() {
        let mut demands = Vec::new();
        for (i, r) in rank.iter_mut().enumerate() {
            if eligible(i, j) {
                r[j] = Some(demands.len());
                demands.push(functions[i].buffer_demand);
            }
        }
        demands.sort_unstable();
        let mut used = 0;
        let fit = demands
            .iter()
            .take_while(|&&d| {
                used += d;
                used <= scratch.available[j]
            })
            .count();
        positions[j] = fit.min(cfg.positions_cap.unwrap_or(usize::MAX));
    }

    let max_rho: Time = (0..m)
        .map(|i| {
            (0..nodes.len())
                .filter_map(|j| rho(i, j))
                .max()
                .unwrap_or(0)
        })
        .sum();
    let max_ready = scratch.ready.iter().copied().max().unwrap_or(0);
    let big_m = (deadline + max_rho + max_ready) as f64;

    let mut lp = LinearProgram::new();
    let mut vars = MilpVariables {
        xi: BTreeMap::new(),
        t: Vec::with_capacity(m),
        tau: BTreeMap::new(),
        positions_per_node: BTreeMap::new(),
        big_m,
    };
    let add = |lp: &mut LinearProgram, name: String, upper: f64, kind: VarKind| {
        lp.add_variable(name, 0.0, upper, kind)
            .expect("valid bounds")
    };

    for (i, ranks) in rank.iter().enumerate() {
        for (j, node) in nodes.iter().enumerate() {
            let Some(r) = ranks[j] else { continue };
            for k in 0..positions[j].min(r + 1) {
                let col = add(
                    &mut lp,
                    format!("xi_{i}_{}_{k}", node.id().0),
                    1.0,
                    VarKind::Binary,
                );
                vars.xi.insert((i, node.id(), k), col);
            }
        }
    }
    for i in 0..m {
        vars.t
            .push(add(&mut lp, format!("t_{i}"), big_m, VarKind::Continuous));
    }
    for (j, node) in nodes.iter().enumerate() {
        if positions[j] == 0 {
            continue;
        }
        vars.positions_per_node.insert(node.id(), positions[j]);
        for k in 0..positions[j] {
            let col = add(
                &mut lp,
                format!("tau_{}_{k}", node.id().0),
                big_m,
                VarKind::Continuous,
            );
            vars.tau.insert((node.id(), k), col);
        }
    }

    // Per-function and per-position views of the assignment columns.
    let index_of: BTreeMap<NodeId, usize> =
        nodes.iter().enumerate().map(|(j, n)| (n.id(), j)).collect();
    let mut by_function: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); m];
    let mut by_slot: BTreeMap<(NodeId, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (&(i, id, k), &c) in &vars.xi {
        by_function[i].push((id, c));
        by_slot.entry((id, k)).or_default().push((i, c));
    }
    let of_function = |i: usize| by_function[i].iter().copied();
    let at_position = |id: NodeId, k: usize| by_slot.get(&(id, k)).into_iter().flatten().copied();
    let rho_at = |i: usize, id: NodeId| rho(i, index_of[&id]).expect("eligible pair") as f64;
    let ready_at = |id: NodeId| scratch.ready[index_of[&id]] as f64;

    let add_row = |lp: &mut LinearProgram, name: String, terms: Vec<(usize, f64)>, rel, rhs| {
        lp.add_constraint(name, terms, rel, rhs).expect("valid row");
    };

    for (&id, &kj) in &vars.positions_per_node {
        let terms = (0..kj)
            .flat_map(|k| at_position(id, k))
            .map(|(i, c)| (c, functions[i].buffer_demand as f64))
            .collect();
        let avail = scratch.available[index_of[&id]] as f64;
        add_row(
            &mut lp,
            format!("buffer_{}", id.0),
            terms,
            Relation::Le,
            avail,
        );
    }
    for i in 0..m {
        let mut by_node: BTreeMap<NodeId, Vec<(usize, f64)>> = BTreeMap::new();
        for (id, c) in of_function(i) {
            by_node.entry(id).or_default().push((c, 1.0));
        }
        for (id, terms) in by_node {
            add_row(
                &mut lp,
                format!("cap_{i}_{}", id.0),
                terms,
                Relation::Le,
                1.0,
            );
        }
    }
    for (&id, &kj) in &vars.positions_per_node {
        for k in 0..kj {
            let terms = at_position(id, k).map(|(_, c)| (c, 1.0)).collect();
            add_row(
                &mut lp,
                format!("slot_{}_{k}", id.0),
                terms,
                Relation::Le,
                1.0,
            );
        }
    }
    for i in 0..m {
        let terms = of_function(i).map(|(_, c)| (c, 1.0)).collect();
        add_row(&mut lp, format!("assign_{i}"), terms, Relation::Eq, 1.0);
    }
    for i in 1..m {
        let mut terms = vec![(vars.t[i], 1.0), (vars.t[i - 1], -1.0)];
        terms.extend(of_function(i).map(|(id, c)| (c, -rho_at(i, id))));
        add_row(&mut lp, format!("chain_{i}"), terms, Relation::Ge, 0.0);
    }
    for (&id, &kj) in &vars.positions_per_node {
        for k in 1..kj {
            let mut terms = vec![(vars.tau[&(id, k)], 1.0), (vars.tau[&(id, k - 1)], -1.0)];
            terms.extend(at_position(id, k).map(|(i, c)| (c, -rho_at(i, id))));
            add_row(
                &mut lp,
                format!("order_{}_{k}", id.0),
                terms,
                Relation::Ge,
                0.0,
            );
        }
    }
    {
        let mut terms = vec![(vars.t[0], 1.0)];
        terms.extend(of_function(0).map(|(id, c)| (c, -(rho_at(0, id) + arrival as f64))));
        add_row(&mut lp, "first_fn".into(), terms, Relation::Ge, 0.0);
    }
    for &id in vars.positions_per_node.keys() {
        let mut terms = vec![(vars.tau[&(id, 0)], 1.0)];
        terms.extend(at_position(id, 0).map(|(i, c)| (c, -(rho_at(i, id) + arrival as f64))));
        add_row(
            &mut lp,
            format!("first_pos_{}", id.0),
            terms,
            Relation::Ge,
            0.0,
        );
    }
    for i in 0..m {
        let mut terms = vec![(vars.t[i], 1.0)];
        terms.extend(of_function(i).map(|(id, c)| (c, -(rho_at(i, id) + ready_at(id)))));
        add_row(&mut lp, format!("queue_{i}"), terms, Relation::Ge, 0.0);
    }
    for (&id, &kj) in &vars.positions_per_node {
        for k in 0..kj {
            let mut terms = vec![(vars.tau[&(id, k)], 1.0)];
            terms.extend(at_position(id, k).map(|(i, c)| (c, -(rho_at(i, id) + ready_at(id)))));
            add_row(
                &mut lp,
                format!("queue_pos_{}_{k}", id.0),
                terms,
                Relation::Ge,
                0.0,
            );
        }
    }
    for (&(i, id, k), &c) in &vars.xi {
        let tau = vars.tau[&(id, k)];
        add_row(
            &mut lp,
            format!("link_lo_{i}_{}_{k}", id.0),
            vec![(tau, 1.0), (vars.t[i], -1.0), (c, big_m)],
            Relation::Le,
            big_m,
        );
    }
    for (&(i, id, k), &c) in &vars.xi {
        let tau = vars.tau[&(id, k)];
        add_row(
            &mut lp,
            format!("link_hi_{i}_{}_{k}", id.0),
            vec![(vars.t[i], 1.0), (tau, -1.0), (c, big_m)],
            Relation::Le,
            big_m,
        );
    }
    add_row(
        &mut lp,
        "deadline".into(),
        vec![(vars.t[m - 1], 1.0)],
        Relation::Le,
        deadline as f64,
    );

    let obj = &cfg.objective;
    let weight = match obj.mode {
        ObjectiveMode::FlowTime => 1.0,
        ObjectiveMode::MultiObjective => obj.alpha,
    };
    lp.set_objective(vars.t[m - 1], weight)
        .expect("column exists");
    lp.set_objective_offset(-weight * arrival as f64);
    if obj.mode == ObjectiveMode::MultiObjective && obj.lambda != 0.0 {
        for (&(i, id, _), &c) in &vars.xi {
            let avail = scratch.available[index_of[&id]] as f64;
            let coeff = obj.lambda * functions[i].buffer_demand as f64 / (obj.small_delta + avail);
            lp.set_objective(c, coeff).expect("column exists");
        }
    }

    (lp, vars)
}

/// Turns an integral solution into a schedule. Functions are appended to the
/// chosen queues as early as possible, which never finishes later than the
/// completion times in `sol`.
pub fn decode(
    sol: &LpSolution,
    vars: &MilpVariables,
    net: &NetworkState,
    req: &ServiceRequest,
) -> Result<MappingSolution, DecodeError> {
    if !sol.has_point() {
        return Err(DecodeError::NoPoint(sol.status));
    }
    let mut assignment: Vec<Option<usize>> = vec![None; req.len()];
    for (&(i, id, k), &c) in &vars.xi {
        let x = sol.values[c];
        let rounded = x.round();
        if (x - rounded).abs() > 1e-6 {
            return Err(DecodeError::Fractional {
                function: i,
                node: id,
                position: k,
                value: x,
            });
        }
        if rounded == 1.0 {
            if assignment[i].is_some() {
                return Err(DecodeError::Unassigned(i));
            }
            assignment[i] = net.node_index(id);
        }
    }
    let assignment: Vec<usize> = assignment
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or(DecodeError::Unassigned(i)))
        .collect::<Result<_, _>>()?;
    schedule_assignment(net, req, &assignment).map_err(DecodeError::Unschedulable)
}

/// What one exact solve produced beyond the mapping itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilpStats {
    pub nodes: usize,
    pub budget_exhausted: bool,
}

pub fn milp_map(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &MilpConfig,
) -> Result<MappingSolution, Rejection> {
    milp_map_with_stats(net, req, cfg).0
}

/// Builds, solves and decodes. An exhausted budget with an incumbent still
/// maps the request; without one it is rejected with `Budget`.
pub fn milp_map_with_stats(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &MilpConfig,
) -> (Result<MappingSolution, Rejection>, MilpStats) {
    let (lp, vars) = build_milp(net, req, cfg);
    let opts = BranchOptions {
        node_budget: cfg.node_budget,
        objective_step: (cfg.objective.mode == ObjectiveMode::FlowTime).then_some(1.0),
        ..Default::default()
    };
    let report = solve_milp_with(&lp, &opts);
    let stats = MilpStats {
        nodes: report.nodes,
        budget_exhausted: report.solution.status == LpStatus::IterationLimit,
    };
    let result = match report.solution.status {
        LpStatus::Infeasible => Err(Rejection::whole(RejectReason::Infeasible)),
        LpStatus::Unbounded => Err(Rejection::whole(RejectReason::Relaxation)),
        LpStatus::IterationLimit if !report.solution.has_point() => {
            Err(Rejection::whole(RejectReason::Budget))
        }
        _ => decode(&report.solution, &vars, net, req)
            .map_err(|_| Rejection::whole(RejectReason::Relaxation)),
    };
    (result, stats)
}
