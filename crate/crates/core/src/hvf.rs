//! Hard variable fixing: solve the relaxation of the exact program for the
//! functions not yet mapped, commit the leading function to the node its
//! relaxed assignment favours most, and repeat on the shorter chain.

use nfms_lp::{solve_lp, LpStatus};
use serde::{Deserialize, Serialize};

use crate::milp::{build_program, MilpConfig};
use crate::model::{FunctionPlacement, MappingSolution, NetworkState, NodeId, ServiceRequest};
use crate::schedule::{RejectReason, Rejection, Scratch};

/// Relaxed values at or below this are treated as zero.
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HvfTrace {
    /// Assignment columns in the program solved at each round.
    pub assignment_columns: Vec<usize>,
}

pub fn hvf_map(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &MilpConfig,
) -> Result<MappingSolution, Rejection> {
    hvf_map_traced(net, req, cfg).0
}

/// Each round ranks the nodes carrying relaxed weight for the leading
/// function by `xi / max(pi_j, 1)`, taking the largest `xi` over positions,
/// among nodes that have the buffer and meet the deadline. Ties go to the
/// lowest node id.
pub fn hvf_map_traced(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &MilpConfig,
) -> (Result<MappingSolution, Rejection>, HvfTrace) {
    let mut trace = HvfTrace::default();
    let mut scratch = Scratch::new(net);
    let mut prev = req.arrival_time();
    let mut placements = Vec::with_capacity(req.len());
    let functions = req.functions();

    for i in 0..functions.len() {
        let (lp, vars) = build_program(net, &scratch, &functions[i..], prev, req.deadline(), cfg);
        trace.assignment_columns.push(vars.assignment_count());
        let relaxed = solve_lp(&lp);
        match relaxed.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return (Err(Rejection::at(i, RejectReason::Infeasible)), trace)
            }
            _ => return (Err(Rejection::at(i, RejectReason::Relaxation)), trace),
        }

        // Largest relaxed value per node for the leading function, which is
        // function 0 of the reduced chain. Columns are ordered by (function,
        // node, position).
        let mut weights: Vec<(NodeId, f64)> = Vec::new();
        for (&(_, id, _), &col) in vars.xi.range((0, NodeId(0), 0)..(1, NodeId(0), 0)) {
            let x = relaxed.values[col];
            match weights.last_mut() {
                Some((last, w)) if *last == id => *w = w.max(x),
                _ => weights.push((id, x)),
            }
        }

        let f = &functions[i];
        let mut best: Option<(f64, NodeId)> = None;
        for (id, weight) in weights {
            if weight <= SUPPORT_TOL {
                continue;
            }
            let j = net.node_index(id).expect("known node");
            let Some(rho) = net.nodes()[j].processing_time(f.kind) else {
                continue;
            };
            if scratch.available[j] < f.buffer_demand
                || scratch.ready[j].max(prev) + rho > req.deadline()
            {
                continue;
            }
            let score = weight / scratch.ready[j].max(1) as f64;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, id));
            }
        }

        let Some((_, id)) = best else {
            return (Err(Rejection::at(i, RejectReason::NoCandidate)), trace);
        };
        let j = net.node_index(id).expect("known node");
        let rho = net.nodes()[j].processing_time(f.kind).expect("eligible");
        let start = scratch.ready[j].max(prev);
        let completion = start + rho;
        scratch.place(j, f.buffer_demand, completion);
        placements.push(FunctionPlacement {
            function_index: i,
            node_id: id,
            start_time: start,
            completion_time: completion,
        });
        prev = completion;
    }

    let sol = MappingSolution {
        service_id: req.id(),
        placements,
    };
    (Ok(sol), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::milp_map;
    use crate::model::{FunctionKind, FunctionSpec, NodeState, ServiceId};

    #[test]
    fn single_function_single_node_matches_exact() {
        let net = NetworkState::new(vec![NodeState::new(
            NodeId(4),
            [(FunctionKind(2), 17)].into(),
            80,
        )
        .unwrap()])
        .unwrap();
        let f = FunctionSpec {
            kind: FunctionKind(2),
            buffer_demand: 25,
        };
        let req = ServiceRequest::new(ServiceId(1), vec![f], 3, 100).unwrap();
        let cfg = MilpConfig::default();
        assert_eq!(hvf_map(&net, &req, &cfg), milp_map(&net, &req, &cfg));
    }

    #[test]
    fn assignment_columns_shrink_every_round() {
        let nodes = (0..3)
            .map(|j| {
                let times = (1..=3)
                    .map(|k| (FunctionKind(k), 10 + u64::from(k) * (j + 1)))
                    .collect();
                NodeState::new(NodeId(j as u32), times, 100).unwrap()
            })
            .collect();
        let net = NetworkState::new(nodes).unwrap();
        let functions = [1, 2, 3]
            .iter()
            .map(|&k| FunctionSpec {
                kind: FunctionKind(k),
                buffer_demand: 20,
            })
            .collect();
        let req = ServiceRequest::new(ServiceId(1), functions, 0, 1000).unwrap();
        let (sol, trace) = hvf_map_traced(&net, &req, &MilpConfig::default());
        let sol = sol.unwrap();
        assert!(net.check_feasibility(&req, &sol).is_ok());
        assert_eq!(trace.assignment_columns.len(), 3);
        assert!(trace.assignment_columns.windows(2).all(|w| w[1] < w[0]));
    }
}
