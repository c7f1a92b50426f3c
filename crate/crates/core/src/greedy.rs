//! Sequential greedy mapping: each function goes to the best-ranked node
//! among those able to take it, in chain order.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{FunctionPlacement, MappingSolution, NetworkState, ServiceRequest};
use crate::schedule::{RejectReason, Rejection, Scratch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GreedyCriterion {
    /// Shortest processing time first.
    FastProcessing,
    /// Earliest queue completion first.
    BestAvailability,
    /// Most available buffer first.
    LeastLoaded,
}

impl FromStr for GreedyCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fp" | "fast-processing" => Ok(Self::FastProcessing),
            "ba" | "best-availability" => Ok(Self::BestAvailability),
            "ll" | "least-loaded" => Ok(Self::LeastLoaded),
            _ => Err(format!("unknown greedy criterion `{s}`")),
        }
    }
}

/// Maps `req` one function at a time. Candidates must be capable, have the
/// buffer left after the earlier functions of the same request, and finish
/// by the deadline when appended to their queue. Ties go to the lowest node id.
pub fn greedy_map(
    net: &NetworkState,
    req: &ServiceRequest,
    criterion: GreedyCriterion,
) -> Result<MappingSolution, Rejection> {
    let mut scratch = Scratch::new(net);
    let mut prev = req.arrival_time();
    let mut placements = Vec::with_capacity(req.len());

    for (i, f) in req.functions().iter().enumerate() {
        let mut best: Option<(u64, usize, u64)> = None;
        for (j, node) in net.nodes().iter().enumerate() {
            let Some(rho) = node.processing_time(f.kind) else {
                continue;
            };
            if scratch.available[j] < f.buffer_demand {
                continue;
            }
            let completion = rho + scratch.ready[j].max(prev);
            if completion > req.deadline() {
                continue;
            }
            let key = match criterion {
                GreedyCriterion::FastProcessing => rho,
                GreedyCriterion::BestAvailability => scratch.ready[j],
                GreedyCriterion::LeastLoaded => u64::MAX - scratch.available[j],
            };
            if best.is_none_or(|(k, _, _)| key < k) {
                best = Some((key, j, completion));
            }
        }
        let (_, j, completion) = best.ok_or(Rejection::at(i, RejectReason::NoCandidate))?;
        let node = &net.nodes()[j];
        let rho = node.processing_time(f.kind).expect("candidate is capable");
        placements.push(FunctionPlacement {
            function_index: i,
            node_id: node.id(),
            start_time: completion - rho,
            completion_time: completion,
        });
        scratch.place(j, f.buffer_demand, completion);
        prev = completion;
    }

    Ok(MappingSolution {
        service_id: req.id(),
        placements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FunctionKind, FunctionSpec, NodeId, NodeState, ServiceId};

    fn two_nodes(pi: [u64; 2]) -> NetworkState {
        let mut net = NetworkState::new(vec![
            NodeState::new(NodeId(1), [(FunctionKind(1), 15)].into(), 100).unwrap(),
            NodeState::new(NodeId(2), [(FunctionKind(1), 25)].into(), 100).unwrap(),
        ])
        .unwrap();
        // Occupy the queues up to the requested completion times.
        for (j, &p) in pi.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let node = NodeId(j as u32 + 1);
            let rho = net
                .node(node)
                .unwrap()
                .processing_time(FunctionKind(1))
                .unwrap();
            let req = single(100 + j as u64, 0, 1000);
            let sol = MappingSolution {
                service_id: req.id(),
                placements: vec![FunctionPlacement {
                    function_index: 0,
                    node_id: node,
                    start_time: p - rho,
                    completion_time: p,
                }],
            };
            net.commit(&req, &sol).unwrap();
        }
        net
    }

    fn single(id: u64, arrival: u64, deadline: u64) -> ServiceRequest {
        let f = FunctionSpec {
            kind: FunctionKind(1),
            buffer_demand: 20,
        };
        ServiceRequest::new(ServiceId(id), vec![f], arrival, deadline).unwrap()
    }

    #[test]
    fn single_capable_node() {
        let net = NetworkState::new(vec![NodeState::new(
            NodeId(0),
            [(FunctionKind(1), 15)].into(),
            100,
        )
        .unwrap()])
        .unwrap();
        let sol = greedy_map(&net, &single(1, 0, 100), GreedyCriterion::FastProcessing).unwrap();
        assert_eq!(sol.placements[0].start_time, 0);
        assert_eq!(sol.placements[0].completion_time, 15);
    }

    #[test]
    fn criteria_pick_different_nodes() {
        let idle = two_nodes([0, 0]);
        let req = single(1, 0, 1000);
        let fp = greedy_map(&idle, &req, GreedyCriterion::FastProcessing).unwrap();
        assert_eq!(fp.placements[0].node_id, NodeId(1));

        let busy = two_nodes([50, 0]);
        let ba = greedy_map(&busy, &req, GreedyCriterion::BestAvailability).unwrap();
        assert_eq!(ba.placements[0].node_id, NodeId(2));
        let ll = greedy_map(&busy, &req, GreedyCriterion::LeastLoaded).unwrap();
        assert_eq!(ll.placements[0].node_id, NodeId(2));
    }

    #[test]
    fn deadline_filters_candidates() {
        let net = two_nodes([0, 0]);
        let err = greedy_map(&net, &single(1, 0, 14), GreedyCriterion::FastProcessing).unwrap_err();
        assert_eq!(err, Rejection::at(0, RejectReason::NoCandidate));
    }

    #[test]
    fn parses_criterion_names() {
        assert_eq!("BA".parse(), Ok(GreedyCriterion::BestAvailability));
        assert!("xx".parse::<GreedyCriterion>().is_err());
    }
}
