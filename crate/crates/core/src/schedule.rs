//! Scratch bookkeeping used while a solver builds a mapping, and the common
//! rejection type every solver returns.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    Buffer, FunctionPlacement, MappingSolution, NetworkState, ServiceRequest, Time,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// No node is capable, has the buffer and meets the deadline.
    NoCandidate,
    /// The exact program has no feasible point.
    Infeasible,
    /// The branch-and-bound node budget ran out before any incumbent.
    Budget,
    /// A relaxation ended without an optimal point.
    Relaxation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// First function that could not be mapped, when one can be singled out.
    pub function_index: Option<usize>,
    pub reason: RejectReason,
}

impl Rejection {
    pub fn at(function_index: usize, reason: RejectReason) -> Self {
        Self {
            function_index: Some(function_index),
            reason,
        }
    }

    pub fn whole(reason: RejectReason) -> Self {
        Self {
            function_index: None,
            reason,
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reason = match self.reason {
            RejectReason::NoCandidate => "no candidate node",
            RejectReason::Infeasible => "infeasible",
            RejectReason::Budget => "node budget exhausted",
            RejectReason::Relaxation => "relaxation failed",
        };
        match self.function_index {
            Some(i) => write!(f, "{reason} at function {i}"),
            None => f.write_str(reason),
        }
    }
}

impl std::error::Error for Rejection {}

/// Per-node buffer and queue-completion values, indexed like
/// `NetworkState::nodes`, that a solver updates as it places functions.
#[derive(Clone, Debug)]
pub struct Scratch {
    pub available: Vec<Buffer>,
    pub ready: Vec<Time>,
}

impl Scratch {
    pub fn new(net: &NetworkState) -> Self {
        Self {
            available: net.nodes().iter().map(|n| n.available_buffer()).collect(),
            ready: net
                .nodes()
                .iter()
                .map(|n| n.queue_completion_time())
                .collect(),
        }
    }

    pub fn place(&mut self, node: usize, demand: Buffer, completion: Time) {
        self.available[node] -= demand;
        self.ready[node] = completion;
    }
}

/// Appends each function to the queue of `assignment[i]` (a node index) as
/// early as possible and returns the schedule.
pub fn schedule_assignment(
    net: &NetworkState,
    req: &ServiceRequest,
    assignment: &[usize],
) -> Result<MappingSolution, Rejection> {
    let mut scratch = Scratch::new(net);
    let mut prev = req.arrival_time();
    let mut placements = Vec::with_capacity(req.len());
    for (i, (f, &j)) in req.functions().iter().zip(assignment).enumerate() {
        let node = &net.nodes()[j];
        let rho = node
            .processing_time(f.kind)
            .ok_or(Rejection::at(i, RejectReason::NoCandidate))?;
        if scratch.available[j] < f.buffer_demand {
            return Err(Rejection::at(i, RejectReason::NoCandidate));
        }
        let start = scratch.ready[j].max(prev);
        let completion = start + rho;
        if completion > req.deadline() {
            return Err(Rejection::at(i, RejectReason::NoCandidate));
        }
        scratch.place(j, f.buffer_demand, completion);
        placements.push(FunctionPlacement {
            function_index: i,
            node_id: node.id(),
            start_time: start,
            completion_time: completion,
        });
        prev = completion;
    }
    Ok(MappingSolution {
        service_id: req.id(),
        placements,
    })
}
