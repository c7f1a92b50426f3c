//! Brute-force optimum of a single request by trying every assignment of
//! functions to nodes.

use nfms_core::{NetworkState, NodeId, ServiceRequest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest number of assignments (`nodes ^ functions`) to try.
    pub max_assignments: u64,
    /// Most functions of the request a single node may take.
    pub per_node_cap: Option<usize>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_assignments: 1 << 20,
            per_node_cap: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TooLarge {
    pub assignments: u64,
    pub budget: u64,
}

impl std::fmt::Display for TooLarge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} assignments exceed the enumeration budget of {}",
            self.assignments, self.budget
        )
    }
}

impl std::error::Error for TooLarge {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    pub nodes: Vec<NodeId>,
    pub flow_time: u64,
    /// Number of assignments that satisfied every constraint.
    pub feasible: u64,
}

/// Lowest flow time over all assignments, with each function appended to
/// its node's queue as soon as both the node and its predecessor are done.
/// `None` when no assignment is feasible.
pub fn optimum(
    net: &NetworkState,
    req: &ServiceRequest,
    limits: &OracleLimits,
) -> Result<Option<Optimum>, TooLarge> {
    let n = net.nodes().len() as u64;
    let m = req.functions().len() as u32;
    let assignments = n.checked_pow(m).unwrap_or(u64::MAX);
    if assignments > limits.max_assignments {
        return Err(TooLarge {
            assignments,
            budget: limits.max_assignments,
        });
    }
    let mut best: Option<Optimum> = None;
    let mut feasible = 0;
    let mut digits = vec![0usize; m as usize];
    for _ in 0..assignments {
        if let Some(flow) = evaluate(net, req, &digits, limits.per_node_cap) {
            feasible += 1;
            if best.as_ref().is_none_or(|b| flow < b.flow_time) {
                best = Some(Optimum {
                    nodes: digits.iter().map(|&j| net.nodes()[j].id()).collect(),
                    flow_time: flow,
                    feasible: 0,
                });
            }
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < n as usize {
                break;
            }
            *d = 0;
        }
    }
    Ok(best.map(|b| Optimum { feasible, ..b }))
}

/// Flow time of one assignment, or `None` if it breaks a constraint.
pub fn evaluate(
    net: &NetworkState,
    req: &ServiceRequest,
    nodes: &[usize],
    per_node_cap: Option<usize>,
) -> Option<u64> {
    let count = net.nodes().len();
    let mut buffer: Vec<u64> = net.nodes().iter().map(|x| x.available_buffer()).collect();
    let mut free_at: Vec<u64> = net
        .nodes()
        .iter()
        .map(|x| x.queue_completion_time())
        .collect();
    let mut used = vec![0usize; count];
    let mut done = req.arrival_time();
    for (f, &j) in req.functions().iter().zip(nodes) {
        let node = &net.nodes()[j];
        let rho = *node.processing_times().get(&f.kind)?;
        if buffer[j] < f.buffer_demand {
            return None;
        }
        buffer[j] -= f.buffer_demand;
        used[j] += 1;
        if per_node_cap.is_some_and(|cap| used[j] > cap) {
            return None;
        }
        let begin = if free_at[j] > done { free_at[j] } else { done };
        done = begin + rho;
        free_at[j] = done;
    }
    if done > req.deadline() {
        return None;
    }
    Some(done - req.arrival_time())
}
