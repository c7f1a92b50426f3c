//! Requests, nodes, placements and the network state they are committed to.
//!
//! Times and buffer quantities are non-negative integers. Function positions
//! inside a chain are 0-based throughout the crate.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub type Time = u64;
pub type Buffer = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionKind(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub u64);

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("a service needs at least one function")]
    EmptyChain,
    #[error("function {0} has a zero buffer demand")]
    ZeroBufferDemand(usize),
    #[error("deadline {deadline} precedes arrival {arrival}")]
    DeadlineBeforeArrival { arrival: Time, deadline: Time },
    #[error("node {node} has a zero processing time for {kind}")]
    ZeroProcessingTime { node: NodeId, kind: FunctionKind },
    #[error("node {node} has available buffer {available} above its capacity {capacity}")]
    BufferAboveCapacity {
        node: NodeId,
        available: Buffer,
        capacity: Buffer,
    },
    #[error("node id {0} appears more than once")]
    DuplicateNode(NodeId),
    #[error("node {node} cannot process {kind}")]
    Incapable { node: NodeId, kind: FunctionKind },
    #[error("no service {0} is held by the network")]
    UnknownService(ServiceId),
    #[error("service {0} is already committed")]
    DuplicateService(ServiceId),
    #[error("the clock cannot move back from {now} to {requested}")]
    ClockReversal { now: Time, requested: Time },
    #[error("node {0} has an inconsistent queue")]
    InconsistentQueue(NodeId),
    #[error("solution rejected by the feasibility check: {0:?}")]
    Infeasible(Vec<Violation>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub buffer_demand: Buffer,
}

/// An ordered chain of functions that must run one after the other.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RequestRepr")]
pub struct ServiceRequest {
    id: ServiceId,
    functions: Vec<FunctionSpec>,
    arrival_time: Time,
    deadline: Time,
}

#[derive(Deserialize)]
struct RequestRepr {
    id: ServiceId,
    functions: Vec<FunctionSpec>,
    arrival_time: Time,
    deadline: Time,
}

impl TryFrom<RequestRepr> for ServiceRequest {
    type Error = ModelError;

    fn try_from(r: RequestRepr) -> Result<Self, ModelError> {
        Self::new(r.id, r.functions, r.arrival_time, r.deadline)
    }
}

impl ServiceRequest {
    pub fn new(
        id: ServiceId,
        functions: Vec<FunctionSpec>,
        arrival_time: Time,
        deadline: Time,
    ) -> Result<Self, ModelError> {
        if functions.is_empty() {
            return Err(ModelError::EmptyChain);
        }
        if let Some(i) = functions.iter().position(|f| f.buffer_demand == 0) {
            return Err(ModelError::ZeroBufferDemand(i));
        }
        if deadline < arrival_time {
            return Err(ModelError::DeadlineBeforeArrival {
                arrival: arrival_time,
                deadline,
            });
        }
        Ok(Self {
            id,
            functions,
            arrival_time,
            deadline,
        })
    }

    pub fn id(&self) -> ServiceId {
        self.id
    }

    pub fn functions(&self) -> &[FunctionSpec] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    /// Always false; a request holds at least one function.
    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn arrival_time(&self) -> Time {
        self.arrival_time
    }

    pub fn deadline(&self) -> Time {
        self.deadline
    }

    pub fn total_buffer_demand(&self) -> Buffer {
        self.functions.iter().map(|f| f.buffer_demand).sum()
    }
}

/// A function of some service occupying a node's queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub service: ServiceId,
    pub function_index: usize,
    pub start: Time,
    pub completion: Time,
    pub buffer_demand: Buffer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NodeRepr")]
pub struct NodeState {
    id: NodeId,
    processing_times: BTreeMap<FunctionKind, Time>,
    buffer_capacity: Buffer,
    available_buffer: Buffer,
    queue_completion_time: Time,
    queue: VecDeque<QueueEntry>,
}

#[derive(Deserialize)]
struct NodeRepr {
    id: NodeId,
    processing_times: BTreeMap<FunctionKind, Time>,
    buffer_capacity: Buffer,
    #[serde(default)]
    available_buffer: Option<Buffer>,
    #[serde(default)]
    queue_completion_time: Time,
    #[serde(default)]
    queue: VecDeque<QueueEntry>,
}

impl TryFrom<NodeRepr> for NodeState {
    type Error = ModelError;

    fn try_from(r: NodeRepr) -> Result<Self, ModelError> {
        let mut node = Self::new(r.id, r.processing_times, r.buffer_capacity)?;
        let available = r.available_buffer.unwrap_or(r.buffer_capacity);
        if available > r.buffer_capacity {
            return Err(ModelError::BufferAboveCapacity {
                node: r.id,
                available,
                capacity: r.buffer_capacity,
            });
        }
        node.available_buffer = available;
        node.queue = r.queue;
        node.queue_completion_time = r.queue_completion_time;
        node.check_queue()?;
        Ok(node)
    }
}

impl NodeState {
    /// An idle node with a full buffer. The capability set is the key set of
    /// `processing_times`.
    pub fn new(
        id: NodeId,
        processing_times: BTreeMap<FunctionKind, Time>,
        buffer_capacity: Buffer,
    ) -> Result<Self, ModelError> {
        if let Some((&kind, _)) = processing_times.iter().find(|(_, &rho)| rho == 0) {
            return Err(ModelError::ZeroProcessingTime { node: id, kind });
        }
        Ok(Self {
            id,
            processing_times,
            buffer_capacity,
            available_buffer: buffer_capacity,
            queue_completion_time: 0,
            queue: VecDeque::new(),
        })
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn processing_times(&self) -> &BTreeMap<FunctionKind, Time> {
        &self.processing_times
    }

    pub fn processing_time(&self, kind: FunctionKind) -> Option<Time> {
        self.processing_times.get(&kind).copied()
    }

    pub fn capabilities(&self) -> impl Iterator<Item = FunctionKind> + '_ {
        self.processing_times.keys().copied()
    }

    pub fn is_capable(&self, kind: FunctionKind) -> bool {
        self.processing_times.contains_key(&kind)
    }

    pub fn buffer_capacity(&self) -> Buffer {
        self.buffer_capacity
    }

    pub fn available_buffer(&self) -> Buffer {
        self.available_buffer
    }

    /// Completion of the last queued function, or the current time when the
    /// queue is empty.
    pub fn queue_completion_time(&self) -> Time {
        self.queue_completion_time
    }

    pub fn queue(&self) -> &VecDeque<QueueEntry> {
        &self.queue
    }

    /// Validates the loaded queue: sorted, disjoint, buffer accounted for and
    /// the completion time at least the last entry's.
    fn check_queue(&self) -> Result<(), ModelError> {
        let sorted = self
            .queue
            .iter()
            .zip(self.queue.iter().skip(1))
            .all(|(a, b)| a.completion <= b.start);
        let well_formed = self.queue.iter().all(|e| e.start < e.completion);
        let held: Buffer = self.queue.iter().map(|e| e.buffer_demand).sum();
        let last = self.queue.back().map_or(0, |e| e.completion);
        if !sorted
            || !well_formed
            || held != self.buffer_capacity - self.available_buffer
            || self.queue_completion_time < last
        {
            return Err(ModelError::InconsistentQueue(self.id));
        }
        Ok(())
    }

    fn refresh_completion_time(&mut self, now: Time) {
        self.queue_completion_time = self.queue.back().map_or(now, |e| e.completion.max(now));
    }
}

/// The start and completion of function `function_index` on `node_id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionPlacement {
    pub function_index: usize,
    pub node_id: NodeId,
    pub start_time: Time,
    pub completion_time: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSolution {
    pub service_id: ServiceId,
    pub placements: Vec<FunctionPlacement>,
}

impl MappingSolution {
    /// Completion time of the last function.
    pub fn completion(&self) -> Time {
        self.placements.last().map_or(0, |p| p.completion_time)
    }

    pub fn flow_time(&self, req: &ServiceRequest) -> Time {
        self.completion().saturating_sub(req.arrival_time())
    }

    /// Idle time before each function: its start minus the predecessor's
    /// completion, the arrival standing in for the first predecessor.
    pub fn gaps(&self, req: &ServiceRequest) -> Vec<Time> {
        let mut prev = req.arrival_time();
        self.placements
            .iter()
            .map(|p| {
                let gap = p.start_time.saturating_sub(prev);
                prev = p.completion_time;
                gap
            })
            .collect()
    }

    pub fn assignment(&self) -> Vec<NodeId> {
        self.placements.iter().map(|p| p.node_id).collect()
    }
}

/// One reason a solution cannot be committed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    WrongService {
        expected: ServiceId,
        found: ServiceId,
    },
    PlacementCount {
        expected: usize,
        found: usize,
    },
    OutOfOrder {
        position: usize,
        function_index: usize,
    },
    UnknownNode {
        function_index: usize,
        node: NodeId,
    },
    Incapable {
        function_index: usize,
        node: NodeId,
    },
    Duration {
        function_index: usize,
        expected: Time,
        found: Time,
    },
    Buffer {
        node: NodeId,
        demand: Buffer,
        available: Buffer,
    },
    StartsBeforeArrival {
        start: Time,
        arrival: Time,
    },
    Precedence {
        function_index: usize,
        start: Time,
        predecessor_done: Time,
    },
    OverlapsQueue {
        function_index: usize,
        node: NodeId,
        service: ServiceId,
    },
    OverlapsPlacement {
        node: NodeId,
        first: usize,
        second: usize,
    },
    Deadline {
        completion: Time,
        deadline: Time,
    },
}

/// Every node of the network plus the simulation clock.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr")]
pub struct NetworkState {
    nodes: Vec<NodeState>,
    now: Time,
}

#[derive(Deserialize)]
struct NetworkRepr {
    nodes: Vec<NodeState>,
    #[serde(default)]
    now: Time,
}

impl TryFrom<NetworkRepr> for NetworkState {
    type Error = ModelError;

    fn try_from(r: NetworkRepr) -> Result<Self, ModelError> {
        let mut net = Self::new(r.nodes)?;
        net.now = r.now;
        for node in &mut net.nodes {
            node.queue_completion_time = node.queue_completion_time.max(r.now);
        }
        Ok(net)
    }
}

impl NetworkState {
    /// Nodes are stored sorted by id.
    pub fn new(mut nodes: Vec<NodeState>) -> Result<Self, ModelError> {
        nodes.sort_by_key(|n| n.id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ModelError::DuplicateNode(w[0].id));
        }
        Ok(Self { nodes, now: 0 })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    /// Checks every constraint a committed solution must satisfy and returns
    /// all violations found.
    pub fn check_feasibility(
        &self,
        req: &ServiceRequest,
        sol: &MappingSolution,
    ) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if sol.service_id != req.id {
            out.push(Violation::WrongService {
                expected: req.id,
                found: sol.service_id,
            });
        }
        if sol.placements.len() != req.len() {
            out.push(Violation::PlacementCount {
                expected: req.len(),
                found: sol.placements.len(),
            });
            return Err(out);
        }

        let mut demand: BTreeMap<NodeId, Buffer> = BTreeMap::new();
        let mut predecessor_done = req.arrival_time;
        for (pos, (p, f)) in sol.placements.iter().zip(&req.functions).enumerate() {
            let i = p.function_index;
            if i != pos {
                out.push(Violation::OutOfOrder {
                    position: pos,
                    function_index: i,
                });
            }
            if pos == 0 {
                if p.start_time < predecessor_done {
                    out.push(Violation::StartsBeforeArrival {
                        start: p.start_time,
                        arrival: predecessor_done,
                    });
                }
            } else if p.start_time < predecessor_done {
                out.push(Violation::Precedence {
                    function_index: i,
                    start: p.start_time,
                    predecessor_done,
                });
            }
            predecessor_done = p.completion_time;

            let Some(node) = self.node(p.node_id) else {
                out.push(Violation::UnknownNode {
                    function_index: i,
                    node: p.node_id,
                });
                continue;
            };
            match node.processing_time(f.kind) {
                None => out.push(Violation::Incapable {
                    function_index: i,
                    node: p.node_id,
                }),
                Some(rho) => {
                    let found = p.completion_time.checked_sub(p.start_time);
                    if found != Some(rho) {
                        out.push(Violation::Duration {
                            function_index: i,
                            expected: rho,
                            found: found.unwrap_or(0),
                        });
                    }
                }
            }
            *demand.entry(p.node_id).or_default() += f.buffer_demand;
            if let Some(e) = node
                .queue
                .iter()
                .find(|e| p.start_time < e.completion && e.start < p.completion_time)
            {
                out.push(Violation::OverlapsQueue {
                    function_index: i,
                    node: p.node_id,
                    service: e.service,
                });
            }
        }

        for (&id, &d) in &demand {
            if let Some(node) = self.node(id) {
                if d > node.available_buffer {
                    out.push(Violation::Buffer {
                        node: id,
                        demand: d,
                        available: node.available_buffer,
                    });
                }
            }
        }

        for (a, pa) in sol.placements.iter().enumerate() {
            for (b, pb) in sol.placements.iter().enumerate().skip(a + 1) {
                if pa.node_id == pb.node_id
                    && pa.start_time < pb.completion_time
                    && pb.start_time < pa.completion_time
                {
                    out.push(Violation::OverlapsPlacement {
                        node: pa.node_id,
                        first: a,
                        second: b,
                    });
                }
            }
        }

        if sol.completion() > req.deadline {
            out.push(Violation::Deadline {
                completion: sol.completion(),
                deadline: req.deadline,
            });
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Queues every placement and reserves its buffer. The state is left
    /// untouched when the solution is infeasible or the service is already held.
    pub fn commit(
        &mut self,
        req: &ServiceRequest,
        sol: &MappingSolution,
    ) -> Result<(), ModelError> {
        self.check_feasibility(req, sol)
            .map_err(ModelError::Infeasible)?;
        if self.holds(req.id) {
            return Err(ModelError::DuplicateService(req.id));
        }
        let now = self.now;
        for (p, f) in sol.placements.iter().zip(&req.functions) {
            let idx = self.node_index(p.node_id).expect("checked above");
            let node = &mut self.nodes[idx];
            let entry = QueueEntry {
                service: req.id,
                function_index: p.function_index,
                start: p.start_time,
                completion: p.completion_time,
                buffer_demand: f.buffer_demand,
            };
            let at = node.queue.partition_point(|e| e.start < entry.start);
            node.queue.insert(at, entry);
            node.available_buffer -= f.buffer_demand;
            node.refresh_completion_time(now);
        }
        Ok(())
    }

    /// Whether any queue still holds a function of `service`.
    pub fn holds(&self, service: ServiceId) -> bool {
        self.nodes
            .iter()
            .any(|n| n.queue.iter().any(|e| e.service == service))
    }

    /// Drops every queued function of `service` and returns its buffer.
    pub fn release(&mut self, service: ServiceId) -> Result<(), ModelError> {
        if !self.holds(service) {
            return Err(ModelError::UnknownService(service));
        }
        let now = self.now;
        for node in &mut self.nodes {
            let before = node.queue.len();
            let mut freed = 0;
            node.queue.retain(|e| {
                let keep = e.service != service;
                if !keep {
                    freed += e.buffer_demand;
                }
                keep
            });
            if node.queue.len() != before {
                node.available_buffer += freed;
                node.refresh_completion_time(now);
            }
        }
        Ok(())
    }

    /// Moves the clock to `now` and retires every queued function that has
    /// completed by then, returning how many were retired.
    pub fn advance_to(&mut self, now: Time) -> Result<usize, ModelError> {
        if now < self.now {
            return Err(ModelError::ClockReversal {
                now: self.now,
                requested: now,
            });
        }
        self.now = now;
        let mut retired = 0;
        for node in &mut self.nodes {
            while node.queue.front().is_some_and(|e| e.completion <= now) {
                let e = node.queue.pop_front().expect("front exists");
                node.available_buffer += e.buffer_demand;
                retired += 1;
            }
            node.refresh_completion_time(now);
        }
        Ok(retired)
    }

    /// Total buffer reserved across all nodes.
    pub fn held_buffer(&self) -> Buffer {
        self.nodes
            .iter()
            .map(|n| n.buffer_capacity - n.available_buffer)
            .sum()
    }

    /// Re-derives each node's bookkeeping from its queue and reports the
    /// nodes where they disagree.
    pub fn audit(&self) -> Result<(), Vec<NodeId>> {
        let bad: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| {
                n.available_buffer > n.buffer_capacity
                    || n.check_queue().is_err()
                    || n.queue_completion_time
                        != n.queue
                            .back()
                            .map_or(self.now, |e| e.completion.max(self.now))
            })
            .map(|n| n.id)
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }
}

/// `ρ + max(π_j, predecessor_done)`: when a function would finish if appended
/// to the node's queue.
pub fn earliest_completion(
    node: &NodeState,
    func: &FunctionSpec,
    predecessor_done: Time,
) -> Result<Time, ModelError> {
    let rho = node
        .processing_time(func.kind)
        .ok_or(ModelError::Incapable {
            node: node.id,
            kind: func.kind,
        })?;
    Ok(rho + node.queue_completion_time.max(predecessor_done))
}
