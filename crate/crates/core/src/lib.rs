//! Online mapping and scheduling of service-chain functions onto virtual
//! network nodes.
//!
//! A [`ServiceRequest`](model::ServiceRequest) is an ordered chain of
//! functions. Each solver maps every function to a capable node and appends
//! it to that node's queue, or rejects the request. Solvers never mutate the
//! [`NetworkState`](model::NetworkState) they are given; the caller commits
//! accepted mappings.
//!
//! Solvers: three greedy rankings ([`greedy`]), tabu search ([`tabu`]), an
//! exact 0/1 program ([`milp`]) and relaxation-guided fixing ([`hvf`]).

pub mod greedy;
pub mod hvf;
pub mod metrics;
pub mod milp;
pub mod model;
pub mod scenario;
pub mod schedule;
pub mod sim;
pub mod solver;
pub mod tabu;

pub use model::{
    earliest_completion, FunctionKind, FunctionPlacement, FunctionSpec, MappingSolution,
    ModelError, NetworkState, NodeId, NodeState, ServiceId, ServiceRequest, Time, Violation,
};
pub use schedule::{RejectReason, Rejection};
pub use solver::{solve, SolverConfig, SolverKind};
