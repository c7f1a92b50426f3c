//! Tabu search over node assignments, driven by the largest idle gap in the
//! current schedule.
//!
//! Every candidate schedule appends functions to the end of their node's
//! queue as early as possible, so a solution is fully described by its
//! assignment of functions to nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    FunctionPlacement, MappingSolution, NetworkState, NodeId, ServiceRequest, Time,
};
use crate::schedule::{schedule_assignment, RejectReason, Rejection, Scratch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuConfig {
    /// Hard cap on iterations. Zero returns the initial solution.
    pub max_iterations: usize,
    /// Consecutive non-improving iterations before stopping; `None` uses the
    /// chain length.
    pub stall_limit: Option<usize>,
    /// Pick the migrated function from the current solution every iteration.
    /// When false the function and its neighborhood are chosen once, from the
    /// initial solution, and reused.
    pub reselect_each_iteration: bool,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            stall_limit: None,
            reselect_each_iteration: true,
        }
    }
}

/// Forbids moving `function_index` back onto `forbidden_node` up to and
/// including iteration `expires_at_iteration`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuEntry {
    pub function_index: usize,
    pub forbidden_node: NodeId,
    pub created_at_iteration: usize,
    pub expires_at_iteration: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Stalled,
    NoNeighbors,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuTrace {
    pub initial_flow_time: Time,
    /// Best-known flow time after each iteration.
    pub best_flow_times: Vec<Time>,
    /// Every entry ever added, in creation order.
    pub entries: Vec<TabuEntry>,
    /// Size of the active tabu list at the end of each iteration.
    pub active_lengths: Vec<usize>,
    pub stop: StopReason,
}

/// Assigns every function to a uniformly drawn node among those that are
/// capable, have the buffer and meet the deadline, then schedules in order.
pub fn random_initial(
    net: &NetworkState,
    req: &ServiceRequest,
    seed: u64,
) -> Result<MappingSolution, Rejection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = Scratch::new(net);
    let mut prev = req.arrival_time();
    let mut placements = Vec::with_capacity(req.len());
    let mut candidates: Vec<(usize, Time)> = Vec::new();

    for (i, f) in req.functions().iter().enumerate() {
        candidates.clear();
        for (j, node) in net.nodes().iter().enumerate() {
            let Some(rho) = node.processing_time(f.kind) else {
                continue;
            };
            let completion = rho + scratch.ready[j].max(prev);
            if scratch.available[j] >= f.buffer_demand && completion <= req.deadline() {
                candidates.push((j, completion));
            }
        }
        if candidates.is_empty() {
            return Err(Rejection::at(i, RejectReason::NoCandidate));
        }
        let (j, completion) = candidates[rng.random_range(0..candidates.len())];
        let node = &net.nodes()[j];
        let rho = node.processing_time(f.kind).expect("capable");
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

/// Index of the function with the largest idle time before its start (the
/// arrival counts as the first predecessor). Ties go to the lowest index.
pub fn biggest_gap_function(sol: &MappingSolution, req: &ServiceRequest) -> usize {
    gap_order(sol, req)[0]
}

/// Function indices sorted by decreasing gap, then increasing index.
fn gap_order(sol: &MappingSolution, req: &ServiceRequest) -> Vec<usize> {
    let gaps = sol.gaps(req);
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| gaps[b].cmp(&gaps[a]).then(a.cmp(&b)));
    order
}

/// All solutions obtained by moving function `f` to another capable node and
/// rescheduling, keeping only the feasible ones. Ordered by node id.
pub fn neighborhood(
    net: &NetworkState,
    req: &ServiceRequest,
    sol: &MappingSolution,
    f: usize,
) -> Vec<MappingSolution> {
    moves(net, req, &indices(net, sol), f)
        .into_iter()
        .map(|(_, s)| s)
        .collect()
}

fn indices(net: &NetworkState, sol: &MappingSolution) -> Vec<usize> {
    sol.placements
        .iter()
        .map(|p| {
            net.node_index(p.node_id)
                .expect("placement on a known node")
        })
        .collect()
}

/// Feasible migrations of `f`, each tagged with the target node index.
fn moves(
    net: &NetworkState,
    req: &ServiceRequest,
    assignment: &[usize],
    f: usize,
) -> Vec<(usize, MappingSolution)> {
    let kind = req.functions()[f].kind;
    let mut out = Vec::new();
    let mut candidate = assignment.to_vec();
    for (j, node) in net.nodes().iter().enumerate() {
        if j == assignment[f] || !node.is_capable(kind) {
            continue;
        }
        candidate[f] = j;
        if let Ok(s) = schedule_assignment(net, req, &candidate) {
            out.push((j, s));
        }
    }
    out
}

/// Secondary key among equal flow times: prefer the move that finishes the
/// chain's functions earliest overall, so plateau moves make progress.
fn completion_sum(sol: &MappingSolution) -> Time {
    sol.placements.iter().map(|p| p.completion_time).sum()
}

pub fn tabu_search(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &TabuConfig,
    seed: u64,
) -> Result<MappingSolution, Rejection> {
    tabu_search_traced(net, req, cfg, seed).map(|(s, _)| s)
}

/// Runs the search and also reports the best-known flow time per iteration
/// and the tabu list history.
pub fn tabu_search_traced(
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &TabuConfig,
    seed: u64,
) -> Result<(MappingSolution, TabuTrace), Rejection> {
    let initial = random_initial(net, req, seed)?;
    let m = req.len();
    let tenure = m - 1;
    let stall_limit = cfg.stall_limit.unwrap_or(m);

    let mut current = initial.clone();
    let mut best = initial;
    let mut best_flow = best.flow_time(req);
    let mut trace = TabuTrace {
        initial_flow_time: best_flow,
        best_flow_times: Vec::new(),
        entries: Vec::new(),
        active_lengths: Vec::new(),
        stop: StopReason::IterationCap,
    };
    let mut active: Vec<TabuEntry> = Vec::new();
    let mut stall = 0;

    let mut fixed: Option<(usize, Vec<(usize, MappingSolution)>)> = None;
    if !cfg.reselect_each_iteration {
        let assignment = indices(net, &current);
        fixed = gap_order(&current, req)
            .into_iter()
            .map(|f| (f, moves(net, req, &assignment, f)))
            .find(|(_, n)| !n.is_empty());
    }

    for iteration in 0..cfg.max_iterations {
        let assignment = indices(net, &current);
        let is_listed = |f: usize, j: usize| {
            let id = net.nodes()[j].id();
            active
                .iter()
                .any(|e| e.function_index == f && e.forbidden_node == id)
        };
        let key = |(j, s): &&(usize, MappingSolution)| (s.flow_time(req), completion_sum(s), *j);

        // Walk functions by decreasing gap. A move is admissible only if it
        // beats the best known flow time, which also covers aspiration for
        // listed moves. The first function with an admissible move is
        // migrated; when there is none anywhere, the least tabu move of the
        // first function with any move is taken.
        let order: Vec<usize> = match (&fixed, cfg.reselect_each_iteration) {
            (_, true) => gap_order(&current, req),
            (Some((f, _)), false) => vec![*f],
            (None, false) => Vec::new(),
        };
        let mut step: Option<(usize, MappingSolution)> = None;
        let mut fallback: Option<(usize, Vec<(usize, MappingSolution)>)> = None;
        for f in order {
            let neighbors: Vec<(usize, MappingSolution)> = match &fixed {
                // A fixed neighbor equal to the current solution is not a move.
                Some((_, n)) if !cfg.reselect_each_iteration => n
                    .iter()
                    .filter(|(j, _)| *j != assignment[f])
                    .cloned()
                    .collect(),
                _ => moves(net, req, &assignment, f),
            };
            if let Some((_, s)) = neighbors
                .iter()
                .filter(|(_, s)| s.flow_time(req) < best_flow)
                .min_by_key(key)
            {
                step = Some((f, s.clone()));
                break;
            }
            if fallback.is_none() && !neighbors.is_empty() {
                fallback = Some((f, neighbors));
            }
        }
        let (f, chosen) = match (step, fallback) {
            (Some(x), _) => x,
            (None, Some((f, neighbors))) => {
                // Least tabu: off the list if possible, then lowest flow time.
                let (_, s) = neighbors
                    .iter()
                    .min_by_key(|m| (is_listed(f, m.0), key(m)))
                    .expect("non-empty neighborhood");
                (f, s.clone())
            }
            (None, None) => {
                trace.stop = StopReason::NoNeighbors;
                break;
            }
        };

        let from = net.nodes()[assignment[f]].id();
        current = chosen;
        let entry = TabuEntry {
            function_index: f,
            forbidden_node: from,
            created_at_iteration: iteration,
            expires_at_iteration: iteration + tenure,
        };
        trace.entries.push(entry);
        active.push(entry);

        let flow = current.flow_time(req);
        if flow < best_flow {
            best = current.clone();
            best_flow = flow;
            stall = 0;
        } else {
            stall += 1;
        }
        trace.best_flow_times.push(best_flow);
        // An entry forbids the move during the following `tenure` iterations.
        active.retain(|e| e.expires_at_iteration > iteration);
        trace.active_lengths.push(active.len());

        if stall >= stall_limit {
            trace.stop = StopReason::Stalled;
            break;
        }
    }
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FunctionKind, FunctionSpec, NodeState, ServiceId};

    fn request(kinds: &[u16]) -> ServiceRequest {
        let functions = kinds
            .iter()
            .map(|&k| FunctionSpec {
                kind: FunctionKind(k),
                buffer_demand: 10,
            })
            .collect();
        ServiceRequest::new(ServiceId(1), functions, 0, 10_000).unwrap()
    }

    fn solution_with_gaps(gaps: &[u64]) -> (MappingSolution, ServiceRequest) {
        let req = request(&vec![1; gaps.len()]);
        let mut t = 0;
        let placements = gaps
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let start = t + g;
                t = start + 5;
                FunctionPlacement {
                    function_index: i,
                    node_id: NodeId(0),
                    start_time: start,
                    completion_time: t,
                }
            })
            .collect();
        (
            MappingSolution {
                service_id: ServiceId(1),
                placements,
            },
            req,
        )
    }

    #[test]
    fn gap_selection() {
        let (s, r) = solution_with_gaps(&[0, 0, 0]);
        assert_eq!(biggest_gap_function(&s, &r), 0);
        let (s, r) = solution_with_gaps(&[0, 7, 3]);
        assert_eq!(biggest_gap_function(&s, &r), 1);
        let (s, r) = solution_with_gaps(&[5, 5]);
        assert_eq!(biggest_gap_function(&s, &r), 0);
    }

    fn net(nodes: &[&[(u16, u64)]]) -> NetworkState {
        NetworkState::new(
            nodes
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let times = t.iter().map(|&(k, r)| (FunctionKind(k), r)).collect();
                    NodeState::new(NodeId(j as u32), times, 100).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn neighborhood_sizes() {
        let n = net(&[&[(1, 10)], &[(1, 12), (2, 5)]]);
        let req = request(&[1, 2]);
        let sol = schedule_assignment(&n, &req, &[0, 1]).unwrap();
        assert_eq!(neighborhood(&n, &req, &sol, 0).len(), 1);
        assert!(neighborhood(&n, &req, &sol, 1).is_empty());
    }

    #[test]
    fn zero_iterations_returns_initial() {
        let n = net(&[&[(1, 10)], &[(1, 12)], &[(1, 30)]]);
        let req = request(&[1, 1, 1]);
        let cfg = TabuConfig {
            max_iterations: 0,
            ..Default::default()
        };
        for seed in 0..10 {
            let initial = random_initial(&n, &req, seed).unwrap();
            assert_eq!(tabu_search(&n, &req, &cfg, seed).unwrap(), initial);
        }
    }

    #[test]
    fn single_candidate_matches_schedule() {
        let n = net(&[&[(1, 10)], &[(2, 12)]]);
        let req = request(&[1, 2, 1]);
        let expected = schedule_assignment(&n, &req, &[0, 1, 0]).unwrap();
        assert_eq!(random_initial(&n, &req, 3).unwrap(), expected);
        let (best, trace) = tabu_search_traced(&n, &req, &TabuConfig::default(), 3).unwrap();
        assert_eq!(best, expected);
        assert_eq!(trace.stop, StopReason::NoNeighbors);
    }

    #[test]
    fn missing_capability_rejects() {
        let n = net(&[&[(1, 10)]]);
        let req = request(&[1, 2]);
        assert_eq!(
            random_initial(&n, &req, 0),
            Err(Rejection::at(1, RejectReason::NoCandidate))
        );
    }

    #[test]
    fn literal_mode_is_deterministic() {
        let n = net(&[&[(1, 10)], &[(1, 12)], &[(1, 30)]]);
        let req = request(&[1, 1, 1, 1]);
        let cfg = TabuConfig {
            reselect_each_iteration: false,
            ..Default::default()
        };
        let a = tabu_search_traced(&n, &req, &cfg, 9).unwrap();
        let b = tabu_search_traced(&n, &req, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.0.flow_time(&req) <= a.1.initial_flow_time);
    }
}
