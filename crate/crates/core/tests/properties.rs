//! Structural properties of the solvers and the network state.

use nfms_core::greedy::{greedy_map, GreedyCriterion};
use nfms_core::milp::{milp_map, MilpConfig};
use nfms_core::schedule::schedule_assignment;
use nfms_core::tabu::{neighborhood, random_initial, tabu_search_traced, TabuConfig};
use nfms_core::{
    earliest_completion, solve, FunctionKind, FunctionSpec, NetworkState, NodeId, NodeState,
    ServiceId, ServiceRequest, SolverConfig, SolverKind,
};
use nfms_oracle::instances::small_instance;
use nfms_oracle::nfms::evaluate;
use proptest::prelude::*;

fn node(id: u32, times: &[(u16, u64)], capacity: u64) -> NodeState {
    let times = times.iter().map(|&(k, t)| (FunctionKind(k), t)).collect();
    NodeState::new(NodeId(id), times, capacity).unwrap()
}

fn spec(kind: u16, demand: u64) -> FunctionSpec {
    FunctionSpec {
        kind: FunctionKind(kind),
        buffer_demand: demand,
    }
}

/// Node 0 is fast at everything but can hold only one of the first two
/// functions. Every greedy ranking puts the first function there and then
/// finds no room for the second, which only node 0 can run.
#[test]
fn exact_solver_accepts_what_greedy_rejects() {
    let net =
        NetworkState::new(vec![node(0, &[(1, 1), (2, 1)], 20), node(1, &[(1, 5)], 20)]).unwrap();
    let req = ServiceRequest::new(
        ServiceId(0),
        vec![spec(1, 10), spec(2, 15), spec(1, 5)],
        0,
        10,
    )
    .unwrap();
    for c in [
        GreedyCriterion::FastProcessing,
        GreedyCriterion::BestAvailability,
        GreedyCriterion::LeastLoaded,
    ] {
        assert!(greedy_map(&net, &req, c).is_err(), "{c:?}");
    }
    let sol = milp_map(&net, &req, &MilpConfig::default()).unwrap();
    assert_eq!(sol.assignment(), [NodeId(1), NodeId(0), NodeId(0)]);
    assert_eq!(sol.flow_time(&req), 7);
    let (hvf, _) = solve(SolverKind::Hvf, &net, &req, &SolverConfig::default(), 0);
    assert_eq!(hvf.unwrap().flow_time(&req), 7);
}

#[test]
fn neighborhood_is_every_feasible_single_move() {
    for seed in 0..300 {
        let (net, req) = small_instance(seed);
        let Ok(sol) = random_initial(&net, &req, seed) else {
            continue;
        };
        let assignment: Vec<usize> = sol
            .assignment()
            .iter()
            .map(|&id| net.node_index(id).unwrap())
            .collect();
        for f in 0..req.len() {
            let got: Vec<u64> = neighborhood(&net, &req, &sol, f)
                .iter()
                .map(|s| s.flow_time(&req))
                .collect();
            let want: Vec<u64> = (0..net.nodes().len())
                .filter(|&j| j != assignment[f])
                .filter_map(|j| {
                    let mut a = assignment.clone();
                    a[f] = j;
                    evaluate(&net, &req, &a, None)
                })
                .collect();
            assert_eq!(got, want, "seed {seed} function {f}");
        }
    }
}

#[test]
fn tabu_never_worse_than_its_start() {
    let cfg = TabuConfig::default();
    let mut improved = 0;
    for seed in 0..1000 {
        let (net, req) = small_instance(seed);
        let Ok(initial) = random_initial(&net, &req, seed) else {
            assert!(tabu_search_traced(&net, &req, &cfg, seed).is_err());
            continue;
        };
        let (best, trace) = tabu_search_traced(&net, &req, &cfg, seed).unwrap();
        assert_eq!(trace.initial_flow_time, initial.flow_time(&req));
        assert!(
            best.flow_time(&req) <= trace.initial_flow_time,
            "seed {seed}"
        );
        assert!(net.check_feasibility(&req, &best).is_ok());
        assert!(trace.best_flow_times.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(
            trace
                .best_flow_times
                .last()
                .copied()
                .unwrap_or(trace.initial_flow_time),
            best.flow_time(&req)
        );
        let tenure = req.len() - 1;
        assert!(trace
            .entries
            .iter()
            .all(|e| e.expires_at_iteration - e.created_at_iteration == tenure));
        assert!(trace.active_lengths.iter().all(|&n| n <= tenure));
        improved += usize::from(best.flow_time(&req) < trace.initial_flow_time);
    }
    assert!(improved > 0);
}

#[test]
fn zero_iterations_returns_the_initial_solution() {
    let cfg = TabuConfig {
        max_iterations: 0,
        ..Default::default()
    };
    for seed in 0..100 {
        let (net, req) = small_instance(seed);
        let a = random_initial(&net, &req, seed);
        let b = tabu_search_traced(&net, &req, &cfg, seed).map(|(s, _)| s);
        assert_eq!(a, b);
    }
}

#[test]
fn every_solver_returns_feasible_mappings() {
    let cfg = SolverConfig::default();
    for seed in 0..200 {
        let (net, req) = small_instance(seed);
        for kind in SolverKind::ALL {
            if let (Ok(sol), _) = solve(kind, &net, &req, &cfg, seed) {
                assert!(
                    net.check_feasibility(&req, &sol).is_ok(),
                    "{kind} seed {seed}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn earliest_completion_is_monotone(
        rho in 1u64..50,
        capacity in 10u64..100,
        backlog in 0u64..5,
        a in 0u64..500,
        b in 0u64..500,
    ) {
        let mut n = NetworkState::new(vec![node(0, &[(1, rho)], capacity)]).unwrap();
        // Queue some earlier work so the node is not idle.
        for i in 0..backlog.min(capacity / 10) {
            let r = ServiceRequest::new(ServiceId(i), vec![spec(1, 10)], 0, u64::MAX).unwrap();
            let s = schedule_assignment(&n, &r, &[0]).unwrap();
            n.commit(&r, &s).unwrap();
        }
        let node = &n.nodes()[0];
        let f = spec(1, 10);
        let (lo, hi) = (a.min(b), a.max(b));
        let e_lo = earliest_completion(node, &f, lo).unwrap();
        let e_hi = earliest_completion(node, &f, hi).unwrap();
        prop_assert!(e_lo <= e_hi);
        prop_assert!(e_lo >= lo + rho);
        prop_assert!(e_lo >= node.queue_completion_time() + rho);
        prop_assert!(earliest_completion(node, &spec(2, 10), lo).is_err());
    }

    /// Committing then releasing restores the state, and held buffer always
    /// equals the demands of queued functions.
    #[test]
    fn commit_release_conserves_buffer(seed in 0u64..10_000, order in prop::collection::vec(0usize..8, 1..8)) {
        let (mut net, _) = small_instance(seed);
        let base_held = net.held_buffer();
        let mut committed = Vec::new();
        for (k, s) in order.iter().enumerate() {
            let (_, req) = small_instance(seed * 31 + *s as u64);
            let req = ServiceRequest::new(
                ServiceId(5_000 + k as u64),
                req.functions().to_vec(),
                net.now(),
                net.now() + 1_000,
            ).unwrap();
            if let Ok(sol) = greedy_map(&net, &req, GreedyCriterion::LeastLoaded) {
                let before = net.clone();
                net.commit(&req, &sol).unwrap();
                prop_assert_eq!(net.held_buffer(), before.held_buffer() + req.total_buffer_demand());
                let mut undone = net.clone();
                undone.release(req.id()).unwrap();
                prop_assert_eq!(&undone, &before);
                committed.push(req.id());
            }
            prop_assert!(net.audit().is_ok());
            let queued: u64 = net.nodes().iter().flat_map(|n| n.queue()).map(|e| e.buffer_demand).sum();
            prop_assert_eq!(queued, net.held_buffer());
        }
        for id in committed.into_iter().rev() {
            net.release(id).unwrap();
        }
        prop_assert_eq!(net.held_buffer(), base_held);
    }
}
