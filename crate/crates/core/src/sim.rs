//! Sequential arrival-driven simulation of one solver on one scenario.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::metrics::{cost, queue_length, revenue, time_gaps, MetricsConfig, RunMetrics};
use crate::model::{NetworkState, NodeId, ServiceId, ServiceRequest, Time};
use crate::scenario::{generate, ConfigError, ScenarioConfig};
use crate::schedule::Rejection;
use crate::solver::{solve, SolveInfo, SolverConfig, SolverKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub solver: SolverConfig,
    pub metrics: MetricsConfig,
    /// Re-check state invariants after every arrival.
    pub audit: bool,
}

/// What happened to one arriving request, and the run totals right after.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRecord {
    pub request: ServiceId,
    pub arrival_time: Time,
    pub solver: SolverKind,
    pub accepted: bool,
    pub nodes: Vec<NodeId>,
    pub flow_time: Option<Time>,
    pub time_gaps: Option<Time>,
    pub revenue: f64,
    pub cost: f64,
    pub rejection: Option<Rejection>,
    pub info: SolveInfo,
    pub acceptance_ratio: f64,
    pub cumulative_revenue: f64,
    pub cumulative_cost: f64,
    pub queue_length: Time,
    /// Wall time of the solver call. Not serialized, so that traces of equal
    /// runs compare byte for byte.
    #[serde(skip)]
    pub solve_ns: u64,
}

/// Invariant checks performed in audit mode, and how many failed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: usize,
    /// Reserved buffer differs from the demands of queued functions, or a
    /// node's bookkeeping disagrees with its queue.
    pub conservation: usize,
    /// Committing and then releasing a service did not restore the state.
    pub inversion: usize,
    /// A committed function starts before its request arrived.
    pub early_start: usize,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.conservation + self.inversion + self.early_start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub solver: SolverKind,
    pub seed: u64,
    pub records: Vec<ArrivalRecord>,
    pub metrics: RunMetrics,
    pub audit: Option<AuditReport>,
}

/// Seed for the randomized solver on one request, derived from the run seed.
pub fn request_seed(run_seed: u64, request: ServiceId) -> u64 {
    // SplitMix64 finalizer over the combined value.
    let mut z = run_seed ^ request.0.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run(
    cfg: &ScenarioConfig,
    solver: SolverKind,
    opts: &SimOptions,
) -> Result<SimulationTrace, ConfigError> {
    let scenario = generate(cfg)?;
    Ok(run_scenario(
        scenario.network,
        &scenario.arrivals,
        solver,
        opts,
        cfg.seed,
    ))
}

/// Processes `arrivals` in order: retire finished functions, solve on the
/// current snapshot, commit on success and record the outcome either way.
pub fn run_scenario(
    mut net: NetworkState,
    arrivals: &[ServiceRequest],
    solver: SolverKind,
    opts: &SimOptions,
    seed: u64,
) -> SimulationTrace {
    let mut metrics = RunMetrics::default();
    let mut records = Vec::with_capacity(arrivals.len());
    let mut audit = opts.audit.then(AuditReport::default);

    for req in arrivals {
        net.advance_to(req.arrival_time().max(net.now()))
            .expect("clock moves forward");

        let started = Instant::now();
        let (result, info) = solve(
            solver,
            &net,
            req,
            &opts.solver,
            request_seed(seed, req.id()),
        );
        let solve_ns = started.elapsed().as_nanos() as u64;

        metrics.arrived += 1;
        metrics.computation_ns.push(solve_ns);
        let mut record = ArrivalRecord {
            request: req.id(),
            arrival_time: req.arrival_time(),
            solver,
            accepted: false,
            nodes: Vec::new(),
            flow_time: None,
            time_gaps: None,
            revenue: 0.0,
            cost: 0.0,
            rejection: None,
            info,
            acceptance_ratio: 0.0,
            cumulative_revenue: 0.0,
            cumulative_cost: 0.0,
            queue_length: 0,
            solve_ns,
        };

        match result {
            Ok(sol) => {
                let before = audit.as_ref().map(|_| net.clone());
                net.commit(req, &sol)
                    .expect("solvers only return feasible mappings");
                let r = revenue(req, &sol, &net);
                let c = cost(req, &sol, &opts.metrics);
                let flow = sol.flow_time(req);
                let gaps = time_gaps(req, &sol);
                metrics.accepted += 1;
                metrics.cumulative_revenue += r;
                metrics.cumulative_cost += c;
                metrics.flow_times.push(flow);
                metrics.time_gaps.push(gaps);
                record.accepted = true;
                record.nodes = sol.assignment();
                record.flow_time = Some(flow);
                record.time_gaps = Some(gaps);
                record.revenue = r;
                record.cost = c;

                if let (Some(report), Some(before)) = (audit.as_mut(), before) {
                    report.checks += 1;
                    if sol
                        .placements
                        .iter()
                        .any(|p| p.start_time < req.arrival_time())
                    {
                        report.early_start += 1;
                    }
                    let mut undone = net.clone();
                    if undone.release(req.id()).is_err() || undone != before {
                        report.inversion += 1;
                    }
                }
            }
            Err(rejection) => record.rejection = Some(rejection),
        }

        if let Some(report) = audit.as_mut() {
            let queued: u64 = net
                .nodes()
                .iter()
                .flat_map(|n| n.queue())
                .map(|e| e.buffer_demand)
                .sum();
            if net.audit().is_err() || queued != net.held_buffer() {
                report.conservation += 1;
            }
        }

        let ql = queue_length(&net);
        metrics.queue_length_series.push((req.arrival_time(), ql));
        record.acceptance_ratio = metrics.acceptance_ratio();
        record.cumulative_revenue = metrics.cumulative_revenue;
        record.cumulative_cost = metrics.cumulative_cost;
        record.queue_length = ql;
        records.push(record);
    }

    SimulationTrace {
        solver,
        seed,
        records,
        metrics,
        audit,
    }
}
