//! Experiment harness: seeded simulation runs with CSV and JSONL output,
//! deadline sweeps, and single-instance verification against the
//! brute-force oracle.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nfms_core::metrics::confidence_summary;
use nfms_core::scenario::{generate, ConfigError, Scenario, ScenarioConfig};
use nfms_core::sim::{run_scenario, SimOptions, SimulationTrace};
use nfms_core::{solve, NetworkState, ServiceRequest, SolverConfig, SolverKind};
use nfms_oracle::nfms::{optimum, OracleLimits, TooLarge};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("sweep step must be positive")]
    ZeroStep,
    #[error("sweep range is empty: min {min} exceeds max {max}")]
    EmptySweep { min: u64, max: u64 },
    #[error(transparent)]
    TooLarge(#[from] TooLarge),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, BenchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ScenarioConfig::from_toml_str(&text)?)
}

/// One simulation per (solver, seed), solver-major. `cfg.seed` is replaced
/// by each entry of `seeds`.
pub fn run_all(
    cfg: &ScenarioConfig,
    solvers: &[SolverKind],
    seeds: &[u64],
    opts: &SimOptions,
) -> Result<Vec<SimulationTrace>, BenchError> {
    let scenarios = scenarios(cfg, seeds)?;
    let mut out = Vec::with_capacity(solvers.len() * seeds.len());
    for &solver in solvers {
        for (&seed, sc) in seeds.iter().zip(&scenarios) {
            out.push(run_scenario(
                sc.network.clone(),
                &sc.arrivals,
                solver,
                opts,
                seed,
            ));
        }
    }
    Ok(out)
}

fn scenarios(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<Scenario>, BenchError> {
    seeds
        .iter()
        .map(|&seed| {
            Ok(generate(&ScenarioConfig {
                seed,
                ..cfg.clone()
            })?)
        })
        .collect()
}

/// Files whose content depends on wall-clock time. Everything else written
/// by [`write_run`] is a pure function of the inputs.
pub fn is_timing_file(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with("computation_"))
}

/// Writes one JSONL trace per run under `traces/`, the replayable scenarios
/// under `scenarios/`, and one CSV per metric family. Returns every path
/// written, sorted.
pub fn write_run(
    dir: &Path,
    cfg: &ScenarioConfig,
    traces: &[SimulationTrace],
) -> Result<Vec<PathBuf>, BenchError> {
    let mut written = Vec::new();
    for sub in ["traces", "scenarios"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }

    for t in traces {
        let path = dir
            .join("traces")
            .join(format!("{}_seed{}.jsonl", t.solver, t.seed));
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        for r in &t.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }

    let mut seeds: Vec<u64> = traces.iter().map(|t| t.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    for (seed, sc) in seeds.iter().zip(scenarios(cfg, &seeds)?) {
        let path = dir.join("scenarios").join(format!("seed{seed}.jsonl"));
        write_scenario(&path, &sc)?;
        written.push(path);
    }

    written.extend(write_csvs(dir, traces)?);
    written.sort();
    Ok(written)
}

/// The network on the first line, then one request per line.
pub fn write_scenario(path: &Path, sc: &Scenario) -> Result<(), BenchError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer(&mut w, &sc.network)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    for r in &sc.arrivals {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_scenario(path: &Path) -> Result<Scenario, BenchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let network = serde_json::from_str(lines.next().unwrap_or("null"))?;
    let arrivals = lines.map(serde_json::from_str).collect::<Result<_, _>>()?;
    Ok(Scenario { network, arrivals })
}

#[derive(Serialize)]
struct AcceptanceRow {
    solver: SolverKind,
    seed: u64,
    request: u64,
    arrival_time: u64,
    accepted: bool,
    acceptance_ratio: f64,
}

#[derive(Serialize)]
struct ServiceRow {
    solver: SolverKind,
    seed: u64,
    request: u64,
    arrival_time: u64,
    value: u64,
}

#[derive(Serialize)]
struct QueueRow {
    solver: SolverKind,
    seed: u64,
    arrival_time: u64,
    queue_length: u64,
}

#[derive(Serialize)]
struct EconomicsRow {
    solver: SolverKind,
    seed: u64,
    arrival_time: u64,
    cumulative_revenue: f64,
    cumulative_cost: f64,
}

#[derive(Serialize)]
struct ComputationRow {
    solver: SolverKind,
    seed: u64,
    request: u64,
    solve_ns: u64,
    lp_nodes: Option<usize>,
    budget_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solver: SolverKind,
    pub seed: u64,
    pub arrived: usize,
    pub accepted: usize,
    pub acceptance_ratio: f64,
    pub mean_flow_time: f64,
    pub mean_time_gap: f64,
    pub cumulative_revenue: f64,
    pub cumulative_cost: f64,
    pub budget_exhausted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputationSummaryRow {
    pub solver: SolverKind,
    pub seed: u64,
    pub median_ns: u64,
    pub total_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRow {
    pub solver: SolverKind,
    pub metric: String,
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub half_width: f64,
}

pub fn summary(t: &SimulationTrace) -> SummaryRow {
    SummaryRow {
        solver: t.solver,
        seed: t.seed,
        arrived: t.metrics.arrived,
        accepted: t.metrics.accepted,
        acceptance_ratio: t.metrics.acceptance_ratio(),
        mean_flow_time: t.metrics.mean_flow_time(),
        mean_time_gap: t.metrics.mean_time_gap(),
        cumulative_revenue: t.metrics.cumulative_revenue,
        cumulative_cost: t.metrics.cumulative_cost,
        budget_exhausted: t.records.iter().filter(|r| r.info.budget_exhausted).count(),
    }
}

/// Mean, standard deviation and 95% half-width of `metric` across the runs
/// of each solver. Solvers with fewer than two runs are skipped.
pub fn confidence(
    traces: &[SimulationTrace],
    metric: &str,
    value: impl Fn(&SimulationTrace) -> f64,
) -> Vec<ConfidenceRow> {
    let mut by_solver: BTreeMap<SolverKind, Vec<f64>> = BTreeMap::new();
    for t in traces {
        by_solver.entry(t.solver).or_default().push(value(t));
    }
    by_solver
        .into_iter()
        .filter_map(|(solver, v)| {
            let c = confidence_summary(&v).ok()?;
            Some(ConfidenceRow {
                solver,
                metric: metric.to_string(),
                samples: v.len(),
                mean: c.mean,
                std_dev: c.std_dev,
                half_width: c.half_width,
            })
        })
        .collect()
}

fn csv_file<R: Serialize>(
    dir: &Path,
    name: &str,
    rows: impl IntoIterator<Item = R>,
) -> Result<PathBuf, BenchError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    let mut empty = true;
    for r in rows {
        w.serialize(r)?;
        empty = false;
    }
    if empty {
        // Keep the file present so consumers can rely on the set of names.
        w.write_record(std::iter::empty::<&str>())?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

fn write_csvs(dir: &Path, traces: &[SimulationTrace]) -> Result<Vec<PathBuf>, BenchError> {
    let records = || {
        traces
            .iter()
            .flat_map(|t| t.records.iter().map(move |r| (t, r)))
    };
    let service = |f: fn(&nfms_core::sim::ArrivalRecord) -> Option<u64>| {
        records().filter_map(move |(t, r)| {
            f(r).map(|value| ServiceRow {
                solver: t.solver,
                seed: t.seed,
                request: r.request.0,
                arrival_time: r.arrival_time,
                value,
            })
        })
    };

    let mut out = vec![
        csv_file(
            dir,
            "acceptance.csv",
            records().map(|(t, r)| AcceptanceRow {
                solver: t.solver,
                seed: t.seed,
                request: r.request.0,
                arrival_time: r.arrival_time,
                accepted: r.accepted,
                acceptance_ratio: r.acceptance_ratio,
            }),
        )?,
        csv_file(dir, "time_gaps.csv", service(|r| r.time_gaps))?,
        csv_file(dir, "flow_time.csv", service(|r| r.flow_time))?,
        csv_file(
            dir,
            "queue_length.csv",
            records().map(|(t, r)| QueueRow {
                solver: t.solver,
                seed: t.seed,
                arrival_time: r.arrival_time,
                queue_length: r.queue_length,
            }),
        )?,
        csv_file(
            dir,
            "economics.csv",
            records().map(|(t, r)| EconomicsRow {
                solver: t.solver,
                seed: t.seed,
                arrival_time: r.arrival_time,
                cumulative_revenue: r.cumulative_revenue,
                cumulative_cost: r.cumulative_cost,
            }),
        )?,
        csv_file(dir, "summary.csv", traces.iter().map(summary))?,
        csv_file(
            dir,
            "confidence.csv",
            [
                confidence(traces, "acceptance_ratio", |t| t.metrics.acceptance_ratio()),
                confidence(traces, "mean_flow_time", |t| t.metrics.mean_flow_time()),
                confidence(traces, "mean_time_gap", |t| t.metrics.mean_time_gap()),
                confidence(traces, "cumulative_revenue", |t| {
                    t.metrics.cumulative_revenue
                }),
                confidence(traces, "cumulative_cost", |t| t.metrics.cumulative_cost),
            ]
            .concat(),
        )?,
        csv_file(
            dir,
            "computation_time.csv",
            records().map(|(t, r)| ComputationRow {
                solver: t.solver,
                seed: t.seed,
                request: r.request.0,
                solve_ns: r.solve_ns,
                lp_nodes: r.info.lp_nodes,
                budget_exhausted: r.info.budget_exhausted,
            }),
        )?,
        csv_file(
            dir,
            "computation_summary.csv",
            traces.iter().map(|t| ComputationSummaryRow {
                solver: t.solver,
                seed: t.seed,
                median_ns: t.metrics.median_computation_ns(),
                total_ns: t.metrics.total_computation_ns(),
            }),
        )?,
    ];
    out.push(csv_file(
        dir,
        "computation_confidence.csv",
        [
            confidence(traces, "median_ns", |t| {
                t.metrics.median_computation_ns() as f64
            }),
            confidence(traces, "total_ns", |t| {
                t.metrics.total_computation_ns() as f64
            }),
        ]
        .concat(),
    )?);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub deadline: u64,
    /// Final acceptance ratio, averaged over seeds.
    pub acceptance_ratio: f64,
}

/// `min, min + step, ..` up to and including `max` when it falls on the grid.
pub fn sweep_grid(min: u64, max: u64, step: u64) -> Result<Vec<u64>, BenchError> {
    if step == 0 {
        return Err(BenchError::ZeroStep);
    }
    if min > max {
        return Err(BenchError::EmptySweep { min, max });
    }
    Ok((min..=max).step_by(step as usize).collect())
}

/// Final acceptance ratio with every deadline set exactly `d` after arrival,
/// for each `d` in `deadlines`.
pub fn sweep_deadline(
    cfg: &ScenarioConfig,
    deadlines: &[u64],
    solver: SolverKind,
    seeds: &[u64],
    opts: &SimOptions,
) -> Result<Vec<SweepPoint>, BenchError> {
    deadlines
        .iter()
        .map(|&d| {
            let at = ScenarioConfig {
                deadline_range: (d, d),
                ..cfg.clone()
            };
            let traces = run_all(&at, &[solver], seeds, opts)?;
            let total: f64 = traces.iter().map(|t| t.metrics.acceptance_ratio()).sum();
            Ok(SweepPoint {
                deadline: d,
                acceptance_ratio: total / traces.len().max(1) as f64,
            })
        })
        .collect()
}

pub fn write_sweep(
    w: impl Write,
    solver: SolverKind,
    points: &[SweepPoint],
) -> Result<(), BenchError> {
    #[derive(Serialize)]
    struct Row {
        solver: SolverKind,
        deadline: u64,
        acceptance_ratio: f64,
    }
    let mut w = csv::Writer::from_writer(w);
    for p in points {
        w.serialize(Row {
            solver,
            deadline: p.deadline,
            acceptance_ratio: p.acceptance_ratio,
        })?;
    }
    w.flush().map_err(io_err(Path::new("<sweep output>")))
}

/// A single request on a network snapshot, as read by [`verify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub network: NetworkState,
    pub request: ServiceRequest,
}

pub fn read_instance(path: &Path) -> Result<Instance, BenchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Optimal flow time by enumeration; `None` when nothing is feasible.
    pub oracle: Option<u64>,
    /// Flow time per solver; `None` on rejection.
    pub solvers: Vec<(SolverKind, Option<u64>)>,
    /// Human-readable breaches of optimality or dominance.
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs every solver and the enumeration oracle on one instance and checks
/// that the exact solver is optimal and nothing beats it.
pub fn verify(
    inst: &Instance,
    cfg: &SolverConfig,
    limits: &OracleLimits,
    seed: u64,
) -> Result<VerifyReport, BenchError> {
    let (net, req) = (&inst.network, &inst.request);
    let oracle = optimum(net, req, limits)?.map(|o| o.flow_time);
    let mut violations = Vec::new();
    let mut solvers = Vec::new();
    for kind in SolverKind::ALL {
        let (result, info) = solve(kind, net, req, cfg, seed);
        let flow = match result {
            Ok(sol) => {
                if let Err(v) = net.check_feasibility(req, &sol) {
                    violations.push(format!("{kind} returned an infeasible mapping: {v:?}"));
                }
                Some(sol.flow_time(req))
            }
            Err(_) => None,
        };
        match (kind, flow, oracle) {
            (_, Some(f), None) => violations.push(format!(
                "{kind} accepted with flow {f} but nothing is feasible"
            )),
            (_, Some(f), Some(o)) if f < o => {
                violations.push(format!("{kind} flow {f} beats the optimum {o}"))
            }
            (SolverKind::Milp, Some(f), Some(o)) if f != o => {
                violations.push(format!("MILP flow {f} differs from the optimum {o}"))
            }
            (SolverKind::Milp, None, Some(o)) if !info.budget_exhausted => {
                violations.push(format!("MILP rejected but the optimum is {o}"))
            }
            _ => {}
        }
        solvers.push((kind, flow));
    }
    Ok(VerifyReport {
        oracle,
        solvers,
        violations,
    })
}
