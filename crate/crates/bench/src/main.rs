use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nfms_bench::{
    read_config, read_instance, run_all, summary, sweep_deadline, sweep_grid, verify, write_run,
    write_sweep, BenchError,
};
use nfms_core::milp::MilpConfig;
use nfms_core::sim::SimOptions;
use nfms_core::tabu::TabuConfig;
use nfms_core::{SolverConfig, SolverKind};
use nfms_oracle::nfms::OracleLimits;

#[derive(Parser)]
#[command(
    name = "nfms-bench",
    version,
    about = "Online function mapping and scheduling experiments"
)]
struct Cli {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Branch-and-bound nodes per request before the exact solver gives up.
    #[arg(long, global = true, default_value_t = 100_000)]
    milp_node_budget: usize,
    /// Iteration cap of tabu search.
    #[arg(long, global = true, default_value_t = 500)]
    tabu_kappa: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tabu: TabuConfig {
                max_iterations: self.tabu_kappa,
                ..Default::default()
            },
            milp: MilpConfig {
                node_budget: self.milp_node_budget,
                ..Default::default()
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every (solver, seed) pair and write traces and CSVs.
    Run {
        /// Scenario file (TOML); missing keys take the reference defaults.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "GFP,GLL,GBA,TS,HVF,MILP")]
        solvers: Vec<SolverKind>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Re-check state invariants after every arrival.
        #[arg(long)]
        audit: bool,
    },
    /// Final acceptance ratio as a function of a fixed relative deadline.
    SweepDeadline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        min: u64,
        #[arg(long)]
        max: u64,
        #[arg(long)]
        step: u64,
        #[arg(long)]
        solver: SolverKind,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every solver with exhaustive enumeration on one instance.
    Verify {
        /// JSON object with `network` and `request`.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1 << 20)]
        max_assignments: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, BenchError> {
    let solver_cfg = cli.solver.config();
    match &cli.command {
        Command::Run {
            config,
            solvers,
            seeds,
            out,
            audit,
        } => {
            let cfg = read_config(config)?;
            let opts = SimOptions {
                solver: solver_cfg,
                audit: *audit,
                ..Default::default()
            };
            let traces = run_all(&cfg, solvers, seeds, &opts)?;
            let files = write_run(out, &cfg, &traces)?;
            for t in &traces {
                let s = summary(t);
                println!(
                    "{:<4} seed {:<4} accepted {:>5}/{:<5} ratio {:.4} mean flow {:.1} median solve {} ns",
                    s.solver.code(),
                    s.seed,
                    s.accepted,
                    s.arrived,
                    s.acceptance_ratio,
                    s.mean_flow_time,
                    t.metrics.median_computation_ns()
                );
                if let Some(a) = t.audit.filter(|a| a.violations() > 0) {
                    eprintln!(
                        "{} seed {}: {} invariant violations",
                        t.solver,
                        t.seed,
                        a.violations()
                    );
                    return Ok(ExitCode::FAILURE);
                }
            }
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepDeadline {
            config,
            min,
            max,
            step,
            solver,
            seeds,
            out,
        } => {
            let grid = sweep_grid(*min, *max, *step)?;
            let cfg = read_config(config)?;
            let opts = SimOptions {
                solver: solver_cfg,
                ..Default::default()
            };
            let points = sweep_deadline(&cfg, &grid, *solver, seeds, &opts)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|source| BenchError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    write_sweep(file, *solver, &points)?;
                }
                None => write_sweep(std::io::stdout().lock(), *solver, &points)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            instance,
            max_assignments,
        } => {
            let inst = read_instance(instance)?;
            let limits = OracleLimits {
                max_assignments: *max_assignments,
                ..Default::default()
            };
            let report = verify(&inst, &solver_cfg, &limits, 0)?;
            let show = |f: Option<u64>| f.map_or_else(|| "rejected".to_string(), |v| v.to_string());
            println!("oracle  {}", show(report.oracle));
            for (kind, flow) in &report.solvers {
                println!("{:<7} {}", kind.code(), show(*flow));
            }
            if report.is_consistent() {
                println!("dominance holds: MILP optimal, no heuristic below it");
                Ok(ExitCode::SUCCESS)
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
