use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::greedy::{greedy_map, GreedyCriterion};
use crate::hvf::hvf_map;
use crate::milp::{milp_map_with_stats, MilpConfig};
use crate::model::{MappingSolution, NetworkState, ServiceRequest};
use crate::schedule::Rejection;
use crate::tabu::{tabu_search, TabuConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "GFP")]
    Gfp,
    #[serde(rename = "GLL")]
    Gll,
    #[serde(rename = "GBA")]
    Gba,
    #[serde(rename = "TS")]
    Ts,
    #[serde(rename = "HVF")]
    Hvf,
    #[serde(rename = "MILP")]
    Milp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Gfp,
        SolverKind::Gll,
        SolverKind::Gba,
        SolverKind::Ts,
        SolverKind::Hvf,
        SolverKind::Milp,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SolverKind::Gfp => "GFP",
            SolverKind::Gll => "GLL",
            SolverKind::Gba => "GBA",
            SolverKind::Ts => "TS",
            SolverKind::Hvf => "HVF",
            SolverKind::Milp => "MILP",
        }
    }

    pub fn is_greedy(self) -> bool {
        matches!(self, SolverKind::Gfp | SolverKind::Gll | SolverKind::Gba)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown solver `{s}` (expected one of GFP, GLL, GBA, TS, HVF, MILP)")
            })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tabu: TabuConfig,
    /// Used by both the exact solver and the relaxation-based one.
    pub milp: MilpConfig,
}

/// Side information from one solver call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveInfo {
    /// Seed of the tabu search's initial solution.
    pub seed: Option<u64>,
    /// Branch-and-bound nodes explored.
    pub lp_nodes: Option<usize>,
    pub budget_exhausted: bool,
}

/// Runs `kind` on a snapshot. `seed` only matters for tabu search.
pub fn solve(
    kind: SolverKind,
    net: &NetworkState,
    req: &ServiceRequest,
    cfg: &SolverConfig,
    seed: u64,
) -> (Result<MappingSolution, Rejection>, SolveInfo) {
    let mut info = SolveInfo::default();
    let result = match kind {
        SolverKind::Gfp => greedy_map(net, req, GreedyCriterion::FastProcessing),
        SolverKind::Gll => greedy_map(net, req, GreedyCriterion::LeastLoaded),
        SolverKind::Gba => greedy_map(net, req, GreedyCriterion::BestAvailability),
        SolverKind::Ts => {
            info.seed = Some(seed);
            tabu_search(net, req, &cfg.tabu, seed)
        }
        SolverKind::Hvf => hvf_map(net, req, &cfg.milp),
        SolverKind::Milp => {
            let (result, stats) = milp_map_with_stats(net, req, &cfg.milp);
            info.lp_nodes = Some(stats.nodes);
            info.budget_exhausted = stats.budget_exhausted;
            result
        }
    };
    (result, info)
}
