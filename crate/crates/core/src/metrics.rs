//! Revenue, cost and schedule-quality measures, plus run-level accumulators.

use serde::{Deserialize, Serialize};

use crate::model::{MappingSolution, NetworkState, ServiceRequest, Time};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Cost per unit of buffer.
    pub theta: f64,
    /// Cost per unit of time the service spends in the network.
    pub varrho: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            theta: 0.2,
            varrho: 0.2,
        }
    }
}

/// Buffer demands plus the processing times on the chosen nodes.
pub fn revenue(req: &ServiceRequest, sol: &MappingSolution, net: &NetworkState) -> f64 {
    let processing: Time = sol
        .placements
        .iter()
        .zip(req.functions())
        .map(|(p, f)| {
            net.node(p.node_id)
                .and_then(|n| n.processing_time(f.kind))
                .unwrap_or(p.completion_time - p.start_time)
        })
        .sum();
    (req.total_buffer_demand() + processing) as f64
}

/// `theta * sum(delta) + varrho * flow_time`.
pub fn cost(req: &ServiceRequest, sol: &MappingSolution, cfg: &MetricsConfig) -> f64 {
    cfg.theta * req.total_buffer_demand() as f64 + cfg.varrho * sol.flow_time(req) as f64
}

/// Total idle time between arrival and completion.
pub fn time_gaps(req: &ServiceRequest, sol: &MappingSolution) -> Time {
    sol.gaps(req).iter().sum()
}

/// Total processing time of everything still queued in the network.
pub fn queue_length(net: &NetworkState) -> Time {
    net.nodes()
        .iter()
        .flat_map(|n| n.queue())
        .map(|e| e.completion - e.start)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSummary {
    pub mean: f64,
    pub std_dev: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("a confidence summary needs at least two samples, got {0}")]
pub struct TooFewSamples(pub usize);

/// Sample mean, sample standard deviation and `1.96 s / sqrt(n)`.
pub fn confidence_summary(samples: &[f64]) -> Result<ConfidenceSummary, TooFewSamples> {
    let n = samples.len();
    if n < 2 {
        return Err(TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std_dev = var.sqrt();
    Ok(ConfidenceSummary {
        mean,
        std_dev,
        half_width: 1.96 * std_dev / (n as f64).sqrt(),
    })
}

/// Accumulators for one simulation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub arrived: usize,
    pub accepted: usize,
    pub cumulative_revenue: f64,
    pub cumulative_cost: f64,
    /// Flow time of each accepted service, in acceptance order.
    pub flow_times: Vec<Time>,
    /// Total gap of each accepted service.
    pub time_gaps: Vec<Time>,
    /// `(arrival time, queue length)` after each arrival was handled.
    pub queue_length_series: Vec<(Time, Time)>,
    /// Wall time of each solver call, in nanoseconds.
    pub computation_ns: Vec<u64>,
}

impl RunMetrics {
    pub fn acceptance_ratio(&self) -> f64 {
        if self.arrived == 0 {
            0.0
        } else {
            self.accepted as f64 / self.arrived as f64
        }
    }

    pub fn mean_flow_time(&self) -> f64 {
        mean(&self.flow_times)
    }

    pub fn mean_time_gap(&self) -> f64 {
        mean(&self.time_gaps)
    }

    /// Median solver wall time, in nanoseconds.
    pub fn median_computation_ns(&self) -> u64 {
        let mut v = self.computation_ns.clone();
        v.sort_unstable();
        v.get(v.len() / 2).copied().unwrap_or(0)
    }

    pub fn total_computation_ns(&self) -> u64 {
        self.computation_ns.iter().sum()
    }
}

fn mean(v: &[Time]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<Time>() as f64 / v.len() as f64
    }
}
