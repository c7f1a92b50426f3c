//! Seeded random networks and request streams.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::model::{
    FunctionKind, FunctionSpec, NetworkState, NodeId, NodeState, ServiceId, ServiceRequest, Time,
};

/// Inclusive `[min, max]`.
pub type Span = (u64, u64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub node_count: usize,
    pub buffer_range: Span,
    pub capabilities_per_node_range: Span,
    pub processing_time_range: Span,
    pub buffer_demand_range: Span,
    pub functions_per_service_range: Span,
    /// Offset of the deadline from the arrival time.
    pub deadline_range: Span,
    /// Function kinds are labelled `1..=function_catalog_size`.
    pub function_catalog_size: u16,
    /// Mean number of arrivals per time unit.
    pub arrival_rate: f64,
    pub total_arrivals: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            node_count: 100,
            buffer_range: (75, 100),
            capabilities_per_node_range: (1, 7),
            processing_time_range: (15, 30),
            buffer_demand_range: (20, 30),
            functions_per_service_range: (5, 10),
            deadline_range: (5000, 10000),
            function_catalog_size: 10,
            arrival_rate: 1.0 / 3.0,
            total_arrivals: 1500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: min {min} exceeds max {max}")]
    EmptyRange {
        field: &'static str,
        min: u64,
        max: u64,
    },
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("catalog of {catalog} kinds cannot give a node {max} capabilities")]
    CatalogTooSmall { catalog: u16, max: u64 },
    #[error("arrival rate must be positive and finite, got {0}")]
    ArrivalRate(f64),
    #[error("invalid configuration file: {0}")]
    Parse(String),
}

impl ScenarioConfig {
    /// A quarter of the default network with the arrival rate scaled to keep
    /// the same load per node, and 300 arrivals.
    pub fn desk_scale() -> Self {
        Self {
            node_count: 25,
            arrival_rate: 1.0 / 12.0,
            total_arrivals: 300,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let spans = [
            ("buffer_range", self.buffer_range),
            (
                "capabilities_per_node_range",
                self.capabilities_per_node_range,
            ),
            ("processing_time_range", self.processing_time_range),
            ("buffer_demand_range", self.buffer_demand_range),
            (
                "functions_per_service_range",
                self.functions_per_service_range,
            ),
            ("deadline_range", self.deadline_range),
        ];
        for (field, (min, max)) in spans {
            if min > max {
                return Err(ConfigError::EmptyRange { field, min, max });
            }
        }
        if self.processing_time_range.0 == 0 {
            return Err(ConfigError::NotPositive("processing_time_range"));
        }
        if self.buffer_demand_range.0 == 0 {
            return Err(ConfigError::NotPositive("buffer_demand_range"));
        }
        if self.functions_per_service_range.0 == 0 {
            return Err(ConfigError::NotPositive("functions_per_service_range"));
        }
        if self.function_catalog_size == 0 {
            return Err(ConfigError::NotPositive("function_catalog_size"));
        }
        if u64::from(self.function_catalog_size) < self.capabilities_per_node_range.1 {
            return Err(ConfigError::CatalogTooSmall {
                catalog: self.function_catalog_size,
                max: self.capabilities_per_node_range.1,
            });
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return Err(ConfigError::ArrivalRate(self.arrival_rate));
        }
        Ok(())
    }
}

const NETWORK_STREAM: u64 = 1;
const ARRIVAL_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(rng: &mut ChaCha8Rng, (min, max): Span) -> u64 {
    rng.random_range(min..=max)
}

/// Nodes `0..node_count`, each with a random buffer, a random subset of the
/// catalog as capabilities and a processing time per capability.
pub fn generate_network(cfg: &ScenarioConfig) -> Result<NetworkState, ConfigError> {
    cfg.validate()?;
    let mut rng = rng(cfg.seed, NETWORK_STREAM);
    let catalog = usize::from(cfg.function_catalog_size);
    let nodes = (0..cfg.node_count)
        .map(|j| {
            let capacity = draw(&mut rng, cfg.buffer_range);
            let count = draw(&mut rng, cfg.capabilities_per_node_range) as usize;
            let mut kinds: Vec<usize> = sample(&mut rng, catalog, count).into_vec();
            kinds.sort_unstable();
            let times = kinds
                .into_iter()
                .map(|k| {
                    let kind = FunctionKind(k as u16 + 1);
                    (kind, draw(&mut rng, cfg.processing_time_range))
                })
                .collect();
            NodeState::new(NodeId(j as u32), times, capacity).expect("positive processing times")
        })
        .collect();
    Ok(NetworkState::new(nodes).expect("distinct ids"))
}

/// Integer inter-arrival gaps from a geometric law with mean
/// `1 / arrival_rate`: on `{1, 2, ..}` when that mean is at least one, so
/// arrival times strictly increase, and on `{0, 1, ..}` otherwise.
pub fn inter_arrival_sampler(arrival_rate: f64) -> impl FnMut(&mut ChaCha8Rng) -> Time {
    let mean = 1.0 / arrival_rate;
    let (shift, p) = if mean >= 1.0 {
        (1, 1.0 / mean)
    } else {
        (0, 1.0 / (1.0 + mean))
    };
    let geometric = Geometric::new(p).expect("probability in (0, 1]");
    move |rng| shift + geometric.sample(rng)
}

pub fn generate_arrivals(cfg: &ScenarioConfig) -> Result<Vec<ServiceRequest>, ConfigError> {
    cfg.validate()?;
    let mut rng = rng(cfg.seed, ARRIVAL_STREAM);
    let mut gap = inter_arrival_sampler(cfg.arrival_rate);
    let mut now: Time = 0;
    let mut out = Vec::with_capacity(cfg.total_arrivals);
    for id in 0..cfg.total_arrivals {
        now += gap(&mut rng);
        let len = draw(&mut rng, cfg.functions_per_service_range);
        let functions = (0..len)
            .map(|_| FunctionSpec {
                kind: FunctionKind(rng.random_range(1..=cfg.function_catalog_size)),
                buffer_demand: draw(&mut rng, cfg.buffer_demand_range),
            })
            .collect();
        let deadline = now + draw(&mut rng, cfg.deadline_range);
        out.push(
            ServiceRequest::new(ServiceId(id as u64), functions, now, deadline)
                .expect("valid draw"),
        );
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub network: NetworkState,
    pub arrivals: Vec<ServiceRequest>,
}

pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario, ConfigError> {
    Ok(Scenario {
        network: generate_network(cfg)?,
        arrivals: generate_arrivals(cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_ranges() {
        let cfg = ScenarioConfig::default();
        let net = generate_network(&cfg).unwrap();
        assert_eq!(net.nodes().len(), 100);
        for n in net.nodes() {
            assert!((75..=100).contains(&n.buffer_capacity()));
            let caps = n.processing_times().len() as u64;
            assert!((1..=7).contains(&caps));
            assert!(n.processing_times().values().all(|t| (15..=30).contains(t)));
            assert!(n.capabilities().all(|k| (1..=10).contains(&k.0)));
        }
        let arrivals = generate_arrivals(&cfg).unwrap();
        assert_eq!(arrivals.len(), 1500);
        assert!(arrivals
            .windows(2)
            .all(|w| w[0].arrival_time() < w[1].arrival_time()));
    }

    #[test]
    fn fully_flexible_network() {
        let cfg = ScenarioConfig {
            capabilities_per_node_range: (10, 10),
            ..ScenarioConfig::desk_scale()
        };
        let net = generate_network(&cfg).unwrap();
        assert!(net.nodes().iter().all(|n| n.processing_times().len() == 10));
    }

    #[test]
    fn validation() {
        let bad = ScenarioConfig {
            buffer_range: (10, 5),
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ConfigError::EmptyRange { .. })
        ));
        let bad = ScenarioConfig {
            capabilities_per_node_range: (1, 11),
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ConfigError::CatalogTooSmall { .. })
        ));
        assert!(ScenarioConfig::from_toml_str("node_count = 3\nbogus = 1\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::desk_scale();
        let text = cfg.to_toml_string();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
        let partial = ScenarioConfig::from_toml_str("node_count = 7\nseed = 3\n").unwrap();
        assert_eq!(partial.node_count, 7);
        assert_eq!(partial.total_arrivals, 1500);
    }

    #[test]
    fn fast_arrivals_cluster() {
        let mut sampler = inter_arrival_sampler(50.0);
        let mut rng = rng(1, 0);
        let mean = (0..10_000).map(|_| sampler(&mut rng)).sum::<u64>() as f64 / 10_000.0;
        assert!(mean < 0.05);
    }
}
