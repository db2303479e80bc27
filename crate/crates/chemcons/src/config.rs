//! Scenario configuration files (JSON).

use std::path::Path;

use chemcons_core::chem::Channel;
use chemcons_core::gossip::GossipAlgorithm;
use chemcons_core::protocol::{EventSchedule, ProtocolParams, TimedEvent, Variant};
use chemcons_core::topology::{
    make_complete, make_regular_lattice, make_ring, make_small_world, NetworkGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    /// `ring`, `complete`, `lattice`, `small_world` or `edge_list`.
    pub kind: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Undirected edge count for `small_world`; defaults to `3M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewire_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Directed edges for `edge_list`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_list: Option<Vec<(usize, usize)>>,
}

impl TopologySpec {
    pub fn build(&self) -> Result<NetworkGraph, RunError> {
        let g = match self.kind.as_str() {
            "ring" => make_ring(self.m)?,
            "complete" => make_complete(self.m)?,
            "lattice" => make_regular_lattice(self.m, self.k.unwrap_or(3))?,
            "small_world" => make_small_world(
                self.m,
                self.edges.unwrap_or(3 * self.m),
                self.rewire_p.unwrap_or(0.2),
                self.seed.unwrap_or(0),
            )?,
            "edge_list" => {
                let edges = self
                    .edge_list
                    .as_ref()
                    .ok_or_else(|| RunError::Schema("edge_list topology needs `edge_list`".into()))?;
                NetworkGraph::from_edges(self.m, edges)?
            }
            other => return Err(RunError::UnknownTopology(other.to_string())),
        };
        Ok(g)
    }
}

/// Measurement vector or a generator for one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZSpec {
    Values(Vec<f64>),
    Uniform { uniform: (f64, f64), seed: u64 },
    Indexed { indexed: String },
}

impl ZSpec {
    /// Nodes are numbered from 1 in the `indexed` expressions.
    pub fn generate(&self, m: usize) -> Result<Vec<f64>, RunError> {
        match self {
            ZSpec::Values(v) => {
                if v.len() != m {
                    return Err(RunError::Schema(format!(
                        "z has {} entries for {m} nodes",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
            ZSpec::Uniform {
                uniform: (lo, hi),
                seed,
            } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(RunError::Schema("uniform bounds must satisfy lo <= hi".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..m).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect())
            }
            ZSpec::Indexed { indexed } => {
                let expr: String = indexed.chars().filter(|c| !c.is_whitespace()).collect();
                let factor = if expr == "i" {
                    1.0
                } else if let Some(f) = expr.strip_suffix("*i") {
                    f.parse::<f64>()
                        .map_err(|_| RunError::Schema(format!("bad indexed expression `{indexed}`")))?
                } else {
                    return Err(RunError::Schema(format!(
                        "bad indexed expression `{indexed}` (expected `i` or `c*i`)"
                    )));
                };
                Ok((1..=m).map(|i| factor * i as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    /// Molecules per unit; derived from `z` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preseed_y: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    ChemicalBasic,
    ChemicalFull,
    Broadcast,
    Randomized,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self, RunError> {
        match s {
            "chemical-basic" => Ok(Self::ChemicalBasic),
            "chemical-full" => Ok(Self::ChemicalFull),
            "br" => Ok(Self::Broadcast),
            "rn" => Ok(Self::Randomized),
            other => Err(RunError::UnknownAlgorithm(other.to_string())),
        }
    }

    pub fn is_chemical(self) -> bool {
        matches!(self, Self::ChemicalBasic | Self::ChemicalFull)
    }

    pub fn gossip(self) -> Option<GossipAlgorithm> {
        match self {
            Self::Broadcast => Some(GossipAlgorithm::Broadcast),
            Self::Randomized => Some(GossipAlgorithm::Randomized),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologySpec,
    pub algorithm: String,
    pub z: ZSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub events: Vec<TimedEvent>,
    /// Nodes absent from the start.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inactive: Vec<usize>,
    pub duration: f64,
    #[serde(default = "default_interval")]
    pub sample_interval: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_interval() -> f64 {
    0.01
}

/// Everything needed to run, resolved from a [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub graph: NetworkGraph,
    pub algorithm: Algorithm,
    pub z: Vec<f64>,
    pub protocol: ProtocolParams,
    pub mu: f64,
    pub mix: f64,
    pub schedule: EventSchedule,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, RunError> {
        let algorithm = Algorithm::parse(&self.algorithm)?;
        if !(self.duration > 0.0) || !(self.sample_interval > 0.0) {
            return Err(RunError::Schema("duration and sample_interval must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.channel.p) || !(self.channel.latency >= 0.0) {
            return Err(RunError::Schema("channel needs p in [0, 1) and latency >= 0".into()));
        }
        let graph = self.topology.build()?;
        let m = graph.node_count();
        let z = self.z.generate(m)?;
        if let Some(&n) = self.inactive.iter().find(|&&n| n >= m) {
            return Err(RunError::Schema(format!("inactive node {n} out of range")));
        }
        let schedule = EventSchedule::new(self.events.clone())
            .map_err(|e| RunError::Schema(e.to_string()))?;
        schedule
            .validate_nodes(m)
            .map_err(|e| RunError::Schema(e.to_string()))?;
        let defaults = ProtocolParams::default();
        let protocol = ProtocolParams {
            scale: self.params.scale.unwrap_or_else(|| ProtocolParams::auto_scale(&z)),
            lambda: self.params.lambda.unwrap_or(defaults.lambda),
            delta: self.params.delta.unwrap_or(defaults.delta),
            variant: if algorithm == Algorithm::ChemicalFull {
                Variant::Full
            } else {
                Variant::Basic
            },
            channel: Channel {
                loss: self.channel.p,
                latency: self.channel.latency,
            },
            preseed_y: self.params.preseed_y.unwrap_or(defaults.preseed_y),
            seed: self.seed,
        };
        if algorithm.is_chemical() {
            protocol
                .validate()
                .map_err(|e| RunError::Schema(e.to_string()))?;
        }
        let (mu, mix) = (self.params.mu.unwrap_or(2.0), self.params.mix.unwrap_or(0.5));
        if !(mu > 0.0 && mu.is_finite()) || !(mix > 0.0 && mix < 1.0) {
            return Err(RunError::Schema("gossip needs mu > 0 and mix in (0, 1)".into()));
        }
        Ok(Resolved {
            graph,
            algorithm,
            z,
            protocol,
            mu,
            mix,
            schedule,
        })
    }
}
