use chemcons_core::gossip::GossipError;
use chemcons_core::ode::OdeError;
use chemcons_core::protocol::ProtocolError;
use chemcons_core::topology::TopologyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config does not match the schema: {0}")]
    Schema(String),
    #[error("unknown algorithm `{0}` (expected chemical-basic, chemical-full, br or rn)")]
    UnknownAlgorithm(String),
    #[error("unknown topology kind `{0}`")]
    UnknownTopology(String),
    #[error("infeasible topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("protocol: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("gossip: {0}")]
    Gossip(#[from] GossipError),
    #[error("ode: {0}")]
    Ode(#[from] OdeError),
    #[error("io: {0}")]
    Io(String),
    #[error("malformed file: {0}")]
    Format(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Format(e.to_string())
    }
}

impl RunError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Schema(_) => "E_SCHEMA",
            RunError::UnknownAlgorithm(_) => "E_ALGORITHM",
            RunError::UnknownTopology(_) => "E_TOPOLOGY_KIND",
            RunError::Topology(_) => "E_TOPOLOGY",
            RunError::Protocol(_) => "E_PROTOCOL",
            RunError::Gossip(_) => "E_GOSSIP",
            RunError::Ode(_) => "E_ODE",
            RunError::Io(_) => "E_IO",
            RunError::Format(_) => "E_FORMAT",
        }
    }

    /// 1 for configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_)
            | RunError::UnknownAlgorithm(_)
            | RunError::UnknownTopology(_)
            | RunError::Topology(_) => 1,
            _ => 2,
        }
    }
}
