//! Randomized (RN) and broadcast (BR) gossip on asynchronous Poisson clocks.
//!
//! All nodes share one global clock ticking at rate `M * mu`; each tick
//! wakes a uniformly chosen node. Inactive nodes neither tick nor listen.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chem::sample_grid;
use crate::metrics::TrajectorySample;
use crate::protocol::{Event, EventSchedule, ProtocolError};
use crate::topology::{NetworkGraph, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GossipAlgorithm {
    /// Pairwise averaging with one random neighbor.
    Randomized,
    /// The ticking node pushes its value to every neighbor.
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GossipError {
    #[error("invalid gossip parameters: {0}")]
    InvalidParams(&'static str),
    #[error("expected {expected} initial values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Schedule(#[from] ProtocolError),
}

#[derive(Debug, Clone)]
pub struct GossipState {
    pub x: Vec<f64>,
    pub active: Vec<bool>,
    pub mu: f64,
    pub mix: f64,
    rng: ChaCha8Rng,
    time: f64,
    next_tick: f64,
    ticks: u64,
}

impl GossipState {
    pub fn new(z: &[f64], mu: f64, mix: f64, seed: u64) -> Result<Self, GossipError> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(GossipError::InvalidParams("mu must be positive"));
        }
        if !(mix > 0.0 && mix < 1.0) {
            return Err(GossipError::InvalidParams("mix must lie in (0, 1)"));
        }
        if z.is_empty() || z.iter().any(|v| !v.is_finite()) {
            return Err(GossipError::InvalidParams("initial values must be finite"));
        }
        let mut s = Self {
            x: z.to_vec(),
            active: vec![true; z.len()],
            mu,
            mix,
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: 0.0,
            next_tick: 0.0,
            ticks: 0,
        };
        s.next_tick = s.draw_gap();
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    fn draw_gap(&mut self) -> f64 {
        let rate = self.mu * self.x.len() as f64;
        let u: f64 = self.rng.gen();
        -libm::log1p(-u) / rate
    }

    fn active_neighbors(&self, g: &NetworkGraph, node: usize) -> Vec<usize> {
        g.neighbors(node)
            .into_iter()
            .filter(|&j| self.active[j])
            .collect()
    }

    /// Averages `node` with one uniformly chosen active neighbor; returns
    /// the partner.
    pub fn rn_tick(&mut self, g: &NetworkGraph, node: usize) -> Option<usize> {
        let nb = self.active_neighbors(g, node);
        if nb.is_empty() || !self.active[node] {
            return None;
        }
        let j = nb[self.rng.gen_range(0..nb.len())];
        let avg = (self.x[node] + self.x[j]) / 2.0;
        self.x[node] = avg;
        self.x[j] = avg;
        Some(j)
    }

    /// Every active neighbor moves to `mix * x_j + (1 - mix) * x_node`.
    pub fn br_tick(&mut self, g: &NetworkGraph, node: usize) {
        if !self.active[node] {
            return;
        }
        let xi = self.x[node];
        for j in self.active_neighbors(g, node) {
            self.x[j] = self.mix * self.x[j] + (1.0 - self.mix) * xi;
        }
    }

    pub fn tick(&mut self, g: &NetworkGraph, algo: GossipAlgorithm, node: usize) {
        match algo {
            GossipAlgorithm::Randomized => {
                self.rn_tick(g, node);
            }
            GossipAlgorithm::Broadcast => self.br_tick(g, node),
        }
    }

    /// Processes every global tick up to `t`.
    pub fn advance_to(&mut self, g: &NetworkGraph, algo: GossipAlgorithm, t: f64) {
        while self.next_tick <= t {
            self.time = self.next_tick;
            let node = self.rng.gen_range(0..self.x.len());
            self.ticks += 1;
            self.tick(g, algo, node);
            self.next_tick = self.time + self.draw_gap();
        }
        if t > self.time {
            self.time = t;
        }
    }

    /// Gossip has no measurement species: events overwrite the state.
    pub fn apply_event(&mut self, event: &Event) -> Result<(), GossipError> {
        let node = event.node();
        if node >= self.x.len() {
            return Err(GossipError::UnknownNode(node));
        }
        match *event {
            Event::SetMeasurement { value, .. } => self.x[node] = value,
            Event::NodeLeave { .. } => self.active[node] = false,
            Event::NodeJoin { value, .. } => {
                self.active[node] = true;
                self.x[node] = value;
            }
            Event::TransientError { relative_error, .. } => {
                self.x[node] *= 1.0 + relative_error;
            }
        }
        Ok(())
    }

    pub fn sample(&self) -> TrajectorySample {
        TrajectorySample {
            t: self.time,
            state: self.x.clone(),
            active: self.active.clone(),
        }
    }
}

/// Runs a gossip baseline from `z`, replaying `schedule` and sampling on
/// `0, interval, ..., duration`.
#[allow(clippy::too_many_arguments)]
pub fn run_gossip(
    g: &NetworkGraph,
    z: &[f64],
    algo: GossipAlgorithm,
    mu: f64,
    mix: f64,
    schedule: &EventSchedule,
    duration: f64,
    interval: f64,
    seed: u64,
) -> Result<Vec<TrajectorySample>, GossipError> {
    if z.len() != g.node_count() {
        return Err(GossipError::Length {
            expected: g.node_count(),
            got: z.len(),
        });
    }
    let mut st = GossipState::new(z, mu, mix, seed)?;
    run_gossip_from(&mut st, g, algo, schedule, duration, interval)
}

/// Like [`run_gossip`] but continues from a prepared state (for example
/// with some nodes initially inactive).
pub fn run_gossip_from(
    st: &mut GossipState,
    g: &NetworkGraph,
    algo: GossipAlgorithm,
    schedule: &EventSchedule,
    duration: f64,
    interval: f64,
) -> Result<Vec<TrajectorySample>, GossipError> {
    g.validate_for_consensus()?;
    if st.x.len() != g.node_count() {
        return Err(GossipError::Length {
            expected: g.node_count(),
            got: st.x.len(),
        });
    }
    if !(duration > st.time) || !(interval > 0.0) {
        return Err(GossipError::InvalidParams("duration and interval must be positive"));
    }
    schedule.validate_nodes(g.node_count())?;
    let now = st.time;
    let mut events = schedule.events().iter().skip_while(|e| e.t < now).peekable();
    let mut out = Vec::new();
    for tg in sample_grid(now, duration, interval) {
        while let Some(e) = events.next_if(|e| e.t <= tg) {
            st.advance_to(g, algo, e.t);
            st.apply_event(&e.event)?;
        }
        st.advance_to(g, algo, tg);
        out.push(st.sample());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::make_complete;

    #[test]
    fn rn_pair_averages() {
        let g = make_complete(2).unwrap();
        let mut s = GossipState::new(&[500.0, 300.0], 2.0, 0.5, 1).unwrap();
        assert_eq!(s.rn_tick(&g, 0), Some(1));
        assert_eq!(s.x, vec![400.0, 400.0]);
    }

    #[test]
    fn br_star_moves_leaves_halfway() {
        let g = NetworkGraph::from_edges(4, &[(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)]).unwrap();
        let mut s = GossipState::new(&[10.0, 0.0, 2.0, 4.0], 2.0, 0.5, 1).unwrap();
        s.br_tick(&g, 0);
        assert_eq!(s.x, vec![10.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn br_shifts_the_mean() {
        let g = NetworkGraph::from_edges(3, &[(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap();
        let mut s = GossipState::new(&[0.0, 0.0, 30.0], 2.0, 0.5, 1).unwrap();
        s.br_tick(&g, 2);
        assert_eq!(s.x.iter().sum::<f64>() / 3.0, 15.0);
    }

    #[test]
    fn bad_params() {
        assert!(GossipState::new(&[1.0], 0.0, 0.5, 0).is_err());
        assert!(GossipState::new(&[1.0], 1.0, 1.0, 0).is_err());
    }
}
