//! Consensus chemistries wired over a network graph.
//!
//! The basic variant gives each node a broadcast `S_i -> sum_j S_j` and a
//! drain `S_i -(|N_i|-1)-> 0`. The full variant replaces them with a
//! catalytic broadcast, a neighbor-count estimator (`X`, `Y`), a drain
//! catalyzed by the estimate, and a measurement refresh through the clamped
//! species `Z`:
//!
//! ```text
//! B'  : S_i          -> sum_j S_j + S_i      k = 1
//! D'' : S_i + Y_i    -> Y_i                  k = 1/lambda
//! X   : X_i          -> sum_j Y_j + X_i      k = 1      (X_i held at lambda)
//! Y   : Y_i          -> 0                    k = 1
//! Z   : Z_i          -> S_i + Z_i            k = delta  (Z_i held at z_i * scale)
//! A   : S_i          -> 0                    k = delta
//! ```

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::chem::{sample_grid, Channel, ChemError, Engine, MultisetState, Reaction, SpeciesId};
use crate::metrics::TrajectorySample;
use crate::topology::{NetworkGraph, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    #[default]
    Basic,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Molecules per measurement unit.
    pub scale: u64,
    /// Constant `X` abundance, in molecules.
    pub lambda: f64,
    /// Refresh rate towards the local measurement, per second.
    pub delta: f64,
    pub variant: Variant,
    pub channel: Channel,
    /// Start `Y_i` at its equilibrium `lambda |N_i|` instead of empty.
    pub preseed_y: bool,
    /// Seeds channel loss decisions.
    pub seed: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            scale: 100,
            lambda: 100.0,
            delta: 0.1,
            variant: Variant::Basic,
            channel: Channel::IDEAL,
            preseed_y: true,
            seed: 0,
        }
    }
}

impl ProtocolParams {
    pub fn basic(scale: u64) -> Self {
        Self {
            scale,
            ..Self::default()
        }
    }

    pub fn full(scale: u64, delta: f64) -> Self {
        Self {
            scale,
            delta,
            variant: Variant::Full,
            ..Self::default()
        }
    }

    /// Smallest scale giving at least 300 molecules for the smallest
    /// positive measurement.
    pub fn auto_scale(z: &[f64]) -> u64 {
        let min = z
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if min.is_finite() {
            (libm::ceil(300.0 / min) as u64).max(1)
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.scale == 0 {
            return Err(ProtocolError::InvalidParams("scale must be >= 1"));
        }
        if self.variant == Variant::Full {
            if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
                return Err(ProtocolError::InvalidParams("lambda must be >= 1 molecule"));
            }
            if !(self.delta >= 0.0) || !self.delta.is_finite() {
                return Err(ProtocolError::InvalidParams("delta must be >= 0"));
            }
        }
        Ok(())
    }

    fn lambda_molecules(&self) -> u64 {
        libm::round(self.lambda) as u64
    }

    fn molecules(&self, value: f64) -> u64 {
        libm::round(value.max(0.0) * self.scale as f64) as u64
    }
}

/// Something that happens to the network at a point in time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Event {
    SetMeasurement { node: usize, value: f64 },
    NodeLeave { node: usize },
    NodeJoin { node: usize, value: f64 },
    TransientError { node: usize, relative_error: f64, duration: f64 },
}

impl Event {
    pub fn node(&self) -> usize {
        match *self {
            Event::SetMeasurement { node, .. }
            | Event::NodeLeave { node }
            | Event::NodeJoin { node, .. }
            | Event::TransientError { node, .. } => node,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimedEvent {
    pub t: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub event: Event,
}

/// Events ordered by non-decreasing time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventSchedule {
    events: Vec<TimedEvent>,
}

impl EventSchedule {
    pub fn new(events: Vec<TimedEvent>) -> Result<Self, ProtocolError> {
        for w in events.windows(2) {
            if w[1].t < w[0].t {
                return Err(ProtocolError::EventOrder);
            }
        }
        if events.iter().any(|e| !(e.t >= 0.0)) {
            return Err(ProtocolError::EventOrder);
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[TimedEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn validate_nodes(&self, m: usize) -> Result<(), ProtocolError> {
        match self.events.iter().find(|e| e.event.node() >= m) {
            Some(e) => Err(ProtocolError::UnknownNode(e.event.node())),
            None => Ok(()),
        }
    }

    /// True measurements in force at time `t` (transient errors excluded).
    pub fn measurements_at(&self, z0: &[f64], t: f64) -> Vec<f64> {
        let mut z = z0.to_vec();
        for e in self.events.iter().take_while(|e| e.t <= t) {
            match e.event {
                Event::SetMeasurement { node, value } | Event::NodeJoin { node, value } => {
                    z[node] = value
                }
                _ => {}
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error("expected {expected} measurements, got {got}")]
    MeasurementLength { expected: usize, got: usize },
    #[error("measurement of node {0} must be finite and >= 0")]
    InvalidMeasurement(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("events must be in non-decreasing time order, at or after the current time")]
    EventOrder,
    #[error("operation requires the full variant")]
    NotFullVariant,
}

/// Basic-variant reactions: ids `2i` (broadcast) and `2i+1` (drain).
pub fn basic_reactions(g: &NetworkGraph) -> Vec<Reaction> {
    let mut out = Vec::new();
    for i in 0..g.node_count() {
        let nb = g.neighbors(i);
        let mut b = Reaction::new(2 * i, i, 1.0).reactant(SpeciesId::s(i), 1);
        for &j in &nb {
            b = b.product(SpeciesId::s(j), 1);
        }
        out.push(b);
        if nb.len() > 1 {
            out.push(Reaction::new(2 * i + 1, i, (nb.len() - 1) as f64).reactant(SpeciesId::s(i), 1));
        }
    }
    out
}

/// Full-variant reactions: ids `6i + {0..5}` for B', D'', X, Y, Z, A.
/// Z and A are omitted when `delta = 0`.
pub fn full_reactions(g: &NetworkGraph, lambda: f64, delta: f64) -> Vec<Reaction> {
    let mut out = Vec::new();
    for i in 0..g.node_count() {
        let nb = g.neighbors(i);
        let base = 6 * i;
        let s = SpeciesId::s(i);
        let y = SpeciesId::y(i);
        let x = SpeciesId::x(i);
        let mut b = Reaction::new(base, i, 1.0).reactant(s, 1).product(s, 1);
        for &j in &nb {
            b = b.product(SpeciesId::s(j), 1);
        }
        out.push(b);
        out.push(
            Reaction::new(base + 1, i, 1.0 / lambda)
                .reactant(s, 1)
                .reactant(y, 1)
                .product(y, 1),
        );
        let mut xr = Reaction::new(base + 2, i, 1.0).reactant(x, 1).product(x, 1);
        for &j in &nb {
            xr = xr.product(SpeciesId::y(j), 1);
        }
        out.push(xr);
        out.push(Reaction::new(base + 3, i, 1.0).reactant(y, 1));
        if delta > 0.0 {
            let z = SpeciesId::z(i);
            out.push(
                Reaction::new(base + 4, i, delta)
                    .reactant(z, 1)
                    .product(z, 1)
                    .product(s, 1),
            );
            out.push(Reaction::new(base + 5, i, delta).reactant(s, 1));
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Restore {
    at: f64,
    node: usize,
    relative_error: f64,
}

/// A consensus chemistry running on one global engine.
#[derive(Debug, Clone)]
pub struct ConsensusNetwork {
    graph: NetworkGraph,
    params: ProtocolParams,
    reactions: Vec<Reaction>,
    engine: Engine,
    measurements: Vec<f64>,
    active: Vec<bool>,
    /// Sum of transient relative errors currently applied per node.
    perturbation: Vec<f64>,
    /// Molecules injected by a basic-variant transient error, per node.
    injected: Vec<u64>,
    restores: Vec<Restore>,
}

fn check_measurements(g: &NetworkGraph, z: &[f64]) -> Result<(), ProtocolError> {
    if z.len() != g.node_count() {
        return Err(ProtocolError::MeasurementLength {
            expected: g.node_count(),
            got: z.len(),
        });
    }
    match z.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(i) => Err(ProtocolError::InvalidMeasurement(i)),
        None => Ok(()),
    }
}

impl ConsensusNetwork {
    pub fn build_basic(g: &NetworkGraph, z: &[f64], params: ProtocolParams) -> Result<Self, ProtocolError> {
        Self::build(
            g,
            z,
            ProtocolParams {
                variant: Variant::Basic,
                ..params
            },
        )
    }

    pub fn build_full(g: &NetworkGraph, z: &[f64], params: ProtocolParams) -> Result<Self, ProtocolError> {
        Self::build(
            g,
            z,
            ProtocolParams {
                variant: Variant::Full,
                ..params
            },
        )
    }

    /// Builds the variant selected in `params`.
    pub fn build(g: &NetworkGraph, z: &[f64], params: ProtocolParams) -> Result<Self, ProtocolError> {
        g.validate_for_consensus()?;
        check_measurements(g, z)?;
        params.validate()?;
        let m = g.node_count();
        let reactions = match params.variant {
            Variant::Basic => basic_reactions(g),
            Variant::Full => full_reactions(g, params.lambda, params.delta),
        };
        let mut init = MultisetState::new();
        for (i, &zi) in z.iter().enumerate().take(m) {
            init = init.with(SpeciesId::s(i), params.molecules(zi));
            if params.variant == Variant::Full {
                let y0 = if params.preseed_y {
                    params.lambda_molecules() * g.in_degree(i) as u64
                } else {
                    0
                };
                init = init
                    .with_clamped(SpeciesId::x(i), params.lambda_molecules())
                    .with(SpeciesId::y(i), y0)
                    .with_clamped(SpeciesId::z(i), params.molecules(zi));
            }
        }
        let mut engine = Engine::new(reactions.clone(), init)?;
        engine.set_channel(params.channel, params.seed)?;
        Ok(Self {
            graph: g.clone(),
            params,
            reactions,
            engine,
            measurements: z.to_vec(),
            active: vec![true; m],
            perturbation: vec![0.0; m],
            injected: vec![0; m],
            restores: Vec::new(),
        })
    }

    /// Marks nodes as absent from the start (before any firing). With
    /// pre-seeding, the remaining nodes' `Y` counts only reflect active
    /// in-neighbors.
    pub fn set_initially_inactive(&mut self, nodes: &[usize]) -> Result<(), ProtocolError> {
        if self.engine.firings() > 0 || self.time() > 0.0 {
            return Err(ProtocolError::EventOrder);
        }
        for &node in nodes {
            if node >= self.node_count() {
                return Err(ProtocolError::UnknownNode(node));
            }
            self.active[node] = false;
            self.engine.set_node_active(node, false)?;
        }
        if self.params.variant == Variant::Full && self.params.preseed_y {
            for i in 0..self.node_count() {
                let y0 = self.params.lambda_molecules() * self.active_in_degree(i);
                self.engine.set_count(SpeciesId::y(i), y0)?;
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn time(&self) -> f64 {
        self.engine.time()
    }

    pub fn measurements(&self) -> &[f64] {
        &self.measurements
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Average of the active nodes' current measurements.
    pub fn reference(&self) -> f64 {
        crate::metrics::active_mean(&self.measurements, &self.active)
    }

    /// `c_{S_i} / scale` for every node.
    pub fn states(&self) -> Vec<f64> {
        let scale = self.params.scale as f64;
        (0..self.node_count())
            .map(|i| self.engine.count(SpeciesId::s(i)) as f64 / scale)
            .collect()
    }

    pub fn total_mass(&self) -> u64 {
        (0..self.node_count())
            .map(|i| self.engine.count(SpeciesId::s(i)))
            .sum()
    }

    pub fn sample(&self) -> TrajectorySample {
        TrajectorySample {
            t: self.time(),
            state: self.states(),
            active: self.active.clone(),
        }
    }

    /// `c_{Y_i} / lambda`, the node's own estimate of its neighbor count.
    pub fn neighbor_estimate(&self, node: usize) -> Result<f64, ProtocolError> {
        if self.params.variant != Variant::Full {
            return Err(ProtocolError::NotFullVariant);
        }
        if node >= self.node_count() {
            return Err(ProtocolError::UnknownNode(node));
        }
        Ok(self.engine.count(SpeciesId::y(node)) as f64 / self.params.lambda)
    }

    fn active_in_degree(&self, node: usize) -> u64 {
        (0..self.node_count())
            .filter(|&j| self.active[j] && self.graph.has_edge(j, node))
            .count() as u64
    }

    fn refresh_z(&mut self, node: usize) -> Result<(), ProtocolError> {
        if self.params.variant == Variant::Full {
            let v = self.measurements[node] * (1.0 + self.perturbation[node]);
            self.engine
                .set_count(SpeciesId::z(node), self.params.molecules(v))?;
        }
        Ok(())
    }

    fn shift_s(&mut self, node: usize, delta: i64) -> Result<(), ProtocolError> {
        let s = SpeciesId::s(node);
        let c = self.engine.count(s) as i64;
        self.engine.set_count(s, (c + delta).max(0) as u64)?;
        Ok(())
    }

    /// Applies `event` at the current engine time.
    pub fn apply_event(&mut self, event: &Event) -> Result<(), ProtocolError> {
        let node = event.node();
        if node >= self.node_count() {
            return Err(ProtocolError::UnknownNode(node));
        }
        let scale = self.params.scale as f64;
        match *event {
            Event::SetMeasurement { value, .. } => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(ProtocolError::InvalidMeasurement(node));
                }
                let old = self.measurements[node];
                self.measurements[node] = value;
                match self.params.variant {
                    Variant::Full => self.refresh_z(node)?,
                    Variant::Basic => {
                        let d = libm::round(value * scale) as i64 - libm::round(old * scale) as i64;
                        self.shift_s(node, d)?;
                    }
                }
            }
            Event::NodeLeave { .. } => {
                self.active[node] = false;
                self.engine.set_node_active(node, false)?;
            }
            Event::NodeJoin { value, .. } => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(ProtocolError::InvalidMeasurement(node));
                }
                self.measurements[node] = value;
                self.active[node] = true;
                self.engine
                    .set_count(SpeciesId::s(node), self.params.molecules(value))?;
                if self.params.variant == Variant::Full {
                    self.refresh_z(node)?;
                    let y0 = if self.params.preseed_y {
                        self.params.lambda_molecules() * self.active_in_degree(node)
                    } else {
                        0
                    };
                    self.engine.set_count(SpeciesId::y(node), y0)?;
                }
                self.engine.set_node_active(node, true)?;
            }
            Event::TransientError {
                relative_error,
                duration,
                ..
            } => {
                if !relative_error.is_finite() || !(duration >= 0.0) {
                    return Err(ProtocolError::InvalidParams("transient error must be finite with duration >= 0"));
                }
                self.perturbation[node] += relative_error;
                match self.params.variant {
                    Variant::Full => self.refresh_z(node)?,
                    Variant::Basic => {
                        let d = libm::round(self.measurements[node] * relative_error * scale) as i64;
                        self.shift_s(node, d)?;
                        self.injected[node] = d.max(0) as u64;
                    }
                }
                self.restores.push(Restore {
                    at: self.time() + duration,
                    node,
                    relative_error,
                });
                self.restores
                    .sort_by(|a, b| a.at.total_cmp(&b.at).then(a.node.cmp(&b.node)));
            }
        }
        Ok(())
    }

    fn restore(&mut self, r: Restore) -> Result<(), ProtocolError> {
        self.perturbation[r.node] -= r.relative_error;
        if self.perturbation[r.node].abs() < 1e-12 {
            self.perturbation[r.node] = 0.0;
        }
        match self.params.variant {
            Variant::Full => self.refresh_z(r.node),
            Variant::Basic => {
                let d = self.injected[r.node] as i64;
                self.injected[r.node] = 0;
                self.shift_s(r.node, -d)
            }
        }
    }

    /// Runs the chemistry to `t`, ending pending transient errors on time.
    pub fn advance_to(&mut self, t: f64) -> Result<(), ProtocolError> {
        while let Some(&r) = self.restores.first() {
            if r.at > t {
                break;
            }
            self.restores.remove(0);
            self.engine.advance_to(r.at);
            self.restore(r)?;
        }
        self.engine.advance_to(t);
        Ok(())
    }

    /// Replaces the graph at the current time, keeping every count, clamp
    /// and activity flag.
    pub fn set_graph(&mut self, g: &NetworkGraph) -> Result<(), ProtocolError> {
        if g.node_count() != self.node_count() {
            return Err(ProtocolError::MeasurementLength {
                expected: self.node_count(),
                got: g.node_count(),
            });
        }
        g.validate_for_consensus()?;
        let reactions = match self.params.variant {
            Variant::Basic => basic_reactions(g),
            Variant::Full => full_reactions(g, self.params.lambda, self.params.delta),
        };
        let init = self.engine.state();
        let t = self.time();
        let mut engine = Engine::new(reactions.clone(), init)?.starting_at(t);
        engine.set_channel(self.params.channel, self.params.seed.wrapping_add(self.engine.firings()))?;
        for (i, &a) in self.active.iter().enumerate() {
            if !a {
                engine.set_node_active(i, false)?;
            }
        }
        self.engine = engine;
        self.graph = g.clone();
        self.reactions = reactions;
        Ok(())
    }

    /// Replays `schedule` while sampling on the grid
    /// `now, now + interval, ..., t_end`. Events at a grid time are applied
    /// before that sample is taken; events already in the past are skipped.
    pub fn run_observed<F: FnMut(&Self)>(
        &mut self,
        schedule: &EventSchedule,
        t_end: f64,
        interval: f64,
        mut observe: F,
    ) -> Result<(), ProtocolError> {
        if !(interval > 0.0) {
            return Err(ChemError::InvalidTime("sampling interval must be positive").into());
        }
        if !(t_end > self.time()) {
            return Err(ChemError::InvalidTime("t_end must exceed the current time").into());
        }
        schedule.validate_nodes(self.node_count())?;
        let now = self.time();
        let mut events = schedule.events().iter().skip_while(|e| e.t < now).peekable();
        for tg in sample_grid(self.time(), t_end, interval) {
            while let Some(e) = events.next_if(|e| e.t <= tg) {
                self.advance_to(e.t)?;
                self.apply_event(&e.event)?;
            }
            self.advance_to(tg)?;
            observe(self);
        }
        Ok(())
    }

    pub fn run(
        &mut self,
        schedule: &EventSchedule,
        t_end: f64,
        interval: f64,
    ) -> Result<Vec<TrajectorySample>, ProtocolError> {
        let mut out = Vec::new();
        self.run_observed(schedule, t_end, interval, |n| out.push(n.sample()))?;
        Ok(out)
    }
}
