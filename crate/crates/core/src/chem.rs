//! Artificial-chemistry engine.
//!
//! Species are integer counters addressed by `(node, kind)`. Reactions follow
//! mass-action kinetics and are executed by a deterministic next-reaction
//! scheduler: every reaction keeps one putative firing time in an indexed
//! priority queue, the least one fires, and reactions whose rate changed get
//! their remaining time rescaled by `v_old / v_new`. Inter-reaction times are
//! deterministic (`1 / v`), so identical inputs give identical firing
//! sequences.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::queue::IndexedQueue;

/// Species family within one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SpeciesKind {
    /// Consensus state.
    S,
    /// Constant neighbor-probe source.
    X,
    /// Neighbor-count accumulator.
    Y,
    /// Constant measurement source.
    Z,
    Custom(u16),
}

/// A species living in one node's multiset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpeciesId {
    pub node: usize,
    pub kind: SpeciesKind,
}

impl SpeciesId {
    pub const fn new(node: usize, kind: SpeciesKind) -> Self {
        Self { node, kind }
    }
    pub const fn s(node: usize) -> Self {
        Self::new(node, SpeciesKind::S)
    }
    pub const fn x(node: usize) -> Self {
        Self::new(node, SpeciesKind::X)
    }
    pub const fn y(node: usize) -> Self {
        Self::new(node, SpeciesKind::Y)
    }
    pub const fn z(node: usize) -> Self {
        Self::new(node, SpeciesKind::Z)
    }
}

impl fmt::Display for SpeciesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpeciesKind::S => write!(f, "S{}", self.node),
            SpeciesKind::X => write!(f, "X{}", self.node),
            SpeciesKind::Y => write!(f, "Y{}", self.node),
            SpeciesKind::Z => write!(f, "Z{}", self.node),
            SpeciesKind::Custom(c) => write!(f, "C{}_{}", c, self.node),
        }
    }
}

/// A mass-action reaction owned by one node. Reactants must be local to the
/// owner; products may live in other nodes (that is how nodes talk).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Reaction {
    pub id: usize,
    pub owner: usize,
    pub reactants: Vec<(SpeciesId, u32)>,
    pub products: Vec<(SpeciesId, u32)>,
    pub coefficient: f64,
}

impl Reaction {
    pub fn new(id: usize, owner: usize, coefficient: f64) -> Self {
        Self {
            id,
            owner,
            reactants: Vec::new(),
            products: Vec::new(),
            coefficient,
        }
    }

    pub fn reactant(mut self, species: SpeciesId, count: u32) -> Self {
        add_term(&mut self.reactants, species, count);
        self
    }

    pub fn product(mut self, species: SpeciesId, count: u32) -> Self {
        add_term(&mut self.products, species, count);
        self
    }

    /// Stoichiometric coefficient of `species` on the reactant side.
    pub fn consumed(&self, species: SpeciesId) -> u32 {
        lookup(&self.reactants, species)
    }

    pub fn produced(&self, species: SpeciesId) -> u32 {
        lookup(&self.products, species)
    }

    fn validate(&self) -> Result<(), ChemError> {
        if !(self.coefficient.is_finite() && self.coefficient > 0.0) {
            return Err(ChemError::InvalidCoefficient { reaction: self.id });
        }
        if self.reactants.iter().chain(&self.products).any(|&(_, c)| c == 0) {
            return Err(ChemError::ZeroStoichiometry { reaction: self.id });
        }
        if let Some(&(s, _)) = self.reactants.iter().find(|(s, _)| s.node != self.owner) {
            return Err(ChemError::NonLocalReactant {
                reaction: self.id,
                species: s,
            });
        }
        Ok(())
    }
}

fn add_term(side: &mut Vec<(SpeciesId, u32)>, species: SpeciesId, count: u32) {
    match side.iter_mut().find(|(s, _)| *s == species) {
        Some(term) => term.1 += count,
        None => side.push((species, count)),
    }
}

fn lookup(side: &[(SpeciesId, u32)], species: SpeciesId) -> u32 {
    side.iter().find(|(s, _)| *s == species).map_or(0, |t| t.1)
}

/// Global multiset: molecule counts plus the set of externally clamped
/// species.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultisetState {
    pub counts: BTreeMap<SpeciesId, u64>,
    pub clamped: BTreeSet<SpeciesId>,
}

impl MultisetState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, species: SpeciesId, count: u64) -> Self {
        self.counts.insert(species, count);
        self
    }

    pub fn with_clamped(mut self, species: SpeciesId, count: u64) -> Self {
        self.counts.insert(species, count);
        self.clamped.insert(species);
        self
    }

    pub fn count(&self, species: SpeciesId) -> u64 {
        self.counts.get(&species).copied().unwrap_or(0)
    }
}

/// Law of mass action: `k * prod(c_s ^ a_s)`, and 0 when some reactant pool
/// cannot cover its stoichiometric requirement.
pub fn mass_action_rate(reaction: &Reaction, state: &MultisetState) -> f64 {
    let mut v = reaction.coefficient;
    for &(s, a) in &reaction.reactants {
        let c = state.count(s);
        if c < u64::from(a) {
            return 0.0;
        }
        v *= libm::pow(c as f64, f64::from(a));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChemError {
    #[error("duplicate reaction id {0}")]
    DuplicateReaction(usize),
    #[error("reaction {reaction} has a non-positive or non-finite coefficient")]
    InvalidCoefficient { reaction: usize },
    #[error("reaction {reaction} has a zero stoichiometric count")]
    ZeroStoichiometry { reaction: usize },
    #[error("reaction {reaction} consumes {species}, which is not local to its owner")]
    NonLocalReactant { reaction: usize, species: SpeciesId },
    #[error("unknown species {0}")]
    UnknownSpecies(SpeciesId),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("invalid time arguments: {0}")]
    InvalidTime(&'static str),
    #[error("channel loss probability must lie in [0, 1] and latency must be >= 0")]
    InvalidChannel,
}

/// Abstract radio channel applied to remote products: each remote molecule
/// is dropped with probability `loss`, otherwise delivered after `latency`
/// seconds. Local products are never filtered.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Channel {
    pub loss: f64,
    pub latency: f64,
}

impl Channel {
    pub const IDEAL: Channel = Channel {
        loss: 0.0,
        latency: 0.0,
    };

    pub fn is_ideal(&self) -> bool {
        self.loss == 0.0 && self.latency == 0.0
    }
}

/// Outcome of one remote production passed through a [`Channel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery {
    Now,
    Drop,
    At(f64),
}

/// Decides the fate of a single remote molecule produced at `now`.
/// The rng is only consulted when the loss probability is positive.
pub fn channel_filter<R: Rng + ?Sized>(channel: &Channel, now: f64, rng: &mut R) -> Delivery {
    if channel.loss > 0.0 && rng.gen::<f64>() < channel.loss {
        return Delivery::Drop;
    }
    if channel.latency > 0.0 {
        Delivery::At(now + channel.latency)
    } else {
        Delivery::Now
    }
}

/// What [`Engine::execute_next`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Fired { reaction: usize, at: f64 },
    Delivered { species: SpeciesId, at: f64 },
    Exhausted,
}

/// Snapshot of all species counts, in [`Engine::species`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineSample {
    pub t: f64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone)]
struct Compiled {
    reactants: Vec<(usize, u32)>,
    products: Vec<(usize, u32)>,
    k: f64,
    owner: usize,
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    at: f64,
    seq: u64,
    species: usize,
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for InFlight {}
impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for InFlight {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// The global reaction engine of a distributed artificial chemistry.
#[derive(Debug, Clone)]
pub struct Engine {
    species: Vec<SpeciesId>,
    index: BTreeMap<SpeciesId, usize>,
    counts: Vec<u64>,
    clamp: Vec<Option<u64>>,
    reactions: Vec<Compiled>,
    ids: Vec<usize>,
    rates: Vec<f64>,
    queue: IndexedQueue,
    /// species -> reactions whose rate reads it
    readers: Vec<Vec<usize>>,
    /// reaction -> reactions to refresh after it fires (itself excluded)
    affected: Vec<Vec<usize>>,
    by_owner: Vec<Vec<usize>>,
    active: Vec<bool>,
    time: f64,
    channel: Channel,
    rng: ChaCha8Rng,
    in_flight: BinaryHeap<InFlight>,
    seq: u64,
    firings: u64,
}

impl Engine {
    /// Compiles the reactions and schedules every one at `1 / v_r`
    /// (or never, when `v_r = 0`). Species mentioned only in `initial` or
    /// only in reactions are both registered; missing counts start at 0.
    pub fn new(reactions: Vec<Reaction>, initial: MultisetState) -> Result<Self, ChemError> {
        let mut seen = BTreeSet::new();
        for r in &reactions {
            r.validate()?;
            if !seen.insert(r.id) {
                return Err(ChemError::DuplicateReaction(r.id));
            }
        }
        let mut all: BTreeSet<SpeciesId> = initial.counts.keys().copied().collect();
        all.extend(initial.clamped.iter().copied());
        for r in &reactions {
            all.extend(r.reactants.iter().chain(&r.products).map(|t| t.0));
        }
        let species: Vec<SpeciesId> = all.into_iter().collect();
        let index: BTreeMap<SpeciesId, usize> =
            species.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let counts: Vec<u64> = species.iter().map(|&s| initial.count(s)).collect();
        let clamp: Vec<Option<u64>> = species
            .iter()
            .map(|s| initial.clamped.contains(s).then(|| initial.count(*s)))
            .collect();

        let nodes = species
            .iter()
            .map(|s| s.node + 1)
            .chain(reactions.iter().map(|r| r.owner + 1))
            .max()
            .unwrap_or(0);

        let compiled: Vec<Compiled> = reactions
            .iter()
            .map(|r| Compiled {
                reactants: r.reactants.iter().map(|&(s, a)| (index[&s], a)).collect(),
                products: r.products.iter().map(|&(s, b)| (index[&s], b)).collect(),
                k: r.coefficient,
                owner: r.owner,
            })
            .collect();

        let mut readers = vec![Vec::new(); species.len()];
        let mut by_owner = vec![Vec::new(); nodes];
        for (ri, r) in compiled.iter().enumerate() {
            for &(s, _) in &r.reactants {
                readers[s].push(ri);
            }
            by_owner[r.owner].push(ri);
        }
        let affected = compiled
            .iter()
            .enumerate()
            .map(|(ri, r)| {
                let mut set = BTreeSet::new();
                for &(s, _) in r.reactants.iter().chain(&r.products) {
                    set.extend(readers[s].iter().copied());
                }
                set.remove(&ri);
                set.into_iter().collect()
            })
            .collect();

        let mut engine = Self {
            species,
            index,
            counts,
            clamp,
            ids: reactions.iter().map(|r| r.id).collect(),
            rates: vec![0.0; compiled.len()],
            queue: IndexedQueue::new(Vec::new()),
            reactions: compiled,
            readers,
            affected,
            by_owner,
            active: vec![true; nodes],
            time: 0.0,
            channel: Channel::IDEAL,
            rng: ChaCha8Rng::seed_from_u64(0),
            in_flight: BinaryHeap::new(),
            seq: 0,
            firings: 0,
        };
        let mut times = Vec::with_capacity(engine.reactions.len());
        for ri in 0..engine.reactions.len() {
            let v = engine.compute_rate(ri);
            engine.rates[ri] = v;
            times.push(if v > 0.0 { 1.0 / v } else { f64::INFINITY });
        }
        engine.queue = IndexedQueue::new(times);
        Ok(engine)
    }

    /// Moves a freshly built engine's clock to `t0`, shifting every
    /// putative time with it.
    pub fn starting_at(mut self, t0: f64) -> Self {
        let times = (0..self.reactions.len())
            .map(|ri| self.queue.time(ri) - self.time + t0)
            .collect();
        self.queue = IndexedQueue::new(times);
        self.time = t0;
        self
    }

    /// Installs a lossy/latent channel for remote products. The seed only
    /// drives loss decisions; the scheduler itself never draws randomness.
    pub fn set_channel(&mut self, channel: Channel, seed: u64) -> Result<(), ChemError> {
        if !(0.0..=1.0).contains(&channel.loss) || !(channel.latency >= 0.0) {
            return Err(ChemError::InvalidChannel);
        }
        self.channel = channel;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn firings(&self) -> u64 {
        self.firings
    }

    pub fn species(&self) -> &[SpeciesId] {
        &self.species
    }

    pub fn node_count(&self) -> usize {
        self.active.len()
    }

    pub fn species_index(&self, species: SpeciesId) -> Option<usize> {
        self.index.get(&species).copied()
    }

    pub fn count(&self, species: SpeciesId) -> u64 {
        self.species_index(species).map_or(0, |i| self.counts[i])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Current mass-action rate of the reaction with external id `id`.
    pub fn rate(&self, id: usize) -> Option<f64> {
        self.position(id).map(|ri| self.rates[ri])
    }

    /// Putative firing time of the reaction with external id `id`.
    pub fn putative_time(&self, id: usize) -> Option<f64> {
        self.position(id).map(|ri| self.queue.time(ri))
    }

    /// Least putative time over reactions and in-flight deliveries.
    pub fn next_time(&self) -> f64 {
        let r = self.queue.peek().map_or(f64::INFINITY, |p| p.1);
        let d = self.in_flight.peek().map_or(f64::INFINITY, |p| p.at);
        r.min(d)
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.active.get(node).copied().unwrap_or(false)
    }

    pub fn state(&self) -> MultisetState {
        let mut st = MultisetState::new();
        for (i, &s) in self.species.iter().enumerate() {
            st.counts.insert(s, self.counts[i]);
            if self.clamp[i].is_some() {
                st.clamped.insert(s);
            }
        }
        st
    }

    fn position(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    fn compute_rate(&self, ri: usize) -> f64 {
        let r = &self.reactions[ri];
        if !self.active[r.owner] {
            return 0.0;
        }
        let mut v = r.k;
        for &(s, a) in &r.reactants {
            let c = self.counts[s];
            if c < u64::from(a) {
                return 0.0;
            }
            v *= if a == 1 {
                c as f64
            } else {
                libm::pow(c as f64, f64::from(a))
            };
        }
        v
    }

    /// Recomputes the rate of `ri` and rescales its putative time.
    fn refresh(&mut self, ri: usize) {
        let old = self.rates[ri];
        let new = self.compute_rate(ri);
        if new == old {
            return;
        }
        self.rates[ri] = new;
        let t = if new == 0.0 {
            f64::INFINITY
        } else if old == 0.0 {
            self.time + 1.0 / new
        } else {
            (old / new) * (self.queue.time(ri) - self.time) + self.time
        };
        self.queue.update(ri, t);
    }

    fn refresh_readers(&mut self, species: usize) {
        for j in 0..self.readers[species].len() {
            let ri = self.readers[species][j];
            self.refresh(ri);
        }
    }

    /// Executes the next reaction or in-flight delivery.
    pub fn execute_next(&mut self) -> Step {
        let (ri, tr) = match self.queue.peek() {
            Some(p) => p,
            None => (usize::MAX, f64::INFINITY),
        };
        let td = self.in_flight.peek().map_or(f64::INFINITY, |p| p.at);
        if tr == f64::INFINITY && td == f64::INFINITY {
            return Step::Exhausted;
        }
        if td <= tr {
            let d = self.in_flight.pop().expect("peeked");
            self.time = d.at;
            let node = self.species[d.species].node;
            if self.active[node] {
                self.counts[d.species] += 1;
                if let Some(v) = self.clamp[d.species] {
                    self.counts[d.species] = v;
                }
                self.refresh_readers(d.species);
            }
            return Step::Delivered {
                species: self.species[d.species],
                at: d.at,
            };
        }

        self.time = tr;
        self.firings += 1;
        let owner = self.reactions[ri].owner;
        for k in 0..self.reactions[ri].reactants.len() {
            let (s, a) = self.reactions[ri].reactants[k];
            self.counts[s] -= u64::from(a);
        }
        for k in 0..self.reactions[ri].products.len() {
            let (s, b) = self.reactions[ri].products[k];
            let node = self.species[s].node;
            if node == owner {
                self.counts[s] += u64::from(b);
                continue;
            }
            if !self.active[node] {
                continue;
            }
            if self.channel.is_ideal() {
                self.counts[s] += u64::from(b);
                continue;
            }
            for _ in 0..b {
                match channel_filter(&self.channel, tr, &mut self.rng) {
                    Delivery::Now => self.counts[s] += 1,
                    Delivery::Drop => {}
                    Delivery::At(at) => {
                        self.seq += 1;
                        self.in_flight.push(InFlight {
                            at,
                            seq: self.seq,
                            species: s,
                        });
                    }
                }
            }
        }
        for k in 0..self.reactions[ri].reactants.len() {
            let s = self.reactions[ri].reactants[k].0;
            if let Some(v) = self.clamp[s] {
                self.counts[s] = v;
            }
        }
        for k in 0..self.reactions[ri].products.len() {
            let s = self.reactions[ri].products[k].0;
            if let Some(v) = self.clamp[s] {
                self.counts[s] = v;
            }
        }
        for j in 0..self.affected[ri].len() {
            let other = self.affected[ri][j];
            self.refresh(other);
        }
        let v = self.compute_rate(ri);
        self.rates[ri] = v;
        let next = if v > 0.0 {
            1.0 / v + self.time
        } else {
            f64::INFINITY
        };
        self.queue.update(ri, next);
        Step::Fired {
            reaction: self.ids[ri],
            at: tr,
        }
    }

    /// Executes every event with time `<= t`, then moves the clock to `t`.
    pub fn advance_to(&mut self, t: f64) {
        while self.next_time() <= t {
            if let Step::Exhausted = self.execute_next() {
                break;
            }
        }
        if t > self.time {
            self.time = t;
        }
    }

    /// Runs to `t_end`, sampling every `interval` seconds on the grid
    /// `t0 + k * interval` plus a final sample exactly at `t_end`.
    /// Between events the state is held constant.
    pub fn run_until(&mut self, t_end: f64, interval: f64) -> Result<Vec<EngineSample>, ChemError> {
        let mut out = Vec::new();
        self.run_sampled(t_end, interval, |e| {
            out.push(EngineSample {
                t: e.time,
                counts: e.counts.clone(),
            })
        })?;
        Ok(out)
    }

    /// Like [`Engine::run_until`] but hands each grid point to `observe`.
    pub fn run_sampled<F: FnMut(&Engine)>(
        &mut self,
        t_end: f64,
        interval: f64,
        mut observe: F,
    ) -> Result<(), ChemError> {
        if !(interval > 0.0) {
            return Err(ChemError::InvalidTime("sampling interval must be positive"));
        }
        if !(t_end > self.time) {
            return Err(ChemError::InvalidTime("t_end must exceed the current time"));
        }
        for t in sample_grid(self.time, t_end, interval) {
            self.advance_to(t);
            observe(self);
        }
        Ok(())
    }

    /// Holds `species` at `value`: the count is set now and restored after
    /// every firing. Readers are rescheduled with the usual rescaling rule.
    pub fn set_clamped(&mut self, species: SpeciesId, value: u64) -> Result<(), ChemError> {
        let i = self
            .species_index(species)
            .ok_or(ChemError::UnknownSpecies(species))?;
        self.clamp[i] = Some(value);
        self.counts[i] = value;
        self.refresh_readers(i);
        Ok(())
    }

    pub fn release_clamp(&mut self, species: SpeciesId) -> Result<(), ChemError> {
        let i = self
            .species_index(species)
            .ok_or(ChemError::UnknownSpecies(species))?;
        self.clamp[i] = None;
        Ok(())
    }

    pub fn is_clamped(&self, species: SpeciesId) -> bool {
        self.species_index(species)
            .is_some_and(|i| self.clamp[i].is_some())
    }

    /// Overwrites a count from outside the chemistry (for clamped species
    /// the clamp value moves too).
    pub fn set_count(&mut self, species: SpeciesId, value: u64) -> Result<(), ChemError> {
        let i = self
            .species_index(species)
            .ok_or(ChemError::UnknownSpecies(species))?;
        if self.clamp[i].is_some() {
            self.clamp[i] = Some(value);
        }
        self.counts[i] = value;
        self.refresh_readers(i);
        Ok(())
    }

    /// Freezes (`false`) or thaws (`true`) every reaction owned by `node`.
    /// While frozen, remote products addressed to the node are dropped.
    pub fn set_node_active(&mut self, node: usize, active: bool) -> Result<(), ChemError> {
        if node >= self.active.len() {
            return Err(ChemError::UnknownNode(node));
        }
        self.active[node] = active;
        for j in 0..self.by_owner[node].len() {
            let ri = self.by_owner[node][j];
            self.refresh(ri);
        }
        Ok(())
    }
}

/// `t0, t0 + dt, ...` strictly below `t_end`, then `t_end` itself.
pub fn sample_grid(t0: f64, t_end: f64, interval: f64) -> impl Iterator<Item = f64> {
    let n = libm::floor((t_end - t0) / interval + 1e-9) as u64;
    let last_on_grid = t0 + n as f64 * interval;
    let n = if libm::fabs(last_on_grid - t_end) <= 1e-9 * interval.max(1.0) {
        n
    } else {
        n + 1
    };
    (0..=n).map(move |k| if k == n { t_end } else { t0 + k as f64 * interval })
}
