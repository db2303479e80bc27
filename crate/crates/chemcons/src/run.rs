//! Scenario execution and run records.

use std::time::{SystemTime, UNIX_EPOCH};

use chemcons_core::crn::{analyze, equivalent_unicast_form, AnalysisReport};
use chemcons_core::gossip::{run_gossip_from, GossipState};
use chemcons_core::metrics::{self, TrajectorySample};
use chemcons_core::ode::{integrate, LinearModel};
use chemcons_core::protocol::{ConsensusNetwork, EventSchedule, Variant};
use chemcons_core::topology::algebraic_connectivity;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::RunError;

pub const NMSE_DEFINITION: &str =
    "mean over active nodes of (x_i - z_avg)^2, divided by z_avg^2; z_avg = mean of the active nodes' current measurements";

pub const CONVERGENCE_THRESHOLD: f64 = 0.01;

/// Metric series aligned with the samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub t: Vec<f64>,
    pub nmse: Vec<f64>,
    pub deviation: Vec<f64>,
    /// Per-node mean squared error in measurement units.
    pub mse: Vec<f64>,
    pub convergence_time: Option<f64>,
    pub final_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sim,
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: &'static str,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
}

impl Provenance {
    pub fn now(seed: u64) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        Self {
            seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub source: Source,
    pub samples: Vec<TrajectorySample>,
    pub metrics: Metrics,
    /// Unicast-equivalent network analysis; chemical algorithms only.
    pub analysis: Option<AnalysisReport>,
    pub lambda2: f64,
    pub provenance: Provenance,
}

/// What goes into `record.json`; the series live in the CSV files.
#[derive(Debug, Clone, Serialize)]
pub struct RecordSummary<'a> {
    pub config: &'a ScenarioConfig,
    pub source: Source,
    pub nmse_definition: &'static str,
    pub convergence_threshold: f64,
    pub convergence_time: Option<f64>,
    pub final_mean: f64,
    pub final_nmse: Option<f64>,
    pub samples: usize,
    pub lambda2: f64,
    pub analysis: Option<&'a AnalysisReport>,
    pub provenance: &'a Provenance,
}

impl RunRecord {
    pub fn summary(&self) -> RecordSummary<'_> {
        RecordSummary {
            config: &self.config,
            source: self.source,
            nmse_definition: NMSE_DEFINITION,
            convergence_threshold: CONVERGENCE_THRESHOLD,
            convergence_time: self.metrics.convergence_time,
            final_mean: self.metrics.final_mean,
            final_nmse: self.metrics.nmse.last().copied(),
            samples: self.samples.len(),
            lambda2: self.lambda2,
            analysis: self.analysis.as_ref(),
            provenance: &self.provenance,
        }
    }
}

/// Computes every metric from the samples alone, so persisted trajectories
/// reproduce the in-run values exactly.
pub fn metrics_from_samples(
    samples: &[TrajectorySample],
    z0: &[f64],
    schedule: &EventSchedule,
) -> Metrics {
    let mut m = Metrics {
        t: Vec::with_capacity(samples.len()),
        nmse: Vec::with_capacity(samples.len()),
        deviation: Vec::with_capacity(samples.len()),
        mse: Vec::with_capacity(samples.len()),
        convergence_time: None,
        final_mean: f64::NAN,
    };
    for s in samples {
        let z = schedule.measurements_at(z0, s.t);
        m.t.push(s.t);
        m.nmse.push(metrics::nmse(&s.state, &s.active, &z));
        m.deviation.push(metrics::deviation(&s.state, &s.active));
        m.mse.push(metrics::mse(&s.state, &s.active, &z));
    }
    m.convergence_time = metrics::convergence_time(&m.t, &m.nmse, CONVERGENCE_THRESHOLD);
    m.final_mean = samples.last().map_or(f64::NAN, |s| s.active_mean());
    m
}

fn mask_inactive(samples: &mut [TrajectorySample]) {
    for s in samples {
        for (x, &a) in s.state.iter_mut().zip(&s.active) {
            if !a {
                *x = f64::NAN;
            }
        }
    }
}

/// Builds the topology and the chemistry (or gossip state), replays the
/// events, samples, and computes metrics.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunRecord, RunError> {
    let r = config.resolve()?;
    let mut samples = if let Some(algo) = r.algorithm.gossip() {
        let mut st = GossipState::new(&r.z, r.mu, r.mix, config.seed)?;
        for &n in &config.inactive {
            st.active[n] = false;
        }
        run_gossip_from(&mut st, &r.graph, algo, &r.schedule, config.duration, config.sample_interval)?
    } else {
        let mut net = ConsensusNetwork::build(&r.graph, &r.z, r.protocol)?;
        net.set_initially_inactive(&config.inactive)?;
        net.run(&r.schedule, config.duration, config.sample_interval)?
    };
    mask_inactive(&mut samples);
    let metrics = metrics_from_samples(&samples, &r.z, &r.schedule);
    let analysis = r
        .algorithm
        .is_chemical()
        .then(|| analyze(&equivalent_unicast_form(&r.graph)));
    Ok(RunRecord {
        config: config.clone(),
        source: Source::Sim,
        samples,
        metrics,
        analysis,
        lambda2: algebraic_connectivity(&r.graph)?,
        provenance: Provenance::now(config.seed),
    })
}

/// Mean-field trajectory of the scenario from `c(0) = z`. Events are not
/// replayed. The full variant uses its `delta`, everything else `delta = 0`.
pub fn run_oracle(config: &ScenarioConfig) -> Result<RunRecord, RunError> {
    let r = config.resolve()?;
    let delta = match r.protocol.variant {
        Variant::Full if r.algorithm.is_chemical() => r.protocol.delta,
        _ => 0.0,
    };
    let model = LinearModel::from_graph(&r.graph, delta, r.z.clone(), r.z.clone())?;
    let dt = model.max_step().min(config.sample_interval);
    let m = r.graph.node_count();
    let samples: Vec<TrajectorySample> = integrate(&model, config.duration, dt, config.sample_interval)?
        .into_iter()
        .map(|s| TrajectorySample {
            t: s.t,
            state: s.state,
            active: vec![true; m],
        })
        .collect();
    let metrics = metrics_from_samples(&samples, &r.z, &EventSchedule::default());
    Ok(RunRecord {
        config: config.clone(),
        source: Source::Ode,
        samples,
        metrics,
        analysis: None,
        lambda2: algebraic_connectivity(&r.graph)?,
        provenance: Provenance::now(config.seed),
    })
}

/// Returns a copy of `config` with one parameter overridden.
pub fn with_param(config: &ScenarioConfig, param: &str, value: f64) -> Result<ScenarioConfig, RunError> {
    let mut c = config.clone();
    let whole = |v: f64| -> Result<u64, RunError> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as u64)
        } else {
            Err(RunError::Schema(format!("`{param}` needs a non-negative integer, got {v}")))
        }
    };
    match param {
        "delta" => c.params.delta = Some(value),
        "lambda" => c.params.lambda = Some(value),
        "scale" => c.params.scale = Some(whole(value)?),
        "mu" => c.params.mu = Some(value),
        "mix" => c.params.mix = Some(value),
        "p" => c.channel.p = value,
        "latency" => c.channel.latency = value,
        "seed" => c.seed = whole(value)?,
        "duration" => c.duration = value,
        other => return Err(RunError::Schema(format!("unknown sweep parameter `{other}`"))),
    }
    Ok(c)
}

/// Runs one scenario per value on its own thread; results keep the order
/// of `values`.
pub fn sweep(
    config: &ScenarioConfig,
    param: &str,
    values: &[f64],
) -> Result<Vec<(f64, RunRecord)>, RunError> {
    let configs = values
        .iter()
        .map(|&v| with_param(config, param, v))
        .collect::<Result<Vec<_>, _>>()?;
    std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_scenario(c)))
            .collect();
        values
            .iter()
            .zip(handles)
            .map(|(&v, h)| Ok((v, h.join().expect("sweep worker panicked")?)))
            .collect()
    })
}
