//! Seeded slot-level Monte Carlo simulation of a fully connected broadcast
//! network.
//!
//! Each vehicle generates one packet every `1/lambda` seconds at a phase
//! drawn uniformly over the period. Replication `r` of a run seeded with `s`
//! uses the generator stream `s ^ r`; identical inputs give bit-identical
//! metrics. Replications run in parallel and are merged in index order.

mod engine;
pub mod metrics;
pub mod trace;

use rayon::prelude::*;

pub use engine::{draw_phases, run_replication_with, ChannelState, ReplicationOutput};
pub use metrics::{reception_delay_accumulate, DensityMeter, RepMetrics, SimMetrics};
pub use trace::{Outcome, PacketRecord, SimTrace};

use crate::error::{Error, Result};
use crate::mac::PolicyKind;
use crate::params::{derive_timing, ScenarioParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulated time per replication, s.
    pub duration: f64,
    /// Packets generated before this instant are not measured, s.
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
    /// Keep the packet trace of replication 0.
    pub trace: bool,
    /// Fixed generation phases instead of random ones (one per vehicle).
    pub phases: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 100.0,
            warmup: 2.0,
            seed: 1,
            replications: 20,
            trace: false,
            phases: None,
        }
    }
}

impl SimConfig {
    fn check(&self, params: &ScenarioParams) -> Result<()> {
        if !(self.warmup >= 0.0 && self.duration > self.warmup) {
            return Err(Error::invalid("duration", "need duration > warmup >= 0"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "need at least one replication"));
        }
        if let Some(p) = &self.phases {
            if p.len() != params.n_vehicles {
                return Err(Error::invalid("phases", "need one phase per vehicle"));
            }
            if p.iter().any(|&x| !(0.0..params.period()).contains(&x)) {
                return Err(Error::invalid("phases", "phases must lie in [0, 1/lambda)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub metrics: SimMetrics,
    pub replications: Vec<RepMetrics>,
    pub trace: Option<SimTrace>,
    pub csma_violations: u64,
}

/// One replication of `policy`.
pub fn run_replication(
    params: &ScenarioParams,
    policy: PolicyKind,
    cfg: &SimConfig,
    rep: u64,
) -> Result<ReplicationOutput> {
    cfg.check(params)?;
    let params = policy.apply(params);
    let timing = derive_timing(&params)?;
    let mut mac = policy.build(&params, &timing);
    Ok(run_replication_with(
        &params,
        &timing,
        mac.as_mut(),
        cfg,
        rep,
        cfg.trace && rep == 0,
    ))
}

/// All replications of `policy`, merged.
pub fn run(params: &ScenarioParams, policy: PolicyKind, cfg: &SimConfig) -> Result<SimOutput> {
    cfg.check(params)?;
    derive_timing(&policy.apply(params))?;
    let outputs: Vec<ReplicationOutput> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(params, policy, cfg, rep))
        .collect::<Result<_>>()?;
    let reps: Vec<RepMetrics> = outputs.iter().map(|o| o.metrics.clone()).collect();
    let csma_violations = outputs.iter().map(|o| o.csma_violations).sum();
    let trace = outputs.into_iter().next().and_then(|o| o.trace);
    Ok(SimOutput {
        metrics: SimMetrics::from_replications(&reps, cfg.seed),
        replications: reps,
        trace,
        csma_violations,
    })
}
