//! Parameter grids evaluated with the analytic models and the simulator.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::results::{sort_rows, ResultRow, RowSink, Source};
use crate::analytic::{solve_fixed_point, solve_spcdc_fixed_point, SolverOptions};
use crate::error::{Error, Result};
use crate::mac::PolicyKind;
use crate::params::ScenarioParams;
use crate::sim::{self, SimConfig, SimMetrics};

/// Traffic case: data rate, generation rate and payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub data_rate: f64,
    pub lambda: f64,
    pub payload_bytes: f64,
}

impl CaseSpec {
    pub const fn new(data_rate: f64, lambda: f64, payload_bytes: f64) -> Self {
        Self {
            data_rate,
            lambda,
            payload_bytes,
        }
    }

    /// Stable label such as `6Mbps-10pps-200B`.
    pub fn id(&self) -> String {
        format!(
            "{}Mbps-{}pps-{}B",
            self.data_rate / 1e6,
            self.lambda,
            self.payload_bytes
        )
    }

    pub fn apply(&self, base: &ScenarioParams) -> ScenarioParams {
        ScenarioParams {
            data_rate: self.data_rate,
            lambda: self.lambda,
            payload_bytes: self.payload_bytes,
            ..base.clone()
        }
    }
}

/// The three traffic cases of the standard DSRC grid.
pub const STANDARD_CASES: [CaseSpec; 3] = [
    CaseSpec::new(6e6, 10.0, 200.0),
    CaseSpec::new(12e6, 2.0, 400.0),
    CaseSpec::new(24e6, 2.0, 200.0),
];

/// 10, 20, ..., 200 vehicles.
pub fn standard_vehicle_counts() -> Vec<usize> {
    (1..=20).map(|i| i * 10).collect()
}

/// A grid over vehicle counts for several cases and policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    #[serde(flatten)]
    pub base: ScenarioParams,
    pub cases: Vec<CaseSpec>,
    pub n_values: Vec<usize>,
    /// Policy ids as accepted by [`PolicyKind`]'s parser.
    pub policies: Vec<String>,
    pub sources: Vec<Source>,
    pub replications: usize,
    pub seed: u64,
    /// Simulated seconds per replication.
    pub duration: f64,
    pub warmup: f64,
    pub tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            base: ScenarioParams::default(),
            cases: STANDARD_CASES.to_vec(),
            n_values: standard_vehicle_counts(),
            policies: vec!["dot11p".into(), "spcdc".into()],
            sources: vec![Source::Analytic, Source::Simulation],
            replications: sim.replications,
            seed: sim.seed,
            duration: sim.duration,
            warmup: sim.warmup,
            tol: SolverOptions::default().tol,
        }
    }
}

impl SweepSpec {
    /// Parses `key = value` text or JSON. Scenario keys set the base point;
    /// missing sweep keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn policy_kinds(&self) -> Result<Vec<PolicyKind>> {
        self.policies.iter().map(|p| p.parse()).collect()
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            duration: self.duration,
            warmup: self.warmup,
            seed: self.seed,
            replications: self.replications,
            ..SimConfig::default()
        }
    }

    pub fn case_ids(&self) -> Vec<String> {
        self.cases.iter().map(CaseSpec::id).collect()
    }

    /// Checks the spec before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::invalid("policies", "need at least one policy"));
        }
        self.policy_kinds()?;
        if self.sources.contains(&Source::Simulation) && self.replications < 2 {
            return Err(Error::invalid(
                "replications",
                "simulation rows need at least 2 replications",
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "tolerance must be > 0"));
        }
        for case in &self.cases {
            for &n in &self.n_values {
                case.apply(&self.base).with_vehicles(n).validate()?;
            }
        }
        Ok(())
    }
}

/// Analytic row of one policy at one operating point.
pub fn analytic_row(
    case_id: &str,
    params: &ScenarioParams,
    policy: PolicyKind,
    opts: &SolverOptions,
) -> ResultRow {
    let start = Instant::now();
    let params = policy.apply(params);
    let mut row = empty_row(case_id, &params, policy, Source::Analytic);
    let solved = match policy {
        PolicyKind::Dot11p { .. } => {
            solve_fixed_point(&params, opts).map(|a| (a.pdr, a.e_s, a.e_tre, a.cs_prime))
        }
        PolicyKind::Spcdc { .. } => {
            solve_spcdc_fixed_point(&params, opts).map(|a| (a.pdr_lower, a.e_td, a.e_tre, a.c_s))
        }
    };
    match solved {
        Ok((pdr, delay, reception, density)) => {
            row.pdr = pdr;
            row.mean_delay_s = delay;
            row.mean_reception_delay_s = reception;
            row.contention_density = density;
        }
        Err(e) => row.errors = e.to_string(),
    }
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

/// Simulation row of one policy at one operating point.
pub fn simulation_row(
    case_id: &str,
    params: &ScenarioParams,
    policy: PolicyKind,
    cfg: &SimConfig,
) -> ResultRow {
    let start = Instant::now();
    let mut row = match sim::run(params, policy, cfg) {
        Ok(out) => metrics_row(case_id, params, policy, cfg, &out.metrics),
        Err(e) => {
            let mut row = empty_row(case_id, &policy.apply(params), policy, Source::Simulation);
            row.seed = Some(cfg.seed);
            row.errors = e.to_string();
            row
        }
    };
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

/// Simulation row from metrics already computed; `runtime_s` is left at 0.
pub fn metrics_row(
    case_id: &str,
    params: &ScenarioParams,
    policy: PolicyKind,
    cfg: &SimConfig,
    m: &SimMetrics,
) -> ResultRow {
    let mut row = empty_row(case_id, &policy.apply(params), policy, Source::Simulation);
    row.seed = Some(cfg.seed);
    row.pdr = m.pdr;
    row.pdr_ci = m.pdr_ci;
    row.mean_delay_s = m.mean_service;
    row.mean_reception_delay_s = m.mean_reception;
    row.contention_density = m.mean_density;
    row.overload_drops = m.overload_drops;
    row.generated = m.generated;
    row
}

fn empty_row(case_id: &str, params: &ScenarioParams, policy: PolicyKind, source: Source) -> ResultRow {
    ResultRow {
        case_id: case_id.to_string(),
        n_vehicles: params.n_vehicles,
        policy: policy.label(params),
        source,
        pdr: f64::NAN,
        pdr_ci: None,
        mean_delay_s: f64::NAN,
        mean_reception_delay_s: f64::NAN,
        contention_density: f64::NAN,
        overload_drops: 0,
        generated: 0,
        runtime_s: 0.0,
        seed: None,
        errors: String::new(),
    }
}

/// Evaluates every (case, N, policy, source) point and returns the rows
/// sorted. With a sink, each row is appended to it as soon as it exists.
/// A failing point is recorded in its `errors` column and the sweep goes on.
/// Analytic rows are skipped for the oracle variant of SpCDC, which only
/// differs from SpCDC in simulation.
pub fn run_sweep(spec: &SweepSpec, mut sink: Option<&mut RowSink>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let policies = spec.policy_kinds()?;
    let opts = SolverOptions::with_tol(spec.tol);
    let cfg = spec.sim_config();
    let mut rows = Vec::new();
    for case in &spec.cases {
        let id = case.id();
        for &n in &spec.n_values {
            let params = case.apply(&spec.base).with_vehicles(n);
            for &policy in &policies {
                for &source in &spec.sources {
                    let row = match source {
                        Source::Analytic if policy == (PolicyKind::Spcdc { oracle: true }) => continue,
                        Source::Analytic => analytic_row(&id, &params, policy, &opts),
                        Source::Simulation => simulation_row(&id, &params, policy, &cfg),
                    };
                    if let Some(sink) = sink.as_deref_mut() {
                        sink.push(&row)?;
                    }
                    rows.push(row);
                }
            }
        }
    }
    sort_rows(&mut rows, &spec.case_ids());
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_ids_are_readable() {
        let ids: Vec<String> = STANDARD_CASES.iter().map(CaseSpec::id).collect();
        assert_eq!(ids, ["6Mbps-10pps-200B", "12Mbps-2pps-400B", "24Mbps-2pps-200B"]);
    }

    #[test]
    fn analytic_grid_has_one_row_per_point() {
        let spec = SweepSpec {
            policies: vec!["dot11p".into()],
            sources: vec![Source::Analytic],
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec, None).unwrap();
        assert_eq!(rows.len(), 60);
        assert!(rows
            .iter()
            .all(|r| !r.failed() && r.pdr_ci.is_none() && r.seed.is_none()));
        assert_eq!(rows[0].case_id, "6Mbps-10pps-200B");
        assert_eq!(rows[0].n_vehicles, 10);
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let spec = SweepSpec {
            n_values: vec![],
            ..SweepSpec::default()
        };
        assert!(run_sweep(&spec, None).unwrap().is_empty());
    }

    #[test]
    fn spec_file_sets_base_and_grid() {
        let spec = SweepSpec::parse(
            "cw = 32\nn_values = [10, 20]\npolicies = [\"spcdc\"]\nreplications = 4\n\
             cases = [{ data_rate = 6e6, lambda = 10.0, payload_bytes = 200.0 }]\n",
        )
        .unwrap();
        assert_eq!(spec.base.cw, 32);
        assert_eq!(spec.n_values, [10, 20]);
        assert_eq!(spec.replications, 4);
        assert_eq!(spec.cases.len(), 1);
        assert_eq!(spec.duration, 100.0);
        assert!(SweepSpec::parse("policies = [\"aloha\"]")
            .unwrap()
            .validate()
            .is_err());
    }
}
