//! Parameter sweeps and the topology study.
//!
//! Trial `i` of every scenario uses seed `base_seed + i`, so records are
//! paired across policies, axis values and graphs. Trials run on a bounded
//! worker pool; results come back in job order regardless of scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm_graph::{TopologyConfig, TopologySpec};
use crate::engine::run_trial;
use crate::error::{Error, Result};
use crate::metrics::{efficiency_ratio, TrialRecord};
use crate::policies::PolicyKind;
use crate::scenario::{ConflictLevel, ScenarioConfig};

pub const FLEET_PRESETS: [&str; 5] = ["5/15", "5/50", "5/100", "6/60", "10/100"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PNew,
    WindowW,
    Fleet,
    ConflictLevel,
    Topology,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::PNew => "p_new",
            SweepAxis::WindowW => "window_w",
            SweepAxis::Fleet => "fleet",
            SweepAxis::ConflictLevel => "conflict_level",
            SweepAxis::Topology => "topology",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Text(s) => f.write_str(s),
        }
    }
}

fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::COMPARED.to_vec()
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<AxisValue>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    /// First trial seed; defaults to `base.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(self.base.seed)
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.trials, &self.policies)?;
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one value".into()));
        }
        self.scenarios().map(|_| ())
    }

    /// One scenario per axis value, in order.
    pub fn scenarios(&self) -> Result<Vec<ScenarioConfig>> {
        self.values.iter().map(|v| apply_axis(&self.base, self.axis, v)).collect()
    }
}

fn validate_common(trials: usize, policies: &[PolicyKind]) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if policies.is_empty() {
        return Err(Error::InvalidConfig("no policies selected".into()));
    }
    if let Some(p) = policies.iter().find(|p| !p.is_available()) {
        return Err(Error::PolicyUnavailable(p.as_str().into()));
    }
    Ok(())
}

/// Parses a topology entry; `directed-N` names stage `N` of the directed
/// removal study.
pub fn parse_topology(s: &str) -> Result<TopologyConfig> {
    if let Some(n) = s.trim().strip_prefix("directed-") {
        let stages = TopologySpec::directed_sequence();
        let i: usize = n.parse().map_err(|_| Error::InvalidTopology(format!("bad stage `{s}`")))?;
        let spec = stages
            .get(i.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::InvalidTopology(format!("stage {i} outside 1..={}", stages.len())))?;
        return Ok(TopologyConfig::named(spec, format!("directed-{i}")));
    }
    Ok(TopologyConfig::new(TopologySpec::from_str(s)?))
}

pub fn apply_axis(base: &ScenarioConfig, axis: SweepAxis, value: &AxisValue) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    let wrong = || Error::InvalidConfig(format!("value `{value}` does not fit axis {axis}"));
    match (axis, value) {
        (SweepAxis::PNew, AxisValue::Number(x)) => cfg.p_new = *x,
        (SweepAxis::WindowW, AxisValue::Number(x)) => cfg.window_nominal = *x,
        (SweepAxis::Fleet, AxisValue::Text(s)) => cfg.set_fleet(s)?,
        (SweepAxis::ConflictLevel, AxisValue::Text(s)) => {
            cfg.conflict_level = s.parse::<ConflictLevel>()?;
            cfg.conflict_box = None;
        }
        (SweepAxis::Topology, AxisValue::Text(s)) => cfg.topology = parse_topology(s)?,
        _ => return Err(wrong()),
    }
    cfg.validate()?;
    cfg.comm_graph()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyStudySpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Defaults to the five directed stages followed by complete, star,
    /// ring and empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topologies: Option<Vec<String>>,
    #[serde(default)]
    pub base: ScenarioConfig,
}

impl TopologyStudySpec {
    pub fn new(base: ScenarioConfig, trials: usize) -> Self {
        Self { trials, policies: default_policies(), seed: None, output: None, topologies: None, base }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(self.base.seed)
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.trials, &self.policies)?;
        self.scenarios().map(|_| ())
    }

    pub fn topology_configs(&self) -> Result<Vec<TopologyConfig>> {
        match &self.topologies {
            Some(names) => names.iter().map(|s| parse_topology(s)).collect(),
            None => Ok(default_study_topologies()),
        }
    }

    pub fn scenarios(&self) -> Result<Vec<ScenarioConfig>> {
        self.topology_configs()?
            .into_iter()
            .map(|t| {
                let cfg = ScenarioConfig { topology: t, ..self.base.clone() };
                cfg.validate()?;
                cfg.comm_graph()?;
                Ok(cfg)
            })
            .collect()
    }
}

pub fn default_study_topologies() -> Vec<TopologyConfig> {
    let directed = TopologySpec::directed_sequence()
        .into_iter()
        .enumerate()
        .map(|(i, s)| TopologyConfig::named(s, format!("directed-{}", i + 1)));
    let undirected = TopologySpec::undirected_set().into_iter().map(TopologyConfig::new);
    directed.chain(undirected).collect()
}

/// Runs every `(scenario, policy, trial)` combination. Output order is
/// scenario-major, then policy, then trial.
pub fn run_grid(
    scenarios: &[ScenarioConfig],
    policies: &[PolicyKind],
    trials: usize,
    base_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    let mut jobs = Vec::with_capacity(scenarios.len() * policies.len() * trials);
    for cfg in scenarios {
        for &policy in policies {
            for i in 0..trials {
                let seed = base_seed
                    .checked_add(i as u64)
                    .ok_or_else(|| Error::InvalidParameter("seed range overflows".into()))?;
                jobs.push((ScenarioConfig { seed, ..cfg.clone() }, policy));
            }
        }
    }
    let run = || jobs.par_iter().map(|(cfg, policy)| run_trial(cfg, *policy)).collect::<Result<Vec<_>>>();
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    run_grid(&spec.scenarios()?, &spec.policies, spec.trials, spec.base_seed(), workers)
}

pub fn run_topology_study(spec: &TopologyStudySpec, workers: Option<usize>) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    run_grid(&spec.scenarios()?, &spec.policies, spec.trials, spec.base_seed(), workers)
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records to `path`, creating parent directories.
pub fn write_csv_path(records: &[TrialRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(records, std::fs::File::create(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyPoint {
    pub policy: String,
    pub topology: String,
    pub gamma: usize,
    pub ratio: f64,
}

/// Efficiency ratio of every `(policy, topology)` against the same policy
/// under the `complete` topology. Errors if the reference is missing.
pub fn efficiency_ratios(records: &[TrialRecord]) -> Result<Vec<EfficiencyPoint>> {
    let mut groups: BTreeMap<(String, String), Vec<TrialRecord>> = BTreeMap::new();
    let mut order: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.policy.clone(), r.topology.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r.clone());
    }
    order
        .into_iter()
        .map(|key| {
            let reference = groups
                .get(&(key.0.clone(), "complete".to_string()))
                .or_else(|| groups.get(&(key.0.clone(), "directed-1".to_string())))
                .ok_or_else(|| Error::InvalidPairing(format!("no full-communication runs for {}", key.0)))?;
            let rs = &groups[&key];
            Ok(EfficiencyPoint {
                policy: key.0.clone(),
                topology: key.1.clone(),
                gamma: rs[0].gamma,
                ratio: efficiency_ratio(rs, reference)?,
            })
        })
        .collect()
}
