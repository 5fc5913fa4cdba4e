//! Per-trial records, the evaluation metrics and CSV rows.

use serde::{Deserialize, Serialize};

use crate::comm_graph::CommGraph;
use crate::engine::WorldState;
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// `1 - completed / tasks`, with 0 for an empty task set.
pub fn fraction_late(n_tasks: usize, n_completed: usize) -> f64 {
    if n_tasks == 0 {
        0.0
    } else {
        1.0 - n_completed as f64 / n_tasks as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cfg_digest: String,
    pub policy: String,
    pub topology: String,
    pub gamma: usize,
    pub seed: u64,
    pub n_tasks: usize,
    pub n_completed: usize,
    pub fraction_late: f64,
    /// Realized completions.
    pub welfare: f64,
    pub mean_planning_time: f64,
    pub per_step_times: Vec<f64>,
    pub p_new: f64,
    pub window_w_min: f64,
    pub n_depots: usize,
    pub n_agents: usize,
    pub conflict_level: String,
}

impl TrialRecord {
    pub fn from_run(
        cfg: &ScenarioConfig,
        policy: &str,
        graph: &CommGraph,
        world: &WorldState,
        per_step_times: Vec<f64>,
    ) -> Self {
        let n_tasks = world.tasks().len();
        let n_completed = world.tasks().iter().filter(|k| k.completed_by(cfg.horizon as f64)).count();
        let mean_planning_time =
            if per_step_times.is_empty() { 0.0 } else { per_step_times.iter().sum::<f64>() / per_step_times.len() as f64 };
        Self {
            cfg_digest: cfg.pairing_digest(),
            policy: policy.to_string(),
            topology: cfg.topology.label(),
            gamma: graph.information_group_number(),
            seed: cfg.seed,
            n_tasks,
            n_completed,
            fraction_late: fraction_late(n_tasks, n_completed),
            welfare: n_completed as f64,
            mean_planning_time,
            per_step_times,
            p_new: cfg.p_new,
            window_w_min: cfg.window_nominal,
            n_depots: cfg.n_depots,
            n_agents: cfg.n_agents,
            conflict_level: cfg.conflict_level.as_str().to_string(),
        }
    }

    /// Copy with wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self { mean_planning_time: 0.0, per_step_times: vec![0.0; self.per_step_times.len()], ..self.clone() }
    }

    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            policy: self.policy.clone(),
            topology: self.topology.clone(),
            gamma: self.gamma,
            seed: self.seed,
            n_tasks: self.n_tasks,
            n_completed: self.n_completed,
            fraction_late: self.fraction_late,
            welfare: self.welfare,
            mean_planning_time_s: self.mean_planning_time,
            p_new: self.p_new,
            window_w_min: self.window_w_min,
            n_depots: self.n_depots,
            n_agents: self.n_agents,
            conflict_level: self.conflict_level.clone(),
        }
    }
}

/// One line of results CSV; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub policy: String,
    pub topology: String,
    pub gamma: usize,
    pub seed: u64,
    pub n_tasks: usize,
    pub n_completed: usize,
    pub fraction_late: f64,
    pub welfare: f64,
    pub mean_planning_time_s: f64,
    pub p_new: f64,
    pub window_w_min: f64,
    pub n_depots: usize,
    pub n_agents: usize,
    pub conflict_level: String,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "policy",
    "topology",
    "gamma",
    "seed",
    "n_tasks",
    "n_completed",
    "fraction_late",
    "welfare",
    "mean_planning_time_s",
    "p_new",
    "window_w_min",
    "n_depots",
    "n_agents",
    "conflict_level",
];

/// Columns that depend on wall-clock time.
pub const TIMING_COLUMNS: [&str; 1] = ["mean_planning_time_s"];

/// Mean welfare under some graph over mean welfare under full
/// communication. Both sets must come from the same scenario and seeds.
pub fn efficiency_ratio(records_g: &[TrialRecord], records_complete: &[TrialRecord]) -> Result<f64> {
    if records_g.is_empty() || records_complete.is_empty() {
        return Err(Error::InvalidPairing("empty record set".into()));
    }
    let digest = &records_complete[0].cfg_digest;
    if let Some(r) = records_g.iter().chain(records_complete).find(|r| &r.cfg_digest != digest) {
        return Err(Error::InvalidPairing(format!("config digest {} differs from {digest}", r.cfg_digest)));
    }
    let mut seeds_g: Vec<u64> = records_g.iter().map(|r| r.seed).collect();
    let mut seeds_c: Vec<u64> = records_complete.iter().map(|r| r.seed).collect();
    seeds_g.sort_unstable();
    seeds_c.sort_unstable();
    if seeds_g != seeds_c {
        return Err(Error::InvalidPairing("seed sets differ".into()));
    }
    let mean = |rs: &[TrialRecord]| rs.iter().map(|r| r.welfare).sum::<f64>() / rs.len() as f64;
    let denom = mean(records_complete);
    if denom == 0.0 {
        return Err(Error::InvalidPairing("zero welfare under full communication".into()));
    }
    Ok(mean(records_g) / denom)
}

/// Order statistics of a sample; independent of input order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(Self {
            n,
            mean: v.iter().sum::<f64>() / n as f64,
            median: quantile_sorted(&v, 0.5),
            q1: quantile_sorted(&v, 0.25),
            q3: quantile_sorted(&v, 0.75),
            min: v[0],
            max: v[n - 1],
        })
    }
}

/// Linear interpolation between closest ranks.
fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn mean_fraction_late<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> f64 {
    let (sum, n) = records.into_iter().fold((0.0, 0usize), |(s, n), r| (s + r.fraction_late, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
