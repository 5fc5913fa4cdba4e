//! Allocation policies.
//!
//! A policy sees one planning step at a time through [`PlanningInput`] and
//! returns an action for every idle agent. Views and success probabilities
//! are computed inside the policy so their cost counts as planning time.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comm_graph::CommGraph;
use crate::engine::WorldState;
use crate::error::{Error, Result};
use crate::information::{local_view, LocalView};
use crate::scenario::ScenarioConfig;
use crate::stochastics::{SeededRng, StreamPurpose};
use crate::world::{AgentId, Step, TaskId};

pub mod assignment;
mod edd;
mod hungarian;
mod ibr;
mod random;

pub use edd::{edd_plan, EddPolicy};
pub use hungarian::{hungarian_plan, HungarianPolicy};
pub use ibr::{global_welfare, ibr_plan, ibr_plan_observed, local_welfare, marginal_utility, IbrOutcome, IbrPolicy, IbrProblem};
pub use random::RandomPolicy;

/// Read-only snapshot handed to a policy at step `t`.
pub struct PlanningInput<'a> {
    t: Step,
    world: &'a WorldState,
    graph: &'a CommGraph,
    idle: &'a [AgentId],
    ibr_max_rounds: usize,
}

impl<'a> PlanningInput<'a> {
    pub fn new(t: Step, world: &'a WorldState, graph: &'a CommGraph, idle: &'a [AgentId], ibr_max_rounds: usize) -> Self {
        Self { t, world, graph, idle, ibr_max_rounds }
    }

    pub fn t(&self) -> Step {
        self.t
    }

    pub fn world(&self) -> &'a WorldState {
        self.world
    }

    pub fn graph(&self) -> &'a CommGraph {
        self.graph
    }

    pub fn idle_agents(&self) -> &'a [AgentId] {
        self.idle
    }

    pub fn ibr_max_rounds(&self) -> usize {
        self.ibr_max_rounds
    }

    pub fn view(&self, agent: AgentId) -> LocalView {
        local_view(self.world, self.graph, agent, self.t)
    }

    pub fn views(&self) -> BTreeMap<AgentId, LocalView> {
        self.idle.iter().map(|&a| (a, self.view(a))).collect()
    }

    pub fn success_probability(&self, agent: AgentId, task: TaskId) -> f64 {
        self.world.success_probability(agent, task, self.t)
    }

    /// Whether `observer` sees what `other` does.
    pub fn observes(&self, observer: AgentId, other: AgentId) -> bool {
        self.graph.sees(self.world.agent(observer).hub, self.world.agent(other).hub)
    }

    /// Success probabilities for every idle agent over its available tasks.
    pub fn prob_table(&self, views: &BTreeMap<AgentId, LocalView>) -> SuccessProbTable {
        let mut table = SuccessProbTable::default();
        for (&a, view) in views {
            for &k in &view.available_tasks {
                table.insert(a, k, self.success_probability(a, k));
            }
        }
        table
    }
}

/// `p_ik(t)` for the agent–task pairs a policy may consider.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuccessProbTable {
    entries: BTreeMap<(AgentId, TaskId), f64>,
}

impl SuccessProbTable {
    pub fn insert(&mut self, agent: AgentId, task: TaskId, p: f64) {
        assert!((0.0..=1.0).contains(&p), "probability {p} out of range");
        self.entries.insert((agent, task), p);
    }

    /// Missing pairs read as 0.
    pub fn get(&self, agent: AgentId, task: TaskId) -> f64 {
        self.entries.get(&(agent, task)).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, agent: AgentId, task: TaskId) -> bool {
        self.entries.contains_key(&(agent, task))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, TaskId, f64)> + '_ {
        self.entries.iter().map(|(&(a, k), &p)| (a, k, p))
    }
}

impl FromIterator<((AgentId, TaskId), f64)> for SuccessProbTable {
    fn from_iter<I: IntoIterator<Item = ((AgentId, TaskId), f64)>>(iter: I) -> Self {
        let mut table = Self::default();
        for ((a, k), p) in iter {
            table.insert(a, k, p);
        }
        table
    }
}

/// One choice per idle agent; `None` is idle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AssignmentProfile {
    choices: BTreeMap<AgentId, Option<TaskId>>,
}

impl AssignmentProfile {
    pub fn idle(agents: &[AgentId]) -> Self {
        Self { choices: agents.iter().map(|&a| (a, None)).collect() }
    }

    pub fn set(&mut self, agent: AgentId, choice: Option<TaskId>) {
        self.choices.insert(agent, choice);
    }

    pub fn get(&self, agent: AgentId) -> Option<TaskId> {
        self.choices.get(&agent).copied().flatten()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.choices.keys().copied()
    }

    pub fn choices(&self) -> impl Iterator<Item = (AgentId, Option<TaskId>)> + '_ {
        self.choices.iter().map(|(&a, &k)| (a, k))
    }

    /// Non-idle choices in agent order.
    pub fn assignments(&self) -> Vec<(AgentId, TaskId)> {
        self.choices.iter().filter_map(|(&a, &k)| k.map(|k| (a, k))).collect()
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

pub trait Policy {
    fn name(&self) -> &'static str;

    fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile;
}

/// Never dispatches anyone.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdlePolicy;

impl Policy for IdlePolicy {
    fn name(&self) -> &'static str {
        "idle"
    }

    fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile {
        AssignmentProfile::idle(input.idle_agents())
    }
}

/// Policies selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    Ibr,
    Edd,
    Hungarian,
    Random,
    /// Registered but not implemented.
    Scoba,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Ibr, PolicyKind::Edd, PolicyKind::Hungarian, PolicyKind::Random, PolicyKind::Scoba];
    pub const COMPARED: [PolicyKind; 3] = [PolicyKind::Ibr, PolicyKind::Edd, PolicyKind::Hungarian];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Ibr => "ibr",
            PolicyKind::Edd => "edd",
            PolicyKind::Hungarian => "hungarian",
            PolicyKind::Random => "random",
            PolicyKind::Scoba => "scoba",
        }
    }

    pub fn is_available(self) -> bool {
        self != PolicyKind::Scoba
    }

    pub fn build(self, cfg: &ScenarioConfig) -> Result<Box<dyn Policy>> {
        let rng = || SeededRng::for_purpose(cfg.seed, StreamPurpose::Policy);
        Ok(match self {
            PolicyKind::Ibr => Box::new(IbrPolicy::new(rng())),
            PolicyKind::Edd => Box::new(EddPolicy),
            PolicyKind::Hungarian => Box::new(HungarianPolicy),
            PolicyKind::Random => Box::new(RandomPolicy::new(rng())),
            PolicyKind::Scoba => return Err(Error::PolicyUnavailable(self.as_str().into())),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(p: PolicyKind) -> Self {
        p.as_str().to_string()
    }
}

/// Parses a comma-separated policy list.
pub fn parse_policy_list(s: &str) -> Result<Vec<PolicyKind>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}
