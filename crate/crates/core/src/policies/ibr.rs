//! Iterative best response over marginal-contribution utilities.

use std::collections::BTreeMap;

use super::{AssignmentProfile, PlanningInput, Policy, SuccessProbTable};
use crate::error::{Error, Result};
use crate::stochastics::SeededRng;
use crate::world::{AgentId, TaskId};

/// One planning step as the best-response game sees it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IbrProblem {
    pub agents: Vec<AgentId>,
    pub available: BTreeMap<AgentId, Vec<TaskId>>,
    /// Other idle agents each agent observes.
    pub observed: BTreeMap<AgentId, Vec<AgentId>>,
    pub probs: SuccessProbTable,
}

impl IbrProblem {
    pub fn from_input(input: &PlanningInput<'_>) -> Self {
        let views = input.views();
        let probs = input.prob_table(&views);
        let agents = input.idle_agents().to_vec();
        let observed = agents
            .iter()
            .map(|&i| (i, agents.iter().copied().filter(|&j| j != i && input.observes(i, j)).collect()))
            .collect();
        let available = views.into_iter().map(|(a, v)| (a, v.available_tasks)).collect();
        Self { agents, available, observed, probs }
    }

    /// Every agent observes every other agent.
    pub fn fully_connected(agents: Vec<AgentId>, available: BTreeMap<AgentId, Vec<TaskId>>, probs: SuccessProbTable) -> Self {
        let observed = agents.iter().map(|&i| (i, agents.iter().copied().filter(|&j| j != i).collect())).collect();
        Self { agents, available, observed, probs }
    }

    pub fn available_to(&self, agent: AgentId) -> &[TaskId] {
        self.available.get(&agent).map_or(&[], Vec::as_slice)
    }

    pub fn observed_by(&self, agent: AgentId) -> &[AgentId] {
        self.observed.get(&agent).map_or(&[], Vec::as_slice)
    }
}

/// `Σ_k max_{j: x_j = k} p_jk` over every agent in the profile.
pub fn global_welfare(probs: &SuccessProbTable, profile: &AssignmentProfile) -> f64 {
    let mut best: BTreeMap<TaskId, f64> = BTreeMap::new();
    for (a, k) in profile.assignments() {
        let p = probs.get(a, k);
        let e = best.entry(k).or_insert(0.0);
        *e = e.max(p);
    }
    best.values().sum()
}

/// Welfare over the agent's available tasks counting only the agent and
/// those it observes.
pub fn local_welfare(problem: &IbrProblem, profile: &AssignmentProfile, agent: AgentId) -> f64 {
    let group: Vec<AgentId> = std::iter::once(agent).chain(problem.observed_by(agent).iter().copied()).collect();
    problem
        .available_to(agent)
        .iter()
        .map(|&k| {
            group
                .iter()
                .filter(|&&j| profile.get(j) == Some(k))
                .map(|&j| problem.probs.get(j, k))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Gain in local welfare from choosing `choice` over idling.
pub fn marginal_utility(problem: &IbrProblem, profile: &AssignmentProfile, agent: AgentId, choice: Option<TaskId>) -> f64 {
    let Some(k) = choice else {
        return 0.0;
    };
    let incumbent = problem
        .observed_by(agent)
        .iter()
        .filter(|&&j| profile.get(j) == Some(k))
        .map(|&j| problem.probs.get(j, k))
        .fold(0.0, f64::max);
    (problem.probs.get(agent, k) - incumbent).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbrOutcome {
    pub profile: AssignmentProfile,
    pub sweeps: usize,
    /// The last sweep changed nothing.
    pub converged: bool,
}

pub fn ibr_plan(problem: &IbrProblem, max_rounds: usize, rng: &mut SeededRng) -> Result<IbrOutcome> {
    ibr_plan_observed(problem, max_rounds, rng, |_| {})
}

/// Like [`ibr_plan`], calling `on_switch` after every changed choice.
pub fn ibr_plan_observed(
    problem: &IbrProblem,
    max_rounds: usize,
    rng: &mut SeededRng,
    mut on_switch: impl FnMut(&AssignmentProfile),
) -> Result<IbrOutcome> {
    if max_rounds < 1 {
        return Err(Error::InvalidParameter("IBR needs at least one round".into()));
    }
    let mut profile = AssignmentProfile::idle(&problem.agents);
    let mut order = problem.agents.clone();
    rng.shuffle(&mut order);

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_rounds {
        sweeps += 1;
        let mut changed = false;
        for &i in &order {
            let current = profile.get(i);
            let best = best_response(problem, &profile, i, current);
            if best != current {
                profile.set(i, best);
                changed = true;
                on_switch(&profile);
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(IbrOutcome { profile, sweeps, converged })
}

/// Strictly positive utility beats idle; ties keep the incumbent, then the
/// lowest task id.
fn best_response(problem: &IbrProblem, profile: &AssignmentProfile, agent: AgentId, current: Option<TaskId>) -> Option<TaskId> {
    let mut best = None;
    let mut best_u = 0.0;
    for &k in problem.available_to(agent) {
        let u = marginal_utility(problem, profile, agent, Some(k));
        if u > best_u || (u > 0.0 && u == best_u && best.is_some_and(|b| k < b)) {
            best = Some(k);
            best_u = u;
        }
    }
    if let Some(k) = current {
        let u = marginal_utility(problem, profile, agent, Some(k));
        if u > 0.0 && u >= best_u && problem.available_to(agent).contains(&k) {
            return current;
        }
    }
    best
}

pub struct IbrPolicy {
    rng: SeededRng,
}

impl IbrPolicy {
    pub fn new(rng: SeededRng) -> Self {
        Self { rng }
    }
}

impl Policy for IbrPolicy {
    fn name(&self) -> &'static str {
        "ibr"
    }

    fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile {
        let problem = IbrProblem::from_input(input);
        ibr_plan(&problem, input.ibr_max_rounds(), &mut self.rng)
            .expect("round limit validated with the scenario")
            .profile
    }
}
