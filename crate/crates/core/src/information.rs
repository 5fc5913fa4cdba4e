//! What an agent knows at a planning step: the tasks its hub senses and the
//! past selections of agents it observes.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::comm_graph::CommGraph;
use crate::engine::WorldState;
use crate::world::{AgentId, Step, TaskId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalView {
    pub agent: AgentId,
    /// Sensed and revealed tasks, ascending by id.
    pub visible_tasks: Vec<TaskId>,
    /// Visible, not past deadline and never selected by an observed agent.
    pub available_tasks: Vec<TaskId>,
    /// `(agent, step, task)` selections made before the current step by the
    /// agent itself or an agent it observes.
    pub observed_actions: Vec<(AgentId, Step, TaskId)>,
}

/// Tasks whose location lies in the agent's hub sensing region and whose
/// reveal time is at most `t`.
pub fn visible_tasks(world: &WorldState, agent: AgentId, t: Step) -> Vec<TaskId> {
    let hub = world.agent(agent).hub;
    world
        .visible_to_hub(hub)
        .iter()
        .copied()
        .filter(|&k| world.task(k).arrival <= t)
        .collect()
}

/// Selections `a_j(s)`, `s < t`, of the agent and of every agent it observes.
pub fn observed_actions(world: &WorldState, graph: &CommGraph, agent: AgentId, t: Step) -> Vec<(AgentId, Step, TaskId)> {
    let hub = world.agent(agent).hub;
    world
        .agents()
        .iter()
        .filter(|other| graph.sees(hub, other.hub))
        .flat_map(|other| {
            other.history().iter().filter(move |&&(s, _)| s < t).map(move |&(s, k)| (other.id, s, k))
        })
        .collect()
}

/// Visible tasks whose deadline has not passed, minus every task an observed
/// agent has already selected. Completions by unobserved agents stay
/// invisible until someone physically arrives.
pub fn available_tasks(world: &WorldState, graph: &CommGraph, agent: AgentId, t: Step) -> Vec<TaskId> {
    local_view(world, graph, agent, t).available_tasks
}

pub fn local_view(world: &WorldState, graph: &CommGraph, agent: AgentId, t: Step) -> LocalView {
    let visible_tasks = visible_tasks(world, agent, t);
    let observed_actions = observed_actions(world, graph, agent, t);
    let attempted: BTreeSet<TaskId> = observed_actions.iter().map(|&(_, _, k)| k).collect();
    let available_tasks = visible_tasks
        .iter()
        .copied()
        .filter(|&k| world.task(k).window_end >= t && !attempted.contains(&k))
        .collect();
    LocalView { agent, visible_tasks, available_tasks, observed_actions }
}
