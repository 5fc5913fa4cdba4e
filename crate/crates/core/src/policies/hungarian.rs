//! Maximum-weight matching per information group.

use std::collections::{BTreeMap, BTreeSet};

use super::assignment::max_weight_assignment;
use super::{AssignmentProfile, PlanningInput, Policy, SuccessProbTable};
use crate::world::{AgentId, TaskId};

/// Solves one assignment per group over the union of the group's available
/// tasks. Pairs outside an agent's own available set are forbidden.
pub fn hungarian_plan(
    groups: &[Vec<AgentId>],
    available: &BTreeMap<AgentId, Vec<TaskId>>,
    probs: &SuccessProbTable,
) -> AssignmentProfile {
    let mut profile = AssignmentProfile::default();
    for group in groups {
        let tasks: Vec<TaskId> = group
            .iter()
            .flat_map(|a| available.get(a).into_iter().flatten().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let weights: Vec<Vec<Option<f64>>> = group
            .iter()
            .map(|&a| {
                let own = available.get(&a).map_or(&[][..], Vec::as_slice);
                tasks.iter().map(|&k| own.contains(&k).then(|| probs.get(a, k))).collect()
            })
            .collect();
        for (&a, col) in group.iter().zip(max_weight_assignment(&weights)) {
            profile.set(a, col.map(|j| tasks[j]));
        }
    }
    profile
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HungarianPolicy;

impl Policy for HungarianPolicy {
    fn name(&self) -> &'static str {
        "hungarian"
    }

    fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile {
        let views = input.views();
        let probs = input.prob_table(&views);
        let available: BTreeMap<AgentId, Vec<TaskId>> =
            views.into_iter().map(|(a, v)| (a, v.available_tasks)).collect();
        let group_of = input.graph().group_of_hubs();
        let mut groups: BTreeMap<usize, Vec<AgentId>> = BTreeMap::new();
        for &a in input.idle_agents() {
            groups.entry(group_of[input.world().agent(a).hub.0]).or_default().push(a);
        }
        let groups: Vec<Vec<AgentId>> = groups.into_values().collect();
        hungarian_plan(&groups, &available, &probs)
    }
}
