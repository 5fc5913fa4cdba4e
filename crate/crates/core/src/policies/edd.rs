//! Earliest deadline first.

use std::collections::BTreeMap;

use super::{AssignmentProfile, PlanningInput, Policy};
use crate::world::{AgentId, Step, TaskId};

/// Agents in id order take the available task with the earliest deadline
/// that no agent they observe has taken this step. Ties go to the lower
/// task id. Success probabilities are ignored.
pub fn edd_plan(
    agents: &[AgentId],
    available: &BTreeMap<AgentId, Vec<TaskId>>,
    deadline: impl Fn(TaskId) -> Step,
    observes: impl Fn(AgentId, AgentId) -> bool,
) -> AssignmentProfile {
    let mut order = agents.to_vec();
    order.sort();
    let mut profile = AssignmentProfile::idle(agents);
    let mut taken: Vec<(AgentId, TaskId)> = Vec::new();
    for i in order {
        let choice = available
            .get(&i)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&k| !taken.iter().any(|&(j, t)| t == k && (j == i || observes(i, j))))
            .min_by_key(|&k| (deadline(k), k));
        if let Some(k) = choice {
            taken.push((i, k));
        }
        profile.set(i, choice);
    }
    profile
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EddPolicy;

impl Policy for EddPolicy {
    fn name(&self) -> &'static str {
        "edd"
    }

    fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile {
        let available: BTreeMap<AgentId, Vec<TaskId>> =
            input.views().into_iter().map(|(a, v)| (a, v.available_tasks)).collect();
        let world = input.world();
        edd_plan(input.idle_agents(), &available, |k| world.task(k).window_end, |i, j| input.observes(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn avail(entries: &[(usize, &[usize])]) -> BTreeMap<AgentId, Vec<TaskId>> {
        entries.iter().map(|&(a, ks)| (AgentId(a), ks.iter().map(|&k| TaskId(k)).collect())).collect()
    }

    #[test]
    fn picks_earliest_deadline() {
        let deadlines = [20, 10];
        let p = edd_plan(&[AgentId(0)], &avail(&[(0, &[0, 1])]), |k| deadlines[k.0], |_, _| true);
        assert_eq!(p.get(AgentId(0)), Some(TaskId(1)));
    }

    #[test]
    fn nothing_available_means_idle() {
        let p = edd_plan(&[AgentId(0)], &avail(&[(0, &[])]), |_| 0, |_, _| true);
        assert_eq!(p.get(AgentId(0)), None);
    }

    #[test]
    fn shared_view_single_task_taken_once() {
        let p = edd_plan(&[AgentId(1), AgentId(0)], &avail(&[(0, &[0]), (1, &[0])]), |_| 5, |_, _| true);
        assert_eq!(p.assignments(), vec![(AgentId(0), TaskId(0))]);
    }

    #[test]
    fn unobserved_agents_duplicate() {
        let p = edd_plan(&[AgentId(0), AgentId(1)], &avail(&[(0, &[0]), (1, &[0])]), |_| 5, |_, _| false);
        assert_eq!(p.assignments().len(), 2);
    }

    #[test]
    fn deadline_ties_break_on_task_id() {
        let p = edd_plan(&[AgentId(0)], &avail(&[(0, &[3, 2])]), |_| 9, |_, _| true);
        assert_eq!(p.get(AgentId(0)), Some(TaskId(2)));
    }
}
