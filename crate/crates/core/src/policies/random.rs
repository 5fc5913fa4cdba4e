//! Uniform choice over available tasks and idle; a floor baseline.

use super::{AssignmentProfile, PlanningInput, Policy};
use crate::stochastics::SeededRng;

pub struct RandomPolicy {
    rng: SeededRng,
}

impl RandomPolicy {
    pub fn new(rng: SeededRng) -> Self {
        Self { rng }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile {
        let mut profile = AssignmentProfile::idle(input.idle_agents());
        for (a, view) in input.views() {
            let n = view.available_tasks.len() as u32;
            let pick = self.rng.uniform_int(0, n) as usize;
            profile.set(a, view.available_tasks.get(pick).copied());
        }
        profile
    }
}
