//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mrta::comm_graph::CommGraph;
use mrta::engine::{StepTrace, WorldState};
use mrta::policies::{AssignmentProfile, SuccessProbTable};
use mrta::{HubId, TaskId};

/// Trapezoid rule on the kernel `3/4 (1 - u^2)` over `[-1, (x - mu) / b]`.
pub fn epanechnikov_cdf_quadrature(mu: f64, b: f64, x: f64, n: usize) -> f64 {
    let hi = ((x - mu) / b).clamp(-1.0, 1.0);
    let h = (hi + 1.0) / n as f64;
    let k = |u: f64| 0.75 * (1.0 - u * u);
    let inner: f64 = (1..n).map(|i| k(-1.0 + i as f64 * h)).sum();
    h * (0.5 * k(-1.0) + inner + 0.5 * k(hi))
}

/// Every set partition of `0..n`.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    fn rec(i: usize, n: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for b in 0..current.len() {
            current[b].push(i);
            rec(i + 1, n, current, out);
            current[b].pop();
        }
        current.push(vec![i]);
        rec(i + 1, n, current, out);
        current.pop();
    }
    rec(0, n, &mut current, &mut out);
    out
}

/// Fewest blocks in a partition where every block is pairwise mutually
/// connected and its members observe the same hubs outside the block.
pub fn gamma_brute_force(g: &CommGraph) -> usize {
    let n = g.n_hubs();
    let valid_block = |block: &[usize]| {
        let inside: BTreeSet<HubId> = block.iter().map(|&h| HubId(h)).collect();
        let mutual = block
            .iter()
            .all(|&a| block.iter().all(|&b| a == b || (g.has_edge(HubId(a), HubId(b)) && g.has_edge(HubId(b), HubId(a)))));
        let outside = |h: usize| -> BTreeSet<HubId> { g.observed_hubs(HubId(h)).difference(&inside).copied().collect() };
        mutual && block.windows(2).all(|w| outside(w[0]) == outside(w[1]))
    };
    set_partitions(n)
        .into_iter()
        .filter(|p| p.iter().all(|b| valid_block(b)))
        .map(|p| p.len())
        .min()
        .unwrap_or(0)
}

/// Best total over every partial one-to-one assignment of rows to columns.
pub fn brute_force_max_weight(weights: &[Vec<Option<f64>>]) -> f64 {
    fn rec(i: usize, weights: &[Vec<Option<f64>>], used: &mut Vec<bool>) -> f64 {
        if i == weights.len() {
            return 0.0;
        }
        let mut best = rec(i + 1, weights, used);
        for j in 0..used.len() {
            if let (false, Some(w)) = (used[j], weights[i][j]) {
                used[j] = true;
                best = best.max(w + rec(i + 1, weights, used));
                used[j] = false;
            }
        }
        best
    }
    let m = weights.first().map_or(0, Vec::len);
    rec(0, weights, &mut vec![false; m])
}

/// `Σ_k max_{j: x_j = k} p_jk`, computed from scratch.
pub fn welfare_oracle(probs: &SuccessProbTable, profile: &AssignmentProfile) -> f64 {
    let tasks: BTreeSet<TaskId> = profile.assignments().into_iter().map(|(_, k)| k).collect();
    tasks
        .into_iter()
        .map(|k| {
            profile
                .assignments()
                .into_iter()
                .filter(|&(_, x)| x == k)
                .map(|(a, _)| probs.get(a, k))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Checks the commitment rules over a trace recorded with agent snapshots:
/// an agent away from its hub always holds an action and that action never
/// changes until it is home again; an agent at its hub holds nothing; a new
/// action is only taken at the hub; and an agent is home only after the
/// outcome of its last task was settled at least one step earlier.
pub fn check_commitments(trace: &[StepTrace], world: &WorldState) -> Result<(), String> {
    let n = world.agents().len();
    let mut prev_action: Vec<Option<TaskId>> = vec![None; n];
    let mut last_task: Vec<Option<TaskId>> = vec![None; n];
    for step in trace {
        let t = step.t;
        let snaps = step.agents.as_ref().ok_or("trace recorded without agent snapshots")?;
        for (i, s) in snaps.iter().enumerate() {
            if s.at_hub && s.held.is_some() {
                return Err(format!("agent {i} at hub still holds {:?} at step {t}", s.held));
            }
            if !s.at_hub && s.held.is_none() {
                return Err(format!("agent {i} away from hub without an action at step {t}"));
            }
            if !s.at_hub && s.held != prev_action[i] {
                return Err(format!("agent {i} switched from {:?} to {:?} en route at step {t}", prev_action[i], s.held));
            }
            if !s.at_hub && s.action != s.held {
                return Err(format!("agent {i} re-planned while away at step {t}"));
            }
            if s.at_hub {
                if let Some(k) = last_task[i].take() {
                    let task = world.task(k);
                    let before = (t - 1) as f64;
                    if !task.completed_by(before) && task.window_end as f64 > before {
                        return Err(format!("agent {i} home at step {t} before task {k} settled"));
                    }
                }
            }
            if let Some(k) = s.action {
                if s.held.is_none() {
                    last_task[i] = Some(k);
                }
            }
            prev_action[i] = s.action;
        }
    }
    Ok(())
}
