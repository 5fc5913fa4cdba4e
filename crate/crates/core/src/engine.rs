//! Discrete-time simulation of one trial.
//!
//! Event times (arrivals, service, returns) are continuous and resolved in
//! time order; the policy runs only at integer steps. A step `t` runs:
//! spawn, fire events with time `<= t`, expire overdue tasks, plan for idle
//! agents, dispatch.
//!
//! A returning agent re-enters the idle pool no earlier than one step after
//! the outcome of its task was settled (completion, or window close). This
//! keeps an agent's commitment in place until the outcome is observable at a
//! step boundary even when a whole round trip fits inside one step.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::comm_graph::CommGraph;
use crate::error::{Error, Result};
use crate::metrics::TrialRecord;
use crate::policies::{PlanningInput, Policy, PolicyKind};
use crate::scenario::{generate_initial_tasks, maybe_spawn_task, ScenarioConfig};
use crate::stochastics::{SeededRng, SpreadConvention, StreamPurpose, TravelDist, TravelModel};
use crate::world::{mean_travel_time, AgentId, AgentMode, AgentState, Hub, HubId, Step, Task, TaskId, TaskStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldSettings {
    pub speed_km_per_step: f64,
    pub travel_model: TravelModel,
    pub spread: SpreadConvention,
    pub abort_on_expiry: bool,
}

impl Default for WorldSettings {
    fn default() -> Self {
        Self {
            speed_km_per_step: 1.0,
            travel_model: TravelModel::Epanechnikov,
            spread: SpreadConvention::HalfWidth,
            abort_on_expiry: false,
        }
    }
}

impl From<&ScenarioConfig> for WorldSettings {
    fn from(cfg: &ScenarioConfig) -> Self {
        Self {
            speed_km_per_step: cfg.speed_km_per_step(),
            travel_model: cfg.travel_model,
            spread: cfg.spread,
            abort_on_expiry: cfg.abort_on_expiry,
        }
    }
}

/// What an agent finds when it reaches a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalOutcome {
    /// Arrived within reach of the window and no one got there first.
    Completed,
    /// Another agent already served or claimed the task.
    FoundCompleted,
    /// Arrived after the window closed.
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttemptOutcome {
    Arrived(ArrivalOutcome),
    /// Turned back when the window closed mid-flight.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub agent: AgentId,
    pub task: TaskId,
    pub dispatched_at: Step,
    pub arrive_at: f64,
    pub outcome: Option<AttemptOutcome>,
}

/// Timing of a committed outbound leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispatch {
    /// Sampled outbound travel time.
    pub outbound: f64,
    pub arrive_at: f64,
    /// Outbound time including any wait for the window to open.
    pub forward: f64,
}

/// Outbound duration including the wait for an early arrival.
pub fn forward_time(outbound: f64, depart: f64, window_start: f64) -> f64 {
    outbound + (window_start - depart - outbound).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrive(TaskId),
    Abort(TaskId),
    ServiceComplete(TaskId),
    Returned,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    agent: AgentId,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Simultaneous events fire in agent-id order, so the lower id claims a
    // task both agents reach at the same instant.
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.agent.cmp(&other.agent))
    }
}

/// Everything a trial knows about hubs, agents and tasks.
#[derive(Debug, Clone)]
pub struct WorldState {
    clock: Step,
    settings: WorldSettings,
    hubs: Vec<Hub>,
    agents: Vec<AgentState>,
    tasks: Vec<Task>,
    visible_by_hub: Vec<Vec<TaskId>>,
    /// `travel[task][hub]`
    travel: Vec<Vec<TravelDist>>,
    /// Agent physically holding each task, with its service time.
    claimant: Vec<Option<(AgentId, f64)>>,
    open_tasks: Vec<TaskId>,
    events: BinaryHeap<Reverse<Event>>,
    attempts: Vec<Attempt>,
    current_attempt: Vec<Option<usize>>,
}

impl WorldState {
    pub fn new(hubs: Vec<Hub>, agent_hubs: Vec<HubId>, settings: WorldSettings) -> Self {
        assert!(agent_hubs.iter().all(|h| h.0 < hubs.len()), "agent assigned to unknown hub");
        let agents: Vec<AgentState> =
            agent_hubs.into_iter().enumerate().map(|(i, h)| AgentState::new(AgentId(i), h)).collect();
        Self {
            clock: 0,
            settings,
            visible_by_hub: vec![Vec::new(); hubs.len()],
            current_attempt: vec![None; agents.len()],
            hubs,
            agents,
            tasks: Vec::new(),
            travel: Vec::new(),
            claimant: Vec::new(),
            open_tasks: Vec::new(),
            events: BinaryHeap::new(),
            attempts: Vec::new(),
        }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(Self::new(cfg.hubs()?, cfg.agent_hubs(), WorldSettings::from(cfg)))
    }

    /// Registers a task; ids must be dense and in order.
    pub fn add_task(&mut self, task: Task) -> TaskId {
        let id = TaskId(self.tasks.len());
        assert_eq!(task.id, id, "task ids must be assigned densely");
        for hub in &self.hubs {
            if hub.senses(&task.location) {
                self.visible_by_hub[hub.id.0].push(id);
            }
        }
        let s = self.settings;
        self.travel.push(
            self.hubs
                .iter()
                .map(|h| {
                    s.travel_model.distribution(mean_travel_time(h, &task.location, s.speed_km_per_step), s.spread)
                })
                .collect(),
        );
        self.claimant.push(None);
        self.open_tasks.push(id);
        self.tasks.push(task);
        id
    }

    pub fn clock(&self) -> Step {
        self.clock
    }

    pub fn hubs(&self) -> &[Hub] {
        &self.hubs
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &AgentState {
        &self.agents[id.0]
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.0]
    }

    pub fn attempts(&self) -> &[Attempt] {
        &self.attempts
    }

    pub fn agent_hubs(&self) -> Vec<HubId> {
        self.agents.iter().map(|a| a.hub).collect()
    }

    pub fn visible_to_hub(&self, hub: HubId) -> &[TaskId] {
        &self.visible_by_hub[hub.0]
    }

    pub fn idle_agents(&self) -> Vec<AgentId> {
        self.agents.iter().filter(|a| a.is_idle()).map(|a| a.id).collect()
    }

    pub fn travel_dist(&self, hub: HubId, task: TaskId) -> TravelDist {
        self.travel[task.0][hub.0]
    }

    /// Probability that `agent`, leaving its hub at `t`, reaches `task`
    /// before the window closes.
    pub fn success_probability(&self, agent: AgentId, task: TaskId, t: Step) -> f64 {
        let deadline = self.tasks[task.0].window_end;
        if deadline <= t {
            return 0.0;
        }
        self.travel_dist(self.agents[agent.0].hub, task).cdf((deadline - t) as f64)
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    fn schedule(&mut self, time: f64, agent: AgentId, kind: EventKind) {
        self.events.push(Reverse(Event { time, agent, kind }));
    }

    /// Commits an idle agent to `task` at step `t` and samples its outbound leg.
    pub fn dispatch(&mut self, agent: AgentId, task: TaskId, t: Step, rng: &mut SeededRng) -> Result<Dispatch> {
        let state = self
            .agents
            .get(agent.0)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown agent {agent}")))?;
        if !state.is_idle() {
            return Err(Error::InvalidParameter(format!("agent {agent} is not idle at step {t}")));
        }
        let target = self
            .tasks
            .get(task.0)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown task {task}")))?;
        if !self.hubs[state.hub.0].senses(&target.location) || target.arrival > t {
            return Err(Error::InvalidParameter(format!("task {task} is not visible to agent {agent}")));
        }
        let (start, end) = (target.window_start as f64, target.window_end as f64);
        let outbound = self.travel_dist(state.hub, task).sample(rng);
        let depart = t as f64;
        let arrive_at = depart + outbound;

        self.agents[agent.0].commit(t, task, AgentMode::EnRoute { task, arrive_at });
        if self.tasks[task.0].status() == TaskStatus::Pending {
            self.tasks[task.0].transition(TaskStatus::InProgress);
        }
        self.current_attempt[agent.0] = Some(self.attempts.len());
        self.attempts.push(Attempt { agent, task, dispatched_at: t, arrive_at, outcome: None });
        if self.settings.abort_on_expiry && arrive_at > end {
            self.schedule(end, agent, EventKind::Abort(task));
        } else {
            self.schedule(arrive_at, agent, EventKind::Arrive(task));
        }
        Ok(Dispatch { outbound, arrive_at, forward: forward_time(outbound, depart, start) })
    }

    /// What happens when `agent` reaches `task` at `arrive_at`.
    pub fn resolve_arrival(&self, agent: AgentId, task: TaskId, arrive_at: f64) -> ArrivalOutcome {
        let k = &self.tasks[task.0];
        let taken = k.status().is_completed() || matches!(self.claimant[task.0], Some((other, _)) if other != agent);
        if taken {
            ArrivalOutcome::FoundCompleted
        } else if arrive_at.max(k.window_start as f64) <= k.window_end as f64 {
            ArrivalOutcome::Completed
        } else {
            ArrivalOutcome::Late
        }
    }

    /// Fires every event due at or before `t`; returns tasks completed.
    pub fn advance_to(&mut self, t: Step, rng: &mut SeededRng) -> Vec<TaskId> {
        self.clock = t;
        let now = t as f64;
        let mut completed = Vec::new();
        while let Some(Reverse(ev)) = self.events.peek().copied() {
            if ev.time > now {
                break;
            }
            self.events.pop();
            match ev.kind {
                EventKind::Arrive(task) => self.on_arrive(ev.agent, task, ev.time, rng),
                EventKind::Abort(_) => self.on_abort(ev.agent, ev.time),
                EventKind::ServiceComplete(task) => {
                    self.tasks[task.0].transition(TaskStatus::Completed { at: ev.time });
                    completed.push(task);
                    self.start_return(ev.agent, task, ev.time, ev.time, rng);
                }
                EventKind::Returned => self.agents[ev.agent.0].arrive_home(),
            }
        }
        completed
    }

    fn set_outcome(&mut self, agent: AgentId, outcome: AttemptOutcome) {
        if let Some(i) = self.current_attempt[agent.0].take() {
            self.attempts[i].outcome = Some(outcome);
        }
    }

    fn on_arrive(&mut self, agent: AgentId, task: TaskId, at: f64, rng: &mut SeededRng) {
        let outcome = self.resolve_arrival(agent, task, at);
        self.set_outcome(agent, AttemptOutcome::Arrived(outcome));
        let window_start = self.tasks[task.0].window_start as f64;
        match outcome {
            ArrivalOutcome::Completed => {
                let service_at = at.max(window_start);
                self.claimant[task.0] = Some((agent, service_at));
                if service_at > at {
                    self.agents[agent.0].set_trip_mode(AgentMode::WaitingAtTask { task, service_at });
                }
                self.schedule(service_at, agent, EventKind::ServiceComplete(task));
            }
            ArrivalOutcome::FoundCompleted => {
                let settled = match (self.tasks[task.0].status(), self.claimant[task.0]) {
                    (TaskStatus::Completed { at }, _) => at,
                    (_, Some((_, service_at))) => service_at,
                    _ => at,
                };
                self.start_return(agent, task, at, settled, rng);
            }
            ArrivalOutcome::Late => {
                if !self.tasks[task.0].status().is_terminal() {
                    self.tasks[task.0].transition(TaskStatus::Expired);
                }
                let deadline = self.tasks[task.0].window_end as f64;
                self.start_return(agent, task, at, deadline, rng);
            }
        }
    }

    fn on_abort(&mut self, agent: AgentId, at: f64) {
        self.set_outcome(agent, AttemptOutcome::Aborted);
        let depart = self.agents[agent.0].history().last().map(|&(s, _)| s as f64).unwrap_or(at);
        // Retrace the distance flown so far.
        let back = at + (at - depart);
        let return_at = back.max(at + 1.0);
        self.agents[agent.0].set_trip_mode(AgentMode::Returning { return_at });
        self.schedule(return_at, agent, EventKind::Returned);
    }

    /// Samples the return leg from `from` and schedules the agent's return.
    /// `settled` is when the task outcome became fixed.
    fn start_return(&mut self, agent: AgentId, task: TaskId, from: f64, settled: f64, rng: &mut SeededRng) {
        let hub = self.agents[agent.0].hub;
        let back = self.travel_dist(hub, task).sample(rng);
        let return_at = (from + back).max(settled + 1.0);
        self.agents[agent.0].set_trip_mode(AgentMode::Returning { return_at });
        self.schedule(return_at, agent, EventKind::Returned);
    }

    /// Marks open tasks whose window closed before `t` as expired.
    pub fn expire_overdue(&mut self, t: Step) -> Vec<TaskId> {
        let mut expired = Vec::new();
        let tasks = &mut self.tasks;
        self.open_tasks.retain(|&k| {
            let task = &mut tasks[k.0];
            if task.status().is_terminal() {
                return false;
            }
            if task.window_end < t {
                task.transition(TaskStatus::Expired);
                expired.push(k);
                return false;
            }
            true
        });
        expired
    }

    /// Horizon end: every task not yet completed is late.
    pub fn close(&mut self) -> Vec<TaskId> {
        let mut expired = Vec::new();
        for k in std::mem::take(&mut self.open_tasks) {
            let task = &mut self.tasks[k.0];
            if !task.status().is_terminal() {
                task.transition(TaskStatus::Expired);
                expired.push(k);
            }
        }
        expired
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AgentSnapshot {
    /// Idle at the hub before planning.
    pub at_hub: bool,
    /// Action carried into the step, before planning.
    pub held: Option<TaskId>,
    /// Action after planning.
    pub action: Option<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrace {
    pub t: Step,
    /// Seconds spent inside the policy; zero when nobody was idle.
    pub planning_wall_time: f64,
    pub new_assignments: Vec<(AgentId, TaskId)>,
    pub completions: Vec<TaskId>,
    pub expirations: Vec<TaskId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<AgentSnapshot>>,
}

/// Writes one JSON object per step.
pub fn write_trace_jsonl<W: Write>(trace: &[StepTrace], mut out: W) -> Result<()> {
    for step in trace {
        serde_json::to_writer(&mut out, step)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub struct TrialOutcome {
    pub record: TrialRecord,
    pub trace: Vec<StepTrace>,
    pub world: WorldState,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    graph: CommGraph,
    world: WorldState,
    policy: Box<dyn Policy>,
    task_rng: SeededRng,
    travel_rng: SeededRng,
    t: Step,
    record_agents: bool,
    trace: Vec<StepTrace>,
    planning_times: Vec<f64>,
}

impl Simulation {
    /// Builds a trial with generated initial tasks.
    pub fn new(cfg: &ScenarioConfig, policy: Box<dyn Policy>) -> Result<Self> {
        cfg.validate()?;
        let mut task_rng = SeededRng::for_purpose(cfg.seed, StreamPurpose::Tasks);
        let tasks = generate_initial_tasks(cfg, &mut task_rng)?;
        Self::assemble(cfg, tasks, task_rng, policy)
    }

    /// Builds a trial whose initial tasks are given explicitly.
    pub fn with_tasks(cfg: &ScenarioConfig, tasks: Vec<Task>, policy: Box<dyn Policy>) -> Result<Self> {
        cfg.validate()?;
        let task_rng = SeededRng::for_purpose(cfg.seed, StreamPurpose::Tasks);
        Self::assemble(cfg, tasks, task_rng, policy)
    }

    fn assemble(cfg: &ScenarioConfig, tasks: Vec<Task>, task_rng: SeededRng, policy: Box<dyn Policy>) -> Result<Self> {
        let mut world = WorldState::from_config(cfg)?;
        for task in tasks {
            world.add_task(task);
        }
        Ok(Self {
            graph: cfg.comm_graph()?,
            cfg: cfg.clone(),
            world,
            policy,
            task_rng,
            travel_rng: SeededRng::for_purpose(cfg.seed, StreamPurpose::Travel),
            t: 0,
            record_agents: false,
            trace: Vec::new(),
            planning_times: Vec::new(),
        })
    }

    /// Keep per-agent snapshots in every step trace.
    pub fn record_agents(mut self, on: bool) -> Self {
        self.record_agents = on;
        self
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.cfg.horizon
    }

    /// Advances one step. Returns `None` past the horizon.
    pub fn step(&mut self) -> Option<&StepTrace> {
        if self.is_finished() {
            return None;
        }
        self.t += 1;
        let t = self.t;

        let id = TaskId(self.world.tasks().len());
        if let Some(task) = maybe_spawn_task(&self.cfg, t, id, &mut self.task_rng) {
            self.world.add_task(task);
        }
        let completions = self.world.advance_to(t, &mut self.travel_rng);
        let expirations = self.world.expire_overdue(t);

        let before: Option<Vec<(bool, Option<TaskId>)>> = self
            .record_agents
            .then(|| self.world.agents().iter().map(|a| (a.is_idle(), a.action())).collect());

        let idle = self.world.idle_agents();
        let mut planning_wall_time = 0.0;
        let mut new_assignments = Vec::new();
        if !idle.is_empty() {
            let input = PlanningInput::new(t, &self.world, &self.graph, &idle, self.cfg.ibr_max_rounds as usize);
            let started = Instant::now();
            let profile = self.policy.plan(&input);
            planning_wall_time = started.elapsed().as_secs_f64();
            self.planning_times.push(planning_wall_time);

            for (agent, task) in profile.assignments() {
                debug_assert!(
                    crate::information::available_tasks(&self.world, &self.graph, agent, t).contains(&task),
                    "policy {} chose unavailable task {task} for {agent} at step {t}",
                    self.policy.name()
                );
                self.world
                    .dispatch(agent, task, t, &mut self.travel_rng)
                    .unwrap_or_else(|e| panic!("policy {} produced an invalid assignment: {e}", self.policy.name()));
                new_assignments.push((agent, task));
            }
        }

        let agents = before.map(|pre| {
            pre.into_iter()
                .zip(self.world.agents())
                .map(|((at_hub, held), a)| AgentSnapshot { at_hub, held, action: a.action() })
                .collect()
        });
        self.trace.push(StepTrace { t, planning_wall_time, new_assignments, completions, expirations, agents });
        self.trace.last()
    }

    pub fn run(mut self) -> TrialOutcome {
        while self.step().is_some() {}
        self.world.close();
        let record = TrialRecord::from_run(&self.cfg, self.policy.name(), &self.graph, &self.world, self.planning_times);
        TrialOutcome { record, trace: self.trace, world: self.world }
    }
}

pub fn run_trial(cfg: &ScenarioConfig, policy: PolicyKind) -> Result<TrialRecord> {
    Ok(Simulation::new(cfg, policy.build(cfg)?)?.run().record)
}

/// Like [`run_trial`] but keeps the full per-step trace and final world.
pub fn run_trial_traced(cfg: &ScenarioConfig, policy: PolicyKind) -> Result<TrialOutcome> {
    Ok(Simulation::new(cfg, policy.build(cfg)?)?.record_agents(true).run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm_graph::{TopologyConfig, TopologySpec};
    use crate::policies::{AssignmentProfile, IdlePolicy};
    use crate::scenario::DepotLayout;
    use crate::world::Point;

    /// Dispatches a fixed list of `(step, agent, task)` orders.
    struct Scripted(Vec<(Step, AgentId, TaskId)>);

    impl Policy for Scripted {
        fn name(&self) -> &'static str {
            "scripted"
        }

        fn plan(&mut self, input: &PlanningInput<'_>) -> AssignmentProfile {
            let mut p = AssignmentProfile::idle(input.idle_agents());
            for &(s, a, k) in &self.0 {
                if s == input.t() && input.idle_agents().contains(&a) {
                    p.set(a, Some(k));
                }
            }
            p
        }
    }

    fn deterministic_cfg(n_depots: usize, n_agents: usize) -> ScenarioConfig {
        ScenarioConfig {
            n_depots,
            n_agents,
            horizon: 60,
            p_new: 0.0,
            initial_tasks: Some(0),
            sensing_radius: 20.0,
            speed_km_per_min: 1.0,
            travel_model: TravelModel::Deterministic,
            depots: DepotLayout::Points { points: (0..n_depots).map(|i| Point::new(i as f64 * 2.0, 0.0)).collect() },
            topology: TopologyConfig::new(TopologySpec::Empty),
            ..Default::default()
        }
    }

    #[test]
    fn forward_time_includes_wait() {
        assert_eq!(forward_time(2.0, 0.0, 5.0), 5.0);
        assert_eq!(forward_time(7.0, 0.0, 5.0), 7.0);
        assert_eq!(forward_time(3.0, 10.0, 12.0), 3.0);
    }

    #[test]
    fn empty_scenario_reports_zero_late() {
        let cfg = deterministic_cfg(1, 2);
        let out = Simulation::new(&cfg, Box::new(IdlePolicy)).unwrap().run();
        assert_eq!(out.record.n_tasks, 0);
        assert_eq!(out.record.fraction_late, 0.0);
    }

    #[test]
    fn hand_traced_single_delivery() {
        // Hub at origin, task 4 km away: 4 steps out, 4 back.
        let cfg = deterministic_cfg(1, 1);
        let task = Task::new(TaskId(0), 0, 10, 20, Point::new(0.0, 4.0));
        let sim = Simulation::with_tasks(&cfg, vec![task], Box::new(Scripted(vec![(1, AgentId(0), TaskId(0))])))
            .unwrap()
            .record_agents(true);
        let out = sim.run();
        assert_eq!(out.record.n_completed, 1);
        assert_eq!(out.record.fraction_late, 0.0);
        assert_eq!(out.world.task(TaskId(0)).status(), TaskStatus::Completed { at: 10.0 });
        // Departs at 1, waits from 5 until 10, home at 14.
        let modes: Vec<bool> = out.trace.iter().map(|s| s.agents.as_ref().unwrap()[0].at_hub).collect();
        assert!(modes[0]);
        assert!(modes[1..13].iter().all(|h| !h));
        assert!(modes[13]);
    }

    #[test]
    fn dispatch_waits_for_window() {
        let cfg = deterministic_cfg(1, 1);
        let mut world = WorldState::from_config(&cfg).unwrap();
        world.add_task(Task::new(TaskId(0), 0, 5, 9, Point::new(0.0, 2.0)));
        world.add_task(Task::new(TaskId(1), 0, 5, 9, Point::new(0.0, 7.0)));
        let mut rng = SeededRng::new(0, 0);
        let d = world.dispatch(AgentId(0), TaskId(0), 0, &mut rng).unwrap();
        assert_eq!((d.outbound, d.forward), (2.0, 5.0));

        let mut world2 = WorldState::from_config(&cfg).unwrap();
        world2.add_task(Task::new(TaskId(0), 0, 5, 9, Point::new(0.0, 7.0)));
        let d = world2.dispatch(AgentId(0), TaskId(0), 0, &mut rng).unwrap();
        assert_eq!((d.outbound, d.forward), (7.0, 7.0));
    }

    #[test]
    fn late_arrival_fails_and_agent_returns() {
        let cfg = deterministic_cfg(1, 1);
        let task = Task::new(TaskId(0), 0, 2, 3, Point::new(0.0, 5.0));
        let out = Simulation::with_tasks(&cfg, vec![task], Box::new(Scripted(vec![(1, AgentId(0), TaskId(0))])))
            .unwrap()
            .run();
        assert_eq!(out.record.fraction_late, 1.0);
        assert_eq!(out.world.task(TaskId(0)).status(), TaskStatus::Expired);
        assert_eq!(out.world.attempts()[0].outcome, Some(AttemptOutcome::Arrived(ArrivalOutcome::Late)));
        assert!(out.world.agent(AgentId(0)).is_idle());
    }

    #[test]
    fn duplicate_dispatch_first_arrival_wins() {
        // Hubs at x=0 and x=2; task at x=0.5 is nearer hub 0.
        let cfg = deterministic_cfg(2, 2);
        let task = Task::new(TaskId(0), 0, 1, 30, Point::new(0.5, 0.0));
        let orders = vec![(1, AgentId(0), TaskId(0)), (1, AgentId(1), TaskId(0))];
        let out = Simulation::with_tasks(&cfg, vec![task], Box::new(Scripted(orders))).unwrap().run();
        assert_eq!(out.record.n_completed, 1);
        let outcomes: Vec<_> = out.world.attempts().iter().map(|a| a.outcome).collect();
        assert_eq!(
            outcomes,
            vec![
                Some(AttemptOutcome::Arrived(ArrivalOutcome::Completed)),
                Some(AttemptOutcome::Arrived(ArrivalOutcome::FoundCompleted)),
            ]
        );
    }

    #[test]
    fn simultaneous_arrival_goes_to_lower_id() {
        // Both hubs 1 km from the task.
        let mut cfg = deterministic_cfg(2, 2);
        cfg.depots = DepotLayout::Points { points: vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0)] };
        let task = Task::new(TaskId(0), 0, 1, 30, Point::new(1.0, 0.0));
        let orders = vec![(1, AgentId(1), TaskId(0)), (1, AgentId(0), TaskId(0))];
        let out = Simulation::with_tasks(&cfg, vec![task], Box::new(Scripted(orders))).unwrap().run();
        let by_agent = |a: usize| out.world.attempts().iter().find(|x| x.agent == AgentId(a)).unwrap().outcome;
        assert_eq!(by_agent(0), Some(AttemptOutcome::Arrived(ArrivalOutcome::Completed)));
        assert_eq!(by_agent(1), Some(AttemptOutcome::Arrived(ArrivalOutcome::FoundCompleted)));
    }

    #[test]
    fn abort_on_expiry_turns_back_at_deadline() {
        let mut cfg = deterministic_cfg(1, 1);
        cfg.abort_on_expiry = true;
        let task = Task::new(TaskId(0), 0, 2, 4, Point::new(0.0, 10.0));
        let mut sim =
            Simulation::with_tasks(&cfg, vec![task], Box::new(Scripted(vec![(1, AgentId(0), TaskId(0))]))).unwrap();
        for _ in 0..4 {
            sim.step();
        }
        // Flying since step 1, turns at 4, home at 7.
        assert_eq!(sim.world().agent(AgentId(0)).mode(), AgentMode::Returning { return_at: 7.0 });
        let out = sim.run();
        assert_eq!(out.world.attempts()[0].outcome, Some(AttemptOutcome::Aborted));
    }

    #[test]
    fn fast_round_trip_keeps_commitment_until_settled() {
        // Task at the hub: zero travel, served at window start.
        let cfg = deterministic_cfg(1, 1);
        let task = Task::new(TaskId(0), 0, 3, 8, Point::new(0.0, 0.0));
        let out = Simulation::with_tasks(&cfg, vec![task], Box::new(Scripted(vec![(1, AgentId(0), TaskId(0))])))
            .unwrap()
            .record_agents(true)
            .run();
        assert_eq!(out.world.task(TaskId(0)).status(), TaskStatus::Completed { at: 3.0 });
        let snaps: Vec<AgentSnapshot> = out.trace.iter().map(|s| s.agents.as_ref().unwrap()[0]).collect();
        // Completed at 3.0, observable at step 3, free again at step 4.
        assert_eq!(snaps[2].held, Some(TaskId(0)));
        assert!(snaps[3].at_hub && snaps[3].held.is_none());
    }

    #[test]
    fn conservation_and_determinism_on_generated_scenario() {
        let cfg = ScenarioConfig { seed: 5, horizon: 120, ..Default::default() };
        let a = run_trial_traced(&cfg, PolicyKind::Ibr).unwrap();
        let b = run_trial_traced(&cfg, PolicyKind::Ibr).unwrap();
        assert!(a.world.tasks().iter().all(|t| t.status().is_terminal()));
        let done = a.world.tasks().iter().filter(|t| t.status().is_completed()).count();
        assert_eq!(done, a.record.n_completed);
        assert_eq!(a.record.without_timing(), b.record.without_timing());
        assert_eq!(a.world.attempts(), b.world.attempts());
    }

    #[test]
    fn trace_jsonl_has_one_line_per_step() {
        let cfg = ScenarioConfig { seed: 1, horizon: 10, ..Default::default() };
        let out = run_trial_traced(&cfg, PolicyKind::Edd).unwrap();
        let mut buf = Vec::new();
        write_trace_jsonl(&out.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["t"], 1);
    }
}
