//! Hubs, agents and tasks.
//!
//! Agent positions are symbolic: an agent is either idle at its hub or
//! somewhere on a trip, and the trip phase is carried by [`AgentMode`].

use std::fmt;

use serde::{Deserialize, Serialize};

/// Discrete planning step. Step 0 is the scenario start; planning runs on `1..=T`.
pub type Step = u32;

macro_rules! index_newtype {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

index_newtype!(HubId, "h");
index_newtype!(AgentId, "a");
index_newtype!(TaskId, "k");

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hub {
    pub id: HubId,
    pub location: Point,
    pub sensing_radius: f64,
}

impl Hub {
    /// Closed-ball membership test for the sensing region.
    pub fn senses(&self, p: &Point) -> bool {
        self.location.distance(p) <= self.sensing_radius
    }
}

/// Mean travel time (in steps) of one leg between a hub and a location.
/// `speed` is in km per step. The return leg has the same mean.
pub fn mean_travel_time(hub: &Hub, location: &Point, speed: f64) -> f64 {
    debug_assert!(speed > 0.0);
    hub.location.distance(location) / speed
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TaskStatus {
    Pending,
    InProgress,
    Completed { at: f64 },
    Expired,
}

impl TaskStatus {
    pub fn is_terminal(&self) -> bool {
        matches!(self, TaskStatus::Completed { .. } | TaskStatus::Expired)
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, TaskStatus::Completed { .. })
    }

    fn rank(&self) -> u8 {
        match self {
            TaskStatus::Pending => 0,
            TaskStatus::InProgress => 1,
            TaskStatus::Completed { .. } | TaskStatus::Expired => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub arrival: Step,
    pub window_start: Step,
    pub window_end: Step,
    pub location: Point,
    status: TaskStatus,
}

impl Task {
    pub fn new(id: TaskId, arrival: Step, window_start: Step, window_end: Step, location: Point) -> Self {
        debug_assert!(arrival <= window_start && window_start <= window_end);
        Self { id, arrival, window_start, window_end, location, status: TaskStatus::Pending }
    }

    pub fn status(&self) -> TaskStatus {
        self.status
    }

    /// `v_k(t)`: completed no later than `t`.
    pub fn completed_by(&self, t: f64) -> bool {
        matches!(self.status, TaskStatus::Completed { at } if at <= t)
    }

    /// Applies a status change, rejecting non-monotone transitions.
    pub(crate) fn transition(&mut self, next: TaskStatus) {
        if next == self.status {
            return;
        }
        assert!(
            next.rank() > self.status.rank(),
            "task {} cannot go from {:?} to {:?}",
            self.id,
            self.status,
            next
        );
        if let TaskStatus::Completed { at } = next {
            assert!(at <= self.window_end as f64, "task {} completed after its window", self.id);
        }
        self.status = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AgentMode {
    IdleAtHub,
    EnRoute { task: TaskId, arrive_at: f64 },
    WaitingAtTask { task: TaskId, service_at: f64 },
    Returning { return_at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub hub: HubId,
    mode: AgentMode,
    action: Option<TaskId>,
    /// Every non-idle selection as `(step, task)`.
    history: Vec<(Step, TaskId)>,
}

impl AgentState {
    pub fn new(id: AgentId, hub: HubId) -> Self {
        Self { id, hub, mode: AgentMode::IdleAtHub, action: None, history: Vec::new() }
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn action(&self) -> Option<TaskId> {
        self.action
    }

    pub fn is_idle(&self) -> bool {
        self.mode == AgentMode::IdleAtHub
    }

    pub fn history(&self) -> &[(Step, TaskId)] {
        &self.history
    }

    /// Has this agent selected `task` at some step strictly before `t`?
    pub fn selected_before(&self, task: TaskId, t: Step) -> bool {
        self.history.iter().any(|&(s, k)| k == task && s < t)
    }

    pub(crate) fn commit(&mut self, step: Step, task: TaskId, mode: AgentMode) {
        debug_assert!(self.is_idle());
        self.action = Some(task);
        self.history.push((step, task));
        self.mode = mode;
    }

    /// Trip phase change; the committed action is kept until the agent is home.
    pub(crate) fn set_trip_mode(&mut self, mode: AgentMode) {
        debug_assert!(mode != AgentMode::IdleAtHub && self.action.is_some());
        self.mode = mode;
    }

    pub(crate) fn arrive_home(&mut self) {
        self.mode = AgentMode::IdleAtHub;
        self.action = None;
    }
}
