//! Scenario configuration and task generation.
//!
//! Configs are TOML documents; every field has a default so a config file
//! only needs to list what it changes. See `docs/config.md` for the schema.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::comm_graph::{CommGraph, TopologyConfig};
use crate::error::{Error, Result};
use crate::stochastics::{SeededRng, SpreadConvention, TravelDist, TravelModel};
use crate::world::{mean_travel_time, AgentId, Hub, HubId, Point, Step, Task, TaskId};

/// Side of the square service area, in km.
pub const AREA_SIDE_KM: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn centered(center: Point, side: f64) -> Self {
        let h = side / 2.0;
        Self::new(Point::new(center.x - h, center.y - h), Point::new(center.x + h, center.y + h))
    }

    /// Zero-area rectangles are allowed; inverted or non-finite ones are not.
    pub fn is_valid(&self) -> bool {
        [self.min.x, self.min.y, self.max.x, self.max.y].iter().all(|v| v.is_finite())
            && self.min.x <= self.max.x
            && self.min.y <= self.max.y
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }

    fn sample(&self, rng: &mut SeededRng) -> Point {
        Point::new(rng.uniform(self.min.x, self.max.x), rng.uniform(self.min.y, self.max.y))
    }
}

/// Package generation zone presets, centred on the depot centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictLevel {
    /// Whole service area.
    #[default]
    Low,
    Mid,
    High,
}

impl ConflictLevel {
    pub fn box_side_km(self) -> f64 {
        match self {
            ConflictLevel::Low => AREA_SIDE_KM,
            ConflictLevel::Mid => 8.0,
            ConflictLevel::High => 4.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConflictLevel::Low => "low",
            ConflictLevel::Mid => "mid",
            ConflictLevel::High => "high",
        }
    }
}

impl FromStr for ConflictLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(ConflictLevel::Low),
            "mid" | "medium" => Ok(ConflictLevel::Mid),
            "high" => Ok(ConflictLevel::High),
            other => Err(Error::InvalidConfig(format!("unknown conflict level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum DepotLayout {
    /// Evenly spaced on a circle around the area centre.
    Ring {
        #[serde(default = "default_ring_radius")]
        radius: f64,
    },
    /// Near-square grid with equal margins.
    Grid,
    Points {
        points: Vec<Point>,
    },
}

fn default_ring_radius() -> f64 {
    3.5
}

impl Default for DepotLayout {
    fn default() -> Self {
        DepotLayout::Ring { radius: default_ring_radius() }
    }
}

impl DepotLayout {
    pub fn positions(&self, n: usize) -> Result<Vec<Point>> {
        let c = AREA_SIDE_KM / 2.0;
        match self {
            DepotLayout::Ring { radius } => {
                if n == 1 {
                    return Ok(vec![Point::new(c, c)]);
                }
                Ok((0..n)
                    .map(|i| {
                        let theta = std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * i as f64 / n as f64;
                        Point::new(c + radius * theta.cos(), c + radius * theta.sin())
                    })
                    .collect())
            }
            DepotLayout::Grid => {
                let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
                let rows = n.div_ceil(cols);
                Ok((0..n)
                    .map(|i| {
                        let (r, col) = (i / cols, i % cols);
                        // Cells of the last row are centred when it is short.
                        let in_row = if r + 1 == rows { n - r * cols } else { cols };
                        let x = AREA_SIDE_KM * (col as f64 + 0.5) / in_row as f64;
                        let y = AREA_SIDE_KM * (r as f64 + 0.5) / rows as f64;
                        Point::new(x, y)
                    })
                    .collect())
            }
            DepotLayout::Points { points } => {
                if points.len() != n {
                    return Err(Error::InvalidConfig(format!(
                        "depot layout lists {} points but n_depots = {n}",
                        points.len()
                    )));
                }
                Ok(points.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_depots: usize,
    pub n_agents: usize,
    /// Number of planning steps `T`.
    pub horizon: Step,
    pub step_minutes: f64,
    /// Per-step probability of one new request.
    pub p_new: f64,
    /// Nominal window duration `w`, in minutes.
    pub window_nominal: f64,
    /// Defaults to `ceil(1.5 * n_agents)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_tasks: Option<usize>,
    pub sensing_radius: f64,
    pub speed_km_per_min: f64,
    pub ibr_max_rounds: u32,
    pub seed: u64,
    /// Turn back as soon as the window of the pursued task closes.
    pub abort_on_expiry: bool,
    pub travel_model: TravelModel,
    pub spread: SpreadConvention,
    pub conflict_level: ConflictLevel,
    /// Overrides the `conflict_level` preset when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conflict_box: Option<Rect>,
    pub depots: DepotLayout,
    pub topology: TopologyConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_depots: 5,
            n_agents: 15,
            horizon: 480,
            step_minutes: 1.0,
            p_new: 0.5,
            window_nominal: 30.0,
            initial_tasks: None,
            sensing_radius: 5.0,
            speed_km_per_min: 0.15,
            ibr_max_rounds: 10,
            seed: 0,
            abort_on_expiry: false,
            travel_model: TravelModel::Epanechnikov,
            spread: SpreadConvention::HalfWidth,
            conflict_level: ConflictLevel::Low,
            conflict_box: None,
            depots: DepotLayout::default(),
            topology: TopologyConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_depots == 0 {
            return bad("n_depots must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.step_minutes > 0.0) {
            return bad(format!("step_minutes must be positive, got {}", self.step_minutes));
        }
        if !(0.0..=1.0).contains(&self.p_new) {
            return bad(format!("p_new must lie in [0, 1], got {}", self.p_new));
        }
        if !(self.window_nominal > 0.0) || !self.window_nominal.is_finite() {
            return bad(format!("window_nominal must be positive, got {}", self.window_nominal));
        }
        if !(self.sensing_radius > 0.0) {
            return bad(format!("sensing_radius must be positive, got {}", self.sensing_radius));
        }
        if !(self.speed_km_per_min > 0.0) || !self.speed_km_per_min.is_finite() {
            return bad(format!("speed_km_per_min must be positive, got {}", self.speed_km_per_min));
        }
        if self.ibr_max_rounds == 0 {
            return bad("ibr_max_rounds must be at least 1".into());
        }
        if !self.task_box().is_valid() {
            return bad(format!("conflict box {:?} is empty", self.task_box()));
        }
        self.depots.positions(self.n_depots)?;
        self.comm_graph()?;
        Ok(())
    }

    pub fn initial_task_count(&self) -> usize {
        self.initial_tasks.unwrap_or_else(|| (1.5 * self.n_agents as f64).ceil() as usize)
    }

    pub fn window_steps(&self) -> f64 {
        self.window_nominal / self.step_minutes
    }

    pub fn speed_km_per_step(&self) -> f64 {
        self.speed_km_per_min * self.step_minutes
    }

    pub fn hubs(&self) -> Result<Vec<Hub>> {
        Ok(self
            .depots
            .positions(self.n_depots)?
            .into_iter()
            .enumerate()
            .map(|(i, location)| Hub { id: HubId(i), location, sensing_radius: self.sensing_radius })
            .collect())
    }

    /// Agents are dealt round-robin across depots.
    pub fn agent_hubs(&self) -> Vec<HubId> {
        (0..self.n_agents).map(|i| HubId(i % self.n_depots)).collect()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.n_agents).map(AgentId)
    }

    pub fn comm_graph(&self) -> Result<CommGraph> {
        self.topology.spec.build(self.n_depots)
    }

    /// Rectangle tasks are sampled from.
    pub fn task_box(&self) -> Rect {
        if let Some(b) = self.conflict_box {
            return b;
        }
        let centroid = self
            .depots
            .positions(self.n_depots)
            .ok()
            .filter(|p| !p.is_empty())
            .map(|p| {
                let n = p.len() as f64;
                Point::new(p.iter().map(|q| q.x).sum::<f64>() / n, p.iter().map(|q| q.y).sum::<f64>() / n)
            })
            .unwrap_or(Point::new(AREA_SIDE_KM / 2.0, AREA_SIDE_KM / 2.0));
        match self.conflict_level {
            ConflictLevel::Low => Rect::new(Point::new(0.0, 0.0), Point::new(AREA_SIDE_KM, AREA_SIDE_KM)),
            level => Rect::centered(centroid, level.box_side_km()),
        }
    }

    pub fn travel_distribution(&self, hub: &Hub, location: &Point) -> TravelDist {
        let mean = mean_travel_time(hub, location, self.speed_km_per_step());
        self.travel_model.distribution(mean, self.spread)
    }

    /// Short hex digest of every field except `seed` and `topology`, so
    /// records from paired runs on different graphs can be matched.
    pub fn pairing_digest(&self) -> String {
        let mut base = self.clone();
        base.seed = 0;
        base.topology = TopologyConfig::default();
        let text = toml::to_string(&base).expect("scenario config always serializes");
        hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
    }

    /// Applies a `depots/agents` fleet preset such as `"5/15"`.
    pub fn set_fleet(&mut self, preset: &str) -> Result<()> {
        let (d, a) = preset
            .split_once('/')
            .ok_or_else(|| Error::InvalidConfig(format!("fleet preset `{preset}` is not depots/agents")))?;
        let parse = |v: &str| {
            v.trim().parse::<usize>().map_err(|_| Error::InvalidConfig(format!("bad fleet preset `{preset}`")))
        };
        self.n_depots = parse(d)?;
        self.n_agents = parse(a)?;
        if let DepotLayout::Points { .. } = self.depots {
            self.depots = DepotLayout::default();
        }
        Ok(())
    }
}

/// Draws a window for a task revealed at `t`: start uniform on the integer
/// steps in `[t + w/2, t + w]`, duration uniform on `[w/2, w]`.
fn sample_window(t: Step, w: f64, rng: &mut SeededRng) -> (Step, Step) {
    let start = t + int_in(w / 2.0, w, rng);
    (start, start + int_in(w / 2.0, w, rng))
}

fn int_in(lo: f64, hi: f64, rng: &mut SeededRng) -> Step {
    let (a, b) = (lo.ceil() as Step, hi.floor() as Step);
    if a > b {
        // Interval holds no integer.
        return ((lo + hi) / 2.0).round() as Step;
    }
    rng.uniform_int(a, b)
}

fn make_task(cfg: &ScenarioConfig, id: TaskId, t: Step, area: &Rect, rng: &mut SeededRng) -> Task {
    let location = area.sample(rng);
    let (start, end) = sample_window(t, cfg.window_steps(), rng);
    Task::new(id, t, start, end, location)
}

/// Tasks present at the start of the scenario, revealed at step 0.
pub fn generate_initial_tasks(cfg: &ScenarioConfig, rng: &mut SeededRng) -> Result<Vec<Task>> {
    let area = cfg.task_box();
    if !area.is_valid() {
        return Err(Error::InvalidConfig(format!("conflict box {area:?} is empty")));
    }
    Ok((0..cfg.initial_task_count()).map(|i| make_task(cfg, TaskId(i), 0, &area, rng)).collect())
}

/// One Bernoulli(`p_new`) draw; on success a task revealed at `t`.
pub fn maybe_spawn_task(cfg: &ScenarioConfig, t: Step, id: TaskId, rng: &mut SeededRng) -> Option<Task> {
    if rng.bernoulli(cfg.p_new) {
        Some(make_task(cfg, id, t, &cfg.task_box(), rng))
    } else {
        None
    }
}
