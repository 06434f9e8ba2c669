//! Agents on a bounded toroidal plane and their synchronous flocking update.
//!
//! Each agent stands for one service descriptor. Neighbors inside the sensor
//! range are split by the similarity threshold `lambda`: similar neighbors
//! drive alignment, cohesion and similarity attraction, dissimilar ones drive
//! dissimilarity repulsion, and every neighbor inside the collision radius
//! contributes separation. The weighted sum, capped at `max_speed`, becomes
//! the agent's new velocity.

pub mod forces;
mod geometry;
mod grid;

pub use forces::{NeighborView, SeparationMode};
pub use geometry::{Position, Torus, Vec2, Velocity};
pub use grid::NeighborGrid;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::similarity::{ServiceDescriptor, SimilarityProvider};

/// Geometry, thresholds and seed of a virtual space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub width: f64,
    pub height: f64,
    pub sensor_range: f64,
    pub separation_radius: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub max_speed: f64,
    pub eps_div: f64,
    pub seed: u64,
    #[serde(default)]
    pub separation_mode: SeparationMode,
    /// Use `d < epsilon` instead of `d <= epsilon` for cluster links and
    /// search results.
    #[serde(default)]
    pub strict_epsilon: bool,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            width: 100.0,
            height: 100.0,
            sensor_range: 8.0,
            separation_radius: 2.0,
            epsilon: 3.0,
            lambda: 0.5,
            max_speed: 2.0,
            eps_div: 1e-6,
            seed: 0,
            separation_mode: SeparationMode::Repulsive,
            strict_epsilon: false,
        }
    }
}

impl SpaceConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn torus(&self) -> Torus {
        Torus::new(self.width, self.height)
    }

    /// Whether `distance` is inside an epsilon-style radius under the
    /// configured boundary rule.
    pub fn within(&self, distance: f64, radius: f64) -> bool {
        if self.strict_epsilon {
            distance < radius
        } else {
            distance <= radius
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("width", self.width),
            ("height", self.height),
            ("sensor_range", self.sensor_range),
            ("separation_radius", self.separation_radius),
            ("epsilon", self.epsilon),
            ("lambda", self.lambda),
            ("max_speed", self.max_speed),
            ("eps_div", self.eps_div),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("{name} must be finite")));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(Error::Config("space extents must be positive".into()));
        }
        if !(0.0 < self.separation_radius && self.separation_radius < self.sensor_range) {
            return Err(Error::Config("need 0 < separation_radius < sensor_range".into()));
        }
        if self.sensor_range > self.width.min(self.height) / 2.0 {
            return Err(Error::Config("sensor_range must not exceed half the smaller extent".into()));
        }
        if !(0.0 < self.epsilon && self.epsilon <= self.sensor_range) {
            return Err(Error::Config("need 0 < epsilon <= sensor_range".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config("lambda must lie in [0, 1]".into()));
        }
        if self.max_speed <= 0.0 || self.eps_div <= 0.0 {
            return Err(Error::Config("max_speed and eps_div must be positive".into()));
        }
        Ok(())
    }
}

/// Weights of the five steering components in the total velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlockWeights {
    pub alignment: f64,
    pub separation: f64,
    pub cohesion: f64,
    pub similarity: f64,
    pub dissimilarity: f64,
}

impl Default for FlockWeights {
    fn default() -> Self {
        Self {
            alignment: 0.3,
            separation: 1.0,
            cohesion: 0.3,
            similarity: 1.0,
            dissimilarity: 1.0,
        }
    }
}

impl FlockWeights {
    pub fn as_array(&self) -> [f64; 5] {
        [self.alignment, self.separation, self.cohesion, self.similarity, self.dissimilarity]
    }

    pub fn from_array(w: [f64; 5]) -> Self {
        Self {
            alignment: w[0],
            separation: w[1],
            cohesion: w[2],
            similarity: w[3],
            dissimilarity: w[4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config("weights must be finite and nonnegative".into()));
        }
        if !w.iter().any(|&x| x > 0.0) {
            return Err(Error::Config("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Real,
    Virtual,
}

/// A boid carrying one service descriptor.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u64,
    pub kind: AgentKind,
    pub descriptor: Arc<ServiceDescriptor>,
    pub position: Position,
    pub velocity: Velocity,
}

impl Agent {
    pub fn is_real(&self) -> bool {
        self.kind == AgentKind::Real
    }
}

/// An agent found near another, with its toroidal distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u64,
    pub distance: f64,
}

/// Service-pair similarity keyed by agent ids. Descriptors never change
/// after insertion, so entries stay valid for the life of the space.
#[derive(Debug, Default)]
struct PairMemo(RwLock<HashMap<(u64, u64), f64>>);

impl Clone for PairMemo {
    fn clone(&self) -> Self {
        PairMemo(RwLock::new(self.0.read().expect("memo poisoned").clone()))
    }
}

impl PairMemo {
    fn get_or_compute(&self, a: &Agent, b: &Agent, provider: &SimilarityProvider) -> f64 {
        let key = if a.id <= b.id { (a.id, b.id) } else { (b.id, a.id) };
        if let Some(&s) = self.0.read().expect("memo poisoned").get(&key) {
            return s;
        }
        let (lo, hi) = if a.id <= b.id { (a, b) } else { (b, a) };
        // Descriptors are validated non-empty at construction.
        let s = provider
            .service_similarity(&lo.descriptor, &hi.descriptor)
            .unwrap_or(0.0);
        *self.0.write().expect("memo poisoned").entry(key).or_insert(s)
    }
}

/// The virtual space: configuration, weights, agents and neighbor index.
#[derive(Debug, Clone)]
pub struct FlockSpace {
    config: SpaceConfig,
    weights: FlockWeights,
    /// Sorted by ascending id.
    agents: Vec<Agent>,
    tick: u64,
    next_id: u64,
    grid: NeighborGrid,
    memo: PairMemo,
    parallel: bool,
}

impl FlockSpace {
    pub fn new(config: SpaceConfig, weights: FlockWeights) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        let grid = NeighborGrid::new(config.torus(), config.sensor_range);
        Ok(Self {
            config,
            weights,
            agents: Vec::new(),
            tick: 0,
            next_id: 0,
            grid,
            memo: PairMemo::default(),
            parallel: true,
        })
    }

    /// Reassembles a space from stored state, e.g. a snapshot.
    pub fn from_parts(config: SpaceConfig, weights: FlockWeights, tick: u64, next_id: u64, mut agents: Vec<Agent>) -> Result<Self> {
        let mut space = Self::new(config, weights)?;
        agents.sort_by_key(|a| a.id);
        if agents.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::Snapshot("duplicate agent id".into()));
        }
        let torus = space.config.torus();
        for a in &agents {
            if !torus.contains(a.position) || !a.velocity.is_finite() {
                return Err(Error::Snapshot(format!("agent {} has an invalid state", a.id)));
            }
            if a.is_real() && a.id >= next_id {
                return Err(Error::Snapshot(format!("agent id {} not below next id {next_id}", a.id)));
            }
        }
        space.agents = agents;
        space.tick = tick;
        space.next_id = next_id;
        space.rebuild_grid();
        Ok(space)
    }

    pub fn config(&self) -> &SpaceConfig {
        &self.config
    }

    pub fn weights(&self) -> &FlockWeights {
        &self.weights
    }

    /// Replaces the steering weights for subsequent steps.
    pub fn set_weights(&mut self, weights: FlockWeights) -> Result<()> {
        weights.validate()?;
        self.weights = weights;
        Ok(())
    }

    pub fn torus(&self) -> Torus {
        self.config.torus()
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn real_agents(&self) -> impl Iterator<Item = &Agent> {
        self.agents.iter().filter(|a| a.is_real())
    }

    pub fn agent(&self, id: u64) -> Option<&Agent> {
        self.agents
            .binary_search_by_key(&id, |a| a.id)
            .ok()
            .map(|i| &self.agents[i])
    }

    pub fn grid(&self) -> &NeighborGrid {
        &self.grid
    }

    /// Toggles rayon evaluation of per-agent forces. Results are identical
    /// either way.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    /// Adds a real agent with the next free id and returns that id.
    pub fn insert(&mut self, descriptor: Arc<ServiceDescriptor>, position: Position, velocity: Velocity) -> Result<u64> {
        let id = self.next_id;
        self.push(Agent {
            id,
            kind: AgentKind::Real,
            descriptor,
            position,
            velocity,
        })?;
        self.next_id += 1;
        Ok(id)
    }

    /// Adds a real agent at a position and heading drawn from
    /// `(seed, agent id, current tick)`, moving at half the speed cap.
    pub fn insert_random(&mut self, descriptor: Arc<ServiceDescriptor>) -> Result<u64> {
        let (position, velocity) = self.random_placement(self.config.seed, self.next_id, self.tick);
        self.insert(descriptor, position, velocity)
    }

    /// Random placement keyed by `(seed, stream, tick)`.
    pub fn random_placement(&self, seed: u64, stream: u64, tick: u64) -> (Position, Velocity) {
        use rand::Rng;
        let mut rng = rng::keyed(seed, Domain::Placement, stream, tick);
        let x = rng.random::<f64>() * self.config.width;
        let y = rng.random::<f64>() * self.config.height;
        let (dx, dy) = rng::unit_direction(&mut rng);
        let speed = self.config.max_speed / 2.0;
        (self.torus().wrap(x, y), Vec2::new(dx * speed, dy * speed))
    }

    /// Adds an agent with a caller-chosen id (used for virtual agents).
    pub fn insert_agent(&mut self, agent: Agent) -> Result<()> {
        if agent.is_real() && agent.id >= self.next_id {
            self.next_id = agent.id + 1;
        }
        self.push(agent)
    }

    fn push(&mut self, agent: Agent) -> Result<()> {
        if !self.torus().contains(agent.position) {
            return Err(Error::InvalidArgument(format!("agent {} placed outside the space", agent.id)));
        }
        if !agent.velocity.is_finite() {
            return Err(Error::InvalidArgument(format!("agent {} has a non-finite velocity", agent.id)));
        }
        match self.agents.binary_search_by_key(&agent.id, |a| a.id) {
            Ok(_) => Err(Error::InvalidArgument(format!("agent id {} already in use", agent.id))),
            Err(at) => {
                self.agents.insert(at, agent);
                self.rebuild_grid();
                Ok(())
            }
        }
    }

    fn rebuild_grid(&mut self) {
        self.grid.rebuild(self.agents.iter().map(|a| a.position));
    }

    /// Agents within `radius` of `point`, excluding `exclude`, sorted by
    /// ascending distance then id. `inclusive` selects `<=` over `<`.
    pub fn agents_near(&self, point: Position, radius: f64, exclude: Option<u64>, inclusive: bool) -> Vec<Neighbor> {
        let torus = self.torus();
        let accept = |d: f64| if inclusive { d <= radius } else { d < radius };
        let make = |i: usize| {
            let a = &self.agents[i];
            (Some(a.id) != exclude)
                .then(|| Neighbor {
                    id: a.id,
                    distance: torus.distance(point, a.position),
                })
                .filter(|n| accept(n.distance))
        };
        let mut out: Vec<Neighbor> = if radius <= self.grid.reach() {
            self.grid.candidates(point).into_iter().filter_map(make).collect()
        } else {
            (0..self.agents.len()).filter_map(make).collect()
        };
        out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        out
    }

    /// Agents within the sensor range of agent `id`.
    pub fn neighbors(&self, id: u64) -> Vec<Neighbor> {
        match self.agent(id) {
            Some(a) => self.agents_near(a.position, self.config.sensor_range, Some(id), true),
            None => Vec::new(),
        }
    }

    /// Neighbor views of agent `index` as consumed by the force functions.
    fn perceive(&self, index: usize, provider: &SimilarityProvider) -> Vec<NeighborView> {
        let me = &self.agents[index];
        let torus = self.torus();
        let mut views: Vec<NeighborView> = self
            .grid
            .candidates(me.position)
            .into_iter()
            .filter(|&j| j != index)
            .filter_map(|j| {
                let other = &self.agents[j];
                let offset = torus.displacement(me.position, other.position);
                let distance = offset.norm();
                (distance <= self.config.sensor_range).then_some((j, offset, distance))
            })
            .map(|(j, offset, distance)| {
                let other = &self.agents[j];
                NeighborView {
                    id: other.id,
                    offset,
                    distance,
                    velocity: other.velocity,
                    similarity: self.memo.get_or_compute(me, other, provider),
                }
            })
            .collect();
        views.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        views
    }

    /// Total steering velocity of agent `index` against the current state.
    fn steer(&self, index: usize, provider: &SimilarityProvider) -> Velocity {
        let me = &self.agents[index];
        let cfg = &self.config;
        let w = &self.weights;
        let views = self.perceive(index, provider);

        let (similar, dissimilar): (Vec<NeighborView>, Vec<NeighborView>) =
            views.iter().partition(|n| n.similarity >= cfg.lambda);
        let colliding: Vec<NeighborView> = views
            .iter()
            .filter(|n| n.distance <= cfg.separation_radius)
            .copied()
            .collect();

        let total = forces::alignment_velocity(&similar) * w.alignment
            + forces::separation_velocity(&colliding, me.velocity, cfg.separation_mode, cfg.eps_div) * w.separation
            + forces::cohesion_velocity(&similar) * w.cohesion
            + forces::similarity_velocity(&similar) * w.similarity
            + forces::dissimilarity_velocity(&dissimilar, cfg.eps_div) * w.dissimilarity;

        let speed = total.norm();
        if speed > cfg.max_speed {
            total * (cfg.max_speed / speed)
        } else if speed > 0.0 {
            total
        } else {
            self.idle_heading(me)
        }
    }

    /// Velocity for an agent whose steering cancels out: keep the previous
    /// heading (or draw one) at half the speed cap.
    fn idle_heading(&self, agent: &Agent) -> Velocity {
        let half = self.config.max_speed / 2.0;
        let dir = agent.velocity.unit();
        if dir != Vec2::ZERO {
            return dir * half;
        }
        let mut rng = rng::keyed(self.config.seed, Domain::Heading, agent.id, self.tick);
        let (dx, dy) = rng::unit_direction(&mut rng);
        Vec2::new(dx, dy) * half
    }

    /// Advances every agent by one tick. All velocities are computed from the
    /// state at the current tick before any agent moves.
    pub fn step(&mut self, provider: &SimilarityProvider) {
        let velocities: Vec<Velocity> = if self.parallel {
            (0..self.agents.len())
                .into_par_iter()
                .map(|i| self.steer(i, provider))
                .collect()
        } else {
            (0..self.agents.len()).map(|i| self.steer(i, provider)).collect()
        };
        let torus = self.torus();
        for (agent, v) in self.agents.iter_mut().zip(velocities) {
            agent.velocity = v;
            agent.position = torus.translate(agent.position, v);
        }
        self.tick += 1;
        self.rebuild_grid();
    }

    pub fn run(&mut self, provider: &SimilarityProvider, ticks: usize) {
        for _ in 0..ticks {
            self.step(provider);
        }
    }

    /// Checks positions, velocities and the grid against their invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let torus = self.torus();
        for a in &self.agents {
            if !torus.contains(a.position) {
                return Err(Error::Invariant(format!("agent {} out of bounds", a.id)));
            }
            if !a.velocity.is_finite() || a.velocity.norm() > self.config.max_speed * (1.0 + 1e-12) {
                return Err(Error::Invariant(format!("agent {} velocity out of range", a.id)));
            }
        }
        let (cols, rows) = self.grid.dims();
        let mut seen = vec![0usize; self.agents.len()];
        for cy in 0..rows {
            for cx in 0..cols {
                for &i in self.grid.bucket(cx, cy) {
                    if i >= seen.len() || self.grid.cell_of(self.agents[i].position) != (cx, cy) {
                        return Err(Error::Invariant("grid bucket does not match position".into()));
                    }
                    seen[i] += 1;
                }
            }
        }
        if seen.iter().any(|&n| n != 1) {
            return Err(Error::Invariant("grid does not index every agent exactly once".into()));
        }
        Ok(())
    }
}
