//! Initial deployment, online absorption of new services, and cluster
//! extraction by epsilon-connectivity.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flockspace::{FlockSpace, FlockWeights, SpaceConfig};
use crate::similarity::{ServiceDescriptor, SimilarityProvider};

/// Tick budgets of the two phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub init_iterations: usize,
    pub maintenance_iterations: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            init_iterations: 600,
            maintenance_iterations: 300,
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.init_iterations < 1 || self.maintenance_iterations < 1 {
            return Err(Error::Config("iteration budgets must be at least 1".into()));
        }
        Ok(())
    }
}

/// Deploys one real agent per service at seeded random positions and
/// headings, then runs `init_iterations` steps.
pub fn initialize(
    services: &[ServiceDescriptor],
    config: SpaceConfig,
    weights: FlockWeights,
    batch: &BatchConfig,
    provider: &SimilarityProvider,
) -> Result<FlockSpace> {
    batch.validate()?;
    if services.is_empty() {
        return Err(Error::InvalidArgument("initial deployment needs at least one service".into()));
    }
    let mut space = FlockSpace::new(config, weights)?;
    deploy(&mut space, services)?;
    space.run(provider, batch.init_iterations);
    Ok(space)
}

/// Inserts `services` into a running space and runs `maintenance_iterations`
/// steps. Existing agents keep their state and move only by the dynamics.
pub fn absorb_batch(
    space: &mut FlockSpace,
    services: &[ServiceDescriptor],
    batch: &BatchConfig,
    provider: &SimilarityProvider,
) -> Result<()> {
    batch.validate()?;
    deploy(space, services)?;
    space.run(provider, batch.maintenance_iterations);
    Ok(())
}

fn deploy(space: &mut FlockSpace, services: &[ServiceDescriptor]) -> Result<()> {
    let mut ids: HashSet<&str> = space.real_agents().map(|a| a.descriptor.id.as_str()).collect();
    for s in services {
        if !ids.insert(s.id.as_str()) {
            return Err(Error::DuplicateId(s.id.clone()));
        }
    }
    for s in services {
        space.insert_random(Arc::new(s.clone()))?;
    }
    Ok(())
}

/// One emergent cluster: a connected component with two or more agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Agent ids in ascending order.
    pub members: Vec<u64>,
}

/// Partition of the real agents into clusters and outliers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Ordered by ascending smallest member id; `id` is the position.
    pub clusters: Vec<Cluster>,
    /// Agents in singleton components, ascending.
    pub outliers: Vec<u64>,
}

impl ClusterAssignment {
    /// Every component, singletons included, as member lists.
    pub fn components(&self) -> impl Iterator<Item = &[u64]> {
        self.clusters
            .iter()
            .map(|c| c.members.as_slice())
            .chain(self.outliers.iter().map(std::slice::from_ref))
    }

    pub fn agent_count(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum::<usize>() + self.outliers.len()
    }

    /// Cluster id of `agent`, `None` for outliers and unknown agents.
    pub fn cluster_of(&self, agent: u64) -> Option<usize> {
        self.clusters
            .iter()
            .find(|c| c.members.binary_search(&agent).is_ok())
            .map(|c| c.id)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Connected components of the graph joining real agents closer than
/// `epsilon` (inclusive unless the space is configured strict).
pub fn extract_clusters(space: &FlockSpace, epsilon: f64) -> ClusterAssignment {
    let inclusive = !space.config().strict_epsilon;
    let real: Vec<&crate::flockspace::Agent> = space.real_agents().collect();
    let slot = |id: u64| real.binary_search_by_key(&id, |a| a.id).ok();

    let mut sets = DisjointSet::new(real.len());
    for (i, a) in real.iter().enumerate() {
        for n in space.agents_near(a.position, epsilon, Some(a.id), inclusive) {
            if n.id > a.id {
                if let Some(j) = slot(n.id) {
                    sets.union(i, j);
                }
            }
        }
    }

    // Agents are visited by ascending id, so components come out ordered by
    // their smallest member.
    let mut root_to_component: Vec<Option<usize>> = vec![None; real.len()];
    let mut components: Vec<Vec<u64>> = Vec::new();
    for (i, a) in real.iter().enumerate() {
        let root = sets.find(i);
        let c = *root_to_component[root].get_or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[c].push(a.id);
    }

    let mut out = ClusterAssignment::default();
    for members in components {
        if members.len() == 1 {
            out.outliers.push(members[0]);
        } else {
            let id = out.clusters.len();
            out.clusters.push(Cluster { id, members });
        }
    }
    out
}
