use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::synthetic::{OracleSimilarity, SyntheticSpec};
use crate::error::{Error, Result};
use crate::flockspace::{Agent, AgentKind, FlockSpace, FlockWeights, Position, SpaceConfig, Vec2};
use crate::similarity::{DistributionalModel, ServiceDescriptor, SimilarityProvider, SimilarityTable};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Where a space's similarity scores come from, in a form that can be
/// rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSpec {
    Model {
        corpus: PathBuf,
        window: usize,
        min_count: usize,
    },
    Table {
        path: PathBuf,
    },
    Oracle {
        spec: SyntheticSpec,
    },
}

impl ProviderSpec {
    pub fn build(&self) -> Result<SimilarityProvider> {
        Ok(match self {
            ProviderSpec::Model {
                corpus,
                window,
                min_count,
            } => SimilarityProvider::new(Arc::new(DistributionalModel::from_file(corpus, *window, *min_count)?)),
            ProviderSpec::Table { path } => SimilarityProvider::new(Arc::new(SimilarityTable::from_file(path)?)),
            ProviderSpec::Oracle { spec } => SimilarityProvider::new(Arc::new(OracleSimilarity::new(spec.clone())?)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: u64,
    pub kind: AgentKind,
    pub service: String,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

/// Complete persisted state of a live space. Caches are not stored; they
/// are rebuilt on demand and do not affect results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    pub config: SpaceConfig,
    pub weights: FlockWeights,
    pub tick: u64,
    pub next_id: u64,
    pub provider: ProviderSpec,
    pub services: Vec<ServiceDescriptor>,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    pub agents: Vec<AgentRecord>,
}

impl Snapshot {
    /// Captures `space`. Virtual agents only live inside query sandboxes and
    /// are refused here.
    pub fn capture(space: &FlockSpace, provider: ProviderSpec, labels: BTreeMap<String, String>) -> Result<Self> {
        let mut services = Vec::new();
        let mut agents = Vec::new();
        for a in space.agents() {
            if !a.is_real() {
                return Err(Error::Snapshot(format!("agent {} is virtual and cannot be persisted", a.id)));
            }
            services.push((*a.descriptor).clone());
            agents.push(AgentRecord {
                id: a.id,
                kind: a.kind,
                service: a.descriptor.id.clone(),
                position: [a.position.x, a.position.y],
                velocity: [a.velocity.x, a.velocity.y],
            });
        }
        Ok(Self {
            format_version: SNAPSHOT_VERSION,
            config: space.config().clone(),
            weights: *space.weights(),
            tick: space.tick(),
            next_id: space.next_id(),
            provider,
            services,
            labels,
            agents,
        })
    }

    pub fn restore(&self) -> Result<FlockSpace> {
        if self.format_version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported format version {} (expected {SNAPSHOT_VERSION})",
                self.format_version
            )));
        }
        let mut by_id: HashMap<&str, Arc<ServiceDescriptor>> = HashMap::new();
        for s in &self.services {
            if s.tags().is_empty() {
                return Err(Error::Snapshot(format!("service `{}` has no tags", s.id)));
            }
            if by_id.insert(s.id.as_str(), Arc::new(s.clone())).is_some() {
                return Err(Error::Snapshot(format!("duplicate service `{}`", s.id)));
            }
        }
        let agents = self
            .agents
            .iter()
            .map(|r| {
                let descriptor = by_id
                    .get(r.service.as_str())
                    .cloned()
                    .ok_or_else(|| Error::Snapshot(format!("agent {} references unknown service `{}`", r.id, r.service)))?;
                Ok(Agent {
                    id: r.id,
                    kind: r.kind,
                    descriptor,
                    position: Position {
                        x: r.position[0],
                        y: r.position[1],
                    },
                    velocity: Vec2::new(r.velocity[0], r.velocity[1]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FlockSpace::from_parts(self.config.clone(), self.weights, self.tick, self.next_id, agents)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Invariant(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
