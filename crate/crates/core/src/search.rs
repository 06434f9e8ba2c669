//! Query answering with a virtual agent, and retrieval/clustering metrics.
//!
//! A query becomes an imaginary service. It is dropped into a private copy of
//! the space, the copy is stepped until more than `num_results` real agents
//! sit within epsilon of it (or the budget runs out), and that neighborhood
//! is returned ranked by distance.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flockspace::{Agent, AgentKind, FlockSpace, Vec2};
use crate::rng::{self, Domain};
use crate::similarity::{ServiceDescriptor, SimilarityProvider};
use crate::stream::{extract_clusters, ClusterAssignment};

/// Id reserved for the query's virtual agent inside the sandbox.
pub const VIRTUAL_AGENT_ID: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub tags: Vec<String>,
    pub max_iterations: usize,
    pub num_results: usize,
    #[serde(default)]
    pub epsilon_override: Option<f64>,
}

impl Query {
    pub fn new<S: Into<String>>(tags: impl IntoIterator<Item = S>, max_iterations: usize, num_results: usize) -> Self {
        Self {
            tags: tags.into_iter().map(Into::into).collect(),
            max_iterations,
            num_results,
            epsilon_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tags.iter().all(|t| t.trim().is_empty()) {
            return Err(Error::InvalidQuery("query needs at least one tag".into()));
        }
        if self.max_iterations < 1 || self.num_results < 1 {
            return Err(Error::InvalidQuery("max_iterations and num_results must be at least 1".into()));
        }
        if let Some(e) = self.epsilon_override {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::InvalidQuery(format!("epsilon override {e} must be positive")));
            }
        }
        Ok(())
    }
}

/// One retrieved service.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub agent_id: u64,
    pub service: Arc<ServiceDescriptor>,
    pub distance: f64,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub hits: Vec<Hit>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl ResultSet {
    fn empty() -> Self {
        Self {
            hits: Vec::new(),
            iterations_used: 0,
            converged: false,
        }
    }
}

/// Builds the virtual agent for `query`: tags normalized against the
/// provider, position and heading drawn from `seed`.
pub fn make_virtual_agent(query: &Query, provider: &SimilarityProvider, space: &FlockSpace, seed: u64) -> Result<Agent> {
    let tags: Vec<&str> = query.tags.iter().map(|t| t.trim()).filter(|t| !t.is_empty()).collect();
    if tags.is_empty() {
        return Err(Error::InvalidQuery("query needs at least one tag".into()));
    }
    let descriptor = provider
        .descriptor("query", "query", &tags)
        .map_err(|e| Error::InvalidQuery(e.to_string()))?;
    let cfg = space.config();
    let mut rng = rng::keyed(seed, Domain::Query, 0, 0);
    let x = rng.random::<f64>() * cfg.width;
    let y = rng.random::<f64>() * cfg.height;
    let (dx, dy) = rng::unit_direction(&mut rng);
    Ok(Agent {
        id: VIRTUAL_AGENT_ID,
        kind: AgentKind::Virtual,
        descriptor: Arc::new(descriptor),
        position: space.torus().wrap(x, y),
        velocity: Vec2::new(dx, dy) * (cfg.max_speed / 2.0),
    })
}

/// Runs `query` on a copy of `space`; the live space is not touched.
pub fn search(space: &FlockSpace, query: &Query, provider: &SimilarityProvider, seed: u64) -> Result<ResultSet> {
    query.validate()?;
    if space.real_agents().next().is_none() {
        return Ok(ResultSet::empty());
    }
    let epsilon = query.epsilon_override.unwrap_or(space.config().epsilon);
    let probe = make_virtual_agent(query, provider, space, seed)?;
    let probe_descriptor = probe.descriptor.clone();

    let mut sandbox = space.clone();
    sandbox.insert_agent(probe)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < query.max_iterations {
        sandbox.step(provider);
        iterations += 1;
        if harvest(&sandbox, epsilon).len() > query.num_results {
            converged = true;
            break;
        }
    }

    let mut hits = Vec::new();
    for (agent, distance) in harvest(&sandbox, epsilon) {
        let similarity = provider.service_similarity(&probe_descriptor, &agent.descriptor)?;
        hits.push(Hit {
            agent_id: agent.id,
            service: agent.descriptor.clone(),
            distance,
            similarity,
        });
    }
    hits.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(b.similarity.total_cmp(&a.similarity))
            .then(a.agent_id.cmp(&b.agent_id))
    });
    Ok(ResultSet {
        hits,
        iterations_used: iterations,
        converged,
    })
}

/// Real agents within `epsilon` of the virtual agent.
fn harvest(sandbox: &FlockSpace, epsilon: f64) -> Vec<(&Agent, f64)> {
    let Some(probe) = sandbox.agent(VIRTUAL_AGENT_ID) else {
        return Vec::new();
    };
    let inclusive = !sandbox.config().strict_epsilon;
    sandbox
        .agents_near(probe.position, epsilon, Some(VIRTUAL_AGENT_ID), inclusive)
        .into_iter()
        .filter_map(|n| sandbox.agent(n.id).map(|a| (a, n.distance)))
        .filter(|(a, _)| a.is_real())
        .collect()
}

/// A query with the ground-truth category it should retrieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledQuery {
    #[serde(flatten)]
    pub query: Query,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub label: String,
    pub retrieved: usize,
    pub relevant_in_top_k: usize,
    pub precision_at_k: f64,
    pub recall_at_k: f64,
    pub converged: bool,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub k: usize,
    pub purity: f64,
    pub clusters: usize,
    pub outliers: usize,
    /// Means over queries; `None` without queries.
    pub precision_at_k: Option<f64>,
    pub recall_at_k: Option<f64>,
    pub queries: Vec<QueryOutcome>,
}

/// Fraction of the top `k` labels equal to `target`, over `k`.
pub fn precision_at_k(retrieved: &[&str], target: &str, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = retrieved.iter().take(k).filter(|l| **l == target).count();
    hits as f64 / k as f64
}

/// Fraction of the `relevant_total` items labeled `target` that appear in the
/// top `k`.
pub fn recall_at_k(retrieved: &[&str], target: &str, k: usize, relevant_total: usize) -> f64 {
    if relevant_total == 0 {
        return 0.0;
    }
    let hits = retrieved.iter().take(k).filter(|l| **l == target).count();
    hits as f64 / relevant_total as f64
}

/// `(1/N) * sum over components of the size of their majority label`.
/// Singleton components count as pure. An empty assignment scores 1.
pub fn purity(assignment: &ClusterAssignment, label_of: impl Fn(u64) -> Option<String>) -> Result<f64> {
    let n = assignment.agent_count();
    if n == 0 {
        return Ok(1.0);
    }
    let mut majority_total = 0usize;
    for members in assignment.components() {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for &m in members {
            let label = label_of(m).ok_or_else(|| Error::Config(format!("agent {m} has no label")))?;
            *counts.entry(label).or_default() += 1;
        }
        majority_total += counts.values().copied().max().unwrap_or(0);
    }
    Ok(majority_total as f64 / n as f64)
}

/// Scores clustering purity of `space` and retrieval quality of
/// `queries`. `labels` maps service id to category. Query `i` runs with
/// seed `derive_seed(seed, i)`.
pub fn evaluate(
    space: &FlockSpace,
    provider: &SimilarityProvider,
    labels: &BTreeMap<String, String>,
    queries: &[LabeledQuery],
    k: usize,
    seed: u64,
) -> Result<Metrics> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut category_sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for agent in space.real_agents() {
        let label = labels
            .get(&agent.descriptor.id)
            .ok_or_else(|| Error::Config(format!("service `{}` has no label", agent.descriptor.id)))?;
        *category_sizes.entry(label.as_str()).or_default() += 1;
    }
    let known: BTreeSet<&str> = labels.values().map(String::as_str).collect();
    if let Some(q) = queries.iter().find(|q| !known.contains(q.label.as_str())) {
        return Err(Error::Config(format!("query label `{}` does not occur in the corpus", q.label)));
    }

    let assignment = extract_clusters(space, space.config().epsilon);
    let label_of = |id: u64| space.agent(id).and_then(|a| labels.get(&a.descriptor.id).cloned());
    let purity = purity(&assignment, label_of)?;

    let mut outcomes = Vec::with_capacity(queries.len());
    for (i, lq) in queries.iter().enumerate() {
        let result = search(space, &lq.query, provider, rng::derive_seed(seed, i as u64))?;
        let retrieved: Vec<&str> = result
            .hits
            .iter()
            .map(|h| labels.get(&h.service.id).map(String::as_str).unwrap_or(""))
            .collect();
        let relevant_total = category_sizes.get(lq.label.as_str()).copied().unwrap_or(0);
        outcomes.push(QueryOutcome {
            label: lq.label.clone(),
            retrieved: retrieved.len(),
            relevant_in_top_k: retrieved.iter().take(k).filter(|l| **l == lq.label).count(),
            precision_at_k: precision_at_k(&retrieved, &lq.label, k),
            recall_at_k: recall_at_k(&retrieved, &lq.label, k, relevant_total),
            converged: result.converged,
            iterations_used: result.iterations_used,
        });
    }
    let mean = |f: fn(&QueryOutcome) -> f64| {
        (!outcomes.is_empty()).then(|| outcomes.iter().map(f).sum::<f64>() / outcomes.len() as f64)
    };
    Ok(Metrics {
        k,
        purity,
        clusters: assignment.clusters.len(),
        outliers: assignment.outliers.len(),
        precision_at_k: mean(|o| o.precision_at_k),
        recall_at_k: mean(|o| o.recall_at_k),
        queries: outcomes,
    })
}
