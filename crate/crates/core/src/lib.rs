//! Self-organizing retrieval of tagged services.
//!
//! Services become agents in a bounded toroidal plane. Flocking forces
//! weighted by semantic similarity pull related services together and push
//! unrelated ones apart, so clusters emerge without a global clustering pass
//! and new services can be absorbed as they arrive. Queries are answered by
//! injecting a virtual agent built from the query tags and collecting the
//! services that end up around it.
//!
//! - [`similarity`]: tag normalization, tag and service similarity.
//! - [`flockspace`]: the space, its neighbor grid and the flocking step.
//! - [`stream`]: initial deployment, batch absorption, cluster extraction.
//! - [`search`]: virtual-agent queries and evaluation metrics.
//! - [`harness`]: corpus files, synthetic data, snapshots, experiments.

pub mod error;
pub mod flockspace;
pub mod harness;
pub mod rng;
pub mod search;
pub mod similarity;
pub mod stream;

pub use error::{Error, Result};
pub use flockspace::{Agent, AgentKind, FlockSpace, FlockWeights, Position, SpaceConfig, Vec2};
pub use search::{evaluate, search, LabeledQuery, Metrics, Query, ResultSet};
pub use similarity::{ServiceDescriptor, SimilarityProvider, Tag};
pub use stream::{absorb_batch, extract_clusters, initialize, BatchConfig, ClusterAssignment};
