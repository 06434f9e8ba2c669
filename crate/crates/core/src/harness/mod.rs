//! Corpus ingestion, synthetic data, snapshots and experiment reports.

mod corpus;
mod experiment;
mod snapshot;
mod synthetic;

pub use corpus::{load_corpus, parse_corpus, to_descriptors, write_corpus, CorpusRecord};
pub use experiment::{run_experiment, ExperimentPlan, ExperimentReport, ExperimentRun, PhaseReport};
pub use snapshot::{AgentRecord, ProviderSpec, Snapshot, SNAPSHOT_VERSION};
pub use synthetic::{generate_synthetic, OracleSimilarity, SyntheticSpec};
