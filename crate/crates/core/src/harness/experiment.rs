use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::corpus::{to_descriptors, CorpusRecord};
use crate::error::{Error, Result};
use crate::flockspace::{FlockSpace, FlockWeights, SpaceConfig};
use crate::search::{evaluate, LabeledQuery, Metrics};
use crate::similarity::SimilarityProvider;
use crate::stream::{absorb_batch, initialize, BatchConfig};

/// Everything that parameterizes one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub config: SpaceConfig,
    pub weights: FlockWeights,
    pub batch: BatchConfig,
    pub k: usize,
    pub query_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: String,
    pub services: usize,
    pub ticks: usize,
}

/// Machine-readable experiment outcome; everything except `wall_time_ms`
/// is a deterministic function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    pub provider: String,
    pub phases: Vec<PhaseReport>,
    pub total_ticks: u64,
    pub metrics: Metrics,
    pub oov_misses: u64,
    pub wall_time_ms: u128,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Invariant(e.to_string()))
    }
}

/// Result of [`run_experiment`]: the report plus the final space and labels
/// so callers can persist or inspect them.
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub space: FlockSpace,
    pub labels: BTreeMap<String, String>,
}

/// Initialize on `initial`, absorb each batch in order, then cluster and
/// evaluate `queries` at cutoff `plan.k`.
pub fn run_experiment(
    provider: &SimilarityProvider,
    initial: &[CorpusRecord],
    batches: &[Vec<CorpusRecord>],
    queries: &[LabeledQuery],
    plan: &ExperimentPlan,
) -> Result<ExperimentRun> {
    let started = Instant::now();
    let (services, mut labels) = to_descriptors(initial, provider)?;
    let mut space = initialize(&services, plan.config.clone(), plan.weights, &plan.batch, provider)?;
    let mut phases = vec![PhaseReport {
        phase: "initialization".into(),
        services: services.len(),
        ticks: plan.batch.init_iterations,
    }];
    for (i, batch) in batches.iter().enumerate() {
        let (services, batch_labels) = to_descriptors(batch, provider)?;
        labels.extend(batch_labels);
        absorb_batch(&mut space, &services, &plan.batch, provider)?;
        phases.push(PhaseReport {
            phase: format!("maintenance-{}", i + 1),
            services: services.len(),
            ticks: plan.batch.maintenance_iterations,
        });
    }
    let metrics = evaluate(&space, provider, &labels, queries, plan.k, plan.query_seed)?;
    let report = ExperimentReport {
        plan: plan.clone(),
        provider: provider.source().name().to_string(),
        phases,
        total_ticks: space.tick(),
        metrics,
        oov_misses: provider.oov_misses(),
        wall_time_ms: started.elapsed().as_millis(),
    };
    Ok(ExperimentRun { report, space, labels })
}
