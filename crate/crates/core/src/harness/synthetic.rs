//! Labeled synthetic corpora with a matching oracle similarity.
//!
//! Each category owns a disjoint pool of made-up tags. The oracle scores a
//! pair of tags from the same pool around `intra_sim` and a cross-pool pair
//! around `inter_sim`, with Gaussian noise that is a pure function of the
//! seed and the unordered pair.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::similarity::{SimilaritySource, Vocabulary};

/// Missing fields in a serialized spec take their default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub categories: usize,
    pub services_per_category: usize,
    pub tags_per_service: usize,
    pub intra_sim: f64,
    pub inter_sim: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Tags per category pool; defaults to twice `tags_per_service`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            categories: 4,
            services_per_category: 50,
            tags_per_service: 5,
            intra_sim: 0.9,
            inter_sim: 0.1,
            noise_sigma: 0.05,
            seed: 0,
            pool_size: None,
        }
    }
}

impl SyntheticSpec {
    pub fn pool_size(&self) -> usize {
        self.pool_size.unwrap_or(2 * self.tags_per_service)
    }

    pub fn validate(&self) -> Result<()> {
        if self.categories < 1 || self.services_per_category < 1 || self.tags_per_service < 1 {
            return Err(Error::Config("categories, services and tags per service must be at least 1".into()));
        }
        if self.pool_size() < self.tags_per_service {
            return Err(Error::Config("pool_size must be at least tags_per_service".into()));
        }
        if !(0.0 <= self.inter_sim && self.inter_sim < self.intra_sim && self.intra_sim <= 1.0) {
            return Err(Error::Config("need 0 <= inter_sim < intra_sim <= 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn tag_name(category: usize, index: usize) -> String {
        format!("c{category}w{index:02}")
    }

    pub fn label(category: usize) -> String {
        format!("category-{category}")
    }
}

/// Oracle tag similarity for a synthetic corpus.
#[derive(Debug, Clone)]
pub struct OracleSimilarity {
    spec: SyntheticSpec,
    category_of: HashMap<String, usize>,
    noise: Option<Normal<f64>>,
}

impl OracleSimilarity {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        spec.validate()?;
        let mut category_of = HashMap::new();
        for c in 0..spec.categories {
            for j in 0..spec.pool_size() {
                category_of.insert(SyntheticSpec::tag_name(c, j), c);
            }
        }
        let noise = if spec.noise_sigma > 0.0 {
            Some(Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            spec,
            category_of,
            noise,
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn category(&self, tag: &str) -> Option<usize> {
        self.category_of.get(tag).copied()
    }
}

impl Vocabulary for OracleSimilarity {
    fn contains(&self, word: &str) -> bool {
        self.category_of.contains_key(word)
    }
}

impl SimilaritySource for OracleSimilarity {
    fn score(&self, a: &str, b: &str) -> Option<f64> {
        let (ca, cb) = (self.category(a)?, self.category(b)?);
        let mean = if ca == cb { self.spec.intra_sim } else { self.spec.inter_sim };
        let jitter = match &self.noise {
            Some(normal) => {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let key = rng::digest64(&[&self.spec.seed.to_le_bytes(), lo.as_bytes(), hi.as_bytes()]);
                normal.sample(&mut ChaCha8Rng::seed_from_u64(key))
            }
            None => 0.0,
        };
        Some((mean + jitter).clamp(0.0, 1.0))
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

/// Builds `categories x services_per_category` labeled records, category
/// major, each with `tags_per_service` distinct tags from its category pool.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Vec<CorpusRecord>, OracleSimilarity)> {
    let oracle = OracleSimilarity::new(spec.clone())?;
    let mut records = Vec::with_capacity(spec.categories * spec.services_per_category);
    for c in 0..spec.categories {
        for i in 0..spec.services_per_category {
            let stream = (c * spec.services_per_category + i) as u64;
            let mut rng = rng::keyed(spec.seed, Domain::Synthetic, stream, 0);
            let mut picks = rand::seq::index::sample(&mut rng, spec.pool_size(), spec.tags_per_service).into_vec();
            // Keep a stable but seed-dependent tag order.
            if rng.random::<bool>() {
                picks.reverse();
            }
            records.push(CorpusRecord {
                id: format!("c{c}-s{i:03}"),
                name: format!("Synthetic service {i} of category {c}"),
                tags: picks.into_iter().map(|j| SyntheticSpec::tag_name(c, j)).collect(),
                label: Some(SyntheticSpec::label(c)),
            });
        }
    }
    Ok((records, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_oracle_is_exact() {
        let spec = SyntheticSpec {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let (records, oracle) = generate_synthetic(&spec).unwrap();
        assert_eq!(records.len(), 200);
        assert_eq!(oracle.score("c0w00", "c0w01"), Some(0.9));
        assert_eq!(oracle.score("c0w00", "c3w01"), Some(0.1));
        assert_eq!(oracle.score("c0w00", "nope"), None);
    }

    #[test]
    fn noisy_oracle_stays_in_range_and_is_deterministic() {
        let spec = SyntheticSpec::default();
        let (_, oracle) = generate_synthetic(&spec).unwrap();
        let (_, again) = generate_synthetic(&spec).unwrap();
        let words: Vec<String> = (0..4).flat_map(|c| (0..10).map(move |j| SyntheticSpec::tag_name(c, j))).collect();
        let mut varied = false;
        for a in &words {
            for b in &words {
                let s = oracle.score(a, b).unwrap();
                assert!((0.0..=1.0).contains(&s));
                assert_eq!(s, again.score(a, b).unwrap());
                assert_eq!(s, oracle.score(b, a).unwrap());
                varied |= s != 0.9 && s != 0.1;
            }
        }
        assert!(varied);
    }

    #[test]
    fn corpus_is_deterministic_and_pools_are_disjoint() {
        let spec = SyntheticSpec::default();
        let (a, oracle) = generate_synthetic(&spec).unwrap();
        let (b, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert_eq!(r.tags.len(), 5);
            let label = r.label.as_deref().unwrap();
            for t in &r.tags {
                assert_eq!(SyntheticSpec::label(oracle.category(t).unwrap()), label);
            }
        }
        let other = generate_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap().0;
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            SyntheticSpec { inter_sim: 0.9, ..Default::default() },
            SyntheticSpec { intra_sim: 1.2, ..Default::default() },
            SyntheticSpec { noise_sigma: -0.1, ..Default::default() },
            SyntheticSpec { categories: 0, ..Default::default() },
            SyntheticSpec { pool_size: Some(2), ..Default::default() },
        ];
        for spec in bad {
            assert!(matches!(generate_synthetic(&spec), Err(Error::Config(_))));
        }
    }
}
