//! Tag normalization and semantic similarity between service descriptors.
//!
//! Tags are reduced to a lowercase base form before any lookup. Tag-pair
//! scores come from a pluggable [`SimilaritySource`] (a distributional model
//! built from a text corpus, a precomputed table, or a synthetic oracle) and
//! are memoized in a symmetric [`SimilarityCache`]. Service-level similarity
//! is the symmetric best-match average over the two tag lists.

mod distributional;
mod table;

pub use distributional::DistributionalModel;
pub use table::SimilarityTable;

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word membership test used by base-form reduction.
pub trait Vocabulary {
    fn contains(&self, word: &str) -> bool;
}

impl Vocabulary for HashSet<String> {
    fn contains(&self, word: &str) -> bool {
        HashSet::contains(self, word)
    }
}

impl<V: Vocabulary + ?Sized> Vocabulary for &V {
    fn contains(&self, word: &str) -> bool {
        (**self).contains(word)
    }
}

/// A tag as written and its normalized base form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub surface: String,
    pub base: String,
}

/// Suffix rewrites tried after the identity, in order.
const SUFFIX_LADDER: &[(&str, &str)] = &[
    ("s", ""),
    ("es", ""),
    ("ing", "e"),
    ("ing", ""),
    ("ed", "e"),
    ("ed", ""),
];

/// Lowercases `raw` and reduces it to the first candidate base form found in
/// `vocab`. Words with no candidate in the vocabulary pass through lowercased.
pub fn normalize_tag<V: Vocabulary + ?Sized>(raw: &str, vocab: &V) -> Result<Tag> {
    let surface = raw.trim();
    if surface.is_empty() {
        return Err(Error::InvalidArgument("tag must be non-empty".into()));
    }
    let lower = surface.to_lowercase();
    let base = base_form(&lower, vocab).unwrap_or_else(|| lower.clone());
    Ok(Tag {
        surface: surface.to_string(),
        base,
    })
}

fn base_form<V: Vocabulary + ?Sized>(lower: &str, vocab: &V) -> Option<String> {
    if vocab.contains(lower) {
        return Some(lower.to_string());
    }
    SUFFIX_LADDER.iter().find_map(|(suffix, append)| {
        let stem = lower.strip_suffix(suffix)?;
        if stem.is_empty() {
            return None;
        }
        let candidate = format!("{stem}{append}");
        vocab.contains(&candidate).then_some(candidate)
    })
}

/// A service: unique id, display name and its non-empty list of distinct
/// normalized tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceDescriptor {
    pub id: String,
    pub name: String,
    tags: Vec<Tag>,
}

impl ServiceDescriptor {
    /// Normalizes `raw_tags` against `vocab`, dropping repeated base forms.
    pub fn new<S, V>(id: impl Into<String>, name: impl Into<String>, raw_tags: &[S], vocab: &V) -> Result<Self>
    where
        S: AsRef<str>,
        V: Vocabulary + ?Sized,
    {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("service id must be non-empty".into()));
        }
        let mut seen = HashSet::new();
        let mut tags = Vec::with_capacity(raw_tags.len());
        for raw in raw_tags {
            let tag = normalize_tag(raw.as_ref(), vocab)?;
            if seen.insert(tag.base.clone()) {
                tags.push(tag);
            }
        }
        if tags.is_empty() {
            return Err(Error::InvalidArgument(format!("service `{id}` has no tags")));
        }
        Ok(Self {
            id,
            name: name.into(),
            tags,
        })
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }
}

/// Raw tag-pair similarity backend.
pub trait SimilaritySource: Vocabulary + Send + Sync {
    /// Score for two distinct base forms, or `None` when either word is
    /// unknown to the source. Callers pass the pair in lexicographic order.
    fn score(&self, a: &str, b: &str) -> Option<f64>;

    /// Short human-readable identifier.
    fn name(&self) -> &str;
}

/// Symmetric memo of tag-pair scores keyed by the unordered base-form pair.
#[derive(Debug, Default)]
pub struct SimilarityCache {
    entries: RwLock<HashMap<(String, String), f64>>,
}

impl SimilarityCache {
    pub fn lookup(&self, a: &str, b: &str) -> Option<f64> {
        let key = ordered(a, b);
        let entries = self.entries.read().expect("similarity cache poisoned");
        entries.get(&(key.0.to_string(), key.1.to_string())).copied()
    }

    /// Inserts unless the pair is already present; returns the stored score.
    pub fn insert(&self, a: &str, b: &str, score: f64) -> f64 {
        let (lo, hi) = ordered(a, b);
        let mut entries = self.entries.write().expect("similarity cache poisoned");
        *entries.entry((lo.to_string(), hi.to_string())).or_insert(score)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("similarity cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.write().expect("similarity cache poisoned").clear();
    }
}

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A similarity source fronted by a pair cache and an out-of-vocabulary
/// counter. This is the handle the flocking and search code consume.
pub struct SimilarityProvider {
    source: Arc<dyn SimilaritySource>,
    cache: SimilarityCache,
    oov_misses: AtomicU64,
}

impl std::fmt::Debug for SimilarityProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimilarityProvider")
            .field("source", &self.source.name())
            .field("cached_pairs", &self.cache.len())
            .field("oov_misses", &self.oov_misses())
            .finish()
    }
}

impl SimilarityProvider {
    pub fn new(source: Arc<dyn SimilaritySource>) -> Self {
        Self {
            source,
            cache: SimilarityCache::default(),
            oov_misses: AtomicU64::new(0),
        }
    }

    pub fn source(&self) -> &dyn SimilaritySource {
        self.source.as_ref()
    }

    pub fn cache(&self) -> &SimilarityCache {
        &self.cache
    }

    /// Number of tag pairs that scored 0.0 because a word was unknown.
    pub fn oov_misses(&self) -> u64 {
        self.oov_misses.load(Ordering::Relaxed)
    }

    /// Normalizes a raw tag against this provider's vocabulary.
    pub fn normalize(&self, raw: &str) -> Result<Tag> {
        normalize_tag(raw, self.source.as_ref())
    }

    /// Builds a descriptor whose tags are normalized against this provider.
    pub fn descriptor<S: AsRef<str>>(&self, id: &str, name: &str, raw_tags: &[S]) -> Result<ServiceDescriptor> {
        ServiceDescriptor::new(id, name, raw_tags, self.source.as_ref())
    }

    pub fn tag_similarity(&self, a: &Tag, b: &Tag) -> f64 {
        self.base_similarity(&a.base, &b.base)
    }

    fn base_similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        if let Some(hit) = self.cache.lookup(a, b) {
            return hit;
        }
        let (lo, hi) = ordered(a, b);
        let score = match self.source.score(lo, hi) {
            Some(s) if s.is_finite() => s.clamp(0.0, 1.0),
            Some(_) => 0.0,
            None => {
                self.oov_misses.fetch_add(1, Ordering::Relaxed);
                0.0
            }
        };
        self.cache.insert(lo, hi, score)
    }

    /// Symmetric best-match average of tag similarities, in `[0, 1]`.
    pub fn service_similarity(&self, s1: &ServiceDescriptor, s2: &ServiceDescriptor) -> Result<f64> {
        let (t1, t2) = (s1.tags(), s2.tags());
        if t1.is_empty() || t2.is_empty() {
            return Err(Error::InvalidArgument("service similarity needs at least one tag per side".into()));
        }
        let mut col_best = vec![0.0f64; t2.len()];
        let mut row_total = 0.0;
        for a in t1 {
            let mut row_best = 0.0f64;
            for (j, b) in t2.iter().enumerate() {
                let s = self.tag_similarity(a, b);
                row_best = row_best.max(s);
                col_best[j] = col_best[j].max(s);
            }
            row_total += row_best;
        }
        let col_total: f64 = col_best.iter().sum();
        let score = (row_total + col_total) / (t1.len() + t2.len()) as f64;
        Ok(score.clamp(0.0, 1.0))
    }
}

/// Tag-pair similarity through `provider`.
pub fn tag_similarity(a: &Tag, b: &Tag, provider: &SimilarityProvider) -> f64 {
    provider.tag_similarity(a, b)
}

/// Service-pair similarity through `provider`.
pub fn service_similarity(s1: &ServiceDescriptor, s2: &ServiceDescriptor, provider: &SimilarityProvider) -> Result<f64> {
    provider.service_similarity(s1, s2)
}


#[cfg(test)]
mod tests {
    use super::test_support::FixedSource;
    use super::*;
    use proptest::prelude::*;

    fn vocab(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn messaging_reduces_to_message() {
        let tag = normalize_tag("Messaging", &vocab(&["message"])).unwrap();
        assert_eq!(tag.surface, "Messaging");
        assert_eq!(tag.base, "message");
    }

    #[test]
    fn uppercase_is_folded() {
        assert_eq!(normalize_tag("WEATHER", &vocab(&["weather"])).unwrap().base, "weather");
    }

    #[test]
    fn plural_s_is_stripped() {
        // identity "services" misses, strip "s" -> "service" hits.
        assert_eq!(normalize_tag("services", &vocab(&["service"])).unwrap().base, "service");
    }

    #[test]
    fn ladder_order_prefers_earlier_rules() {
        // "boxes": strip "s" -> "boxe" (absent), strip "es" -> "box".
        assert_eq!(normalize_tag("boxes", &vocab(&["box"])).unwrap().base, "box");
        // "uses": strip "s" -> "use" wins over strip "es" -> "us".
        assert_eq!(normalize_tag("uses", &vocab(&["use", "us"])).unwrap().base, "use");
        // "booked": "ed"+"e" -> "booke" absent, "ed" -> "book".
        assert_eq!(normalize_tag("booked", &vocab(&["book"])).unwrap().base, "book");
        // "stored": "ed"+"e" -> "store".
        assert_eq!(normalize_tag("stored", &vocab(&["store", "stor"])).unwrap().base, "store");
        // "mapping": "ing"+"e" -> "mappe" absent, "ing" -> "mapp" absent; identity kept.
        assert_eq!(normalize_tag("Mapping", &vocab(&["map"])).unwrap().base, "mapping");
    }

    #[test]
    fn unknown_word_passes_through_lowercased() {
        assert_eq!(normalize_tag("SMS", &vocab(&[])).unwrap().base, "sms");
    }

    #[test]
    fn bare_suffix_never_yields_empty_base() {
        assert_eq!(normalize_tag("s", &vocab(&[""])).unwrap().base, "s");
        assert_eq!(normalize_tag("ing", &vocab(&["e"])).unwrap().base, "ing");
    }

    #[test]
    fn empty_tag_is_rejected() {
        assert!(matches!(normalize_tag("", &vocab(&[])), Err(Error::InvalidArgument(_))));
        assert!(matches!(normalize_tag("   ", &vocab(&[])), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn descriptor_drops_duplicate_bases() {
        let v = vocab(&["weather", "forecast"]);
        let d = ServiceDescriptor::new("w1", "Weather", &["Weather", "weathers", "forecast"], &v).unwrap();
        let bases: Vec<_> = d.tags().iter().map(|t| t.base.as_str()).collect();
        assert_eq!(bases, ["weather", "forecast"]);
    }

    #[test]
    fn descriptor_requires_tags() {
        let empty: [&str; 0] = [];
        assert!(ServiceDescriptor::new("x", "x", &empty, &vocab(&[])).is_err());
    }

    fn provider(pairs: &[(&str, &str, f64)], extra: &[&str]) -> SimilarityProvider {
        SimilarityProvider::new(Arc::new(FixedSource::new(pairs, extra)))
    }

    #[test]
    fn identity_and_oov_rules() {
        let p = provider(&[], &["weather"]);
        let weather = p.normalize("weather").unwrap();
        let unknown = p.normalize("zzyzx").unwrap();
        assert_eq!(p.tag_similarity(&weather, &weather), 1.0);
        assert_eq!(p.tag_similarity(&weather, &unknown), 0.0);
        assert_eq!(p.oov_misses(), 1);
        // Cached: the second miss does not count again.
        assert_eq!(p.tag_similarity(&unknown, &weather), 0.0);
        assert_eq!(p.oov_misses(), 1);
        // Identical unknown words still match.
        assert_eq!(p.tag_similarity(&unknown, &unknown), 1.0);
    }

    #[test]
    fn out_of_range_scores_are_clamped() {
        let p = provider(&[("a", "b", 1.7), ("a", "c", -0.2)], &[]);
        let t = |w: &str| p.normalize(w).unwrap();
        assert_eq!(p.tag_similarity(&t("a"), &t("b")), 1.0);
        assert_eq!(p.tag_similarity(&t("a"), &t("c")), 0.0);
    }

    #[test]
    fn best_match_average_worked_example() {
        // s1 = {x, y}, s2 = {x}, sim(y, x) = 0.4:
        // row maxima 1.0 + 0.4, column maximum 1.0, over 3 tags.
        let p = provider(&[("x", "y", 0.4)], &[]);
        let s1 = p.descriptor("s1", "s1", &["x", "y"]).unwrap();
        let s2 = p.descriptor("s2", "s2", &["x"]).unwrap();
        let sim = p.service_similarity(&s1, &s2).unwrap();
        assert!((sim - 0.8).abs() < 1e-12, "{sim}");
    }

    #[test]
    fn identical_and_disjoint_services() {
        let p = provider(&[], &["a", "b", "c", "d"]);
        let s1 = p.descriptor("1", "", &["a", "b"]).unwrap();
        let s2 = p.descriptor("2", "", &["b", "a"]).unwrap();
        let s3 = p.descriptor("3", "", &["c", "d"]).unwrap();
        assert_eq!(p.service_similarity(&s1, &s2).unwrap(), 1.0);
        assert_eq!(p.service_similarity(&s1, &s3).unwrap(), 0.0);
    }

    #[test]
    fn cache_is_symmetric() {
        let cache = SimilarityCache::default();
        cache.insert("b", "a", 0.25);
        assert_eq!(cache.lookup("a", "b"), Some(0.25));
        assert_eq!(cache.lookup("b", "a"), Some(0.25));
        // First insertion wins.
        assert_eq!(cache.insert("a", "b", 0.9), 0.25);
        assert_eq!(cache.len(), 1);
    }

    const WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"];

    fn random_provider(scores: &[f64]) -> SimilarityProvider {
        let mut pairs = Vec::new();
        let mut k = 0;
        for (i, a) in WORDS.iter().enumerate() {
            for b in &WORDS[i + 1..] {
                pairs.push((*a, *b, scores[k % scores.len()]));
                k += 1;
            }
        }
        provider(&pairs, &[])
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "[A-Za-z]{1,12}", extra in proptest::collection::vec("[a-z]{1,8}", 0..6)) {
            let mut v: HashSet<String> = extra.into_iter().collect();
            let lower = raw.to_lowercase();
            if lower.len() > 3 {
                v.insert(lower[..lower.len() - 1].to_string());
            }
            let once = normalize_tag(&raw, &v).unwrap();
            let twice = normalize_tag(&once.base, &v).unwrap();
            prop_assert_eq!(&once.base, &twice.base);
            prop_assert!(!once.base.chars().any(char::is_uppercase));
        }

        #[test]
        fn service_similarity_axioms(
            scores in proptest::collection::vec(0.0f64..=1.0, 28),
            a in proptest::collection::vec(0usize..8, 1..6),
            b in proptest::collection::vec(0usize..8, 1..6),
        ) {
            let p = random_provider(&scores);
            let ta: Vec<&str> = a.iter().map(|&i| WORDS[i]).collect();
            let tb: Vec<&str> = b.iter().map(|&i| WORDS[i]).collect();
            let s1 = p.descriptor("a", "", &ta).unwrap();
            let s2 = p.descriptor("b", "", &tb).unwrap();
            let ab = p.service_similarity(&s1, &s2).unwrap();
            let ba = p.service_similarity(&s2, &s1).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(p.service_similarity(&s1, &s1).unwrap(), 1.0);

            // Warm cache answers are bit-identical to a cold provider.
            let cold = random_provider(&scores);
            prop_assert_eq!(cold.service_similarity(&s2, &s1).unwrap().to_bits(), ab.to_bits());
        }
    }
}
