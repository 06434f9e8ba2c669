//! Distributional word model: positive PMI over symmetric-window
//! co-occurrence counts, compared by cosine.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{SimilaritySource, Vocabulary};
use crate::error::{Error, Result};

/// Immutable PPMI word vectors.
///
/// Word ids follow lexicographic order of the vocabulary, so two models built
/// from the same corpus are identical regardless of hash seeds.
#[derive(Debug, Clone)]
pub struct DistributionalModel {
    window: usize,
    min_count: usize,
    words: Vec<String>,
    index: HashMap<String, u32>,
    /// Sparse rows sorted by context id; only strictly positive weights kept.
    vectors: Vec<Vec<(u32, f64)>>,
    norms: Vec<f64>,
}

impl DistributionalModel {
    /// Builds the model from tokenized sentences. Windows never cross a
    /// sentence boundary. Words seen fewer than `min_count` times are dropped
    /// from the vocabulary but still occupy their positions in the window.
    pub fn build<S: AsRef<str>>(sentences: &[Vec<S>], window: usize, min_count: usize) -> Result<Self> {
        if window < 1 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if min_count < 1 {
            return Err(Error::InvalidArgument("min_count must be at least 1".into()));
        }

        let mut freq: HashMap<&str, usize> = HashMap::new();
        for sentence in sentences {
            for token in sentence {
                *freq.entry(token.as_ref()).or_default() += 1;
            }
        }
        if freq.is_empty() {
            return Err(Error::EmptyModel("corpus contains no tokens".into()));
        }
        let mut words: Vec<String> = freq
            .iter()
            .filter(|(_, &n)| n >= min_count)
            .map(|(w, _)| w.to_string())
            .collect();
        if words.is_empty() {
            return Err(Error::EmptyModel(format!("no word occurs at least {min_count} times")));
        }
        words.sort();
        let index: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();

        let mut counts: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); words.len()];
        for sentence in sentences {
            let ids: Vec<Option<u32>> = sentence.iter().map(|t| index.get(t.as_ref()).copied()).collect();
            for (i, center) in ids.iter().enumerate() {
                let Some(center) = *center else { continue };
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(ids.len() - 1);
                for (j, ctx) in ids.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    if let Some(ctx) = *ctx {
                        *counts[center as usize].entry(ctx).or_default() += 1.0;
                    }
                }
            }
        }

        let row_totals: Vec<f64> = counts.iter().map(|row| row.values().sum()).collect();
        let grand_total: f64 = row_totals.iter().sum();
        let mut vectors = Vec::with_capacity(words.len());
        let mut norms = Vec::with_capacity(words.len());
        for (w, row) in counts.iter().enumerate() {
            let vector: Vec<(u32, f64)> = row
                .iter()
                .filter_map(|(&c, &n)| {
                    let pmi = (n * grand_total / (row_totals[w] * row_totals[c as usize])).ln();
                    (pmi > 0.0).then_some((c, pmi))
                })
                .collect();
            norms.push(vector.iter().map(|(_, x)| x * x).sum::<f64>().sqrt());
            vectors.push(vector);
        }

        Ok(Self {
            window,
            min_count,
            words,
            index,
            vectors,
            norms,
        })
    }

    /// Splits `text` into sentences at line breaks and tokens at whitespace,
    /// lowercasing everything.
    pub fn from_text(text: &str, window: usize, min_count: usize) -> Result<Self> {
        let sentences: Vec<Vec<String>> = text
            .lines()
            .map(|line| line.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        Self::build(&sentences, window, min_count)
    }

    pub fn from_file(path: &Path, window: usize, min_count: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, window, min_count)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Vocabulary in id order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// PPMI weights of `word` keyed by context word.
    pub fn vector(&self, word: &str) -> Option<Vec<(&str, f64)>> {
        let id = *self.index.get(word)?;
        Some(
            self.vectors[id as usize]
                .iter()
                .map(|&(c, x)| (self.words[c as usize].as_str(), x))
                .collect(),
        )
    }

    /// Cosine of the two PPMI vectors, `None` if either word is unknown.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let ia = *self.index.get(a)? as usize;
        let ib = *self.index.get(b)? as usize;
        let denom = self.norms[ia] * self.norms[ib];
        if denom == 0.0 {
            return Some(0.0);
        }
        let (va, vb) = (&self.vectors[ia], &self.vectors[ib]);
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < va.len() && j < vb.len() {
            match va[i].0.cmp(&vb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += va[i].1 * vb[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Some((dot / denom).max(0.0))
    }
}

impl Vocabulary for DistributionalModel {
    fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

impl SimilaritySource for DistributionalModel {
    fn score(&self, a: &str, b: &str) -> Option<f64> {
        self.cosine(a, b)
    }

    fn name(&self) -> &str {
        "distributional"
    }
}
