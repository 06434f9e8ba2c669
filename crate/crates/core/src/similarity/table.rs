use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use super::{SimilaritySource, Vocabulary};
use crate::error::{Error, Result};

/// Precomputed tag-pair scores read from a `word1<TAB>word2<TAB>score` file.
///
/// Pairs are unordered and a later line overrides an earlier one. A pair of
/// known words that is absent from the table scores 0.
#[derive(Debug, Clone, Default)]
pub struct SimilarityTable {
    words: HashSet<String>,
    scores: HashMap<(String, String), f64>,
}

impl SimilarityTable {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut table = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            let (a, b) = (fields[0].trim().to_lowercase(), fields[1].trim().to_lowercase());
            if a.is_empty() || b.is_empty() {
                return Err(err("empty word".into()));
            }
            let score: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("invalid score `{}`", fields[2].trim())))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(err(format!("score {score} outside [0, 1]")));
            }
            table.insert(a, b, score);
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
        Self::parse(&text, path)
    }

    pub fn insert(&mut self, a: String, b: String, score: f64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.words.insert(key.0.clone());
        self.words.insert(key.1.clone());
        self.scores.insert(key, score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Vocabulary for SimilarityTable {
    fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

impl SimilaritySource for SimilarityTable {
    fn score(&self, a: &str, b: &str) -> Option<f64> {
        if !self.words.contains(a) || !self.words.contains(b) {
            return None;
        }
        let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        Some(self.scores.get(&key).copied().unwrap_or(0.0))
    }

    fn name(&self) -> &str {
        "table"
    }
}
