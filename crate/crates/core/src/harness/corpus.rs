use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{ServiceDescriptor, SimilarityProvider};

/// One line of a JSON Lines corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Parses JSON Lines corpus text. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_corpus(text: &str, origin: &Path) -> Result<Vec<CorpusRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message,
        };
        let record: CorpusRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if record.id.is_empty() {
            return Err(err("empty id".into()));
        }
        if record.tags.iter().all(|t| t.trim().is_empty()) {
            return Err(err(format!("record `{}` has no tags", record.id)));
        }
        if !seen.insert(record.id.clone()) {
            return Err(err(format!("duplicate service id `{}`", record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, path)
}

pub fn write_corpus(path: &Path, records: &[CorpusRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Invariant(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Normalizes records into descriptors and collects the labels present.
pub fn to_descriptors(
    records: &[CorpusRecord],
    provider: &SimilarityProvider,
) -> Result<(Vec<ServiceDescriptor>, BTreeMap<String, String>)> {
    let mut services = Vec::with_capacity(records.len());
    let mut labels = BTreeMap::new();
    for r in records {
        let tags: Vec<&str> = r.tags.iter().map(|t| t.trim()).filter(|t| !t.is_empty()).collect();
        services.push(provider.descriptor(&r.id, &r.name, &tags)?);
        if let Some(label) = &r.label {
            labels.insert(r.id.clone(), label.clone());
        }
    }
    Ok((services, labels))
}
