//! Independent oracles and workloads shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use svcflock::harness::{generate_synthetic, CorpusRecord, SyntheticSpec};
use svcflock::{FlockSpace, ServiceDescriptor, SimilarityProvider, SpaceConfig};

/// Geometry used for the synthetic clustering and retrieval workloads:
/// 200 services on a 40x40 torus with a 16-unit sensor range. Everything
/// else, weights included, stays at its default.
pub fn workload_config(seed: u64) -> SpaceConfig {
    SpaceConfig {
        width: 40.0,
        height: 40.0,
        sensor_range: 16.0,
        ..SpaceConfig::default()
    }
    .with_seed(seed)
}

/// The 4 x 50 synthetic corpus (intra 0.9, inter 0.1, sigma 0.05).
pub fn synthetic(seed: u64) -> (Vec<CorpusRecord>, SimilarityProvider) {
    let spec = SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    };
    let (records, oracle) = generate_synthetic(&spec).unwrap();
    (records, SimilarityProvider::new(Arc::new(oracle)))
}

/// Splits off every tenth service of each category as a held-out query.
pub fn hold_out(records: &[CorpusRecord], per_category: usize) -> (Vec<CorpusRecord>, Vec<CorpusRecord>) {
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (i, r) in records.iter().enumerate() {
        if (i % per_category).is_multiple_of(10) {
            held.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    (train, held)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Descriptor whose tags are kept verbatim (the vocabulary holds them all).
pub fn descriptor(id: &str, tags: &[&str]) -> ServiceDescriptor {
    let vocab: HashSet<String> = tags.iter().map(|t| t.to_lowercase()).collect();
    ServiceDescriptor::new(id, id, tags, &vocab).unwrap()
}

/// Shortest wrap-around distance, computed per axis without the crate.
pub fn torus_distance(w: f64, h: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = (a.0 - b.0).abs();
    let dy = (a.1 - b.1).abs();
    let dx = dx.min(w - dx);
    let dy = dy.min(h - dy);
    (dx * dx + dy * dy).sqrt()
}

/// All-pairs neighbor sets within `radius` (inclusive).
pub fn brute_neighbors(space: &FlockSpace, radius: f64) -> BTreeMap<u64, BTreeSet<u64>> {
    let cfg = space.config();
    let agents = space.agents();
    let mut out = BTreeMap::new();
    for a in agents {
        let set = agents
            .iter()
            .filter(|b| b.id != a.id)
            .filter(|b| {
                torus_distance(cfg.width, cfg.height, (a.position.x, a.position.y), (b.position.x, b.position.y))
                    <= radius
            })
            .map(|b| b.id)
            .collect();
        out.insert(a.id, set);
    }
    out
}

/// Connected components of the all-pairs `d <= eps` graph by union-find,
/// as sorted member lists sorted by their first member.
pub fn brute_components(points: &[(u64, f64, f64)], w: f64, h: f64, eps: f64) -> Vec<Vec<u64>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = torus_distance(w, h, (points[i].1, points[i].2), (points[j].1, points[j].2));
            if d <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(p.0);
    }
    let mut comps: Vec<Vec<u64>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    comps.sort();
    comps
}

/// Dense count-then-PPMI tabulation: every ordered pair of positions within
/// `window` inside one sentence adds one co-occurrence; words below
/// `min_count` are dropped but keep their positions.
pub fn ppmi_oracle(sentences: &[&str], window: usize, min_count: usize) -> BTreeMap<String, BTreeMap<String, f64>> {
    let tokens: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| s.split_whitespace().map(str::to_lowercase).collect())
        .collect();
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for t in tokens.iter().flatten() {
        *freq.entry(t.clone()).or_default() += 1;
    }
    let vocab: Vec<String> = freq.into_iter().filter(|(_, n)| *n >= min_count).map(|(w, _)| w).collect();
    let idx = |w: &str| vocab.iter().position(|v| v == w);
    let n = vocab.len();
    let mut c = vec![vec![0.0f64; n]; n];
    for s in &tokens {
        for i in 0..s.len() {
            for j in 0..s.len() {
                if i != j && i.abs_diff(j) <= window {
                    if let (Some(a), Some(b)) = (idx(&s[i]), idx(&s[j])) {
                        c[a][b] += 1.0;
                    }
                }
            }
        }
    }
    let total: f64 = c.iter().flatten().sum();
    let rows: Vec<f64> = c.iter().map(|r| r.iter().sum()).collect();
    let mut out = BTreeMap::new();
    for a in 0..n {
        let mut v = BTreeMap::new();
        for b in 0..n {
            if c[a][b] > 0.0 {
                let pmi = (c[a][b] / total) / ((rows[a] / total) * (rows[b] / total));
                let pmi = pmi.ln();
                if pmi > 0.0 {
                    v.insert(vocab[b].clone(), pmi);
                }
            }
        }
        out.insert(vocab[a].clone(), v);
    }
    out
}

pub fn cosine_oracle(vectors: &BTreeMap<String, BTreeMap<String, f64>>, a: &str, b: &str) -> f64 {
    let (va, vb) = (&vectors[a], &vectors[b]);
    let dot: f64 = va.iter().filter_map(|(k, x)| vb.get(k).map(|y| x * y)).sum();
    let na = va.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Five-sentence toy corpus for the PPMI oracle checks.
pub const TOY_CORPUS: [&str; 5] = [
    "send a short message to the mail server",
    "the mail server stores every message",
    "weather forecast for the coming week",
    "the forecast predicts rain and wind this week",
    "send the weather report by mail",
];
