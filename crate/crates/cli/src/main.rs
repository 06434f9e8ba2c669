use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use svcflock::harness::{generate_synthetic, load_corpus, to_descriptors, write_corpus, ProviderSpec, Snapshot, SyntheticSpec};
use svcflock::search::purity;
use svcflock::{
    absorb_batch, evaluate, extract_clusters, initialize, search, BatchConfig, Error, FlockSpace, FlockWeights,
    LabeledQuery, Query, Result, SpaceConfig,
};

/// Flocking-based clustering and retrieval of tagged services.
#[derive(Parser)]
#[command(name = "svcflock", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed of the space; queries are seeded from it too.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flocking weights: alignment,separation,cohesion,similarity,dissimilarity.
    #[arg(long, global = true, value_parser = parse_weights)]
    weights: Option<FlockWeights>,
    /// Space geometry: W,H,r_sense,r_sep,epsilon,lambda,v_max.
    #[arg(long, global = true, value_parser = parse_space)]
    space: Option<Geometry>,
}

#[derive(Clone, Copy)]
struct Geometry([f64; 7]);

#[derive(Subcommand)]
enum Command {
    /// Build a snapshot from a corpus, or absorb a corpus into an existing one.
    Ingest(IngestArgs),
    /// Run the flocking dynamics on a snapshot and report its clusters.
    Cluster {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer a tag query; prints one JSON line per result.
    Query {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        tags: Vec<String>,
        #[arg(long)]
        max_iter: usize,
        #[arg(long)]
        num_results: usize,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Score cluster purity and retrieval quality of labeled queries.
    Eval {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Write a labeled synthetic corpus, its oracle spec and sample queries.
    GenSynthetic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Plain-text corpus for a distributional model.
    #[arg(long, group = "source")]
    model: Option<PathBuf>,
    /// Tab-separated `word word score` similarity table.
    #[arg(long, group = "source")]
    table: Option<PathBuf>,
    /// Synthetic spec whose oracle scores tag pairs.
    #[arg(long, group = "source")]
    oracle: Option<PathBuf>,
    /// Existing snapshot to absorb the corpus into; its provider is reused.
    #[arg(long, conflicts_with = "source")]
    into: Option<PathBuf>,
    /// Ticks to run after deployment; defaults to the phase budget.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 2)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_list<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_weights(s: &str) -> std::result::Result<FlockWeights, String> {
    let weights = FlockWeights::from_array(parse_list::<5>(s)?);
    weights.validate().map_err(|e| e.to_string())?;
    Ok(weights)
}

fn parse_space(s: &str) -> std::result::Result<Geometry, String> {
    parse_list::<7>(s).map(Geometry)
}

impl Global {
    fn config(&self, mut config: SpaceConfig) -> Result<SpaceConfig> {
        if let Some(Geometry([w, h, rs, rsep, eps, lambda, vmax])) = self.space {
            config.width = w;
            config.height = h;
            config.sensor_range = rs;
            config.separation_radius = rsep;
            config.epsilon = eps;
            config.lambda = lambda;
            config.max_speed = vmax;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    /// Restores a snapshot and applies any command-line overrides.
    fn restore(&self, snapshot: &Snapshot) -> Result<FlockSpace> {
        let space = snapshot.restore()?;
        let config = self.config(space.config().clone())?;
        let weights = self.weights.unwrap_or(*space.weights());
        if config == *space.config() && weights == *space.weights() {
            return Ok(space);
        }
        FlockSpace::from_parts(config, weights, space.tick(), space.next_id(), space.agents().to_vec())
    }
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| Error::io(path, e))
}

fn read_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn load_queries(path: &Path) -> Result<Vec<LabeledQuery>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cluster_summary(space: &FlockSpace, labels: &BTreeMap<String, String>) -> Result<serde_json::Value> {
    let assignment = extract_clusters(space, space.config().epsilon);
    let service = |id: u64| space.agent(id).map(|a| a.descriptor.id.clone()).unwrap_or_default();
    let clusters: Vec<_> = assignment
        .clusters
        .iter()
        .map(|c| json!({ "id": c.id, "services": c.members.iter().map(|&m| service(m)).collect::<Vec<_>>() }))
        .collect();
    let outliers: Vec<_> = assignment.outliers.iter().map(|&m| service(m)).collect();
    let labelled = space.real_agents().all(|a| labels.contains_key(&a.descriptor.id));
    let purity = if labelled && !labels.is_empty() {
        Some(purity(&assignment, |id| space.agent(id).and_then(|a| labels.get(&a.descriptor.id).cloned()))?)
    } else {
        None
    };
    Ok(json!({ "tick": space.tick(), "purity": purity, "clusters": clusters, "outliers": outliers }))
}

fn ingest(global: &Global, args: &IngestArgs) -> Result<()> {
    let records = load_corpus(&args.corpus)?;
    let batch = BatchConfig::default();
    let (space, provider_spec, labels) = if let Some(into) = &args.into {
        let snapshot = Snapshot::load(into)?;
        let mut space = global.restore(&snapshot)?;
        let provider = snapshot.provider.build()?;
        let (services, new_labels) = to_descriptors(&records, &provider)?;
        let batch = BatchConfig {
            maintenance_iterations: args.iterations.unwrap_or(batch.maintenance_iterations),
            ..batch
        };
        absorb_batch(&mut space, &services, &batch, &provider)?;
        let mut labels = snapshot.labels;
        labels.extend(new_labels);
        (space, snapshot.provider, labels)
    } else {
        let provider_spec = match (&args.model, &args.table, &args.oracle) {
            (Some(path), _, _) => ProviderSpec::Model {
                corpus: absolute(path)?,
                window: args.window,
                min_count: args.min_count,
            },
            (_, Some(path), _) => ProviderSpec::Table { path: absolute(path)? },
            (_, _, Some(path)) => ProviderSpec::Oracle { spec: read_spec(path)? },
            _ => {
                return Err(Error::InvalidArgument(
                    "one of --model, --table, --oracle or --into is required".into(),
                ))
            }
        };
        let provider = provider_spec.build()?;
        let (services, labels) = to_descriptors(&records, &provider)?;
        let config = global.config(SpaceConfig::default())?;
        let batch = BatchConfig {
            init_iterations: args.iterations.unwrap_or(batch.init_iterations),
            ..batch
        };
        let space = initialize(&services, config, global.weights.unwrap_or_default(), &batch, &provider)?;
        (space, provider_spec, labels)
    };
    space.check_invariants()?;
    Snapshot::capture(&space, provider_spec, labels.clone())?.save(&args.out)?;
    print_json(&cluster_summary(&space, &labels)?)
}

fn run(cli: Cli) -> Result<()> {
    let global = &cli.global;
    match &cli.command {
        Command::Ingest(args) => ingest(global, args),
        Command::Cluster {
            snapshot,
            iterations,
            out,
        } => {
            let snapshot = Snapshot::load(snapshot)?;
            let mut space = global.restore(&snapshot)?;
            let provider = snapshot.provider.build()?;
            space.run(&provider, *iterations);
            space.check_invariants()?;
            Snapshot::capture(&space, snapshot.provider.clone(), snapshot.labels.clone())?.save(out)?;
            print_json(&cluster_summary(&space, &snapshot.labels)?)
        }
        Command::Query {
            snapshot,
            tags,
            max_iter,
            num_results,
            epsilon,
        } => {
            let snapshot = Snapshot::load(snapshot)?;
            let space = global.restore(&snapshot)?;
            let provider = snapshot.provider.build()?;
            let query = Query {
                epsilon_override: *epsilon,
                ..Query::new(tags.iter().cloned(), *max_iter, *num_results)
            };
            let result = search(&space, &query, &provider, space.config().seed)?;
            for (rank, hit) in result.hits.iter().enumerate() {
                let line = json!({
                    "rank": rank + 1,
                    "id": hit.service.id,
                    "name": hit.service.name,
                    "distance": hit.distance,
                    "similarity": hit.similarity,
                });
                println!("{line}");
            }
            eprintln!(
                "converged: {}, iterations: {}, results: {}",
                result.converged,
                result.iterations_used,
                result.hits.len()
            );
            Ok(())
        }
        Command::Eval { snapshot, queries, k } => {
            let snapshot = Snapshot::load(snapshot)?;
            let space = global.restore(&snapshot)?;
            let provider = snapshot.provider.build()?;
            let queries = load_queries(queries)?;
            let metrics = evaluate(&space, &provider, &snapshot.labels, &queries, *k, space.config().seed)?;
            print_json(&serde_json::to_value(&metrics).map_err(|e| Error::Invariant(e.to_string()))?)
        }
        Command::GenSynthetic { spec, out } => {
            let spec = read_spec(spec)?;
            let (records, _) = generate_synthetic(&spec)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            write_corpus(&out.join("corpus.jsonl"), &records)?;

            let oracle_path = out.join("oracle.json");
            let oracle = serde_json::to_string_pretty(&spec).map_err(|e| Error::Invariant(e.to_string()))?;
            std::fs::write(&oracle_path, oracle).map_err(|e| Error::io(&oracle_path, e))?;

            // Sample queries: the tags of the first few services per category.
            let per_category = spec.services_per_category.min(5);
            let queries_path = out.join("queries.jsonl");
            let mut lines = String::new();
            for chunk in records.chunks(spec.services_per_category) {
                for r in chunk.iter().take(per_category) {
                    let q = LabeledQuery {
                        query: Query::new(r.tags.iter().cloned(), 500, 10),
                        label: r.label.clone().unwrap_or_default(),
                    };
                    lines.push_str(&serde_json::to_string(&q).map_err(|e| Error::Invariant(e.to_string()))?);
                    lines.push('\n');
                }
            }
            std::fs::write(&queries_path, lines).map_err(|e| Error::io(&queries_path, e))?;
            print_json(&json!({ "records": records.len(), "out": out }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
