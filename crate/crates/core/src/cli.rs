//! The `eventnet` command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::ScoreMatrix;
use crate::discovery::{
    discover_concepts, CrawlManifest, Vocabulary, DEFAULT_FREQUENT_WORDS, DEFAULT_MIN_OVERLAP,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    compare_matching, concept_count_sweep, evaluate, load_queries, sweep_to_tsv, EvalConfig,
    EvalQuery,
};
use crate::matching::{
    match_concepts, MatchQuery, MatchResult, DEFAULT_CONCEPT_COUNT, DEFAULT_EVENT_COUNT,
};
use crate::models::{
    load_features, models_to_document, train_concept_models, HingeConfig, DEFAULT_SEED,
};
use crate::ontology::{ConceptVideos, NodeId, OntologyTree};
use crate::scoring::{
    recount, recount_two_step, retrieve, EventPredictor, Recounting, Weighting, DEFAULT_RECOUNT_TOP,
};
use crate::service::{serve, RetrieveResponse, ServiceConfig};
use crate::similarity::{BackendConfig, PhraseSimilarity};
use crate::synthetic::{ambiguity_benchmark, concept_count_fixture, Benchmark};

#[derive(Debug, Parser)]
#[command(
    name = "eventnet",
    version,
    about = "Concept-based zero-shot video event retrieval"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable tables.
    Text,
    /// One JSON document.
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Map,
    CompareStructure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendName {
    Overlap,
    Embedding,
}

#[derive(Debug, Args)]
pub struct OntologyArgs {
    #[arg(long)]
    pub ontology: PathBuf,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendName::Overlap)]
    pub backend: BackendName,
    /// Word-vector table for the embedding backend.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

impl BackendArgs {
    fn config(&self) -> Result<BackendConfig> {
        let name = match self.backend {
            BackendName::Overlap => "overlap",
            BackendName::Embedding => "embedding",
        };
        BackendConfig::from_name(name, self.embeddings.clone())
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub query: String,
    /// Category id limiting the event pool; repeatable.
    #[arg(long)]
    pub restrict: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_EVENT_COUNT)]
    pub events: usize,
    #[arg(long, default_value_t = DEFAULT_CONCEPT_COUNT)]
    pub concepts: usize,
}

impl QueryArgs {
    fn to_query(&self) -> MatchQuery {
        MatchQuery::new(self.query.as_str())
            .restrict(self.restrict.iter().map(String::as_str))
            .events(self.events)
            .concepts(self.concepts)
    }
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Use the built-in synthetic benchmark instead of files.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Ground-truth queries, one JSON record per line.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<usize>,
    #[arg(long)]
    pub concepts: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate an ontology, then print its statistics.
    Validate(OntologyArgs),
    /// Print ontology statistics.
    Stats(OntologyArgs),
    /// Mine concepts from crawl manifests.
    Discover {
        /// Crawl manifest for one event; repeatable.
        #[arg(long, required = true)]
        manifest: Vec<PathBuf>,
        /// Vocabulary file; repeatable, earlier files take precedence.
        #[arg(long, required = true)]
        vocab: Vec<PathBuf>,
        /// Frequent words kept per event.
        #[arg(long, default_value_t = DEFAULT_FREQUENT_WORDS)]
        top: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_OVERLAP)]
        min_overlap: usize,
    },
    /// Match a query to events and concepts.
    Match {
        #[command(flatten)]
        ontology: OntologyArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Rank corpus videos for a query.
    Retrieve {
        #[command(flatten)]
        ontology: OntologyArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Keep only the first N videos.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
    },
    /// List the top concepts detected in one video.
    Recount {
        #[command(flatten)]
        ontology: OntologyArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        video: String,
        #[arg(long, default_value_t = DEFAULT_RECOUNT_TOP)]
        top: usize,
        /// Only use concepts of the N best-scoring events.
        #[arg(long)]
        events: Option<usize>,
    },
    /// Train one linear model per labelled concept.
    Train {
        #[command(flatten)]
        ontology: OntologyArgs,
        /// JSON object mapping concept ids to positive video ids.
        #[arg(long)]
        labels: PathBuf,
        /// Frame feature file.
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Evaluate retrieval mAP.
    Eval {
        #[arg(long, value_enum, default_value_t = EvalMode::Map)]
        mode: EvalMode,
        /// Apply each query's restriction (map mode only).
        #[arg(long)]
        restricted: bool,
        #[command(flatten)]
        bench: BenchmarkArgs,
    },
    /// mAP as a function of the number of selected concepts.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[command(flatten)]
        bench: BenchmarkArgs,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        ontology: OntologyArgs,
        /// `NAME=PATH`, or `PATH` to name the corpus after its file stem; repeatable.
        #[arg(long)]
        corpus: Vec<String>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    Similarity,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Similarity => Weighting::Similarity,
        }
    }
}

/// Canonical machine-readable form, shared with the HTTP API.
pub fn record<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("results serialize") + "\n"
}

fn load_tree(args: &OntologyArgs) -> Result<OntologyTree> {
    let tree = OntologyTree::load(&args.ontology)?;
    for w in tree.warnings() {
        log::warn!("{w}");
    }
    Ok(tree)
}

fn stats_text(tree: &OntologyTree) -> String {
    let s = tree.stats();
    let mut out = String::new();
    writeln!(out, "categories\t{}", s.category_count).unwrap();
    writeln!(out, "events\t{}", s.event_count).unwrap();
    writeln!(out, "concepts\t{}", s.concept_count).unwrap();
    writeln!(out, "max depth\t{}", s.max_depth).unwrap();
    writeln!(
        out,
        "avg child categories\t{:.3}",
        s.avg_children_per_category
    )
    .unwrap();
    for (id, n) in &s.events_per_top_category {
        let name = tree
            .node(id.as_str())
            .map(|n| n.name.as_str())
            .unwrap_or("");
        writeln!(out, "events under {id} ({name})\t{n}").unwrap();
    }
    out
}

fn match_text(tree: &OntologyTree, r: &MatchResult) -> String {
    let name = |id: &NodeId| {
        tree.node(id.as_str())
            .map(|n| n.name.clone())
            .unwrap_or_default()
    };
    let mut out = String::from("events\n");
    for (i, e) in r.matched_events.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{:.4}", i + 1, e.id, name(&e.id), e.score).unwrap();
    }
    out.push_str("concepts\n");
    for (i, c) in r.matched_concepts.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{:.4}", i + 1, c.id, name(&c.id), c.score).unwrap();
    }
    if r.shortage {
        out.push_str("note\tfewer concepts available than requested\n");
    }
    for id in &r.flagged_restrictions {
        writeln!(out, "note\trestriction {id} is not a top-level category").unwrap();
    }
    out
}

fn recount_text(r: &Recounting) -> String {
    let mut out = String::new();
    for (i, c) in r.items.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}",
            i + 1,
            c.id,
            c.name,
            c.event_name,
            c.score
        )
        .unwrap();
    }
    out
}

fn benchmark(
    args: &BenchmarkArgs,
    synthetic: fn(u64) -> Result<Benchmark>,
) -> Result<(Benchmark, Box<dyn PhraseSimilarity>)> {
    let mut bench = if args.synthetic {
        synthetic(args.seed)?
    } else {
        let need = |p: &Option<PathBuf>, flag: &str| {
            p.clone()
                .ok_or_else(|| Error::invalid(format!("--{flag} is required without --synthetic")))
        };
        let tree = OntologyTree::load(need(&args.ontology, "ontology")?)?;
        let corpus = ScoreMatrix::load(need(&args.corpus, "corpus")?)?.align_to(&tree)?;
        let queries: Vec<EvalQuery> = load_queries(need(&args.queries, "queries")?)?;
        Benchmark {
            tree,
            corpus,
            queries,
            config: EvalConfig::default(),
        }
    };
    if let Some(e) = args.events {
        bench.config.event_count = e;
    }
    if let Some(c) = args.concepts {
        bench.config.concept_count = c;
    }
    let backend = args.backend.config()?.build(&bench.tree)?;
    Ok((bench, backend))
}

fn parse_corpus_arg(arg: &str) -> Result<(String, PathBuf)> {
    if let Some((name, path)) = arg.split_once('=') {
        return Ok((name.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(arg);
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid(format!("cannot name corpus `{arg}`")))?
        .to_string();
    Ok((name, path))
}

/// Runs one subcommand and returns what it would print.
pub fn execute(command: &Command, format: Format) -> Result<String> {
    let text = format == Format::Text;
    Ok(match command {
        Command::Validate(args) => {
            let tree = load_tree(args)?;
            if text {
                let mut out = String::new();
                for w in tree.warnings() {
                    writeln!(out, "warning\t{w}").unwrap();
                }
                out.push_str("ok\n");
                out + &stats_text(&tree)
            } else {
                record(&tree.stats())
            }
        }
        Command::Stats(args) => {
            let tree = load_tree(args)?;
            if text {
                stats_text(&tree)
            } else {
                record(&tree.stats())
            }
        }
        Command::Discover {
            manifest,
            vocab,
            top,
            min_overlap,
        } => {
            let vocabularies = vocab
                .iter()
                .map(Vocabulary::load)
                .collect::<Result<Vec<_>>>()?;
            let mut found = Vec::new();
            for path in manifest {
                let m = CrawlManifest::load(path)?;
                found.extend(discover_concepts(&m, &vocabularies, *top, *min_overlap)?);
            }
            if text {
                let mut out = String::new();
                for c in &found {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}",
                        c.event_id,
                        c.name,
                        c.supporting_videos.len(),
                        c.source_vocabulary
                    )
                    .unwrap();
                }
                out
            } else {
                record(&found)
            }
        }
        Command::Match {
            ontology,
            query,
            backend,
        } => {
            let tree = load_tree(ontology)?;
            let b = backend.config()?.build(&tree)?;
            let r = match_concepts(&tree, &query.to_query(), b.as_ref())?;
            if text {
                match_text(&tree, &r)
            } else {
                record(&r)
            }
        }
        Command::Retrieve {
            ontology,
            corpus,
            query,
            backend,
            top,
            weighting,
        } => {
            let tree = load_tree(ontology)?;
            let corpus = ScoreMatrix::load(corpus)?.align_to(&tree)?;
            let b = backend.config()?.build(&tree)?;
            let matched = match_concepts(&tree, &query.to_query(), b.as_ref())?;
            let mut ranking = retrieve(&corpus, &matched, (*weighting).into())?;
            if let Some(top) = top {
                ranking.truncate(*top);
            }
            if text {
                let mut out = String::new();
                for (i, s) in ranking.items.iter().enumerate() {
                    writeln!(out, "{}\t{}\t{:.6}", i + 1, s.id, s.score).unwrap();
                }
                out
            } else {
                record(&RetrieveResponse { matched, ranking })
            }
        }
        Command::Recount {
            ontology,
            corpus,
            video,
            top,
            events,
        } => {
            let tree = load_tree(ontology)?;
            let corpus = ScoreMatrix::load(corpus)?.align_to(&tree)?;
            let r = match events {
                None => recount(&tree, &corpus, video, *top)?,
                Some(k) => {
                    recount_two_step(&tree, &corpus, video, EventPredictor::ConceptMean, *k, *top)?
                }
            };
            if text {
                recount_text(&r)
            } else {
                record(&r)
            }
        }
        Command::Train {
            ontology,
            labels,
            features,
            seed,
            iterations,
            lambda,
        } => {
            let tree = load_tree(ontology)?;
            let labels = ConceptVideos::load(labels)?;
            let features = load_features(features)?;
            let mut config = HingeConfig::default();
            if let Some(i) = iterations {
                config.iterations = *i;
            }
            if let Some(l) = lambda {
                config.lambda = *l;
            }
            models_to_document(&train_concept_models(
                &tree, &labels, &features, &config, *seed,
            )?)
        }
        Command::Eval {
            mode,
            restricted,
            bench,
        } => {
            let (b, backend) = benchmark(bench, ambiguity_benchmark)?;
            match mode {
                EvalMode::Map => {
                    let config = EvalConfig {
                        restricted: *restricted,
                        ..b.config
                    };
                    let report =
                        evaluate(&b.tree, &b.queries, &b.corpus, backend.as_ref(), config)?;
                    if text {
                        report.to_text()
                    } else {
                        record(&report)
                    }
                }
                EvalMode::CompareStructure => {
                    let cmp = compare_matching(
                        &b.tree,
                        &b.queries,
                        &b.corpus,
                        backend.as_ref(),
                        b.config,
                    )?;
                    if text {
                        cmp.to_text()
                    } else {
                        record(&cmp)
                    }
                }
            }
        }
        Command::Sweep { counts, bench } => {
            let (b, backend) = benchmark(bench, concept_count_fixture)?;
            let points = concept_count_sweep(
                &b.tree,
                &b.queries,
                &b.corpus,
                backend.as_ref(),
                counts,
                b.config,
            )?;
            if text {
                sweep_to_tsv(&points)
            } else {
                record(&points)
            }
        }
        Command::Serve {
            ontology,
            corpus,
            listen,
            backend,
        } => {
            let corpora = corpus
                .iter()
                .map(|c| parse_corpus_arg(c))
                .collect::<Result<BTreeMap<_, _>>>()?;
            serve(&ServiceConfig {
                ontology: ontology.ontology.clone(),
                corpora,
                backend: backend.config()?,
                listen: *listen,
            })?;
            String::new()
        }
    })
}

/// Parses nothing; runs an already parsed command line and writes its output.
pub fn run(cli: &Cli) -> Result<()> {
    let output = execute(&cli.command, cli.format)?;
    match &cli.out {
        Some(path) => std::fs::write(path, output).map_err(|source| Error::File {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn corpus_names() {
        assert_eq!(
            parse_corpus_arg("a=x/y.tsv").unwrap(),
            ("a".into(), PathBuf::from("x/y.tsv"))
        );
        assert_eq!(parse_corpus_arg("x/main.scores").unwrap().0, "main");
    }

    #[test]
    fn synthetic_compare_has_two_rows() {
        let cli = Cli::parse_from([
            "eventnet",
            "eval",
            "--mode",
            "compare-structure",
            "--synthetic",
        ]);
        let out = execute(&cli.command, cli.format).unwrap();
        let rows: Vec<&str> = out.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        let map = |r: &str| r.rsplit('\t').next().unwrap().parse::<f64>().unwrap();
        assert!(map(rows[1]) >= map(rows[0]));
    }
}
