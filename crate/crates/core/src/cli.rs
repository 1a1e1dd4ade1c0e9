//! Command-line front end: `structure`, `validate`, `extract`, `generate`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bracket::{parse_tree, write_instance, ParseError};
use crate::corpus::{read_corpus, CorpusConfig, CorpusError};
use crate::engine::{structure, write_csv, ConfigError, Status, StructureOutcome, StructuringConfig};
use crate::grammar::{extract_grammar, CondensedGrammar, GrammarParseError};
use crate::meta::validate;
use crate::similarity::{SimParams, SimilarityKind};
use crate::synth::{generate, PlantedSchema, SchemaError};

pub const THREADS_ENV: &str = "ARCHITEXT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNFINISHED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Tree { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Grammar { path: PathBuf, source: GrammarParseError },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Structuring(#[from] ConfigError),
    #[error("config: {0}")]
    Config(String),
    #[error("metrics: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

#[derive(Parser, Debug)]
#[command(name = "architext", version, about = "Induce a validated schema grammar from entity-annotated syntax trees")]
pub struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the structuring loop on a corpus.
    Structure(StructureArgs),
    /// Check a grammar file against the meta-grammar.
    Validate {
        #[arg(long)]
        grammar: PathBuf,
    },
    /// Print the grammar of a bracketed instance.
    Extract {
        #[arg(long)]
        instance: PathBuf,
        /// Write the grammar here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus from a planted schema.
    Generate {
        #[arg(long)]
        schema: PathBuf,
        /// Number of sentences.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
pub struct StructureArgs {
    /// Trees file, one bracketed tree per line.
    #[arg(long)]
    pub trees: Option<PathBuf>,
    /// Entities TSV.
    #[arg(long)]
    pub entities: Option<PathBuf>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Similarity threshold in [0, 1] (default 0.7).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Minimum class size for a group (default 2).
    #[arg(long)]
    pub min_support: Option<usize>,
    /// Iteration budget (default 50).
    #[arg(long)]
    pub max_cycles: Option<usize>,
    /// jaccard, jaccard-multiset or tree-edit.
    #[arg(long)]
    pub similarity: Option<SimilarityKind>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to OUT/grammar.txt.
    #[arg(long)]
    pub grammar_out: Option<PathBuf>,
    /// Defaults to OUT/instance.txt.
    #[arg(long)]
    pub instance_out: Option<PathBuf>,
    /// Defaults to OUT/metrics.csv.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

/// Fully resolved settings of a `structure` run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub trees: PathBuf,
    pub entities: Option<PathBuf>,
    pub structuring: StructuringConfig,
    pub corpus: CorpusConfig,
    pub grammar_out: PathBuf,
    pub instance_out: PathBuf,
    pub metrics_out: PathBuf,
    pub summary_out: PathBuf,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", n + 1)))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, v: Option<String>) -> Result<Option<T>, CliError> {
    v.map(|v| v.parse().map_err(|_| CliError::Config(format!("{key}: `{v}` is not a valid number"))))
        .transpose()
}

fn tag_set(v: &str) -> std::collections::BTreeSet<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl RunConfig {
    pub fn resolve(args: &StructureArgs) -> Result<RunConfig, CliError> {
        let mut file = match &args.config {
            Some(p) => parse_config(&read(p)?)?,
            None => BTreeMap::new(),
        };
        let base = args.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));
        let mut take = |k: &str| file.remove(k);
        let tau = args.tau.or(number("tau", take("tau"))?);
        let min_support = args.min_support.or(number("min_support", take("min_support"))?);
        let max_cycles = args.max_cycles.or(number("max_cycles", take("max_cycles"))?);
        let similarity = match (args.similarity, take("similarity")) {
            (Some(k), _) => Some(k),
            (None, Some(v)) => Some(v.parse().map_err(|e| CliError::Config(format!("{e}")))?),
            (None, None) => None,
        };
        let path = |v: Option<String>| v.map(|v| base.join(v));
        let trees = args
            .trees
            .clone()
            .or(path(take("trees")))
            .ok_or_else(|| CliError::Config("no trees file given (--trees or trees=)".into()))?;
        let entities = args.entities.clone().or(path(take("entities")));
        let out = args.out.clone().or(path(take("out"))).unwrap_or_else(|| PathBuf::from("out"));
        let grammar_out = args.grammar_out.clone().or(path(take("grammar_out"))).unwrap_or(out.join("grammar.txt"));
        let instance_out = args.instance_out.clone().or(path(take("instance_out"))).unwrap_or(out.join("instance.txt"));
        let metrics_out = args.metrics_out.clone().or(path(take("metrics_out"))).unwrap_or(out.join("metrics.csv"));

        let mut corpus = CorpusConfig::default();
        if let Some(v) = take("conjunction_tags") {
            corpus.conjunction_tags = tag_set(&v);
        }
        if let Some(v) = take("coordinator_tags") {
            corpus.coordinator_tags = tag_set(&v);
        }
        if let Some(v) = take("keep_tags") {
            corpus.keep_tags = tag_set(&v);
        }
        if let Some(k) = file.keys().next() {
            return Err(CliError::Config(format!("unknown key `{k}`")));
        }

        let d = StructuringConfig::default();
        let structuring = StructuringConfig {
            sim: SimParams { kind: similarity.unwrap_or(d.sim.kind), tau: tau.unwrap_or(d.sim.tau) },
            min_support: min_support.unwrap_or(d.min_support),
            max_cycles: max_cycles.unwrap_or(d.max_cycles),
        };
        structuring.check()?;
        Ok(RunConfig {
            trees,
            entities,
            structuring,
            corpus,
            grammar_out,
            instance_out,
            metrics_out,
            summary_out: out.join("summary.txt"),
        })
    }
}

pub fn summary(outcome: &StructureOutcome) -> String {
    let status = match outcome.status {
        Status::Valid => "valid",
        Status::Empty => "empty",
        Status::BudgetExhausted => "invalid (cycle budget exhausted)",
        Status::Stalled => "invalid (no operation applies)",
    };
    let first = &outcome.log[0].metrics;
    let last = &outcome.log[outcome.log.len() - 1].metrics;
    format!(
        "status: {status}\niterations: {}\nreported iteration: {}\nfrontier: {}\nrules: {} -> {}\nunlabelled: {} -> {}\nclasses: {} -> {}\n",
        outcome.iterations(),
        outcome.best_iteration,
        outcome.frontier.len(),
        first.nb_prod,
        outcome.grammar.len(),
        first.nb_unlabelled,
        last.nb_unlabelled,
        first.nb_equiv,
        last.nb_equiv,
    )
}

pub fn cmd_structure(config: &RunConfig) -> Result<i32, CliError> {
    let corpus = read_corpus(&config.trees, config.entities.as_deref())?;
    log::info!("{} sentences", corpus.sentences.len());
    let instance = corpus.instance(&config.corpus);
    let outcome = structure(&instance, &config.structuring)?;

    for p in [&config.grammar_out, &config.instance_out, &config.metrics_out, &config.summary_out] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    write(&config.grammar_out, outcome.grammar.to_string())?;
    write(&config.instance_out, write_instance(&outcome.instance))?;
    let metrics = fs::File::create(&config.metrics_out).map_err(io_err(&config.metrics_out))?;
    write_csv(&outcome.log, metrics)?;
    let text = summary(&outcome);
    write(&config.summary_out, &text)?;
    print!("{text}");
    Ok(if outcome.is_success() { EXIT_OK } else { EXIT_UNFINISHED })
}

pub fn cmd_validate(path: &Path) -> Result<i32, CliError> {
    let grammar: CondensedGrammar =
        read(path)?.parse().map_err(|source| CliError::Grammar { path: path.to_path_buf(), source })?;
    let report = validate(&grammar);
    for v in &report.violations {
        println!("{v}");
    }
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_INVALID })
}

pub fn cmd_extract(path: &Path, out: Option<&Path>) -> Result<i32, CliError> {
    let tree = parse_tree(&read(path)?).map_err(|source| CliError::Tree { path: path.to_path_buf(), source })?;
    let grammar = extract_grammar(&tree).to_string();
    match out {
        Some(p) => write(p, grammar)?,
        None => io::stdout().write_all(grammar.as_bytes()).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_generate(schema: &Path, n: usize, seed: u64, out: &Path) -> Result<i32, CliError> {
    let schema: PlantedSchema = read(schema)?.parse()?;
    let corpus = generate(&schema, n, seed)?;
    corpus.write_to(out).map_err(io_err(out))?;
    Ok(EXIT_OK)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: `{v}` is not a positive integer")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Structure(args) => cmd_structure(&RunConfig::resolve(args)?),
        Command::Validate { grammar } => cmd_validate(grammar),
        Command::Extract { instance, out } => cmd_extract(instance, out.as_deref()),
        Command::Generate { schema, n, seed, out } => cmd_generate(schema, *n, *seed, out),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "tau = 0.9\nmin-support=3\nsimilarity = tree-edit\ntrees = t.txt\nkeep_tags = VP, PP\n").unwrap();
        let args = StructureArgs { config: Some(cfg.clone()), tau: Some(0.5), ..StructureArgs::default() };
        let rc = RunConfig::resolve(&args).unwrap();
        assert_eq!(rc.structuring.sim.tau, 0.5);
        assert_eq!(rc.structuring.min_support, 3);
        assert_eq!(rc.structuring.max_cycles, 50);
        assert_eq!(rc.structuring.sim.kind, SimilarityKind::TreeEditSimilarity);
        assert_eq!(rc.trees, dir.path().join("t.txt"));
        assert_eq!(rc.corpus.keep_tags, ["PP".to_string(), "VP".to_string()].into());
        assert_eq!(rc.metrics_out, PathBuf::from("out/metrics.csv"));

        fs::write(&cfg, "min_support = two\ntrees = t.txt\n").unwrap();
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Config(_))));
        fs::write(&cfg, "just words\n").unwrap();
        assert!(RunConfig::resolve(&args).is_err());
        assert!(RunConfig::resolve(&StructureArgs::default()).is_err());
    }

    #[test]
    fn help_and_usage_errors() {
        assert_eq!(run(["architext", "--help"]), EXIT_OK);
        assert_eq!(run(["architext", "frobnicate"]), EXIT_ERROR);
        assert_eq!(run(["architext", "generate", "--n", "x"]), EXIT_ERROR);
    }
}
