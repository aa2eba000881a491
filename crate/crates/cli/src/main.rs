//! Command-line front end: corpus generation, tournament labeling,
//! offline training, online recommendation, and benchmarking.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration problem,
//! 3 internal failure (non-convergence, serialization bugs).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use lfselect::{
    align_tasks, benchmark_store, generate_corpus, label_corpus, read_corpus, read_task,
    recommend, train_store, write_corpus, CorpusSpec, Error, MetaHyper, MetaKnowledgeStore,
    Result, ZooConfig,
};

#[derive(Parser)]
#[command(
    name = "lfselect",
    version,
    about = "Meta-learning model selection for load forecasting",
    after_help = "Config file (TOML): top-level `seed`, `threads`, \
                  `update_threshold` (reserved, currently without effect), \
                  and a `[corpus]` table overriding the generation grid."
)]
struct Cli {
    /// Master seed; takes precedence over the config file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads; 0 or absent means one per core.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Progress notes on stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic task corpus (index, per-task CSV + manifest).
    Generate(GenerateArgs),
    /// Tournament-label a corpus; one CSV row per task.
    Label(LabelArgs),
    /// Train classifiers and calibration, persist the knowledge store.
    Train(TrainArgs),
    /// Rank candidate models for one new task against a trained store.
    Recommend(RecommendArgs),
    /// Evaluate a trained store on its corpus testing partition.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Corpus directory to create.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// Corpus directory to label.
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Label table destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus directory to train from.
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Store file to write (single JSON document).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct RecommendArgs {
    /// Trained store file.
    #[arg(long, value_name = "PATH")]
    store: PathBuf,
    /// Task data CSV (timestamp, load, optional weather columns).
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Task requirements manifest (TOML).
    #[arg(long, value_name = "PATH")]
    requirements: PathBuf,
    /// How many models to rank.
    #[arg(short, long, default_value_t = 3)]
    k: usize,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Trained store file.
    #[arg(long, value_name = "PATH")]
    store: PathBuf,
    /// Corpus directory the store was trained from.
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// On-disk configuration. Flags win over file values. `update_threshold`
/// is reserved for a future retrain-trigger policy: it is parsed and
/// range-checked here but nothing consumes it yet.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    update_threshold: Option<f64>,
    corpus: Option<CorpusSpec>,
}

const DEFAULT_SEED: u64 = 7;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error {
                // Clap's own convention is exit 2; this tool reserves 2
                // for data problems and reports usage errors as 1.
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    if let Some(t) = file.update_threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config {
                key: "update_threshold".into(),
                reason: format!("must lie in [0, 1], got {t}"),
            });
        }
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    if let Some(n) = cli.threads.or(file.threads) {
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config {
                    key: "threads".into(),
                    reason: e.to_string(),
                })?;
        }
    }
    let verbose = cli.verbose;

    match cli.command {
        Command::Generate(args) => {
            let mut spec = file.corpus.unwrap_or_default();
            spec.seed = seed;
            cmd_generate(&spec, &args.out, verbose)
        }
        Command::Label(args) => cmd_label(&args.corpus, args.out.as_deref(), seed, verbose),
        Command::Train(args) => cmd_train(&args.corpus, &args.out, seed, verbose),
        Command::Recommend(args) => cmd_recommend(&args, verbose),
        Command::Benchmark(args) => {
            cmd_benchmark(&args.store, &args.corpus, args.out.as_deref(), verbose)
        }
    }
}

fn load_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
    toml::from_str(&text).map_err(|e| Error::Config {
        key: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Every verb fits and masks candidates under the same bounded profile
/// the tournament labels were produced with, so stored errors, masks,
/// and fresh forecasts stay comparable.
fn zoo() -> ZooConfig {
    ZooConfig::tournament()
}

fn note(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn cmd_generate(spec: &CorpusSpec, out: &Path, verbose: bool) -> Result<()> {
    let t0 = Instant::now();
    let tasks = generate_corpus(spec)?;
    note(
        verbose,
        format!("generated {} tasks in {:.1?}", tasks.len(), t0.elapsed()),
    );
    write_corpus(out, &tasks)?;
    println!("wrote {} tasks to {}", tasks.len(), out.display());
    Ok(())
}

fn cmd_label(corpus: &Path, out: Option<&Path>, seed: u64, verbose: bool) -> Result<()> {
    let tasks = read_corpus(corpus)?;
    note(verbose, format!("labeling {} tasks", tasks.len()));
    let t0 = Instant::now();
    let labeled = label_corpus(&tasks, seed, &zoo())?;
    note(verbose, format!("labeled in {:.1?}", t0.elapsed()));
    for (id, reason) in &labeled.failures {
        eprintln!("skipped {id}: {reason}");
    }

    let mut w = csv_writer(out)?;
    write_row(
        &mut w,
        ["task_id", "model", "name", "final_splits", "p_cc", "stabilized"],
    )?;
    for (id, label) in labeled.task_ids.iter().zip(&labeled.labels) {
        let d = &label.distribution;
        write_row(
            &mut w,
            [
                id.as_str(),
                &label.phi.index().to_string(),
                label.phi.name(),
                &d.l.to_string(),
                &d.p_cc.to_string(),
                &d.stabilized.to_string(),
            ],
        )?;
    }
    finish_csv(w)
}

fn cmd_train(corpus: &Path, out: &Path, seed: u64, verbose: bool) -> Result<()> {
    let tasks = read_corpus(corpus)?;
    note(verbose, format!("training on {} tasks", tasks.len()));
    let t0 = Instant::now();
    let outcome = train_store(&tasks, &zoo(), &MetaHyper::default(), seed)?;
    note(verbose, format!("trained in {:.1?}", t0.elapsed()));
    for (id, reason) in &outcome.failures {
        eprintln!("dropped {id}: {reason}");
    }
    outcome.store.save(out)?;
    println!(
        "stored {} tasks, {} classifiers at {}",
        outcome.store.task_ids.len(),
        outcome.store.classifiers.len(),
        out.display()
    );
    Ok(())
}

fn cmd_recommend(args: &RecommendArgs, verbose: bool) -> Result<()> {
    let store = MetaKnowledgeStore::load(&args.store)?;
    let task = read_task(&args.data, &args.requirements)?;
    // Compute path: feature extraction plus forward classifier and curve
    // evaluation; no model fitting happens here.
    let t0 = Instant::now();
    let rec = recommend(&store, &task, args.k, &zoo())?;
    note(verbose, format!("ranked in {:.3?}", t0.elapsed()));

    let mut w = csv_writer(None)?;
    write_row(&mut w, ["rank", "model", "name", "estimated_accuracy"])?;
    for (i, entry) in rec.entries.iter().enumerate() {
        write_row(
            &mut w,
            [
                (i + 1).to_string().as_str(),
                &entry.model.index().to_string(),
                entry.model.name(),
                &entry.accuracy.to_string(),
            ],
        )?;
    }
    finish_csv(w)
}

fn cmd_benchmark(store: &Path, corpus: &Path, out: Option<&Path>, verbose: bool) -> Result<()> {
    let store = MetaKnowledgeStore::load(store)?;
    let tasks = align_tasks(&store.task_ids, read_corpus(corpus)?)?;
    note(verbose, format!("benchmarking {} tasks", tasks.len()));
    let t0 = Instant::now();
    let report = benchmark_store(&store, &tasks, &zoo())?;
    note(verbose, format!("benchmarked in {:.1?}", t0.elapsed()));

    let mut w = csv_writer(out)?;
    write_row(&mut w, ["metric", "name", "value"])?;
    for (metric, name, value) in report.csv_rows() {
        write_row(&mut w, [metric.as_str(), name.as_str(), &value.to_string()])?;
    }
    finish_csv(w)
}

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_row<const N: usize>(
    w: &mut csv::Writer<Box<dyn Write>>,
    row: [&str; N],
) -> Result<()> {
    w.write_record(row).map_err(csv_error)
}

fn finish_csv(mut w: csv::Writer<Box<dyn Write>>) -> Result<()> {
    w.flush().map_err(Error::Io)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config {
            key: "report".into(),
            reason: format!("{other:?}"),
        },
    }
}
