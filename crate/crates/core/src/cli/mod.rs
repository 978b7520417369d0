//! Command-line front door: `partition`, `train` and `report` subcommands.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags or flag
//! combinations), 1 on runtime errors (missing files, dimension problems,
//! oversized P, ...). The worker count defaults to the TOPICGRID_THREADS
//! environment variable, then to the host parallelism; `--p` overrides
//! both.

mod manifest;

pub use manifest::{sha256_file, RunManifest};

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{self, Corpus, TimestampTable};
use crate::error::{Error, Result};
use crate::metrics;
use crate::partitioner::{
    partition, partition_with_fixed_rows, Algorithm, PartitionerConfig,
};
use crate::sampler::{self, GibbsState, Mode, ModelConfig, ParallelPlan};
use crate::workload::{build_bot_workload, build_workload, BalanceReport, Partitioning};

pub const THREADS_ENV: &str = "TOPICGRID_THREADS";
const COUNTS_MAGIC: &str = "topicgrid-counts";

#[derive(Parser)]
#[command(
    name = "topicgrid",
    version,
    about = "Block-partitioned parallel topic model trainer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate load-balancing partitionings of a document-word workload.
    Partition(PartitionArgs),
    /// Train a topic model with partition-parallel Gibbs sweeps.
    Train(TrainArgs),
    /// Summarize a finished training run (top words, timelines, trace).
    Report(ReportArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Bag-of-words file: D, W, NNZ header lines then `docID wordID count`.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Vocabulary file, one word per line, aligned with word ids.
    #[arg(long, requires = "data")]
    vocab: Option<PathBuf>,
    /// Synthetic corpus `docs,vocab,mean_len,zipf_exponent[,seed]`.
    #[arg(long)]
    synthetic: Option<String>,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Algorithms to run, comma separated (baseline, a1, a2, a3, all).
    #[arg(long, default_value = "all", value_delimiter = ',')]
    algo: Vec<String>,
    /// Group counts P, comma separated; defaults to the thread count.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    /// Attempts per randomized algorithm (best eta wins).
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the group assignments (needs exactly one algorithm and one P).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a run manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Timestamp file: one `docID value` pair per line (bot mode).
    #[arg(long)]
    timestamps: Option<PathBuf>,
    /// Cycle documents through this many synthetic years (bot mode
    /// without a timestamp file).
    #[arg(long, conflicts_with = "timestamps")]
    synthetic_years: Option<usize>,
    /// Timestamp array length L per document.
    #[arg(long, default_value_t = 16)]
    array_len: usize,
    /// lda or bot.
    #[arg(long, default_value = "lda")]
    mode: Mode,
    /// Number of topics K.
    #[arg(long, default_value_t = 256)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Partitioning algorithm for the parallel sweep.
    #[arg(long, default_value = "a3")]
    algo: Algorithm,
    /// Worker/group count; defaults to TOPICGRID_THREADS, then the host.
    #[arg(long)]
    p: Option<usize>,
    /// Partitioning attempts for randomized algorithms.
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    /// Record perplexity every this many iterations (0: final only).
    #[arg(long, default_value_t = 1)]
    eval_every: usize,
    /// Single-stream reference sweep, no partitioning.
    #[arg(long)]
    sequential: bool,
    /// Directory receiving manifest.txt, trace.csv and counts.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Training output directory (must hold manifest.txt and counts.txt).
    #[arg(long)]
    run: PathBuf,
    /// Words (and timestamps) listed per topic.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Print only the first this many topics.
    #[arg(long)]
    topics: Option<usize>,
}

/// Parse the process arguments, execute, and map errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Partition(args) => cmd_partition(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => 0,
        Err(err @ Error::Config(_)) => {
            eprintln!("error: {}", err);
            2
        }
        Err(err) => {
            eprintln!("error: {}", err);
            1
        }
    }
}

fn open_reader(path: &Path) -> Result<BufReader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufReader::new(file))
}

fn parse_synthetic_spec(spec: &str) -> Result<(usize, usize, usize, f64, u64)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 4 && parts.len() != 5 {
        return Err(Error::Config(format!(
            "--synthetic wants docs,vocab,mean_len,zipf_exponent[,seed], got {:?}",
            spec
        )));
    }
    let field = |i: usize, name: &str| -> Result<&str> {
        parts
            .get(i)
            .copied()
            .ok_or_else(|| Error::Config(format!("--synthetic is missing {}", name)))
    };
    let parse_err =
        |name: &str, v: &str| Error::Config(format!("--synthetic {} {:?} does not parse", name, v));
    let docs: usize = field(0, "docs")?
        .parse()
        .map_err(|_| parse_err("docs", parts[0]))?;
    let vocab: usize = field(1, "vocab")?
        .parse()
        .map_err(|_| parse_err("vocab", parts[1]))?;
    let mean_len: usize = field(2, "mean_len")?
        .parse()
        .map_err(|_| parse_err("mean_len", parts[2]))?;
    let exponent: f64 = field(3, "zipf_exponent")?
        .parse()
        .map_err(|_| parse_err("zipf_exponent", parts[3]))?;
    let seed: u64 = match parts.get(4) {
        Some(v) => v.parse().map_err(|_| parse_err("seed", v))?,
        None => 0,
    };
    Ok((docs, vocab, mean_len, exponent, seed))
}

fn load_corpus(input: &InputArgs, manifest: &mut RunManifest) -> Result<Corpus> {
    match (&input.data, &input.synthetic) {
        (Some(path), None) => {
            manifest.push("data", path.display());
            manifest.push_file_digest("data_sha256", path)?;
            let vocab = match &input.vocab {
                Some(vp) => {
                    manifest.push("vocab", vp.display());
                    manifest.push_file_digest("vocab_sha256", vp)?;
                    Some(open_reader(vp)?)
                }
                None => None,
            };
            corpus::load_uci_bow(open_reader(path)?, vocab)
        }
        (None, Some(spec)) => {
            let (docs, vocab, mean_len, exponent, seed) = parse_synthetic_spec(spec)?;
            manifest.push("synthetic", spec);
            corpus::generate_synthetic(docs, vocab, mean_len, exponent, seed)
        }
        (None, None) => Err(Error::Config("provide --data or --synthetic".into())),
        (Some(_), Some(_)) => Err(Error::Config(
            "--data and --synthetic are mutually exclusive".into(),
        )),
    }
}

fn resolve_p(flag: Option<usize>) -> Result<usize> {
    if let Some(p) = flag {
        return Ok(p);
    }
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        return raw.trim().parse::<usize>().map_err(|_| {
            Error::Config(format!("{}={:?} is not a thread count", THREADS_ENV, raw))
        });
    }
    Ok(std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1))
}

fn parse_algorithms(raw: &[String]) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for token in raw {
        if token.eq_ignore_ascii_case("all") {
            out.extend(Algorithm::ALL);
        } else {
            out.push(token.parse()?);
        }
    }
    Ok(out)
}

fn write_partition_file(path: &Path, partitioning: &Partitioning) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "partitioning p={} rows={} cols={}\n",
        partitioning.p,
        partitioning.rows(),
        partitioning.cols()
    ));
    for id in partitioning.row_group_ids() {
        out.push_str(&format!("{}\n", id));
    }
    for id in partitioning.col_group_ids() {
        out.push_str(&format!("{}\n", id));
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn cmd_partition(args: &PartitionArgs) -> Result<()> {
    let algorithms = parse_algorithms(&args.algo)?;
    if algorithms.is_empty() {
        return Err(Error::Config("no algorithm given".into()));
    }
    let p_values = match &args.p {
        Some(list) if !list.is_empty() => list.clone(),
        _ => vec![resolve_p(None)?],
    };
    if args.out.is_some() && (algorithms.len() != 1 || p_values.len() != 1) {
        return Err(Error::Config(
            "--out needs exactly one algorithm and one P".into(),
        ));
    }
    if args.repeats == 0 {
        return Err(Error::Config("--repeats must be >= 1".into()));
    }

    let mut manifest = RunManifest::new("partition");
    let total_timer = Instant::now();
    let corpus = load_corpus(&args.input, &mut manifest)?;
    let load_ms = total_timer.elapsed().as_millis();
    let matrix = build_workload(&corpus);

    manifest.push("docs", matrix.rows);
    manifest.push("vocab_size", matrix.cols);
    manifest.push("tokens", matrix.total);
    manifest.push(
        "algorithms",
        algorithms
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.push(
        "p_values",
        p_values
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.push("repeats", args.repeats);
    manifest.push("seed", args.seed);

    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    let werr = |e| Error::io("<stdout>", e);
    writeln!(stdout, "{},elapsed_ms", BalanceReport::csv_header()).map_err(werr)?;
    for &algorithm in &algorithms {
        for &p in &p_values {
            let config = PartitionerConfig {
                p,
                repeats: args.repeats,
                seed: args.seed,
            };
            let timer = Instant::now();
            let (partitioning, report) = partition(&matrix, algorithm, &config)?;
            let elapsed_ms = timer.elapsed().as_millis();
            writeln!(
                stdout,
                "{},{}",
                report.csv_row(&algorithm.to_string()),
                elapsed_ms
            )
            .map_err(werr)?;
            manifest.push(
                format!("eta_{}_p{}", algorithm, p).as_str(),
                format!("{:.6}", report.eta),
            );
            manifest.push(format!("elapsed_ms_{}_p{}", algorithm, p).as_str(), elapsed_ms);
            if let Some(out) = &args.out {
                write_partition_file(out, &partitioning)?;
                manifest.push("out", out.display());
            }
        }
    }
    manifest.push("phase_load_ms", load_ms);
    manifest.push("phase_total_ms", total_timer.elapsed().as_millis());
    if let Some(path) = &args.manifest {
        manifest.write_to(path)?;
    }
    Ok(())
}

fn load_timestamp_table(
    args: &TrainArgs,
    corpus: &Corpus,
    manifest: &mut RunManifest,
) -> Result<Option<TimestampTable>> {
    match (args.mode, &args.timestamps, args.synthetic_years) {
        (Mode::Lda, None, None) => Ok(None),
        (Mode::Lda, _, _) => Err(Error::Config(
            "--timestamps/--synthetic-years need --mode bot".into(),
        )),
        (Mode::Bot, Some(path), _) => {
            manifest.push("timestamps", path.display());
            manifest.push_file_digest("timestamps_sha256", path)?;
            let table = corpus::load_timestamps(open_reader(path)?, corpus, args.array_len)?;
            Ok(Some(table))
        }
        (Mode::Bot, None, Some(years)) => {
            if years == 0 {
                return Err(Error::Config("--synthetic-years must be >= 1".into()));
            }
            manifest.push("synthetic_years", years);
            let raw: Vec<i64> = (0..corpus.doc_count)
                .map(|j| 2000 + (j % years) as i64)
                .collect();
            Ok(Some(TimestampTable::from_raw(&raw, args.array_len)?))
        }
        (Mode::Bot, None, None) => Err(Error::Config(
            "--mode bot requires --timestamps or --synthetic-years".into(),
        )),
    }
}

/// One-line header with the dimensions and raw timestamp values, then the
/// doc-topic, word-topic and timestamp-topic counts, one row per line.
fn write_counts(
    path: &Path,
    state: &GibbsState,
    ts_values: Option<&[i64]>,
) -> Result<()> {
    let ts_list = match ts_values {
        Some(values) => values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
        None => "-".to_string(),
    };
    let mut out = String::new();
    out.push_str(&format!(
        "{} mode={} k={} d={} w={} wts={} ts_values={}\n",
        COUNTS_MAGIC,
        state.config.mode,
        state.config.num_topics,
        state.doc_count,
        state.vocab_size,
        state.ts_vocab_size,
        ts_list
    ));
    let push_rows = |out: &mut String, rows: &[Vec<u32>]| {
        for row in rows {
            let mut first = true;
            for &c in row {
                if !first {
                    out.push(' ');
                }
                out.push_str(&c.to_string());
                first = false;
            }
            out.push('\n');
        }
    };
    push_rows(&mut out, &state.doc_topic);
    push_rows(&mut out, &state.word_topic);
    push_rows(&mut out, &state.ts_topic);
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reverse of `write_counts`: a GibbsState with counts filled in and no
/// token arrays (enough for `metrics::estimate`), plus the timestamp
/// values. Never call `validate` on it.
fn read_counts(path: &Path, config: &ModelConfig) -> Result<(GibbsState, Vec<i64>)> {
    let bad = |msg: String| Error::Format(format!("{}: {}", path.display(), msg));
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty counts file".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some(COUNTS_MAGIC) {
        return Err(bad(format!(
            "corrupted counts header (expected it to start with {:?})",
            COUNTS_MAGIC
        )));
    }
    let mut mode = None;
    let mut k = None;
    let mut d = None;
    let mut w = None;
    let mut wts = None;
    let mut ts_values = Vec::new();
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("corrupted counts header field {:?}", field)))?;
        match key {
            "mode" => mode = Some(value.parse::<Mode>()?),
            "k" => k = Some(parse_header_num(value, "k", &bad)?),
            "d" => d = Some(parse_header_num(value, "d", &bad)?),
            "w" => w = Some(parse_header_num(value, "w", &bad)?),
            "wts" => wts = Some(parse_header_num(value, "wts", &bad)?),
            "ts_values" => {
                if value != "-" {
                    for v in value.split(',') {
                        ts_values.push(
                            v.parse::<i64>()
                                .map_err(|_| bad(format!("bad ts_values entry {:?}", v)))?,
                        );
                    }
                }
            }
            other => return Err(bad(format!("unknown counts header key {:?}", other))),
        }
    }
    let (mode, k, d, w, wts) = match (mode, k, d, w, wts) {
        (Some(m), Some(k), Some(d), Some(w), Some(wts)) => (m, k, d, w, wts),
        _ => return Err(bad("counts header is missing a dimension".into())),
    };
    if wts != ts_values.len() {
        return Err(bad(format!(
            "header says wts={} but lists {} ts_values",
            wts,
            ts_values.len()
        )));
    }
    if mode != config.mode || k != config.num_topics {
        return Err(bad(format!(
            "counts are for mode={} k={}, manifest says mode={} k={}",
            mode, k, config.mode, config.num_topics
        )));
    }

    let mut read_block = |rows: usize, what: &str| -> Result<Vec<Vec<u32>>> {
        let mut block = Vec::with_capacity(rows);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("{} row {} missing", what, r)))?;
            let row: Vec<u32> = line
                .split_whitespace()
                .map(|v| {
                    v.parse::<u32>()
                        .map_err(|_| bad(format!("{} row {} has bad count {:?}", what, r, v)))
                })
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(bad(format!(
                    "{} row {} has {} entries, expected {}",
                    what,
                    r,
                    row.len(),
                    k
                )));
            }
            block.push(row);
        }
        Ok(block)
    };
    let doc_topic = read_block(d, "doc_topic")?;
    let word_topic = read_block(w, "word_topic")?;
    let ts_topic = read_block(wts, "ts_topic")?;
    if lines.next().is_some() {
        return Err(bad("trailing lines after the count blocks".into()));
    }

    let mut topic_totals = vec![0u64; k];
    for row in &word_topic {
        for (t, &c) in row.iter().enumerate() {
            topic_totals[t] += c as u64;
        }
    }
    let mut ts_topic_totals = vec![0u64; k];
    for row in &ts_topic {
        for (t, &c) in row.iter().enumerate() {
            ts_topic_totals[t] += c as u64;
        }
    }
    let state = GibbsState {
        config: *config,
        doc_count: d,
        vocab_size: w,
        ts_vocab_size: wts,
        tokens: vec![Vec::new(); d],
        z: vec![Vec::new(); d],
        ts_tokens: vec![Vec::new(); d],
        y: vec![Vec::new(); d],
        doc_topic,
        word_topic,
        ts_topic,
        topic_totals,
        ts_topic_totals,
    };
    Ok((state, ts_values))
}

fn parse_header_num(
    value: &str,
    name: &str,
    bad: &dyn Fn(String) -> Error,
) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| bad(format!("bad {} in counts header: {:?}", name, value)))
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut manifest = RunManifest::new("train");
    let total_timer = Instant::now();

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::io(args.out_dir.display().to_string(), e))?;

    let corpus = load_corpus(&args.input, &mut manifest)?;
    let table = load_timestamp_table(args, &corpus, &mut manifest)?;
    let load_ms = total_timer.elapsed().as_millis();

    let mut config = ModelConfig::new(args.mode, args.seed);
    config.num_topics = args.k;
    config.alpha = args.alpha;
    config.beta = args.beta;
    config.gamma = args.gamma;
    config.iterations = args.iterations;
    config.validate()?;

    manifest.push("mode", args.mode);
    manifest.push("k", args.k);
    manifest.push("alpha", args.alpha);
    manifest.push("beta", args.beta);
    manifest.push("gamma", args.gamma);
    manifest.push("array_len", args.array_len);
    manifest.push("iterations", args.iterations);
    manifest.push("seed", args.seed);
    manifest.push("eval_every", args.eval_every);
    manifest.push("sequential", args.sequential);
    manifest.push("docs", corpus.doc_count);
    manifest.push("vocab_size", corpus.vocab_size);
    manifest.push("tokens", corpus.total_tokens);
    if let Some(t) = &table {
        manifest.push("timestamp_vocab_size", t.timestamp_vocab_size);
    }

    let partition_timer = Instant::now();
    let plan = if args.sequential {
        None
    } else {
        let p = resolve_p(args.p)?;
        let pconfig = PartitionerConfig {
            p,
            repeats: args.repeats,
            seed: args.seed,
        };
        manifest.push("p", p);
        manifest.push("algo", args.algo);
        manifest.push("repeats", args.repeats);
        let matrix = build_workload(&corpus);
        let (dw, dw_report) = partition(&matrix, args.algo, &pconfig)?;
        manifest.push("eta_dw", format!("{:.6}", dw_report.eta));
        let ts_partitioning = match &table {
            Some(t) => {
                let ts_matrix = build_bot_workload(t, corpus.doc_count);
                let (tsp, ts_report) =
                    partition_with_fixed_rows(&ts_matrix, &dw, args.algo, &pconfig)?;
                manifest.push("eta_dts", format!("{:.6}", ts_report.eta));
                Some(tsp)
            }
            None => None,
        };
        Some(ParallelPlan::new(&corpus, table.as_ref(), dw, ts_partitioning)?)
    };
    let partition_ms = partition_timer.elapsed().as_millis();

    let train_timer = Instant::now();
    let output = sampler::train(&corpus, table.as_ref(), &config, plan.as_ref(), args.eval_every)?;
    let train_ms = train_timer.elapsed().as_millis();

    let trace_path = args.out_dir.join("trace.csv");
    let mut trace_text = String::from("iteration,perplexity\n");
    for (it, perp) in &output.trace {
        trace_text.push_str(&format!("{},{}\n", it, perp));
    }
    fs::write(&trace_path, trace_text)
        .map_err(|e| Error::io(trace_path.display().to_string(), e))?;

    write_counts(
        &args.out_dir.join("counts.txt"),
        &output.state,
        table.as_ref().map(|t| t.values.as_slice()),
    )?;

    if let Some((_, perp)) = output.trace.last() {
        manifest.push("final_perplexity", perp);
    }
    manifest.push("phase_load_ms", load_ms);
    manifest.push("phase_partition_ms", partition_ms);
    manifest.push("phase_train_ms", train_ms);
    manifest.push("phase_total_ms", total_timer.elapsed().as_millis());
    manifest.write_to(&args.out_dir.join("manifest.txt"))?;
    Ok(())
}

fn load_vocab_names(manifest: &RunManifest) -> Option<Vec<String>> {
    let path = manifest.get("vocab")?;
    let file = fs::File::open(path).ok()?;
    let names: Vec<String> = BufReader::new(file)
        .lines()
        .map_while(|l| l.ok())
        .map(|l| l.trim().to_string())
        .collect();
    Some(names)
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let manifest = RunManifest::load(&args.run.join("manifest.txt"))?;
    let mode: Mode = manifest.require_parsed("mode")?;
    let mut config = ModelConfig::new(mode, 0);
    config.num_topics = manifest.require_parsed("k")?;
    config.alpha = manifest.require_parsed("alpha")?;
    config.beta = manifest.require_parsed("beta")?;
    config.gamma = manifest.require_parsed("gamma")?;

    let (state, ts_values) = read_counts(&args.run.join("counts.txt"), &config)?;
    let estimates = metrics::estimate(&state);
    let vocab = load_vocab_names(&manifest);

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let werr = |e| Error::io("<stdout>", e);

    writeln!(out, "run {}", args.run.display()).map_err(werr)?;
    writeln!(
        out,
        "mode={} k={} docs={} vocab={} timestamps={}",
        mode,
        config.num_topics,
        state.doc_count,
        state.vocab_size,
        state.ts_vocab_size
    )
    .map_err(werr)?;

    let trace_path = args.run.join("trace.csv");
    if let Ok(trace) = fs::read_to_string(&trace_path) {
        let mut points = Vec::new();
        for line in trace.lines().skip(1) {
            if let Some((it, perp)) = line.split_once(',') {
                if let (Ok(it), Ok(perp)) = (it.parse::<usize>(), perp.parse::<f64>()) {
                    points.push((it, perp));
                }
            }
        }
        if let (Some(first), Some(last)) = (points.first(), points.last()) {
            let min = points
                .iter()
                .fold((0usize, f64::INFINITY), |acc, &(it, p)| {
                    if p < acc.1 {
                        (it, p)
                    } else {
                        acc
                    }
                });
            writeln!(
                out,
                "perplexity first={} last={} min={} at iteration {}",
                first.1, last.1, min.1, min.0
            )
            .map_err(werr)?;
        }
    }

    let topics = args.topics.unwrap_or(config.num_topics).min(config.num_topics);
    for t in 0..topics {
        writeln!(out, "topic {} tokens={}", t, state.topic_totals[t]).map_err(werr)?;
        let words = metrics::top_words(&estimates, t, args.top)?;
        let mut line = String::from("  words:");
        for (w, p) in words {
            let label = vocab
                .as_ref()
                .and_then(|v| v.get(w as usize).cloned())
                .unwrap_or_else(|| w.to_string());
            line.push_str(&format!(" {}:{:.6}", label, p));
        }
        writeln!(out, "{}", line).map_err(werr)?;
        if mode == Mode::Bot {
            // Full histogram, shortest round-trip floats so the printed
            // row sums exactly like the in-memory one.
            let mut line = String::from("  timeline:");
            for (i, &v) in estimates.pi[t].iter().enumerate() {
                line.push_str(&format!(" {}:{}", ts_values[i], v));
            }
            writeln!(out, "{}", line).map_err(werr)?;
        }
    }
    Ok(())
}
