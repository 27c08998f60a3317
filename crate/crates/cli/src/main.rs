use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::LevelFilter;

use labeldesc::candidates::SearchConfig;
use labeldesc::embeddings::{build_neighbor_table, load_vectors};
use labeldesc::error::Error;
use labeldesc::eval::{compare, mean_stderr};
use labeldesc::io::{
    read_database, read_truth, sha256_hex, write_rows, write_truth, PatternReport, RunManifest,
};
use labeldesc::search::mine;
use labeldesc::synth::{
    gen_base, gen_planted, gen_xor, zipf_host, Axis, BaseGenConfig, HostConfig, PlantedConfig, PlantedTruth,
    TokenRows, XorConfig,
};

#[derive(Parser)]
#[command(name = "labeldesc", version, about = "Mine patterns that describe a binary label")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a pattern set from a labeled data file.
    Mine(MineArgs),
    /// Generate a synthetic dataset with planted ground truth.
    Gen(GenArgs),
    /// Score pattern sets against ground truth.
    Eval(EvalArgs),
}

#[derive(clap::Args)]
struct MineArgs {
    /// Data file: `+` or `-`, a tab, then space-separated tokens per line.
    #[arg(long)]
    input: PathBuf,
    /// Pattern report; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run manifest; defaults to `<output>.manifest.json` when --output is given.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Word vectors in text format; enables exclusive-or clauses.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    min_overlap: f64,
    #[arg(long, default_value_t = 5)]
    max_neighbors: usize,
    #[arg(long, default_value_t = 0.05)]
    xor_overlap_max: f64,
    /// Accept candidates regardless of their p-value.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Log every accepted pattern to standard error.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Base,
    Items,
    Ratio,
    Shift,
    Noise,
    Host,
    Planted,
    Xor,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    /// Axis values for items/ratio/shift/noise; one dataset each.
    #[arg(long = "value", num_args = 1..)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Host corpus for planted/xor: one transaction per line, tokens
    /// separated by spaces, an optional label and tab in front.
    #[arg(long)]
    host: Option<PathBuf>,
    /// planted/xor: fraction of pattern-carrying instances labeled `+`.
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    /// planted/xor: fraction of pattern-free instances labeled `+`.
    #[arg(long, default_value_t = 0.0)]
    label_noise: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    F1,
    SoftF1,
    Both,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Pattern reports (or truth files), paired in order with --truth.
    #[arg(long, num_args = 1.., required = true)]
    patterns: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    truth: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Metric::Both)]
    metric: Metric,
}

/// Exit status and message of a failed command.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SingleLabel(_) | Error::Domain(_) => 3,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure(2, format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn in_file(path: &Path, e: Error) -> Failure {
    let Failure(code, msg) = e.into();
    Failure(code, format!("{}: {msg}", path.display()))
}

fn digest_file(path: &Path) -> Result<String, Failure> {
    fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| io_err(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configs serialize")
}

fn cmd_mine(args: MineArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let config = SearchConfig {
        alpha: args.alpha,
        min_overlap: args.min_overlap,
        max_neighbors: args.max_neighbors,
        xor_overlap_max: args.xor_overlap_max,
        significance_filter: !args.no_filter,
        max_rounds: args.max_rounds,
    };
    config.validate()?;
    let db = read_database(open(&args.input)?).map_err(|e| in_file(&args.input, e))?;
    let mut manifest = RunManifest::new(
        "mine",
        serde_json::json!({ "search": to_json(&config), "embeddings": args.embeddings.is_some() }),
    );
    manifest.inputs.insert("input".into(), digest_file(&args.input)?);
    let neighbors = match &args.embeddings {
        Some(path) => {
            manifest.inputs.insert("embeddings".into(), digest_file(path)?);
            let table = load_vectors(open(path)?, db.vocab()).map_err(|e| in_file(path, e))?;
            Some(build_neighbor_table(&table, config.max_neighbors)?)
        }
        None => None,
    };
    let (model, trace) = mine(&db, &config, neighbors.as_ref())?;
    let report = PatternReport::new(&db, &model, &trace, manifest.digest())?;
    manifest.rounds = Some(trace.rounds.len());
    manifest.final_bits = Some(trace.final_bits());
    manifest.wall_clock_secs = start.elapsed().as_secs_f64();
    match &args.output {
        Some(path) => {
            let mut out = create(path)?;
            report.write(&mut out)?;
            out.flush().map_err(|e| io_err(path, e))?;
        }
        None => report.write(io::stdout().lock())?,
    }
    let manifest_path = args
        .manifest
        .or_else(|| args.output.as_ref().map(|p| p.with_extension("manifest.json")));
    if let Some(path) = manifest_path {
        manifest.write(create(&path)?)?;
    }
    eprintln!(
        "{} patterns in {} rounds, {:.1} bits (baseline {:.1})",
        report.patterns.len(),
        trace.rounds.len(),
        trace.final_bits(),
        trace.baseline_bits
    );
    Ok(())
}

/// Reads a host corpus; a leading label and tab, if present, is dropped.
fn read_host<R: BufRead>(reader: R) -> io::Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = line.split_once('\t').map_or(line.as_str(), |(_, t)| t);
        rows.push(tokens.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect());
    }
    Ok(rows)
}

fn write_dataset(dir: &Path, rows: &TokenRows, truth: &PlantedTruth, manifest: &RunManifest) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let data = dir.join("data.tsv");
    let mut out = create(&data)?;
    write_rows(rows, &mut out)?;
    out.flush().map_err(|e| io_err(&data, e))?;
    let mut out = create(&dir.join("truth.jsonl"))?;
    write_truth(truth, &mut out)?;
    out.flush().map_err(|e| io_err(dir, e))?;
    manifest.write(create(&dir.join("manifest.json"))?)?;
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let axis = match args.preset {
        Preset::Items => Some(Axis::Items),
        Preset::Ratio => Some(Axis::Ratio),
        Preset::Shift => Some(Axis::Shift),
        Preset::Noise => Some(Axis::Noise),
        _ => None,
    };
    let base = BaseGenConfig {
        seed: args.seed,
        ..BaseGenConfig::default()
    };
    if let Some(axis) = axis {
        if args.values.is_empty() {
            return Err(Failure(2, format!("--preset {} needs at least one --value", axis.name())));
        }
        let configs: Vec<BaseGenConfig> = args.values.iter().map(|&v| axis.apply(&base, v)).collect::<Result<_, _>>()?;
        for (value, config) in args.values.iter().zip(configs) {
            let (rows, truth) = gen_base(&config)?;
            let mut manifest = RunManifest::new("gen", to_json(&config));
            manifest.seeds = vec![args.seed, config.seed];
            manifest.wall_clock_secs = start.elapsed().as_secs_f64();
            write_dataset(&args.out.join(format!("{}-{value}", axis.name())), &rows, &truth, &manifest)?;
        }
        return Ok(());
    }
    if !args.values.is_empty() {
        return Err(Failure(2, "--value only applies to the items, ratio, shift and noise presets".into()));
    }
    match args.preset {
        Preset::Base => {
            let (rows, truth) = gen_base(&base)?;
            let mut manifest = RunManifest::new("gen", to_json(&base));
            manifest.seeds = vec![args.seed];
            manifest.wall_clock_secs = start.elapsed().as_secs_f64();
            write_dataset(&args.out, &rows, &truth, &manifest)
        }
        Preset::Host => {
            let config = HostConfig {
                seed: args.seed,
                ..HostConfig::default()
            };
            let host = zipf_host(&config)?;
            fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
            let path = args.out.join("host.txt");
            let mut out = create(&path)?;
            for row in &host {
                writeln!(out, "{}", row.join(" ")).map_err(|e| io_err(&path, e))?;
            }
            out.flush().map_err(|e| io_err(&path, e))?;
            let mut manifest = RunManifest::new("gen", to_json(&config));
            manifest.seeds = vec![args.seed];
            manifest.wall_clock_secs = start.elapsed().as_secs_f64();
            manifest.write(create(&args.out.join("manifest.json"))?)?;
            Ok(())
        }
        Preset::Planted | Preset::Xor => {
            let host_path = args
                .host
                .as_ref()
                .ok_or_else(|| Failure(2, "--preset planted/xor requires --host".into()))?;
            let host = read_host(open(host_path)?).map_err(|e| io_err(host_path, e))?;
            let host_digest = digest_file(host_path)?;
            if args.preset == Preset::Planted {
                let config = PlantedConfig {
                    shift: args.shift,
                    label_noise: args.label_noise,
                    seed: args.seed,
                    ..PlantedConfig::default()
                };
                let (rows, truth) = gen_planted(&host, &config)?;
                let mut manifest = RunManifest::new("gen", to_json(&config));
                manifest.inputs.insert("host".into(), host_digest);
                manifest.seeds = vec![args.seed];
                manifest.wall_clock_secs = start.elapsed().as_secs_f64();
                write_dataset(&args.out, &rows, &truth, &manifest)
            } else {
                let config = XorConfig {
                    shift: args.shift,
                    label_noise: args.label_noise,
                    seed: args.seed,
                    ..XorConfig::default()
                };
                let (rows, truth, vectors) = gen_xor(&host, &config)?;
                let mut manifest = RunManifest::new("gen", to_json(&config));
                manifest.inputs.insert("host".into(), host_digest);
                manifest.seeds = vec![args.seed];
                manifest.wall_clock_secs = start.elapsed().as_secs_f64();
                write_dataset(&args.out, &rows, &truth, &manifest)?;
                let path = args.out.join("vectors.txt");
                let mut out = create(&path)?;
                writeln!(out, "{} {}", vectors.len(), config.embedding_dim).map_err(|e| io_err(&path, e))?;
                for (token, v) in &vectors {
                    let v: Vec<String> = v.iter().map(f64::to_string).collect();
                    writeln!(out, "{token} {}", v.join(" ")).map_err(|e| io_err(&path, e))?;
                }
                out.flush().map_err(|e| io_err(&path, e))?;
                Ok(())
            }
        }
        _ => unreachable!("axis presets handled above"),
    }
}

/// Item sets of a pattern report or a truth file.
fn read_item_sets(path: &Path) -> Result<Vec<BTreeSet<String>>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let is_report = first
        .and_then(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .is_some_and(|v| v.get("digest").is_some());
    if is_report {
        let report = PatternReport::read(text.as_bytes()).map_err(|e| in_file(path, e))?;
        Ok(report.item_sets())
    } else {
        let truth = read_truth(text.as_bytes()).map_err(|e| in_file(path, e))?;
        Ok(truth.item_sets())
    }
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    if args.patterns.len() != args.truth.len() {
        return Err(Failure(
            2,
            format!("{} pattern files but {} truth files", args.patterns.len(), args.truth.len()),
        ));
    }
    let (mut f1, mut soft) = (Vec::new(), Vec::new());
    for (p, t) in args.patterns.iter().zip(&args.truth) {
        let c = compare(&read_item_sets(p)?, &read_item_sets(t)?);
        f1.push(c.f1);
        soft.push(c.soft_f1);
    }
    let (f1_mean, f1_err) = mean_stderr(&f1);
    let (soft_mean, soft_err) = mean_stderr(&soft);
    let mut line = serde_json::Map::new();
    line.insert("n".into(), f1.len().into());
    if args.metric != Metric::SoftF1 {
        line.insert("f1".into(), serde_json::json!({ "mean": f1_mean, "stderr": f1_err }));
    }
    if args.metric != Metric::F1 {
        line.insert("soft_f1".into(), serde_json::json!({ "mean": soft_mean, "stderr": soft_err }));
    }
    println!("{}", serde_json::Value::Object(line));
    let mut human = Vec::new();
    if args.metric != Metric::SoftF1 {
        human.push(format!("F1 {f1_mean:.3} ± {f1_err:.3}"));
    }
    if args.metric != Metric::F1 {
        human.push(format!("soft F1 {soft_mean:.3} ± {soft_err:.3}"));
    }
    println!("{} over {} pair(s)", human.join(", "), f1.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let trace = matches!(&cli.command, Command::Mine(a) if a.trace);
    env_logger::Builder::new()
        .filter_level(LevelFilter::Warn)
        .filter_module("labeldesc", if trace { LevelFilter::Debug } else { LevelFilter::Warn })
        .format_target(false)
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
