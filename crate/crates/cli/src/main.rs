//! `sketchlab`: build and query itemset sketches, run the reconstruction
//! attacks against them, and tabulate sketch sizes.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 parameter rejection,
//! 3 attack or decode failure.

mod attack;
mod bench;
mod error;
mod report;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sketchlab::rng::random_database;
use sketchlab::shatter::{build_family, round_dimension, verify_shatter, MAX_VERIFY_V};
use sketchlab::sketch::{read_blob, write_blob, SizeBreakdown, DEFAULT_BOOST_FACTOR};
use sketchlab::{
    Algo, Answer, Builder, Database, Itemset, Semantics, Sketch, SketchBuilder, SketchParams,
};

use crate::error::{exit_code, rejected, CliError};
use crate::report::{emit_json, open_output, parse_itemset, parse_unit};

#[derive(Parser)]
#[command(
    name = "sketchlab",
    version,
    about = "Itemset frequency sketches and attacks on their size"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random database in text (or `.bin` binary) format.
    Gen(GenArgs),
    /// Build a sketch blob from a database file.
    Sketch(SketchArgs),
    /// Answer itemset queries from a sketch blob.
    Query(QueryArgs),
    /// Print the shattered vectors as a database, then the string-to-itemset table as CSV.
    Shatter(ShatterArgs),
    /// Check the shattering property for every string.
    VerifyShatter(ShatterArgs),
    /// Run a reconstruction attack.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Same as `attack indicator`.
    AttackIndicator(attack::IndicatorArgs),
    /// Same as `attack estimator`.
    AttackEstimator(attack::EstimatorArgs),
    /// Tabulate sketch sizes and failure rates over a parameter grid.
    Bench(bench::BenchArgs),
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Recover a message through an indicator sketch.
    Indicator(attack::IndicatorArgs),
    /// Recover a message through an estimator sketch.
    Estimator(attack::EstimatorArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Probability that an entry is 1.
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination; binary when the extension is `.bin`. Text to stdout if omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse()
}

fn parse_semantics(s: &str) -> Result<Semantics, String> {
    s.parse()
}

#[derive(Args)]
struct SketchArgs {
    /// Database file (`.bin` is read as binary).
    #[arg(long, short)]
    input: PathBuf,
    /// release-db, release-answers, subsample or median-boost.
    #[arg(long, value_parser = parse_algo)]
    algo: Algo,
    /// for-all-indicator, for-each-indicator, for-all-estimator or for-each-estimator.
    #[arg(long, value_parser = parse_semantics)]
    semantics: Semantics,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = parse_unit)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_unit)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sub-sketch algorithm for median boosting.
    #[arg(long, default_value = "subsample", value_parser = parse_algo)]
    base: Algo,
    /// Number of boosted copies; derived from `--boost-factor` if omitted.
    #[arg(long)]
    copies: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BOOST_FACTOR)]
    boost_factor: f64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Sketch blob file.
    #[arg(long)]
    sketch: PathBuf,
    /// Comma-separated 1-based attributes; repeat for several queries.
    #[arg(long = "itemset", required = true, value_parser = parse_itemset)]
    itemsets: Vec<Vec<usize>>,
    /// Refuse to answer unless the blob was built for this semantics.
    #[arg(long, value_parser = parse_semantics)]
    semantics: Option<Semantics>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ShatterArgs {
    #[arg(long)]
    d: usize,
    #[arg(long = "kprime", visible_alias = "k-prime")]
    kprime: usize,
}

fn run_gen(args: &GenArgs) -> anyhow::Result<()> {
    if args.n == 0 || args.d == 0 {
        return rejected(format!(
            "n and d must be positive (got {}x{})",
            args.n, args.d
        ));
    }
    let db = random_database(args.n, args.d, args.density, args.seed);
    match &args.output {
        Some(p) => db
            .write_path(p)
            .with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut w = open_output(None)?;
            w.write_all(db.to_text().as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SketchSummary {
    algo: &'static str,
    base: Option<&'static str>,
    semantics: &'static str,
    k: usize,
    epsilon: f64,
    delta: f64,
    n: u64,
    d: usize,
    seed: u64,
    copies: usize,
    payload_bits: u64,
    /// Closed-form size for the three base algorithms.
    closed_form_bits: Option<u128>,
    theorem1_bits: u128,
    file_bytes: usize,
}

fn run_sketch(args: &SketchArgs) -> anyhow::Result<()> {
    let db = Database::read_path(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let params = SketchParams::new(args.k, args.epsilon, args.delta, db.n() as u64, db.d())?;
    let builder = match args.algo {
        Algo::MedianBoost => Builder::MedianBoost {
            base: args.base,
            factor: args.boost_factor,
            copies: args.copies,
        },
        a => Builder::for_algo(a),
    };
    let blob = builder.build(&db, &params, args.semantics, args.seed)?;
    let mut bytes = Vec::new();
    write_blob(&blob, &mut bytes)?;
    let mut f = BufWriter::new(
        File::create(&args.output)
            .with_context(|| format!("creating {}", args.output.display()))?,
    );
    f.write_all(&bytes)?;
    f.flush()?;

    let sizes = SizeBreakdown::of(args.semantics, &params)?;
    emit_json(
        &SketchSummary {
            algo: blob.algo.name(),
            base: blob.base.map(Algo::name),
            semantics: blob.semantics.name(),
            k: params.k,
            epsilon: params.epsilon,
            delta: params.delta,
            n: params.n,
            d: params.d,
            seed: blob.seed,
            copies: blob.copies()?,
            payload_bits: blob.size_bits(),
            closed_form_bits: sizes.bits_for(blob.algo),
            theorem1_bits: sizes.bound().bits(),
            file_bytes: bytes.len(),
        },
        None,
    )
}

fn answer_json(a: Answer) -> Value {
    match a {
        Answer::Indicator(b) => json!({ "indicator": b }),
        Answer::Estimate(x) => json!({ "estimate": x }),
    }
}

fn run_query(args: &QueryArgs) -> anyhow::Result<()> {
    let file =
        File::open(&args.sketch).with_context(|| format!("opening {}", args.sketch.display()))?;
    let blob = read_blob(BufReader::new(file))?;
    let sketch = Sketch::from_blob(&blob)?;
    let semantics = args.semantics.unwrap_or(blob.semantics);
    let d = blob.params.d;
    let answers = args
        .itemsets
        .iter()
        .map(|attrs| {
            let t = Itemset::from_one_based(d, attrs)?;
            let a = sketch.query_as(semantics, &t)?;
            let mut v = answer_json(a);
            v["itemset"] = json!(attrs);
            Ok(v)
        })
        .collect::<anyhow::Result<Vec<Value>>>()?;
    emit_json(
        &json!({
            "algo": blob.algo.name(),
            "semantics": semantics.name(),
            "seed": blob.seed,
            "answers": answers,
        }),
        args.output.as_ref(),
    )
}

fn run_shatter(args: &ShatterArgs) -> anyhow::Result<()> {
    let Some(d) = round_dimension(args.d, args.kprime) else {
        return rejected(format!(
            "d >= 2k' is required to round d/k' to a power of two (d = {}, k' = {})",
            args.d, args.kprime
        ));
    };
    if d != args.d {
        eprintln!(
            "note: d = {} rounded down to {d} so that d/k' is a power of two",
            args.d
        );
    }
    let family = build_family(d, args.kprime)?;
    let v = family.v();
    if v > MAX_VERIFY_V {
        return rejected(format!(
            "v = {v} strings would need 2^{v} table rows (limit v <= {MAX_VERIFY_V})"
        ));
    }
    let mut w = open_output(None)?;
    w.write_all(family.to_database().to_text().as_bytes())?;
    writeln!(w)?;
    let mut table = csv::Writer::from_writer(&mut w);
    table.write_record(["s", "attrs"])?;
    for mask in 0..1u64 << v {
        let attrs: Vec<String> = family
            .itemset_for_mask(mask)
            .to_one_based()
            .iter()
            .map(usize::to_string)
            .collect();
        table.write_record([format!("{mask:0v$b}"), attrs.join(" ")])?;
    }
    table.flush()?;
    drop(table);
    w.flush()?;
    Ok(())
}

fn run_verify_shatter(args: &ShatterArgs) -> anyhow::Result<()> {
    let family = build_family(args.d, args.kprime)?;
    let report = verify_shatter(&family)?;
    match report.counterexample {
        None => {
            println!(
                "verify-shatter d={} k'={}: {} strings checked, PASS",
                args.d, args.kprime, report.strings_checked
            );
            Ok(())
        }
        Some(c) => {
            let s: String = c.s.iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!(
                "verify-shatter d={} k'={}: {} strings checked, FAIL",
                args.d, args.kprime, report.strings_checked
            );
            Err(CliError::AttackFailed(format!(
                "string {s} row {}: expected {}",
                c.row + 1,
                c.expected as u8
            ))
            .into())
        }
    }
}

/// `SKETCHLAB_THREADS` caps the worker pool.
fn init_pool() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("SKETCHLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => {
            return rejected(format!(
                "SKETCHLAB_THREADS must be a positive integer (got {raw:?})"
            ))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    init_pool()?;
    match &cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Sketch(a) => run_sketch(a),
        Command::Query(a) => run_query(a),
        Command::Shatter(a) => run_shatter(a),
        Command::VerifyShatter(a) => run_verify_shatter(a),
        Command::Attack(AttackCommand::Indicator(a)) | Command::AttackIndicator(a) => {
            attack::run_indicator(a)
        }
        Command::Attack(AttackCommand::Estimator(a)) | Command::AttackEstimator(a) => {
            attack::run_estimator(a)
        }
        Command::Bench(a) => bench::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
