//! Sketch sizes and empirical failure rates over a parameter grid.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::Args;
use serde::Serialize;
use sketchlab::rng::{derive_seed, random_database};
use sketchlab::sketch::{write_blob, SizeBreakdown, BLOB_HEADER_BYTES};
use sketchlab::validity::run_validity;
use sketchlab::{Algo, Builder, Semantics, SketchBuilder, SketchParams};

use crate::error::{rejected, CliError};
use crate::report::{open_output, parse_unit, Format};

fn parse_base_algo(s: &str) -> Result<Algo, String> {
    match s.parse()? {
        Algo::MedianBoost => {
            Err("bench covers release-db, release-answers and subsample only".into())
        }
        a => Ok(a),
    }
}

fn parse_semantics(s: &str) -> Result<Semantics, String> {
    s.parse()
}

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated values; every combination of the grid flags is one cell.
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_unit)]
    epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1", value_parser = parse_unit)]
    delta: Vec<f64>,
    /// Defaults to all four.
    #[arg(long, value_delimiter = ',', value_parser = parse_semantics)]
    semantics: Vec<Semantics>,
    #[arg(long, value_delimiter = ',', default_value = "release-db,release-answers,subsample", value_parser = parse_base_algo)]
    algos: Vec<Algo>,
    /// Sketches built per record to estimate the failure rate.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Entry density of the random database behind each cell.
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    density: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Record real wall time; otherwise the column is 0 so reports are reproducible.
    #[arg(long)]
    timings: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// One row of the report. Field order is the CSV column order.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub algo: &'static str,
    pub semantics: &'static str,
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
    pub seed: u64,
    pub cell_seed: u64,
    pub payload_bits: Option<u128>,
    pub theorem1_bits: Option<u128>,
    pub winner: Option<&'static str>,
    pub empirical_failure_rate: Option<f64>,
    pub failures: Option<u64>,
    pub trials: u64,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

struct Cell {
    payload_bits: u128,
    theorem1_bits: u128,
    winner: Algo,
    failures: u64,
}

/// Build one blob and check its length against the closed form and the
/// serialized file, then estimate the failure rate over `trials` seeds.
fn run_cell(
    db: &sketchlab::Database,
    params: &SketchParams,
    semantics: Semantics,
    algo: Algo,
    trials: u64,
    seed: u64,
) -> anyhow::Result<Cell> {
    let sizes = SizeBreakdown::of(semantics, params)?;
    let closed = sizes
        .bits_for(algo)
        .context("no closed form for this algorithm")?;
    let builder = Builder::for_algo(algo);
    let blob = builder.build(db, params, semantics, seed)?;
    if blob.size_bits() as u128 != closed {
        anyhow::bail!(
            "built {} payload bits, closed form gives {closed}",
            blob.size_bits()
        );
    }
    let mut bytes = Vec::new();
    write_blob(&blob, &mut bytes)?;
    let expected = BLOB_HEADER_BYTES as u128 + closed.div_ceil(8);
    if bytes.len() as u128 != expected {
        anyhow::bail!(
            "serialized blob has {} bytes, expected {expected}",
            bytes.len()
        );
    }
    let report = run_validity(db, params, semantics, &builder, trials as usize, seed)?;
    let failures = if semantics.is_for_all() {
        report.any_wrong as u64
    } else {
        report.wrong_per_itemset.iter().copied().max().unwrap_or(0) as u64
    };
    Ok(Cell {
        payload_bits: closed,
        theorem1_bits: sizes.bound().bits(),
        winner: sizes.winner(),
        failures,
    })
}

pub fn bench_table(args: &BenchArgs) -> Vec<BenchRecord> {
    let semantics = if args.semantics.is_empty() {
        Semantics::ALL.to_vec()
    } else {
        args.semantics.clone()
    };
    let mut records = Vec::new();
    let mut cell_index = 0u64;
    for &d in &args.d {
        for &k in &args.k {
            for &epsilon in &args.epsilon {
                for &delta in &args.delta {
                    for &n in &args.n {
                        let cell_seed = derive_seed(args.seed, cell_index);
                        cell_index += 1;
                        let params = SketchParams::new(k, epsilon, delta, n, d);
                        let db = params
                            .as_ref()
                            .ok()
                            .map(|_| random_database(n as usize, d, args.density, cell_seed));
                        for &sem in &semantics {
                            for &algo in &args.algos {
                                let start = Instant::now();
                                let result = match (&params, &db) {
                                    (Ok(p), Some(db)) => {
                                        run_cell(db, p, sem, algo, args.trials, cell_seed)
                                    }
                                    (Err(e), _) => Err(anyhow::anyhow!("{e}")),
                                    _ => unreachable!("database exists whenever params are valid"),
                                };
                                let wall_time_ms = if args.timings {
                                    start.elapsed().as_secs_f64() * 1e3
                                } else {
                                    0.0
                                };
                                let mut rec = BenchRecord {
                                    algo: algo.name(),
                                    semantics: sem.name(),
                                    d,
                                    k,
                                    epsilon,
                                    delta,
                                    n,
                                    seed: args.seed,
                                    cell_seed,
                                    payload_bits: None,
                                    theorem1_bits: None,
                                    winner: None,
                                    empirical_failure_rate: None,
                                    failures: None,
                                    trials: args.trials,
                                    wall_time_ms,
                                    error: None,
                                };
                                match result {
                                    Ok(c) => {
                                        rec.payload_bits = Some(c.payload_bits);
                                        rec.theorem1_bits = Some(c.theorem1_bits);
                                        rec.winner = Some(c.winner.name());
                                        rec.failures = Some(c.failures);
                                        rec.empirical_failure_rate =
                                            Some(c.failures as f64 / args.trials as f64);
                                    }
                                    Err(e) => rec.error = Some(format!("{e:#}")),
                                }
                                records.push(rec);
                            }
                        }
                    }
                }
            }
        }
    }
    records
}

pub fn run(args: &BenchArgs) -> anyhow::Result<()> {
    let records = bench_table(args);
    if records.is_empty() {
        return rejected("empty grid");
    }
    let mut w = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            for r in &records {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &records)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    if records.iter().all(|r| r.error.is_some()) {
        return Err(CliError::Rejected(format!(
            "every cell failed; first error: {}",
            records[0].error.as_deref().unwrap_or_default()
        ))
        .into());
    }
    Ok(())
}
