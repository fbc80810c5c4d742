//! `attack indicator` and `attack estimator`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sketchlab::attack::AttackError;
use sketchlab::ecc::Codec;
use sketchlab::estimator_attack::{attack_theorem5, DecoderConfig, EstimatorPlan, DEFAULT_Q};
use sketchlab::exact_fraction;
use sketchlab::indicator_attack::amplify::blocks_for_epsilon;
use sketchlab::indicator_attack::{
    attack_amplified, attack_theorem4, attack_unique_rows, theorem4_codec, EPSILON_INNER,
};
use sketchlab::rng::{derive_seed, random_bits, stream_rng};
use sketchlab::{Algo, Builder};

use crate::error::{rejected, CliError};
use crate::report::{emit_json, parse_unit};

/// Largest message the unique-rows mode will generate.
const MAX_MESSAGE_BITS: usize = 1 << 24;

fn parse_sketch(s: &str) -> Result<Algo, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One base row per `(k-1)`-subset; message bits read off by threshold queries.
    UniqueRows,
    /// Shattered rows beside an error-corrected payload, queried at epsilon = 1/50.
    InnerProduct,
    /// Several inner-product instances stacked into one database at a smaller epsilon.
    Amplified,
}

#[derive(Args)]
pub struct IndicatorArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    /// Required except in inner-product mode, which always runs at 1/50.
    #[arg(long, value_parser = parse_unit)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.1, value_parser = parse_unit)]
    delta: f64,
    /// exact, answers, subsample or median-boost.
    #[arg(long, default_value = "exact", value_parser = parse_sketch)]
    sketch: Algo,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Database rows in unique-rows mode; defaults to 1/epsilon.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::UniqueRows)]
    mode: Mode,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EstimatorArgs {
    /// Rows of each random factor.
    #[arg(long)]
    d0: usize,
    /// Columns of each factor, i.e. database rows per block.
    #[arg(long)]
    n: usize,
    /// Number of column groups; the attacked dimension is c * d0.
    #[arg(long)]
    c: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = parse_unit)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_unit)]
    delta: f64,
    #[arg(long, default_value = "exact", value_parser = parse_sketch)]
    sketch: Algo,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Depth of the iterated logarithm in the decoding threshold.
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct TrialFailure {
    trial: u64,
    seed: u64,
    error: String,
}

/// Runs every trial in parallel and returns them in trial order. A rejection
/// aborts the command; any other error counts as a failed trial.
fn run_trials<T, F>(
    root: u64,
    trials: u64,
    f: F,
) -> anyhow::Result<Vec<(u64, Result<T, AttackError>)>>
where
    T: Send,
    F: Fn(u64) -> Result<T, AttackError> + Sync,
{
    let results: Vec<(u64, Result<T, AttackError>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root, i);
            (seed, f(seed))
        })
        .collect();
    if let Some((_, Err(e))) = results
        .iter()
        .find(|(_, r)| matches!(r, Err(e) if e.is_rejection()))
    {
        return Err(CliError::Rejected(e.to_string()).into());
    }
    Ok(results)
}

fn check_success(successes: u64, trials: u64, delta: f64) -> anyhow::Result<()> {
    let rate = successes as f64 / trials as f64;
    if rate < 1.0 - delta {
        return Err(CliError::AttackFailed(format!(
            "exact recovery in {successes}/{trials} trials, below 1 - delta = {}",
            1.0 - delta
        ))
        .into());
    }
    Ok(())
}

type TrialFn = Box<dyn Fn(u64) -> Result<IndicatorTrial, AttackError> + Sync>;

struct IndicatorTrial {
    message_bits: usize,
    sketch_bits: u64,
    recovered_frac: f64,
    exact: bool,
}

#[derive(Debug, Serialize)]
struct IndicatorReport {
    command: &'static str,
    mode: Mode,
    d: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    n: Option<usize>,
    sketch: &'static str,
    seed: u64,
    trials: u64,
    message_bits: usize,
    sketch_bits: u64,
    recovered_frac: f64,
    exact_success_rate: f64,
    failures: Vec<TrialFailure>,
}

/// `1/ε` when it is a positive integer.
fn inverse_epsilon(eps: f64) -> anyhow::Result<usize> {
    let r = exact_fraction(eps);
    if *r.numer() != 1 {
        return rejected(format!(
            "1/epsilon must be a positive integer (epsilon = {eps})"
        ));
    }
    Ok(*r.denom() as usize)
}

pub fn run_indicator(args: &IndicatorArgs) -> anyhow::Result<()> {
    let builder = Builder::for_algo(args.sketch);
    let (d, k, delta) = (args.d, args.k, args.delta);
    let (epsilon, n, trial): (f64, Option<usize>, TrialFn) = match args.mode {
        Mode::UniqueRows => {
            let Some(eps) = args.epsilon else {
                return rejected("--epsilon is required in unique-rows mode");
            };
            let inv = inverse_epsilon(eps)?;
            let n = args.n.unwrap_or(inv);
            if (d / 2).saturating_mul(inv) > MAX_MESSAGE_BITS {
                return rejected(format!(
                    "(d/2)(1/epsilon) exceeds {MAX_MESSAGE_BITS} message bits"
                ));
            }
            let f = move |seed: u64| {
                let msg = random_bits(d / 2 * inv, &mut stream_rng(seed, 0));
                let out = attack_unique_rows(&msg, d, k, inv, n, delta, &builder, seed)?;
                Ok(IndicatorTrial {
                    message_bits: msg.len(),
                    sketch_bits: out.sketch_bits,
                    recovered_frac: out.recovered_frac(),
                    exact: out.exact(),
                })
            };
            (eps, Some(n), Box::new(f))
        }
        Mode::InnerProduct => {
            if let Some(eps) = args.epsilon {
                if (eps - EPSILON_INNER).abs() > 1e-12 {
                    return rejected(format!(
                        "inner-product mode runs at epsilon = 1/50, not {eps}"
                    ));
                }
            }
            let codec = theorem4_codec(d, k)?;
            let f = move |seed: u64| {
                let msg = random_bits(codec.message_len(), &mut stream_rng(seed, 0));
                let out = attack_theorem4(&msg, d, k, delta, &builder, &codec, seed)?;
                Ok(IndicatorTrial {
                    message_bits: msg.len(),
                    sketch_bits: out.sketch_bits,
                    recovered_frac: out.recovered_frac(),
                    exact: out.exact(),
                })
            };
            (EPSILON_INNER, None, Box::new(f))
        }
        Mode::Amplified => {
            let Some(eps) = args.epsilon else {
                return rejected("--epsilon is required in amplified mode");
            };
            let blocks = blocks_for_epsilon(eps)?;
            if k < 3 || k % 2 == 0 {
                return rejected(format!("amplification needs odd k >= 3 (got {k})"));
            }
            let cap = theorem4_codec(d, k.div_ceil(2))?.message_len();
            let f = move |seed: u64| {
                let mut rng = stream_rng(seed, 0);
                let msgs: Vec<Vec<bool>> =
                    (0..blocks).map(|_| random_bits(cap, &mut rng)).collect();
                let out = attack_amplified(&msgs, d, k, eps, delta, &builder, seed)?;
                let frac =
                    out.blocks.iter().map(|b| b.recovered_frac()).sum::<f64>() / blocks as f64;
                Ok(IndicatorTrial {
                    message_bits: blocks * cap,
                    sketch_bits: out.sketch_bits,
                    recovered_frac: frac,
                    exact: out.exact(),
                })
            };
            (eps, None, Box::new(f))
        }
    };

    let results = run_trials(args.seed, args.trials, trial)?;
    let mut report = IndicatorReport {
        command: "attack-indicator",
        mode: args.mode,
        d,
        k,
        epsilon,
        delta,
        n,
        sketch: args.sketch.name(),
        seed: args.seed,
        trials: args.trials,
        message_bits: 0,
        sketch_bits: 0,
        recovered_frac: 0.0,
        exact_success_rate: 0.0,
        failures: Vec::new(),
    };
    let mut successes = 0;
    for (i, (seed, r)) in results.into_iter().enumerate() {
        match r {
            Ok(t) => {
                report.message_bits = report.message_bits.max(t.message_bits);
                report.sketch_bits = report.sketch_bits.max(t.sketch_bits);
                report.recovered_frac += t.recovered_frac;
                successes += t.exact as u64;
            }
            Err(e) => report.failures.push(TrialFailure {
                trial: i as u64,
                seed,
                error: e.to_string(),
            }),
        }
    }
    report.recovered_frac /= args.trials as f64;
    report.exact_success_rate = successes as f64 / args.trials as f64;
    emit_json(&report, args.output.as_ref())?;
    check_success(successes, args.trials, delta)
}

#[derive(Debug, Serialize)]
struct EstimatorReport {
    command: &'static str,
    d0: usize,
    n: usize,
    c: usize,
    k: usize,
    d: usize,
    epsilon: f64,
    delta: f64,
    q: usize,
    sketch: &'static str,
    seed: u64,
    trials: u64,
    v: usize,
    block_bits: usize,
    message_bits: usize,
    sketch_bits: u64,
    /// Worst case over trials; `null` when the decoding matrix is wider than tall.
    sigma_min: Option<f64>,
    section_ratio: Option<f64>,
    /// Summed over trials, out of `blocks_total`.
    blocks_recovered: usize,
    blocks_total: usize,
    good_blocks: usize,
    raw_bit_errors: usize,
    message_exact: bool,
    exact_success_rate: f64,
    failures: Vec<TrialFailure>,
}

fn min_opt(acc: Option<Option<f64>>, x: Option<f64>) -> Option<Option<f64>> {
    Some(match (acc, x) {
        (None, x) => x,
        (Some(Some(a)), Some(b)) => Some(a.min(b)),
        _ => None,
    })
}

pub fn run_estimator(args: &EstimatorArgs) -> anyhow::Result<()> {
    let builder = Builder::for_algo(args.sketch);
    let config = DecoderConfig::for_n(args.n, args.q);
    config.validate()?;
    let shape = EstimatorPlan::new(args.d0, args.n, args.c, args.k, args.seed)?;

    let results = run_trials(args.seed, args.trials, |seed| {
        let plan = EstimatorPlan::new(args.d0, args.n, args.c, args.k, seed)?;
        let msg = random_bits(plan.message_len(), &mut stream_rng(seed, 1));
        attack_theorem5(
            &msg,
            &plan,
            args.epsilon,
            args.delta,
            &builder,
            &config,
            seed,
        )
    })?;

    let mut report = EstimatorReport {
        command: "attack-estimator",
        d0: args.d0,
        n: args.n,
        c: args.c,
        k: args.k,
        d: shape.d(),
        epsilon: args.epsilon,
        delta: args.delta,
        q: args.q,
        sketch: args.sketch.name(),
        seed: args.seed,
        trials: args.trials,
        v: shape.v(),
        block_bits: shape.block_bits(),
        message_bits: shape.message_len(),
        sketch_bits: 0,
        sigma_min: None,
        section_ratio: None,
        blocks_recovered: 0,
        blocks_total: shape.v() * args.trials as usize,
        good_blocks: 0,
        raw_bit_errors: 0,
        message_exact: false,
        exact_success_rate: 0.0,
        failures: Vec::new(),
    };
    let (mut sigma, mut ratio) = (None, None);
    let mut successes = 0;
    for (i, (seed, r)) in results.into_iter().enumerate() {
        match r {
            Ok(out) => {
                report.sketch_bits = report.sketch_bits.max(out.sketch_bits);
                sigma = min_opt(sigma, out.spectral.as_ref().map(|s| s.sigma_min));
                ratio = min_opt(ratio, out.spectral.as_ref().map(|s| s.section_ratio));
                report.blocks_recovered += out.blocks_recovered;
                report.good_blocks += out.good_blocks;
                report.raw_bit_errors += out.raw_bit_errors;
                successes += out.exact() as u64;
            }
            Err(e) => report.failures.push(TrialFailure {
                trial: i as u64,
                seed,
                error: e.to_string(),
            }),
        }
    }
    report.sigma_min = sigma.flatten();
    report.section_ratio = ratio.flatten();
    report.message_exact = successes == args.trials;
    report.exact_success_rate = successes as f64 / args.trials as f64;
    emit_json(&report, args.output.as_ref())?;
    check_success(successes, args.trials, args.delta)
}
