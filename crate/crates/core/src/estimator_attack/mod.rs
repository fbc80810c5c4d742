//! Encoders and decoders showing that estimator sketches must store a lot.
//!
//! Each of `v` blocks is a database `D_i` with `n` rows and `d = c d0` columns:
//! `c - 1` transposed random factor matrices followed by `d0` payload columns
//! ([`generators`]). Row `(i, j)` of the big database is `(x_i, D_i(j))`, with
//! `x_1..x_v` shattered by `(k-c)`-itemsets, so for every `c`-itemset `T`
//!
//! `f(T_s ∪ (T + d)) = <s, z_T> / v`,  `z_T = (f_T(D_1), ..., f_T(D_v))`.
//!
//! Estimates of those `2^v` frequencies give `ẑ_T` ([`zhat`]). For the
//! "special" `T` pairing one row of every factor with payload column `p`,
//! `n z_{T,i}` is an entry of `A y_i^{(p)}`, `A` the Hadamard product of the
//! factors, and exhaustive L1 decoding ([`decode`]) reads the payload back.

pub mod decode;
pub mod generators;
pub mod hadamard;
pub mod zhat;

use rayon::prelude::*;

use crate::attack::{hamming_distance, invalid, AttackError, Result};
use crate::bits::BitMatrix;
use crate::database::{ColumnIndex, Database, Itemset};
use crate::ecc::{Codec, SyndromeCodec};
use crate::shatter::{build_family, ShatteredFamily};
use crate::sketch::{Semantics, Sketch, SketchBuilder, SketchParams};

pub use decode::{bruteforce_decode, decodable_support, min_codeword_gap, BruteforceOutcome};
pub use generators::{build_d0, build_d1, build_d2, special_itemset, SupportCodec};
pub use hadamard::{
    default_probes, gen_random_factors, hadamard_product, spectral_report, HadamardStack,
    SpectralReport,
};
pub use zhat::{exact_answers, max_violation, zhat_recover};

/// Desk-scale limits for [`EstimatorPlan`].
pub const MAX_V: usize = 8;
pub const MAX_N: usize = 16;
pub const MAX_D0: usize = 4;

/// Fraction of blocks the averaging argument promises are good.
pub const MARKOV_BLOCK_FRACTION: f64 = 0.96;
/// A block is good when its average `|ẑ - z|` over the queried itemsets is at most this times `ε`.
pub const MARKOV_ERROR_FACTOR: f64 = 100.0;

pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_Q: usize = 1;

/// `log2` applied `q` times, returning 1 once the argument drops to 2 or below.
pub fn iterated_log2(x: f64, q: usize) -> f64 {
    let mut y = x;
    for _ in 0..q {
        if y <= 2.0 {
            return 1.0;
        }
        y = y.log2();
    }
    y.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Per-entry count tolerance.
    pub zeta1: f64,
    pub q: usize,
    /// Acceptable fraction of queries outside `zeta1`.
    pub gamma: f64,
}

impl DecoderConfig {
    /// `ζ₁ = √n / log_(q+1)(n)` and `γ = 0.01`.
    pub fn for_n(n: usize, q: usize) -> Self {
        DecoderConfig {
            zeta1: (n as f64).sqrt() / iterated_log2(n as f64, q + 1),
            q,
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta1 > 0.0 && self.zeta1.is_finite()) {
            return invalid(format!("zeta1 must be positive (got {})", self.zeta1));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return invalid(format!("gamma must lie in (0, 1) (got {})", self.gamma));
        }
        Ok(())
    }
}

/// Everything fixed before a message is chosen: factors, decodable support, codes, shattered family.
#[derive(Debug, Clone)]
pub struct EstimatorPlan {
    pub d0: usize,
    pub n: usize,
    pub c: usize,
    pub k: usize,
    pub stack: HadamardStack,
    /// Columns of `A` that carry payload; `A` restricted to them is injective on `{0,1}^H`.
    pub support: Vec<usize>,
    pub inner: SupportCodec,
    pub family: ShatteredFamily,
    pub outer: SyndromeCodec,
}

impl EstimatorPlan {
    pub fn new(d0: usize, n: usize, c: usize, k: usize, seed: u64) -> Result<Self> {
        if c < 2 || k < c + 1 {
            return invalid(format!("need c >= 2 and k >= c + 1 (got c = {c}, k = {k})"));
        }
        if d0 == 0 || d0 > MAX_D0 || n == 0 || n > MAX_N {
            return invalid(format!(
                "need 1 <= d0 <= {MAX_D0} and 1 <= n <= {MAX_N} (got d0 = {d0}, n = {n})"
            ));
        }
        let d = c * d0;
        let family = build_family(d, k - c)?;
        let v = family.v();
        if v > MAX_V {
            return invalid(format!("v = {v} exceeds {MAX_V}"));
        }
        let stack = hadamard_product(&gen_random_factors(c - 1, d0, n, seed))?;
        let support = decodable_support(stack.product());
        if support.is_empty() {
            return invalid("the factor product has no decodable column; try another seed");
        }
        let inner = SupportCodec::new(n, d0, support.clone())?;
        let outer = SyndromeCodec::new(v * inner.message_len())?;
        Ok(EstimatorPlan {
            d0,
            n,
            c,
            k,
            stack,
            support,
            inner,
            family,
            outer,
        })
    }

    pub fn d(&self) -> usize {
        self.c * self.d0
    }

    pub fn v(&self) -> usize {
        self.family.v()
    }

    /// Payload bits per block.
    pub fn block_bits(&self) -> usize {
        self.inner.message_len()
    }

    pub fn message_len(&self) -> usize {
        self.outer.message_len()
    }

    /// `A` restricted to the payload columns.
    pub fn decoding_matrix(&self) -> BitMatrix {
        self.stack.restrict(&self.support)
    }

    /// Special `c`-itemsets over `[d]`, as `(product row, payload column)`.
    pub fn special_queries(&self) -> Vec<(usize, usize)> {
        (0..self.d0)
            .flat_map(|p| (0..self.stack.rows()).map(move |r| (r, p)))
            .collect()
    }

    pub fn special(&self, row: usize, p: usize) -> Result<Itemset> {
        special_itemset(&self.stack.tuple(row), p, self.d0, self.d())
    }

    /// `T'(T, s) = T_s ∪ (T + d)` over `2d` attributes, `s_i` = bit `i` of `mask`.
    pub fn lifted(&self, t: &Itemset, mask: usize) -> Result<Itemset> {
        let d = self.d();
        let s: Vec<bool> = (0..self.v()).map(|i| mask >> i & 1 == 1).collect();
        let mut attrs = self.family.attrs_for_string(&s)?;
        attrs.extend(t.indices().into_iter().map(|a| a + d));
        Ok(Itemset::from_indices(2 * d, attrs)?)
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorInstance {
    /// Per block, `block_bits` payload bits.
    pub payloads: Vec<Vec<bool>>,
    /// `D_1..D_v`, each `n x d`.
    pub blocks: Vec<Database>,
    /// `(v n) x 2d`; row `i n + j` is `(x_i, D_i(j))`.
    pub db: Database,
}

/// Split an outer codeword into `v` payloads and build the stacked database.
pub fn encode_payloads(plan: &EstimatorPlan, payloads: &[Vec<bool>]) -> Result<EstimatorInstance> {
    let v = plan.v();
    if payloads.len() != v || payloads.iter().any(|p| p.len() != plan.block_bits()) {
        return invalid(format!("need {v} payloads of {} bits", plan.block_bits()));
    }
    let blocks = payloads
        .iter()
        .map(|p| build_d2(plan.stack.factors(), p, &plan.inner))
        .collect::<Result<Vec<_>>>()?;
    let x = plan.family.vectors();
    let parts: Vec<BitMatrix> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let tag = BitMatrix::from_rows(&vec![x.row_bools(i); plan.n], plan.d());
            tag.hconcat(b.matrix())
        })
        .collect();
    let refs: Vec<&BitMatrix> = parts.iter().collect();
    Ok(EstimatorInstance {
        payloads: payloads.to_vec(),
        blocks,
        db: Database::from_matrix(BitMatrix::vconcat(&refs))?,
    })
}

/// Pad `message` to the outer code's capacity, encode, and build the database.
pub fn encode_theorem5(plan: &EstimatorPlan, message: &[bool]) -> Result<EstimatorInstance> {
    let cap = plan.message_len();
    if message.len() > cap {
        return invalid(format!(
            "message has {} bits, capacity is {cap}",
            message.len()
        ));
    }
    let mut padded = message.to_vec();
    padded.resize(cap, false);
    let word = plan.outer.encode(&padded)?;
    let payloads: Vec<Vec<bool>> = word
        .chunks(plan.block_bits())
        .map(<[bool]>::to_vec)
        .collect();
    encode_payloads(plan, &payloads)
}

/// `ẑ_T` for one itemset, from the oracle's `2^v` answers.
#[derive(Debug, Clone)]
pub struct ZEstimate {
    pub row: usize,
    pub column: usize,
    pub zhat: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PayloadsDecode {
    pub estimates: Vec<ZEstimate>,
    /// Per block, the decoded payload bits.
    pub payloads: Vec<Vec<bool>>,
    /// Per block, whether every special count landed within `ζ₁` of its codeword.
    pub within_zeta: Vec<bool>,
}

/// Query every lifted special itemset, recover `ẑ`, and brute-force each block.
pub fn decode_payloads<F>(
    plan: &EstimatorPlan,
    epsilon: f64,
    config: &DecoderConfig,
    mut oracle: F,
) -> Result<PayloadsDecode>
where
    F: FnMut(&Itemset) -> Result<f64>,
{
    config.validate()?;
    let v = plan.v();
    let mut estimates = Vec::new();
    for (row, column) in plan.special_queries() {
        let t = plan.special(row, column)?;
        let answers = (0..1usize << v)
            .map(|mask| oracle(&plan.lifted(&t, mask)?))
            .collect::<Result<Vec<f64>>>()?;
        let zhat = zhat_recover(&answers, v, epsilon).map_err(|e| match e {
            AttackError::Inconsistent(m) => {
                AttackError::Inconsistent(format!("zhat stage, itemset {:?}: {m}", t.indices()))
            }
            other => other,
        })?;
        estimates.push(ZEstimate { row, column, zhat });
    }
    let a = plan.decoding_matrix();
    let rows = plan.stack.rows();
    let mut payloads = Vec::with_capacity(v);
    let mut within_zeta = Vec::with_capacity(v);
    for i in 0..v {
        let mut bits = Vec::with_capacity(plan.block_bits());
        let mut ok = true;
        for p in 0..plan.d0 {
            let counts: Vec<f64> = estimates[p * rows..(p + 1) * rows]
                .iter()
                .map(|e| plan.n as f64 * e.zhat[i])
                .collect();
            let out = bruteforce_decode(&a, &counts, config.zeta1).map_err(|e| {
                AttackError::Decode(format!("bruteforce stage, block {i}, column {p}: {e}"))
            })?;
            ok &= out.within_zeta;
            bits.extend(out.bits);
        }
        payloads.push(bits);
        within_zeta.push(ok);
    }
    Ok(PayloadsDecode {
        estimates,
        payloads,
        within_zeta,
    })
}

#[derive(Debug, Clone)]
pub struct EstimatorOutcome {
    pub message: Vec<bool>,
    pub recovered: Option<Vec<bool>>,
    pub failure: Option<String>,
    pub v: usize,
    pub block_bits: usize,
    /// `None` when the decoding matrix has fewer rows than columns.
    pub spectral: Option<SpectralReport>,
    pub blocks_recovered: usize,
    /// Blocks whose average `|ẑ - z|` is at most `100 ε`.
    pub good_blocks: usize,
    /// Fraction of special queries per block with `n |ẑ - z| > ζ₁`.
    pub bad_query_fraction: Vec<f64>,
    pub raw_bit_errors: usize,
    pub sketch_bits: u64,
}

impl EstimatorOutcome {
    pub fn exact(&self) -> bool {
        self.recovered.as_deref() == Some(self.message.as_slice())
    }

    /// Whether at least 96% of blocks met the averaging bound.
    pub fn markov_holds(&self) -> bool {
        self.good_blocks as f64 >= MARKOV_BLOCK_FRACTION * self.v as f64
    }
}

/// Spectral report of the decoding matrix, `None` when it is wider than tall.
pub fn plan_spectrum(plan: &EstimatorPlan, probe_seed: u64) -> Option<SpectralReport> {
    let a = plan.decoding_matrix();
    spectral_report(&a, &default_probes(a.cols(), 32, probe_seed)).ok()
}

/// Encode, sketch at `ε` with for-all estimator semantics, decode, and report.
#[allow(clippy::too_many_arguments)]
pub fn attack_theorem5(
    message: &[bool],
    plan: &EstimatorPlan,
    epsilon: f64,
    delta: f64,
    builder: &dyn SketchBuilder,
    config: &DecoderConfig,
    seed: u64,
) -> Result<EstimatorOutcome> {
    let inst = encode_theorem5(plan, message)?;
    let params = SketchParams::new(plan.k, epsilon, delta, inst.db.n() as u64, 2 * plan.d())?;
    let blob = builder.build(&inst.db, &params, Semantics::ForAllEstimator, seed)?;
    let sketch = Sketch::from_blob(&blob)?;
    let decoded = decode_payloads(plan, epsilon, config, |t| Ok(sketch.estimate(t)?))?;

    let v = plan.v();
    let indexes: Vec<ColumnIndex> = inst.blocks.iter().map(ColumnIndex::new).collect();
    let queries = decoded.estimates.len().max(1) as f64;
    let mut good_blocks = 0;
    let mut bad_query_fraction = Vec::with_capacity(v);
    for (i, index) in indexes.iter().enumerate() {
        let errs = decoded
            .estimates
            .par_iter()
            .map(|e| {
                let t = plan.special(e.row, e.column)?;
                Ok((index.frequency(&t)?.to_f64() - e.zhat[i]).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        if errs.iter().sum::<f64>() / queries <= MARKOV_ERROR_FACTOR * epsilon {
            good_blocks += 1;
        }
        let bad = errs
            .iter()
            .filter(|&&e| plan.n as f64 * e > config.zeta1)
            .count();
        bad_query_fraction.push(bad as f64 / queries);
    }

    let blocks_recovered = decoded
        .payloads
        .iter()
        .zip(&inst.payloads)
        .filter(|(a, b)| a == b)
        .count();
    let word: Vec<bool> = decoded.payloads.concat();
    let sent: Vec<bool> = inst.payloads.concat();
    let (recovered, failure) = match plan.outer.decode(&word) {
        Ok(m) if m[message.len()..].iter().any(|&b| b) => (
            Some(m[..message.len()].to_vec()),
            Some("nonzero padding after decoding".to_string()),
        ),
        Ok(m) => (Some(m[..message.len()].to_vec()), None),
        Err(e) => (None, Some(format!("outer code: {e}"))),
    };
    Ok(EstimatorOutcome {
        message: message.to_vec(),
        recovered,
        failure,
        v,
        block_bits: plan.block_bits(),
        spectral: plan_spectrum(plan, seed),
        blocks_recovered,
        good_blocks,
        bad_query_fraction,
        raw_bit_errors: hamming_distance(&word, &sent),
        sketch_bits: blob.size_bits(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::exact_estimator;
    use crate::combinatorics::KSubsets;
    use crate::rng::{random_bits, stream_rng};
    use crate::sketch::Builder;

    fn small_plan(seed: u64) -> EstimatorPlan {
        EstimatorPlan::new(2, 8, 2, 3, seed).unwrap()
    }

    #[test]
    fn iterated_log_floor() {
        assert_eq!(iterated_log2(16.0, 1), 4.0);
        assert_eq!(iterated_log2(16.0, 2), 2.0);
        assert_eq!(iterated_log2(16.0, 3), 1.0);
        assert_eq!(iterated_log2(1.5, 1), 1.0);
        let c = DecoderConfig::for_n(16, 1);
        assert_eq!(c.zeta1, 2.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn plan_shape() {
        let p = small_plan(0);
        assert_eq!((p.d(), p.v()), (4, 2));
        assert_eq!(p.stack.rows(), 2);
        assert_eq!(p.special_queries().len(), 4);
        assert!(min_codeword_gap(&p.decoding_matrix()).unwrap() > 0);
    }

    #[test]
    fn rows_are_tag_then_block() {
        let p = small_plan(1);
        let mut rng = stream_rng(1, 0);
        let inst = encode_theorem5(&p, &random_bits(p.message_len(), &mut rng)).unwrap();
        let x = p.family.vectors();
        for i in 0..p.v() {
            for j in 0..p.n {
                for c in 0..p.d() {
                    assert_eq!(inst.db.get(i * p.n + j, c), x.get(i, c));
                    assert_eq!(
                        inst.db.get(i * p.n + j, p.d() + c),
                        inst.blocks[i].get(j, c)
                    );
                }
            }
        }
    }

    #[test]
    fn frequency_identity_exhaustive() {
        let p = small_plan(2);
        let mut rng = stream_rng(2, 0);
        let inst = encode_theorem5(&p, &random_bits(p.message_len(), &mut rng)).unwrap();
        let v = p.v();
        for attrs in KSubsets::new(p.d(), p.c) {
            let t = Itemset::from_indices(p.d(), attrs).unwrap();
            let z: Vec<u64> = inst.blocks.iter().map(|b| b.support(&t).unwrap()).collect();
            for mask in 0..1usize << v {
                let ip: u64 = (0..v).filter(|&i| mask >> i & 1 == 1).map(|i| z[i]).sum();
                let f = inst.db.frequency(&p.lifted(&t, mask).unwrap()).unwrap();
                // <s, z>/v with z_i = support_i / n
                assert_eq!((f.count, f.total), (ip, (v * p.n) as u64));
            }
        }
    }

    #[test]
    fn exact_oracle_round_trip() {
        let mut rng = stream_rng(3, 0);
        for seed in 0..5 {
            let p = small_plan(seed);
            let cfg = DecoderConfig::for_n(p.n, DEFAULT_Q);
            let msg = random_bits(p.message_len(), &mut rng);
            let inst = encode_theorem5(&p, &msg).unwrap();
            let dec = decode_payloads(&p, 0.0, &cfg, exact_estimator(&inst.db)).unwrap();
            assert_eq!(dec.payloads, inst.payloads);
            assert!(dec.within_zeta.iter().all(|&b| b));
        }
    }

    #[test]
    fn release_db_pipeline() {
        let p = small_plan(4);
        let cfg = DecoderConfig::for_n(p.n, DEFAULT_Q);
        let mut rng = stream_rng(4, 0);
        let msg = random_bits(p.message_len(), &mut rng);
        let out = attack_theorem5(&msg, &p, 0.01, 0.1, &Builder::ReleaseDb, &cfg, 0).unwrap();
        assert!(out.exact(), "{:?}", out.failure);
        assert_eq!(out.blocks_recovered, 2);
        assert!(out.markov_holds());
        assert_eq!(out.sketch_bits, 16 * 8);
    }

    #[test]
    fn single_block() {
        let p = EstimatorPlan::new(1, 4, 2, 3, 0).unwrap();
        assert_eq!(p.v(), 1);
        let cfg = DecoderConfig::for_n(p.n, DEFAULT_Q);
        let msg = vec![true; p.message_len()];
        let out = attack_theorem5(&msg, &p, 0.01, 0.1, &Builder::ReleaseDb, &cfg, 0).unwrap();
        assert!(out.exact());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(EstimatorPlan::new(2, 8, 1, 3, 0).is_err());
        assert!(EstimatorPlan::new(2, 8, 2, 2, 0).is_err());
        assert!(EstimatorPlan::new(5, 8, 2, 3, 0).is_err());
        assert!(EstimatorPlan::new(2, 17, 2, 3, 0).is_err());
    }
}
