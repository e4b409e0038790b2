//! Right-hand sides of the classical pointwise Weyl-sum bounds and a scanner
//! measuring `max_x |Σ_{n≤N} e(a n^d / q + x n)| / q^{1/d}` over prime `q`.
//!
//! `ε` and the constant `C` are always inputs; reported ratios are raw.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exp_sum::{
    eval_kernel, max_modulus_over_x, KernelParams, MaxSearch, RationalPhase, TorusPoint,
};
use crate::rational::{for_each_prime, is_prime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `C N^{1+ε} (1/q + q/N^d)^{1/d}`
    Conjectured,
    /// `C N^{1+ε} (1/q + 1/N + q/N^d)^{1/2^{d-1}}`
    Weyl,
    /// `C N^{1+ε} (1/q + ln q/N + q ln q/N^d)^{1/(d(d-1))}`
    Vinogradov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFormula {
    pub kind: BoundKind,
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub q: u64,
    pub epsilon: f64,
    pub constant: f64,
}

impl BoundFormula {
    pub fn exponent(kind: BoundKind, d: u32) -> f64 {
        match kind {
            BoundKind::Conjectured => 1.0 / d as f64,
            BoundKind::Weyl => 1.0 / 2f64.powi(d as i32 - 1),
            BoundKind::Vinogradov => 1.0 / (d as f64 * (d as f64 - 1.0)),
        }
    }

    pub fn evaluate(&self) -> Result<f64> {
        if self.d < 2 {
            return invalid(format!("degree must be at least 2, got {}", self.d));
        }
        if self.n < 1 || self.q < 1 {
            return invalid("N and q must be positive");
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return invalid("epsilon must be finite and nonnegative");
        }
        if !(self.constant.is_finite() && self.constant > 0.0) {
            return invalid("constant must be finite and positive");
        }
        let n = self.n as f64;
        let q = self.q as f64;
        let nd = n.powi(self.d as i32);
        let radicand = match self.kind {
            BoundKind::Conjectured => 1.0 / q + q / nd,
            BoundKind::Weyl => 1.0 / q + 1.0 / n + q / nd,
            BoundKind::Vinogradov => {
                if self.q < 2 {
                    return invalid("the Vinogradov-type bound needs q >= 2 (ln q > 0)");
                }
                let lq = q.ln();
                1.0 / q + lq / n + q * lq / nd
            }
        };
        Ok(self.constant
            * n.powf(1.0 + self.epsilon)
            * radicand.powf(Self::exponent(self.kind, self.d)))
    }
}

fn bound(kind: BoundKind, d: u32, n: u64, q: u64, epsilon: f64, constant: f64) -> Result<f64> {
    BoundFormula {
        kind,
        d,
        n,
        q,
        epsilon,
        constant,
    }
    .evaluate()
}

pub fn rhs_conjectured(d: u32, n: u64, q: u64, epsilon: f64, constant: f64) -> Result<f64> {
    bound(BoundKind::Conjectured, d, n, q, epsilon, constant)
}

pub fn rhs_weyl(d: u32, n: u64, q: u64, epsilon: f64, constant: f64) -> Result<f64> {
    bound(BoundKind::Weyl, d, n, q, epsilon, constant)
}

pub fn rhs_vinogradov(d: u32, n: u64, q: u64, epsilon: f64, constant: f64) -> Result<f64> {
    bound(BoundKind::Vinogradov, d, n, q, epsilon, constant)
}

/// One scanned pair `(q, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub q: u64,
    pub a: u64,
    pub max_modulus: f64,
    pub ratio: f64,
    pub x_star: TorusPoint,
    /// Whether `N^{d/2} ≤ q ≤ N^d`.
    pub in_window: bool,
}

/// The prime window `[⌈N^{d/2}⌉, N^d]`.
pub fn conjecture_window(params: KernelParams) -> (u64, u64) {
    let top = params.top_frequency();
    let hi = top.min(u64::MAX as u128) as u64;
    let mut lo = (top as f64).sqrt() as u128;
    while lo * lo < top {
        lo += 1;
    }
    while lo > 0 && (lo - 1) * (lo - 1) >= top {
        lo -= 1;
    }
    (lo as u64, hi)
}

fn in_window(params: KernelParams, q: u64) -> bool {
    let top = params.top_frequency();
    let q = q as u128;
    q.checked_mul(q).is_none_or(|sq| sq >= top) && q <= top
}

/// `max_x |K_N(x, a/q)|` and its ratio to `q^{1/d}` for prime `q`.
pub fn conjecture1_ratio(params: KernelParams, q: u64, a: u64) -> Result<ScanRecord> {
    if !is_prime(q) {
        return invalid(format!("q = {q} is not prime"));
    }
    if a < 1 || a >= q {
        return invalid(format!("a = {a} must lie in [1, q-1]"));
    }
    let phase = RationalPhase::reduced(a as i128, q)?;
    let best = max_modulus_over_x(params, phase, MaxSearch::for_params(params))?;
    Ok(ScanRecord {
        d: params.degree(),
        n: params.len(),
        q,
        a,
        max_modulus: best.modulus,
        ratio: best.modulus / (q as f64).powf(1.0 / params.degree() as f64),
        x_star: best.x_star,
        in_window: in_window(params, q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum PrimePolicy {
    Exhaustive,
    /// Seeded reservoir sample of at most `per_block` primes from each dyadic block `[2^k, 2^{k+1})`.
    Reservoir {
        per_block: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ResiduePolicy {
    Exhaustive,
    /// Seeded sample of at most `count` residues `a` per prime.
    Random {
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    /// Overrides the default window `[N^{d/2}, N^d]`.
    pub q_range: Option<(u64, u64)>,
    pub primes: PrimePolicy,
    pub residues: ResiduePolicy,
    pub seed: u64,
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: impl Iterator<Item = f64> + Clone, bins: usize) -> Self {
        let hi = values.clone().fold(0.0, f64::max);
        let mut counts = vec![0u64; bins];
        for v in values {
            let idx = if hi > 0.0 {
                ((v / hi) * bins as f64) as usize
            } else {
                0
            };
            counts[idx.min(bins - 1)] += 1;
        }
        Self {
            lo: 0.0,
            hi,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub records: usize,
    pub primes: usize,
    pub max_ratio: f64,
    pub argmax_q: u64,
    pub argmax_a: u64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub records: Vec<ScanRecord>,
    pub summary: ScanSummary,
}

const HISTOGRAM_BINS: usize = 20;
const RESIDUE_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn select_primes(lo: u64, hi: u64, policy: PrimePolicy, seed: u64) -> Result<Vec<u64>> {
    match policy {
        PrimePolicy::Exhaustive => {
            let mut out = Vec::new();
            for_each_prime(lo, hi, |p| out.push(p))?;
            Ok(out)
        }
        PrimePolicy::Reservoir { per_block } => {
            if per_block == 0 {
                return invalid("reservoir size must be positive");
            }
            let mut out = Vec::new();
            let mut k = 63 - lo.max(1).leading_zeros();
            loop {
                let block_lo = (1u64 << k).max(lo);
                let block_hi = if k >= 63 {
                    hi
                } else {
                    ((1u64 << (k + 1)) - 1).min(hi)
                };
                if block_lo > hi {
                    break;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let mut reservoir: Vec<u64> = Vec::with_capacity(per_block);
                let mut seen = 0u64;
                for_each_prime(block_lo, block_hi, |p| {
                    seen += 1;
                    if reservoir.len() < per_block {
                        reservoir.push(p);
                    } else {
                        let j = rng.gen_range(0..seen);
                        if (j as usize) < per_block {
                            reservoir[j as usize] = p;
                        }
                    }
                })?;
                reservoir.sort_unstable();
                out.extend(reservoir);
                if block_hi == hi {
                    break;
                }
                k += 1;
            }
            Ok(out)
        }
    }
}

fn select_residues(q: u64, policy: ResiduePolicy, seed: u64) -> Result<Vec<u64>> {
    match policy {
        ResiduePolicy::Exhaustive => Ok((1..q).collect()),
        ResiduePolicy::Random { count } => {
            if count == 0 {
                return invalid("residue sample size must be positive");
            }
            let total = q - 1;
            if count as u64 >= total {
                return Ok((1..q).collect());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ RESIDUE_STREAM_SALT);
            rng.set_stream(q);
            let mut picked: Vec<u64> = sample(&mut rng, total as usize, count)
                .into_iter()
                .map(|i| i as u64 + 1)
                .collect();
            picked.sort_unstable();
            Ok(picked)
        }
    }
}

/// Scan `(q, a)` pairs; records come back sorted by `(q, a)` and are
/// independent of `parallelism`.
pub fn scan_conjecture1(config: &ScanConfig) -> Result<ScanResult> {
    let params = KernelParams::new(config.d, config.n)?;
    let (lo, hi) = config.q_range.unwrap_or_else(|| conjecture_window(params));
    let primes = select_primes(lo, hi, config.primes, config.seed)?;
    if primes.is_empty() {
        return Err(Error::EmptyRange(format!("no primes in [{lo}, {hi}]")));
    }
    let mut pairs = Vec::new();
    for &q in &primes {
        for a in select_residues(q, config.residues, config.seed)? {
            pairs.push((q, a));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut records = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(q, a)| conjecture1_ratio(params, q, a))
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by_key(|r| (r.q, r.a));
    let best = records
        .iter()
        .fold(None::<&ScanRecord>, |acc, r| match acc {
            Some(b) if b.ratio >= r.ratio => Some(b),
            _ => Some(r),
        })
        .expect("at least one record");
    let summary = ScanSummary {
        records: records.len(),
        primes: primes.len(),
        max_ratio: best.ratio,
        argmax_q: best.q,
        argmax_a: best.a,
        histogram: Histogram::build(records.iter().map(|r| r.ratio), HISTOGRAM_BINS),
    };
    Ok(ScanResult { records, summary })
}

/// The `x = 0` lower probe `|K_N(0, a/q)|` used to sanity-check scan records.
pub fn origin_probe(params: KernelParams, q: u64, a: u64) -> Result<f64> {
    let phase = RationalPhase::new(a as i128, q)?;
    Ok(eval_kernel(params, phase, TorusPoint::ZERO).norm())
}
