//! Continued-fraction approximations `|α − a/q| ≤ 1/q²` and prime enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, Error, Result};

/// Largest admissible sieve bound.
pub const SIEVE_LIMIT: u64 = 1 << 40;
const SEGMENT: u64 = 1 << 18;
const MAX_PARTIAL_QUOTIENT: f64 = 2_147_483_648.0; // 2^31

/// A continued-fraction convergent `a/q` of `α` together with `|α − a/q|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergent {
    pub a: i64,
    pub q: u64,
    pub error_bound: f64,
}

/// Convergents of `alpha` with denominator at most `q_max`, in increasing `q`.
///
/// Computed from the binary64 value of `alpha`; expansion stops when a partial
/// quotient exceeds 2^31. Denominators above roughly 2^26 inherit the rounding
/// error of the input.
pub fn convergents(alpha: f64, q_max: u64) -> Result<Vec<Convergent>> {
    require_finite("alpha", alpha)?;
    if q_max < 1 {
        return invalid("q_max must be at least 1");
    }
    let mut out = Vec::new();
    // p_{-1}/q_{-1} = 1/0, p_{-2}/q_{-2} = 0/1
    let (mut p_prev, mut q_prev): (i128, i128) = (1, 0);
    let (mut p_prev2, mut q_prev2): (i128, i128) = (0, 1);
    let mut rest = alpha;
    loop {
        let whole = rest.floor();
        if whole.abs() > MAX_PARTIAL_QUOTIENT && !out.is_empty() {
            break;
        }
        let c = whole as i128;
        let p = c * p_prev + p_prev2;
        let q = c * q_prev + q_prev2;
        if q > q_max as i128 || p.abs() > i64::MAX as i128 {
            break;
        }
        let (a, q) = (p as i64, q as u64);
        out.push(Convergent {
            a,
            q,
            error_bound: (alpha - a as f64 / q as f64).abs(),
        });
        let remainder = rest - whole;
        if remainder == 0.0 || (alpha - a as f64 / q as f64) == 0.0 {
            break;
        }
        rest = 1.0 / remainder;
        (p_prev2, q_prev2, p_prev, q_prev) = (p_prev, q_prev, p, q as i128);
    }
    Ok(out)
}

/// Primes in `[lo, hi]`, complete and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRange {
    pub lo: u64,
    pub hi: u64,
    pub primes: Vec<u64>,
}

impl PrimeRange {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Segmented sieve of Eratosthenes over `[lo, hi]`. Values below 2 in the
/// requested range are skipped; `hi < lo` yields an empty range.
pub fn primes_in_range(lo: u64, hi: u64) -> Result<PrimeRange> {
    let mut primes = Vec::new();
    for_each_prime(lo, hi, |p| primes.push(p))?;
    Ok(PrimeRange { lo, hi, primes })
}

/// Streaming form of [`primes_in_range`]: calls `visit` on each prime in order.
pub fn for_each_prime(lo: u64, hi: u64, mut visit: impl FnMut(u64)) -> Result<()> {
    if hi > SIEVE_LIMIT {
        return Err(Error::ResourceGuard {
            what: "sieve upper bound",
            size: hi as u128,
            limit: SIEVE_LIMIT as u128,
        });
    }
    let lo = lo.max(2);
    if hi < lo {
        return Ok(());
    }
    let base = small_primes(isqrt(hi));
    let mut seg_lo = lo;
    let mut marks = vec![false; SEGMENT as usize];
    while seg_lo <= hi {
        let seg_hi = (seg_lo + SEGMENT - 1).min(hi);
        let width = (seg_hi - seg_lo + 1) as usize;
        marks[..width].fill(false);
        for &p in &base {
            if p * p > seg_hi {
                break;
            }
            let mut start = (p * p).max(seg_lo.div_ceil(p) * p);
            while start <= seg_hi {
                marks[(start - seg_lo) as usize] = true;
                start += p;
            }
        }
        for (i, &composite) in marks[..width].iter().enumerate() {
            if !composite {
                visit(seg_lo + i as u64);
            }
        }
        seg_lo = seg_hi + 1;
    }
    Ok(())
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut k = 2;
        while k * k <= n {
            if n.is_multiple_of(k) {
                return false;
            }
            k += 1;
        }
        true
    }

    fn pairs(cs: &[Convergent]) -> Vec<(i64, u64)> {
        cs.iter().map(|c| (c.a, c.q)).collect()
    }

    #[test]
    fn convergent_examples() {
        assert!(pairs(&convergents(0.5, 10).unwrap()).contains(&(1, 2)));
        let pi = pairs(&convergents(std::f64::consts::PI, 200).unwrap());
        assert!(pi.contains(&(22, 7)) && pi.contains(&(355, 113)));
        assert_eq!(pi, vec![(3, 1), (22, 7), (333, 106), (355, 113)]);
        let golden = pairs(&convergents((1.0 + 5f64.sqrt()) / 2.0, 10).unwrap());
        assert_eq!(
            golden,
            vec![(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)]
        );
        assert!(convergents(f64::NAN, 10).is_err());
        assert!(convergents(0.3, 0).is_err());
    }

    #[test]
    fn negative_alpha() {
        let cs = convergents(-0.3, 100).unwrap();
        assert_eq!(pairs(&cs).last(), Some(&(-3, 10)));
    }

    #[test]
    fn prime_examples() {
        assert_eq!(
            primes_in_range(10, 20).unwrap().primes,
            vec![11, 13, 17, 19]
        );
        assert_eq!(primes_in_range(2, 2).unwrap().primes, vec![2]);
        assert!(primes_in_range(20, 10).unwrap().is_empty());
        assert!(primes_in_range(2, SIEVE_LIMIT + 1).is_err());
        let lo = 1_000_000;
        let got = primes_in_range(lo, lo + 100).unwrap().primes;
        let want: Vec<u64> = (lo..=lo + 100).filter(|&n| trial_division(n)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn sieve_matches_trial_division_exhaustively() {
        let all = primes_in_range(2, 100_000).unwrap().primes;
        let want: Vec<u64> = (2..=100_000).filter(|&n| trial_division(n)).collect();
        assert_eq!(all, want);
        // sub-ranges straddling segment boundaries
        for &(lo, hi) in &[(3, 3), (4, 4), (262_140, 262_200), (99_990, 100_000)] {
            let got = primes_in_range(lo, hi).unwrap().primes;
            let want: Vec<u64> = (lo..=hi).filter(|&n| trial_division(n)).collect();
            assert_eq!(got, want, "[{lo}, {hi}]");
        }
    }

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let lo = (1u64 << 40) - 2000;
        let sieved = primes_in_range(lo, 1 << 40).unwrap().primes;
        let mr: Vec<u64> = (lo..=1 << 40).filter(|&n| is_prime(n)).collect();
        assert_eq!(sieved, mr);
        assert!(is_prime((1u64 << 61) - 1));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2, 3, 5, 7
    }

    #[test]
    fn prime_counts_near_expected_density() {
        for &q in &[1_000u64, 10_000, 100_000, 1_000_000] {
            let count = primes_in_range(q, 3 * q).unwrap().len() as f64;
            let expected = 2.0 * q as f64 / (q as f64).ln();
            assert!(
                (count / expected - 1.0).abs() <= 0.25,
                "Q={q}: {count} vs {expected}"
            );
        }
    }

    proptest! {
        #[test]
        fn convergents_satisfy_dirichlet_bound(alpha in -50.0f64..50.0, q_max in 1u64..1_000_000) {
            let cs = convergents(alpha, q_max).unwrap();
            prop_assert!(!cs.is_empty());
            let mut last_q = 0;
            for c in &cs {
                prop_assert!(c.q >= last_q);
                last_q = c.q;
                prop_assert!(c.q <= q_max);
                prop_assert_eq!(crate::exp_sum::gcd(c.a.unsigned_abs(), c.q), 1);
                let q = c.q as f64;
                prop_assert!(q * (q * alpha - c.a as f64).abs() <= 1.0 + 1e-12);
                prop_assert!(c.error_bound <= 1.0 / (q * q) + 1e-12);
            }
        }
    }
}
