//! The moment `S(N, p) = ∫_{𝕋²} |K_N(x, t)|^{2p} dx dt`.
//!
//! For integer `p` orthogonality turns `S(N, p)` into the number of solutions of
//!
//! ```text
//! n_1 + … + n_p = m_1 + … + m_p,   n_1^d + … + n_p^d = m_1^d + … + m_p^d,   1 ≤ n_i, m_i ≤ N,
//! ```
//!
//! which is computed exactly by convolution ([`count_solutions`]) and by literal
//! enumeration ([`brute_force_count`]). [`quadrature_integer_p`] integrates the
//! trigonometric polynomial `|K_N|^{2p}` exactly on its Nyquist grid, and
//! [`monte_carlo`] handles arbitrary real `p > 0`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::exp_sum::{eval_kernel, KernelParams, RationalPhase, TorusPoint, XGridEvaluator};
use crate::numeric::{least_squares, CompensatedSum};
use crate::sampling::{map_chunks, Moments};

/// Practical guard on `p·N` for the counting routine.
pub const COUNT_GUARD: u64 = 10_000;
/// Largest number of distinct `(s, t)` keys the count table may hold.
pub const TABLE_GUARD: u128 = 50_000_000;
/// Largest `N^{2p}` accepted by the enumeration oracle.
pub const BRUTE_FORCE_GUARD: u128 = 100_000_000;
/// Largest quadrature grid (`M_x · M_t`).
pub const QUADRATURE_GUARD: u128 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Count,
    Quadrature,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Count => "count",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

fn decimal<S: Serializer>(v: &Option<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(n) => s.serialize_str(&n.to_str_radix(10)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueResult {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub p: f64,
    pub method: Method,
    #[serde(serialize_with = "decimal")]
    pub exact_value: Option<BigUint>,
    pub float_value: f64,
    pub stderr: Option<f64>,
    pub seed: Option<u64>,
}

/// `r_p(s, t) = #{(n_1..n_p) ∈ [1, N]^p : Σ n_i = s, Σ n_i^d = t}`.
#[derive(Debug, Clone)]
pub struct SparseCountTable {
    steps: u32,
    counts: HashMap<(u64, u128), BigUint>,
}

impl SparseCountTable {
    /// The p-fold convolution of unit masses at `(n, n^d)`, `1 ≤ n ≤ N`.
    pub fn build(params: KernelParams, p: u32) -> Result<Self> {
        if p == 0 {
            return invalid("p must be a positive integer");
        }
        let n = params.len();
        if (p as u64).saturating_mul(n) > COUNT_GUARD {
            return Err(Error::ResourceGuard {
                what: "p*N",
                size: p as u128 * n as u128,
                limit: COUNT_GUARD as u128,
            });
        }
        let keys = multiset_count(n, p);
        if keys > TABLE_GUARD {
            return Err(Error::ResourceGuard {
                what: "count table keys",
                size: keys,
                limit: TABLE_GUARD,
            });
        }
        let d = params.degree();
        let unit: Vec<(u64, u128)> = (1..=n).map(|m| (m, (m as u128).pow(d))).collect();
        let mut counts = HashMap::from([((0u64, 0u128), BigUint::one())]);
        for _ in 0..p {
            let mut next: HashMap<(u64, u128), BigUint> =
                HashMap::with_capacity(counts.len() * unit.len());
            for ((s, t), c) in &counts {
                for &(m, md) in &unit {
                    *next.entry((s + m, t + md)).or_default() += c;
                }
            }
            counts = next;
        }
        Ok(Self { steps: p, counts })
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, s: u64, t: u128) -> BigUint {
        self.counts.get(&(s, t)).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, u128), &BigUint)> {
        self.counts.iter()
    }

    /// `Σ r_p(s, t)`, which equals `N^p`.
    pub fn total_mass(&self) -> BigUint {
        self.counts.values().sum()
    }

    /// `Σ r_p(s, t)^2`, the number of solutions of the paired system.
    pub fn sum_of_squares(&self) -> BigUint {
        self.counts.values().map(|c| c * c).sum()
    }
}

// C(n + p − 1, p): an upper bound on the number of distinct (s, t) keys
fn multiset_count(n: u64, p: u32) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..p as u128 {
        acc = acc.saturating_mul(n as u128 + i) / (i + 1);
    }
    acc
}

/// Exact `S(N, p)` for integer `p ≥ 1` by sparse convolution.
pub fn count_solutions(params: KernelParams, p: u32) -> Result<MeanValueResult> {
    let exact = SparseCountTable::build(params, p)?.sum_of_squares();
    Ok(MeanValueResult {
        d: params.degree(),
        n: params.len(),
        p: p as f64,
        method: Method::Count,
        float_value: biguint_to_f64(&exact),
        exact_value: Some(exact),
        stderr: None,
        seed: None,
    })
}

/// Literal enumeration of `[1, N]^{2p}`; testing oracle only.
pub fn brute_force_count(params: KernelParams, p: u32) -> Result<BigUint> {
    if p == 0 {
        return invalid("p must be a positive integer");
    }
    let n = params.len();
    let size = (n as u128).checked_pow(2 * p).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_GUARD {
        return Err(Error::ResourceGuard {
            what: "N^(2p)",
            size,
            limit: BRUTE_FORCE_GUARD,
        });
    }
    let d = params.degree();
    let vars = 2 * p as usize;
    let mut digits = vec![1u64; vars];
    let mut count: u64 = 0;
    loop {
        let (left, right) = digits.split_at(p as usize);
        let lin = |xs: &[u64]| xs.iter().sum::<u64>();
        let pow = |xs: &[u64]| xs.iter().map(|&x| (x as u128).pow(d)).sum::<u128>();
        if lin(left) == lin(right) && pow(left) == pow(right) {
            count += 1;
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == vars {
                return Ok(BigUint::from(count));
            }
            if digits[i] < n {
                digits[i] += 1;
                break;
            }
            digits[i] = 1;
            i += 1;
        }
    }
}

/// Minimal grid sizes on which equispaced averaging of `|K_N|^{2p}` is exact.
pub fn nyquist_grid(params: KernelParams, p: u32) -> (u128, u128) {
    let p = p as u128;
    (
        2 * p * params.len() as u128 + 1,
        2 * p * params.top_frequency() + 1,
    )
}

/// `S(N, p)` as the average of `|K_N|^{2p}` over the minimal exact grid.
pub fn quadrature_integer_p(params: KernelParams, p: u32) -> Result<MeanValueResult> {
    let (mx, mt) = nyquist_grid(params, p);
    quadrature_on_grid(params, p, mx, mt)
}

/// Grid average of `|K_N|^{2p}` on an `M_x × M_t` grid; both sizes must be at
/// least the Nyquist sizes so the average is exact.
pub fn quadrature_on_grid(
    params: KernelParams,
    p: u32,
    mx: u128,
    mt: u128,
) -> Result<MeanValueResult> {
    if p == 0 {
        return invalid("p must be a positive integer");
    }
    let (need_x, need_t) = nyquist_grid(params, p);
    if mx < need_x || mt < need_t {
        return invalid(format!(
            "grid {mx}x{mt} aliases; need at least {need_x}x{need_t}"
        ));
    }
    let cells = mx.saturating_mul(mt);
    if cells > QUADRATURE_GUARD || mt > u64::MAX as u128 {
        return Err(Error::ResourceGuard {
            what: "quadrature grid points",
            size: cells,
            limit: QUADRATURE_GUARD,
        });
    }
    let eval = XGridEvaluator::new(params, mx as usize)?;
    let power = p as i32;
    let rows: Vec<f64> = (0..mt as u64)
        .into_par_iter()
        .map_init(Vec::new, |buf, k| {
            let t = RationalPhase::new(k as i128, mt as u64).expect("positive denominator");
            eval.evaluate_into(t.into(), buf);
            buf.iter()
                .map(|z| z.norm_sqr().powi(power))
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    let total = rows.into_iter().collect::<CompensatedSum>().value();
    Ok(MeanValueResult {
        d: params.degree(),
        n: params.len(),
        p: p as f64,
        method: Method::Quadrature,
        exact_value: None,
        float_value: total / cells as f64,
        stderr: None,
        seed: None,
    })
}

pub const MIN_SAMPLES: u64 = 100;

/// Seeded Monte Carlo estimate of `S(N, p)` for any real `p > 0`.
pub fn monte_carlo(
    params: KernelParams,
    p: f64,
    samples: u64,
    seed: u64,
) -> Result<MeanValueResult> {
    if !(p.is_finite() && p > 0.0) {
        return invalid(format!("p must be positive and finite, got {p}"));
    }
    if samples < MIN_SAMPLES {
        return invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        ));
    }
    let unimodular = params.len() == 1;
    let parts = map_chunks(seed, samples, |points| {
        let mut m = Moments::default();
        for (x, t) in points {
            let v = if unimodular {
                1.0
            } else {
                let z = eval_kernel(
                    params,
                    TorusPoint::new(t).unwrap(),
                    TorusPoint::new(x).unwrap(),
                );
                z.norm_sqr().powf(p)
            };
            m.push(v);
        }
        m
    });
    let m = parts.iter().fold(Moments::default(), |acc, c| acc.merge(c));
    Ok(MeanValueResult {
        d: params.degree(),
        n: params.len(),
        p,
        method: Method::MonteCarlo,
        exact_value: None,
        float_value: m.mean,
        stderr: Some(m.std_error()),
        seed: Some(seed),
    })
}

pub fn biguint_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// Natural log of a positive big integer, accurate beyond the binary64 range.
pub fn biguint_ln(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits < 1000 {
        return biguint_to_f64(v).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitPoint {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "S", serialize_with = "decimal_plain")]
    pub s: BigUint,
    pub log_n: f64,
    pub log_s: f64,
}

fn decimal_plain<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub d: u32,
    pub p: u32,
    pub points: Vec<FitPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// The comparison exponent `2p − d − 1`.
    pub target: i64,
}

/// Least-squares slope of `log S(N, p)` against `log N` over `lengths`.
pub fn exponent_fit(d: u32, p: u32, lengths: &[u64]) -> Result<ExponentFit> {
    if lengths.len() < 3 {
        return invalid("exponent fit needs at least three lengths");
    }
    if lengths.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("lengths must be strictly increasing");
    }
    let params = lengths
        .iter()
        .map(|&n| KernelParams::new(d, n))
        .collect::<Result<Vec<_>>>()?;
    let counts = params
        .par_iter()
        .map(|&kp| count_solutions(kp, p))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<FitPoint> = counts
        .into_iter()
        .map(|r| {
            let s = r.exact_value.expect("count carries an exact value");
            FitPoint {
                n: r.n,
                log_n: (r.n as f64).ln(),
                log_s: biguint_ln(&s),
                s,
            }
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|pt| pt.log_n).collect();
    let ys: Vec<f64> = points.iter().map(|pt| pt.log_s).collect();
    let fit = least_squares(&xs, &ys).ok_or_else(|| Error::Degenerate("singular fit".into()))?;
    Ok(ExponentFit {
        d,
        p,
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        residuals: fit.residuals,
        target: 2 * p as i64 - d as i64 - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kp(d: u32, n: u64) -> KernelParams {
        KernelParams::new(d, n).unwrap()
    }

    fn count(d: u32, n: u64, p: u32) -> BigUint {
        count_solutions(kp(d, n), p).unwrap().exact_value.unwrap()
    }

    #[test]
    fn count_examples() {
        assert_eq!(count(3, 5, 1), BigUint::from(5u32));
        assert_eq!(count(2, 2, 2), BigUint::from(6u32));
        assert_eq!(count(2, 3, 2), BigUint::from(15u32));
        assert!(count_solutions(kp(2, 3), 0).is_err());
        let err = count_solutions(kp(2, 5001), 2).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard { what: "p*N", .. }));
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_count(kp(2, 2), 2).unwrap(), BigUint::from(6u32));
        assert_eq!(brute_force_count(kp(2, 1), 3).unwrap(), BigUint::one());
        assert_eq!(brute_force_count(kp(3, 2), 2).unwrap(), count(3, 2, 2));
        assert!(brute_force_count(kp(2, 101), 2).is_err());
    }

    #[test]
    fn counting_matches_enumeration_exhaustively() {
        for d in [2u32, 3] {
            for p in 1u32..=3 {
                for n in 1u64..=12 {
                    if (n as u128).pow(2 * p) > 1_000_000 {
                        continue;
                    }
                    assert_eq!(
                        count(d, n, p),
                        brute_force_count(kp(d, n), p).unwrap(),
                        "d={d} N={n} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn table_mass_and_support() {
        for (d, n, p) in [(2u32, 6u64, 3u32), (3, 4, 2), (4, 3, 4)] {
            let table = SparseCountTable::build(kp(d, n), p).unwrap();
            assert_eq!(table.total_mass(), BigUint::from(n).pow(p));
            let nd = (n as u128).pow(d);
            for ((s, t), _) in table.iter() {
                assert!((p as u64..=p as u64 * n).contains(s));
                assert!((p as u128..=p as u128 * nd).contains(t));
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let r = quadrature_integer_p(kp(2, 2), 2).unwrap();
        assert!((r.float_value - 6.0).abs() < 1e-9);
        let r = quadrature_integer_p(kp(2, 1), 3).unwrap();
        assert!((r.float_value - 1.0).abs() < 1e-12);
        let r = quadrature_integer_p(kp(2, 3), 2).unwrap();
        assert!((r.float_value - 15.0).abs() < 1e-9);
        assert!(quadrature_on_grid(kp(2, 3), 2, 12, 37).is_err());
        assert!(quadrature_on_grid(kp(2, 3), 2, 13, 36).is_err());
        // oversampled grids stay exact
        let r = quadrature_on_grid(kp(2, 3), 2, 20, 50).unwrap();
        assert!((r.float_value - 15.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_matches_counting() {
        for d in [2u32, 3] {
            for p in 1u32..=3 {
                for n in 1u64..=6 {
                    let exact = count_solutions(kp(d, n), p).unwrap().float_value;
                    let quad = quadrature_integer_p(kp(d, n), p).unwrap().float_value;
                    assert!(
                        (quad - exact).abs() <= 1e-6 * exact,
                        "d={d} N={n} p={p}: {quad} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let r = monte_carlo(kp(2, 1), 2.5, 1000, 3).unwrap();
        assert_eq!(r.float_value, 1.0);
        assert_eq!(r.stderr, Some(0.0));
        let r = monte_carlo(kp(2, 2), 2.0, 1_000_000, 11).unwrap();
        let se = r.stderr.unwrap();
        assert!(
            (r.float_value - 6.0).abs() <= 4.0 * se,
            "{} ± {se}",
            r.float_value
        );
        let again = monte_carlo(kp(2, 2), 2.0, 1_000_000, 11).unwrap();
        assert_eq!(r, again);
        assert!(monte_carlo(kp(2, 2), 0.0, 1000, 1).is_err());
        assert!(monte_carlo(kp(2, 2), 1.0, 99, 1).is_err());
    }

    #[test]
    fn fit_examples() {
        let fit = exponent_fit(2, 1, &[4, 8, 16, 32]).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05);
        // only diagonal solutions survive for p = 2, d = 2: S(N, 2) = 2N² − N
        let fit = exponent_fit(2, 2, &[8, 16, 32, 64]).unwrap();
        for pt in &fit.points {
            assert_eq!(pt.s, BigUint::from(2 * pt.n * pt.n - pt.n));
        }
        assert!((1.9..=2.1).contains(&fit.slope), "slope {}", fit.slope);
        assert!(exponent_fit(2, 1, &[4, 8]).is_err());
        assert!(exponent_fit(2, 1, &[4, 8, 8]).is_err());
    }

    #[test]
    fn result_json_keys() {
        let r = count_solutions(kp(2, 3), 2).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["exact_value"], "15");
        assert_eq!(v["N"], 3);
        assert_eq!(v["method"], "count");
    }

    #[test]
    fn big_log() {
        let v = BigUint::from(3u32).pow(2000);
        assert!((biguint_ln(&v) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trivial_bounds_and_monotonicity(d in 2u32..4, n in 1u64..9, p in 1u32..4) {
            let s = count(d, n, p);
            prop_assert!(s >= BigUint::from(n).pow(p));
            prop_assert!(s <= BigUint::from(n).pow(2 * p));
            prop_assert!(count(d, n + 1, p) >= s);
        }
    }
}
