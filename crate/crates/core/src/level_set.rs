//! Superlevel sets `G_λ = {(x, t) ∈ 𝕋² : |K_N(x, t)| > λ}`.
//!
//! Membership is strict; grid points with `|K_N| = λ` are excluded. Since
//! `|K_N| ≤ N`, every `λ ≥ N` gives measure exactly zero and is never sampled.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exp_sum::{eval_kernel, KernelParams, RationalPhase, TorusPoint, XGridEvaluator};
use crate::numeric::{least_squares, turn, CompensatedSum};
use crate::sampling::map_chunks;

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
/// Grids larger than this fall back to Monte Carlo.
pub const DEFAULT_GRID_LIMIT: u128 = 1 << 26;
/// Largest grid accepted by the duality audit (fine level included).
pub const AUDIT_GRID_LIMIT: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Grid,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Grid sizes; default `8N` and `8N^d`.
    pub mx: Option<u64>,
    pub mt: Option<u64>,
    pub samples: u64,
    pub seed: u64,
    pub grid_limit: u128,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::Grid,
            mx: None,
            mt: None,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            grid_limit: DEFAULT_GRID_LIMIT,
        }
    }
}

impl EstimatorConfig {
    pub fn grid(mx: u64, mt: u64) -> Self {
        Self {
            mx: Some(mx),
            mt: Some(mt),
            ..Self::default()
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            kind: EstimatorKind::MonteCarlo,
            samples,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub lambda: f64,
    pub measure: f64,
    /// Binomial standard error for Monte Carlo, `0` for grids.
    pub uncertainty: f64,
    pub estimator: EstimatorKind,
    pub mx: Option<u64>,
    pub mt: Option<u64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    /// Set when a grid request exceeded the limit and Monte Carlo was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub entries: Vec<LevelEntry>,
}

enum Plan {
    Grid {
        mx: u64,
        mt: u64,
    },
    MonteCarlo {
        samples: u64,
        seed: u64,
        fallback: bool,
    },
}

fn plan(params: KernelParams, cfg: &EstimatorConfig) -> Result<Plan> {
    let n = params.len();
    let top = params.top_frequency();
    match cfg.kind {
        EstimatorKind::MonteCarlo => {
            if cfg.samples < 1 {
                return invalid("need at least one sample");
            }
            Ok(Plan::MonteCarlo {
                samples: cfg.samples,
                seed: cfg.seed,
                fallback: false,
            })
        }
        EstimatorKind::Grid => {
            let need_t = 8 * top;
            let mx = cfg.mx.unwrap_or(8 * n);
            if mx < 8 * n {
                return invalid(format!("grid M_x = {mx} is below 8N = {}", 8 * n));
            }
            if let Some(mt) = cfg.mt {
                if (mt as u128) < need_t {
                    return invalid(format!("grid M_t = {mt} is below 8N^d = {need_t}"));
                }
            }
            let mt = cfg.mt.map(|m| m as u128).unwrap_or(need_t);
            if (mx as u128).saturating_mul(mt) > cfg.grid_limit {
                if cfg.samples < 1 {
                    return invalid("grid too large and no Monte Carlo samples configured");
                }
                return Ok(Plan::MonteCarlo {
                    samples: cfg.samples,
                    seed: cfg.seed,
                    fallback: true,
                });
            }
            Ok(Plan::Grid { mx, mt: mt as u64 })
        }
    }
}

// number of values strictly above each level
fn tally(counts: &mut [u64], levels: &[f64], modulus: f64) {
    for (c, &l) in counts.iter_mut().zip(levels) {
        if modulus > l {
            *c += 1;
        }
    }
}

/// Measure `|G_λ|` for every `λ` in `levels`; all levels share one grid or one
/// sample set, so the profile is monotone in `λ` by construction.
pub fn level_profile(
    params: KernelParams,
    levels: &[f64],
    cfg: &EstimatorConfig,
) -> Result<LevelProfile> {
    for &l in levels {
        if !(l.is_finite() && l >= 0.0) {
            return invalid(format!("level must be finite and nonnegative, got {l}"));
        }
    }
    let n = params.len() as f64;
    let active: Vec<f64> = levels
        .iter()
        .map(|&l| if l >= n { f64::INFINITY } else { l })
        .collect();
    let entries = match plan(params, cfg)? {
        Plan::Grid { mx, mt } => {
            let eval = XGridEvaluator::new(params, mx as usize)?;
            let counts = (0..mt)
                .into_par_iter()
                .map_init(Vec::new, |buf, k| {
                    let t = RationalPhase::new(k as i128, mt).expect("mt > 0");
                    eval.evaluate_into(t.into(), buf);
                    let mut c = vec![0u64; active.len()];
                    for z in buf.iter() {
                        tally(&mut c, &active, z.norm());
                    }
                    c
                })
                .reduce(
                    || vec![0u64; active.len()],
                    |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
                );
            let total = (mx * mt) as f64;
            levels
                .iter()
                .zip(counts)
                .map(|(&lambda, c)| LevelEntry {
                    lambda,
                    measure: c as f64 / total,
                    uncertainty: 0.0,
                    estimator: EstimatorKind::Grid,
                    mx: Some(mx),
                    mt: Some(mt),
                    samples: None,
                    seed: None,
                    fallback: false,
                })
                .collect()
        }
        Plan::MonteCarlo {
            samples,
            seed,
            fallback,
        } => {
            let parts = map_chunks(seed, samples, |points| {
                let mut c = vec![0u64; active.len()];
                for (x, t) in points {
                    let z = eval_kernel(
                        params,
                        TorusPoint::new(t).unwrap(),
                        TorusPoint::new(x).unwrap(),
                    );
                    tally(&mut c, &active, z.norm());
                }
                c
            });
            let mut counts = vec![0u64; active.len()];
            for part in parts {
                for (acc, c) in counts.iter_mut().zip(part) {
                    *acc += c;
                }
            }
            levels
                .iter()
                .zip(counts)
                .map(|(&lambda, c)| {
                    let m = c as f64 / samples as f64;
                    LevelEntry {
                        lambda,
                        measure: m,
                        uncertainty: (m * (1.0 - m) / samples as f64).sqrt(),
                        estimator: EstimatorKind::MonteCarlo,
                        mx: None,
                        mt: None,
                        samples: Some(samples),
                        seed: Some(seed),
                        fallback,
                    }
                })
                .collect()
        }
    };
    Ok(LevelProfile {
        d: params.degree(),
        n: params.len(),
        entries,
    })
}

/// `|G_λ|` for a single level.
pub fn measure_level_set(
    params: KernelParams,
    level: f64,
    cfg: &EstimatorConfig,
) -> Result<LevelEntry> {
    Ok(level_profile(params, &[level], cfg)?.entries[0])
}

/// Exact `|G_λ|` for `N = 2` (any `d`): `|K_2|² = 2 + 2cos(2π(x + (2^d−1)t))`,
/// so `|G_λ| = arccos(λ²/2 − 1)/π` for `0 < λ < 2`.
pub fn two_term_measure(level: f64) -> f64 {
    if level >= 2.0 {
        0.0
    } else if level <= 0.0 {
        1.0
    } else {
        (level * level / 2.0 - 1.0).acos() / std::f64::consts::PI
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevEntry {
    pub lambda: f64,
    /// `λ²|G_λ|/N`
    pub normalized: f64,
    /// `1 + 5·(relative estimator error)`
    pub allowed: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub max_normalized: f64,
    pub passed: bool,
    pub entries: Vec<ChebyshevEntry>,
}

/// `λ²|G_λ| ≤ ‖K_N‖₂² = N`, with slack for estimator noise.
pub fn chebyshev_check(profile: &LevelProfile) -> ChebyshevReport {
    let n = profile.n as f64;
    let entries: Vec<ChebyshevEntry> = profile
        .entries
        .iter()
        .map(|e| {
            let normalized = e.lambda * e.lambda * e.measure / n;
            let rel = if e.measure > 0.0 {
                e.uncertainty / e.measure
            } else {
                0.0
            };
            let allowed = 1.0 + 5.0 * rel;
            ChebyshevEntry {
                lambda: e.lambda,
                normalized,
                allowed,
                passed: normalized <= allowed,
            }
        })
        .collect();
    ChebyshevReport {
        n: profile.n,
        max_normalized: entries.iter().map(|e| e.normalized).fold(0.0, f64::max),
        passed: entries.iter().all(|e| e.passed),
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    /// `−(2d+2)`, the decay exponent that holds conditionally on the pointwise conjecture.
    pub conditional_reference: f64,
    /// `−2`, the unconditional Chebyshev exponent.
    pub chebyshev_reference: f64,
}

/// Slope of `log|G_λ|` against `log λ` over `(λ, |G_λ|)` points; zero measures are dropped.
pub fn fit_decay(d: u32, points: &[(f64, f64)]) -> Result<DecayFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(l, m)| l > 0.0 && m > 0.0)
        .collect();
    if used.len() < 3 {
        return Err(Error::Degenerate(format!(
            "only {} levels with nonzero measure; need at least 3",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let fit = least_squares(&xs, &ys)
        .ok_or_else(|| Error::Degenerate("levels are not distinct".into()))?;
    Ok(DecayFit {
        slope: fit.slope,
        intercept: fit.intercept,
        residuals: fit.residuals,
        points: used,
        conditional_reference: -(2.0 * d as f64 + 2.0),
        chebyshev_reference: -2.0,
    })
}

/// Geometrically spaced levels in `[lo, hi]`.
pub fn geometric_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

/// Measure a profile over `window ⊂ (√N, N]` and fit the log–log decay slope.
pub fn conditional_decay_fit(
    params: KernelParams,
    window: (f64, f64),
    count: usize,
    cfg: &EstimatorConfig,
) -> Result<DecayFit> {
    let n = params.len() as f64;
    let (lo, hi) = window;
    if !(lo > n.sqrt() && hi > lo && hi <= n) {
        return invalid(format!(
            "window [{lo}, {hi}] must lie within (sqrt(N), N] = ({}, {n}]",
            n.sqrt()
        ));
    }
    if count < 3 {
        return invalid("need at least three levels");
    }
    let levels = geometric_levels(lo, hi, count);
    let profile = level_profile(params, &levels, cfg)?;
    let points: Vec<(f64, f64)> = profile
        .entries
        .iter()
        .map(|e| (e.lambda, e.measure))
        .collect();
    fit_decay(params.degree(), &points)
}

/// Lower end `100·N^{1/2+ε²}` of the large-level regime.
pub fn large_level_threshold(n: u64, epsilon: f64) -> f64 {
    100.0 * (n as f64).powf(0.5 + epsilon * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityTerms {
    /// `λ|G_λ|`
    pub lhs: f64,
    /// `∫_{G_λ} |K_N|`
    pub mid: f64,
    /// `Σ_{n=1}^N f̂(n, n^d)` with `f = 1_{G_λ} K_N/|K_N|`
    pub rhs_re: f64,
    pub rhs_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub lambda: f64,
    pub mx: u64,
    pub mt: u64,
    pub coarse: DualityTerms,
    pub fine: DualityTerms,
    /// First-order Richardson combination `2·fine − coarse`.
    pub extrapolated: DualityTerms,
    pub tol: f64,
    pub lhs_le_mid: bool,
    pub pairing_holds: bool,
}

pub const DUALITY_TOL: f64 = 1e-3;

fn duality_terms(params: KernelParams, level: f64, mx: u64, mt: u64) -> Result<DualityTerms> {
    let n = params.len();
    if level >= n as f64 {
        return Ok(DualityTerms {
            lhs: 0.0,
            mid: 0.0,
            rhs_re: 0.0,
            rhs_im: 0.0,
        });
    }
    let eval = XGridEvaluator::new(params, mx as usize)?;
    let d = params.degree();
    // per-row partial sums: (count in G, Σ|K| on G, Σ_n f̂ contribution)
    let rows: Vec<(u64, f64, Complex64)> = (0..mt)
        .into_par_iter()
        .map_init(Vec::new, |buf, k| {
            let t = RationalPhase::new(k as i128, mt).expect("mt > 0");
            eval.evaluate_into(t.into(), buf);
            let mut inside = 0u64;
            let mut mass = CompensatedSum::new();
            let mut f = vec![Complex64::new(0.0, 0.0); buf.len()];
            for (fj, z) in f.iter_mut().zip(buf.iter()) {
                let m = z.norm();
                if m > level && m > 0.0 {
                    inside += 1;
                    mass.add(m);
                    *fj = z / m;
                }
            }
            let mut pairing = Complex64::new(0.0, 0.0);
            if inside > 0 {
                for freq in 1..=n {
                    let row: Complex64 = f
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
                        .map(|(j, v)| v * turn(-(((freq * j as u64) % mx) as f64) / mx as f64))
                        .sum();
                    let tphase = crate::exp_sum::Phase::Rational(t).turns_at(freq, d);
                    pairing += row * turn(-tphase);
                }
            }
            (inside, mass.value(), pairing)
        })
        .collect();
    let total = (mx * mt) as f64;
    let inside: u64 = rows.iter().map(|r| r.0).sum();
    let mid = rows.iter().map(|r| r.1).collect::<CompensatedSum>().value() / total;
    let rhs: Complex64 = rows.iter().map(|r| r.2).sum::<Complex64>() / total;
    Ok(DualityTerms {
        lhs: level * inside as f64 / total,
        mid,
        rhs_re: rhs.re,
        rhs_im: rhs.im,
    })
}

/// Audit `λ|G_λ| ≤ ∫_{G_λ}|K_N| = Σ_n f̂(n, n^d)` on two grids and their
/// Richardson combination. Grids default to four times the Nyquist sizes
/// `2N+1` and `2N^d+1`; the fine level doubles both.
pub fn duality_audit(
    params: KernelParams,
    level: f64,
    grid: Option<(u64, u64)>,
) -> Result<DualityReport> {
    if !(level.is_finite() && level >= 0.0) {
        return invalid(format!("level must be finite and nonnegative, got {level}"));
    }
    let min_x = 4 * (2 * params.len() + 1);
    let min_t = 4 * (2 * params.top_frequency() + 1);
    let (mx, mt) = grid.unwrap_or((min_x, min_t.min(u64::MAX as u128) as u64));
    if mx < min_x || (mt as u128) < min_t {
        return invalid(format!(
            "audit grid {mx}x{mt} is below 4x Nyquist ({min_x}x{min_t})"
        ));
    }
    let fine_points = 4 * mx as u128 * mt as u128;
    if fine_points > AUDIT_GRID_LIMIT {
        return Err(Error::ResourceGuard {
            what: "audit grid points",
            size: fine_points,
            limit: AUDIT_GRID_LIMIT,
        });
    }
    let coarse = duality_terms(params, level, mx, mt)?;
    let fine = duality_terms(params, level, 2 * mx, 2 * mt)?;
    let rich = |c: f64, f: f64| 2.0 * f - c;
    let extrapolated = DualityTerms {
        lhs: rich(coarse.lhs, fine.lhs),
        mid: rich(coarse.mid, fine.mid),
        rhs_re: rich(coarse.rhs_re, fine.rhs_re),
        rhs_im: rich(coarse.rhs_im, fine.rhs_im),
    };
    let tol = DUALITY_TOL;
    let e = extrapolated;
    Ok(DualityReport {
        d: params.degree(),
        n: params.len(),
        lambda: level,
        mx,
        mt,
        coarse,
        fine,
        extrapolated,
        tol,
        lhs_le_mid: e.lhs <= e.mid * (1.0 + tol) + f64::EPSILON,
        pairing_holds: (e.mid - e.rhs_re).abs() <= tol * e.mid + f64::EPSILON,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(d: u32, n: u64) -> KernelParams {
        KernelParams::new(d, n).unwrap()
    }

    #[test]
    fn measure_examples() {
        let params = kp(2, 2);
        let cfg = EstimatorConfig::default();
        assert_eq!(measure_level_set(params, 2.5, &cfg).unwrap().measure, 0.0);
        assert_eq!(measure_level_set(params, 2.0, &cfg).unwrap().measure, 0.0);
        let full = measure_level_set(params, 0.0, &cfg).unwrap();
        assert!((full.measure - 1.0).abs() < 0.05);
        let fine = EstimatorConfig::grid(4096, 4096);
        let m = measure_level_set(params, 1.9, &fine).unwrap().measure;
        assert!((m - two_term_measure(1.9)).abs() < 1e-3);
        assert!((two_term_measure(1.9) - 0.202_165_248_208_519_8).abs() < 1e-12);
        let mc = measure_level_set(params, 1.9, &EstimatorConfig::monte_carlo(200_000, 4)).unwrap();
        assert!((mc.measure - two_term_measure(1.9)).abs() < 3.0 * mc.uncertainty);
        assert!(measure_level_set(params, -1.0, &cfg).is_err());
        assert!(measure_level_set(params, 1.0, &EstimatorConfig::grid(8, 32)).is_err());
    }

    #[test]
    fn closed_form_holds_for_higher_degree_two_term_kernels() {
        let params = kp(3, 2);
        let m = measure_level_set(params, 1.2, &EstimatorConfig::grid(2048, 2048)).unwrap();
        assert!((m.measure - two_term_measure(1.2)).abs() < 2e-3);
    }

    #[test]
    fn grid_falls_back_to_monte_carlo() {
        let cfg = EstimatorConfig {
            grid_limit: 1000,
            samples: 5000,
            ..EstimatorConfig::default()
        };
        let e = measure_level_set(kp(2, 8), 3.0, &cfg).unwrap();
        assert!(e.fallback);
        assert_eq!(e.estimator, EstimatorKind::MonteCarlo);
    }

    #[test]
    fn profile_endpoints_and_monotonicity() {
        for cfg in [
            EstimatorConfig::default(),
            EstimatorConfig::monte_carlo(50_000, 1),
        ] {
            let levels = [0.0, 0.3, 0.9, 1.4, 1.9, 2.0];
            let prof = level_profile(kp(2, 2), &levels, &cfg).unwrap();
            assert!((prof.entries[0].measure - 1.0).abs() < 0.05);
            assert_eq!(prof.entries[5].measure, 0.0);
            assert!(prof
                .entries
                .windows(2)
                .all(|w| w[0].measure >= w[1].measure));
        }
    }

    #[test]
    fn profile_matches_closed_form() {
        let levels: Vec<f64> = (1..=10).map(|i| 0.19 * i as f64).collect();
        let prof = level_profile(
            kp(2, 2),
            &levels,
            &EstimatorConfig::monte_carlo(400_000, 77),
        )
        .unwrap();
        for e in &prof.entries {
            let want = two_term_measure(e.lambda);
            assert!(
                (e.measure - want).abs() <= 3.0 * e.uncertainty.max(1e-12),
                "λ={}",
                e.lambda
            );
        }
        let again = level_profile(
            kp(2, 2),
            &levels,
            &EstimatorConfig::monte_carlo(400_000, 77),
        )
        .unwrap();
        assert_eq!(prof, again);
    }

    #[test]
    fn chebyshev_examples() {
        let e = LevelEntry {
            lambda: 1.9,
            measure: two_term_measure(1.9),
            uncertainty: 0.0,
            estimator: EstimatorKind::Grid,
            mx: None,
            mt: None,
            samples: None,
            seed: None,
            fallback: false,
        };
        let prof = LevelProfile {
            d: 2,
            n: 2,
            entries: vec![
                e,
                LevelEntry {
                    lambda: 0.0,
                    measure: 1.0,
                    ..e
                },
            ],
        };
        let r = chebyshev_check(&prof);
        assert!((r.entries[0].normalized * 2.0 - 0.729_816_546_032_756_4).abs() < 1e-12);
        assert_eq!(r.entries[1].normalized, 0.0);
        assert!(r.passed);
        for d in [2u32, 3] {
            for n in 2..=8u64 {
                let params = kp(d, n);
                let levels: Vec<f64> = (0..12).map(|i| n as f64 * i as f64 / 11.0).collect();
                let prof = level_profile(params, &levels, &EstimatorConfig::default()).unwrap();
                let rep = chebyshev_check(&prof);
                assert!(rep.passed, "d={d} N={n}: {}", rep.max_normalized);
            }
        }
    }

    #[test]
    fn decay_fit_examples() {
        let fit =
            conditional_decay_fit(kp(2, 16), (5.0, 15.0), 8, &EstimatorConfig::default()).unwrap();
        assert!(fit.slope <= -2.0, "slope {}", fit.slope);
        assert_eq!(fit.conditional_reference, -6.0);
        // closed form near λ → 2: slope of log m vs log λ equals λ m'(λ)/m(λ)
        let (a, b) = (1.80, 1.82);
        let pts: Vec<(f64, f64)> = geometric_levels(a, b, 5)
            .into_iter()
            .map(|l| (l, two_term_measure(l)))
            .collect();
        let fit = fit_decay(2, &pts).unwrap();
        let l = (a * b).sqrt();
        let u = l * l / 2.0 - 1.0;
        let dm = -(l / (1.0 - u * u).sqrt()) / std::f64::consts::PI;
        let analytic = l * dm / two_term_measure(l);
        assert!(
            (fit.slope - analytic).abs() < 0.01 * analytic.abs(),
            "{} vs {analytic}",
            fit.slope
        );
        let zeros = [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)];
        assert!(fit_decay(2, &zeros).is_err());
        assert!(
            conditional_decay_fit(kp(2, 16), (2.0, 15.0), 8, &EstimatorConfig::default()).is_err()
        );
    }

    #[test]
    fn threshold_helper() {
        assert_eq!(large_level_threshold(100, 0.0), 1000.0);
    }

    #[test]
    fn duality_examples() {
        let params = kp(2, 2);
        let r = duality_audit(params, 0.0, None).unwrap();
        assert_eq!(r.extrapolated.lhs, 0.0);
        assert!(r.pairing_holds);
        // pairing at λ = 0 is ∫|K_2| = ∫ 2|cos(π u)| du = 4/π
        assert!((r.extrapolated.mid - 4.0 / std::f64::consts::PI).abs() < 1e-3);
        let r = duality_audit(params, 2.0, None).unwrap();
        assert_eq!(
            r.extrapolated,
            DualityTerms {
                lhs: 0.0,
                mid: 0.0,
                rhs_re: 0.0,
                rhs_im: 0.0
            }
        );
        let r = duality_audit(params, 1.5, None).unwrap();
        assert!(r.lhs_le_mid && r.pairing_holds, "{r:?}");
        assert!(r.extrapolated.lhs <= r.extrapolated.mid);
        assert!(duality_audit(params, 1.0, Some((4, 100))).is_err());
    }
}
