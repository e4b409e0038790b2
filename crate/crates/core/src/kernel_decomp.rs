//! The prime-rational comb `Φ(t) = Σ_{Q≤q≤3Q, q prime} Σ_{a=1}^{q-1} φ(q²(t − a/q))`,
//! its Fourier coefficients, and the split `K_N = K_{1,Q} + K_{2,Q}` with
//! `K_{1,Q} = K_N·Φ/Φ̂(0)`.
//!
//! Fourier coefficients use the closed form
//!
//! ```text
//! Φ̂(k) = Σ_q q^{-2} Fφ(k/q²) (q·[q | k] − 1),
//! ```
//!
//! which follows from `Σ_{a=1}^{q-1} e(−ak/q) = q·[q | k] − 1` for prime `q`.
//! The [`numeric`] submodule integrates the same quantities directly over the
//! supports of the comb, without the closed form, for cross-checking.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::RwLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exp_sum::{eval_kernel, KernelParams, Phase, TorusPoint};
use crate::numeric::turn;
use crate::quad::integrate_real;
use crate::rational::primes_in_range;

/// Absolute tolerance for each `Fφ(ξ)` quadrature.
pub const FOURIER_TOL: f64 = 1e-12;

/// The exponential bump `φ(u) = exp(1 − (b−a)² / (4(u−a)(b−u)))` on `(a, b)`,
/// zero elsewhere, with peak value 1 at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub lo: f64,
    pub hi: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self::STANDARD
    }
}

impl BumpSpec {
    pub const STANDARD: BumpSpec = BumpSpec {
        lo: 1.0 / 200.0,
        hi: 1.0 / 100.0,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!(
                "bump support [{lo}, {hi}] is not a proper interval"
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `ln φ(u)`; `-∞` off the open support.
    pub fn log_eval(&self, u: f64) -> f64 {
        if u <= self.lo || u >= self.hi {
            return f64::NEG_INFINITY;
        }
        let w = self.width();
        1.0 - w * w / (4.0 * (u - self.lo) * (self.hi - u))
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.log_eval(u).exp()
    }

    /// `Fφ(ξ) = ∫ φ(u) e(−ξu) du`.
    ///
    /// φ is symmetric about its center `c`, so `Fφ(ξ) = e(−ξc)·2∫_0^{w/2} φ(c+v) cos(2πξv) dv`;
    /// the real integral is computed adaptively.
    pub fn fourier(&self, xi: f64) -> Complex64 {
        let c = self.center();
        let half = 0.5 * self.width();
        let (g, _) = integrate_real(
            |v| self.eval(c + v) * (TAU * xi * v).cos(),
            0.0,
            half,
            0.5 * FOURIER_TOL,
        );
        turn(-xi * c) * (2.0 * g)
    }
}

/// `Φ`, its cached transforms, and the kernel it decomposes.
#[derive(Debug)]
pub struct DecompositionContext {
    scale: f64,
    params: KernelParams,
    bump: BumpSpec,
    primes: Vec<u64>,
    fphi0: f64,
    phi_hat0: f64,
    memo: RwLock<HashMap<u64, Complex64>>,
}

impl DecompositionContext {
    pub fn new(scale: f64, params: KernelParams) -> Result<Self> {
        Self::with_bump(scale, params, BumpSpec::STANDARD)
    }

    pub fn with_bump(scale: f64, params: KernelParams, bump: BumpSpec) -> Result<Self> {
        if !(scale.is_finite() && scale >= 2.0) {
            return invalid(format!("scale Q must be a finite real >= 2, got {scale}"));
        }
        let lo = scale.ceil() as u64;
        let hi = (3.0 * scale).floor() as u64;
        let primes = primes_in_range(lo, hi)?.primes;
        if primes.is_empty() {
            return Err(Error::Degenerate(format!(
                "no primes in [{scale}, {}]",
                3.0 * scale
            )));
        }
        let fphi0 = bump.fourier(0.0).re;
        let phi_hat0 = primes
            .iter()
            .map(|&q| (q - 1) as f64 / (q * q) as f64)
            .sum::<f64>()
            * fphi0;
        if phi_hat0.is_nan() || phi_hat0 <= 1e-300 {
            return Err(Error::Degenerate(format!("Φ̂(0) = {phi_hat0}")));
        }
        Ok(Self {
            scale,
            params,
            bump,
            primes,
            fphi0,
            phi_hat0,
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn bump(&self) -> BumpSpec {
        self.bump
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `N^{d/2} ≤ Q ≤ N^d`.
    pub fn in_theorem_range(&self) -> bool {
        let top = self.params.top_frequency() as f64;
        self.scale * self.scale >= top && self.scale <= top
    }

    pub fn fphi0(&self) -> f64 {
        self.fphi0
    }

    pub fn phi_hat0(&self) -> f64 {
        self.phi_hat0
    }

    /// Memoized `Fφ(ξ)`.
    pub fn fphi(&self, xi: f64) -> Complex64 {
        let key = xi.to_bits();
        if let Some(v) = self.memo.read().expect("memo lock").get(&key) {
            return *v;
        }
        let v = self.bump.fourier(xi);
        self.memo.write().expect("memo lock").insert(key, v);
        v
    }

    /// `Φ(t)`; for each prime only the one residue that can reach the support is visited.
    pub fn phi_comb(&self, t: TorusPoint) -> f64 {
        let t = t.value();
        let mut acc = 0.0;
        for &q in &self.primes {
            let qf = q as f64;
            let a = (t * qf).floor();
            if a < 1.0 || a > qf - 1.0 {
                continue;
            }
            let u = qf * (t * qf - a);
            if u > self.bump.lo && u < self.bump.hi {
                acc += self.bump.eval(u);
            }
        }
        acc
    }

    fn phi_hat_with(&self, k: i64, fphi: impl Fn(f64) -> Complex64) -> Complex64 {
        if k == 0 {
            return Complex64::new(self.phi_hat0, 0.0);
        }
        let m = k.unsigned_abs();
        let mut acc = Complex64::new(0.0, 0.0);
        for &q in &self.primes {
            let q2 = (q * q) as f64;
            let ramanujan = if m.is_multiple_of(q) {
                (q - 1) as f64
            } else {
                -1.0
            };
            acc += fphi(m as f64 / q2) * (ramanujan / q2);
        }
        if k < 0 {
            acc.conj()
        } else {
            acc
        }
    }

    /// `Φ̂(k)` in closed form; `Φ̂(−k)` is the exact conjugate of `Φ̂(k)`.
    pub fn phi_hat(&self, k: i64) -> Complex64 {
        self.phi_hat_with(k, |xi| self.fphi(xi))
    }

    /// `|Φ̂(k)|` for `k = 1..=k_max`, in parallel and without touching the memo.
    pub fn phi_hat_sweep(&self, k_max: u64) -> Vec<f64> {
        (1..=k_max as i64)
            .into_par_iter()
            .map(|k| self.phi_hat_with(k, |xi| self.bump.fourier(xi)).norm())
            .collect()
    }

    pub fn kernel(&self, x: impl Into<Phase>, t: TorusPoint) -> Complex64 {
        eval_kernel(self.params, t, x)
    }

    /// `K_{1,Q}(x, t) = K_N(x, t) Φ(t) / Φ̂(0)`.
    pub fn k1q(&self, x: impl Into<Phase>, t: TorusPoint) -> Complex64 {
        let phi = self.phi_comb(t);
        if phi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.kernel(x, t) * (phi / self.phi_hat0)
    }

    /// `K_{2,Q} = K_N − K_{1,Q}`.
    pub fn k2q(&self, x: impl Into<Phase> + Copy, t: TorusPoint) -> Complex64 {
        self.kernel(x, t) - self.k1q(x, t)
    }

    /// `K̂_{2,Q}(n1, n2)`: `0` on the curve `n2 = n1^d`, `−Φ̂(n2 − n1^d)/Φ̂(0)` off it,
    /// for `1 ≤ n1 ≤ N`. Outside that band both `K̂_N` and `K̂_{1,Q}` vanish, so
    /// the coefficient is `0`.
    pub fn k2q_hat(&self, n1: i64, n2: i128) -> Complex64 {
        if n1 < 1 || n1 as u64 > self.params.len() {
            return Complex64::new(0.0, 0.0);
        }
        let curve = (n1 as i128).pow(self.params.degree());
        let k = n2 - curve;
        if k == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let k = i64::try_from(k).expect("frequency offset fits in i64");
        -self.phi_hat(k) / self.phi_hat0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Report {
    #[serde(rename = "Q")]
    pub scale: f64,
    pub k_max: u64,
    /// `max_{1≤|k|≤k_max} |Φ̂(k)|·Q`
    pub sup_ratio: f64,
    pub argmax: u64,
    pub prime_count: usize,
}

/// Closed-form sweep of `|Φ̂(k)|·Q`; returns the report and the per-`k` ratios.
pub fn verify_lemma21(ctx: &DecompositionContext, k_max: u64) -> Result<(Lemma21Report, Vec<f64>)> {
    if k_max < 1 {
        return invalid("k_max must be at least 1");
    }
    let ratios: Vec<f64> = ctx
        .phi_hat_sweep(k_max)
        .into_iter()
        .map(|v| v * ctx.scale)
        .collect();
    let (idx, sup) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    Ok((
        Lemma21Report {
            scale: ctx.scale,
            k_max,
            sup_ratio: sup,
            argmax: idx as u64 + 1,
            prime_count: ctx.primes.len(),
        },
        ratios,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiHat0Row {
    #[serde(rename = "Q")]
    pub scale: f64,
    pub prime_count: usize,
    pub phi_hat0: f64,
    /// `Φ̂(0)·ln Q / (Fφ(0)·ln 3)`
    pub ratio: f64,
}

/// `Φ̂(0)·ln Q / (Fφ(0)·ln 3)` for each `Q`, which tends to 1 by Mertens' theorem.
pub fn verify_phihat0_asymptotic(scales: &[f64]) -> Result<Vec<PhiHat0Row>> {
    if scales.is_empty() {
        return invalid("empty Q list");
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("Q list must be increasing");
    }
    if scales[0] < 1e3 {
        return invalid("Q list must start at 1000 or above");
    }
    let bump = BumpSpec::STANDARD;
    let fphi0 = bump.fourier(0.0).re;
    scales
        .iter()
        .map(|&scale| {
            let primes = primes_in_range(scale.ceil() as u64, (3.0 * scale).floor() as u64)?.primes;
            let phi_hat0 = primes
                .iter()
                .map(|&q| (q - 1) as f64 / (q * q) as f64)
                .sum::<f64>()
                * fphi0;
            Ok(PhiHat0Row {
                scale,
                prime_count: primes.len(),
                phi_hat0,
                ratio: phi_hat0 * scale.ln() / (fphi0 * 3f64.ln()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma22Report {
    #[serde(rename = "Q")]
    pub scale: f64,
    pub band: (u64, u64),
    pub n2_window: (i128, i128),
    /// `max |K̂_{2,Q}(n1, n2)|` over the band and window.
    pub sup: f64,
    pub argmax: (i64, i128),
    /// `n2 − n1^d` at the maximizer.
    pub offset: i128,
    /// `sup · Q / ln Q`
    pub ratio: f64,
    /// Smallest prime of the comb dividing the maximizing offset, if any.
    pub dividing_prime: Option<u64>,
    pub prime_count: usize,
}

/// Closed-form sweep of `|K̂_{2,Q}|` over `1 ≤ n1 ≤ N`, `n2 ∈ [lo, hi]`.
pub fn verify_lemma22(
    ctx: &DecompositionContext,
    n2_window: (i128, i128),
) -> Result<Lemma22Report> {
    let (lo, hi) = n2_window;
    if hi < lo {
        return invalid("empty n2 window");
    }
    let d = ctx.params.degree();
    let n = ctx.params.len();
    let mut best = (0.0f64, (1i64, (1i128).pow(d)));
    let mut offsets: Vec<i64> = Vec::new();
    for n1 in 1..=n as i64 {
        let curve = (n1 as i128).pow(d);
        for n2 in lo..=hi {
            if n2 != curve {
                offsets.push(
                    i64::try_from(n2 - curve)
                        .map_err(|_| Error::InvalidInput("offset overflow".into()))?,
                );
            }
        }
    }
    offsets.sort_unstable();
    offsets.dedup();
    let mags: HashMap<i64, f64> = offsets
        .par_iter()
        .map(|&k| (k, ctx.phi_hat(k).norm() / ctx.phi_hat0))
        .collect();
    for n1 in 1..=n as i64 {
        let curve = (n1 as i128).pow(d);
        for n2 in lo..=hi {
            if n2 == curve {
                continue;
            }
            let v = mags[&((n2 - curve) as i64)];
            if v > best.0 {
                best = (v, (n1, n2));
            }
        }
    }
    let (sup, (n1, n2)) = best;
    let offset = n2 - (n1 as i128).pow(d);
    let dividing_prime = ctx
        .primes
        .iter()
        .copied()
        .find(|&q| offset != 0 && offset.unsigned_abs().is_multiple_of(q as u128));
    Ok(Lemma22Report {
        scale: ctx.scale,
        band: (1, n),
        n2_window,
        sup,
        argmax: (n1, n2),
        offset,
        ratio: sup * ctx.scale / ctx.scale.ln(),
        dividing_prime,
        prime_count: ctx.primes.len(),
    })
}

/// `Q` with `Q^{1/d} = N^{-ε²} λ / 100`, the scale paired with a level `λ`.
pub fn scale_for_level(params: KernelParams, level: f64, epsilon: f64) -> f64 {
    let n = params.len() as f64;
    (n.powf(-epsilon * epsilon) * level / 100.0).powi(params.degree() as i32)
}

/// Direct integration of comb Fourier data over the supports of `Φ`,
/// independent of the closed form and of `Fφ`.
pub mod numeric {
    use super::*;
    use crate::quad::integrate;

    const SUPPORT_TOL: f64 = 1e-15;

    /// Support intervals `[a/q + lo/q², a/q + hi/q²]` of the comb, tagged with `q`.
    pub fn support_intervals(ctx: &DecompositionContext) -> Vec<(u64, f64, f64)> {
        let b = ctx.bump();
        let mut out = Vec::new();
        for &q in ctx.primes() {
            let qf = q as f64;
            for a in 1..q {
                let base = a as f64 / qf;
                out.push((q, base + b.lo / (qf * qf), base + b.hi / (qf * qf)));
            }
        }
        out
    }

    /// `∫_{[0,1)} Φ(t) e(−kt) dt` summed interval by interval.
    pub fn phi_hat(ctx: &DecompositionContext, k: i64) -> Complex64 {
        let b = ctx.bump();
        support_intervals(ctx)
            .into_iter()
            .map(|(q, lo, hi)| {
                let qf = q as f64;
                let a = (lo * qf).floor();
                integrate(
                    |t| turn(-(k as f64) * t) * b.eval(qf * (qf * t - a)),
                    lo,
                    hi,
                    SUPPORT_TOL,
                )
                .value
            })
            .sum()
    }

    /// Numerical `K̂_{2,Q}(n1, n2)` with its Richardson-style consistency gap.
    ///
    /// The x-integral and the smooth part `∫ K_N e(−n1x − n2t)` are trigonometric
    /// polynomials and are averaged on exact grids (checked at two sizes); the
    /// comb part is integrated adaptively on each support interval, and `Φ̂(0)`
    /// is itself integrated from the supports.
    pub fn k2q_hat(ctx: &DecompositionContext, n1: i64, n2: i128) -> (Complex64, f64) {
        let params = ctx.params();
        let b = ctx.bump();
        let n = params.len() as i128;
        let mx = (2 * (n + n1.unsigned_abs() as i128) + 1) as u64;
        let g = |t: f64| -> Complex64 {
            let tp = TorusPoint::new(t).expect("finite");
            (0..mx)
                .map(|j| {
                    let x = crate::exp_sum::RationalPhase::new(j as i128, mx).expect("mx > 0");
                    eval_kernel(params, tp, x) * turn(-(n1 as f64) * j as f64 / mx as f64)
                })
                .sum::<Complex64>()
                / mx as f64
        };
        let smooth = |mt: u64| -> Complex64 {
            (0..mt)
                .map(|k| {
                    let t = k as f64 / mt as f64;
                    g(t) * turn(-((n2 % mt as i128) as f64) * k as f64 / mt as f64)
                })
                .sum::<Complex64>()
                / mt as f64
        };
        let span = params.top_frequency() as i128 + n2.abs();
        let mt = (span + 2) as u64;
        let coarse = smooth(mt);
        let fine = smooth(2 * mt + 1);
        let mut comb = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for (q, lo, hi) in support_intervals(ctx) {
            let qf = q as f64;
            let a = (lo * qf).floor();
            let w = |t: f64| b.eval(qf * (qf * t - a));
            comb += integrate(
                |t| g(t) * turn(-(n2 as f64) * t) * w(t),
                lo,
                hi,
                SUPPORT_TOL,
            )
            .value;
            mass += integrate(|t| Complex64::new(w(t), 0.0), lo, hi, SUPPORT_TOL)
                .value
                .re;
        }
        let value = fine - comb / mass;
        (value, (fine - coarse).norm())
    }
}
