//! Weyl kernel `K_N(x, t) = Σ_{n=1}^N e(t·n^d + x·n)` and general polynomial
//! exponential sums.
//!
//! All phases are carried in turns (fractions of a full rotation) and reduced
//! mod 1 before the factor 2π is applied. Rational phases `a/q` are reduced
//! exactly with modular exponentiation, which keeps the sums accurate for
//! denominators far beyond the range where `t·n^d` is representable in binary64.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, Error, Result};
use crate::numeric::{frac, pow_mod, turn, ComplexSum};

/// Degree `d ≥ 2` and length `N ≥ 1` of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelParams {
    degree: u32,
    len: u64,
}

impl KernelParams {
    pub fn new(degree: u32, len: u64) -> Result<Self> {
        if degree < 2 {
            return invalid(format!("degree must be at least 2, got {degree}"));
        }
        if len < 1 {
            return invalid("length N must be at least 1");
        }
        if (len as u128).checked_pow(degree).is_none() {
            return Err(Error::ResourceGuard {
                what: "N^d",
                size: u128::MAX,
                limit: u128::MAX,
            });
        }
        Ok(Self { degree, len })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    // N ≥ 1 by construction, so there is no `is_empty`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.len
    }

    /// `N^d`, the largest t-frequency of the kernel.
    pub fn top_frequency(&self) -> u128 {
        (self.len as u128).pow(self.degree)
    }
}

/// A point of the circle `ℝ/ℤ`.
///
/// Held internally as the representative in `[-1/2, 1/2)`, which is exact to
/// compute from any finite input and exact to negate; [`TorusPoint::value`]
/// reports the representative in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TorusPoint(f64);

impl TorusPoint {
    pub fn new(value: f64) -> Result<Self> {
        Ok(Self::centered(require_finite("torus coordinate", value)?))
    }

    #[inline]
    fn centered(v: f64) -> Self {
        let mut r = v - v.round();
        if r >= 0.5 {
            r -= 1.0;
        }
        Self(r)
    }

    pub const ZERO: TorusPoint = TorusPoint(0.0);

    /// Representative in `[0, 1)`.
    pub fn value(self) -> f64 {
        frac(self.0)
    }

    /// Representative in `[-1/2, 1/2)`.
    pub fn signed(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TorusPoint {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TorusPoint> for f64 {
    fn from(p: TorusPoint) -> f64 {
        p.0
    }
}

/// Exact phase `a/q` with `0 ≤ a < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPhase {
    a: u64,
    q: u64,
}

impl RationalPhase {
    /// Any integer numerator is accepted and reduced mod `q`; the fraction
    /// itself is not required to be in lowest terms (grid phases `j/M`).
    pub fn new(a: i128, q: u64) -> Result<Self> {
        if q == 0 {
            return invalid("denominator must be positive");
        }
        let a = a.rem_euclid(q as i128) as u64;
        Ok(Self { a, q })
    }

    /// Like [`RationalPhase::new`] but insists on `gcd(a, q) = 1`.
    pub fn reduced(a: i128, q: u64) -> Result<Self> {
        let p = Self::new(a, q)?;
        if gcd(p.a, p.q) != 1 {
            return invalid(format!("{a}/{q} is not in lowest terms"));
        }
        Ok(p)
    }

    pub fn numerator(&self) -> u64 {
        self.a
    }

    pub fn denominator(&self) -> u64 {
        self.q
    }

    pub fn value(&self) -> f64 {
        self.a as f64 / self.q as f64
    }

    pub fn neg(&self) -> Self {
        Self {
            a: (self.q - self.a) % self.q,
            q: self.q,
        }
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A coefficient of a phase polynomial: a real point of the circle or an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Phase {
    Real(TorusPoint),
    Rational(RationalPhase),
}

impl From<TorusPoint> for Phase {
    fn from(p: TorusPoint) -> Self {
        Phase::Real(p)
    }
}

impl From<RationalPhase> for Phase {
    fn from(p: RationalPhase) -> Self {
        Phase::Rational(p)
    }
}

impl Phase {
    pub fn value(&self) -> f64 {
        match self {
            Phase::Real(p) => p.value(),
            Phase::Rational(r) => r.value(),
        }
    }

    pub fn neg(&self) -> Phase {
        match self {
            Phase::Real(p) => Phase::Real(TorusPoint::centered(-p.0)),
            Phase::Rational(r) => Phase::Rational(r.neg()),
        }
    }

    /// `frac(self · n^k)` in turns.
    ///
    /// The real path is accurate only while `|self|·n^k < 2^52`; the rational
    /// path is exact up to the final division.
    #[inline]
    pub fn turns_at(&self, n: u64, k: u32) -> f64 {
        match self {
            Phase::Real(p) => {
                if p.0 == 0.0 {
                    0.0
                } else {
                    frac(p.0 * (n as f64).powi(k as i32))
                }
            }
            Phase::Rational(r) => {
                if r.a == 0 {
                    return 0.0;
                }
                let q = r.q;
                let m = pow_mod(n % q, k, q) as u128;
                ((r.a as u128 * m) % q as u128) as f64 / q as f64
            }
        }
    }
}

/// `K_N(x, t)` by direct summation.
pub fn eval_kernel(params: KernelParams, t: impl Into<Phase>, x: impl Into<Phase>) -> Complex64 {
    let t = t.into();
    let x = x.into();
    let mut acc = ComplexSum::new();
    for n in 1..=params.len {
        acc.add(turn(t.turns_at(n, params.degree) + x.turns_at(n, 1)));
    }
    acc.value()
}

/// Reusable evaluator of `x ↦ K_N(x, t)` on the grid `x_j = j/M`.
///
/// The coefficient sequence `c_n = e(t·n^d)` is zero-padded to length `M` and
/// passed through one inverse FFT.
#[derive(Clone)]
pub struct XGridEvaluator {
    params: KernelParams,
    fft: Arc<dyn Fft<f64>>,
    size: usize,
}

impl std::fmt::Debug for XGridEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("XGridEvaluator")
            .field("params", &self.params)
            .field("size", &self.size)
            .finish()
    }
}

impl XGridEvaluator {
    pub fn new(params: KernelParams, size: usize) -> Result<Self> {
        if (size as u128) < params.len as u128 + 1 {
            return invalid(format!(
                "x-grid size {size} must be at least N+1 = {} to avoid aliasing",
                params.len + 1
            ));
        }
        let fft = FftPlanner::new().plan_fft_inverse(size);
        Ok(Self { params, fft, size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Fill `out` (resized to `M`) with `K_N(j/M, t)`.
    pub fn evaluate_into(&self, t: Phase, out: &mut Vec<Complex64>) {
        out.clear();
        out.resize(self.size, Complex64::new(0.0, 0.0));
        for n in 1..=self.params.len {
            out[n as usize] = turn(t.turns_at(n, self.params.degree));
        }
        self.fft.process(out);
    }

    pub fn evaluate(&self, t: Phase) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.size);
        self.evaluate_into(t, &mut out);
        out
    }
}

/// `K_N(j/M, t)` for `j = 0..M`. Requires `M ≥ N + 1`.
pub fn eval_kernel_x_grid(
    params: KernelParams,
    t: impl Into<Phase>,
    size: usize,
) -> Result<Vec<Complex64>> {
    Ok(XGridEvaluator::new(params, size)?.evaluate(t.into()))
}

/// Coarse grid size and refinement tolerance for [`max_modulus_over_x`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxSearch {
    pub grid: usize,
    pub tol: f64,
}

impl MaxSearch {
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn for_params(params: KernelParams) -> Self {
        Self {
            grid: (4 * params.len as usize).max(256),
            tol: Self::DEFAULT_TOL,
        }
    }
}

/// Location and value of `max_x |K_N(x, t)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusMax {
    pub x_star: TorusPoint,
    pub modulus: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize `|K_N(·, t)|` over the circle: FFT on a coarse grid, then
/// golden-section refinement of `|K_N|²` inside the winning cell.
pub fn max_modulus_over_x(
    params: KernelParams,
    t: impl Into<Phase>,
    search: MaxSearch,
) -> Result<ModulusMax> {
    let t = t.into();
    let min_grid = 4u128 * params.len as u128;
    if (search.grid as u128) < min_grid {
        return invalid(format!(
            "coarse grid {} must be at least 4N = {min_grid}",
            search.grid
        ));
    }
    if search.tol.is_nan() || search.tol <= 0.0 {
        return invalid("refinement tolerance must be positive");
    }
    let values = eval_kernel_x_grid(params, t, search.grid)?;
    let sq: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
    let top = sq.iter().copied().fold(0.0, f64::max);
    // first index within rounding of the maximum: ties go to the smallest x
    let j = sq
        .iter()
        .position(|&v| v >= top * (1.0 - 1e-12))
        .unwrap_or(0);
    let grid_x = j as f64 / search.grid as f64;
    let grid_val = sq[j];

    let h = 1.0 / search.grid as f64;
    let f = |x: f64| eval_kernel(params, t, Phase::Real(TorusPoint::centered(x))).norm_sqr();
    let (mut lo, mut hi) = (grid_x - h, grid_x + h);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > search.tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let x_ref = 0.5 * (lo + hi);
    let f_ref = f(x_ref);
    let (x, v) = if f_ref > grid_val {
        (frac(x_ref), f_ref)
    } else {
        (grid_x, grid_val)
    };
    Ok(ModulusMax {
        x_star: TorusPoint::centered(x),
        modulus: v.sqrt(),
    })
}

/// `P(n) = Σ_j α_j n^j`, coefficients `α_1..α_d` stored mod 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    coefficients: Vec<Phase>,
}

impl PolynomialSpec {
    pub fn new(coefficients: Vec<Phase>) -> Result<Self> {
        if coefficients.is_empty() {
            return invalid("polynomial needs at least one coefficient");
        }
        Ok(Self { coefficients })
    }

    pub fn from_reals(alphas: &[f64]) -> Result<Self> {
        let coefficients = alphas
            .iter()
            .map(|&a| TorusPoint::new(a).map(Phase::Real))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Phase] {
        &self.coefficients
    }

    pub fn turns_at(&self, n: u64) -> f64 {
        let mut acc = 0.0;
        for (j, c) in self.coefficients.iter().enumerate() {
            acc = frac(acc + c.turns_at(n, j as u32 + 1));
        }
        acc
    }
}

/// `Σ_{n=1}^N e(P(n))` with compensated accumulation.
pub fn eval_poly_sum(spec: &PolynomialSpec, len: u64) -> Complex64 {
    let mut acc = ComplexSum::new();
    for n in 1..=len {
        acc.add(turn(spec.turns_at(n)));
    }
    acc.value()
}
