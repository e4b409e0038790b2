//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

// Nodes and weights keep their published digits.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4096;
const RELATIVE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

/// Integrate `f` over `[a, b]` until the summed Kronrod–Gauss error estimate
/// drops below `abs_tol` (or the interval budget is spent).
pub fn integrate<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> QuadResult {
    if a == b {
        return QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
        };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        // below ~10 ulp of the running value no further progress is possible
        let magnitude: f64 = pieces.iter().map(|p| p.2.norm()).sum();
        if total_err <= abs_tol.max(RELATIVE_FLOOR * magnitude) || pieces.len() >= MAX_INTERVALS {
            break;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // cannot split further in binary64
            pieces.push((lo, hi, gk15(&mut f, lo, hi).0, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // sum in positional order so the result does not depend on refinement history
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = pieces
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.2);
    QuadResult {
        value,
        error: pieces.iter().map(|p| p.3).sum(),
        intervals: pieces.len(),
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    let r = integrate(|u| Complex64::new(f(u), 0.0), a, b, abs_tol);
    (r.value.re, r.error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate_real(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        // ∫_0^1 e^{2πi·3x} dx = 0; ∫_0^1 e^{-x} = 1 - 1/e
        let r = integrate(|x| Complex64::cis(2.0 * PI * 3.0 * x), 0.0, 1.0, 1e-13);
        assert!(r.value.norm() < 1e-12);
        let (v, _) = integrate_real(|x| (-x).exp(), 0.0, 1.0, 1e-14);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn flat_bump_converges() {
        let (v, e) = integrate_real(
            |x| {
                if x <= -1.0 || x >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - x * x)).exp()
                }
            },
            -1.0,
            1.0,
            1e-13,
        );
        // reference value of ∫ exp(-1/(1-x²)) over (-1, 1)
        assert!((v - 0.443_993_816_168_079_4).abs() < 1e-12, "{v}");
        assert!(e < 1e-13);
    }
}
