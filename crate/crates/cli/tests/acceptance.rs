//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_bigint::BigUint;
use rayon::prelude::*;
use weylkit::exp_sum::{
    eval_kernel_x_grid, max_modulus_over_x, KernelParams, MaxSearch, RationalPhase,
};
use weylkit::kernel_decomp::{
    numeric, verify_lemma21, verify_phihat0_asymptotic, DecompositionContext,
};
use weylkit::level_set::{
    chebyshev_check, duality_audit, level_profile, two_term_measure, EstimatorConfig,
};
use weylkit::mean_value::{brute_force_count, count_solutions, exponent_fit, quadrature_integer_p};
use weylkit::rational::primes_in_range;
use weylkit::weyl_bounds::{scan_conjecture1, PrimePolicy, ResiduePolicy, ScanConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn kp(d: u32, n: u64) -> KernelParams {
    KernelParams::new(d, n).unwrap()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 1. Sparse-convolution counts equal brute-force enumeration exactly.
fn oracle_equivalence() -> Check {
    let mut cases = Vec::new();
    for d in [2u32, 3] {
        for p in [1u32, 2] {
            for n in 1..=4u64 {
                cases.push((d, p, n));
            }
        }
        for n in 1..=2u64 {
            cases.push((d, 3, n));
        }
    }
    for &(d, p, n) in &cases {
        let fast = count_solutions(kp(d, n), p).unwrap().exact_value.unwrap();
        let slow = brute_force_count(kp(d, n), p).unwrap();
        if fast != slow {
            return Err(format!(
                "d={d} p={p} N={n}: count {fast} != brute force {slow}"
            ));
        }
    }
    Ok(format!("{} cases, exact equality", cases.len()))
}

/// 2. Nyquist quadrature matches the exact count within 1e-6 relative.
fn counting_equals_quadrature() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in [2u32, 3] {
        for p in [1u32, 2, 3] {
            for n in 1..=8u64 {
                let exact = count_solutions(kp(d, n), p).unwrap().float_value;
                let quad = quadrature_integer_p(kp(d, n), p).unwrap().float_value;
                let rel = (quad - exact).abs() / exact;
                worst = worst.max(rel);
                cases += 1;
                if rel > 1e-6 {
                    return Err(format!(
                        "d={d} p={p} N={n}: {quad} vs {exact} (rel {rel:e})"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "{cases} cases, worst relative error {worst:.2e} (tol 1e-6)"
    ))
}

/// 3. S(N,1) = N for N ≤ 100; S(2,2) = 6 and S(3,2) = 15 at d = 2.
fn known_values() -> Check {
    for n in 1..=100u64 {
        let s = count_solutions(kp(2, n), 1).unwrap().exact_value.unwrap();
        if s != BigUint::from(n) {
            return Err(format!("S({n},1) = {s}"));
        }
    }
    let s22 = count_solutions(kp(2, 2), 2).unwrap().exact_value.unwrap();
    let s32 = count_solutions(kp(2, 3), 2).unwrap().exact_value.unwrap();
    ensure(
        s22 == BigUint::from(6u32) && s32 == BigUint::from(15u32),
        format!("S(N,1)=N for N<=100; S(2,2)={s22}, S(3,2)={s32}"),
    )
}

/// 4. Slope of log S(N,3) vs log N at d = 2 lies in [2.7, 3.3].
fn hua_exponent() -> Check {
    let fit = exponent_fit(2, 3, &[8, 16, 32, 64]).unwrap();
    ensure(
        (2.7..=3.3).contains(&fit.slope),
        format!(
            "slope {:.4} in [2.7, 3.3] (target {})",
            fit.slope, fit.target
        ),
    )
}

/// 5. sup_k |Φ̂(k)|·Q grows by at most 2x across consecutive Q.
fn lemma21_non_growth() -> Check {
    let sups: Vec<(f64, f64)> = [50.0, 100.0, 200.0, 400.0]
        .into_iter()
        .map(|q| {
            let ctx = DecompositionContext::new(q, kp(2, 4)).unwrap();
            (q, verify_lemma21(&ctx, 10_000).unwrap().0.sup_ratio)
        })
        .collect();
    let detail = sups
        .iter()
        .map(|(q, s)| format!("Q={q}: {s:.4e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(sups.windows(2).all(|w| w[1].1 <= 2.0 * w[0].1), detail)
}

/// 6. Φ̂(0)·ln Q/(Fφ(0)·ln 3) ∈ [0.6, 1.6] and approaching 1.
fn phihat0_asymptotic() -> Check {
    let rows = verify_phihat0_asymptotic(&[1e3, 1e4, 1e5]).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let in_band = ratios.iter().all(|r| (0.6..=1.6).contains(r));
    let trending = ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    ensure(
        in_band && trending,
        format!("ratios {ratios:.4?} in [0.6, 1.6], |ratio - 1| nonincreasing: {trending}"),
    )
}

/// 7. Closed-form K̂_{2,Q} matches numerical coefficients within 1e-6; diagonal is exactly 0.
fn lemma22_closed_form() -> Check {
    let ctx = DecompositionContext::new(12.0, kp(2, 3)).unwrap();
    let pairs: Vec<(i64, i128)> = (1..=3i64)
        .flat_map(|n1| (0..=9i128).map(move |n2| (n1, n2)))
        .collect();
    let diffs: Vec<(i64, i128, f64, bool)> = pairs
        .par_iter()
        .map(|&(n1, n2)| {
            let closed = ctx.k2q_hat(n1, n2);
            let (num, _) = numeric::k2q_hat(&ctx, n1, n2);
            let diagonal = n2 == (n1 as i128).pow(2);
            let exact_zero = !diagonal || (closed.re == 0.0 && closed.im == 0.0);
            (n1, n2, (closed - num).norm(), exact_zero)
        })
        .collect();
    let worst = diffs.iter().map(|d| d.2).fold(0.0, f64::max);
    let diagonals = diffs.iter().filter(|d| d.1 == (d.0 as i128).pow(2)).count();
    let zeros = diffs.iter().all(|d| d.3);
    ensure(
        worst <= 1e-6 && zeros && diagonals == 3 && pairs.len() >= 20,
        format!(
            "{} pairs ({diagonals} diagonal, exactly zero: {zeros}), worst |closed - numeric| {worst:.2e} (tol 1e-6)",
            pairs.len()
        ),
    )
}

/// 8. N = 2 profile matches arccos(λ²/2 − 1)/π; Chebyshev holds at every entry.
fn level_set_closed_form() -> Check {
    let levels: Vec<f64> = (1..=10).map(|i| 0.19 * i as f64).collect();
    let grid = level_profile(kp(2, 2), &levels, &EstimatorConfig::grid(4096, 4096)).unwrap();
    let mc = level_profile(
        kp(2, 2),
        &levels,
        &EstimatorConfig::monte_carlo(1_000_000, 8),
    )
    .unwrap();
    let grid_err = grid
        .entries
        .iter()
        .map(|e| (e.measure - two_term_measure(e.lambda)).abs())
        .fold(0.0, f64::max);
    let mc_z = mc
        .entries
        .iter()
        .map(|e| {
            (e.measure - two_term_measure(e.lambda)).abs() / e.uncertainty.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    let cheb = chebyshev_check(&grid).passed && chebyshev_check(&mc).passed;
    ensure(
        grid_err <= 1e-3 && mc_z <= 3.0 && cheb,
        format!("grid max error {grid_err:.2e} (tol 1e-3), MC max {mc_z:.2} stderr (tol 3), Chebyshev: {cheb}"),
    )
}

/// 9. λ|G_λ| ≤ ∫_G|K_N| and the pairing identity within 1e-3 relative.
fn duality() -> Check {
    let mut worst = 0.0f64;
    for n in [2u64, 3] {
        for lambda in [0.5, 1.0, 1.5] {
            let r = duality_audit(kp(2, n), lambda, None).unwrap();
            let e = r.extrapolated;
            worst = worst.max((e.mid - e.rhs_re).abs() / e.mid);
            if !(r.lhs_le_mid && r.pairing_holds) {
                return Err(format!("N={n} λ={lambda}: {e:?}"));
            }
        }
    }
    Ok(format!("6 cases, worst pairing gap {worst:.2e} (tol 1e-3)"))
}

/// 10. FFT+refinement max equals the 2^14 dense-grid max within 1e-6; scans agree across parallelism.
fn scanner_consistency() -> Check {
    let params = kp(2, 4);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for q in primes_in_range(4, 16).unwrap().primes {
        for a in 1..q {
            let t = RationalPhase::new(a as i128, q).unwrap();
            let fast = max_modulus_over_x(params, t, MaxSearch::for_params(params))
                .unwrap()
                .modulus;
            let dense = eval_kernel_x_grid(params, t, 1 << 14)
                .unwrap()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            worst = worst.max((fast - dense).abs());
            pairs += 1;
        }
    }
    let config = |parallelism| ScanConfig {
        d: 2,
        n: 4,
        q_range: Some((4, 16)),
        primes: PrimePolicy::Exhaustive,
        residues: ResiduePolicy::Exhaustive,
        seed: 0,
        parallelism,
    };
    let one = scan_conjecture1(&config(1)).unwrap();
    let eight = scan_conjecture1(&config(8)).unwrap();
    let same = serde_json::to_string(&one.records).unwrap()
        == serde_json::to_string(&eight.records).unwrap();
    ensure(
        worst <= 1e-6 && same,
        format!(
            "{pairs} pairs, worst |refined - dense| {worst:.2e} (tol 1e-6), parallelism 1 vs 8 identical: {same}, max ratio {:.4}",
            one.summary.max_ratio
        ),
    )
}

fn run_cli(args: &[&str], out: &Path, parallelism: &str) -> (i32, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_weylkit"))
        .args(args)
        .args(["--parallelism", parallelism, "--out"])
        .arg(out)
        .output()
        .expect("run weylkit");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
    )
}

/// Everything but the timestamped header line.
fn payload_region(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    if path.extension().is_some_and(|e| e == "jsonl") {
        text.split_once('\n')
            .map(|(_, rest)| rest.to_string())
            .unwrap_or_default()
    } else {
        text
    }
}

fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                payload_region(p),
            )
        })
        .collect()
}

/// 11. Reruns with identical config and seed give byte-identical payloads.
fn reproducibility() -> Check {
    let runs: [&[&str]; 8] = [
        &[
            "sum-eval", "--d", "2", "--N", "5", "--t", "3/7", "--x", "0.25", "--record",
        ],
        &["scan-c1", "--N", "4", "--q-lo", "4", "--q-hi", "16"],
        &[
            "mean-value",
            "--N",
            "3",
            "--p",
            "2",
            "--method",
            "count,quadrature,monte_carlo",
            "--samples",
            "20000",
            "--seed",
            "5",
        ],
        &["exponent-fit", "--p", "2", "--N", "4,8,16"],
        &["kernel-verify", "--Q", "50,100", "--kmax", "2000"],
        &[
            "level-set",
            "--N",
            "4",
            "--lambda",
            "0.5,1,2,3",
            "--estimator",
            "monte_carlo",
            "--samples",
            "20000",
            "--seed",
            "9",
        ],
        &[
            "level-set",
            "--N",
            "16",
            "--lambda",
            "4,8",
            "--window",
            "5,15",
        ],
        &["audit-duality", "--N", "2", "--lambda", "0.5,1.5"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for args in runs {
        for (dir, threads) in dirs.iter().zip(["1", "8"]) {
            let (code, _) = run_cli(args, dir.path(), threads);
            if code != 0 {
                return Err(format!("`{}` exited with {code}", args.join(" ")));
            }
        }
    }
    let (a, b) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()));
    if a != b {
        let differing: Vec<&str> = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| x != y)
            .map(|(x, _)| x.0.as_str())
            .collect();
        return Err(format!("payloads differ: {differing:?}"));
    }
    let verify = |dir: &Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_weylkit"))
            .arg("verify-outputs")
            .arg(dir)
            .output()
            .unwrap();
        (
            out.status.code(),
            String::from_utf8_lossy(&out.stdout).replace(&dir.display().to_string(), "DIR"),
        )
    };
    let (va, vb) = (verify(dirs[0].path()), verify(dirs[1].path()));
    ensure(
        va == vb && va.0 == Some(0),
        format!(
            "{} subcommand runs, {} files byte-identical across reruns (parallelism 1 vs 8), verify-outputs agrees",
            runs.len() + 1,
            a.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("counting = quadrature", counting_equals_quadrature),
        ("known values", known_values),
        ("Hua-regime exponent", hua_exponent),
        ("comb transform non-growth", lemma21_non_growth),
        ("Φ̂(0) asymptotic", phihat0_asymptotic),
        ("K̂_2 closed form vs numeric", lemma22_closed_form),
        ("level-set closed form", level_set_closed_form),
        ("duality audit", duality),
        ("scanner consistency", scanner_consistency),
        ("determinism", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
