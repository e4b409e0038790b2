use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use weylkit::exp_sum::{eval_kernel, KernelParams, Phase, RationalPhase, TorusPoint};
use weylkit::kernel_decomp::{
    scale_for_level, verify_lemma21, verify_lemma22, verify_phihat0_asymptotic,
    DecompositionContext,
};
use weylkit::level_set::{
    chebyshev_check, conditional_decay_fit, duality_audit, large_level_threshold, level_profile,
    two_term_measure, EstimatorConfig, EstimatorKind,
};
use weylkit::mean_value::{
    count_solutions, exponent_fit, monte_carlo, quadrature_integer_p, MeanValueResult, Method,
};
use weylkit::weyl_bounds::{
    conjecture_window, scan_conjecture1, PrimePolicy, ResiduePolicy, ScanConfig,
};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{num, to_value, RunWriter};
use crate::svg::{downsample_max, Plot, Series, Style};

/// Relative tolerance between exact counting and quadrature.
pub const COUNT_QUADRATURE_TOL: f64 = 1e-6;
const SVG_POINTS: usize = 1500;

/// Parse `a/q` (exact rational) or a decimal (real phase).
pub fn parse_phase(text: &str) -> CliResult<Phase> {
    let text = text.trim();
    let bad = |why: &str| CliError::Usage(format!("malformed phase `{text}`: {why}"));
    if let Some((a, q)) = text.split_once('/') {
        let a: i128 = a
            .trim()
            .parse()
            .map_err(|_| bad("numerator is not an integer"))?;
        let q: u64 = q
            .trim()
            .parse()
            .map_err(|_| bad("denominator is not a positive integer"))?;
        if q == 0 {
            return Err(bad("zero denominator"));
        }
        Ok(RationalPhase::new(a, q)
            .map_err(|e| bad(&e.to_string()))?
            .into())
    } else {
        let v: f64 = text.parse().map_err(|_| bad("expected a/q or a decimal"))?;
        Ok(TorusPoint::new(v).map_err(|e| bad(&e.to_string()))?.into())
    }
}

fn params(d: u32, n: u64) -> CliResult<KernelParams> {
    Ok(KernelParams::new(d, n)?)
}

fn finish(writer: &RunWriter) {
    for path in writer.written() {
        println!("wrote {}", path.display());
    }
}

pub fn sum_eval(cfg: &SumEvalConfig, out: &Path) -> CliResult<()> {
    let t = parse_phase(&cfg.t)?;
    let x = parse_phase(&cfg.x)?;
    let z = eval_kernel(params(cfg.d, cfg.n)?, t, x);
    println!("re = {:.15}", z.re);
    println!("im = {:.15}", z.im);
    println!("modulus = {:.15}", z.norm());
    if cfg.record {
        let mut w = RunWriter::new("sum-eval", cfg, out)?;
        w.write_jsonl(&[json!({
            "d": cfg.d, "N": cfg.n, "t": cfg.t, "x": cfg.x,
            "re": z.re, "im": z.im, "modulus": z.norm(),
        })])?;
        finish(&w);
    }
    Ok(())
}

pub fn scan_c1(cfg: &ScanRunConfig, parallelism: usize, out: &Path) -> CliResult<()> {
    let window = conjecture_window(params(cfg.d, cfg.n)?);
    let scan = ScanConfig {
        d: cfg.d,
        n: cfg.n,
        q_range: Some((cfg.q_lo.unwrap_or(window.0), cfg.q_hi.unwrap_or(window.1))),
        primes: cfg
            .primes_per_block
            .map_or(PrimePolicy::Exhaustive, |per_block| {
                PrimePolicy::Reservoir { per_block }
            }),
        residues: cfg
            .residues_per_prime
            .map_or(ResiduePolicy::Exhaustive, |count| ResiduePolicy::Random {
                count,
            }),
        seed: cfg.seed,
        parallelism,
    };
    let result = scan_conjecture1(&scan)?;
    let mut w = RunWriter::new("scan-c1", cfg, out)?;
    let mut payloads: Vec<Value> = result.records.iter().map(to_value).collect();
    payloads.push(json!({ "summary": result.summary }));
    w.write_jsonl(&payloads)?;
    let rows: Vec<Vec<String>> = result
        .records
        .iter()
        .map(|r| {
            vec![
                r.q.to_string(),
                r.a.to_string(),
                num(r.max_modulus),
                num(r.ratio),
                num(r.x_star.value()),
                r.in_window.to_string(),
            ]
        })
        .collect();
    w.write_csv(
        &["q", "a", "max_modulus", "ratio", "x_star", "in_window"],
        &rows,
        &[],
    )?;
    w.write_svg(&Plot {
        title: format!("max_x |K_N(x, a/q)| / q^(1/d), d={}, N={}", cfg.d, cfg.n),
        x_label: "q".into(),
        y_label: "ratio".into(),
        log_x: false,
        log_y: false,
        series: vec![Series {
            name: "(q, a)".into(),
            points: result
                .records
                .iter()
                .map(|r| (r.q as f64, r.ratio))
                .collect(),
            style: Style::Markers,
        }],
    })?;
    let s = &result.summary;
    println!(
        "{} records over {} primes; max ratio {:.6} at a/q = {}/{}",
        s.records, s.primes, s.max_ratio, s.argmax_a, s.argmax_q
    );
    finish(&w);
    Ok(())
}

fn integer_p(p: f64) -> CliResult<u32> {
    if p >= 1.0 && p.fract() == 0.0 && p <= u32::MAX as f64 {
        Ok(p as u32)
    } else {
        Err(CliError::Usage(format!(
            "p = {p} must be a positive integer for count and quadrature"
        )))
    }
}

pub fn mean_value(cfg: &MeanValueConfig, out: &Path) -> CliResult<()> {
    if cfg.methods.is_empty() {
        return Err(CliError::Usage("no methods selected".into()));
    }
    let params = params(cfg.d, cfg.n)?;
    let mut results: Vec<MeanValueResult> = Vec::new();
    for &method in &cfg.methods {
        let r = match method {
            Method::Count => count_solutions(params, integer_p(cfg.p)?)?,
            Method::Quadrature => quadrature_integer_p(params, integer_p(cfg.p)?)?,
            Method::MonteCarlo => monte_carlo(params, cfg.p, cfg.samples, cfg.seed)?,
        };
        match (&r.exact_value, r.stderr) {
            (Some(v), _) => println!("{method}: {v}"),
            (None, Some(se)) => println!("{method}: {} ± {se}", r.float_value),
            (None, None) => println!("{method}: {}", r.float_value),
        }
        results.push(r);
    }
    let mut w = RunWriter::new("mean-value", cfg, out)?;
    w.write_jsonl(&results.iter().map(to_value).collect::<Vec<_>>())?;
    finish(&w);
    let find = |m: Method| results.iter().find(|r| r.method == m);
    if let (Some(c), Some(q)) = (find(Method::Count), find(Method::Quadrature)) {
        let diff = (c.float_value - q.float_value).abs();
        if diff > COUNT_QUADRATURE_TOL * c.float_value {
            return Err(CliError::Check(format!(
                "count {} and quadrature {} differ by {diff:e}",
                c.float_value, q.float_value
            )));
        }
    }
    Ok(())
}

pub fn exponent_fit_cmd(cfg: &ExponentFitConfig, out: &Path) -> CliResult<()> {
    let fit = exponent_fit(cfg.d, cfg.p, &cfg.n)?;
    let mut w = RunWriter::new("exponent-fit", cfg, out)?;
    w.write_jsonl(&[to_value(&fit)])?;
    let rows: Vec<Vec<String>> = fit
        .points
        .iter()
        .map(|p| vec![p.n.to_string(), p.s.to_string(), num(p.log_n), num(p.log_s)])
        .collect();
    let summary = format!(
        "summary slope={} intercept={} target={}",
        num(fit.slope),
        num(fit.intercept),
        fit.target
    );
    w.write_csv(&["N", "S", "logN", "logS"], &rows, &[summary])?;
    let measured: Vec<(f64, f64)> = fit
        .points
        .iter()
        .map(|p| (p.n as f64, p.log_s.exp()))
        .collect();
    let line: Vec<(f64, f64)> = fit
        .points
        .iter()
        .map(|p| (p.n as f64, (fit.intercept + fit.slope * p.log_n).exp()))
        .collect();
    w.write_svg(&Plot {
        title: format!("S(N, {}) for d = {}", cfg.p, cfg.d),
        x_label: "N".into(),
        y_label: "S(N, p)".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                name: "exact count".into(),
                points: measured,
                style: Style::Markers,
            },
            Series {
                name: format!("fit, slope {:.3}", fit.slope),
                points: line,
                style: Style::Line,
            },
        ],
    })?;
    println!("slope = {:.6} (target {})", fit.slope, fit.target);
    finish(&w);
    Ok(())
}

pub fn kernel_verify(cfg: &KernelVerifyConfig, out: &Path) -> CliResult<()> {
    if cfg.q.is_empty() {
        return Err(CliError::Usage("empty Q list".into()));
    }
    let params = params(cfg.d, cfg.n)?;
    let top = i64::try_from(params.top_frequency())
        .map_err(|_| CliError::Usage("N^d too large".into()))?;
    let (lo, hi) = cfg.n2_window.unwrap_or((0, 2 * top));
    let mut payloads = Vec::new();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut sups: Vec<(f64, f64)> = Vec::new();
    for &scale in &cfg.q {
        let ctx = DecompositionContext::new(scale, params)?;
        let (r21, ratios) = verify_lemma21(&ctx, cfg.kmax)?;
        let r22 = verify_lemma22(&ctx, (lo as i128, hi as i128))?;
        println!(
            "Q = {scale}: sup |Φ̂(k)|·Q = {:.6} at k = {}; sup |K̂_2| = {:.3e} (·Q/ln Q = {:.6})",
            r21.sup_ratio, r21.argmax, r22.sup, r22.ratio
        );
        sups.push((scale, r21.sup_ratio));
        let pts: Vec<(f64, f64)> = ratios
            .iter()
            .enumerate()
            .map(|(i, &r)| ((i + 1) as f64, r))
            .collect();
        rows.extend(
            pts.iter()
                .map(|&(k, r)| vec![num(scale), (k as u64).to_string(), num(r)]),
        );
        series.push(Series {
            name: format!("Q = {scale}"),
            points: downsample_max(&pts, SVG_POINTS),
            style: Style::Line,
        });
        payloads.push(json!({ "lemma21": r21 }));
        payloads.push(json!({ "lemma22": r22 }));
    }
    let mut large: Vec<f64> = cfg.q.iter().copied().filter(|&q| q >= 1e3).collect();
    large.sort_by(f64::total_cmp);
    large.dedup();
    if !large.is_empty() {
        for row in verify_phihat0_asymptotic(&large)? {
            println!(
                "Q = {}: Φ̂(0)·ln Q/(Fφ(0)·ln 3) = {:.6}",
                row.scale, row.ratio
            );
            payloads.push(json!({ "phi_hat0": row }));
        }
    }
    let mut w = RunWriter::new("kernel-verify", cfg, out)?;
    w.write_jsonl(&payloads)?;
    w.write_csv(&["Q", "k", "ratio"], &rows, &[])?;
    w.write_svg(&Plot {
        title: "|Φ̂(k)|·Q".into(),
        x_label: "k".into(),
        y_label: "|Φ̂(k)|·Q".into(),
        log_x: true,
        log_y: false,
        series,
    })?;
    finish(&w);
    sups.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in sups.windows(2) {
        let ((q0, s0), (q1, s1)) = (pair[0], pair[1]);
        if q1 > q0 && s1 > 2.0 * s0 {
            return Err(CliError::Check(format!(
                "sup |Φ̂(k)|·Q grew from {s0} at Q = {q0} to {s1} at Q = {q1}"
            )));
        }
    }
    Ok(())
}

pub fn level_set(cfg: &LevelSetConfig, out: &Path) -> CliResult<()> {
    let params = params(cfg.d, cfg.n)?;
    let est = EstimatorConfig {
        kind: cfg.estimator,
        mx: cfg.mx,
        mt: cfg.mt,
        samples: cfg.samples,
        seed: cfg.seed,
        grid_limit: cfg.grid_limit as u128,
    };
    let profile = level_profile(params, &cfg.lambdas, &est)?;
    let cheb = chebyshev_check(&profile);
    let fit = match cfg.window {
        Some(window) => Some(conditional_decay_fit(
            params,
            window,
            cfg.window_levels,
            &est,
        )?),
        None => None,
    };
    let regime = json!({
        "epsilon": cfg.epsilon,
        "large_level_threshold": large_level_threshold(cfg.n, cfg.epsilon),
        "scales": cfg.lambdas.iter().map(|&l| json!({"lambda": l, "Q": scale_for_level(params, l, cfg.epsilon)})).collect::<Vec<_>>(),
    });
    let mut payloads = vec![
        json!({ "profile": profile }),
        json!({ "chebyshev": cheb }),
        json!({ "regime": regime }),
    ];
    if let Some(fit) = &fit {
        println!(
            "decay slope = {:.4} (conditional reference {}, Chebyshev reference {})",
            fit.slope, fit.conditional_reference, fit.chebyshev_reference
        );
        payloads.push(json!({ "decay_fit": fit }));
    }
    let mut w = RunWriter::new("level-set", cfg, out)?;
    w.write_jsonl(&payloads)?;
    let name = |k: EstimatorKind| match k {
        EstimatorKind::Grid => "grid",
        EstimatorKind::MonteCarlo => "monte_carlo",
    };
    let rows: Vec<Vec<String>> = profile
        .entries
        .iter()
        .map(|e| {
            vec![
                num(e.lambda),
                num(e.measure),
                num(e.uncertainty),
                name(e.estimator).to_string(),
            ]
        })
        .collect();
    w.write_csv(
        &["lambda", "measure", "uncertainty", "estimator"],
        &rows,
        &[],
    )?;
    let mut sorted: Vec<(f64, f64)> = profile
        .entries
        .iter()
        .map(|e| (e.lambda, e.measure))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut series = vec![Series {
        name: "measured".into(),
        points: sorted.clone(),
        style: Style::Line,
    }];
    series.push(Series {
        name: "min(1, N/λ²)".into(),
        points: sorted
            .iter()
            .map(|&(l, _)| (l, (cfg.n as f64 / (l * l)).min(1.0)))
            .collect(),
        style: Style::Line,
    });
    if cfg.n == 2 {
        series.push(Series {
            name: "closed form".into(),
            points: sorted
                .iter()
                .map(|&(l, _)| (l, two_term_measure(l)))
                .collect(),
            style: Style::Markers,
        });
    }
    w.write_svg(&Plot {
        title: format!("|G_λ| for d = {}, N = {}", cfg.d, cfg.n),
        x_label: "λ".into(),
        y_label: "|G_λ|".into(),
        log_x: false,
        log_y: false,
        series,
    })?;
    for e in &profile.entries {
        println!(
            "λ = {}: |G_λ| = {} ± {}",
            e.lambda, e.measure, e.uncertainty
        );
    }
    finish(&w);
    if !cheb.passed {
        return Err(CliError::Check(format!(
            "Chebyshev bound violated: max λ²|G_λ|/N = {}",
            cheb.max_normalized
        )));
    }
    Ok(())
}

pub fn audit_duality(cfg: &AuditConfig, out: &Path) -> CliResult<()> {
    let params = params(cfg.d, cfg.n)?;
    let grid = match (cfg.mx, cfg.mt) {
        (None, None) => None,
        (mx, mt) => {
            let mx = mx.unwrap_or(4 * (2 * cfg.n + 1));
            let mt = match mt {
                Some(mt) => mt,
                None => u64::try_from(4 * (2 * params.top_frequency() + 1))
                    .map_err(|_| CliError::Usage("N^d too large".into()))?,
            };
            Some((mx, mt))
        }
    };
    let reports = cfg
        .lambdas
        .iter()
        .map(|&l| duality_audit(params, l, grid))
        .collect::<weylkit::Result<Vec<_>>>()?;
    let mut w = RunWriter::new("audit-duality", cfg, out)?;
    w.write_jsonl(&reports.iter().map(to_value).collect::<Vec<_>>())?;
    let mut failed = Vec::new();
    for r in &reports {
        let e = r.extrapolated;
        let ok = r.lhs_le_mid && r.pairing_holds;
        println!(
            "λ = {}: λ|G| = {:.6e}, ∫_G|K| = {:.6e}, Re Σ f̂ = {:.6e} [{}]",
            r.lambda,
            e.lhs,
            e.mid,
            e.rhs_re,
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failed.push(r.lambda);
        }
    }
    finish(&w);
    if !failed.is_empty() {
        return Err(CliError::Check(format!(
            "duality audit failed at λ = {failed:?}"
        )));
    }
    Ok(())
}

pub fn verify_outputs(paths: &[PathBuf]) -> CliResult<()> {
    let files = crate::verify::collect(paths)?;
    if files.is_empty() {
        return Err(CliError::Usage("no output files found".into()));
    }
    let mut bad = 0usize;
    for file in &files {
        match crate::verify::verify_file(file)? {
            Ok(hash) => println!("ok {} {}", &hash[..12], file.display()),
            Err(why) => {
                bad += 1;
                println!("FAIL {}: {why}", file.display());
            }
        }
    }
    if bad > 0 {
        return Err(CliError::Check(format!(
            "{bad} of {} files failed verification",
            files.len()
        )));
    }
    Ok(())
}
