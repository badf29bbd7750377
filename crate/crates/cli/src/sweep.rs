//! `klift sweep`: map residuals and the integrability denominator over a
//! parameter range, as CSV.
//!
//! Two row shapes exist. Sweeping `t` tabulates the coefficient algebra
//! itself (denominator, integrable b's, structure and consistency residuals)
//! without any sampling. Sweeping `c` or a curve parameter patches the
//! configuration and runs the full suite per value.

use std::fs;
use std::io::Write;
use std::path::Path;

use klift::config::{BMode, RunConfig, CHECK_NAMES};
use klift::lift_algebra::{
    complete_acs, integrability_consistency_with, integrable_b, integrable_denominator,
};
use klift::scalar_curves::ScalarCurve;
use klift::verifier::{run_suite_with_threads, sample_for_config};

use crate::{load_config, thread_cap, EXIT_CONFIG, EXIT_OK};

pub fn cmd_sweep(config_path: &Path, param: &str, range: &str, out: Option<&Path>) -> u8 {
    let config = match load_config(config_path) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let values = match parse_range(range) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let rows = if param == "t" {
        t_sweep(&config, &values)
    } else {
        suite_sweep(&config, param, &values)
    };
    match rows {
        Ok(csv) => match out {
            Some(path) => {
                if let Err(e) = fs::write(path, csv.as_bytes()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
                EXIT_OK
            }
            None => {
                print!("{csv}");
                let _ = std::io::stdout().flush();
                EXIT_OK
            }
        },
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
    }
}

/// Parses an inclusive `start:stop:step` range.
fn parse_range(range: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range {range:?} must have the form start:stop:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("cannot parse range {range:?}: {e}"))?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step == 0.0 || !step.is_finite() {
        return Err("range step must be a nonzero finite real".into());
    }
    if (stop - start) * step < 0.0 {
        return Err(format!(
            "range step {step} walks away from stop {stop} (start {start})"
        ));
    }
    let mut values = Vec::new();
    let slack = step.abs() * 1e-9;
    let mut i = 0usize;
    loop {
        let v = start + step * i as f64;
        if (step > 0.0 && v > stop + slack) || (step < 0.0 && v < stop - slack) {
            break;
        }
        values.push(v);
        i += 1;
        if i > 1_000_000 {
            return Err("range produces more than one million values".into());
        }
    }
    Ok(values)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

/// Coefficient-algebra table along the energy density.
fn t_sweep(config: &RunConfig<f64>, values: &[f64]) -> Result<String, String> {
    let a1 = &config.coefficients.a1;
    let a3 = &config.coefficients.a3;
    let c = config.manifold.c;
    let mut csv = String::from(
        "t,denominator,b1,b2,b3,structure_res1,structure_res2,consistency_max,skipped\n",
    );
    for &t in values {
        if t < 0.0 {
            return Err(format!("t sweep requires nonnegative values, got {t}"));
        }
        let d = integrable_denominator(a1, a3, c, t).map_err(|e| e.to_string())?;
        let skip_row = |csv: &mut String| {
            csv.push_str(&format!("{t},{d:.9e},,,,,,,1\n"));
        };
        if d.abs() <= 1e-6 {
            skip_row(&mut csv);
            continue;
        }
        let (b1, b2, b3) = match &config.coefficients.b_mode {
            BMode::Integrable => match integrable_b(a1, a3, c, t) {
                Ok(ib) => (ib.b1, ib.b2, ib.b3),
                Err(_) => {
                    skip_row(&mut csv);
                    continue;
                }
            },
            BMode::Explicit { b1, b3 } => {
                let jb1 = b1.eval_jet(t).map_err(|e| e.to_string())?;
                let jb3 = b3.eval_jet(t).map_err(|e| e.to_string())?;
                let lc = match complete_acs(
                    a1.eval_jet(t).map_err(|e| e.to_string())?.value,
                    a3.eval_jet(t).map_err(|e| e.to_string())?.value,
                    jb1.value,
                    jb3.value,
                    t,
                ) {
                    Ok(lc) => lc,
                    Err(_) => {
                        skip_row(&mut csv);
                        continue;
                    }
                };
                (lc.b1, lc.b2, lc.b3)
            }
        };
        let lc = match complete_acs(
            a1.eval_jet(t).map_err(|e| e.to_string())?.value,
            a3.eval_jet(t).map_err(|e| e.to_string())?.value,
            b1,
            b3,
            t,
        ) {
            Ok(lc) => lc,
            Err(_) => {
                skip_row(&mut csv);
                continue;
            }
        };
        let (r1, r2) = lc.structure_residuals();
        let cons = integrability_consistency_with(a1, a3, c, t, b1, b2, b3)
            .map(|r| r.max_applicable())
            .ok();
        csv.push_str(&format!(
            "{t},{d:.9e},{b1:.9e},{b2:.9e},{b3:.9e},{r1:.3e},{r2:.3e},{},0\n",
            fmt_opt(cons)
        ));
    }
    Ok(csv)
}

/// Applies a swept value to the configuration: the curvature constant or one
/// curve parameter addressed as `<curve>.<index|A|k|value>`.
fn patch_config(config: &RunConfig<f64>, param: &str, value: f64) -> Result<RunConfig<f64>, String> {
    let mut patched = config.clone();
    if param == "c" {
        patched.manifold.c = value;
        return Ok(patched);
    }
    let (curve_name, field) = param
        .split_once('.')
        .ok_or_else(|| format!("unknown sweep parameter {param:?} (expected t, c or curve.field)"))?;
    let curve: &mut ScalarCurve<f64> = match curve_name {
        "a1" => &mut patched.coefficients.a1,
        "a3" => &mut patched.coefficients.a3,
        "lambda" => &mut patched.metric.lambda,
        "mu" => match &mut patched.metric.mu {
            klift::config::MuPolicy::Curve(c) => c,
            klift::config::MuPolicy::Kahler => {
                return Err("mu.* sweeps require an explicit mu curve in the config".into())
            }
        },
        other => return Err(format!("unknown curve {other:?} in sweep parameter")),
    };
    match (curve, field) {
        (ScalarCurve::Polynomial { coeffs }, idx) => {
            let i: usize = idx
                .parse()
                .map_err(|_| format!("polynomial coefficient index {idx:?} is not a number"))?;
            if i >= coeffs.len() {
                coeffs.resize(i + 1, 0.0);
            }
            coeffs[i] = value;
        }
        (ScalarCurve::Exponential { amplitude, .. }, "A") => *amplitude = value,
        (ScalarCurve::Exponential { k, .. }, "k") => *k = value,
        (ScalarCurve::Constant { value: v }, "value") => *v = value,
        (_, field) => {
            return Err(format!(
                "field {field:?} does not exist on curve {curve_name:?}"
            ))
        }
    }
    Ok(patched)
}

/// Full-suite rows: one verification run per swept value.
fn suite_sweep(config: &RunConfig<f64>, param: &str, values: &[f64]) -> Result<String, String> {
    let mut csv = format!(
        "{param},denominator_at_tref,{},rejected,skipped_max\n",
        CHECK_NAMES.join(",")
    );
    let threads = thread_cap();
    for &value in values {
        let patched = patch_config(config, param, value)?;
        patched.validate().map_err(|e| e.to_string())?;
        // representative energy density: the p-ball boundary at the origin
        let t_ref = 0.5 * patched.sampling.p_radius * patched.sampling.p_radius;
        let d_ref = integrable_denominator(
            &patched.coefficients.a1,
            &patched.coefficients.a3,
            patched.manifold.c,
            t_ref,
        )
        .ok();
        let rejected = sample_for_config(&patched).map_err(|e| e.to_string())?.rejected;
        let report = run_suite_with_threads(&patched, threads).map_err(|e| e.to_string())?;
        let mut cells = Vec::with_capacity(CHECK_NAMES.len());
        let mut skipped_max = 0usize;
        for name in CHECK_NAMES {
            match report.check(name) {
                Some(check) => {
                    cells.push(format!("{:.9e}", check.max_residual));
                    skipped_max = skipped_max.max(check.skipped_points);
                }
                None => cells.push(String::new()),
            }
        }
        csv.push_str(&format!(
            "{value},{},{},{rejected},{skipped_max}\n",
            fmt_opt(d_ref),
            cells.join(",")
        ));
    }
    Ok(csv)
}
