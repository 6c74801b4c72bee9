//! Subcommand orchestration and artifact formatting.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::invariants::{run_invariant_suite, InvariantReport};
use crate::nonlinear::{
    detect_cpa_thresholds, detect_multistability, log_amplitude_grid, trace_input_output,
};
use crate::oracle::{crosscheck_linear, CrossCheck};
use crate::polariton::{locate_cpa_points, polariton_frequencies, Channel};
use crate::spectra::{bandwidth_and_switch_time, efficiency_scan, sweep_spectrum, BandwidthResult, ScanAxis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Largest oracle deviation accepted by `validate` with the control off.
pub const VALIDATE_TOL_OFF: f64 = 1e-3;
/// Same with the control on; the dressed weak-drive limit is looser.
pub const VALIDATE_TOL_ON: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Spectrum,
    Polaritons,
    Efficiency,
    Bandwidth,
    Nonlinear,
    Validate,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Spectrum,
        Subcommand::Polaritons,
        Subcommand::Efficiency,
        Subcommand::Bandwidth,
        Subcommand::Nonlinear,
        Subcommand::Validate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Polaritons => "polaritons",
            Subcommand::Efficiency => "efficiency",
            Subcommand::Bandwidth => "bandwidth",
            Subcommand::Nonlinear => "nonlinear",
            Subcommand::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// One line of the human-readable summary. `status` is `Some(pass)` for
/// checks and `None` for plain information.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub text: String,
    pub status: Option<bool>,
}

impl ReportLine {
    fn info(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            status: None,
        }
    }

    fn check(text: impl Into<String>, pass: bool) -> Self {
        Self {
            text: text.into(),
            status: Some(pass),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub exit_code: i32,
    pub artifact: String,
    pub report: Vec<ReportLine>,
}

pub fn exit_code_for(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

/// Fixed-width scientific notation with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        String::new()
    }
}

fn csv_row(s: &mut String, fields: &[String]) {
    s.push_str(&fields.join(","));
    s.push('\n');
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact types serialize");
    s.push('\n');
    s
}

fn envelope(cfg: &RunConfig, cmd: Subcommand, result: serde_json::Value) -> String {
    to_json(&json!({
        "subcommand": cmd.as_str(),
        "params_snapshot": cfg,
        "result": result,
    }))
}

/// Runs `cmd` on a validated configuration. Numerical errors become exit
/// code 2 with an empty artifact.
pub fn run_subcommand(cmd: Subcommand, cfg: &RunConfig) -> RunOutput {
    if let Err(e) = cfg.validate() {
        return failure(e);
    }
    let out = match cmd {
        Subcommand::Spectrum => spectrum(cfg),
        Subcommand::Polaritons => polaritons(cfg),
        Subcommand::Efficiency => efficiency(cfg),
        Subcommand::Bandwidth => bandwidth(cfg),
        Subcommand::Nonlinear => nonlinear(cfg),
        Subcommand::Validate => validate(cfg),
    };
    out.unwrap_or_else(failure)
}

fn failure(e: Error) -> RunOutput {
    RunOutput {
        exit_code: exit_code_for(&e),
        artifact: String::new(),
        report: vec![ReportLine::check(format!("error: {e}"), false)],
    }
}

fn spectrum(cfg: &RunConfig) -> Result<RunOutput> {
    let s = sweep_spectrum(&cfg.system, &cfg.control, &cfg.sweep)?;
    let artifact = match cfg.output.format {
        OutputFormat::Csv => {
            let mut out = String::from("delta_p_over_gamma,i_t_over_i_in,i_cav_norm\n");
            for i in 0..s.grid.len() {
                csv_row(&mut out, &[fmt_num(s.grid[i]), fmt_num(s.i_t[i]), fmt_num(s.i_cav[i])]);
            }
            out
        }
        OutputFormat::Json => envelope(
            cfg,
            Subcommand::Spectrum,
            json!({
                "delta_p_over_gamma": s.grid,
                "i_t_over_i_in": s.i_t,
                "i_cav_norm": s.i_cav,
            }),
        ),
    };
    Ok(RunOutput {
        exit_code: EXIT_OK,
        artifact,
        report: vec![ReportLine::info(format!("{} spectrum points", s.grid.len()))],
    })
}

fn polaritons(cfg: &RunConfig) -> Result<RunOutput> {
    let pols = polariton_frequencies(&cfg.system)?;
    let s = sweep_spectrum(&cfg.system, &cfg.control, &cfg.sweep)?;
    let cpa = locate_cpa_points(&s, cfg.cpa_threshold)?;
    let artifact = match cfg.output.format {
        OutputFormat::Csv => {
            let mut out = String::from("kind,channel,delta_p_over_gamma,i_t_over_i_in\n");
            for (ch, f) in pols.iter() {
                csv_row(&mut out, &["polariton".into(), ch.as_str().into(), fmt_num(f), String::new()]);
            }
            for p in &cpa.cpa_points {
                csv_row(
                    &mut out,
                    &["cpa".into(), String::new(), fmt_num(p.delta_p), fmt_num(p.i_t_norm)],
                );
            }
            out
        }
        OutputFormat::Json => envelope(
            cfg,
            Subcommand::Polaritons,
            json!({
                "frequencies": pols.freqs,
                "channels": Channel::ALL.map(|c| json!({"channel": c, "frequency": pols.freq(c)})),
                "cpa_report": cpa,
            }),
        ),
    };
    let mut report: Vec<_> = pols
        .iter()
        .map(|(c, f)| ReportLine::info(format!("{:<8} polariton at Δp = {f:.6} Γ", c.as_str())))
        .collect();
    report.push(ReportLine::info(format!(
        "CPA criterion residual g√N + Δc = {:.3e}; {} CPA point(s) below {:e}",
        cpa.residual,
        cpa.cpa_points.len(),
        cfg.cpa_threshold
    )));
    Ok(RunOutput {
        exit_code: EXIT_OK,
        artifact,
        report,
    })
}

fn efficiency(cfg: &RunConfig) -> Result<RunOutput> {
    if cfg.efficiency.axis == ScanAxis::GColl && !cfg.control.is_on() {
        return Err(Error::constraint(
            "control.omega",
            "a g_coll efficiency scan needs a nonzero control field",
        ));
    }
    let values = cfg.efficiency.values();
    let scan = efficiency_scan(&cfg.system, &cfg.control, cfg.efficiency.axis, &values)?;
    let artifact = match cfg.output.format {
        OutputFormat::Csv => {
            let mut out = String::from("axis_value,channel,eta_t,eta_i\n");
            for (v, row) in scan.values.iter().zip(&scan.channels) {
                for ch in Channel::ALL {
                    let e = row[ch.index()];
                    csv_row(
                        &mut out,
                        &[fmt_num(*v), ch.as_str().into(), fmt_num(e.eta_t), fmt_num(e.eta_i)],
                    );
                }
            }
            out
        }
        OutputFormat::Json => envelope(cfg, Subcommand::Efficiency, json!(scan)),
    };
    Ok(RunOutput {
        exit_code: EXIT_OK,
        artifact,
        report: vec![ReportLine::info(format!(
            "{} {} value(s) × 3 channels",
            values.len(),
            scan.axis.as_str()
        ))],
    })
}

/// Bandwidth of each channel with its own control setting. A channel whose
/// width is undefined is reported as an error entry.
pub fn channel_bandwidths(cfg: &RunConfig) -> Result<Vec<(Channel, Result<BandwidthResult>)>> {
    let pols = polariton_frequencies(&cfg.system)?;
    let mut out = Vec::new();
    for ch in Channel::ALL {
        let i = ch.index();
        let delta = cfg.bandwidth.delta[i].unwrap_or(pols.freq(ch));
        let mut control = cfg.control.with_omega(cfg.bandwidth.omega[i]);
        control.delta = delta;
        let on = sweep_spectrum(&cfg.system, &control, &cfg.sweep)?;
        let off = sweep_spectrum(&cfg.system, &control.switched_off(), &cfg.sweep)?;
        out.push((ch, bandwidth_and_switch_time(&on, &off, pols.freq(ch))));
    }
    Ok(out)
}

fn bandwidth(cfg: &RunConfig) -> Result<RunOutput> {
    let results = channel_bandwidths(cfg)?;
    let mut report = Vec::new();
    let mut any_failed = false;
    for (ch, r) in &results {
        match r {
            Ok(b) => report.push(ReportLine::info(format!(
                "{:<8} 2δ = {:.4} Γ = {:.4} MHz, τ = {:.4} μs",
                ch.as_str(),
                b.two_delta_gamma,
                b.two_delta_mhz,
                b.switch_time_us
            ))),
            Err(e) => {
                any_failed = true;
                report.push(ReportLine::check(format!("{:<8} {e}", ch.as_str()), false));
            }
        }
    }
    let artifact = match cfg.output.format {
        OutputFormat::Csv => {
            let mut out = String::from("channel,i_max,i_min,two_delta_gamma,two_delta_mhz,switch_time_us\n");
            for (ch, r) in &results {
                let f = match r {
                    Ok(b) => [b.i_max, b.i_min, b.two_delta_gamma, b.two_delta_mhz, b.switch_time_us],
                    Err(_) => [f64::NAN; 5],
                };
                let mut row = vec![ch.as_str().to_string()];
                row.extend(f.iter().map(|v| fmt_num(*v)));
                csv_row(&mut out, &row);
            }
            out
        }
        OutputFormat::Json => {
            let entries: Vec<_> = results
                .iter()
                .map(|(ch, r)| match r {
                    Ok(b) => json!({"channel": ch, "result": b}),
                    Err(e) => json!({"channel": ch, "error": e.to_string()}),
                })
                .collect();
            envelope(cfg, Subcommand::Bandwidth, json!(entries))
        }
    };
    Ok(RunOutput {
        exit_code: if any_failed { EXIT_NUMERICAL } else { EXIT_OK },
        artifact,
        report,
    })
}

fn nonlinear(cfg: &RunConfig) -> Result<RunOutput> {
    let n = &cfg.nonlinear;
    let grid = log_amplitude_grid(n.a_min, n.a_max, n.points)?;
    let dp = cfg.nonlinear_delta_p();
    let branch = trace_input_output(&cfg.system, &cfg.control, dp, &grid)?;
    let thresholds = detect_cpa_thresholds(&branch, n.threshold)?;
    let windows = detect_multistability(&branch);
    let artifact = match cfg.output.format {
        OutputFormat::Csv => {
            let mut out = String::from("a_mag,i_in,i_t,slope_sign\n");
            for p in &branch.points {
                csv_row(
                    &mut out,
                    &[fmt_num(p.a_mag), fmt_num(p.i_in), fmt_num(p.i_t), p.slope_sign.to_string()],
                );
            }
            out
        }
        OutputFormat::Json => envelope(
            cfg,
            Subcommand::Nonlinear,
            json!({
                "delta_p": dp,
                "points": branch.points,
                "cpa_thresholds": thresholds,
                "multistable_intervals": windows,
            }),
        ),
    };
    let mut report = vec![ReportLine::info(format!(
        "{} branch points at Δp = {dp} Γ",
        branch.points.len()
    ))];
    for t in &thresholds {
        report.push(ReportLine::info(format!(
            "CPA threshold at I_in = {:.6e} (|a| = {:.6e}, I_T/I_in = {:.3e})",
            t.i_in, t.a_mag, t.ratio
        )));
    }
    for (lo, hi) in &windows {
        report.push(ReportLine::info(format!("multistable for I_in in [{lo:.6e}, {hi:.6e}]")));
    }
    Ok(RunOutput {
        exit_code: EXIT_OK,
        artifact,
        report,
    })
}

fn validation_report(cfg: &RunConfig) -> Result<(CrossCheck, f64, InvariantReport)> {
    let check = crosscheck_linear(
        &cfg.system,
        &cfg.control,
        &cfg.oracle_grid(),
        cfg.oracle.drive_scale,
        &cfg.integration(),
    )?;
    let tol = if cfg.control.is_on() {
        VALIDATE_TOL_ON
    } else {
        VALIDATE_TOL_OFF
    };
    let inv = run_invariant_suite(cfg.validate.seed, cfg.validate.draws);
    Ok((check, tol, inv))
}

fn validate(cfg: &RunConfig) -> Result<RunOutput> {
    let (check, tol, inv) = validation_report(cfg)?;
    let oracle_ok = check.max_rel_error < tol;
    let passed = oracle_ok && inv.all_passed();
    let mut report = vec![
        ReportLine::check(
            format!(
                "oracle cross-check: max relative error {:.3e} (limit {tol:e}) over {} points",
                check.max_rel_error,
                check.points.len()
            ),
            oracle_ok,
        ),
        ReportLine::info(format!(
            "oracle convergence: {} of {} points converged",
            check.points.iter().filter(|p| p.converged).count(),
            check.points.len()
        )),
    ];
    for c in &inv.checks {
        report.push(ReportLine::check(
            format!(
                "{}: {}/{} draws, worst {:.3} of tolerance {:e}",
                c.name,
                c.passed,
                c.passed + c.failed,
                c.worst,
                c.tolerance
            ),
            c.ok(),
        ));
    }
    let artifact = match cfg.output.format {
        OutputFormat::Csv => {
            let mut out = String::from("check,value,tolerance,passed\n");
            csv_row(
                &mut out,
                &[
                    "oracle_max_rel_error".into(),
                    fmt_num(check.max_rel_error),
                    fmt_num(tol),
                    oracle_ok.to_string(),
                ],
            );
            for c in &inv.checks {
                csv_row(
                    &mut out,
                    &[c.name.clone(), fmt_num(c.worst), fmt_num(c.tolerance), c.ok().to_string()],
                );
            }
            out
        }
        OutputFormat::Json => envelope(
            cfg,
            Subcommand::Validate,
            json!({
                "passed": passed,
                "max_rel_error": check.max_rel_error,
                "tolerance": tol,
                "crosscheck": check,
                "invariants": inv,
            }),
        ),
    };
    Ok(RunOutput {
        exit_code: if passed { EXIT_OK } else { EXIT_VALIDATION },
        artifact,
        report,
    })
}

/// Renders report lines, with ANSI colour unless `color` is false.
pub fn render_report(lines: &[ReportLine], color: bool) -> String {
    let mut s = String::new();
    for l in lines {
        let tag = match (l.status, color) {
            (None, _) => "",
            (Some(true), false) => "PASS ",
            (Some(false), false) => "FAIL ",
            (Some(true), true) => "\x1b[32mPASS\x1b[0m ",
            (Some(false), true) => "\x1b[31mFAIL\x1b[0m ",
        };
        let _ = writeln!(s, "{tag}{}", l.text);
    }
    s
}
