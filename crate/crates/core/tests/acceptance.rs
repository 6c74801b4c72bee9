//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Lines tagged `info` are diagnostics
//! and do not count toward the verdict.

use std::time::{Duration, Instant};

use cpa_core::config::RunConfig;
use cpa_core::invariants::run_invariant_suite;
use cpa_core::nonlinear::{
    detect_cpa_thresholds, detect_multistability, log_amplitude_grid, trace_input_output, Branch,
    CpaThreshold,
};
use cpa_core::oracle::{crosscheck_linear, IntegrationConfig, DEFAULT_DRIVE_SCALE};
use cpa_core::params::{ControlField, Dressing, SystemParams};
use cpa_core::polariton::{locate_cpa_points, polariton_frequencies, Channel};
use cpa_core::run::channel_bandwidths;
use cpa_core::search::{golden_max, golden_min};
use cpa_core::spectra::{efficiency_scan, sweep_spectrum, GridSpec, ScanAxis, SpectrumSeries};

// criterion 1
const QUOTED_POLARITONS: [f64; 3] = [-13.6, -5.0, 3.7];
const PLACEMENT_TOL: f64 = 0.1;
const EIGEN_BUDGET: Duration = Duration::from_millis(1);
// criterion 2
const CPA_THRESHOLD: f64 = 1e-3;
const CENTRAL_CPA_REL_TOL: f64 = 0.01;
const SWEEP_BUDGET: Duration = Duration::from_secs(1);
// criterion 3
const ON_PEAK_MIN: f64 = 0.9;
const PEAK_SEARCH_HALF_WIDTH: f64 = 0.5;
// criterion 4
const OMEGA_RANGE: (f64, f64) = (1e-3, 0.5);
const OMEGA_SAMPLES: usize = 50;
const ETA_SATURATED: f64 = 0.99;
const OMEGA_KNEE: f64 = 0.01;
const ETA_AT_KNEE: f64 = 0.9;
/// Floating-point slack on "nondecreasing".
const MONOTONE_SLACK: f64 = 1e-12;
// criterion 5
const G_SCAN: (f64, f64, f64) = (1.0, 10.0, 0.25);
const G_OPTIMUM: f64 = 5.0;
// criterion 6
const QUOTED_TWO_DELTA_MHZ: [f64; 3] = [1.4, 1.3, 1.22];
const QUOTED_SWITCH_US: [f64; 3] = [0.1, 0.12, 0.13];
const BANDWIDTH_REL_TOL: f64 = 0.3;
// criterion 7
const ORACLE_POINTS: usize = 101;
const ORACLE_TOL: f64 = 1e-3;
const ORACLE_EMPTY_TOL: f64 = 1e-8;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
// criterion 8
const NORM_TOL: f64 = 1e-10;
const STORED_ENERGY_REL_TOL: f64 = 0.01;
const BRANCH_A_RANGE: (f64, f64) = (1e-2, 1e4);
const BRANCH_POINTS: usize = 2000;
// criterion 9
const INVARIANT_DRAWS: usize = 1000;
const INVARIANT_SEED: u64 = 20_240_607;
const INVARIANT_BUDGET: Duration = Duration::from_secs(10);

struct Line {
    id: &'static str,
    pass: Option<bool>,
    detail: String,
}

#[derive(Default)]
struct Sheet(Vec<Line>);

impl Sheet {
    fn check(&mut self, id: &'static str, pass: bool, detail: String) {
        self.0.push(Line {
            id,
            pass: Some(pass),
            detail,
        });
    }

    fn info(&mut self, id: &'static str, detail: String) {
        self.0.push(Line { id, pass: None, detail });
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

/// Refined extremum of a series' transmission inside `center ± half`.
fn window_extremum(s: &SpectrumSeries, center: f64, half: f64, maximize: bool) -> (f64, f64) {
    let idx: Vec<usize> = (0..s.grid.len())
        .filter(|&i| (s.grid[i] - center).abs() <= half)
        .collect();
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let mut best = idx[0];
    for &i in &idx {
        if better(s.i_t[i], s.i_t[best]) {
            best = i;
        }
    }
    let lo = s.grid[best.saturating_sub(1)].max(center - half);
    let hi = s.grid[(best + 1).min(s.grid.len() - 1)].min(center + half);
    let f = |x| s.transmission_at(x);
    let (x, v) = if maximize {
        golden_max(f, lo, hi, 1e-10).unwrap()
    } else {
        golden_min(f, lo, hi, 1e-10).unwrap()
    };
    if better(v, s.i_t[best]) || v == s.i_t[best] {
        (x, v)
    } else {
        (s.grid[best], s.i_t[best])
    }
}

fn criterion_1(sheet: &mut Sheet) {
    let p = SystemParams::triple_cpa();
    let t = Instant::now();
    let pols = polariton_frequencies(&p).unwrap();
    let elapsed = t.elapsed();
    let placed = pols
        .freqs
        .iter()
        .zip(QUOTED_POLARITONS)
        .all(|(f, q)| (f - q).abs() < PLACEMENT_TOL);
    sheet.check(
        "1 polariton placement",
        placed && elapsed < EIGEN_BUDGET,
        format!(
            "frequencies {:.6?} vs {QUOTED_POLARITONS:?} (±{PLACEMENT_TOL}), {elapsed:?} (< {EIGEN_BUDGET:?})",
            pols.freqs
        ),
    );
}

fn criterion_2(sheet: &mut Sheet) {
    let p = SystemParams::triple_cpa();
    let t = Instant::now();
    let s = sweep_spectrum(&p, &ControlField::off(), &GridSpec::triple_cpa()).unwrap();
    let report = locate_cpa_points(&s, CPA_THRESHOLD).unwrap();
    let elapsed = t.elapsed();
    let pols = polariton_frequencies(&p).unwrap();
    let pts = &report.cpa_points;
    let three = pts.len() == 3;
    let placed = three
        && pts
            .iter()
            .zip(pols.freqs)
            .all(|(c, f)| (c.delta_p - f).abs() < PLACEMENT_TOL);
    let want = (1.0f64 / 201.0).powi(2);
    let central = s.transmission_at(-5.0).unwrap();
    let central_ok = within(central, want, CENTRAL_CPA_REL_TOL);
    sheet.check(
        "2 triple CPA",
        placed && central_ok && elapsed < SWEEP_BUDGET,
        format!(
            "{} minima below {CPA_THRESHOLD:e} at {:?}; I_T/I_in(−5Γ) = {central:.6e} vs (1/201)² = {want:.6e}; {elapsed:?} for 3001 points",
            pts.len(),
            pts.iter().map(|c| format!("{:.4}", c.delta_p)).collect::<Vec<_>>()
        ),
    );
}

fn criterion_3(sheet: &mut Sheet) {
    let p = SystemParams::triple_cpa();
    let pols = polariton_frequencies(&p).unwrap();
    let configs = [
        (Channel::Left, -13.6, 0.5),
        (Channel::Central, -5.0, 0.5),
        (Channel::Right, 3.7, 1.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (target, delta, omega) in configs {
        let s = sweep_spectrum(&p, &ControlField::new(omega, delta), &GridSpec::triple_cpa()).unwrap();
        let (x, peak) = window_extremum(&s, pols.freq(target), PEAK_SEARCH_HALF_WIDTH, true);
        let mut others = Vec::new();
        for ch in Channel::ALL.into_iter().filter(|c| *c != target) {
            others.push(window_extremum(&s, pols.freq(ch), PLACEMENT_TOL, false).1);
        }
        let pass = peak >= ON_PEAK_MIN && others.iter().all(|v| *v < CPA_THRESHOLD);
        ok &= pass;
        parts.push(format!(
            "{}: peak {peak:.4} at {x:.4}, others {:.2e}/{:.2e}",
            target.as_str(),
            others[0],
            others[1]
        ));
    }
    sheet.check("3 switching contrast", ok, parts.join("; "));
}

fn log_values(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn worst_drop(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_4(sheet: &mut Sheet) {
    let p = SystemParams::triple_cpa();
    let template = ControlField::new(1.0, 0.0);
    let values = log_values(OMEGA_RANGE.0, OMEGA_RANGE.1, OMEGA_SAMPLES);
    let scan = efficiency_scan(&p, &template, ScanAxis::Omega, &values).unwrap();
    let knee = efficiency_scan(&p, &template, ScanAxis::Omega, &[OMEGA_KNEE]).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for ch in Channel::ALL {
        let (t, i) = (scan.eta_t(ch), scan.eta_i(ch));
        let (dt, di) = (worst_drop(&t), worst_drop(&i));
        let max_t = t.iter().cloned().fold(f64::MIN, f64::max);
        let max_i = i.iter().cloned().fold(f64::MIN, f64::max);
        let (kt, ki) = (knee.eta_t(ch)[0], knee.eta_i(ch)[0]);
        let pass = dt <= MONOTONE_SLACK
            && di <= MONOTONE_SLACK
            && max_t >= ETA_SATURATED
            && max_i >= ETA_SATURATED
            && kt >= ETA_AT_KNEE
            && ki >= ETA_AT_KNEE;
        ok &= pass;
        parts.push(format!(
            "{}: η_T max {max_t:.5} drop {dt:.1e}, η_I max {max_i:.5} drop {di:.1e}, at Ω=0.01 η_T {kt:.4} η_I {ki:.4}",
            ch.as_str()
        ));
    }
    sheet.check("4 efficiency saturation", ok, parts.join("; "));
}

fn criterion_5(sheet: &mut Sheet) {
    let p = SystemParams::triple_cpa();
    let (lo, hi, step) = G_SCAN;
    let n = ((hi - lo) / step).round() as usize + 1;
    let values: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let scan = efficiency_scan(&p, &ControlField::new(0.5, 0.0), ScanAxis::GColl, &values).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for ch in Channel::ALL {
        let eta = scan.eta_t(ch);
        let k = (0..eta.len()).max_by(|&a, &b| eta[a].total_cmp(&eta[b])).unwrap();
        let arg = values[k];
        let pass = (arg - G_OPTIMUM).abs() <= step + 1e-12;
        ok &= pass;
        parts.push(format!("{}: argmax g√N = {arg} (η_T {:.5})", ch.as_str(), eta[k]));
    }
    sheet.check(
        "5 coupling optimum",
        ok,
        format!("step {step}: {}", parts.join("; ")),
    );
}

fn bandwidth_summary(cfg: &RunConfig) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (ch, r) in channel_bandwidths(cfg).unwrap() {
        let i = ch.index();
        match r {
            Ok(b) => {
                let pass = within(b.two_delta_mhz, QUOTED_TWO_DELTA_MHZ[i], BANDWIDTH_REL_TOL)
                    && within(b.switch_time_us, QUOTED_SWITCH_US[i], BANDWIDTH_REL_TOL);
                ok &= pass;
                parts.push(format!(
                    "{}: 2δ {:.3} MHz ({:.3} Γ) vs {}, τ {:.3} μs vs {}",
                    ch.as_str(),
                    b.two_delta_mhz,
                    b.two_delta_gamma,
                    QUOTED_TWO_DELTA_MHZ[i],
                    b.switch_time_us,
                    QUOTED_SWITCH_US[i]
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", ch.as_str()));
            }
        }
    }
    (ok, parts.join("; "))
}

fn criterion_6(sheet: &mut Sheet) {
    let cfg = RunConfig::defaults();
    let (ok, detail) = bandwidth_summary(&cfg);
    sheet.check("6 bandwidth and switching time", ok, detail);
    let mut alt = cfg.clone();
    alt.control = alt.control.with_dressing(Dressing::Transition1);
    let (_, detail) = bandwidth_summary(&alt);
    sheet.info("6 single-transition dressing", detail);
}

fn criterion_7(sheet: &mut Sheet) {
    let p = SystemParams::triple_cpa();
    let grid = GridSpec::new(-20.0, 10.0, ORACLE_POINTS);
    let t = Instant::now();
    let full = crosscheck_linear(
        &p,
        &ControlField::off(),
        &grid,
        DEFAULT_DRIVE_SCALE,
        &IntegrationConfig::for_params(&p),
    )
    .unwrap();
    let elapsed = t.elapsed();
    let empty_p = p.with_g_coll(0.0);
    let empty = crosscheck_linear(
        &empty_p,
        &ControlField::off(),
        &grid,
        DEFAULT_DRIVE_SCALE,
        &IntegrationConfig::for_params(&empty_p),
    )
    .unwrap();
    sheet.check(
        "7 oracle equivalence",
        full.max_rel_error < ORACLE_TOL && empty.max_rel_error < ORACLE_EMPTY_TOL && elapsed < ORACLE_BUDGET,
        format!(
            "coupled max rel error {:.2e} (< {ORACLE_TOL:e}), empty cavity {:.2e} (< {ORACLE_EMPTY_TOL:e}), {elapsed:?} for {ORACLE_POINTS} points, all converged: {}",
            full.max_rel_error,
            empty.max_rel_error,
            full.all_converged && empty.all_converged
        ),
    );
}

struct Traced {
    branch: Branch,
    thresholds: Vec<CpaThreshold>,
    windows: Vec<(f64, f64)>,
}

fn trace(p: &SystemParams, control: ControlField, delta_p: f64) -> Traced {
    let grid = log_amplitude_grid(BRANCH_A_RANGE.0, BRANCH_A_RANGE.1, BRANCH_POINTS).unwrap();
    let branch = trace_input_output(p, &control, delta_p, &grid).unwrap();
    let thresholds = detect_cpa_thresholds(&branch, CPA_THRESHOLD).unwrap();
    let windows = detect_multistability(&branch);
    Traced {
        branch,
        thresholds,
        windows,
    }
}

/// I_T/I_in on every branch segment whose I_in range contains `i_in`.
fn ratios_at(branch: &Branch, i_in: f64) -> Vec<f64> {
    branch
        .points
        .windows(2)
        .filter(|w| (w[0].i_in - i_in) * (w[1].i_in - i_in) <= 0.0 && w[0].i_in != w[1].i_in)
        .map(|w| {
            let f = (i_in - w[0].i_in) / (w[1].i_in - w[0].i_in);
            let r0 = w[0].ratio().unwrap_or(0.0);
            let r1 = w[1].ratio().unwrap_or(0.0);
            r0 + f * (r1 - r0)
        })
        .collect()
}

fn min_ratio(branch: &Branch) -> (f64, f64) {
    branch
        .points
        .iter()
        .filter_map(|p| p.ratio().map(|r| (p.i_in, r)))
        .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
}

fn detuned_scan(p: &SystemParams) -> Vec<(f64, usize)> {
    (0..=120)
        .map(|k| -20.0 + 0.25 * k as f64)
        .filter(|dp| *dp != p.delta_c)
        .map(|dp| (dp, trace(p, ControlField::off(), dp).windows.len()))
        .filter(|(_, n)| *n > 0)
        .collect()
}

fn criterion_8(sheet: &mut Sheet) {
    let p = SystemParams::weak_coupling();
    let dc = p.delta_c;
    let a = trace(&p, ControlField::off(), dc);
    let b = trace(&p, ControlField::new(5.0, dc), dc);
    let c = trace(&p, ControlField::off(), -10.0);
    let d = trace(&p, ControlField::new(0.1, -10.0), -10.0);

    let (a_at, a_min) = min_ratio(&a.branch);
    sheet.check(
        "8a nonlinear CPA without control",
        !a.thresholds.is_empty(),
        format!(
            "{} CPA threshold(s) at Δp = Δc; smallest I_T/I_in on the branch {a_min:.4} at I_in = {a_at:.4e}",
            a.thresholds.len()
        ),
    );

    let removed = match a.thresholds.first() {
        Some(t) => {
            let r = ratios_at(&b.branch, t.i_in);
            let gone = !r.is_empty() && r.iter().all(|v| *v >= CPA_THRESHOLD);
            (gone, format!("with Ω=5Γ at I_in = {:.4e}: I_T/I_in = {r:?}", t.i_in))
        }
        None => (false, "no control-off CPA to remove".to_string()),
    };
    let (c_at, c_min) = min_ratio(&c.branch);
    let lower = d.thresholds.iter().any(|t| t.i_in < c_at);
    sheet.check(
        "8b control removes and creates CPA",
        removed.0 && lower,
        format!(
            "{}; Ω=0, Δp=−10Γ near-CPA minimum {c_min:.4} at I_in = {c_at:.4e}; Ω=0.1Γ, Δ=Δp=−10Γ thresholds at I_in {:?}",
            removed.1,
            d.thresholds.iter().map(|t| format!("{:.4e}", t.i_in)).collect::<Vec<_>>()
        ),
    );

    let scan = detuned_scan(&p);
    sheet.check(
        "8c multistability",
        !scan.is_empty() && d.windows.len() == 2,
        format!(
            "{} detuned Δp in [−20, 10]Γ with a multistable window (Δp=−10Γ: {}); Ω=0.1Γ, Δ=Δp=−10Γ: {} window(s)",
            scan.len(),
            c.windows.len(),
            d.windows.len()
        ),
    );

    // diagnostics at a coupling strong enough for the saturable response
    let strong = p.with_g_coll(50f64.sqrt());
    let sa = trace(&strong, ControlField::off(), dc);
    let s_scan = detuned_scan(&strong);
    sheet.info(
        "8 stronger coupling g√N=√50Γ",
        format!(
            "{} CPA threshold(s) at Δp = Δc; {} detuned Δp with a multistable window",
            sa.thresholds.len(),
            s_scan.len()
        ),
    );

    let branches = [&a, &b, &c, &d, &sa];
    let worst_norm = branches
        .iter()
        .flat_map(|t| t.branch.points.iter())
        .map(|q| (q.amplitudes.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut n_cpa = 0;
    let mut worst_energy: f64 = 0.0;
    for t in branches {
        let kt = t.branch.params.kappa * t.branch.params.tau_rt;
        for th in &t.thresholds {
            n_cpa += 1;
            worst_energy = worst_energy.max((kt * th.a_mag * th.a_mag / th.i_in - 1.0).abs());
        }
    }
    sheet.check(
        "8e norm and stored energy",
        worst_norm <= NORM_TOL && worst_energy <= STORED_ENERGY_REL_TOL,
        format!(
            "worst |norm − 1| {worst_norm:.1e} (≤ {NORM_TOL:e}); {n_cpa} CPA point(s), worst |κτ|a|²/I_in − 1| {worst_energy:.1e}"
        ),
    );
}

fn criterion_9(sheet: &mut Sheet) {
    let t = Instant::now();
    let report = run_invariant_suite(INVARIANT_SEED, INVARIANT_DRAWS);
    let elapsed = t.elapsed();
    let parts: Vec<_> = report
        .checks
        .iter()
        .map(|c| format!("{} {}/{}", c.name, c.passed, c.passed + c.failed))
        .collect();
    sheet.check(
        "9 invariant suite",
        report.all_passed() && elapsed < INVARIANT_BUDGET,
        format!("{}; {elapsed:?}", parts.join(", ")),
    );
}

fn main() {
    let mut sheet = Sheet::default();
    criterion_1(&mut sheet);
    criterion_2(&mut sheet);
    criterion_3(&mut sheet);
    criterion_4(&mut sheet);
    criterion_5(&mut sheet);
    criterion_6(&mut sheet);
    criterion_7(&mut sheet);
    criterion_8(&mut sheet);
    criterion_9(&mut sheet);

    let mut failed = 0;
    let mut total = 0;
    println!("\nacceptance");
    for l in &sheet.0 {
        let tag = match l.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        if let Some(p) = l.pass {
            total += 1;
            if !p {
                failed += 1;
            }
        }
        println!("{tag} {}: {}", l.id, l.detail);
    }
    println!("{}/{total} criteria passed\n", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
