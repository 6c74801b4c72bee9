//! Time-domain integrator for the coupled cavity and atomic amplitudes.
//!
//! Shares no code path with the closed-form solvers: the right-hand side is
//! evaluated directly from the equations of motion and stepped with an
//! embedded Dormand–Prince 5(4) pair until the state stops changing.
//!
//! The ground amplitude is not integrated. It is slaved to the excited
//! amplitudes through c₃ = √(1 − Σ|cᵢ|²), so the four-level norm is exactly
//! one at every accepted step.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::steady_state_fields;
use crate::nonlinear::AtomicAmplitudes;
use crate::params::{ControlField, Dressing, DriveInputs, SystemParams};
use crate::spectra::GridSpec;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default weak per-side drive amplitude for linear cross-checks.
pub const DEFAULT_DRIVE_SCALE: f64 = 1e-3;

/// Largest g|a| for which the integrator is compared against linear response.
pub const WEAK_DRIVE_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub dt_initial: f64,
    /// Horizon, in units of 1/Γ.
    pub t_max: f64,
    /// Componentwise relative change over one 1/κ interval below which the
    /// state counts as stationary.
    pub convergence_tol: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt_initial: 1e-3,
            t_max: 200.0,
            convergence_tol: 1e-10,
            rtol: 1e-13,
            atol: 1e-18,
        }
    }
}

impl IntegrationConfig {
    /// Defaults with the horizon set to 200/κ.
    pub fn for_params(params: &SystemParams) -> Self {
        Self {
            t_max: 200.0 / params.kappa,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.dt_initial) {
            return Err(Error::constraint("dt_initial", "must be positive"));
        }
        if !pos(self.t_max) {
            return Err(Error::constraint("t_max", "must be positive"));
        }
        if !pos(self.convergence_tol) {
            return Err(Error::constraint("convergence_tol", "must be positive"));
        }
        if !pos(self.rtol) {
            return Err(Error::constraint("rtol", "must be positive"));
        }
        if !(self.atol.is_finite() && self.atol >= 0.0) {
            return Err(Error::constraint("atol", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub a: Complex64,
    pub amplitudes: AtomicAmplitudes,
    pub converged: bool,
    pub t_elapsed: f64,
    pub steps: usize,
    /// Convergence metric at the last checkpoint.
    pub final_metric: f64,
    /// Largest Σ|cᵢ|² − 1 removed by renormalisation (zero when the
    /// excited population never exceeded one).
    pub max_norm_leak: f64,
    /// Largest |Σ populations − 1| seen at an accepted step.
    pub max_norm_error: f64,
}

impl OracleResult {
    pub fn fields(&self, params: &SystemParams, drive: &DriveInputs) -> (Complex64, Complex64) {
        let a_out = params.sqrt_kappa_tau() * self.a;
        (a_out - drive.a_in_r, a_out - drive.a_in_l)
    }

    /// `(I_T/I_in, κτ|a|²/I_in)` on the right-hand side.
    pub fn normalized(&self, params: &SystemParams, drive: &DriveInputs) -> (f64, f64) {
        let i_in = drive.i_in();
        let (out_r, _) = self.fields(params, drive);
        (
            out_r.norm_sqr() / i_in,
            params.kappa * params.tau_rt * self.a.norm_sqr() / i_in,
        )
    }
}

/// `[a, c1, c2, c4]`.
type State = [Complex64; 4];

fn excited_norm(y: &State) -> f64 {
    y[1].norm_sqr() + y[2].norm_sqr() + y[3].norm_sqr()
}

fn ground(y: &State) -> f64 {
    (1.0 - excited_norm(y)).max(0.0).sqrt()
}

struct Rhs {
    kappa: f64,
    delta_c: f64,
    delta_p: f64,
    delta12: f64,
    delta: f64,
    omega: Complex64,
    g: f64,
    gn: f64,
    gamma13: f64,
    gamma23: f64,
    gamma4: f64,
    source: Complex64,
}

impl Rhs {
    fn new(params: &SystemParams, control: &ControlField, drive: &DriveInputs) -> Self {
        let g = params.g_single();
        Self {
            kappa: params.kappa,
            delta_c: params.delta_c,
            delta_p: drive.delta_p,
            delta12: params.delta12,
            delta: control.delta,
            omega: control.omega,
            g,
            gn: g * params.n_atoms as f64,
            gamma13: params.gamma13,
            gamma23: params.gamma23,
            gamma4: params.gamma4,
            source: params.sqrt_kappa_over_tau() * (drive.a_in_r + drive.a_in_l),
        }
    }

    fn eval(&self, y: &State) -> State {
        let [a, c1, c2, c4] = *y;
        let c3 = ground(y);
        let sigma = (c1 + c2) * c3;
        let da = -Complex64::new(self.kappa, self.delta_c - self.delta_p) * a
            + I * self.gn * sigma
            + self.source;
        let ga = I * self.g * a * c3;
        let dc1 = c1 * Complex64::new(-self.gamma13 / 2.0, self.delta_p + self.delta12)
            + ga
            + I * self.omega * c4;
        let dc2 = c2 * Complex64::new(-self.gamma23 / 2.0, self.delta_p) + ga;
        let dc4 = c4 * Complex64::new(-self.gamma4 / 2.0, self.delta_p - self.delta)
            + I * self.omega.conj() * c1;
        [da, dc1, dc2, dc4]
    }
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the stage
// nodes never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One trial step; returns the fifth-order solution and the error vector.
fn dp_step(f: &Rhs, y: &State, h: f64) -> (State, State) {
    let k1 = f.eval(y);
    let k2 = f.eval(&axpy(y, h, &[(A21, &k1)]));
    let k3 = f.eval(&axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f.eval(&axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f.eval(&axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f.eval(&axpy(
        y,
        h,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y5 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f.eval(&y5);
    let zero = [Complex64::new(0.0, 0.0); 4];
    let err = axpy(
        &zero,
        h,
        &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
    );
    (y5, err)
}

fn error_norm(cfg: &IntegrationConfig, y: &State, y_new: &State, err: &State) -> f64 {
    (0..4)
        .map(|i| {
            let scale = cfg.atol + cfg.rtol * y[i].norm().max(y_new[i].norm());
            if scale == 0.0 {
                if err[i].norm() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                err[i].norm() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn change_metric(prev: &State, now: &State) -> f64 {
    let inf = now.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if inf == 0.0 {
        return if prev.iter().all(|v| v.norm() == 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let floor = 1e-12 * inf;
    (0..4)
        .map(|i| (now[i] - prev[i]).norm() / now[i].norm().max(floor))
        .fold(0.0, f64::max)
}

/// Integrates from vacuum (a = 0, c₃ = 1) until the state is stationary or
/// `t_max` is reached.
pub fn integrate_to_steady_state(
    params: &SystemParams,
    control: &ControlField,
    drive: &DriveInputs,
    config: &IntegrationConfig,
) -> Result<OracleResult> {
    params.validate()?;
    control.validate()?;
    config.validate()?;
    for v in [drive.a_in_r, drive.a_in_l] {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::invalid("input amplitudes must be finite"));
        }
    }
    if !drive.delta_p.is_finite() {
        return Err(Error::invalid("signal detuning must be finite"));
    }

    let rhs = Rhs::new(params, control, drive);
    let interval = 1.0 / params.kappa;
    let zero = Complex64::new(0.0, 0.0);
    let mut y: State = [zero; 4];
    let mut t = 0.0;
    let mut h = config.dt_initial;
    let mut steps = 0usize;
    let mut max_norm_leak = 0.0f64;
    let mut max_norm_error = 0.0f64;
    let mut checkpoint = y;
    let mut next_check = interval;
    let mut metric = f64::INFINITY;
    let mut tail = false;
    let mut converged = false;

    while t < config.t_max {
        let target = next_check.min(config.t_max);
        if h < 1e-14 * t.max(1.0) {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let clamped = h >= target - t;
        let h_try = if clamped { target - t } else { h };
        let (y_new, err) = dp_step(&rhs, &y, h_try);
        let en = error_norm(config, &y, &y_new, &err);
        if !en.is_finite() {
            h = h_try * 0.1;
            continue;
        }
        let factor = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        if en > 1.0 {
            h = h_try * factor;
            continue;
        }
        // a step shortened to land on a checkpoint must not shrink the proposal
        h = if clamped && factor >= 1.0 {
            h.max(h_try * factor)
        } else {
            h_try * factor
        };
        t = if clamped { target } else { t + h_try };
        y = y_new;
        steps += 1;
        let s = excited_norm(&y);
        if s > 1.0 {
            max_norm_leak = max_norm_leak.max(s - 1.0);
            let k = s.sqrt().recip();
            for v in &mut y[1..] {
                *v *= k;
            }
        }
        let c3 = ground(&y);
        max_norm_error = max_norm_error.max((excited_norm(&y) + c3 * c3 - 1.0).abs());

        if clamped && target == next_check {
            let m = change_metric(&checkpoint, &y);
            checkpoint = y;
            next_check += interval;
            metric = m;
            if tail && m < 10.0 * config.convergence_tol {
                converged = true;
                break;
            }
            tail = m < config.convergence_tol;
        }
    }

    let c3 = ground(&y);
    Ok(OracleResult {
        a: y[0],
        amplitudes: AtomicAmplitudes {
            c1: y[1],
            c2: y[2],
            c3,
            c4: y[3],
            degenerate: false,
        },
        converged,
        t_elapsed: t,
        steps,
        final_metric: metric,
        max_norm_leak,
        max_norm_error,
    })
}

/// Checks that `drive_scale` keeps g|a| within the weak-drive limit for
/// every possible detuning, using |a| ≤ 2√(κ/τ)·s/κ.
pub fn weak_drive_bound(params: &SystemParams, drive_scale: f64) -> f64 {
    params.g_single() * 2.0 * params.sqrt_kappa_over_tau() * drive_scale / params.kappa
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckPoint {
    pub delta_p: f64,
    pub oracle_i_t: f64,
    pub model_i_t: f64,
    pub rel_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub max_rel_error: f64,
    pub all_converged: bool,
    pub points: Vec<CrossCheckPoint>,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Runs the integrator at weak symmetric drive over `grid` and compares
/// I_T/I_in with the closed-form model. At Ω = 0 both dressing modes are
/// compared; otherwise the single-transition dressing is the reference.
pub fn crosscheck_linear(
    params: &SystemParams,
    control: &ControlField,
    grid: &GridSpec,
    drive_scale: f64,
    config: &IntegrationConfig,
) -> Result<CrossCheck> {
    grid.validate()?;
    if !(drive_scale > 0.0 && drive_scale.is_finite()) {
        return Err(Error::invalid("drive scale must be positive"));
    }
    if weak_drive_bound(params, drive_scale) > WEAK_DRIVE_LIMIT {
        return Err(Error::invalid(format!(
            "drive scale {drive_scale:e} allows g|a| above {WEAK_DRIVE_LIMIT:e}"
        )));
    }
    let references: Vec<ControlField> = if control.is_on() {
        vec![control.with_dressing(Dressing::Transition1)]
    } else {
        vec![
            control.with_dressing(Dressing::AsPrinted),
            control.with_dressing(Dressing::Transition1),
        ]
    };
    let points = grid
        .points()
        .par_iter()
        .map(|&dp| {
            let drive = DriveInputs::symmetric(drive_scale, dp);
            let run = integrate_to_steady_state(params, control, &drive, config)?;
            let (oracle_i_t, _) = run.normalized(params, &drive);
            let mut worst = (0.0, f64::NAN);
            for r in &references {
                let m = steady_state_fields(params, r, &drive)?.i_t_norm();
                let e = rel(oracle_i_t, m);
                if !(e <= worst.0) {
                    worst = (e, m);
                }
            }
            Ok(CrossCheckPoint {
                delta_p: dp,
                oracle_i_t,
                model_i_t: worst.1,
                rel_error: worst.0,
                converged: run.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossCheck {
        max_rel_error: points.iter().map(|p| p.rel_error).fold(0.0, f64::max),
        all_converged: points.iter().all(|p| p.converged),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: &SystemParams) -> IntegrationConfig {
        IntegrationConfig::for_params(p)
    }

    #[test]
    fn zero_drive_stays_in_vacuum() {
        let p = SystemParams::triple_cpa();
        let r = integrate_to_steady_state(&p, &ControlField::off(), &DriveInputs::symmetric(0.0, -5.0), &cfg(&p))
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.a, Complex64::new(0.0, 0.0));
        assert_eq!(r.amplitudes.c3, 1.0);
    }

    #[test]
    fn empty_cavity_fixed_point() {
        let mut p = SystemParams::triple_cpa().with_g_coll(0.0);
        p.tau_rt = 0.5;
        p.mirror_t = 0.5;
        let drive = DriveInputs::symmetric(1e-3, -3.0);
        let r = integrate_to_steady_state(&p, &ControlField::off(), &drive, &cfg(&p)).unwrap();
        assert!(r.converged);
        let want = p.sqrt_kappa_over_tau() * 2.0 * drive.a_in_r
            / Complex64::new(p.kappa, p.delta_c - drive.delta_p);
        assert!((r.a - want).norm() < 1e-6 * want.norm());
    }

    #[test]
    fn central_cpa_matches_closed_form() {
        let p = SystemParams::triple_cpa();
        let drive = DriveInputs::symmetric(1e-3, -5.0);
        let r = integrate_to_steady_state(&p, &ControlField::off(), &drive, &cfg(&p)).unwrap();
        assert!(r.converged);
        let (it, _) = r.normalized(&p, &drive);
        let want = (1.0f64 / 201.0).powi(2);
        assert!(rel(it, want) < 1e-3, "{it} vs {want}");
    }

    #[test]
    fn deterministic() {
        let p = SystemParams::triple_cpa();
        let ctl = ControlField::new(0.5, -13.6);
        let drive = DriveInputs::symmetric(1e-3, -13.0);
        let a = integrate_to_steady_state(&p, &ctl, &drive, &cfg(&p)).unwrap();
        let b = integrate_to_steady_state(&p, &ctl, &drive, &cfg(&p)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn norm_held_even_when_saturated() {
        let p = SystemParams::triple_cpa();
        let drive = DriveInputs::symmetric(300.0, -5.0);
        let r = integrate_to_steady_state(&p, &ControlField::off(), &drive, &cfg(&p)).unwrap();
        assert!(r.max_norm_error <= 1e-6);
        assert!(r.amplitudes.c3 < 0.99);
    }

    #[test]
    fn short_horizon_is_flagged_not_failed() {
        let p = SystemParams::triple_cpa();
        let c = IntegrationConfig { t_max: 0.5, ..cfg(&p) };
        let r = integrate_to_steady_state(&p, &ControlField::off(), &DriveInputs::symmetric(1e-3, -5.0), &c)
            .unwrap();
        assert!(!r.converged);
        assert!((r.t_elapsed - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_config_rejected() {
        let p = SystemParams::triple_cpa();
        let c = IntegrationConfig { convergence_tol: 0.0, ..cfg(&p) };
        assert!(integrate_to_steady_state(&p, &ControlField::off(), &DriveInputs::symmetric(1e-3, 0.0), &c).is_err());
    }

    #[test]
    fn strong_drive_rejected_by_crosscheck() {
        let p = SystemParams::triple_cpa();
        let g = GridSpec::new(-6.0, -4.0, 3);
        assert!(crosscheck_linear(&p, &ControlField::off(), &g, 1.0, &cfg(&p)).is_err());
    }

    #[test]
    fn empty_cavity_crosscheck_is_exact() {
        let p = SystemParams::triple_cpa().with_g_coll(0.0);
        let g = GridSpec::new(-20.0, 10.0, 11);
        let c = crosscheck_linear(&p, &ControlField::off(), &g, DEFAULT_DRIVE_SCALE, &cfg(&p)).unwrap();
        assert!(c.all_converged);
        assert!(c.max_rel_error < 1e-8, "{}", c.max_rel_error);
    }

    #[test]
    fn dressed_weak_drive_matches_single_transition_model() {
        let p = SystemParams::triple_cpa();
        let g = GridSpec::new(-20.0, 10.0, 21);
        let ctl = ControlField::new(0.5, -13.6).with_dressing(Dressing::Transition1);
        let c = crosscheck_linear(&p, &ctl, &g, DEFAULT_DRIVE_SCALE, &cfg(&p)).unwrap();
        assert!(c.max_rel_error < 1e-2, "{}", c.max_rel_error);
    }
}
