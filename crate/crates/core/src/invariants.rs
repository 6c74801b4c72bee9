//! Randomised invariant suite over seeded parameter draws.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::steady_state_fields;
use crate::params::{ControlField, Dressing, DriveInputs, SystemParams};
use crate::polariton::polariton_frequencies;

/// Relative tolerance of the input-output identity and swap symmetry.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Ω used for the small-control agreement check.
pub const SMALL_OMEGA: f64 = 1e-7;
/// `|ΔI_T| ≤ abs + rel·I_T` between dressing modes at `SMALL_OMEGA`.
pub const MODE_AGREEMENT_ABS: f64 = 1e-9;
pub const MODE_AGREEMENT_REL: f64 = 1e-6;
/// Allowed excess of total output over total input flux.
pub const PASSIVITY_TOL: f64 = 1e-12;
/// Relative tolerance on λ(sM) = s·λ(M).
pub const SCALING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub tolerance: f64,
    pub passed: usize,
    pub failed: usize,
    /// Largest normalised violation seen; a value ≤ 1 is within tolerance.
    pub worst: f64,
}

impl InvariantCheck {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            passed: 0,
            failed: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, ratio: Result<f64>) {
        let r = ratio.unwrap_or(f64::INFINITY);
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.worst = self.worst.max(r);
        if r <= 1.0 {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub seed: u64,
    pub draws: usize,
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(InvariantCheck::ok)
    }
}

struct Draw {
    params: SystemParams,
    control: ControlField,
    drive: DriveInputs,
}

fn complex(rng: &mut ChaCha8Rng, max_mag: f64) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.0..max_mag), rng.random_range(0.0..std::f64::consts::TAU))
}

fn draw(rng: &mut ChaCha8Rng) -> Draw {
    let kappa = rng.random_range(0.1..5.0);
    let tau = rng.random_range(0.1..5.0);
    let mut params = SystemParams::triple_cpa()
        .with_kappa(kappa)
        .with_g_coll(rng.random_range(0.0..10.0));
    params.tau_rt = tau;
    params.mirror_t = kappa * tau;
    params.delta12 = rng.random_range(0.0..20.0);
    params.delta_c = rng.random_range(-20.0..10.0);
    params.gamma13 = rng.random_range(0.1..3.0);
    params.gamma23 = rng.random_range(0.1..3.0);
    params.gamma4 = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.5) };
    let dressing = if rng.random_bool(0.5) {
        Dressing::AsPrinted
    } else {
        Dressing::Transition1
    };
    let control = ControlField {
        omega: complex(rng, 2.0),
        delta: rng.random_range(-20.0..10.0),
        dressing,
    };
    let mut delta_p = rng.random_range(-25.0..15.0);
    if (delta_p - control.delta).abs() < 1e-3 {
        delta_p += 1e-2;
    }
    let drive = DriveInputs {
        a_in_r: complex(rng, 3.0) + 1e-3,
        a_in_l: complex(rng, 3.0),
        delta_p,
    };
    Draw {
        params,
        control,
        drive,
    }
}

fn io_identity(d: &Draw) -> Result<f64> {
    let s = steady_state_fields(&d.params, &d.control, &d.drive)?;
    let stored = d.params.sqrt_kappa_tau() * s.a;
    let scale = stored.norm() + d.drive.a_in_r.norm().max(d.drive.a_in_l.norm());
    let er = (s.a_out_r - (stored - d.drive.a_in_r)).norm();
    let el = (s.a_out_l - (stored - d.drive.a_in_l)).norm();
    Ok(er.max(el) / (IDENTITY_TOL * scale))
}

fn swap_symmetry(d: &Draw) -> Result<f64> {
    let s = steady_state_fields(&d.params, &d.control, &d.drive)?;
    let t = steady_state_fields(&d.params, &d.control, &d.drive.swapped())?;
    let scale = s.a_out_r.norm().max(s.a_out_l.norm()).max(d.drive.a_in_r.norm());
    let e = (t.a_out_r - s.a_out_l).norm().max((t.a_out_l - s.a_out_r).norm()) + (t.a - s.a).norm();
    Ok(e / (IDENTITY_TOL * scale.max(1e-300)))
}

fn mode_agreement(d: &Draw) -> Result<f64> {
    let c = d.control.with_omega(SMALL_OMEGA);
    let a = steady_state_fields(&d.params, &c.with_dressing(Dressing::AsPrinted), &d.drive)?;
    let b = steady_state_fields(&d.params, &c.with_dressing(Dressing::Transition1), &d.drive)?;
    let (x, y) = (a.i_t_norm(), b.i_t_norm());
    Ok((x - y).abs() / (MODE_AGREEMENT_ABS + MODE_AGREEMENT_REL * x.abs().max(y.abs())))
}

fn passivity(d: &Draw) -> Result<f64> {
    let s = steady_state_fields(&d.params, &d.control, &d.drive)?;
    let out = s.a_out_r.norm_sqr() + s.a_out_l.norm_sqr();
    let inp = d.drive.a_in_r.norm_sqr() + d.drive.a_in_l.norm_sqr();
    // ratio ≤ 1 ⇔ out ≤ in·(1 + tol)
    Ok(if out <= inp * (1.0 + PASSIVITY_TOL) {
        out / (inp * (1.0 + PASSIVITY_TOL))
    } else {
        1.0 + (out - inp) / (inp * PASSIVITY_TOL)
    })
}

fn eigen_scaling(d: &Draw, s: f64) -> Result<f64> {
    let mut q = d.params.with_g_coll(d.params.g_coll * s);
    q.delta12 *= s;
    q.delta_c *= s;
    let a = polariton_frequencies(&d.params)?.freqs;
    let b = polariton_frequencies(&q)?.freqs;
    let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max) * s;
    let e = a.iter().zip(b).map(|(x, y)| (x * s - y).abs()).fold(0.0, f64::max);
    Ok(e / (SCALING_TOL * scale))
}

/// Runs every invariant over `draws` seeded parameter draws.
pub fn run_invariant_suite(seed: u64, draws: usize) -> InvariantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = [
        InvariantCheck::new("input_output_identity", IDENTITY_TOL),
        InvariantCheck::new("input_swap_symmetry", IDENTITY_TOL),
        InvariantCheck::new("small_control_mode_agreement", MODE_AGREEMENT_REL),
        InvariantCheck::new("passivity", PASSIVITY_TOL),
        InvariantCheck::new("eigenfrequency_scale_covariance", SCALING_TOL),
    ];
    for _ in 0..draws {
        let d = draw(&mut rng);
        let s = rng.random_range(0.1..10.0);
        checks[0].record(io_identity(&d));
        checks[1].record(swap_symmetry(&d));
        checks[2].record(mode_agreement(&d));
        checks[3].record(passivity(&d));
        checks[4].record(eigen_scaling(&d, s));
    }
    InvariantReport {
        seed,
        draws,
        checks: checks.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let a = run_invariant_suite(7, 50);
        assert!(a.all_passed(), "{a:#?}");
        assert_eq!(a, run_invariant_suite(7, 50));
        assert!(a.checks.iter().all(|c| c.passed == 50));
    }

    #[test]
    fn violation_is_counted() {
        let mut c = InvariantCheck::new("x", 1.0);
        c.record(Ok(0.5));
        c.record(Ok(2.0));
        c.record(Err(crate::Error::Singularity("test")));
        assert_eq!((c.passed, c.failed), (1, 2));
        assert!(!c.ok());
    }
}
