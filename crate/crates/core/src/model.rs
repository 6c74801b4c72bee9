//! Closed-form linear response of the two-sided atom-cavity system.
//!
//! In the weak-signal limit (ground state fully populated) the atoms act
//! on the cavity through a single complex susceptibility χ, and the cavity
//! steady state and both output fields follow in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ControlField, Dressing, DriveInputs, SystemParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this magnitude the cavity denominator is treated as singular.
pub const CAVITY_DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityTerms {
    /// Bare |3⟩→|1⟩ response 2/(γ₁₃ − 2i(Δp + Δ₁₂)).
    pub d1: Complex64,
    /// Bare |3⟩→|2⟩ response 2/(γ₂₃ − 2iΔp).
    pub d2: Complex64,
    /// |3⟩→|1⟩ response including the control dressing; equals `d1` unless
    /// the dressing mode is [`Dressing::Transition1`] with the control on.
    pub d1_dressed: Complex64,
    /// Control-dressed term σ₃, nonzero only in [`Dressing::AsPrinted`].
    pub sigma3: Complex64,
    pub chi: Complex64,
}

pub fn susceptibility(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
) -> Result<SusceptibilityTerms> {
    if !delta_p.is_finite() {
        return Err(Error::invalid("signal detuning must be finite"));
    }
    params.validate()?;
    control.validate()?;

    let den1 = Complex64::new(params.gamma13, -2.0 * (delta_p + params.delta12));
    if den1.norm_sqr() == 0.0 {
        return Err(Error::Singularity("d1 denominator γ13 − 2i(Δp + Δ12)"));
    }
    let den2 = Complex64::new(params.gamma23, -2.0 * delta_p);
    if den2.norm_sqr() == 0.0 {
        return Err(Error::Singularity("d2 denominator γ23 − 2iΔp"));
    }
    let d1 = 2.0 / den1;
    let d2 = 2.0 / den2;
    let omega = control.omega;
    let omega2 = omega.norm_sqr();
    let g2n = params.g2n();
    let zero = Complex64::new(0.0, 0.0);

    let terms = match control.dressing {
        _ if omega2 == 0.0 => SusceptibilityTerms {
            d1,
            d2,
            d1_dressed: d1,
            sigma3: zero,
            chi: I * g2n * (d1 + d2),
        },
        Dressing::AsPrinted => {
            let den3 = Complex64::new(params.gamma4 / 2.0, -(control.delta - delta_p)) + omega2 * d2;
            if den3.norm_sqr() == 0.0 {
                return Err(Error::Singularity(
                    "sigma3 denominator γ43/2 − i(Δ − Δp) + |Ω|²d2",
                ));
            }
            let sigma3 = -omega.conj() * d2 / den3;
            SusceptibilityTerms {
                d1,
                d2,
                d1_dressed: d1,
                sigma3,
                chi: I * g2n * (d1 + d2 + d2 * omega * sigma3),
            }
        }
        Dressing::Transition1 => {
            let inner = Complex64::new(params.gamma4, -2.0 * (delta_p - control.delta));
            // An undamped two-photon resonance is a pole of the dressing
            // term, which drives the dressed response to zero.
            let d1_dressed = if inner.norm_sqr() == 0.0 {
                zero
            } else {
                let den = den1 + 4.0 * omega2 / inner;
                if den.norm_sqr() == 0.0 {
                    return Err(Error::Singularity("dressed d1 denominator"));
                }
                2.0 / den
            };
            SusceptibilityTerms {
                d1,
                d2,
                d1_dressed,
                sigma3: zero,
                chi: I * g2n * (d1_dressed + d2),
            }
        }
    };
    Ok(terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSolution {
    /// Intracavity amplitude.
    pub a: Complex64,
    pub a_out_r: Complex64,
    pub a_out_l: Complex64,
    /// |a_out_r|² / I_in.
    pub i_t_norm_r: f64,
    /// |a_out_l|² / I_in.
    pub i_t_norm_l: f64,
    /// κτ|a|² / I_in; equals 1 when both outputs vanish.
    pub i_cav_norm: f64,
    /// |a|² / I_in.
    pub i_cav_raw: f64,
}

impl FieldSolution {
    /// Output intensity ratio on the right-hand side; with symmetric drive
    /// both sides agree.
    pub fn i_t_norm(&self) -> f64 {
        self.i_t_norm_r
    }
}

/// Cavity denominator D = κ + i(Δc − Δp) − iχ.
pub fn cavity_denominator(params: &SystemParams, delta_p: f64, chi: Complex64) -> Complex64 {
    Complex64::new(params.kappa, params.delta_c - delta_p) - I * chi
}

pub fn steady_state_fields(
    params: &SystemParams,
    control: &ControlField,
    drive: &DriveInputs,
) -> Result<FieldSolution> {
    for v in [drive.a_in_r, drive.a_in_l] {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::invalid("input amplitudes must be finite"));
        }
    }
    let i_in = drive.i_in();
    if i_in <= 0.0 {
        return Err(Error::invalid(
            "at least one input field must be nonzero for normalized intensities",
        ));
    }
    let terms = susceptibility(params, control, drive.delta_p)?;
    let d = cavity_denominator(params, drive.delta_p, terms.chi);
    if d.norm() < CAVITY_DENOMINATOR_FLOOR {
        return Err(Error::Singularity("cavity denominator κ + i(Δc − Δp) − iχ"));
    }
    let sum = drive.a_in_r + drive.a_in_l;
    let a = params.sqrt_kappa_over_tau() * sum / d;
    let common = params.kappa * sum / d;
    let a_out_r = common - drive.a_in_r;
    let a_out_l = common - drive.a_in_l;
    let stored = a.norm_sqr();
    Ok(FieldSolution {
        a,
        a_out_r,
        a_out_l,
        i_t_norm_r: a_out_r.norm_sqr() / i_in,
        i_t_norm_l: a_out_l.norm_sqr() / i_in,
        i_cav_norm: params.kappa * params.tau_rt * stored / i_in,
        i_cav_raw: stored / i_in,
    })
}

/// `(I_T/I_in, κτ|a|²/I_in)` for symmetric unit drive at one signal
/// detuning.
pub fn normalized_spectrum_point(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
) -> Result<(f64, f64)> {
    let sol = steady_state_fields(params, control, &DriveInputs::symmetric(1.0, delta_p))?;
    Ok((sol.i_t_norm_r, sol.i_cav_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn triple_cpa() -> SystemParams {
        SystemParams::triple_cpa()
    }

    #[test]
    fn central_susceptibility_hand_value() {
        // d1 + d2 = 2/(1 − 10i) + 2/(1 + 10i) = 4/101
        let t = susceptibility(&triple_cpa(), &ControlField::off(), -5.0).unwrap();
        assert_relative_eq!((t.d1 + t.d2).re, 4.0 / 101.0, max_relative = 1e-14);
        assert!((t.d1 + t.d2).im.abs() < 1e-15);
        assert!(t.chi.re.abs() < 1e-14);
        assert_relative_eq!(t.chi.im, 100.0 / 101.0, max_relative = 1e-14);
    }

    #[test]
    fn no_atoms_no_susceptibility() {
        let p = triple_cpa().with_g_coll(0.0);
        for dressing in [Dressing::AsPrinted, Dressing::Transition1] {
            let c = ControlField::new(0.7, -3.0).with_dressing(dressing);
            for dp in [-13.0, -3.0, 0.0, 2.5] {
                assert_eq!(susceptibility(&p, &c, dp).unwrap().chi, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn far_off_resonance_vanishes() {
        let p = triple_cpa();
        let t = susceptibility(&p, &ControlField::off(), 1e6).unwrap();
        assert!(t.chi.norm() < 1e-5 * p.g2n());
    }

    #[test]
    fn dressing_modes_agree_without_control() {
        let p = triple_cpa();
        for dp in [-17.0, -13.66, -5.0, 0.1, 3.66] {
            let a = susceptibility(&p, &ControlField::off(), dp).unwrap();
            let b = susceptibility(
                &p,
                &ControlField::off().with_dressing(Dressing::Transition1),
                dp,
            )
            .unwrap();
            assert_eq!(a.chi, b.chi);
        }
    }

    #[test]
    fn dressing_is_continuous_in_omega() {
        let p = triple_cpa();
        let off = susceptibility(&p, &ControlField::off(), -12.0).unwrap().chi;
        for dressing in [Dressing::AsPrinted, Dressing::Transition1] {
            let c = ControlField::new(1e-7, -13.6).with_dressing(dressing);
            let on = susceptibility(&p, &c, -12.0).unwrap().chi;
            assert!((on - off).norm() < 1e-10 * off.norm());
        }
    }

    #[test]
    fn only_rabi_magnitude_matters() {
        let p = triple_cpa();
        for dressing in [Dressing::AsPrinted, Dressing::Transition1] {
            let real = ControlField::new(0.5, -13.6).with_dressing(dressing);
            let mut cplx = real;
            cplx.omega = Complex64::from_polar(0.5, 1.1);
            for dp in [-14.0, -13.6, -13.55, -5.0] {
                let a = susceptibility(&p, &real, dp).unwrap().chi;
                let b = susceptibility(&p, &cplx, dp).unwrap().chi;
                assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn transition1_pole_gives_dark_response() {
        let p = triple_cpa();
        let c = ControlField::new(0.5, -13.6).with_dressing(Dressing::Transition1);
        let t = susceptibility(&p, &c, -13.6).unwrap();
        assert_eq!(t.d1_dressed, Complex64::new(0.0, 0.0));
        assert_relative_eq!(t.chi.re, (I * p.g2n() * t.d2).re, max_relative = 1e-15);
    }

    #[test]
    fn singular_atomic_denominator() {
        let mut p = triple_cpa();
        p.gamma23 = 0.0;
        assert_eq!(
            susceptibility(&p, &ControlField::off(), 0.0),
            Err(Error::Singularity("d2 denominator γ23 − 2iΔp"))
        );
        assert!(susceptibility(&p, &ControlField::off(), f64::INFINITY).is_err());
    }

    #[test]
    fn empty_cavity_resonant_transmission() {
        let p = triple_cpa().with_g_coll(0.0);
        let sol = steady_state_fields(&p, &ControlField::off(), &DriveInputs::symmetric(1.0, -5.0))
            .unwrap();
        assert_relative_eq!(sol.a_out_r.re, 1.0, max_relative = 1e-15);
        assert_relative_eq!(sol.i_t_norm_r, 1.0, max_relative = 1e-15);
        assert_relative_eq!(sol.i_cav_norm, 4.0, max_relative = 1e-15);
    }

    #[test]
    fn central_cpa_point() {
        // χ = i·100/101, D = 201/101, a_out = 2·101/201 − 1 = 1/201
        let (it, icav) = normalized_spectrum_point(&triple_cpa(), &ControlField::off(), -5.0).unwrap();
        assert_relative_eq!(it, (1.0f64 / 201.0).powi(2), max_relative = 1e-12);
        assert_relative_eq!(icav, 4.0 / (201.0f64 / 101.0).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn off_resonant_mirror_reflects() {
        let p = triple_cpa().with_g_coll(0.0);
        let drive = DriveInputs {
            a_in_r: Complex64::new(1.0, 0.0),
            a_in_l: Complex64::new(0.0, 0.0),
            delta_p: p.delta_c - 1e6 * p.kappa,
        };
        let sol = steady_state_fields(&p, &ControlField::off(), &drive).unwrap();
        assert!((sol.a_out_r + drive.a_in_r).norm() < 1e-5);
        assert!((sol.i_t_norm_r - 1.0).abs() < 1e-5);
        let (it, icav) = normalized_spectrum_point(&p, &ControlField::off(), 1e6).unwrap();
        assert!((it - 1.0).abs() < 1e-5 && icav < 1e-5);
    }

    #[test]
    fn input_output_identity_and_swap() {
        let mut p = triple_cpa();
        p.tau_rt = 0.37;
        p.mirror_t = p.kappa * p.tau_rt;
        let drive = DriveInputs {
            a_in_r: Complex64::new(0.3, -1.2),
            a_in_l: Complex64::new(-0.8, 0.1),
            delta_p: -9.3,
        };
        let c = ControlField::new(0.4, -9.0);
        let s = steady_state_fields(&p, &c, &drive).unwrap();
        let alt = p.sqrt_kappa_tau() * s.a - drive.a_in_r;
        assert!((alt - s.a_out_r).norm() <= 1e-12 * s.a_out_r.norm());
        let w = steady_state_fields(&p, &c, &drive.swapped()).unwrap();
        assert_eq!(w.a_out_r, s.a_out_l);
        assert_eq!(w.a_out_l, s.a_out_r);
    }

    #[test]
    fn zero_drive_is_rejected() {
        let r = steady_state_fields(&triple_cpa(), &ControlField::off(), &DriveInputs::symmetric(0.0, 0.0));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
