//! Domain types shared by every analysis.
//!
//! All rates and detunings are expressed in units of the natural linewidth
//! Γ, with ħ = 1. The only physical anchor is `gamma_mhz`, used when a
//! result is converted to MHz or microseconds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural linewidth Γ, the unit of every rate.
pub const GAMMA: f64 = 1.0;

/// Single-atom coupling used when only the collective coupling is known.
pub const NOMINAL_G_SINGLE: f64 = 0.01;

/// ⁸⁷Rb D₂ natural linewidth Γ/2π in MHz.
pub const RB87_GAMMA_MHZ: f64 = 6.07;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub gamma_mhz: f64,
    /// Loss rate per mirror, κ₁ = κ₂ = κ.
    pub kappa: f64,
    /// Mirror transmission T, tied to the other two by κ = T/τ.
    pub mirror_t: f64,
    /// Cavity round-trip time τ in units of 1/Γ.
    pub tau_rt: f64,
    /// Collective coupling g√N.
    pub g_coll: f64,
    pub n_atoms: u64,
    pub delta12: f64,
    pub delta_c: f64,
    pub gamma13: f64,
    pub gamma23: f64,
    /// Decay of the |4⟩–|3⟩ ground-state coherence.
    pub gamma4: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::triple_cpa()
    }
}

impl SystemParams {
    /// Triple-CPA configuration: Δc = −Δ₁₂/2, Δ₁₂ = 10Γ, g√N = 5Γ, κ = Γ.
    pub fn triple_cpa() -> Self {
        let g_coll = 5.0;
        Self {
            gamma_mhz: RB87_GAMMA_MHZ,
            kappa: 1.0,
            mirror_t: 1.0,
            tau_rt: 1.0,
            g_coll,
            n_atoms: atoms_for(g_coll, NOMINAL_G_SINGLE),
            delta12: 10.0,
            delta_c: -5.0,
            gamma13: GAMMA,
            gamma23: GAMMA,
            gamma4: 0.0,
        }
    }

    /// Nonlinear-regime configuration: as [`SystemParams::triple_cpa`] but with
    /// g√N = 2√2 Γ.
    pub fn weak_coupling() -> Self {
        Self::triple_cpa().with_g_coll(2.0 * std::f64::consts::SQRT_2)
    }

    /// Single-atom coupling g, derived so that g²N = (g√N)² holds.
    pub fn g_single(&self) -> f64 {
        self.g_coll / (self.n_atoms as f64).sqrt()
    }

    /// Changes g√N, re-deriving N from the current single-atom coupling.
    pub fn with_g_coll(mut self, g_coll: f64) -> Self {
        let g = self.g_single();
        let g = if g > 0.0 && g.is_finite() {
            g
        } else {
            NOMINAL_G_SINGLE
        };
        self.n_atoms = atoms_for(g_coll, g);
        self.g_coll = g_coll;
        self
    }

    /// Sets κ and keeps τ, adjusting T.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self.mirror_t = kappa * self.tau_rt;
        self
    }

    /// g²N.
    pub fn g2n(&self) -> f64 {
        self.g_coll * self.g_coll
    }

    pub fn sqrt_kappa_over_tau(&self) -> f64 {
        (self.kappa / self.tau_rt).sqrt()
    }

    pub fn sqrt_kappa_tau(&self) -> f64 {
        (self.kappa * self.tau_rt).sqrt()
    }

    /// γ₁₃ = γ₂₃ = Γ.
    pub fn has_default_decay(&self) -> bool {
        self.gamma13 == GAMMA && self.gamma23 == GAMMA
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma_mhz", self.gamma_mhz),
            ("kappa", self.kappa),
            ("mirror_t", self.mirror_t),
            ("tau_rt", self.tau_rt),
            ("g_coll", self.g_coll),
            ("delta12", self.delta12),
            ("delta_c", self.delta_c),
            ("gamma13", self.gamma13),
            ("gamma23", self.gamma23),
            ("gamma4", self.gamma4),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::constraint(name, "must be finite"));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::constraint("kappa", "must be positive"));
        }
        if self.tau_rt <= 0.0 {
            return Err(Error::constraint("tau_rt", "must be positive"));
        }
        if self.gamma_mhz <= 0.0 {
            return Err(Error::constraint("gamma_mhz", "must be positive"));
        }
        if (self.kappa - self.mirror_t / self.tau_rt).abs() > 1e-12 * self.kappa {
            return Err(Error::constraint(
                "mirror_t",
                format!(
                    "kappa = mirror_t / tau_rt violated ({} vs {}/{})",
                    self.kappa, self.mirror_t, self.tau_rt
                ),
            ));
        }
        if self.g_coll < 0.0 {
            return Err(Error::constraint("g_coll", "must be non-negative"));
        }
        if self.n_atoms == 0 {
            return Err(Error::constraint("n_atoms", "must be a positive integer"));
        }
        for (name, v) in [
            ("gamma13", self.gamma13),
            ("gamma23", self.gamma23),
            ("gamma4", self.gamma4),
        ] {
            if v < 0.0 {
                return Err(Error::constraint(name, "decay rates must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Atom number giving `g_coll` at single-atom coupling `g`, at least one.
pub fn atoms_for(g_coll: f64, g: f64) -> u64 {
    let n = (g_coll / g).powi(2).round();
    if n.is_finite() && n >= 1.0 {
        n as u64
    } else {
        1
    }
}

/// Which transition the control field dresses in the closed-form
/// susceptibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dressing {
    /// Dressing term attached to the |3⟩→|2⟩ response d₂.
    #[default]
    AsPrinted,
    /// Dressing term attached to the |3⟩→|1⟩ response d₁, the branch the
    /// control actually couples to.
    Transition1,
}

impl Dressing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dressing::AsPrinted => "as_printed",
            Dressing::Transition1 => "transition1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "as_printed" => Some(Dressing::AsPrinted),
            "transition1" => Some(Dressing::Transition1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlField {
    /// Rabi frequency Ω.
    pub omega: Complex64,
    /// Control detuning Δ.
    pub delta: f64,
    pub dressing: Dressing,
}

impl ControlField {
    pub fn new(omega: f64, delta: f64) -> Self {
        Self {
            omega: Complex64::new(omega, 0.0),
            delta,
            dressing: Dressing::AsPrinted,
        }
    }

    pub fn off() -> Self {
        Self::default()
    }

    pub fn with_dressing(mut self, dressing: Dressing) -> Self {
        self.dressing = dressing;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = Complex64::new(omega, 0.0);
        self
    }

    /// The same configuration with the control switched off.
    pub fn switched_off(mut self) -> Self {
        self.omega = Complex64::new(0.0, 0.0);
        self
    }

    pub fn is_on(&self) -> bool {
        self.omega.norm_sqr() > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.re.is_finite() && self.omega.im.is_finite()) {
            return Err(Error::constraint("omega", "must be finite"));
        }
        if !self.delta.is_finite() {
            return Err(Error::constraint("delta", "must be finite"));
        }
        Ok(())
    }
}

/// Signal inputs injected through the right and left mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveInputs {
    pub a_in_r: Complex64,
    pub a_in_l: Complex64,
    /// Signal detuning Δp.
    pub delta_p: f64,
}

impl DriveInputs {
    pub fn symmetric(amplitude: f64, delta_p: f64) -> Self {
        let a = Complex64::new(amplitude, 0.0);
        Self {
            a_in_r: a,
            a_in_l: a,
            delta_p,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            a_in_r: self.a_in_l,
            a_in_l: self.a_in_r,
            delta_p: self.delta_p,
        }
    }

    /// Reference input intensity I_in: the larger of the two sides.
    pub fn i_in(&self) -> f64 {
        self.a_in_r.norm_sqr().max(self.a_in_l.norm_sqr())
    }
}
