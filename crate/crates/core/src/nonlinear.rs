//! Semiclassical nonlinear regime.
//!
//! Each atom is a four-level state ψ = Σ cᵢ|i⟩ with phenomenological decay
//! on the excited amplitudes. For a fixed intracavity amplitude the steady
//! state is linear in the ground amplitude c₃, which normalisation then
//! fixes in closed form. Sweeping |a| and inverting the cavity balance for
//! the drive traces the full, possibly multivalued, input-output curve
//! without any root finding.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ControlField, SystemParams};
use crate::search::golden_min;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default number of log-spaced amplitude samples (zero is prepended).
pub const DEFAULT_BRANCH_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicAmplitudes {
    pub c1: Complex64,
    pub c2: Complex64,
    /// Ground amplitude, real and non-negative by phase convention.
    pub c3: f64,
    pub c4: Complex64,
    /// The |4⟩ equation was degenerate (undamped, exactly resonant, Ω = 0)
    /// and the c₄ = 0 branch was taken.
    pub degenerate: bool,
}

impl AtomicAmplitudes {
    pub fn ground() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            c1: zero,
            c2: zero,
            c3: 1.0,
            c4: zero,
            degenerate: false,
        }
    }

    /// `[N₁, N₂, N₃, N₄]`.
    pub fn populations(&self) -> [f64; 4] {
        [
            self.c1.norm_sqr(),
            self.c2.norm_sqr(),
            self.c3 * self.c3,
            self.c4.norm_sqr(),
        ]
    }

    pub fn norm(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn sigma13(&self) -> Complex64 {
        self.c1 * self.c3
    }

    pub fn sigma23(&self) -> Complex64 {
        self.c2 * self.c3
    }
}

/// Excited amplitudes per unit ground amplitude, `(c1, c2, c4) / c3`.
fn excited_ratios(
    params: &SystemParams,
    control: &ControlField,
    a: Complex64,
    delta_p: f64,
) -> Result<(Complex64, Complex64, Complex64, bool)> {
    let g = params.g_single();
    let drive = I * g * a;
    let l1 = Complex64::new(-params.gamma13 / 2.0, delta_p + params.delta12);
    let l2 = Complex64::new(-params.gamma23 / 2.0, delta_p);
    let l4 = Complex64::new(-params.gamma4 / 2.0, delta_p - control.delta);
    let omega = control.omega;
    let zero = Complex64::new(0.0, 0.0);

    if l2.norm_sqr() == 0.0 {
        return Err(Error::Singularity("|2⟩ amplitude coefficient iΔp − γ23/2"));
    }
    let x2 = -drive / l2;

    if l4.norm_sqr() == 0.0 {
        if omega.norm_sqr() > 0.0 {
            // dark resonance: c1 = 0 and the c1 balance fixes c4
            return Ok((zero, x2, -g * a / omega, false));
        }
        if l1.norm_sqr() == 0.0 {
            return Err(Error::Singularity("|1⟩ amplitude coefficient i(Δp + Δ12) − γ13/2"));
        }
        return Ok((-drive / l1, x2, zero, true));
    }
    let den = l1 + omega.norm_sqr() / l4;
    if den.norm_sqr() == 0.0 {
        return Err(Error::Singularity("dressed |1⟩ amplitude coefficient"));
    }
    let x1 = -drive / den;
    let x4 = -I * omega.conj() * x1 / l4;
    Ok((x1, x2, x4, false))
}

/// Steady atomic state for a fixed intracavity amplitude `a`.
pub fn atomic_steady_state(
    params: &SystemParams,
    control: &ControlField,
    a: Complex64,
    delta_p: f64,
) -> Result<AtomicAmplitudes> {
    if !(a.re.is_finite() && a.im.is_finite() && delta_p.is_finite()) {
        return Err(Error::invalid("cavity amplitude and detuning must be finite"));
    }
    let (x1, x2, x4, degenerate) = excited_ratios(params, control, a, delta_p)?;
    let s = x1.norm_sqr() + x2.norm_sqr() + x4.norm_sqr();
    let c3 = 1.0 / (1.0 + s).sqrt();
    Ok(AtomicAmplitudes {
        c1: x1 * c3,
        c2: x2 * c3,
        c3,
        c4: x4 * c3,
        degenerate,
    })
}

/// Per-side drive a_in (symmetric) that sustains intracavity amplitude `a`.
pub fn required_input(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
    a: Complex64,
) -> Result<Complex64> {
    let atoms = atomic_steady_state(params, control, a, delta_p)?;
    Ok(input_for(params, delta_p, a, &atoms))
}

fn input_for(params: &SystemParams, delta_p: f64, a: Complex64, atoms: &AtomicAmplitudes) -> Complex64 {
    let gn = params.g_single() * params.n_atoms as f64;
    let cavity = Complex64::new(params.kappa, params.delta_c - delta_p) * a;
    (cavity - I * gn * (atoms.sigma13() + atoms.sigma23())) / (2.0 * params.sqrt_kappa_over_tau())
}

/// Residual of the cavity steady-state balance for symmetric drive `a_in`.
pub fn cavity_residual(
    params: &SystemParams,
    delta_p: f64,
    a: Complex64,
    a_in: Complex64,
    atoms: &AtomicAmplitudes,
) -> Complex64 {
    let gn = params.g_single() * params.n_atoms as f64;
    -Complex64::new(params.kappa, params.delta_c - delta_p) * a
        + I * gn * (atoms.sigma13() + atoms.sigma23())
        + 2.0 * params.sqrt_kappa_over_tau() * a_in
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub a_mag: f64,
    pub i_in: f64,
    pub i_t: f64,
    /// Sign of dI_in/d|a|: −1, 0 or +1.
    pub slope_sign: i8,
    pub amplitudes: AtomicAmplitudes,
}

impl BranchPoint {
    /// I_T/I_in, or `None` at zero input.
    pub fn ratio(&self) -> Option<f64> {
        (self.i_in > 0.0).then(|| self.i_t / self.i_in)
    }
}

/// A traced input-output curve and the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub params: SystemParams,
    pub control: ControlField,
    pub delta_p: f64,
    pub points: Vec<BranchPoint>,
}

/// `0` followed by `count` log-spaced values from `a_min` to `a_max`.
pub fn log_amplitude_grid(a_min: f64, a_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(a_min > 0.0 && a_max > a_min && a_max.is_finite()) || count < 2 {
        return Err(Error::invalid("amplitude grid needs 0 < a_min < a_max and count ≥ 2"));
    }
    let (lo, hi) = (a_min.ln(), a_max.ln());
    let step = (hi - lo) / (count - 1) as f64;
    let mut grid = Vec::with_capacity(count + 1);
    grid.push(0.0);
    grid.extend((0..count).map(|i| {
        if i + 1 == count {
            a_max
        } else {
            (lo + step * i as f64).exp()
        }
    }));
    Ok(grid)
}

fn point_at(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
    a_mag: f64,
) -> Result<(f64, f64, AtomicAmplitudes)> {
    let a = Complex64::new(a_mag, 0.0);
    let atoms = atomic_steady_state(params, control, a, delta_p)?;
    let a_in = input_for(params, delta_p, a, &atoms);
    let a_out = params.sqrt_kappa_tau() * a - a_in;
    Ok((a_in.norm_sqr(), a_out.norm_sqr(), atoms))
}

pub fn trace_input_output(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
    a_grid: &[f64],
) -> Result<Branch> {
    params.validate()?;
    control.validate()?;
    if a_grid.is_empty() {
        return Err(Error::invalid("amplitude grid is empty"));
    }
    if a_grid[0] != 0.0 {
        return Err(Error::invalid("amplitude grid must start at 0"));
    }
    if a_grid.windows(2).any(|w| !(w[1] > w[0])) || a_grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("amplitude grid must be finite and strictly increasing"));
    }
    let raw = a_grid
        .par_iter()
        .map(|&m| point_at(params, control, delta_p, m))
        .collect::<Result<Vec<_>>>()?;

    let n = raw.len();
    let slope = |i: usize| -> i8 {
        if n < 2 {
            return 0;
        }
        let (lo, hi) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let d = raw[hi].0 - raw[lo].0;
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    };
    let points = raw
        .iter()
        .enumerate()
        .map(|(i, &(i_in, i_t, amplitudes))| BranchPoint {
            a_mag: a_grid[i],
            i_in,
            i_t,
            slope_sign: slope(i),
            amplitudes,
        })
        .collect();
    Ok(Branch {
        params: *params,
        control: *control,
        delta_p,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpaThreshold {
    pub a_mag: f64,
    pub i_in: f64,
    pub ratio: f64,
}

/// Input intensities at which I_T/I_in has a local minimum below
/// `threshold`, each refined in |a| on the continuous model.
pub fn detect_cpa_thresholds(branch: &Branch, threshold: f64) -> Result<Vec<CpaThreshold>> {
    if branch.points.is_empty() {
        return Err(Error::invalid("branch is empty"));
    }
    let pts: Vec<(f64, f64)> = branch
        .points
        .iter()
        .filter_map(|p| p.ratio().map(|r| (p.a_mag, r)))
        .collect();
    let ratio_at = |m: f64| -> Result<f64> {
        let (i_in, i_t, _) = point_at(&branch.params, &branch.control, branch.delta_p, m)?;
        Ok(if i_in > 0.0 { i_t / i_in } else { f64::INFINITY })
    };
    let mut out = Vec::new();
    for i in 0..pts.len() {
        let here = pts[i].1;
        let below_prev = i == 0 || here < pts[i - 1].1;
        let below_next = i + 1 == pts.len() || here <= pts[i + 1].1;
        if !(below_prev && below_next) || pts.len() < 2 {
            continue;
        }
        let lo = pts[i.saturating_sub(1)].0;
        let hi = pts[(i + 1).min(pts.len() - 1)].0;
        let (m, r) = golden_min(ratio_at, lo, hi, 1e-9 * hi)?;
        let (m, r) = if r <= here { (m, r) } else { (pts[i].0, here) };
        if r < threshold {
            let (i_in, _, _) = point_at(&branch.params, &branch.control, branch.delta_p, m)?;
            out.push(CpaThreshold { a_mag: m, i_in, ratio: r });
        }
    }
    Ok(out)
}

/// I_in windows covered by at least three branch points. Each fold pair
/// (slope + → − then − → +) bounds one bistable window.
pub fn detect_multistability(branch: &Branch) -> Vec<(f64, f64)> {
    let pts = &branch.points;
    let mut out = Vec::new();
    let mut fold_high: Option<f64> = None;
    let mut last_sign = 0i8;
    for (i, p) in pts.iter().enumerate() {
        if p.slope_sign == 0 {
            continue;
        }
        if last_sign > 0 && p.slope_sign < 0 {
            fold_high = Some(pts[i - 1].i_in.max(p.i_in));
        } else if last_sign < 0 && p.slope_sign > 0 {
            if let Some(high) = fold_high.take() {
                let low = pts[i - 1].i_in.min(p.i_in);
                if low < high {
                    out.push((low, high));
                }
            }
        }
        last_sign = p.slope_sign;
    }
    out
}
