//! Spectral sweeps and switching metrics.
//!
//! A channel is one of the three polaritons. Switching a channel means
//! tuning the control field onto that polariton: the CPA dip there turns
//! into a transmission peak while the other two channels stay absorbing.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::normalized_spectrum_point;
use crate::params::{ControlField, SystemParams};
use crate::polariton::{polariton_frequencies, Channel};
use crate::search::{bisect, golden_max, golden_min};

/// Half-width, in Γ, of the window searched around a channel frequency.
pub const PEAK_WINDOW: f64 = 2.0;

/// Below this on/off reference intensity an efficiency is undefined.
const EFFICIENCY_FLOOR: f64 = 1e-12;

/// Precision, in Γ, of refined peak positions and half-level crossings.
const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    /// Δp ∈ [−20Γ, 10Γ], 3001 points.
    pub fn triple_cpa() -> Self {
        Self::new(-20.0, 10.0, 3001)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min >= self.max {
            return Err(Error::invalid("grid requires finite min < max"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = (self.count - 1) as f64;
        let span = self.max - self.min;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + span * (i as f64) / n
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub grid: Vec<f64>,
    /// I_T/I_in.
    pub i_t: Vec<f64>,
    /// κτ|a|²/I_in.
    pub i_cav: Vec<f64>,
    pub params: SystemParams,
    pub control: ControlField,
}

impl SpectrumSeries {
    /// I_T/I_in of the underlying model at an arbitrary detuning.
    pub fn transmission_at(&self, delta_p: f64) -> Result<f64> {
        normalized_spectrum_point(&self.params, &self.control, delta_p).map(|p| p.0)
    }

    pub fn intracavity_at(&self, delta_p: f64) -> Result<f64> {
        normalized_spectrum_point(&self.params, &self.control, delta_p).map(|p| p.1)
    }
}

pub fn sweep_spectrum(
    params: &SystemParams,
    control: &ControlField,
    grid_spec: &GridSpec,
) -> Result<SpectrumSeries> {
    grid_spec.validate()?;
    params.validate()?;
    control.validate()?;
    let grid = grid_spec.points();
    let values = grid
        .par_iter()
        .map(|&x| normalized_spectrum_point(params, control, x))
        .collect::<Result<Vec<_>>>()?;
    let (i_t, i_cav) = values.into_iter().unzip();
    Ok(SpectrumSeries {
        grid,
        i_t,
        i_cav,
        params: *params,
        control: *control,
    })
}

/// η_T = (I_T(on) − I_T(off)) / I_T(on).
pub fn eta_output(on: f64, off: f64) -> Result<f64> {
    if on < EFFICIENCY_FLOOR {
        return Err(Error::UndefinedEfficiency(format!(
            "on-state output intensity {on:e} vanishes"
        )));
    }
    Ok((on - off) / on)
}

/// η_I = (I(off) − I(on)) / I(off).
pub fn eta_intracavity(on: f64, off: f64) -> Result<f64> {
    if off < EFFICIENCY_FLOOR {
        return Err(Error::UndefinedEfficiency(format!(
            "off-state intracavity intensity {off:e} vanishes"
        )));
    }
    Ok((off - on) / off)
}

fn on_off(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
) -> Result<((f64, f64), (f64, f64))> {
    if !control.is_on() {
        return Err(Error::invalid("on state requires Ω ≠ 0"));
    }
    let on = normalized_spectrum_point(params, control, delta_p)?;
    let off = normalized_spectrum_point(params, &control.switched_off(), delta_p)?;
    Ok((on, off))
}

pub fn switching_efficiency_output(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
) -> Result<f64> {
    let (on, off) = on_off(params, control, delta_p)?;
    eta_output(on.0, off.0)
}

pub fn switching_efficiency_intracavity(
    params: &SystemParams,
    control: &ControlField,
    delta_p: f64,
) -> Result<f64> {
    let (on, off) = on_off(params, control, delta_p)?;
    eta_intracavity(on.1, off.1)
}

/// Detuning of the on-state intracavity minimum within `half_window` of the
/// control detuning.
///
/// The dressed feature narrows as |Ω|² near two-photon resonance, so offsets
/// from Δ are sampled on a two-sided logarithmic ladder before a
/// golden-section refinement between the best rung's neighbours.
pub fn intracavity_dip(params: &SystemParams, control: &ControlField, half_window: f64) -> Result<f64> {
    if !(half_window > 0.0) {
        return Err(Error::invalid("dip search window must be positive"));
    }
    let center = control.delta;
    let top = half_window.log10();
    let mut offsets = vec![0.0];
    let mut k = -12.0;
    while k <= top + 1e-12 {
        let o = 10f64.powf(k);
        offsets.push(o);
        offsets.push(-o);
        k += 0.05;
    }
    offsets.push(half_window);
    offsets.push(-half_window);
    offsets.sort_by(f64::total_cmp);
    offsets.dedup();

    let eval = |o: f64| normalized_spectrum_point(params, control, center + o).map(|p| p.1);
    let mut best = (0, f64::INFINITY);
    for (i, &o) in offsets.iter().enumerate() {
        let v = eval(o)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let lo = offsets[i.saturating_sub(1)];
    let hi = offsets[(i + 1).min(offsets.len() - 1)];
    let tol = 1e-9 * lo.abs().max(hi.abs());
    let (o, v) = golden_min(eval, lo, hi, tol)?;
    Ok(if v <= best.1 { center + o } else { center + offsets[i] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// Control Rabi frequency Ω/Γ.
    Omega,
    /// Collective coupling g√N/Γ.
    GColl,
}

impl ScanAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanAxis::Omega => "omega",
            ScanAxis::GColl => "g_coll",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "omega" => Some(ScanAxis::Omega),
            "g_coll" => Some(ScanAxis::GColl),
            _ => None,
        }
    }
}

/// Switching efficiencies of one channel at one scan value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEfficiency {
    /// Control detuning, tuned to the channel's polariton.
    pub control_delta: f64,
    /// η_T, evaluated at two-photon resonance Δp = Δ.
    pub eta_t: f64,
    /// Signal detuning of the on-state intracavity minimum.
    pub dip_delta_p: f64,
    /// η_I, evaluated at `dip_delta_p`.
    pub eta_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyScan {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
    /// Indexed `[value][channel]`.
    pub channels: Vec<[ChannelEfficiency; 3]>,
}

impl EfficiencyScan {
    pub fn eta_t(&self, channel: Channel) -> Vec<f64> {
        self.channels.iter().map(|c| c[channel.index()].eta_t).collect()
    }

    pub fn eta_i(&self, channel: Channel) -> Vec<f64> {
        self.channels.iter().map(|c| c[channel.index()].eta_i).collect()
    }
}

/// Efficiencies of one channel with the control tuned onto its polariton.
pub fn channel_efficiency(
    params: &SystemParams,
    control: &ControlField,
    channel_freq: f64,
) -> Result<ChannelEfficiency> {
    let mut control = *control;
    control.delta = channel_freq;
    if !control.is_on() {
        return Ok(ChannelEfficiency {
            control_delta: channel_freq,
            eta_t: 0.0,
            dip_delta_p: channel_freq,
            eta_i: 0.0,
        });
    }
    let eta_t = switching_efficiency_output(params, &control, channel_freq)?;
    let dip = intracavity_dip(params, &control, PEAK_WINDOW)?;
    let eta_i = switching_efficiency_intracavity(params, &control, dip)?;
    Ok(ChannelEfficiency {
        control_delta: channel_freq,
        eta_t,
        dip_delta_p: dip,
        eta_i,
    })
}

pub fn efficiency_scan(
    params: &SystemParams,
    control_template: &ControlField,
    axis: ScanAxis,
    values: &[f64],
) -> Result<EfficiencyScan> {
    if values.is_empty() {
        return Err(Error::invalid("scan needs at least one value"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("scan values must be finite and positive"));
    }
    params.validate()?;
    control_template.validate()?;
    let channels = values
        .par_iter()
        .map(|&v| {
            let (p, c) = match axis {
                ScanAxis::Omega => (*params, control_template.with_omega(v)),
                ScanAxis::GColl => (params.with_g_coll(v), *control_template),
            };
            let pols = polariton_frequencies(&p)?;
            let mut out = [ChannelEfficiency {
                control_delta: 0.0,
                eta_t: 0.0,
                dip_delta_p: 0.0,
                eta_i: 0.0,
            }; 3];
            for (ch, f) in pols.iter() {
                out[ch.index()] = channel_efficiency(&p, &c, f)?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyScan {
        axis,
        values: values.to_vec(),
        channels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthResult {
    pub channel_delta_p: f64,
    pub peak_delta_p: f64,
    pub i_max: f64,
    pub i_min: f64,
    pub half_level: f64,
    /// Full width 2δ in units of Γ.
    pub two_delta_gamma: f64,
    pub two_delta_mhz: f64,
    /// τ = 1/(4πδ) with δ in MHz.
    pub switch_time_us: f64,
}

/// Bandwidth of the on-state transmission peak near `channel_delta_p`,
/// referenced to the off-state intensity at the peak.
pub fn bandwidth_and_switch_time(
    on: &SpectrumSeries,
    off: &SpectrumSeries,
    channel_delta_p: f64,
) -> Result<BandwidthResult> {
    if on.grid != off.grid {
        return Err(Error::invalid("on and off spectra must share a grid"));
    }
    bandwidth_from_profiles(
        &on.grid,
        &on.i_t,
        |x| on.transmission_at(x),
        |x| off.transmission_at(x),
        channel_delta_p,
        on.params.gamma_mhz,
    )
}

/// Bandwidth measurement on arbitrary sampled profiles. `on_vals` must be
/// `on_fn` sampled on `grid`.
pub fn bandwidth_from_profiles<F, G>(
    grid: &[f64],
    on_vals: &[f64],
    on_fn: F,
    off_fn: G,
    channel_delta_p: f64,
    gamma_mhz: f64,
) -> Result<BandwidthResult>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    if grid.len() != on_vals.len() || grid.len() < 3 {
        return Err(Error::invalid("profile needs at least three samples matching the grid"));
    }
    let no_peak = || Error::NoPeak {
        center: channel_delta_p,
    };

    // refine every interior local maximum inside the window, keep the highest
    let mut peak: Option<(usize, f64, f64)> = None;
    for i in 1..grid.len() - 1 {
        if (grid[i] - channel_delta_p).abs() > PEAK_WINDOW {
            continue;
        }
        if !(on_vals[i] >= on_vals[i - 1] && on_vals[i] > on_vals[i + 1]) {
            continue;
        }
        let (x, v) = golden_max(&on_fn, grid[i - 1], grid[i + 1], REFINE_TOL)?;
        let (x, v) = if v >= on_vals[i] { (x, v) } else { (grid[i], on_vals[i]) };
        if peak.is_none_or(|p| v > p.2) {
            peak = Some((i, x, v));
        }
    }
    let (idx, peak_x, i_max) = peak.ok_or_else(no_peak)?;
    let i_min = off_fn(peak_x)?;
    if !(i_max > i_min) {
        return Err(Error::BandwidthUndefined(format!(
            "no on/off contrast at the peak (I_max = {i_max}, I_min = {i_min})"
        )));
    }
    let half = 0.5 * (i_max + i_min);
    let level = |x: f64| on_fn(x).map(|v| v - half);

    // left crossing
    let mut k = if grid[idx] <= peak_x { idx } else { idx - 1 };
    let left_hi = if on_vals[k] <= half {
        peak_x
    } else {
        loop {
            if k == 0 {
                return Err(Error::BandwidthUndefined(
                    "half level not crossed below the peak".into(),
                ));
            }
            k -= 1;
            if on_vals[k] <= half {
                break grid[k + 1];
            }
        }
    };
    let left = bisect(level, grid[k], left_hi, REFINE_TOL)?;

    // right crossing
    let last = grid.len() - 1;
    let mut k = if grid[idx] >= peak_x { idx } else { idx + 1 };
    let right_lo = if on_vals[k] <= half {
        peak_x
    } else {
        loop {
            if k == last {
                return Err(Error::BandwidthUndefined(
                    "half level not crossed above the peak".into(),
                ));
            }
            k += 1;
            if on_vals[k] <= half {
                break grid[k - 1];
            }
        }
    };
    let right = bisect(level, right_lo, grid[k], REFINE_TOL)?;

    let two_delta_gamma = right - left;
    if !(two_delta_gamma > 0.0) {
        return Err(Error::BandwidthUndefined("degenerate half-level crossings".into()));
    }
    let two_delta_mhz = two_delta_gamma * gamma_mhz;
    let delta_mhz = 0.5 * two_delta_mhz;
    Ok(BandwidthResult {
        channel_delta_p,
        peak_delta_p: peak_x,
        i_max,
        i_min,
        half_level: half,
        two_delta_gamma,
        two_delta_mhz,
        switch_time_us: 1.0 / (4.0 * PI * delta_mhz),
    })
}
