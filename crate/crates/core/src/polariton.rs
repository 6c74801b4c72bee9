//! Polariton eigenfrequencies and coherent-perfect-absorption bookkeeping.
//!
//! The cavity mode (bare frequency Δc) couples with strength g√N to two
//! collective spin waves whose bare resonances sit at the poles of d₁
//! (Δp = −Δ₁₂) and d₂ (Δp = 0). Dropping decay, the normal modes are the
//! eigenvalues of a real symmetric 3×3 matrix.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::search::golden_min;
use crate::spectra::SpectrumSeries;

/// Default upper bound on I_T/I_in for a spectrum minimum to count as CPA.
pub const DEFAULT_CPA_THRESHOLD: f64 = 1e-3;

/// Precision, in units of Γ, to which CPA positions are refined.
const CPA_REFINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Left,
    Central,
    Right,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Left, Channel::Central, Channel::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Left => "left",
            Channel::Central => "central",
            Channel::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonSet {
    /// Ascending; index with [`Channel::index`].
    pub freqs: [f64; 3],
}

impl PolaritonSet {
    pub fn freq(&self, channel: Channel) -> f64 {
        self.freqs[channel.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Channel, f64)> + '_ {
        Channel::ALL.into_iter().map(move |c| (c, self.freq(c)))
    }
}

pub fn coupling_matrix(params: &SystemParams) -> Result<Matrix3<f64>> {
    params.validate()?;
    let g = params.g_coll;
    Ok(Matrix3::new(
        params.delta_c, g, g, //
        g, -params.delta12, 0.0, //
        g, 0.0, 0.0,
    ))
}

pub fn polariton_frequencies(params: &SystemParams) -> Result<PolaritonSet> {
    let m = coupling_matrix(params)?;
    let eig = SymmetricEigen::new(m);
    let mut freqs = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    freqs.sort_by(f64::total_cmp);
    Ok(PolaritonSet { freqs })
}

/// g√N + Δc; zero when the CPA criterion g√N = −Δc holds.
pub fn cpa_criterion_residual(params: &SystemParams) -> f64 {
    params.g_coll + params.delta_c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpaPoint {
    pub delta_p: f64,
    pub i_t_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpaReport {
    pub residual: f64,
    pub cpa_points: Vec<CpaPoint>,
}

/// Finds every local minimum of I_T/I_in in `spectrum` that dips below
/// `threshold`, refining each on the continuous model.
pub fn locate_cpa_points(spectrum: &SpectrumSeries, threshold: f64) -> Result<CpaReport> {
    if spectrum.grid.is_empty() {
        return Err(Error::invalid("spectrum is empty"));
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid("CPA threshold must be positive"));
    }
    let (grid, v) = (&spectrum.grid, &spectrum.i_t);
    let mut cpa_points = Vec::new();
    for i in 1..grid.len().saturating_sub(1) {
        if !(v[i] < v[i - 1] && v[i] <= v[i + 1]) {
            continue;
        }
        let (delta_p, i_t_norm) = golden_min(
            |x| spectrum.transmission_at(x),
            grid[i - 1],
            grid[i + 1],
            CPA_REFINE_TOL,
        )?;
        let (delta_p, i_t_norm) = if i_t_norm <= v[i] {
            (delta_p, i_t_norm)
        } else {
            (grid[i], v[i])
        };
        if i_t_norm < threshold {
            cpa_points.push(CpaPoint { delta_p, i_t_norm });
        }
    }
    Ok(CpaReport {
        residual: cpa_criterion_residual(&spectrum.params),
        cpa_points,
    })
}
