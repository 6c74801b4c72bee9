//! Run configuration: a flat `section.key = value` document.
//!
//! ```text
//! # triple-CPA sweep
//! system.g_coll = 5
//! control.omega = 0.5
//! control.delta = -13.66
//! output.format = json
//! ```
//!
//! Omitted keys take the triple-CPA defaults. Angular quantities are in
//! units of Γ.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::DEFAULT_BRANCH_POINTS;
use crate::oracle::{IntegrationConfig, DEFAULT_DRIVE_SCALE};
use crate::params::{atoms_for, ControlField, Dressing, SystemParams, NOMINAL_G_SINGLE};
use crate::polariton::DEFAULT_CPA_THRESHOLD;
use crate::spectra::{GridSpec, ScanAxis};

const KEYS: &[&str] = &[
    "system.g_coll",
    "system.n_atoms",
    "system.g_single",
    "system.kappa",
    "system.tau_rt",
    "system.mirror_t",
    "system.delta12",
    "system.delta_c",
    "system.gamma13",
    "system.gamma23",
    "system.gamma4",
    "system.gamma_mhz",
    "control.omega",
    "control.omega_im",
    "control.delta",
    "control.dressing",
    "sweep.min",
    "sweep.max",
    "sweep.count",
    "cpa.threshold",
    "efficiency.axis",
    "efficiency.min",
    "efficiency.max",
    "efficiency.count",
    "efficiency.spacing",
    "bandwidth.omega_left",
    "bandwidth.omega_central",
    "bandwidth.omega_right",
    "bandwidth.delta_left",
    "bandwidth.delta_central",
    "bandwidth.delta_right",
    "nonlinear.delta_p",
    "nonlinear.a_min",
    "nonlinear.a_max",
    "nonlinear.points",
    "nonlinear.threshold",
    "oracle.dt_initial",
    "oracle.t_max",
    "oracle.convergence_tol",
    "oracle.rtol",
    "oracle.atol",
    "oracle.drive_scale",
    "oracle.count",
    "validate.draws",
    "validate.seed",
    "output.format",
    "output.path",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySpec {
    pub axis: ScanAxis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for EfficiencySpec {
    fn default() -> Self {
        Self {
            axis: ScanAxis::Omega,
            min: 1e-3,
            max: 0.5,
            count: 50,
            spacing: Spacing::Log,
        }
    }
}

impl EfficiencySpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.count {
                    return self.max;
                }
                let f = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSpec {
    /// Control Rabi frequency per channel.
    pub omega: [f64; 3],
    /// Control detuning per channel; `None` tunes onto the polariton.
    pub delta: [Option<f64>; 3],
}

impl Default for BandwidthSpec {
    fn default() -> Self {
        Self {
            omega: [0.5, 0.5, 1.0],
            delta: [None; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSpec {
    /// Signal detuning; `None` means Δp = Δc.
    pub delta_p: Option<f64>,
    pub a_min: f64,
    pub a_max: f64,
    pub points: usize,
    pub threshold: f64,
}

impl Default for NonlinearSpec {
    fn default() -> Self {
        Self {
            delta_p: None,
            a_min: 1e-2,
            a_max: 1e4,
            points: DEFAULT_BRANCH_POINTS,
            threshold: DEFAULT_CPA_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub dt_initial: f64,
    /// `None` means 200/κ.
    pub t_max: Option<f64>,
    pub convergence_tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub drive_scale: f64,
    /// Points in the cross-check grid, spanning the sweep range.
    pub count: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        let d = IntegrationConfig::default();
        Self {
            dt_initial: d.dt_initial,
            t_max: None,
            convergence_tol: d.convergence_tol,
            rtol: d.rtol,
            atol: d.atol,
            drive_scale: DEFAULT_DRIVE_SCALE,
            count: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateSpec {
    pub draws: usize,
    pub seed: u64,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        Self {
            draws: 1000,
            seed: 20_240_607,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: SystemParams,
    pub control: ControlField,
    pub sweep: GridSpec,
    pub cpa_threshold: f64,
    pub efficiency: EfficiencySpec,
    pub bandwidth: BandwidthSpec,
    pub nonlinear: NonlinearSpec,
    pub oracle: OracleSpec,
    pub validate: ValidateSpec,
    pub output: OutputSpec,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::triple_cpa()
    }
}

impl RunConfig {
    pub fn defaults() -> Self {
        Self {
            cpa_threshold: DEFAULT_CPA_THRESHOLD,
            ..Default::default()
        }
    }

    pub fn integration(&self) -> IntegrationConfig {
        IntegrationConfig {
            dt_initial: self.oracle.dt_initial,
            t_max: self.oracle.t_max.unwrap_or(200.0 / self.system.kappa),
            convergence_tol: self.oracle.convergence_tol,
            rtol: self.oracle.rtol,
            atol: self.oracle.atol,
        }
    }

    pub fn oracle_grid(&self) -> GridSpec {
        GridSpec::new(self.sweep.min, self.sweep.max, self.oracle.count)
    }

    pub fn nonlinear_delta_p(&self) -> f64 {
        self.nonlinear.delta_p.unwrap_or(self.system.delta_c)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.control.validate()?;
        self.sweep
            .validate()
            .map_err(|e| Error::constraint("sweep", e.to_string()))?;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.cpa_threshold) {
            return Err(Error::constraint("cpa.threshold", "must be positive"));
        }
        let e = &self.efficiency;
        if !(pos(e.min) && pos(e.max) && e.max >= e.min) || e.count == 0 || (e.count > 1 && e.max == e.min) {
            return Err(Error::constraint(
                "efficiency",
                "needs 0 < min < max (or min = max with count = 1) and count ≥ 1",
            ));
        }
        for (i, &w) in self.bandwidth.omega.iter().enumerate() {
            if !pos(w) {
                return Err(Error::constraint(BW_OMEGA[i], "must be positive"));
            }
        }
        for (i, d) in self.bandwidth.delta.iter().enumerate() {
            if d.is_some_and(|d| !d.is_finite()) {
                return Err(Error::constraint(BW_DELTA[i], "must be finite"));
            }
        }
        let n = &self.nonlinear;
        if n.delta_p.is_some_and(|d| !d.is_finite()) {
            return Err(Error::constraint("nonlinear.delta_p", "must be finite"));
        }
        if !(pos(n.a_min) && pos(n.a_max) && n.a_max > n.a_min) {
            return Err(Error::constraint("nonlinear.a_max", "needs 0 < a_min < a_max"));
        }
        if n.points < 2 {
            return Err(Error::constraint("nonlinear.points", "must be at least 2"));
        }
        if !pos(n.threshold) {
            return Err(Error::constraint("nonlinear.threshold", "must be positive"));
        }
        self.integration()
            .validate()
            .map_err(|e| match e {
                Error::Constraint { field, msg } => Error::Constraint {
                    field: format!("oracle.{field}"),
                    msg,
                },
                other => other,
            })?;
        if !pos(self.oracle.drive_scale) {
            return Err(Error::constraint("oracle.drive_scale", "must be positive"));
        }
        if self.oracle.count < 2 {
            return Err(Error::constraint("oracle.count", "must be at least 2"));
        }
        if self.validate.draws == 0 {
            return Err(Error::constraint("validate.draws", "must be positive"));
        }
        Ok(())
    }

    /// Writes every key, so that parsing the result reproduces `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let p = &self.system;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let f = |v: f64| format!("{v:?}");
        kv("system.g_coll", f(p.g_coll));
        kv("system.n_atoms", p.n_atoms.to_string());
        kv("system.kappa", f(p.kappa));
        kv("system.tau_rt", f(p.tau_rt));
        kv("system.mirror_t", f(p.mirror_t));
        kv("system.delta12", f(p.delta12));
        kv("system.delta_c", f(p.delta_c));
        kv("system.gamma13", f(p.gamma13));
        kv("system.gamma23", f(p.gamma23));
        kv("system.gamma4", f(p.gamma4));
        kv("system.gamma_mhz", f(p.gamma_mhz));
        let c = &self.control;
        kv("control.omega", f(c.omega.re));
        kv("control.omega_im", f(c.omega.im));
        kv("control.delta", f(c.delta));
        kv("control.dressing", c.dressing.as_str().into());
        kv("sweep.min", f(self.sweep.min));
        kv("sweep.max", f(self.sweep.max));
        kv("sweep.count", self.sweep.count.to_string());
        kv("cpa.threshold", f(self.cpa_threshold));
        let e = &self.efficiency;
        kv("efficiency.axis", e.axis.as_str().into());
        kv("efficiency.min", f(e.min));
        kv("efficiency.max", f(e.max));
        kv("efficiency.count", e.count.to_string());
        kv(
            "efficiency.spacing",
            match e.spacing {
                Spacing::Log => "log",
                Spacing::Linear => "linear",
            }
            .into(),
        );
        for i in 0..3 {
            kv(BW_OMEGA[i], f(self.bandwidth.omega[i]));
            if let Some(d) = self.bandwidth.delta[i] {
                kv(BW_DELTA[i], f(d));
            }
        }
        let n = &self.nonlinear;
        if let Some(d) = n.delta_p {
            kv("nonlinear.delta_p", f(d));
        }
        kv("nonlinear.a_min", f(n.a_min));
        kv("nonlinear.a_max", f(n.a_max));
        kv("nonlinear.points", n.points.to_string());
        kv("nonlinear.threshold", f(n.threshold));
        let o = &self.oracle;
        kv("oracle.dt_initial", f(o.dt_initial));
        if let Some(t) = o.t_max {
            kv("oracle.t_max", f(t));
        }
        kv("oracle.convergence_tol", f(o.convergence_tol));
        kv("oracle.rtol", f(o.rtol));
        kv("oracle.atol", f(o.atol));
        kv("oracle.drive_scale", f(o.drive_scale));
        kv("oracle.count", o.count.to_string());
        kv("validate.draws", self.validate.draws.to_string());
        kv("validate.seed", self.validate.seed.to_string());
        kv("output.format", self.output.format.as_str().into());
        if let Some(path) = &self.output.path {
            kv("output.path", path.clone());
        }
        s
    }
}

const BW_OMEGA: [&str; 3] = [
    "bandwidth.omega_left",
    "bandwidth.omega_central",
    "bandwidth.omega_right",
];
const BW_DELTA: [&str; 3] = [
    "bandwidth.delta_left",
    "bandwidth.delta_central",
    "bandwidth.delta_right",
];

struct Entries(BTreeMap<&'static str, (usize, String)>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.0.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|(line, v)| {
                v.parse::<f64>().map_err(|_| Error::Syntax {
                    line,
                    msg: format!("`{key}` expects a number, got `{v}`"),
                })
            })
            .transpose()
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.take(key)
            .map(|(line, v)| {
                v.parse::<u64>().map_err(|_| Error::Syntax {
                    line,
                    msg: format!("`{key}` expects a non-negative integer, got `{v}`"),
                })
            })
            .transpose()
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    fn word<T>(&mut self, key: &str, parse: impl Fn(&str) -> Option<T>, allowed: &str) -> Result<Option<T>> {
        self.take(key)
            .map(|(line, v)| {
                parse(&v).ok_or_else(|| Error::Syntax {
                    line,
                    msg: format!("`{key}` expects one of {allowed}, got `{v}`"),
                })
            })
            .transpose()
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(Error::Syntax {
                line,
                msg: "expected `section.key = value`".into(),
            });
        };
        let key = key.trim();
        if !key.contains('.') || key.split('.').any(str::is_empty) {
            return Err(Error::Syntax {
                line,
                msg: format!("`{key}` is not of the form section.key"),
            });
        }
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::UnknownKey(key.to_string()));
        };
        let value = unquote(value);
        if value.is_empty() {
            return Err(Error::Syntax {
                line,
                msg: format!("`{key}` has no value"),
            });
        }
        if map.insert(known, (line, value.to_string())).is_some() {
            return Err(Error::Syntax {
                line,
                msg: format!("`{key}` given twice"),
            });
        }
    }
    let mut e = Entries(map);
    let mut cfg = RunConfig::defaults();

    let p = &mut cfg.system;
    if let Some(v) = e.f64("system.kappa")? {
        p.kappa = v;
    }
    if let Some(v) = e.f64("system.tau_rt")? {
        p.tau_rt = v;
    }
    p.mirror_t = e.f64("system.mirror_t")?.unwrap_or(p.kappa * p.tau_rt);
    for (key, slot) in [
        ("system.delta12", &mut p.delta12),
        ("system.delta_c", &mut p.delta_c),
        ("system.gamma13", &mut p.gamma13),
        ("system.gamma23", &mut p.gamma23),
        ("system.gamma4", &mut p.gamma4),
        ("system.gamma_mhz", &mut p.gamma_mhz),
    ] {
        if let Some(v) = e.f64(key)? {
            *slot = v;
        }
    }
    if let Some(v) = e.f64("system.g_coll")? {
        p.g_coll = v;
    }
    let n_atoms = e.u64("system.n_atoms")?;
    let g_single = e.f64("system.g_single")?;
    p.n_atoms = match (n_atoms, g_single) {
        (Some(_), Some(_)) => {
            return Err(Error::constraint(
                "system.g_single",
                "give either n_atoms or g_single, not both",
            ))
        }
        (Some(n), None) => n,
        (None, Some(g)) => {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::constraint("system.g_single", "must be positive"));
            }
            atoms_for(p.g_coll, g)
        }
        (None, None) => atoms_for(p.g_coll, NOMINAL_G_SINGLE),
    };

    let c = &mut cfg.control;
    let re = e.f64("control.omega")?.unwrap_or(0.0);
    let im = e.f64("control.omega_im")?.unwrap_or(0.0);
    c.omega = Complex64::new(re, im);
    if let Some(v) = e.f64("control.delta")? {
        c.delta = v;
    }
    if let Some(d) = e.word("control.dressing", Dressing::parse, "as_printed, transition1")? {
        c.dressing = d;
    }

    if let Some(v) = e.f64("sweep.min")? {
        cfg.sweep.min = v;
    }
    if let Some(v) = e.f64("sweep.max")? {
        cfg.sweep.max = v;
    }
    if let Some(v) = e.usize("sweep.count")? {
        cfg.sweep.count = v;
    }
    if let Some(v) = e.f64("cpa.threshold")? {
        cfg.cpa_threshold = v;
    }

    let ef = &mut cfg.efficiency;
    if let Some(a) = e.word("efficiency.axis", ScanAxis::parse, "omega, g_coll")? {
        ef.axis = a;
    }
    if let Some(v) = e.f64("efficiency.min")? {
        ef.min = v;
    }
    if let Some(v) = e.f64("efficiency.max")? {
        ef.max = v;
    }
    if let Some(v) = e.usize("efficiency.count")? {
        ef.count = v;
    }
    let spacing = |s: &str| match s {
        "log" => Some(Spacing::Log),
        "linear" => Some(Spacing::Linear),
        _ => None,
    };
    if let Some(s) = e.word("efficiency.spacing", spacing, "log, linear")? {
        ef.spacing = s;
    }

    for i in 0..3 {
        if let Some(v) = e.f64(BW_OMEGA[i])? {
            cfg.bandwidth.omega[i] = v;
        }
        cfg.bandwidth.delta[i] = e.f64(BW_DELTA[i])?;
    }

    let n = &mut cfg.nonlinear;
    n.delta_p = e.f64("nonlinear.delta_p")?;
    if let Some(v) = e.f64("nonlinear.a_min")? {
        n.a_min = v;
    }
    if let Some(v) = e.f64("nonlinear.a_max")? {
        n.a_max = v;
    }
    if let Some(v) = e.usize("nonlinear.points")? {
        n.points = v;
    }
    if let Some(v) = e.f64("nonlinear.threshold")? {
        n.threshold = v;
    }

    let o = &mut cfg.oracle;
    o.t_max = e.f64("oracle.t_max")?;
    for (key, slot) in [
        ("oracle.dt_initial", &mut o.dt_initial),
        ("oracle.convergence_tol", &mut o.convergence_tol),
        ("oracle.rtol", &mut o.rtol),
        ("oracle.atol", &mut o.atol),
        ("oracle.drive_scale", &mut o.drive_scale),
    ] {
        if let Some(v) = e.f64(key)? {
            *slot = v;
        }
    }
    if let Some(v) = e.usize("oracle.count")? {
        o.count = v;
    }
    if let Some(v) = e.usize("validate.draws")? {
        cfg.validate.draws = v;
    }
    if let Some(v) = e.u64("validate.seed")? {
        cfg.validate.seed = v;
    }
    if let Some(f) = e.word("output.format", OutputFormat::parse, "csv, json")? {
        cfg.output.format = f;
    }
    cfg.output.path = e.take("output.path").map(|(_, v)| v);

    debug_assert!(e.0.is_empty(), "unconsumed keys: {:?}", e.0.keys());
    cfg.validate().map_err(|err| match err {
        Error::Constraint { field, msg } if !field.contains('.') && field != "sweep" && field != "efficiency" => {
            let section = if ["omega", "delta"].contains(&field.as_str()) {
                "control"
            } else {
                "system"
            };
            Error::Constraint {
                field: format!("{section}.{field}"),
                msg,
            }
        }
        other => other,
    })?;
    Ok(cfg)
}
