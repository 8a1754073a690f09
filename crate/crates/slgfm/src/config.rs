//! Scenario files: a strict JSON schema describing the plant, controller,
//! optional active damping, analysis options, simulation and sweeps.

use std::path::Path;

use serde::Deserialize;
use slgfm_core::loops::{AdController, AdKind};
use slgfm_core::plant::{to_per_unit, ControlLaw, ControlParams, GridResistance, Nameplate, PlantParams};
use slgfm_core::sim::{EventStep, ParamPath, Signal, SimScenario, StateVar};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("invalid config: {field}: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LawName {
    Droop,
    DroopI,
}

impl From<LawName> for ControlLaw {
    fn from(l: LawName) -> Self {
        match l {
            LawName::Droop => ControlLaw::Droop,
            LawName::DroopI => ControlLaw::DroopI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AdName {
    None,
    InvCurrent,
    GridCurrent,
    CapVoltage,
}

impl AdName {
    pub fn kind(self) -> Option<AdKind> {
        match self {
            AdName::None => None,
            AdName::InvCurrent => Some(AdKind::InverterCurrent),
            AdName::GridCurrent => Some(AdKind::GridCurrent),
            AdName::CapVoltage => Some(AdKind::CapVoltage),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub plant: PlantBlock,
    pub control: ControlBlock,
    #[serde(default)]
    pub ad: Option<AdBlock>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub simulate: Option<SimulateBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

/// Exactly one of `nameplate` and `per_unit` must be present.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantBlock {
    #[serde(default)]
    pub nameplate: Option<NameplateBlock>,
    #[serde(default)]
    pub per_unit: Option<PerUnitBlock>,
    /// Grid inductance override, p.u.
    #[serde(default)]
    pub l_g_pu: Option<f64>,
    #[serde(default)]
    pub v_g: Option<f64>,
    #[serde(default)]
    pub omega_g: Option<f64>,
    #[serde(default)]
    pub r_f: Option<f64>,
}

/// Physical values: VA, V (line-to-line RMS), Hz, H, F.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NameplateBlock {
    pub s_n: f64,
    pub v_n: f64,
    pub f_n: f64,
    pub l_f: f64,
    pub c_f: f64,
    pub l_g: f64,
    #[serde(default)]
    pub x_over_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerUnitBlock {
    #[serde(default = "default_s_n")]
    pub s_n: f64,
    #[serde(default = "default_v_n")]
    pub v_n: f64,
    #[serde(default = "default_f_n")]
    pub f_n: f64,
    pub l_f: f64,
    pub c_f: f64,
    pub l_g: f64,
    #[serde(default)]
    pub r_g: Option<f64>,
    #[serde(default)]
    pub x_over_r: Option<f64>,
}

fn default_s_n() -> f64 {
    5e6
}
fn default_v_n() -> f64 {
    690.0
}
fn default_f_n() -> f64 {
    50.0
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBlock {
    #[serde(default)]
    pub law: Option<LawName>,
    pub h: f64,
    pub d_p: f64,
    pub d_q: f64,
    #[serde(default)]
    pub t_q: Option<f64>,
    #[serde(default)]
    pub k_pq: Option<f64>,
    #[serde(default)]
    pub k_iq: Option<f64>,
    #[serde(default)]
    pub p_st: Option<f64>,
    #[serde(default)]
    pub q_st: Option<f64>,
    #[serde(default)]
    pub v_st: Option<f64>,
    #[serde(default)]
    pub omega_st: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdBlock {
    pub kind: AdName,
    #[serde(default)]
    pub gain: Option<f64>,
    #[serde(default)]
    pub time_const: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default)]
    pub omega_min: Option<f64>,
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub pts: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub record: Option<Vec<String>>,
    #[serde(default)]
    pub events: Vec<EventBlock>,
    #[serde(default)]
    pub perturbation: Vec<PerturbationBlock>,
    #[serde(default)]
    pub fft: Option<FftBlock>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventBlock {
    pub t: f64,
    pub target: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationBlock {
    pub state: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FftBlock {
    #[serde(default = "default_fft_signal")]
    pub signal: String,
    pub t_start: f64,
    pub t_end: f64,
}

fn default_fft_signal() -> String {
    "q".to_string()
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Fully resolved, validated model inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub name: String,
    pub pp: PlantParams,
    pub cp: ControlParams,
    pub ad: Option<AdController>,
    pub omega_range: Option<(f64, f64)>,
    pub pts: usize,
}

pub const DEFAULT_PTS: usize = 2000;

impl ScenarioConfig {
    pub fn from_str(text: &str, path: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
        Self::from_str(&text, &p)
    }

    /// Builds model parameters. `law` and `ad` override the file; an `--ad`
    /// kind matching the file's `ad` block keeps its gain and time constant,
    /// otherwise the reference design of that kind is used.
    pub fn resolve(&self, law: Option<LawName>, ad: Option<AdName>) -> Result<Resolved, ConfigError> {
        let pp = self.plant.resolve()?;
        let law = law
            .or(self.control.law)
            .ok_or_else(|| invalid("control.law", "no control law given (set it in the file or pass --law)"))?;
        let cp = self.control.resolve(law.into())?;
        let ad = match (ad, &self.ad) {
            (Some(AdName::None), _) => None,
            (Some(name), Some(block)) if block.kind == name => Some(block.resolve()?),
            (Some(name), _) => Some(AdController::reference(name.kind().expect("not none"))),
            (None, Some(block)) => {
                if block.kind == AdName::None {
                    None
                } else {
                    Some(block.resolve()?)
                }
            }
            (None, None) => None,
        };
        let a = &self.analysis;
        let omega_range = match (a.omega_min, a.omega_max) {
            (None, None) => None,
            (lo, hi) => {
                let lo = lo.unwrap_or(1.0);
                let hi = hi.ok_or_else(|| invalid("analysis.omega_max", "required when omega_min is set"))?;
                if !(lo > 0.0 && hi > lo) {
                    return Err(invalid("analysis", "need 0 < omega_min < omega_max"));
                }
                Some((lo, hi))
            }
        };
        let pts = a.pts.unwrap_or(DEFAULT_PTS);
        if pts < 2 {
            return Err(invalid("analysis.pts", "at least 2 points"));
        }
        Ok(Resolved {
            name: self.name.clone().unwrap_or_else(|| "scenario".to_string()),
            pp,
            cp,
            ad,
            omega_range,
            pts,
        })
    }

    /// Simulation scenario for an already resolved model.
    pub fn sim_scenario(&self, r: &Resolved) -> Result<(SimScenario, Option<FftWindow>), ConfigError> {
        let s = self
            .simulate
            .as_ref()
            .ok_or_else(|| invalid("simulate", "block is required for this command"))?;
        let mut sc = SimScenario::new(r.pp.clone(), r.cp.clone(), s.t_end);
        sc.ad = r.ad.clone();
        if let Some(dt) = s.dt {
            sc.dt = dt;
        }
        if let Some(k) = s.record_every {
            sc.record_every = k;
        }
        if let Some(names) = &s.record {
            sc.record = names
                .iter()
                .map(|n| n.parse::<Signal>().map_err(|e| invalid("simulate.record", e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        sc.events = s
            .events
            .iter()
            .map(|e| {
                Ok(EventStep {
                    t: e.t,
                    target: e
                        .target
                        .parse::<ParamPath>()
                        .map_err(|err| invalid("simulate.events.target", err.to_string()))?,
                    value: e.value,
                })
            })
            .collect::<Result<_, ConfigError>>()?;
        sc.perturbation = s
            .perturbation
            .iter()
            .map(|p| {
                let v = p
                    .state
                    .parse::<StateVar>()
                    .map_err(|e| invalid("simulate.perturbation.state", e.to_string()))?;
                Ok((v, p.value))
            })
            .collect::<Result<_, ConfigError>>()?;
        sc.validate().map_err(|e| invalid("simulate", e.to_string()))?;
        let fft = match &s.fft {
            None => None,
            Some(f) => {
                let signal = f
                    .signal
                    .parse::<Signal>()
                    .map_err(|e| invalid("simulate.fft.signal", e.to_string()))?;
                if !(f.t_start >= 0.0 && f.t_end > f.t_start && f.t_end <= s.t_end) {
                    return Err(invalid("simulate.fft", "need 0 <= t_start < t_end <= simulate.t_end"));
                }
                if !sc.record.contains(&signal) {
                    sc.record.push(signal);
                }
                Some(FftWindow {
                    signal,
                    t_start: f.t_start,
                    t_end: f.t_end,
                })
            }
        };
        Ok((sc, fft))
    }

    pub fn sweep(&self) -> Result<(ParamPath, Vec<f64>), ConfigError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| invalid("sweep", "block is required for this command"))?;
        let p = s
            .parameter
            .parse::<ParamPath>()
            .map_err(|e| invalid("sweep.parameter", e.to_string()))?;
        if s.values.is_empty() {
            return Err(invalid("sweep.values", "must not be empty"));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep.values", "must be finite"));
        }
        Ok((p, s.values.clone()))
    }
}

/// Post-processing window of a simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FftWindow {
    pub signal: Signal,
    pub t_start: f64,
    pub t_end: f64,
}

impl PlantBlock {
    fn resolve(&self) -> Result<PlantParams, ConfigError> {
        let mut pp = match (&self.nameplate, &self.per_unit) {
            (Some(_), Some(_)) => return Err(invalid("plant", "give exactly one of `nameplate` and `per_unit`, not both")),
            (None, None) => return Err(invalid("plant", "one of `nameplate` or `per_unit` is required")),
            (Some(n), None) => to_per_unit(&Nameplate {
                s_n: n.s_n,
                v_n: n.v_n,
                f_n: n.f_n,
                l_f: n.l_f,
                c_f: n.c_f,
                l_g: n.l_g,
                x_over_r: n.x_over_r,
            })
            .map_err(|e| invalid("plant.nameplate", e.to_string()))?,
            (None, Some(u)) => {
                let grid_resistance = match (u.r_g, u.x_over_r) {
                    (Some(_), Some(_)) => {
                        return Err(invalid("plant.per_unit", "give at most one of `r_g` and `x_over_r`"))
                    }
                    (Some(r), None) => GridResistance::Ohmic(r),
                    (None, Some(x)) => GridResistance::XOverR(x),
                    (None, None) => GridResistance::Ohmic(0.0),
                };
                PlantParams {
                    s_n: u.s_n,
                    v_n: u.v_n,
                    f_n: u.f_n,
                    l_f: u.l_f,
                    c_f: u.c_f,
                    l_g: u.l_g,
                    r_f: 0.0,
                    grid_resistance,
                    v_g: 1.0,
                    omega_g: 1.0,
                }
            }
        };
        if let Some(l) = self.l_g_pu {
            pp.l_g = l;
        }
        if let Some(v) = self.v_g {
            pp.v_g = v;
        }
        if let Some(w) = self.omega_g {
            pp.omega_g = w;
        }
        if let Some(r) = self.r_f {
            pp.r_f = r;
        }
        pp.validate().map_err(|e| invalid("plant", e.to_string()))?;
        Ok(pp)
    }
}

impl ControlBlock {
    fn resolve(&self, law: ControlLaw) -> Result<ControlParams, ConfigError> {
        let (t_q, k_iq) = match law {
            ControlLaw::Droop => (
                self.t_q
                    .ok_or_else(|| invalid("control.t_q", "required for droop control"))?,
                self.k_iq.unwrap_or(0.0),
            ),
            ControlLaw::DroopI => (
                self.t_q.unwrap_or(0.0),
                self.k_iq
                    .ok_or_else(|| invalid("control.k_iq", "required for droop-I control"))?,
            ),
        };
        let cp = ControlParams {
            h: self.h,
            d_p: self.d_p,
            d_q: self.d_q,
            t_q,
            k_pq: self.k_pq.unwrap_or(0.0),
            k_iq,
            p_st: self.p_st.unwrap_or(0.5),
            q_st: self.q_st.unwrap_or(0.0),
            v_st: self.v_st.unwrap_or(1.0),
            omega_st: self.omega_st.unwrap_or(1.0),
            law,
        };
        cp.validate().map_err(|e| invalid("control", e.to_string()))?;
        Ok(cp)
    }
}

impl AdBlock {
    fn resolve(&self) -> Result<AdController, ConfigError> {
        let kind = self
            .kind
            .kind()
            .ok_or_else(|| invalid("ad.kind", "`none` cannot carry parameters"))?;
        let r = AdController::reference(kind);
        AdController::new(kind, self.gain.unwrap_or(r.gain), self.time_const.unwrap_or(r.time_const))
            .map_err(|e| invalid("ad", e.to_string()))
    }
}

/// Applies a swept or stepped parameter to resolved inputs.
pub fn apply_param(r: &mut Resolved, path: ParamPath, value: f64) -> Result<(), ConfigError> {
    let cp = &mut r.cp;
    match path {
        ParamPath::ControlH => cp.h = value,
        ParamPath::ControlDp => cp.d_p = value,
        ParamPath::ControlDq => cp.d_q = value,
        ParamPath::ControlTq => cp.t_q = value,
        ParamPath::ControlKpq => cp.k_pq = value,
        ParamPath::ControlKiq => cp.k_iq = value,
        ParamPath::ControlPst => cp.p_st = value,
        ParamPath::ControlQst => cp.q_st = value,
        ParamPath::ControlVst => cp.v_st = value,
        ParamPath::ControlOmegaSt => cp.omega_st = value,
        ParamPath::AdGain | ParamPath::AdTimeConst => {
            let ad = r
                .ad
                .as_mut()
                .ok_or_else(|| invalid("sweep.parameter", format!("`{path}` needs active damping")))?;
            if path == ParamPath::AdGain {
                ad.gain = value;
            } else {
                ad.time_const = value;
            }
        }
        ParamPath::GridVg => r.pp.v_g = value,
        ParamPath::GridLg => r.pp.l_g = value,
        ParamPath::GridOmega => r.pp.omega_g = value,
    }
    r.pp.validate().map_err(|e| invalid(path.name(), e.to_string()))?;
    r.cp.validate().map_err(|e| invalid(path.name(), e.to_string()))?;
    Ok(())
}
