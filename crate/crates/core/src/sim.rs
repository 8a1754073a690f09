//! Nonlinear average-model simulation in the grid dq frame.
//!
//! State order: circuit `(i_d, i_q, v_d, v_q, i_gd, i_gq)`, active-damping
//! filter states `(z_d, z_q)` when present, `delta`, `omega`, and the
//! reactive-power controller state (filtered `q` for droop, integrator
//! output for droop-I). This matches [`crate::loops::full_state_matrix`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use crate::loops::AdController;
use crate::plant::{
    circuit_rhs, power_outputs, resonance_frequencies, solve_operating_point, ControlLaw, ControlParams, PlantError,
    PlantParams, CIRCUIT_STATES, IG_D, IG_Q, I_D, I_Q, V_D, V_Q,
};

/// Any state magnitude above this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 100.0;
const MAX_STATES: usize = CIRCUIT_STATES + 2 + 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("initial operating point residual {0:e} is too large")]
    InitialResidualTooLarge(f64),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidScenario(msg.into())
}

/// Scalar parameter that an [`EventStep`] can change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamPath {
    ControlH,
    ControlDp,
    ControlDq,
    ControlTq,
    ControlKpq,
    ControlKiq,
    ControlPst,
    ControlQst,
    ControlVst,
    ControlOmegaSt,
    AdGain,
    AdTimeConst,
    GridVg,
    GridLg,
    GridOmega,
}

const PATHS: [(ParamPath, &str); 15] = [
    (ParamPath::ControlH, "control.h"),
    (ParamPath::ControlDp, "control.d_p"),
    (ParamPath::ControlDq, "control.d_q"),
    (ParamPath::ControlTq, "control.t_q"),
    (ParamPath::ControlKpq, "control.k_pq"),
    (ParamPath::ControlKiq, "control.k_iq"),
    (ParamPath::ControlPst, "control.p_st"),
    (ParamPath::ControlQst, "control.q_st"),
    (ParamPath::ControlVst, "control.v_st"),
    (ParamPath::ControlOmegaSt, "control.omega_st"),
    (ParamPath::AdGain, "ad.gain"),
    (ParamPath::AdTimeConst, "ad.time_const"),
    (ParamPath::GridVg, "grid.v_g"),
    (ParamPath::GridLg, "grid.l_g"),
    (ParamPath::GridOmega, "grid.omega_g"),
];

impl ParamPath {
    pub fn name(self) -> &'static str {
        PATHS.iter().find(|(p, _)| *p == self).map(|(_, n)| *n).unwrap()
    }

    pub fn all() -> impl Iterator<Item = ParamPath> {
        PATHS.iter().map(|(p, _)| *p)
    }
}

impl FromStr for ParamPath {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PATHS
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(p, _)| *p)
            .ok_or_else(|| invalid(alloc::format!("unknown parameter path `{s}`")))
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Discontinuous parameter change applied between integration steps.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStep {
    pub t: f64,
    pub target: ParamPath,
    pub value: f64,
}

/// Recordable quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signal {
    P,
    Q,
    V,
    Omega,
    Delta,
    E,
    Ed,
    Eq,
    Id,
    Iq,
    Vd,
    Vq,
    Igd,
    Igq,
}

const SIGNALS: [(Signal, &str); 14] = [
    (Signal::P, "p"),
    (Signal::Q, "q"),
    (Signal::V, "V"),
    (Signal::Omega, "omega"),
    (Signal::Delta, "delta"),
    (Signal::E, "E"),
    (Signal::Ed, "e_d"),
    (Signal::Eq, "e_q"),
    (Signal::Id, "i_d"),
    (Signal::Iq, "i_q"),
    (Signal::Vd, "v_d"),
    (Signal::Vq, "v_q"),
    (Signal::Igd, "i_gd"),
    (Signal::Igq, "i_gq"),
];

impl Signal {
    pub fn name(self) -> &'static str {
        SIGNALS.iter().find(|(s, _)| *s == self).map(|(_, n)| *n).unwrap()
    }

    pub fn all() -> impl Iterator<Item = Signal> {
        SIGNALS.iter().map(|(s, _)| *s)
    }

    /// Default recording set.
    pub fn standard() -> Vec<Signal> {
        [
            Signal::P,
            Signal::Q,
            Signal::V,
            Signal::Omega,
            Signal::Delta,
            Signal::Igd,
            Signal::Igq,
            Signal::Vd,
            Signal::Vq,
            Signal::Ed,
            Signal::Eq,
        ]
        .to_vec()
    }
}

impl FromStr for Signal {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SIGNALS
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(p, _)| *p)
            .ok_or_else(|| invalid(alloc::format!("unknown signal `{s}`")))
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// State variable addressable by an initial perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateVar {
    Id,
    Iq,
    Vd,
    Vq,
    Igd,
    Igq,
    Delta,
    Omega,
}

impl FromStr for StateVar {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "i_d" => StateVar::Id,
            "i_q" => StateVar::Iq,
            "v_d" => StateVar::Vd,
            "v_q" => StateVar::Vq,
            "i_gd" => StateVar::Igd,
            "i_gq" => StateVar::Igq,
            "delta" => StateVar::Delta,
            "omega" => StateVar::Omega,
            _ => return Err(invalid(alloc::format!("unknown state `{s}`"))),
        })
    }
}

/// Time-domain experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SimScenario {
    pub pp: PlantParams,
    pub cp: ControlParams,
    pub ad: Option<AdController>,
    pub events: Vec<EventStep>,
    pub t_end: f64,
    pub dt: f64,
    pub record: Vec<Signal>,
    /// Record every n-th step.
    pub record_every: usize,
    /// Offsets added to the equilibrium initial state.
    pub perturbation: Vec<(StateVar, f64)>,
}

impl SimScenario {
    pub fn new(pp: PlantParams, cp: ControlParams, t_end: f64) -> Self {
        Self {
            pp,
            cp,
            ad: None,
            events: Vec::new(),
            t_end,
            dt: 5e-6,
            record: Signal::standard(),
            record_every: 1,
            perturbation: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.pp.validate()?;
        self.cp.validate()?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        let f_lcl = resonance_frequencies(&self.pp).omega_lcl / (2.0 * core::f64::consts::PI);
        if self.dt > 1.0 / (20.0 * f_lcl) {
            return Err(invalid(alloc::format!(
                "dt = {} s exceeds 1/(20 f_LCL) = {:.3e} s",
                self.dt,
                1.0 / (20.0 * f_lcl)
            )));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        if self.record.is_empty() {
            return Err(invalid("no signals to record"));
        }
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.t >= last) {
                return Err(invalid("events must be sorted by time"));
            }
            if !(e.t >= 0.0 && e.t < self.t_end) {
                return Err(invalid(alloc::format!("event at t = {} outside [0, t_end)", e.t)));
            }
            if !e.value.is_finite() {
                return Err(invalid("event value must be finite"));
            }
            if matches!(e.target, ParamPath::AdGain | ParamPath::AdTimeConst) && self.ad.is_none() {
                return Err(invalid(alloc::format!("event targets `{}` but no active damping is configured", e.target)));
            }
            last = e.t;
        }
        if let Some(ad) = &self.ad {
            if !(ad.time_const > 0.0) {
                return Err(invalid("AD time constant must be positive"));
            }
        }
        Ok(())
    }
}

/// Uniformly sampled simulation output.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub signals: Vec<(Signal, Vec<f64>)>,
    /// Time at which the divergence guard stopped the run.
    pub diverged_at: Option<f64>,
}

impl SimTrace {
    pub fn get(&self, s: Signal) -> Option<&[f64]> {
        self.signals.iter().find(|(k, _)| *k == s).map(|(_, v)| v.as_slice())
    }

    pub fn sample_interval(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            self.t[1] - self.t[0]
        }
    }

    /// Index range of samples with `t0 <= t <= t1`.
    pub fn window(&self, t0: f64, t1: f64) -> core::ops::Range<usize> {
        let a = self.t.partition_point(|&t| t < t0);
        let b = self.t.partition_point(|&t| t <= t1);
        a..b.max(a)
    }
}

/// Mutable parameter set of a running simulation.
#[derive(Clone, Debug)]
struct Model {
    pp: PlantParams,
    cp: ControlParams,
    ad: Option<AdController>,
    n_ad: usize,
}

struct Derived {
    p: f64,
    q: f64,
    v: f64,
    e_mag: f64,
    e: [f64; 2],
}

impl Model {
    fn n_states(&self) -> usize {
        CIRCUIT_STATES + self.n_ad + 3
    }

    fn idx_delta(&self) -> usize {
        CIRCUIT_STATES + self.n_ad
    }

    fn derived(&self, x: &[f64]) -> Derived {
        let (p, q, v) = power_outputs(x);
        let cp = &self.cp;
        let d = self.idx_delta();
        let (delta, ctrl) = (x[d], x[d + 2]);
        let e_mag = match cp.law {
            ControlLaw::Droop => cp.v_st + (cp.q_st - ctrl) / cp.d_q,
            ControlLaw::DroopI => ctrl + cp.k_pq * (cp.d_q * (cp.v_st - v) + cp.q_st - q),
        };
        let mut e = [e_mag * delta.cos(), e_mag * delta.sin()];
        if let Some(ad) = &self.ad {
            let g = ad.polarity() * ad.gain / ad.time_const;
            for (k, &c) in ad.channels().iter().enumerate() {
                e[k] -= g * (x[c] - x[CIRCUIT_STATES + k]);
            }
        }
        Derived { p, q, v, e_mag, e }
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) {
        let der = self.derived(x);
        let circuit: [f64; CIRCUIT_STATES] = core::array::from_fn(|i| x[i]);
        let f = circuit_rhs(&self.pp, &circuit, der.e);
        dx[..CIRCUIT_STATES].copy_from_slice(&f);
        if let Some(ad) = &self.ad {
            for (k, &c) in ad.channels().iter().enumerate() {
                let z = CIRCUIT_STATES + k;
                dx[z] = (x[c] - x[z]) / ad.time_const;
            }
        }
        let cp = &self.cp;
        let d = self.idx_delta();
        let omega = x[d + 1];
        dx[d] = self.pp.omega_n() * (omega - self.pp.omega_g);
        dx[d + 1] = (cp.p_st - der.p - cp.d_p * (omega - cp.omega_st)) / (2.0 * cp.h);
        dx[d + 2] = match cp.law {
            ControlLaw::Droop => (der.q - x[d + 2]) / cp.t_q,
            ControlLaw::DroopI => cp.k_iq * (cp.d_q * (cp.v_st - der.v) + cp.q_st - der.q),
        };
    }

    fn apply(&mut self, ev: &EventStep) {
        let v = ev.value;
        let cp = &mut self.cp;
        match ev.target {
            ParamPath::ControlH => cp.h = v,
            ParamPath::ControlDp => cp.d_p = v,
            ParamPath::ControlDq => cp.d_q = v,
            ParamPath::ControlTq => cp.t_q = v,
            ParamPath::ControlKpq => cp.k_pq = v,
            ParamPath::ControlKiq => cp.k_iq = v,
            ParamPath::ControlPst => cp.p_st = v,
            ParamPath::ControlQst => cp.q_st = v,
            ParamPath::ControlVst => cp.v_st = v,
            ParamPath::ControlOmegaSt => cp.omega_st = v,
            ParamPath::AdGain => {
                if let Some(ad) = &mut self.ad {
                    ad.gain = v;
                }
            }
            ParamPath::AdTimeConst => {
                if let Some(ad) = &mut self.ad {
                    ad.time_const = v;
                }
            }
            ParamPath::GridVg => self.pp.v_g = v,
            ParamPath::GridLg => self.pp.l_g = v,
            ParamPath::GridOmega => self.pp.omega_g = v,
        }
    }

    fn signal(&self, s: Signal, x: &[f64]) -> f64 {
        let d = self.idx_delta();
        match s {
            Signal::Id => x[I_D],
            Signal::Iq => x[I_Q],
            Signal::Vd => x[V_D],
            Signal::Vq => x[V_Q],
            Signal::Igd => x[IG_D],
            Signal::Igq => x[IG_Q],
            Signal::Delta => x[d],
            Signal::Omega => x[d + 1],
            _ => {
                let der = self.derived(x);
                match s {
                    Signal::P => der.p,
                    Signal::Q => der.q,
                    Signal::V => der.v,
                    Signal::E => der.e_mag,
                    Signal::Ed => der.e[0],
                    Signal::Eq => der.e[1],
                    _ => unreachable!(),
                }
            }
        }
    }
}

/// Equilibrium state vector of a scenario (flat start, before
/// perturbations).
pub fn initial_state(sc: &SimScenario) -> Result<Vec<f64>, SimError> {
    let op = solve_operating_point(&sc.pp, &sc.cp)?;
    if !(op.residual < 1e-8) {
        return Err(SimError::InitialResidualTooLarge(op.residual));
    }
    let n_ad = if sc.ad.is_some() { 2 } else { 0 };
    let mut x = alloc::vec![0.0; CIRCUIT_STATES + n_ad + 3];
    x[..CIRCUIT_STATES].copy_from_slice(&op.circuit_state());
    if let Some(ad) = &sc.ad {
        for (k, &c) in ad.channels().iter().enumerate() {
            x[CIRCUIT_STATES + k] = x[c];
        }
    }
    let d = CIRCUIT_STATES + n_ad;
    x[d] = op.delta;
    x[d + 1] = sc.pp.omega_g;
    x[d + 2] = match sc.cp.law {
        ControlLaw::Droop => op.q,
        ControlLaw::DroopI => op.e_mag,
    };
    Ok(x)
}

/// Fixed-step RK4 integration of the nonlinear model.
///
/// Events take effect at the first step boundary at or after their time.
/// When a state exceeds [`DIVERGENCE_LIMIT`] the run stops and the trace
/// carries the time in `diverged_at`.
pub fn simulate(sc: &SimScenario) -> Result<SimTrace, SimError> {
    sc.validate()?;
    let mut model = Model {
        pp: sc.pp.clone(),
        cp: sc.cp.clone(),
        ad: sc.ad.clone(),
        n_ad: if sc.ad.is_some() { 2 } else { 0 },
    };
    let mut x0 = initial_state(sc)?;
    let d = model.idx_delta();
    for &(var, off) in &sc.perturbation {
        let k = match var {
            StateVar::Id => I_D,
            StateVar::Iq => I_Q,
            StateVar::Vd => V_D,
            StateVar::Vq => V_Q,
            StateVar::Igd => IG_D,
            StateVar::Igq => IG_Q,
            StateVar::Delta => d,
            StateVar::Omega => d + 1,
        };
        x0[k] += off;
    }
    let n = model.n_states();
    let mut x = [0.0; MAX_STATES];
    x[..n].copy_from_slice(&x0);

    let steps = (sc.t_end / sc.dt).round() as usize;
    let n_rec = steps / sc.record_every + 1;
    let mut t_rec = Vec::with_capacity(n_rec);
    let mut rec: Vec<(Signal, Vec<f64>)> = sc.record.iter().map(|&s| (s, Vec::with_capacity(n_rec))).collect();
    let mut record = |t: f64, x: &[f64], model: &Model, t_rec: &mut Vec<f64>| {
        t_rec.push(t);
        for (s, v) in rec.iter_mut() {
            v.push(model.signal(*s, x));
        }
    };

    let mut next_event = 0;
    let mut diverged_at = None;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = ([0.0; MAX_STATES], [0.0; MAX_STATES], [0.0; MAX_STATES], [0.0; MAX_STATES], [0.0; MAX_STATES]);
    let h = sc.dt;
    for step in 0..=steps {
        let t = step as f64 * h;
        while next_event < sc.events.len() && sc.events[next_event].t <= t + 0.5 * h {
            model.apply(&sc.events[next_event]);
            next_event += 1;
        }
        if step % sc.record_every == 0 {
            record(t, &x[..n], &model, &mut t_rec);
        }
        if x[..n].iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
            diverged_at = Some(t);
            break;
        }
        if step == steps {
            break;
        }
        model.rhs(&x[..n], &mut k1[..n]);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        model.rhs(&tmp[..n], &mut k2[..n]);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        model.rhs(&tmp[..n], &mut k3[..n]);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        model.rhs(&tmp[..n], &mut k4[..n]);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(SimTrace {
        t: t_rec,
        signals: rec,
        diverged_at,
    })
}

/// Final state vector of a run (for convergence studies).
pub fn final_state(sc: &SimScenario) -> Result<Vec<f64>, SimError> {
    let mut probe = sc.clone();
    probe.record = alloc::vec![Signal::Id, Signal::Iq, Signal::Vd, Signal::Vq, Signal::Igd, Signal::Igq, Signal::Delta, Signal::Omega];
    let tr = simulate(&probe)?;
    Ok(tr.signals.iter().map(|(_, v)| *v.last().unwrap()).collect())
}
