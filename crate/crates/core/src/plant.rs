//! Per-unit parameterization, steady-state operating point and small-signal
//! linearization of the LCL filter and Thevenin grid.
//!
//! All quantities are per-unit except time (s) and angular frequencies
//! (rad/s). Circuit equations are written in the grid synchronous frame with
//! the grid voltage on the d-axis:
//!
//! ```text
//! L_f/w_n d(i)/dt   = e   - v   - R_f i   - j w_g L_f i
//! C_f/w_n d(v)/dt   = i   - i_g           - j w_g C_f v
//! L_g/w_n d(i_g)/dt = v   - V_g - R_g i_g - j w_g L_g i_g
//! ```

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use crate::loops::AdController;
use crate::poly::{ss_to_rational, PolyError, Polynomial, RationalFn, StateSpaceModel};

/// Circuit state ordering shared by the linear model and the simulator.
pub const I_D: usize = 0;
pub const I_Q: usize = 1;
pub const V_D: usize = 2;
pub const V_Q: usize = 3;
pub const IG_D: usize = 4;
pub const IG_Q: usize = 5;
pub const CIRCUIT_STATES: usize = 6;

/// Output ordering of [`LinearPlant::ss`].
pub const OUT_P: usize = 0;
pub const OUT_Q: usize = 1;
pub const OUT_V: usize = 2;

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("base quantity must be positive: {0}")]
    NonPositiveBase(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("operating point did not converge (residual {:e})", best.residual)]
    NoConvergence { best: OperatingPoint },
    #[error("set-point is infeasible (load angle {delta} rad)")]
    InfeasibleSetpoint { delta: f64 },
    #[error("operating point residual {0:e} too large to linearize")]
    ResidualTooLarge(f64),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How the grid-branch resistance is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridResistance {
    /// Fixed resistance in p.u.
    Ohmic(f64),
    /// `X_g / R_g` ratio; `R_g = w_g L_g / ratio` follows `L_g` and `w_g`.
    XOverR(f64),
}

/// Physical and per-unit circuit constants.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantParams {
    /// Nominal power, VA.
    pub s_n: f64,
    /// Nominal line-to-line RMS voltage, V.
    pub v_n: f64,
    /// Nominal frequency, Hz.
    pub f_n: f64,
    pub l_f: f64,
    pub c_f: f64,
    pub l_g: f64,
    /// Inverter-side series resistance.
    pub r_f: f64,
    pub grid_resistance: GridResistance,
    pub v_g: f64,
    /// Grid frequency, p.u.
    pub omega_g: f64,
}

impl PlantParams {
    /// Lossless plant with the given per-unit filter values at 5 MW / 690 V /
    /// 50 Hz nominal, unit grid voltage and frequency.
    pub fn new(l_f: f64, c_f: f64, l_g: f64) -> Result<Self, PlantError> {
        let p = Self {
            s_n: 5e6,
            v_n: 690.0,
            f_n: 50.0,
            l_f,
            c_f,
            l_g,
            r_f: 0.0,
            grid_resistance: GridResistance::Ohmic(0.0),
            v_g: 1.0,
            omega_g: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference wind-turbine converter: 5 MW, 690 V, 50 Hz, 32 uH /
    /// 1.6 mF / 60 uH, X/R = 8.
    pub fn reference() -> Self {
        to_per_unit(&Nameplate::reference()).expect("reference nameplate is valid")
    }

    pub fn with_x_over_r(mut self, ratio: f64) -> Result<Self, PlantError> {
        self.grid_resistance = GridResistance::XOverR(ratio);
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid_resistance(mut self, r_g: f64) -> Result<Self, PlantError> {
        self.grid_resistance = GridResistance::Ohmic(r_g);
        self.validate()?;
        Ok(self)
    }

    /// Replaces `L_g`; an X/R specification keeps its ratio.
    pub fn with_l_g(mut self, l_g: f64) -> Result<Self, PlantError> {
        self.l_g = l_g;
        self.validate()?;
        Ok(self)
    }

    /// Same plant with every resistance removed.
    pub fn lossless(&self) -> Self {
        Self {
            r_f: 0.0,
            grid_resistance: GridResistance::Ohmic(0.0),
            ..self.clone()
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.r_f == 0.0 && self.r_g() == 0.0
    }

    /// Nominal angular frequency, rad/s.
    pub fn omega_n(&self) -> f64 {
        2.0 * PI * self.f_n
    }

    pub fn r_g(&self) -> f64 {
        match self.grid_resistance {
            GridResistance::Ohmic(r) => r,
            GridResistance::XOverR(ratio) => self.omega_g * self.l_g / ratio,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.s_n > 0.0) || !(self.v_n > 0.0) || !(self.f_n > 0.0) {
            return Err(PlantError::NonPositiveBase("S_n, V_n and f_n must be positive"));
        }
        if !(self.l_f > 0.0) || !(self.c_f > 0.0) || !(self.l_g > 0.0) {
            return Err(PlantError::InvalidParameter("L_f, C_f and L_g must be positive"));
        }
        if !(self.r_f >= 0.0) {
            return Err(PlantError::InvalidParameter("R_f must be non-negative"));
        }
        match self.grid_resistance {
            GridResistance::Ohmic(r) if !(r >= 0.0) => {
                return Err(PlantError::InvalidParameter("R_g must be non-negative"))
            }
            GridResistance::XOverR(x) if !(x > 0.0) => {
                return Err(PlantError::InvalidParameter("X/R ratio must be positive"))
            }
            _ => {}
        }
        if !(self.v_g > 0.0) || !(self.omega_g >= 0.0) {
            return Err(PlantError::InvalidParameter("V_g must be positive and w_g non-negative"));
        }
        Ok(())
    }
}

/// Physical nameplate data.
#[derive(Clone, Debug, PartialEq)]
pub struct Nameplate {
    /// VA.
    pub s_n: f64,
    /// Line-to-line RMS, V.
    pub v_n: f64,
    /// Hz.
    pub f_n: f64,
    /// H.
    pub l_f: f64,
    /// F.
    pub c_f: f64,
    /// H.
    pub l_g: f64,
    pub x_over_r: Option<f64>,
}

impl Nameplate {
    pub fn reference() -> Self {
        Self {
            s_n: 5e6,
            v_n: 690.0,
            f_n: 50.0,
            l_f: 32e-6,
            c_f: 1.6e-3,
            l_g: 60e-6,
            x_over_r: Some(8.0),
        }
    }
}

/// Converts nameplate values to per-unit with `Z_base = V_n^2 / S_n`.
pub fn to_per_unit(np: &Nameplate) -> Result<PlantParams, PlantError> {
    if !(np.s_n > 0.0) || !(np.v_n > 0.0) || !(np.f_n > 0.0) {
        return Err(PlantError::NonPositiveBase("S_n, V_n and f_n must be positive"));
    }
    let omega_n = 2.0 * PI * np.f_n;
    let z_base = np.v_n * np.v_n / np.s_n;
    let l_base = z_base / omega_n;
    let c_base = 1.0 / (z_base * omega_n);
    let mut pp = PlantParams {
        s_n: np.s_n,
        v_n: np.v_n,
        f_n: np.f_n,
        l_f: np.l_f / l_base,
        c_f: np.c_f / c_base,
        l_g: np.l_g / l_base,
        r_f: 0.0,
        grid_resistance: GridResistance::Ohmic(0.0),
        v_g: 1.0,
        omega_g: 1.0,
    };
    if let Some(ratio) = np.x_over_r {
        pp.grid_resistance = GridResistance::XOverR(ratio);
    }
    pp.validate()?;
    Ok(pp)
}

/// Reactive-power control law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlLaw {
    /// `E = V_st + (Q_st - q/(T_q s + 1)) / D_q`.
    Droop,
    /// `E = (k_pq + k_iq/s) [D_q (V_st - V) + Q_st - q]`.
    DroopI,
}

/// Power-loop constants and set-points.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlParams {
    /// Inertia constant, s.
    pub h: f64,
    pub d_p: f64,
    pub d_q: f64,
    /// Reactive-power filter time constant, s (droop only).
    pub t_q: f64,
    pub k_pq: f64,
    /// Integral gain, 1/s (droop-I only).
    pub k_iq: f64,
    pub p_st: f64,
    pub q_st: f64,
    pub v_st: f64,
    pub omega_st: f64,
    pub law: ControlLaw,
}

impl ControlParams {
    /// Reference controller with `P_st = 0.5`.
    pub fn reference(law: ControlLaw) -> Self {
        Self {
            h: 0.5,
            d_p: 50.0,
            d_q: 10.0,
            t_q: 0.051,
            k_pq: 0.0,
            k_iq: 4.0,
            p_st: 0.5,
            q_st: 0.0,
            v_st: 1.0,
            omega_st: 1.0,
            law,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.h > 0.0) {
            return Err(PlantError::InvalidParameter("H must be positive"));
        }
        if !(self.d_q > 0.0) {
            return Err(PlantError::InvalidParameter("D_q must be positive"));
        }
        if !(self.d_p >= 0.0) {
            return Err(PlantError::InvalidParameter("D_p must be non-negative"));
        }
        match self.law {
            ControlLaw::Droop if !(self.t_q > 0.0) => {
                Err(PlantError::InvalidParameter("T_q must be positive for droop control"))
            }
            ControlLaw::DroopI if !(self.k_iq > 0.0) => {
                Err(PlantError::InvalidParameter("k_iq must be positive for droop-I control"))
            }
            _ => Ok(()),
        }
    }

    /// Active-power set-point at equilibrium with the grid frequency.
    pub fn p_equilibrium(&self, omega_g: f64) -> f64 {
        self.p_st - self.d_p * (omega_g - self.omega_st)
    }
}

/// Steady-state values.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatingPoint {
    pub delta: f64,
    pub e_mag: f64,
    pub e_d: f64,
    pub e_q: f64,
    pub v_d: f64,
    pub v_q: f64,
    pub i_d: f64,
    pub i_q: f64,
    pub i_gd: f64,
    pub i_gq: f64,
    pub p: f64,
    pub q: f64,
    pub v_mag: f64,
    /// Infinity norm of the equilibrium equations.
    pub residual: f64,
}

impl OperatingPoint {
    pub fn circuit_state(&self) -> [f64; CIRCUIT_STATES] {
        [self.i_d, self.i_q, self.v_d, self.v_q, self.i_gd, self.i_gq]
    }
}

/// Angular frequencies of the filter network, rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceProfile {
    pub omega_lc: f64,
    pub omega_lcl: f64,
    pub omega_1: f64,
    pub omega_2: f64,
    pub omega_lg: f64,
}

pub fn resonance_frequencies(pp: &PlantParams) -> ResonanceProfile {
    let wn = pp.omega_n();
    let omega_lc = wn / (pp.l_f * pp.c_f).sqrt();
    let omega_lcl = wn * ((pp.l_f + pp.l_g) / (pp.l_f * pp.c_f * pp.l_g)).sqrt();
    let omega_lg = wn * pp.omega_g;
    ResonanceProfile {
        omega_lc,
        omega_lcl,
        omega_1: omega_lcl - omega_lg,
        omega_2: omega_lcl + omega_lg,
        omega_lg,
    }
}

/// Algebraic circuit equations (right-hand sides scaled by `L/w_n`, `C/w_n`).
fn circuit_balance(pp: &PlantParams, x: &[f64; CIRCUIT_STATES], e: [f64; 2]) -> [f64; CIRCUIT_STATES] {
    let w = pp.omega_g;
    let r_g = pp.r_g();
    [
        e[0] - x[V_D] - pp.r_f * x[I_D] + w * pp.l_f * x[I_Q],
        e[1] - x[V_Q] - pp.r_f * x[I_Q] - w * pp.l_f * x[I_D],
        x[I_D] - x[IG_D] + w * pp.c_f * x[V_Q],
        x[I_Q] - x[IG_Q] - w * pp.c_f * x[V_D],
        x[V_D] - pp.v_g - r_g * x[IG_D] + w * pp.l_g * x[IG_Q],
        x[V_Q] - r_g * x[IG_Q] - w * pp.l_g * x[IG_D],
    ]
}

/// Time derivatives of the six circuit states for inverter voltage `e`.
pub fn circuit_rhs(pp: &PlantParams, x: &[f64; CIRCUIT_STATES], e: [f64; 2]) -> [f64; CIRCUIT_STATES] {
    let f = circuit_balance(pp, x, e);
    let wn = pp.omega_n();
    let k = [pp.l_f, pp.l_f, pp.c_f, pp.c_f, pp.l_g, pp.l_g];
    core::array::from_fn(|i| f[i] * wn / k[i])
}

/// State matrix of the (linear) circuit, 1/s.
pub fn circuit_matrix(pp: &PlantParams) -> DMatrix<f64> {
    let wn = pp.omega_n();
    let w = pp.omega_g * wn;
    let (a, c, g) = (wn / pp.l_f, wn / pp.c_f, wn / pp.l_g);
    let r_g = pp.r_g();
    let mut m = DMatrix::zeros(CIRCUIT_STATES, CIRCUIT_STATES);
    m[(I_D, I_D)] = -pp.r_f * a;
    m[(I_D, I_Q)] = w;
    m[(I_D, V_D)] = -a;
    m[(I_Q, I_Q)] = -pp.r_f * a;
    m[(I_Q, I_D)] = -w;
    m[(I_Q, V_Q)] = -a;
    m[(V_D, I_D)] = c;
    m[(V_D, IG_D)] = -c;
    m[(V_D, V_Q)] = w;
    m[(V_Q, I_Q)] = c;
    m[(V_Q, IG_Q)] = -c;
    m[(V_Q, V_D)] = -w;
    m[(IG_D, V_D)] = g;
    m[(IG_D, IG_D)] = -r_g * g;
    m[(IG_D, IG_Q)] = w;
    m[(IG_Q, V_Q)] = g;
    m[(IG_Q, IG_Q)] = -r_g * g;
    m[(IG_Q, IG_D)] = -w;
    m
}

/// Input matrix of the circuit for `(e_d, e_q)`.
pub fn circuit_input_matrix(pp: &PlantParams) -> DMatrix<f64> {
    let a = pp.omega_n() / pp.l_f;
    let mut b = DMatrix::zeros(CIRCUIT_STATES, 2);
    b[(I_D, 0)] = a;
    b[(I_Q, 1)] = a;
    b
}

/// Active power, reactive power and capacitor-voltage magnitude.
pub fn power_outputs(x: &[f64]) -> (f64, f64, f64) {
    let (vd, vq, igd, igq) = (x[V_D], x[V_Q], x[IG_D], x[IG_Q]);
    (
        vd * igd + vq * igq,
        vq * igd - vd * igq,
        (vd * vd + vq * vq).sqrt(),
    )
}

fn equilibrium_residual(pp: &PlantParams, cp: &ControlParams, z: &[f64; 8]) -> [f64; 8] {
    let x: [f64; CIRCUIT_STATES] = core::array::from_fn(|i| z[i]);
    let (delta, e_mag) = (z[6], z[7]);
    let f = circuit_balance(pp, &x, [e_mag * delta.cos(), e_mag * delta.sin()]);
    let (p, q, v) = power_outputs(&x);
    let law = match cp.law {
        ControlLaw::Droop => e_mag - cp.v_st - (cp.q_st - q) / cp.d_q,
        ControlLaw::DroopI => cp.d_q * (cp.v_st - v) + cp.q_st - q,
    };
    [f[0], f[1], f[2], f[3], f[4], f[5], p - cp.p_equilibrium(pp.omega_g), law]
}

fn equilibrium_jacobian(pp: &PlantParams, cp: &ControlParams, z: &[f64; 8]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(8, 8);
    // Circuit rows are linear in the states; scale the state matrix back.
    let a = circuit_matrix(pp);
    let wn = pp.omega_n();
    let k = [pp.l_f, pp.l_f, pp.c_f, pp.c_f, pp.l_g, pp.l_g];
    for r in 0..CIRCUIT_STATES {
        for c in 0..CIRCUIT_STATES {
            j[(r, c)] = a[(r, c)] * k[r] / wn;
        }
    }
    let (delta, e_mag) = (z[6], z[7]);
    j[(0, 6)] = -e_mag * delta.sin();
    j[(0, 7)] = delta.cos();
    j[(1, 6)] = e_mag * delta.cos();
    j[(1, 7)] = delta.sin();
    let (vd, vq, igd, igq) = (z[V_D], z[V_Q], z[IG_D], z[IG_Q]);
    // p row
    j[(6, V_D)] = igd;
    j[(6, V_Q)] = igq;
    j[(6, IG_D)] = vd;
    j[(6, IG_Q)] = vq;
    // q partials
    let dq = [(V_D, -igq), (V_Q, igd), (IG_D, vq), (IG_Q, -vd)];
    match cp.law {
        ControlLaw::Droop => {
            j[(7, 7)] = 1.0;
            for (c, v) in dq {
                j[(7, c)] = v / cp.d_q;
            }
        }
        ControlLaw::DroopI => {
            let vm = (vd * vd + vq * vq).sqrt().max(1e-12);
            for (c, v) in dq {
                j[(7, c)] = -v;
            }
            j[(7, V_D)] -= cp.d_q * vd / vm;
            j[(7, V_Q)] -= cp.d_q * vq / vm;
        }
    }
    j
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

fn pack(pp: &PlantParams, z: &[f64; 8], residual: f64) -> OperatingPoint {
    let x: [f64; CIRCUIT_STATES] = core::array::from_fn(|i| z[i]);
    let (p, q, v) = power_outputs(&x);
    let _ = pp;
    OperatingPoint {
        delta: z[6],
        e_mag: z[7],
        e_d: z[7] * z[6].cos(),
        e_q: z[7] * z[6].sin(),
        v_d: z[V_D],
        v_q: z[V_Q],
        i_d: z[I_D],
        i_q: z[I_Q],
        i_gd: z[IG_D],
        i_gq: z[IG_Q],
        p,
        q,
        v_mag: v,
        residual,
    }
}

/// Damped Newton solve of the equilibrium of circuit, power loop and
/// reactive-power law, starting from `delta = 0`, unit voltages, zero
/// currents.
pub fn solve_operating_point(pp: &PlantParams, cp: &ControlParams) -> Result<OperatingPoint, PlantError> {
    pp.validate()?;
    cp.validate()?;
    let mut z = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let mut res = inf_norm(&equilibrium_residual(pp, cp, &z));
    for _ in 0..NEWTON_MAX_ITER {
        if res < 1e-14 {
            break;
        }
        let j = equilibrium_jacobian(pp, cp, &z);
        let f = DVector::from_column_slice(&equilibrium_residual(pp, cp, &z));
        let Some(step) = j.lu().solve(&f) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: [f64; 8] = core::array::from_fn(|i| z[i] - lambda * step[i]);
            let cres = inf_norm(&equilibrium_residual(pp, cp, &cand));
            if cres < res {
                z = cand;
                res = cres;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !z.iter().all(|v| v.is_finite()) || z[6].abs() > FRAC_PI_2 {
        return Err(PlantError::InfeasibleSetpoint { delta: z[6] });
    }
    let op = pack(pp, &z, res);
    if !(res < NEWTON_TOL) {
        return Err(PlantError::NoConvergence { best: op });
    }
    Ok(op)
}

/// Six-state small-signal model and its power-loop transfer functions.
#[derive(Clone, Debug)]
pub struct LinearPlant {
    pub params: PlantParams,
    pub op: OperatingPoint,
    pub resonance: ResonanceProfile,
    /// States: circuit (and active-damping filter states, if any); inputs
    /// `(de_d, de_q)`; outputs `(dp, dq, dV)`.
    pub ss: StateSpaceModel,
    pub g_pdelta: RationalFn,
    pub g_qe: RationalFn,
    pub g_ve: RationalFn,
    /// Lossless analytic `det(A)` and `det(B)`.
    pub det_a: Polynomial,
    pub det_b: Polynomial,
    /// Input direction of a magnitude perturbation `dE`.
    pub dir_e: [f64; 2],
    /// Input direction of an angle perturbation `d(delta)`.
    pub dir_delta: [f64; 2],
    pub ad: Vec<AdController>,
}

/// Linearizes the circuit and power outputs around `op`.
pub fn linearize(pp: &PlantParams, op: &OperatingPoint) -> Result<LinearPlant, PlantError> {
    if !(op.residual < 1e-8) {
        return Err(PlantError::ResidualTooLarge(op.residual));
    }
    let a = circuit_matrix(pp);
    let b = circuit_input_matrix(pp);
    let c = output_matrix(op, CIRCUIT_STATES);
    let ss = StateSpaceModel::new(a, b, c, DMatrix::zeros(3, 2))?;
    LinearPlant::from_model(pp.clone(), op.clone(), ss, Vec::new())
}

/// Output rows `(dp, dq, dV)` over the circuit states, zero-padded to `n`.
pub fn output_matrix(op: &OperatingPoint, n: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(3, n);
    c[(OUT_P, V_D)] = op.i_gd;
    c[(OUT_P, V_Q)] = op.i_gq;
    c[(OUT_P, IG_D)] = op.v_d;
    c[(OUT_P, IG_Q)] = op.v_q;
    c[(OUT_Q, V_D)] = -op.i_gq;
    c[(OUT_Q, V_Q)] = op.i_gd;
    c[(OUT_Q, IG_D)] = op.v_q;
    c[(OUT_Q, IG_Q)] = -op.v_d;
    c[(OUT_V, V_D)] = op.v_d / op.v_mag;
    c[(OUT_V, V_Q)] = op.v_q / op.v_mag;
    c
}

impl LinearPlant {
    pub(crate) fn from_model(
        params: PlantParams,
        op: OperatingPoint,
        ss: StateSpaceModel,
        ad: Vec<AdController>,
    ) -> Result<Self, PlantError> {
        let dir_e = [op.delta.cos(), op.delta.sin()];
        let dir_delta = [-op.e_mag * op.delta.sin(), op.e_mag * op.delta.cos()];
        let tm_e = ss_to_rational(&ss.with_input_direction(&dir_e)?)?;
        let tm_d = ss_to_rational(&ss.with_input_direction(&dir_delta)?)?;
        let resonance = resonance_frequencies(&params);
        Ok(Self {
            det_a: lossless_det_a(&params),
            det_b: lossless_det_b(&params),
            g_pdelta: tm_d.entry(OUT_P, 0),
            g_qe: tm_e.entry(OUT_Q, 0),
            g_ve: tm_e.entry(OUT_V, 0),
            resonance,
            dir_e,
            dir_delta,
            params,
            op,
            ss,
            ad,
        })
    }

    /// Input column `B * dir_e`.
    pub fn b_e(&self) -> Vec<f64> {
        mat_vec(self.ss.b(), &self.dir_e)
    }

    /// Input column `B * dir_delta`.
    pub fn b_delta(&self) -> Vec<f64> {
        mat_vec(self.ss.b(), &self.dir_delta)
    }

    pub fn output_row(&self, which: usize) -> Vec<f64> {
        self.ss.c().row(which).iter().copied().collect()
    }

    /// Common denominator `det(sI - A)` of the extracted transfer functions.
    pub fn characteristic(&self) -> &Polynomial {
        self.g_qe.den()
    }
}

fn mat_vec(b: &DMatrix<f64>, dir: &[f64; 2]) -> Vec<f64> {
    (0..b.nrows()).map(|i| b[(i, 0)] * dir[0] + b[(i, 1)] * dir[1]).collect()
}

/// `det(A) = s^2/w_n^2 + w_g^2`.
pub fn lossless_det_a(pp: &PlantParams) -> Polynomial {
    let wn = pp.omega_n();
    Polynomial::from_slice(&[pp.omega_g * pp.omega_g, 0.0, 1.0 / (wn * wn)])
}

/// `det(B) = L_g^2 / w_LC^4 (s^2 + w_1^2)(s^2 + w_2^2)`.
pub fn lossless_det_b(pp: &PlantParams) -> Polynomial {
    let r = resonance_frequencies(pp);
    let k = pp.l_g * pp.l_g / r.omega_lc.powi(4);
    let f1 = Polynomial::from_slice(&[r.omega_1 * r.omega_1, 0.0, 1.0]);
    let f2 = Polynomial::from_slice(&[r.omega_2 * r.omega_2, 0.0, 1.0]);
    (&f1 * &f2).scale(k)
}

impl OperatingPoint {
    /// Capacitor voltage resolved along and across the inverter voltage
    /// phasor: `(v_d0', v_q0')`. Equal to `(v_d0, v_q0)` when `delta = 0`.
    pub fn v_in_e_frame(&self) -> (f64, f64) {
        let (s, c) = (self.delta.sin(), self.delta.cos());
        (self.v_d * c + self.v_q * s, self.v_q * c - self.v_d * s)
    }
}

/// Lossless numerator of the capacitor-voltage magnitude response to `dE`,
/// `L_f C_f L_g^2 / (V_0 w_n^2) [(s^2 + w_1 w_2) v_d0' - 2 w_Lg v_q0' s]`,
/// with `(v_d0', v_q0')` from [`OperatingPoint::v_in_e_frame`].
pub fn lossless_n_ve(pp: &PlantParams, op: &OperatingPoint) -> Polynomial {
    let r = resonance_frequencies(pp);
    let wn = pp.omega_n();
    let k = pp.l_f * pp.c_f * pp.l_g * pp.l_g / (op.v_mag * wn * wn);
    let (vd, vq) = op.v_in_e_frame();
    Polynomial::from_slice(&[k * r.omega_1 * r.omega_2 * vd, -k * 2.0 * r.omega_lg * vq, k * vd])
}
