//! Open-loop models of the reactive-power (RAP) and active-power (AP) loops,
//! the lossless droop-I characteristic coefficients, and active damping.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::plant::{
    output_matrix, resonance_frequencies, ControlLaw, ControlParams, LinearPlant, OperatingPoint, PlantError,
    PlantParams, CIRCUIT_STATES, IG_D, IG_Q, I_D, I_Q, OUT_P, OUT_Q, OUT_V, V_D, V_Q,
};
use crate::poly::{roots, PolyError, Polynomial, RationalFn, StateSpaceModel, DEFAULT_ROOT_TOL, DEFAULT_TOL_MATCH};

/// Relative RHP classification threshold (times `w_LCL`).
pub const STABILITY_EPS_REL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoopError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("pole/zero cancellation failed near {re}{im:+}j")]
    CancellationFailure { re: f64, im: f64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

/// Which loop an [`OlModel`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopKind {
    Rap(ControlLaw),
    Ap,
}

/// Open-loop transfer function with its poles and the unity-feedback
/// closed-loop state matrix used as an eigenvalue cross-check.
#[derive(Clone, Debug)]
pub struct OlModel {
    pub tf: RationalFn,
    pub ol_poles: Vec<Complex64>,
    pub p_count: usize,
    pub kind: LoopKind,
    pub cancelled_pairs: Vec<(Complex64, Complex64)>,
    pub stability_eps: f64,
    /// State matrix of the loop closed with unity negative feedback (plant
    /// and controller states; the other power loop held frozen).
    pub cl_matrix: DMatrix<f64>,
    /// Reference frequency for default sweeps, rad/s (`w_LCL` for plant
    /// models, otherwise the largest pole modulus).
    pub omega_ref: f64,
}

impl OlModel {
    pub fn new(tf: RationalFn, ol_poles: Vec<Complex64>, kind: LoopKind, stability_eps: f64) -> Self {
        let p_count = count_rhp(&ol_poles, stability_eps);
        // Companion-form closed loop of the rational function itself.
        let cl_matrix = companion(&tf.feedback_characteristic());
        let omega_ref = ol_poles.iter().fold(1.0f64, |m, p| m.max(p.norm()));
        Self {
            tf,
            ol_poles,
            p_count,
            kind,
            cancelled_pairs: Vec::new(),
            stability_eps,
            cl_matrix,
            omega_ref,
        }
    }

    /// Open-loop model of an arbitrary rational function, as used for
    /// textbook checks.
    pub fn from_tf(tf: RationalFn, stability_eps: f64) -> Result<Self, LoopError> {
        let poles = tf.poles(DEFAULT_ROOT_TOL)?;
        Ok(Self::new(tf, poles, LoopKind::Ap, stability_eps))
    }

    pub fn law(&self) -> Option<ControlLaw> {
        match self.kind {
            LoopKind::Rap(l) => Some(l),
            LoopKind::Ap => None,
        }
    }

    /// Open-loop poles with `|Im| > threshold`.
    pub fn hf_poles(&self, threshold: f64) -> Vec<Complex64> {
        self.ol_poles.iter().copied().filter(|p| p.im.abs() > threshold).collect()
    }
}

pub fn count_rhp(poles: &[Complex64], eps: f64) -> usize {
    poles.iter().filter(|p| p.re > eps).count()
}

/// Companion matrix whose characteristic polynomial is `p` (monic-normalized).
/// Returns an empty matrix for degree zero.
fn companion(p: &Polynomial) -> DMatrix<f64> {
    let deg = p.degree();
    let mut m = DMatrix::zeros(deg, deg);
    if deg == 0 {
        return m;
    }
    let lead = p.leading();
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for j in 0..deg {
        m[(j, deg - 1)] = -p.coeff(j) / lead;
    }
    m
}

fn eps_for(plant: &LinearPlant) -> f64 {
    STABILITY_EPS_REL * plant.resonance.omega_lcl
}

fn plant_poles(plant: &LinearPlant) -> Result<Vec<Complex64>, LoopError> {
    Ok(roots(plant.characteristic(), DEFAULT_ROOT_TOL)?)
}

/// Droop RAP loop: `G_qE(s) / (D_q (T_q s + 1))`.
pub fn build_droop_ol(plant: &LinearPlant, d_q: f64, t_q: f64) -> Result<OlModel, LoopError> {
    if !(t_q > 0.0) || !(d_q > 0.0) {
        return Err(LoopError::InvalidParameter("T_q and D_q must be positive"));
    }
    let g = &plant.g_qe;
    let den = g.den() * &Polynomial::linear(d_q * t_q, d_q);
    let tf = RationalFn::new(g.num().clone(), den)?;
    let mut poles = plant_poles(plant)?;
    poles.push(Complex64::new(-1.0 / t_q, 0.0));

    let n = plant.ss.states();
    let a = plant.ss.a();
    let b_e = plant.b_e();
    let c_q = plant.output_row(OUT_Q);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        m[(i, n)] = -b_e[i] / d_q;
        m[(n, i)] = c_q[i] / t_q;
    }
    m[(n, n)] = -1.0 / t_q;

    let mut ol = OlModel::new(tf, poles, LoopKind::Rap(ControlLaw::Droop), eps_for(plant));
    ol.cl_matrix = m;
    ol.omega_ref = plant.resonance.omega_lcl;
    Ok(ol)
}

/// Droop-I characteristic factor `s den + (k_pq s + k_iq) D_q N_V`, whose
/// roots are the RAP open-loop poles.
pub fn droopi_char_factor(plant: &LinearPlant, d_q: f64, k_pq: f64, k_iq: f64) -> Polynomial {
    let den = plant.g_ve.den();
    let k = Polynomial::linear(k_pq, k_iq);
    let s_den = den.shift(1);
    &s_den + &(&k * plant.g_ve.num()).scale(d_q)
}

/// Droop-I RAP loop:
/// `(k_pq s + k_iq) N_q / (s den + (k_pq s + k_iq) D_q N_V)`.
///
/// The composition `K G_qE / (1 + K D_q G_VE)` carries the common factor
/// `s det(sI - A)` in numerator and denominator; it is formed explicitly and
/// cancelled root by root so the removed pairs are recorded.
pub fn build_droopi_ol(plant: &LinearPlant, d_q: f64, k_pq: f64, k_iq: f64) -> Result<OlModel, LoopError> {
    if !(k_iq > 0.0) || !(d_q > 0.0) {
        return Err(LoopError::InvalidParameter("k_iq and D_q must be positive"));
    }
    let den = plant.g_qe.den();
    let k = Polynomial::linear(k_pq, k_iq);
    let chr = droopi_char_factor(plant, d_q, k_pq, k_iq);
    let num = &k * plant.g_qe.num();
    let tf = RationalFn::new(num.clone(), chr.clone())?;

    let s_den = den.shift(1);
    let unreduced = RationalFn::new(&num * &s_den, &chr * &s_den)?;
    let mut targets = roots(den, DEFAULT_ROOT_TOL)?;
    targets.push(Complex64::new(0.0, 0.0));
    let pairs = cancel_common(&unreduced, &targets)?;

    let poles = roots(&chr, DEFAULT_ROOT_TOL)?;

    let n = plant.ss.states();
    let b_e = plant.b_e();
    let c_q = plant.output_row(OUT_Q);
    let c_v = plant.output_row(OUT_V);
    let err: Vec<f64> = (0..n).map(|i| -(d_q * c_v[i] + c_q[i])).collect();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(plant.ss.a());
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += b_e[i] * k_pq * err[j];
        }
        m[(i, n)] = b_e[i];
        m[(n, i)] = k_iq * err[i];
    }

    let mut ol = OlModel::new(tf, poles, LoopKind::Rap(ControlLaw::DroopI), eps_for(plant));
    ol.cancelled_pairs = pairs;
    ol.cl_matrix = m;
    ol.omega_ref = plant.resonance.omega_lcl;
    Ok(ol)
}

/// Cancels `targets` from both sides of `g`. Roots at the origin are matched
/// absolutely (they are exact zeros of the coefficient vectors).
fn cancel_common(g: &RationalFn, targets: &[Complex64]) -> Result<Vec<(Complex64, Complex64)>, LoopError> {
    let zero = Complex64::new(0.0, 0.0);
    let (nonzero, origin): (Vec<Complex64>, Vec<Complex64>) = targets.iter().partition(|t| t.norm() > 0.0);
    let mut pairs: Vec<(Complex64, Complex64)> = Vec::new();
    // Exact origin factors are stripped by coefficient shift.
    let mut num = g.num().clone();
    let mut den = g.den().clone();
    for _ in &origin {
        if num.coeff(0) != 0.0 || den.coeff(0) != 0.0 {
            return Err(LoopError::CancellationFailure { re: 0.0, im: 0.0 });
        }
        num = Polynomial::from_slice(&num.coeffs()[1..]);
        den = Polynomial::from_slice(&den.coeffs()[1..]);
        pairs.push((zero, zero));
    }
    let rest = RationalFn::new(num, den)?;
    match rest.cancel_roots(&nonzero, DEFAULT_TOL_MATCH) {
        Ok((_, mut p)) => {
            pairs.append(&mut p);
            Ok(pairs)
        }
        Err(PolyError::CancellationMismatch { re, im }) => Err(LoopError::CancellationFailure { re, im }),
        Err(e) => Err(e.into()),
    }
}

/// RAP open-loop model for the law in `cp`.
pub fn build_rap_ol(plant: &LinearPlant, cp: &ControlParams) -> Result<OlModel, LoopError> {
    match cp.law {
        ControlLaw::Droop => build_droop_ol(plant, cp.d_q, cp.t_q),
        ControlLaw::DroopI => build_droopi_ol(plant, cp.d_q, cp.k_pq, cp.k_iq),
    }
}

/// AP loop: `G_pdelta(s) w_n / (s (2 H s + D_p))`.
pub fn build_ap_ol(plant: &LinearPlant, h: f64, d_p: f64) -> Result<OlModel, LoopError> {
    if !(h > 0.0) || !(d_p >= 0.0) {
        return Err(LoopError::InvalidParameter("H must be positive and D_p non-negative"));
    }
    let wn = plant.params.omega_n();
    let g = &plant.g_pdelta;
    let ctrl = Polynomial::from_slice(&[0.0, d_p, 2.0 * h]);
    let tf = RationalFn::new(g.num().scale(wn), g.den() * &ctrl)?;
    let mut poles = plant_poles(plant)?;
    poles.push(Complex64::new(0.0, 0.0));
    poles.push(Complex64::new(-d_p / (2.0 * h), 0.0));

    // Closed loop over (x, delta, omega) with the RAP loop frozen.
    let n = plant.ss.states();
    let b_d = plant.b_delta();
    let c_p = plant.output_row(OUT_P);
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m.view_mut((0, 0), (n, n)).copy_from(plant.ss.a());
    for i in 0..n {
        m[(i, n)] = b_d[i];
        m[(n + 1, i)] = -c_p[i] / (2.0 * h);
    }
    m[(n, n + 1)] = wn;
    m[(n + 1, n + 1)] = -d_p / (2.0 * h);

    let mut ol = OlModel::new(tf, poles, LoopKind::Ap, eps_for(plant));
    ol.cl_matrix = m;
    ol.omega_ref = plant.resonance.omega_lcl;
    Ok(ol)
}

/// State matrix of the complete small-signal system with both power loops
/// closed. State order: plant states (circuit, then any active-damping
/// filters), `d(delta)`, `d(omega)`, reactive-power controller state
/// (filtered `q` for droop, integrator for droop-I).
pub fn full_state_matrix(plant: &LinearPlant, cp: &ControlParams) -> Result<DMatrix<f64>, LoopError> {
    cp.validate()?;
    let n = plant.ss.states();
    let (id, iw, ic) = (n, n + 1, n + 2);
    let wn = plant.params.omega_n();
    let b_e = plant.b_e();
    let b_d = plant.b_delta();
    let c_p = plant.output_row(OUT_P);
    let c_q = plant.output_row(OUT_Q);
    let c_v = plant.output_row(OUT_V);
    let mut m = DMatrix::zeros(n + 3, n + 3);
    m.view_mut((0, 0), (n, n)).copy_from(plant.ss.a());
    for i in 0..n {
        m[(i, id)] = b_d[i];
        m[(iw, i)] = -c_p[i] / (2.0 * cp.h);
    }
    m[(id, iw)] = wn;
    m[(iw, iw)] = -cp.d_p / (2.0 * cp.h);
    match cp.law {
        ControlLaw::Droop => {
            for i in 0..n {
                m[(i, ic)] = -b_e[i] / cp.d_q;
                m[(ic, i)] = c_q[i] / cp.t_q;
            }
            m[(ic, ic)] = -1.0 / cp.t_q;
        }
        ControlLaw::DroopI => {
            let err: Vec<f64> = (0..n).map(|i| -(cp.d_q * c_v[i] + c_q[i])).collect();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += b_e[i] * cp.k_pq * err[j];
                }
                m[(i, ic)] = b_e[i];
                m[(ic, i)] = cp.k_iq * err[i];
            }
        }
    }
    Ok(m)
}

/// Coefficients of the monic lossless droop-I characteristic factor
/// `s^5 + a3 s^3 + a2 s^2 + a1 s + a0` (the `s^4` term vanishes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharCoeffs {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl CharCoeffs {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::from_slice(&[self.a0, self.a1, self.a2, self.a3, 0.0, 1.0])
    }
}

/// Closed-form lossless coefficients (resistances in `pp` are ignored), with
/// the capacitor voltage resolved in the inverter-voltage frame.
pub fn char_coeffs_lossless(pp: &PlantParams, op: &OperatingPoint, d_q: f64, k_pq: f64, k_iq: f64) -> CharCoeffs {
    let r = resonance_frequencies(pp);
    let (w1, w2, wlg) = (r.omega_1, r.omega_2, r.omega_lg);
    let wlc2 = r.omega_lc * r.omega_lc;
    let (vd, vq) = op.v_in_e_frame();
    let v0 = op.v_mag;
    let g = d_q * wlc2 / v0;
    CharCoeffs {
        a3: w1 * w1 + w2 * w2 + g * k_pq * vd,
        a2: g * (k_iq * vd - 2.0 * k_pq * wlg * vq),
        a1: w1 * w1 * w2 * w2 + g * (w1 * w2 * k_pq * vd - 2.0 * k_iq * wlg * vq),
        a0: g * vd * k_iq * w1 * w2,
    }
}

/// Active-damping measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AdKind {
    InverterCurrent,
    GridCurrent,
    CapVoltage,
}

impl AdKind {
    fn channels(self) -> [usize; 2] {
        match self {
            AdKind::InverterCurrent => [I_D, I_Q],
            AdKind::GridCurrent => [IG_D, IG_Q],
            AdKind::CapVoltage => [V_D, V_Q],
        }
    }

    /// Sign of the filter transfer function. The grid-current design uses a
    /// negative high-pass, i.e. its feedback adds to the voltage reference.
    pub fn polarity(self) -> f64 {
        match self {
            AdKind::GridCurrent => -1.0,
            _ => 1.0,
        }
    }
}

/// Active-damping feedback `de = -G_AD(s) m` on the measured dq pair `m`,
/// with `G_AD(s) = +/- k s / (T s + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdController {
    pub kind: AdKind,
    pub gain: f64,
    pub time_const: f64,
}

impl AdController {
    pub fn new(kind: AdKind, gain: f64, time_const: f64) -> Result<Self, LoopError> {
        if !(time_const > 0.0) || !gain.is_finite() {
            return Err(LoopError::InvalidParameter("AD time constant must be positive and gain finite"));
        }
        Ok(Self { kind, gain, time_const })
    }

    /// Reference designs: inverter current `5.5e-5 s/(s/(90 pi) + 1)`, grid
    /// current `-1.3e-4 s/(s/(180 pi) + 1)`, capacitor voltage
    /// `2.2e-6 s/(s/(4000 pi) + 1)`.
    pub fn reference(kind: AdKind) -> Self {
        let (gain, time_const) = match kind {
            AdKind::InverterCurrent => (5.5e-5, 1.0 / (90.0 * PI)),
            AdKind::GridCurrent => (1.3e-4, 1.0 / (180.0 * PI)),
            AdKind::CapVoltage => (2.2e-6, 1.0 / (4000.0 * PI)),
        };
        Self { kind, gain, time_const }
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        Self { gain, ..self.clone() }
    }

    pub fn polarity(&self) -> f64 {
        self.kind.polarity()
    }

    pub fn tf(&self) -> RationalFn {
        RationalFn::new(
            Polynomial::from_slice(&[0.0, self.polarity() * self.gain]),
            Polynomial::linear(self.time_const, 1.0),
        )
        .expect("T s + 1 is nonzero")
    }

    pub fn channels(&self) -> [usize; 2] {
        self.kind.channels()
    }
}

/// Augments the plant with the two AD filter states (`z' = (m - z)/T`,
/// `y = pol k/T (m - z)`, `de = u - y`) and re-extracts the transfer
/// functions.
pub fn apply_ad(plant: &LinearPlant, ad: &AdController) -> Result<LinearPlant, LoopError> {
    if !(ad.time_const > 0.0) {
        return Err(LoopError::InvalidParameter("AD time constant must be positive"));
    }
    let n = plant.ss.states();
    let a0 = plant.ss.a();
    let b0 = plant.ss.b();
    let n2 = n + 2;
    let t = ad.time_const;
    let g = ad.polarity() * ad.gain / t;
    let ch = ad.channels();

    let mut a = DMatrix::zeros(n2, n2);
    a.view_mut((0, 0), (n, n)).copy_from(a0);
    for (k, &c) in ch.iter().enumerate() {
        let z = n + k;
        a[(z, c)] = 1.0 / t;
        a[(z, z)] = -1.0 / t;
        for i in 0..n {
            a[(i, c)] -= g * b0[(i, k)];
            a[(i, z)] += g * b0[(i, k)];
        }
    }
    let mut b = DMatrix::zeros(n2, 2);
    b.view_mut((0, 0), (n, 2)).copy_from(b0);
    let mut c = output_matrix(&plant.op, n2);
    debug_assert!(CIRCUIT_STATES <= n);
    // Preserve any extra output columns contributed by earlier augmentation.
    for r in 0..3 {
        for j in CIRCUIT_STATES..n {
            c[(r, j)] = plant.ss.c()[(r, j)];
        }
    }
    let ss = StateSpaceModel::new(a, b, c, DMatrix::zeros(3, 2))?;
    let mut ads = plant.ad.clone();
    ads.push(ad.clone());
    Ok(LinearPlant::from_model(plant.params.clone(), plant.op.clone(), ss, ads)?)
}
