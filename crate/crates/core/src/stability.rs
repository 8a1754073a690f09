//! Routh arrays with symbolic epsilon substitution, Nyquist winding numbers,
//! classical margins and closed-loop verdicts.
//!
//! Encirclement convention: [`NyquistReport::winding_number`] is the
//! counter-clockwise winding of `G(jw)` around `-1`; the verdict uses the
//! clockwise count `N = -winding_number`, so that `Z = N + P` is the number
//! of right-half-plane closed-loop poles.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{FRAC_PI_4, PI};
use core::fmt;

use num_complex::Complex64;
// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use crate::loops::{count_rhp, OlModel};
use crate::poly::{eigenvalues, roots, PolyError, Polynomial, DEFAULT_ROOT_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("Routh array is degenerate: a zero row persists after auxiliary-polynomial substitution")]
    Inconclusive,
    #[error("open-loop pole {re}{im:+}j lies on the imaginary axis; add series resistance (e.g. R_g > 0)")]
    PoleOnContour { re: f64, im: f64 },
    #[error("invalid frequency range [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

// ---------------------------------------------------------------------------
// Routh
// ---------------------------------------------------------------------------

/// Polynomial in `eps` with a running bound on the rounding error of each
/// coefficient, so numerically cancelled terms are recognized as zero.
#[derive(Clone, Debug, PartialEq)]
struct EpsPoly {
    c: Vec<f64>,
    mag: Vec<f64>,
}

const ZERO_REL: f64 = 1e-9;

impl EpsPoly {
    fn constant(x: f64) -> Self {
        Self {
            c: vec![x],
            mag: vec![x.abs()],
        }
    }

    fn eps() -> Self {
        Self {
            c: vec![0.0, 1.0],
            mag: vec![0.0, 1.0],
        }
    }

    fn is_zero_at(&self, k: usize) -> bool {
        self.c[k].abs() <= ZERO_REL * self.mag[k]
    }

    /// Index and value of the lowest-order non-negligible coefficient.
    fn lowest(&self) -> Option<(usize, f64)> {
        (0..self.c.len()).find(|&k| !self.is_zero_at(k)).map(|k| (k, self.c[k]))
    }

    fn is_zero(&self) -> bool {
        self.lowest().is_none()
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.c.len() + o.c.len() - 1;
        let mut c = vec![0.0; n];
        let mut mag = vec![0.0; n];
        for i in 0..self.c.len() {
            for j in 0..o.c.len() {
                c[i + j] += self.c[i] * o.c[j];
                mag[i + j] += self.mag[i] * o.mag[j];
            }
        }
        Self { c, mag }
    }

    fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let get = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
        Self {
            c: (0..n).map(|k| get(&self.c, k) - get(&o.c, k)).collect(),
            mag: (0..n).map(|k| get(&self.mag, k) + get(&o.mag, k)).collect(),
        }
    }

    fn scale(&self, k: f64) -> Self {
        Self {
            c: self.c.iter().map(|x| x * k).collect(),
            mag: self.mag.iter().map(|x| x * k.abs()).collect(),
        }
    }

    /// Flushes negligible coefficients to exact zeros and restarts the
    /// bounds from the values, so only cancellation within one Routh step
    /// is judged (compounded worst-case bounds swamp long arrays).
    fn settle(&mut self) {
        for k in 0..self.c.len() {
            if self.is_zero_at(k) {
                self.c[k] = 0.0;
                self.mag[k] = 0.0;
            } else {
                self.mag[k] = self.c[k].abs();
            }
        }
    }

    /// Drops negligible trailing terms.
    fn trim(&mut self) {
        while self.c.len() > 1 && self.is_zero_at(self.c.len() - 1) {
            self.c.pop();
            self.mag.pop();
        }
    }
}

/// Rational function of `eps`.
#[derive(Clone, Debug, PartialEq)]
struct EpsRational {
    num: EpsPoly,
    den: EpsPoly,
}

impl EpsRational {
    fn constant(x: f64) -> Self {
        Self {
            num: EpsPoly::constant(x),
            den: EpsPoly::constant(1.0),
        }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn limit(&self) -> EpsLimit {
        let Some((kn, n)) = self.num.lowest() else {
            return EpsLimit::Finite(0.0);
        };
        let (kd, d) = self.den.lowest().expect("Routh denominators are nonzero");
        match kn.cmp(&kd) {
            Ordering::Equal => EpsLimit::Finite(n / d),
            Ordering::Greater if n / d > 0.0 => EpsLimit::ZeroPos,
            Ordering::Greater => EpsLimit::ZeroNeg,
            Ordering::Less if n / d > 0.0 => EpsLimit::PosInf,
            Ordering::Less => EpsLimit::NegInf,
        }
    }

    /// `(a * b - c * d) / a` for Routh recursion with pivot `a`.
    fn routh_step(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        // a = an/ad etc.: (an bn cd dd - cn dn ad bd) / (ad bd cd dd) * ad / an
        let t1 = a.num.mul(&b.num).mul(&c.den).mul(&d.den);
        let t2 = c.num.mul(&d.num).mul(&a.den).mul(&b.den);
        let mut num = t1.sub(&t2).mul(&a.den);
        let mut den = a.den.mul(&b.den).mul(&c.den).mul(&d.den).mul(&a.num);
        num.settle();
        den.settle();
        cancel_eps_powers(&mut num, &mut den);
        num.trim();
        den.trim();
        // A common power-of-two scale keeps magnitudes bounded without
        // changing the value.
        let s = den.c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if s > 0.0 && s.is_finite() {
            let k = 2f64.powi(-(s.log2().round() as i32));
            num = num.scale(k);
            den = den.scale(k);
        }
        Self { num, den }
    }

    fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }
}

/// Removes a common `eps^k` factor, keeping entry degrees bounded.
fn cancel_eps_powers(n: &mut EpsPoly, d: &mut EpsPoly) {
    let kn = n.lowest().map_or(0, |x| x.0);
    let kd = d.lowest().map_or(0, |x| x.0);
    let k = kn.min(kd);
    if k > 0 {
        n.c.drain(..k);
        n.mag.drain(..k);
        d.c.drain(..k);
        d.mag.drain(..k);
    }
}

/// Limit of a Routh first-column entry as `eps -> 0+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsLimit {
    Finite(f64),
    PosInf,
    NegInf,
    /// Tends to zero from above.
    ZeroPos,
    /// Tends to zero from below.
    ZeroNeg,
}

impl EpsLimit {
    pub fn sign(&self) -> i8 {
        match *self {
            EpsLimit::Finite(x) if x > 0.0 => 1,
            EpsLimit::Finite(x) if x < 0.0 => -1,
            EpsLimit::Finite(_) => 0,
            EpsLimit::PosInf | EpsLimit::ZeroPos => 1,
            EpsLimit::NegInf | EpsLimit::ZeroNeg => -1,
        }
    }
}

impl fmt::Display for EpsLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsLimit::Finite(x) => write!(f, "{x:.6e}"),
            EpsLimit::PosInf => f.write_str("+inf"),
            EpsLimit::NegInf => f.write_str("-inf"),
            EpsLimit::ZeroPos => f.write_str("0+"),
            EpsLimit::ZeroNeg => f.write_str("0-"),
        }
    }
}

/// One first-column entry of the Routh array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RouthEntry {
    /// Power of `s` labelling the row.
    pub power: usize,
    pub limit: EpsLimit,
    /// The pivot was exactly zero and replaced by `eps`.
    pub epsilon_substituted: bool,
    /// The row came from the derivative of the auxiliary polynomial.
    pub auxiliary: bool,
}

impl RouthEntry {
    pub fn sign(&self) -> i8 {
        self.limit.sign()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouthReport {
    pub first_column: Vec<RouthEntry>,
    pub sign_changes: usize,
    pub rhp_count: usize,
    pub used_epsilon: bool,
    pub used_auxiliary: bool,
}

/// Routh array of `p`. Exactly-zero pivots are replaced by a symbolic
/// `eps > 0`, every entry is kept as a rational function of `eps`, and signs
/// are taken in the limit `eps -> 0+`. A zero row is replaced by the
/// derivative of the auxiliary polynomial formed from the row above; so is
/// a row that vanishes only in the limit, provided the row above is finite.
pub fn routh(p: &Polynomial) -> Result<RouthReport, StabilityError> {
    let n = p.degree();
    if n == 0 {
        return Err(PolyError::DegreeZero.into());
    }
    let lead_sign = p.leading().signum();
    let c: Vec<f64> = (0..=n).rev().map(|k| p.coeff(k) * lead_sign).collect();
    let width = n / 2 + 1;
    let row_of = |start: usize| -> Vec<EpsRational> {
        (0..width)
            .map(|j| EpsRational::constant(c.get(start + 2 * j).copied().unwrap_or(0.0)))
            .collect()
    };
    let mut prev = row_of(0);
    let mut cur = row_of(1);
    let mut entries = Vec::with_capacity(n + 1);
    let mut used_epsilon = false;
    let mut used_auxiliary = false;
    entries.push(RouthEntry {
        power: n,
        limit: prev[0].limit(),
        epsilon_substituted: false,
        auxiliary: false,
    });

    for power in (0..n).rev() {
        let mut auxiliary = false;
        // A row that only vanishes as eps -> 0 below a finite row is a zero
        // row of the limiting array (roots symmetric about the origin).
        let vanishing = cur.iter().any(|e| !e.is_zero())
            && cur
                .iter()
                .all(|e| matches!(e.limit(), EpsLimit::Finite(x) if x == 0.0) || matches!(e.limit(), EpsLimit::ZeroPos | EpsLimit::ZeroNeg))
            && prev.iter().all(|e| matches!(e.limit(), EpsLimit::Finite(_)));
        if vanishing {
            prev = prev
                .iter()
                .map(|e| match e.limit() {
                    EpsLimit::Finite(x) => EpsRational::constant(x),
                    _ => unreachable!(),
                })
                .collect();
            cur = (0..width).map(|_| EpsRational::constant(0.0)).collect();
        }
        if cur.iter().all(|e| e.is_zero()) {
            // Auxiliary polynomial of order power+1 from `prev`.
            let order = power + 1;
            let mut deriv: Vec<EpsRational> = prev
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let k = order as isize - 2 * j as isize;
                    if k > 0 {
                        e.scale(k as f64)
                    } else {
                        EpsRational::constant(0.0)
                    }
                })
                .collect();
            deriv.resize(width, EpsRational::constant(0.0));
            if deriv.iter().all(|e| e.is_zero()) {
                return Err(StabilityError::Inconclusive);
            }
            cur = deriv;
            auxiliary = true;
            used_auxiliary = true;
        }
        let mut substituted = false;
        if cur[0].is_zero() {
            cur[0] = EpsRational {
                num: EpsPoly::eps(),
                den: EpsPoly::constant(1.0),
            };
            substituted = true;
            used_epsilon = true;
        }
        entries.push(RouthEntry {
            power,
            limit: cur[0].limit(),
            epsilon_substituted: substituted,
            auxiliary,
        });
        if power == 0 {
            break;
        }
        let zero = EpsRational::constant(0.0);
        let next: Vec<EpsRational> = (0..width)
            .map(|j| {
                let b = prev.get(j + 1).unwrap_or(&zero);
                let d = cur.get(j + 1).unwrap_or(&zero);
                EpsRational::routh_step(&cur[0], b, &prev[0], d)
            })
            .collect();
        prev = cur;
        cur = next;
    }

    let sign_changes = entries.windows(2).filter(|w| w[0].sign() * w[1].sign() < 0).count();
    Ok(RouthReport {
        first_column: entries,
        sign_changes,
        rhp_count: sign_changes,
        used_epsilon,
        used_auxiliary,
    })
}

// ---------------------------------------------------------------------------
// Nyquist
// ---------------------------------------------------------------------------

/// Refinement bound on consecutive samples: `|dG| < 0.05 (1 + |G|)`.
pub const NYQUIST_STEP_REL: f64 = 0.05;
const MAX_SAMPLES: usize = 400_000;
const MAX_DEPTH: u32 = 48;
const POLE_AXIS_REL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct NyquistReport {
    /// `(w, G(jw))` for `w >= 0`, increasing.
    pub samples: Vec<(f64, Complex64)>,
    /// Counter-clockwise encirclements of `-1` over the full contour.
    pub winding_number: i64,
    /// `min |G(jw) + 1|` over the sweep and its high-frequency limit.
    pub closest_approach: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl NyquistReport {
    /// Clockwise encirclements, the `N` of `Z = N + P`.
    pub fn encirclements_cw(&self) -> i64 {
        -self.winding_number
    }
}

/// Default sweep `[1, 10 w_ref]` rad/s.
pub fn default_range(m: &OlModel) -> (f64, f64) {
    (1.0, 10.0 * m.omega_ref)
}

/// Samples `G(jw)` on `w = 0` plus a logarithmic grid of `pts` points over
/// `[omega_min, omega_max]` (densified around lightly damped poles and zeros
/// of `G + 1`), bisecting every interval where the step bound
/// or a `pi/4` turn of `G + 1` is exceeded, and accumulates the argument of
/// `G + 1`. The negative-frequency half follows by conjugate symmetry; the
/// large semicircle adds nothing for proper `G`.
///
/// Poles on the imaginary axis are rejected; indentation is not supported.
pub fn nyquist(m: &OlModel, omega_min: f64, omega_max: f64, pts: usize) -> Result<NyquistReport, StabilityError> {
    if !(omega_min > 0.0) || !(omega_max > omega_min) || !omega_max.is_finite() {
        return Err(StabilityError::InvalidRange(omega_min, omega_max));
    }
    for p in &m.ol_poles {
        if p.re.abs() <= POLE_AXIS_REL * p.norm() {
            return Err(StabilityError::PoleOnContour { re: p.re, im: p.im });
        }
    }
    let g_inf = m.tf.high_frequency_limit().ok_or(PolyError::DegreeZero)?;
    let eval = |w: f64| m.tf.eval(Complex64::new(0.0, w));

    let pts = pts.max(2);
    let ratio = (omega_max / omega_min).ln() / (pts - 1) as f64;
    let mut grid = Vec::with_capacity(pts + 1);
    grid.push(0.0);
    grid.extend((0..pts).map(|k| omega_min * (ratio * k as f64).exp()));
    *grid.last_mut().unwrap() = omega_max;
    grid.extend(feature_frequencies(m, omega_min, omega_max));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut samples: Vec<(f64, Complex64)> = Vec::with_capacity(grid.len() * 2);
    let mut angle = 0.0;
    let mut first = (grid[0], eval(grid[0])?);
    samples.push(first);
    for &w in &grid[1..] {
        let next = (w, eval(w)?);
        angle += refine(&eval, first, next, &mut samples, 0)?;
        first = next;
    }
    // Internal tail to 1e4 w_max (not recorded), then the limit point.
    let mut tail = Vec::new();
    let mut t = first;
    for k in 1..=40 {
        let w = omega_max * 10f64.powf(k as f64 / 10.0);
        let next = (w, eval(w)?);
        angle += refine(&eval, t, next, &mut tail, 0)?;
        tail.clear();
        t = next;
    }
    let last = t.1 + 1.0;
    let inf = Complex64::new(g_inf + 1.0, 0.0);
    angle += wrap(inf.arg() - last.arg());

    let total = 2.0 * angle;
    let winding_number = (total / (2.0 * PI)).round() as i64;

    let closest = samples
        .iter()
        .map(|(_, g)| (g + 1.0).norm())
        .fold((g_inf + 1.0).abs(), f64::min);
    Ok(NyquistReport {
        samples,
        winding_number,
        closest_approach: closest,
        omega_min,
        omega_max,
    })
}

/// Extra samples clustered around lightly damped poles and zeros of `G + 1`.
/// A resonance narrower than the grid spacing would otherwise fall between
/// two samples without triggering refinement.
fn feature_frequencies(m: &OlModel, omega_min: f64, omega_max: f64) -> Vec<f64> {
    let mut features: Vec<Complex64> = m.ol_poles.clone();
    if let Ok(z) = roots(&(m.tf.num() + m.tf.den()), DEFAULT_ROOT_TOL) {
        features.extend(z);
    }
    let mut out = Vec::new();
    for p in features.iter().filter(|p| p.im > 0.0) {
        let width = p.re.abs();
        if width >= 0.01 * p.im {
            continue;
        }
        for k in -12i32..=12 {
            let offset = if k == 0 { 0.0 } else { f64::from(k.signum()) * width * 2f64.powi(k.abs() - 4) };
            let w = p.im + offset;
            if w > omega_min && w < omega_max {
                out.push(w);
            }
        }
    }
    out
}

fn wrap(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Appends the refined samples after `a` up to and including `b`; returns
/// the accumulated argument change of `G + 1`.
fn refine<F>(
    eval: &F,
    a: (f64, Complex64),
    b: (f64, Complex64),
    out: &mut Vec<(f64, Complex64)>,
    depth: u32,
) -> Result<f64, StabilityError>
where
    F: Fn(f64) -> Result<Complex64, PolyError>,
{
    let step = (b.1 - a.1).norm();
    let bound = NYQUIST_STEP_REL * (1.0 + a.1.norm().min(b.1.norm()));
    let turn = wrap((b.1 + 1.0).arg() - (a.1 + 1.0).arg());
    let fine_enough = step < bound && turn.abs() <= FRAC_PI_4;
    if fine_enough || depth >= MAX_DEPTH || out.len() >= MAX_SAMPLES || b.0 - a.0 <= 1e-12 * b.0 {
        out.push(b);
        return Ok(turn);
    }
    let wm = if a.0 > 0.0 { (a.0 * b.0).sqrt() } else { 0.5 * b.0 };
    let mid = (wm, eval(wm)?);
    let t1 = refine(eval, a, mid, out, depth + 1)?;
    let t2 = refine(eval, mid, b, out, depth + 1)?;
    Ok(t1 + t2)
}

// ---------------------------------------------------------------------------
// Verdict, margins, closed loop
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabilityVerdict {
    /// Right-half-plane open-loop poles.
    pub p: i64,
    /// Clockwise encirclements of `-1`.
    pub n: i64,
    /// Right-half-plane closed-loop poles, `N + P`.
    pub z: i64,
    pub minimum_phase: bool,
    pub stable: bool,
}

pub fn verdict(m: &OlModel, n: &NyquistReport) -> StabilityVerdict {
    let p = m.p_count as i64;
    let n_cw = n.encirclements_cw();
    let z = n_cw + p;
    StabilityVerdict {
        p,
        n: n_cw,
        z,
        minimum_phase: p == 0,
        stable: z == 0,
    }
}

impl fmt::Display for StabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# N counts clockwise encirclements of -1; Z = N + P")?;
        writeln!(f, "P = {}", self.p)?;
        writeln!(f, "N = {}", self.n)?;
        writeln!(f, "Z = {}", self.z)?;
        writeln!(f, "minimum_phase = {}", self.minimum_phase)?;
        write!(f, "stable = {}", self.stable)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginReport {
    /// Smallest gain margin over the -180 degree crossings, dB; `+inf` if the
    /// locus never crosses the negative real axis.
    pub gain_margin_db: f64,
    /// Frequency of that crossing, rad/s.
    pub phase_crossover: Option<f64>,
    /// Smallest phase margin over the unity-gain crossings, degrees; `+inf`
    /// without a crossing.
    pub phase_margin_deg: f64,
    pub gain_crossover: Option<f64>,
    /// Margins only describe stability for open-loop-stable systems.
    pub reliable: bool,
}

/// Gain and phase margins from the Nyquist samples, with crossings located
/// by bisection.
pub fn margins(m: &OlModel) -> Result<MarginReport, StabilityError> {
    let (lo, hi) = default_range(m);
    let rep = nyquist(m, lo, hi, 2000)?;
    margins_from(m, &rep)
}

pub fn margins_from(m: &OlModel, rep: &NyquistReport) -> Result<MarginReport, StabilityError> {
    let eval = |w: f64| m.tf.eval(Complex64::new(0.0, w));
    let mut gm = f64::INFINITY;
    let mut gm_w = None;
    let mut pm = f64::INFINITY;
    let mut pm_w = None;
    for w in rep.samples.windows(2) {
        let ((w0, g0), (w1, g1)) = (w[0], w[1]);
        // Negative real axis crossing.
        if g0.im * g1.im <= 0.0 && (g0.re < 0.0 || g1.re < 0.0) && !(g0.im == 0.0 && g1.im == 0.0) {
            let wc = bisect(|x| Ok(eval(x)?.im), w0, w1, g0.im)?;
            let g = eval(wc)?;
            if g.re < 0.0 {
                let margin = -20.0 * g.norm().log10();
                if margin < gm {
                    gm = margin;
                    gm_w = Some(wc);
                }
            }
        }
        // Unity-gain crossing.
        let (a0, a1) = (g0.norm() - 1.0, g1.norm() - 1.0);
        if a0 * a1 <= 0.0 && !(a0 == 0.0 && a1 == 0.0) {
            let wc = bisect(|x| Ok(eval(x)?.norm() - 1.0), w0, w1, a0)?;
            let g = eval(wc)?;
            let margin = wrap(g.arg() + PI) * 180.0 / PI;
            if margin < pm {
                pm = margin;
                pm_w = Some(wc);
            }
        }
    }
    Ok(MarginReport {
        gain_margin_db: gm,
        phase_crossover: gm_w,
        phase_margin_deg: pm,
        gain_crossover: pm_w,
        reliable: m.p_count == 0,
    })
}

fn bisect<F>(f: F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64, StabilityError>
where
    F: Fn(f64) -> Result<f64, PolyError>,
{
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if b - a <= 1e-13 * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Roots of `num + den`, the unity negative-feedback closed loop of `m.tf`.
pub fn closed_loop_poles(m: &OlModel) -> Result<Vec<Complex64>, StabilityError> {
    Ok(roots(&m.tf.feedback_characteristic(), DEFAULT_ROOT_TOL)?)
}

/// Eigenvalues of the closed-loop state matrix assembled from plant and
/// controller states.
pub fn closed_loop_eigenvalues(m: &OlModel) -> Vec<Complex64> {
    eigenvalues(&m.cl_matrix)
}

/// Largest relative distance between the rational and state-matrix
/// closed-loop pole sets after nearest-neighbour pairing; infinite if the
/// counts differ.
pub fn closed_loop_cross_check(m: &OlModel) -> Result<f64, StabilityError> {
    let a = closed_loop_poles(m)?;
    let mut b = closed_loop_eigenvalues(m);
    if a.len() != b.len() {
        return Ok(f64::INFINITY);
    }
    let mut worst: f64 = 0.0;
    for p in &a {
        let (k, d) = b
            .iter()
            .enumerate()
            .map(|(k, q)| (k, (p - q).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("same length");
        worst = worst.max(d / p.norm().max(1.0));
        b.swap_remove(k);
    }
    Ok(worst)
}

/// Right-half-plane closed-loop pole count with the model's threshold.
pub fn closed_loop_rhp(m: &OlModel) -> Result<usize, StabilityError> {
    Ok(count_rhp(&closed_loop_poles(m)?, m.stability_eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::RationalFn;

    fn model(num: &[f64], den: &[f64]) -> OlModel {
        OlModel::from_tf(RationalFn::from_coeffs(num, den).unwrap(), 1e-9).unwrap()
    }

    #[test]
    fn routh_stable_quadratic() {
        let r = routh(&Polynomial::from_slice(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(r.sign_changes, 0);
        assert_eq!(r.rhp_count, 0);
        assert!(!r.used_epsilon);
    }

    #[test]
    fn routh_counts_rhp() {
        // (s - 1)(s - 2)(s + 3) = s^3 - 7 s + 6
        let r = routh(&Polynomial::from_slice(&[6.0, -7.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.rhp_count, 2);
        assert!(r.used_epsilon);
    }

    #[test]
    fn routh_epsilon_limits() {
        // s^4 + s^3 + 2 s^2 + 2 s + 3: zero pivot in the s^2 row.
        let r = routh(&Polynomial::from_slice(&[3.0, 2.0, 2.0, 1.0, 1.0])).unwrap();
        assert!(r.used_epsilon);
        assert_eq!(r.first_column[3].limit, EpsLimit::NegInf);
        assert_eq!(r.rhp_count, 2);
    }

    #[test]
    fn routh_zero_row() {
        // (s^2 + 1)(s + 1) = s^3 + s^2 + s + 1: imaginary pair, no RHP root.
        let r = routh(&Polynomial::from_slice(&[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(r.used_auxiliary);
        assert_eq!(r.rhp_count, 0);
        // (s^2 - 1)(s^2 + 4)... s^4 + 3 s^2 - 4 has one RHP root.
        let r = routh(&Polynomial::from_slice(&[-4.0, 0.0, 3.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.rhp_count, 1);
    }

    #[test]
    fn routh_row_vanishing_in_limit() {
        // (s^2 + 1)(s^3 - 7 s + 6): an eps pivot, then the s^1 row only
        // vanishes as eps -> 0.
        let r = routh(&Polynomial::from_slice(&[6.0, -7.0, 6.0, -6.0, 0.0, 1.0])).unwrap();
        assert!(r.used_epsilon && r.used_auxiliary);
        assert_eq!(r.rhp_count, 2);
    }

    #[test]
    fn routh_negative_leading() {
        let r = routh(&Polynomial::from_slice(&[-1.0, -1.0, -1.0])).unwrap();
        assert_eq!(r.rhp_count, 0);
    }

    #[test]
    fn nyquist_small_gain() {
        let m = model(&[0.5], &[1.0, 1.0]);
        let rep = nyquist(&m, 1e-2, 1e3, 200).unwrap();
        assert_eq!(rep.winding_number, 0);
        assert!((rep.closest_approach - 1.0).abs() < 1e-12);
        let v = verdict(&m, &rep);
        assert!(v.stable && v.minimum_phase);
    }

    #[test]
    fn nyquist_third_order() {
        // 10/(s+1)^3: two clockwise encirclements.
        let m = model(&[10.0], &[1.0, 3.0, 3.0, 1.0]);
        let rep = nyquist(&m, 1e-2, 1e3, 200).unwrap();
        assert_eq!(rep.encirclements_cw(), 2);
        let v = verdict(&m, &rep);
        assert_eq!(v.z, 2);
        assert_eq!(closed_loop_rhp(&m).unwrap(), 2);
        // Refinement-invariant.
        let rep2 = nyquist(&m, 1e-2, 1e3, 400).unwrap();
        assert_eq!(rep2.winding_number, rep.winding_number);
    }

    #[test]
    fn nyquist_unstable_open_loop() {
        // 2/(s-1): P = 1, one counter-clockwise encirclement, stable loop.
        let m = model(&[2.0], &[-1.0, 1.0]);
        let rep = nyquist(&m, 1e-2, 1e3, 200).unwrap();
        let v = verdict(&m, &rep);
        assert_eq!((v.p, v.n, v.z), (1, -1, 0));
        assert!(v.stable && !v.minimum_phase);
    }

    #[test]
    fn nyquist_rejects_axis_pole() {
        let m = model(&[1.0], &[1.0, 0.0, 1.0]);
        assert!(matches!(
            nyquist(&m, 1e-2, 1e2, 100),
            Err(StabilityError::PoleOnContour { .. })
        ));
    }

    #[test]
    fn first_order_margins() {
        let m = model(&[1.0], &[1.0, 1.0]);
        let r = margins(&m).unwrap();
        assert!(r.gain_margin_db.is_infinite());
        assert!(r.phase_margin_deg.is_infinite() || r.gain_crossover.is_some());
        assert!(r.reliable);
    }

    #[test]
    fn third_order_margins() {
        // 4/(s+1)^3: phase crossover at sqrt(3), |G| = 0.5 -> 6.02 dB.
        let m = model(&[4.0], &[1.0, 3.0, 3.0, 1.0]);
        let r = margins(&m).unwrap();
        assert!((r.gain_margin_db - 6.0206).abs() < 1e-3, "{r:?}");
        assert!((r.phase_crossover.unwrap() - 3f64.sqrt()).abs() < 1e-8);
        assert!(r.phase_margin_deg > 0.0);
    }

    #[test]
    fn unity_feedback_pole() {
        let m = model(&[1.0], &[1.0, 1.0]);
        let p = closed_loop_poles(&m).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].re + 2.0).abs() < 1e-12);
        assert!(closed_loop_cross_check(&m).unwrap() < 1e-12);
    }
}
