//! Aberth–Ehrlich simultaneous root iteration with Newton polishing.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use super::{PolyError, Polynomial};

/// Default relative residual tolerance for [`roots`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;

const MAX_ITER: usize = 500;
const POLISH_STEPS: usize = 8;

/// Normalized residual of `r` as a root of `p`: `|p(r)| / sum |a_k| |r|^k`.
///
/// This is the relative backward error of the root; it stays meaningful for
/// the wide coefficient ranges that high-frequency polynomials produce.
pub fn root_residual(p: &Polynomial, r: Complex64) -> f64 {
    let scale = p.abs_eval(r);
    if scale == 0.0 {
        return 0.0;
    }
    p.eval_complex(r).norm() / scale
}

/// Power-of-two frequency scale that brings the root magnitudes near one.
///
/// Uses the geometric mean `|a_0 / a_n|^(1/n)` of the root moduli. Powers of
/// two make the substitution `s -> rho * s` exact in floating point.
pub fn frequency_scale(p: &Polynomial) -> f64 {
    let n = p.degree();
    let a0 = p.coeff(0).abs();
    let an = p.leading().abs();
    if n == 0 || a0 == 0.0 || an == 0.0 {
        return 1.0;
    }
    let g = (a0.ln() - an.ln()) / n as f64;
    let e = (g / core::f64::consts::LN_2).round();
    2f64.powi(e.clamp(-1000.0, 1000.0) as i32)
}

/// All complex roots of `p`, with multiplicity, closed under conjugation.
///
/// The polynomial is rescaled by [`frequency_scale`] before iterating, and
/// every root is Newton-polished afterwards. A root is accepted when its
/// [`root_residual`] is below `tol`.
pub fn roots(p: &Polynomial, tol: f64) -> Result<Vec<Complex64>, PolyError> {
    let n = p.degree();
    if n == 0 {
        return Err(PolyError::DegreeZero);
    }
    let zeros_at_origin = p.coeffs().iter().take_while(|&&c| c == 0.0).count();
    let mut out: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if zeros_at_origin == n {
        return Ok(out);
    }
    let reduced = Polynomial::from_vec_unchecked(p.coeffs()[zeros_at_origin..].to_vec());
    let rho = frequency_scale(&reduced);
    let scaled = reduced.scale_var(rho);
    let monic = scaled.scale(1.0 / scaled.leading());

    // Hitting the iteration cap is only fatal if polishing cannot rescue it.
    let (mut z, _converged) = aberth(&monic);
    for zi in z.iter_mut() {
        *zi = polish(&monic, *zi);
    }
    let mut found = symmetrize(z);
    for r in found.iter_mut() {
        *r *= rho;
    }
    let residuals: Vec<f64> = found.iter().map(|&r| root_residual(p, r)).collect();
    out.append(&mut found);
    if residuals.iter().any(|&e| !(e < tol)) {
        let mut all = vec![0.0; zeros_at_origin];
        all.extend(residuals);
        return Err(PolyError::NonConvergence {
            roots: out,
            residuals: all,
        });
    }
    Ok(out)
}

/// Simultaneous iteration on a monic polynomial. Returns the iterates and
/// whether every correction fell to rounding level.
fn aberth(p: &Polynomial) -> (Vec<Complex64>, bool) {
    let n = p.degree();
    let dp = p.derivative();
    // Initial guesses on a circle whose radius is the geometric mean of the
    // root moduli, with an angular offset that breaks real-axis symmetry.
    let radius = p.coeff(0).abs().powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let pv = p.eval_complex(zi);
            if pv.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = pv / dp.eval_complex(zi);
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = zi - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !w.re.is_finite() || !w.im.is_finite() {
                // Perturb off a stationary point of the derivative.
                z[i] = zi * Complex64::new(1.0, 1e-3) + Complex64::new(1e-6, 1e-6);
                all_done = false;
                continue;
            }
            z[i] = zi - w;
            if w.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return (z, true);
        }
    }
    (z, false)
}

/// Newton steps that stop as soon as the residual no longer decreases.
fn polish(p: &Polynomial, mut z: Complex64) -> Complex64 {
    let dp = p.derivative();
    let mut res = root_residual(p, z);
    for _ in 0..POLISH_STEPS {
        if res == 0.0 {
            break;
        }
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval_complex(z) / d;
        let cres = root_residual(p, cand);
        if !(cres < res) {
            break;
        }
        z = cand;
        res = cres;
    }
    z
}

/// Pairs every complex root with its conjugate and snaps near-real roots to
/// the real axis, so the returned set is exactly conjugation-closed.
fn symmetrize(mut z: Vec<Complex64>) -> Vec<Complex64> {
    const REAL_TOL: f64 = 1e-7;
    let mut out = Vec::with_capacity(z.len());
    while !z.is_empty() {
        let (k, _) = z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.im.abs().total_cmp(&b.1.im.abs()))
            .unwrap();
        let r = z.swap_remove(k);
        if r.im.abs() <= REAL_TOL * r.norm() || z.is_empty() {
            out.push(Complex64::new(r.re, 0.0));
            continue;
        }
        let target = r.conj();
        let (j, _) = z
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - target).norm().total_cmp(&(*b.1 - target).norm()))
            .unwrap();
        let partner = z.swap_remove(j);
        let avg = (r + partner.conj()) * 0.5;
        let upper = Complex64::new(avg.re, avg.im.abs());
        out.push(upper);
        out.push(upper.conj());
    }
    out
}

/// Sorts roots by real part, then imaginary part, for stable presentation.
pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
