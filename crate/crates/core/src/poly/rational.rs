use alloc::vec::Vec;

use num_complex::Complex64;

// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use super::{roots, PolyError, Polynomial};

/// Default relative distance for pairing numerator and denominator roots in
/// [`RationalFn::cancel`].
pub const DEFAULT_TOL_MATCH: f64 = 1e-6;

/// Relative threshold under which `|den(s)|` counts as a pole hit.
const POLE_HIT_REL: f64 = 1e-14;

/// Ratio of two real polynomials.
///
/// Common factors are kept; cancellation only happens through
/// [`RationalFn::cancel`] or [`RationalFn::cancel_roots`].
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFn {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFn {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self, PolyError> {
        Self::new(Polynomial::new(num.to_vec())?, Polynomial::new(den.to_vec())?)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    /// `num(s) / den(s)` by Horner evaluation.
    pub fn eval(&self, s: Complex64) -> Result<Complex64, PolyError> {
        let d = self.den.eval_complex(s);
        if d.norm() <= POLE_HIT_REL * self.den.abs_eval(s) {
            return Err(PolyError::PoleHit { re: s.re, im: s.im });
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// Limit as `|s| -> infinity`; zero when strictly proper, `None` when
    /// improper.
    pub fn high_frequency_limit(&self) -> Option<f64> {
        if self.is_strictly_proper() {
            Some(0.0)
        } else if self.num.degree() == self.den.degree() {
            Some(self.num.leading() / self.den.leading())
        } else {
            None
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Product without any cancellation.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn poles(&self, tol: f64) -> Result<Vec<Complex64>, PolyError> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        roots(&self.den, tol)
    }

    pub fn zeros(&self, tol: f64) -> Result<Vec<Complex64>, PolyError> {
        if self.num.is_zero() || self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        roots(&self.num, tol)
    }

    /// Characteristic polynomial `num + den` of the unity negative-feedback
    /// loop closed around this function.
    pub fn feedback_characteristic(&self) -> Polynomial {
        &self.num + &self.den
    }

    /// Cancels every numerator/denominator root pair closer than `tol_match`
    /// (relative to the root modulus). Returns the reduced function and the
    /// `(zero, pole)` pairs removed.
    pub fn cancel(&self, tol_match: f64) -> Result<(Self, Vec<(Complex64, Complex64)>), PolyError> {
        let zs = self.zeros(super::DEFAULT_ROOT_TOL)?;
        let ps = self.poles(super::DEFAULT_ROOT_TOL)?;
        let pairs = match_roots(&zs, &ps, tol_match);
        let reduced = self.remove_pairs(&pairs)?;
        Ok((reduced, pairs))
    }

    /// Cancels exactly the given `targets` from both numerator and
    /// denominator. Every target must be matched on both sides within
    /// `tol_match`, otherwise [`PolyError::CancellationMismatch`] is returned.
    ///
    /// Roots in a tight cluster are only determined to within the cluster
    /// spacing, so the tolerance of a target is widened by `|t| / d`, where
    /// `d` is its distance to the nearest other target.
    pub fn cancel_roots(
        &self,
        targets: &[Complex64],
        tol_match: f64,
    ) -> Result<(Self, Vec<(Complex64, Complex64)>), PolyError> {
        let mut zs = self.zeros(super::DEFAULT_ROOT_TOL)?;
        let mut ps = self.poles(super::DEFAULT_ROOT_TOL)?;
        let mut pairs = Vec::with_capacity(targets.len());
        for (k, &t) in targets.iter().enumerate() {
            let zi = nearest(&zs, t);
            let pi = nearest(&ps, t);
            let (Some(zi), Some(pi)) = (zi, pi) else {
                return Err(PolyError::CancellationMismatch { re: t.re, im: t.im });
            };
            let spacing = targets
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &u)| (u - t).norm())
                .fold(f64::INFINITY, f64::min);
            let scale = t.norm().max(f64::MIN_POSITIVE);
            let tol = tol_match * (scale / spacing).max(1.0);
            if (zs[zi] - t).norm() > tol * scale || (ps[pi] - t).norm() > tol * scale {
                return Err(PolyError::CancellationMismatch { re: t.re, im: t.im });
            }
            pairs.push((zs.swap_remove(zi), ps.swap_remove(pi)));
        }
        let reduced = self.remove_pairs(&pairs)?;
        Ok((reduced, pairs))
    }

    fn remove_pairs(&self, pairs: &[(Complex64, Complex64)]) -> Result<Self, PolyError> {
        if pairs.is_empty() {
            return Ok(self.clone());
        }
        // Deflate with the exact quadratic/linear factors of each root, using
        // the side's own root so the division remainder is at rounding level.
        let zf = Polynomial::from_roots(&pairs.iter().map(|p| p.0).collect::<Vec<_>>(), 1.0);
        let pf = Polynomial::from_roots(&pairs.iter().map(|p| p.1).collect::<Vec<_>>(), 1.0);
        let (num, _) = self.num.div_rem(&zf)?;
        let (den, _) = self.den.div_rem(&pf)?;
        Self::new(num, den)
    }
}

fn nearest(set: &[Complex64], t: Complex64) -> Option<usize> {
    set.iter()
        .enumerate()
        .min_by(|a, b| (*a.1 - t).norm().total_cmp(&(*b.1 - t).norm()))
        .map(|(k, _)| k)
}

/// Greedy closest-first pairing of two root multisets within a relative
/// distance. Conjugation closure of both inputs carries over to the result.
pub fn match_roots(a: &[Complex64], b: &[Complex64], tol: f64) -> Vec<(Complex64, Complex64)> {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let rel = (x - y).norm() / x.norm().max(y.norm()).max(f64::MIN_POSITIVE);
            if rel <= tol {
                cands.push((rel, i, j));
            }
        }
    }
    cands.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = alloc::vec![false; a.len()];
    let mut used_b = alloc::vec![false; b.len()];
    let mut out = Vec::new();
    for (_, i, j) in cands {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push((a[i], b[j]));
        }
    }
    out
}
