use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use super::PolyError;

/// Real polynomial with coefficients stored in ascending powers of `s`.
///
/// Trailing (highest-power) exact zeros are trimmed on construction, so the
/// stored leading coefficient is nonzero unless the polynomial is the zero
/// constant `[0.0]`.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

/// Binary polynomial operation selector for [`poly_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

/// Exact coefficient arithmetic on two polynomials.
pub fn poly_arith(a: &Polynomial, b: &Polynomial, op: PolyOp) -> Polynomial {
    match op {
        PolyOp::Add => a + b,
        PolyOp::Sub => a - b,
        PolyOp::Mul => a * b,
    }
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.is_empty() {
            return Err(PolyError::Empty);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        Ok(Self::from_vec_unchecked(coeffs))
    }

    pub(crate) fn from_vec_unchecked(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    /// Convenience constructor from a coefficient slice (ascending powers).
    ///
    /// # Panics
    /// Panics on an empty slice or non-finite coefficients.
    pub fn from_slice(coeffs: &[f64]) -> Self {
        Self::new(coeffs.to_vec()).expect("invalid polynomial coefficients")
    }

    pub fn constant(c: f64) -> Self {
        Self::from_vec_unchecked(vec![c])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self::from_vec_unchecked(vec![0.0, 1.0])
    }

    /// `a*s + b`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::from_vec_unchecked(vec![b, a])
    }

    /// Monic polynomial with the given roots, scaled by `lead`.
    ///
    /// Complex roots must come in conjugate pairs; the imaginary residue of the
    /// expansion is discarded.
    pub fn from_roots(roots: &[Complex64], lead: f64) -> Self {
        let mut acc = vec![Complex64::new(lead, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Self::from_vec_unchecked(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    /// Coefficient of `s^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Horner evaluation at a complex point.
    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// `sum |a_k| |s|^k`, the natural scale for the residual at `s`.
    pub fn abs_eval(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::from_vec_unchecked(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_vec_unchecked(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Substitutes `s -> rho * s`.
    pub fn scale_var(&self, rho: f64) -> Self {
        let mut p = 1.0;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * p);
            p *= rho;
        }
        Self::from_vec_unchecked(out)
    }

    /// Multiplies by `s^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut out = vec![0.0; k];
        out.extend_from_slice(&self.coeffs);
        Self::from_vec_unchecked(out)
    }

    /// Polynomial long division, returning `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), PolyError> {
        if divisor.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let n = self.degree();
        let m = divisor.degree();
        if n < m {
            return Ok((Self::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; n - m + 1];
        let lead = divisor.leading();
        for k in (0..=n - m).rev() {
            let q = rem[k + m] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + m] = 0.0;
        }
        rem.truncate(m.max(1));
        Ok((Self::from_vec_unchecked(quot), Self::from_vec_unchecked(rem)))
    }

    /// Drops leading coefficients whose magnitude is below `rel_tol` times the
    /// largest coefficient.
    pub fn trim(&self, rel_tol: f64) -> Self {
        let thresh = rel_tol * self.norm_inf();
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= thresh {
            c.pop();
        }
        Self::from_vec_unchecked(c)
    }

    /// All roots; see [`super::roots`].
    pub fn roots(&self, tol: f64) -> Result<Vec<Complex64>, PolyError> {
        super::roots(self, tol)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*s")?,
                _ => write!(f, "{a}*s^{k}")?,
            }
        }
        Ok(())
    }
}

fn zip_with(a: &Polynomial, b: &Polynomial, op: impl Fn(f64, f64) -> f64) -> Polynomial {
    let n = a.coeffs.len().max(b.coeffs.len());
    Polynomial::from_vec_unchecked((0..n).map(|k| op(a.coeff(k), b.coeff(k))).collect())
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_vec_unchecked(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
