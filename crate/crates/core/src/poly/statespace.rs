use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

// Float supplies f64 math in no_std builds.
#[allow(unused_imports)]
use num_traits::Float;

use super::{PolyError, Polynomial, RationalFn};

/// Continuous-time linear model `x' = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self, PolyError> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(PolyError::DimensionMismatch);
        }
        Ok(Self { a, b, c, d })
    }

    /// SISO model from `A`, an input column and an output row.
    pub fn siso(a: DMatrix<f64>, b: &[f64], c: &[f64], d: f64) -> Result<Self, PolyError> {
        let n = a.nrows();
        if b.len() != n || c.len() != n {
            return Err(PolyError::DimensionMismatch);
        }
        Self::new(
            a,
            DMatrix::from_column_slice(n, 1, b),
            DMatrix::from_row_slice(1, n, c),
            DMatrix::from_element(1, 1, d),
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Same dynamics with the inputs combined through `dir` (`B * dir`).
    pub fn with_input_direction(&self, dir: &[f64]) -> Result<Self, PolyError> {
        if dir.len() != self.inputs() {
            return Err(PolyError::DimensionMismatch);
        }
        let v = nalgebra::DVector::from_column_slice(dir);
        let b = &self.b * &v;
        let d = &self.d * &v;
        Self::new(
            self.a.clone(),
            DMatrix::from_column_slice(b.len(), 1, b.as_slice()),
            self.c.clone(),
            DMatrix::from_column_slice(d.len(), 1, d.as_slice()),
        )
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<Complex64> {
        eigenvalues(&self.a)
    }

    /// `C (sI - A)^{-1} B + D` at one complex frequency by direct solve.
    pub fn frequency_response(&self, s: Complex64) -> Result<DMatrix<Complex64>, PolyError> {
        let n = self.states();
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - Complex64::new(self.a[(i, j)], 0.0)
        });
        let b = self.b.map(|x| Complex64::new(x, 0.0));
        let x = m.lu().solve(&b).ok_or(PolyError::PoleHit { re: s.re, im: s.im })?;
        let c = self.c.map(|x| Complex64::new(x, 0.0));
        let d = self.d.map(|x| Complex64::new(x, 0.0));
        Ok(c * x + d)
    }
}

/// Transfer matrix with the common denominator `det(sI - A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub den: Polynomial,
    /// `nums[i][j]` is the numerator from input `j` to output `i`.
    pub nums: Vec<Vec<Polynomial>>,
}

impl TransferMatrix {
    pub fn entry(&self, output: usize, input: usize) -> RationalFn {
        RationalFn::new(self.nums[output][input].clone(), self.den.clone())
            .expect("characteristic polynomial is monic")
    }
}

/// Exact rational transfer matrix of a state-space model.
///
/// Runs the Faddeev–LeVerrier resolvent recursion on `A / rho`, where `rho`
/// is a power of two near the RMS magnitude of `A`, and maps the
/// coefficients back to `s`. The denominator is the monic characteristic
/// polynomial `det(sI - A)`.
pub fn ss_to_rational(m: &StateSpaceModel) -> Result<TransferMatrix, PolyError> {
    let n = m.states();
    let (p, q) = (m.outputs(), m.inputs());
    if n == 0 {
        let nums = (0..p)
            .map(|i| (0..q).map(|j| Polynomial::constant(m.d[(i, j)])).collect())
            .collect();
        return Ok(TransferMatrix {
            den: Polynomial::one(),
            nums,
        });
    }
    let rho = matrix_scale(&m.a);
    let a = &m.a / rho;

    // det(zI - a) = sum_k c[k] z^k, adj(zI - a) = sum_{k=1..n} M_k z^{n-k}.
    let mut c = alloc::vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    // cmk[k-1] holds C M_k B.
    let mut cmk: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for k in 1..=n {
        mk = &a * &mk;
        for i in 0..n {
            mk[(i, i)] += c[n - k + 1];
        }
        cmk.push(&m.c * &mk * &m.b);
        let am = &a * &mk;
        c[n - k] = -am.trace() / k as f64;
    }

    // Unscale: den(s) = rho^n det(s/rho I - a) => coefficient of s^j is c[j] rho^(n-j).
    // G(s) = (1/rho) adj(z I - a)/det(z I - a) with z = s/rho; multiplying through by
    // rho^n leaves numerator coefficient of s^(n-k) equal to (C M_k B) rho^(k-1).
    let pow = |e: i32| rho.powi(e);
    let den = Polynomial::from_vec_unchecked((0..=n).map(|j| c[j] * pow((n - j) as i32)).collect());
    let mut nums = Vec::with_capacity(p);
    for i in 0..p {
        let mut row = Vec::with_capacity(q);
        for j in 0..q {
            let mut coeffs = alloc::vec![0.0; n + 1];
            for k in 1..=n {
                coeffs[n - k] += cmk[k - 1][(i, j)] * pow(k as i32 - 1);
            }
            let dij = m.d[(i, j)];
            if dij != 0.0 {
                for (cj, dj) in coeffs.iter_mut().zip(den.coeffs()) {
                    *cj += dij * dj;
                }
            }
            row.push(Polynomial::from_vec_unchecked(coeffs));
        }
        nums.push(row);
    }
    Ok(TransferMatrix { den, nums })
}

/// SISO shortcut: `c (sI - A)^{-1} b + d`.
pub fn siso_rational(a: &DMatrix<f64>, b: &[f64], c: &[f64], d: f64) -> Result<RationalFn, PolyError> {
    let m = StateSpaceModel::siso(a.clone(), b, c, d)?;
    Ok(ss_to_rational(&m)?.entry(0, 0))
}

fn matrix_scale(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows() as f64;
    let rms = a.norm() / n.sqrt();
    if !(rms > 0.0) || !rms.is_finite() {
        return 1.0;
    }
    2f64.powi((rms.log2()).round() as i32)
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let rho = matrix_scale(a);
    let scaled = a / rho;
    scaled
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re * rho, z.im * rho))
        .collect()
}
