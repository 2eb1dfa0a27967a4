//! Principal minors, the generalized characteristic polynomial (GCP), the
//! numerator polynomials of the transfer function, and system poles.
//!
//! Polynomials are stored ascending in powers of `w = z^-1`, so a vector
//! `[p_0, p_1, ..., p_M]` denotes `p_0 + p_1 z^-1 + ... + p_M z^-M`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FdnError, Result};
use crate::linalg::{self, principal_submatrix};
use crate::response::transfer_function;
use crate::system::{DelayVector, FdnSystem};

/// Relative residual above which an evaluation-interpolation fit is rejected.
pub const INTERPOLATION_TOL: f64 = 1e-6;

/// All subsets of `0..n` ordered by cardinality, then lexicographically.
pub fn ordered_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << n);
    for k in 0..=n {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            out.push(comb.clone());
            // advance to the next k-combination in lexicographic order
            let mut i = k;
            while i > 0 && comb[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            comb[i - 1] += 1;
            for j in i..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// Determinant of the principal submatrix on `subset` (zero-based). The empty set gives 1.
pub fn principal_minor(a: &DMatrix<f64>, subset: &[usize]) -> Result<f64> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(FdnError::Dimension(
            "principal minors need a square matrix".into(),
        ));
    }
    let mut idx = subset.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(FdnError::Domain(format!(
            "index {bad} out of range for {n}x{n} matrix"
        )));
    }
    Ok(linalg::det(&principal_submatrix(a, &idx)))
}

/// Every principal minor, in [`ordered_subsets`] order.
pub fn principal_minor_list(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    ordered_subsets(a.nrows())
        .iter()
        .map(|s| principal_minor(a, s))
        .collect()
}

/// Polynomial in `z^-1` with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GcpPolynomial {
    coeffs: Vec<f64>,
}

impl GcpPolynomial {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Coefficients ascending in `z^-1`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `z^k` in `det(diag(z^m) - A)`.
    pub fn c(&self, k: usize) -> f64 {
        self.coeffs[self.degree() - k]
    }

    /// Value at `w = z^-1` (Horner).
    pub fn eval_w(&self, w: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c)
    }

    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        self.eval_w(z.inv())
    }

    /// Coefficients in reversed order, i.e. `z^-M p(z^-1)`.
    pub fn reversed(&self) -> Vec<f64> {
        self.coeffs.iter().rev().copied().collect()
    }
}

/// Generalized characteristic polynomial `det(D_m(z^-1) - A)` scaled by `z^-M`.
///
/// Expanding `det(diag(z^m_i) - A)` multilinearly along the diagonal gives one
/// term per subset `I` of delay lines taken from `diag(z^m)`; the remaining rows
/// and columns `I^c` contribute `det(-A)(I^c) = (-1)^(N-|I|) det A(I^c)`. The term
/// carries `z^k` with `k = sum_{i in I} m_i`, which lands at index `M - k` of the
/// ascending `z^-1` storage. `I = {all}` yields the leading coefficient 1.
pub fn gcp(a: &DMatrix<f64>, delays: &DelayVector) -> Result<GcpPolynomial> {
    let n = delays.len();
    if a.shape() != (n, n) {
        return Err(FdnError::Dimension(format!(
            "A is {}x{} but there are {n} delays",
            a.nrows(),
            a.ncols()
        )));
    }
    if n >= usize::BITS as usize - 1 {
        return Err(FdnError::TooLarge(format!("{n} delay lines")));
    }
    let m = delays.as_slice();
    let order = delays.system_order();
    let mut coeffs = vec![0.0; order + 1];
    for mask in 0u64..(1u64 << n) {
        let mut k = 0;
        let mut complement = Vec::with_capacity(n);
        for (i, &mi) in m.iter().enumerate() {
            if mask & (1 << i) != 0 {
                k += mi;
            } else {
                complement.push(i);
            }
        }
        let sign = if complement.len() % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[order - k] += sign * linalg::det(&principal_submatrix(a, &complement));
    }
    Ok(GcpPolynomial { coeffs })
}

pub fn denominator_poly(fdn: &FdnSystem) -> Result<GcpPolynomial> {
    gcp(&fdn.a, &fdn.delays)
}

/// Numerator polynomials of every transfer-function entry, together with the
/// relative residual of the interpolation fit.
#[derive(Debug, Clone)]
pub struct NumeratorMatrix {
    /// `entries[out][in]`, ascending in `z^-1`.
    pub entries: Vec<Vec<Vec<f64>>>,
    pub residual: f64,
}

impl NumeratorMatrix {
    pub fn siso(&self) -> &[f64] {
        &self.entries[0][0]
    }
}

fn interpolation_nodes(count: usize, offset: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + offset) / count as f64))
        .collect()
}

/// Fits polynomials of the given degree in `w` to matrix-valued samples `f(w)`
/// on the unit circle. Nodes are roots of unity rotated by half a step, so the
/// Vandermonde system is solved exactly by an inverse DFT.
fn interpolate<F>(
    degree: usize,
    rows: usize,
    cols: usize,
    f: F,
) -> Result<(Vec<Vec<Vec<f64>>>, f64)>
where
    F: Fn(Complex64) -> Result<DMatrix<Complex64>>,
{
    let count = degree + 1;
    let nodes = interpolation_nodes(count, 0.5);
    let samples: Vec<DMatrix<Complex64>> = nodes.iter().map(|&w| f(w)).collect::<Result<_>>()?;

    let mut fitted = vec![vec![vec![Complex64::new(0.0, 0.0); count]; cols]; rows];
    for (w, s) in nodes.iter().zip(&samples) {
        let winv = w.inv();
        let mut power = Complex64::new(1.0, 0.0);
        for j in 0..count {
            for r in 0..rows {
                for c in 0..cols {
                    fitted[r][c][j] += s[(r, c)] * power;
                }
            }
            power *= winv;
        }
    }

    let mut scale: f64 = 1.0;
    let mut imag: f64 = 0.0;
    let mut real = vec![vec![vec![0.0; count]; cols]; rows];
    for r in 0..rows {
        for c in 0..cols {
            for j in 0..count {
                let v = fitted[r][c][j] / count as f64;
                real[r][c][j] = v.re;
                scale = scale.max(v.re.abs());
                imag = imag.max(v.im.abs());
            }
        }
    }

    // check against fresh nodes between the interpolation nodes
    let mut misfit: f64 = 0.0;
    for w in interpolation_nodes(count, 0.25) {
        let s = f(w)?;
        for r in 0..rows {
            for c in 0..cols {
                let fit = real[r][c]
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, &x| acc * w + x);
                misfit = misfit.max((fit - s[(r, c)]).norm());
                scale = scale.max(s[(r, c)].norm());
            }
        }
    }
    Ok((real, imag.max(misfit) / scale))
}

/// Numerator polynomial matrix of `H(z) = N(z) / p(z)`, recovered by sampling
/// `H(z) p(z)` on the unit circle and interpolating.
pub fn numerator_poly(fdn: &FdnSystem) -> Result<NumeratorMatrix> {
    let den = denominator_poly(fdn)?;
    let p = fdn.p();
    let (entries, residual) = interpolate(den.degree(), p, p, |w| {
        let h = transfer_function(fdn, w.inv())?.h;
        Ok(h * den.eval_w(w))
    })?;
    if residual > INTERPOLATION_TOL {
        return Err(FdnError::Conditioning { residual });
    }
    Ok(NumeratorMatrix { entries, residual })
}

/// Numerator of `det H(z) = q(z) / p(z)`; `q` has the same degree as the GCP.
pub fn determinant_numerator(fdn: &FdnSystem) -> Result<(Vec<f64>, f64)> {
    let den = denominator_poly(fdn)?;
    let (entries, residual) = interpolate(den.degree(), 1, 1, |w| {
        let h = transfer_function(fdn, w.inv())?.h;
        Ok(DMatrix::from_element(
            1,
            1,
            h.lu().determinant() * den.eval_w(w),
        ))
    })?;
    if residual > INTERPOLATION_TOL {
        return Err(FdnError::Conditioning { residual });
    }
    Ok((entries[0][0].clone(), residual))
}

/// All roots of the GCP, via the balanced companion matrix.
pub fn poles(fdn: &FdnSystem) -> Result<Vec<Complex64>> {
    let den = denominator_poly(fdn)?;
    linalg::roots_of_inverse_poly(den.coeffs())
}

pub fn is_stable(poles: &[Complex64]) -> bool {
    poles.iter().all(|p| p.norm() < 1.0)
}
