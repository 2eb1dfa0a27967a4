//! Small dense linear-algebra helpers shared by the FDN modules.

use nalgebra::{DMatrix, DVector, Dyn, Schur, SVD};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{FdnError, Result};

/// Reciprocal condition below which a matrix is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-13;

/// Determinant; the empty matrix has determinant one.
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

/// Principal submatrix on the given (sorted) index set.
pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

const SVD_RESTARTS: usize = 6;

/// Full SVD whose recomposition is checked. The bidiagonal QR occasionally
/// settles on a wrong factorisation; the input is then reflected from the
/// left and the reflection folded back into `U`.
pub fn svd(m: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * (m.nrows().max(m.ncols()) as f64);
    let mut best: Option<(f64, SVD<f64, Dyn, Dyn>)> = None;
    for attempt in 0..=SVD_RESTARTS {
        let q = (attempt > 0).then(|| householder(m.nrows(), attempt - 1));
        let work = q.as_ref().map_or_else(|| m.clone(), |q| q * m);
        let mut f = work.svd(true, true);
        if let Some(q) = &q {
            f.u = f.u.map(|u| q * u);
        }
        let err = f
            .clone()
            .recompose()
            .map_or(f64::INFINITY, |r| max_abs(&(r - m)));
        if err <= tol {
            return f;
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, f));
        }
    }
    best.expect("at least one attempt").1
}

/// Moore-Penrose pseudo-inverse from the checked SVD.
pub fn pseudo_inverse(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let f = svd(m);
    let (u, vt) = (f.u.expect("left vectors"), f.v_t.expect("right vectors"));
    let cut = rank_tol * f.singular_values.max().max(0.0);
    let inv = DVector::from_iterator(
        f.singular_values.len(),
        f.singular_values
            .iter()
            .map(|&s| if s > cut && s > 0.0 { 1.0 / s } else { 0.0 }),
    );
    vt.transpose() * DMatrix::from_diagonal(&inv) * u.transpose()
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = svd(m).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn is_singular(m: &DMatrix<f64>) -> bool {
    m.nrows() > 0 && reciprocal_condition(m) < SINGULAR_RCOND
}

/// Inverse with an explicit conditioning guard; `what` names the matrix in the error.
pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if is_singular(m) {
        return Err(FdnError::Singular(what.to_string()));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| FdnError::Singular(what.to_string()))
}

const SCHUR_SWEEPS: usize = 500;
const SCHUR_RESTARTS: u64 = 8;

/// Eigenvalues by real Schur decomposition with a bounded iteration count.
/// The shifted QR can cycle on companion-like matrices, so on failure the
/// balanced matrix is rotated by seeded orthogonal similarities and retried.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = |w: DMatrix<f64>| Schur::try_new(w, f64::EPSILON, SCHUR_SWEEPS * n);
    if let Some(s) = schur(m.clone()) {
        return Ok(s.complex_eigenvalues().iter().copied().collect());
    }
    let mut balanced = m.clone();
    balance(&mut balanced);
    for attempt in 0..=SCHUR_RESTARTS {
        let work = if attempt == 0 {
            balanced.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(attempt);
            let q = haar_orthogonal(DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal)));
            q.transpose() * &balanced * q
        };
        if let Some(s) = schur(work) {
            return Ok(s.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(FdnError::NoConvergence(n))
}

// reflector I - 2vv^T/v^Tv for a deterministic dense v
fn householder(n: usize, attempt: usize) -> DMatrix<f64> {
    let v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7 + attempt * 3) % 5) as f64 * 0.25);
    DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().fold(0.0, |acc, z| acc.max(z.norm())))
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Parlett-Reinsch diagonal balancing (radix 2), in place. Returns `t`
/// with the balanced matrix equal to `T^-1 M T`, `T = diag(t)`.
pub fn balance(m: &mut DMatrix<f64>) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut t = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
                t[i] *= f;
            }
        }
    }
    t
}

/// Roots of `w^0 c_0 + w^1 c_1 + ... + w^n c_n` read as a polynomial in `z = 1/w`,
/// i.e. of `c_0 z^n + c_1 z^(n-1) + ... + c_n`, via the balanced companion matrix.
pub fn roots_of_inverse_poly(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let lead = *coeffs.first().ok_or(FdnError::DegeneratePolynomial)?;
    if lead == 0.0 || !lead.is_finite() {
        return Err(FdnError::DegeneratePolynomial);
    }
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    balance(&mut comp);
    eigenvalues(&comp)
}

/// Orthogonal matrix drawn from the Haar measure given a Gaussian sample matrix.
pub fn haar_orthogonal(gaussian: DMatrix<f64>) -> DMatrix<f64> {
    let qr = gaussian.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

pub fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}
