//! Uniallpass certification.
//!
//! A system matrix `S = [[A, B], [C, D]]` is uniallpass (allpass for every
//! choice of delays) when some positive diagonal `Dsim` satisfies
//! `S diag(Dsim, I) S^T = diag(Dsim, I)`. This module recovers such a `Dsim`
//! (Lyapunov or Hadamard-quotient route), checks the sufficient condition,
//! checks the principal-minor necessary condition, and produces the balanced
//! (orthogonal) realization.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Block, FdnError, Result};
use crate::gcp::ordered_subsets;
use crate::linalg::{self, principal_submatrix};
use crate::system::{FdnSystem, SystemMatrix};

/// Off-diagonal Frobenius mass allowed relative to the diagonal mass.
pub const DIAGONALITY_TOL: f64 = 1e-8;
/// Largest FDN size for which all `2^N` principal minors are enumerated.
pub const MAX_SUBSET_DIM: usize = 20;

/// Diagonal of the similarity `Dsim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalSimilarity(pub Vec<f64>);

impl DiagonalSimilarity {
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&x| x > 0.0)
    }

    /// Entrywise square root, the balancing factor `T` with `T T^T = Dsim`.
    pub fn sqrt(&self) -> Result<Self> {
        if !self.is_positive() {
            return Err(FdnError::Domain(
                "Dsim must be positive to take its square root".into(),
            ));
        }
        Ok(Self(self.0.iter().map(|x| x.sqrt()).collect()))
    }

    /// Rescaled so that the first entry is one.
    pub fn normalized(&self) -> Self {
        let s = self.0[0];
        Self(self.0.iter().map(|x| x / s).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniallpassCertificate {
    pub dsim: DiagonalSimilarity,
    pub residual: f64,
    pub tol: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone)]
pub struct SchurPair {
    /// `S_D = A - B D^-1 C`
    pub s_d: DMatrix<f64>,
    /// `S_A = D - C A^-1 B`
    pub s_a: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem4Report {
    pub verdict: bool,
    /// Sign factor `a` with `det S_D(I) = a det A^-1(I)`.
    pub sign: i8,
    /// Subset (zero-based) with the largest mismatch for the chosen sign.
    pub worst_subset: Vec<usize>,
    pub max_deviation: f64,
    /// For MIMO systems the principal-minor identity is only necessary.
    pub necessary_only: bool,
}

/// `S_D = A - B D^-1 C`.
pub fn schur_of_direct(fdn: &FdnSystem) -> Result<DMatrix<f64>> {
    let d_inv = linalg::inverse(&fdn.d, "D").map_err(|_| FdnError::SingularBlock(Block::Direct))?;
    Ok(&fdn.a - &fdn.b * d_inv * &fdn.c)
}

/// `S_A = D - C A^-1 B`.
pub fn schur_of_feedback(fdn: &FdnSystem) -> Result<DMatrix<f64>> {
    let a_inv =
        linalg::inverse(&fdn.a, "A").map_err(|_| FdnError::SingularBlock(Block::Feedback))?;
    Ok(&fdn.d - &fdn.c * a_inv * &fdn.b)
}

pub fn schur_complements(fdn: &FdnSystem) -> Result<SchurPair> {
    Ok(SchurPair {
        s_d: schur_of_direct(fdn)?,
        s_a: schur_of_feedback(fdn)?,
    })
}

/// `A -> T^-1 A T`, `B -> T^-1 B`, `C -> C T`; the transfer function is unchanged.
pub fn apply_diagonal_similarity(fdn: &FdnSystem, t: &DiagonalSimilarity) -> Result<FdnSystem> {
    let n = fdn.n();
    if t.len() != n {
        return Err(FdnError::Dimension(format!(
            "T has {} entries for {n} delay lines",
            t.len()
        )));
    }
    if let Some(i) = t.0.iter().position(|&x| x == 0.0 || !x.is_finite()) {
        return Err(FdnError::Domain(format!("T[{i}] is zero")));
    }
    let t = t.as_slice();
    let a = DMatrix::from_fn(n, n, |i, j| fdn.a[(i, j)] * t[j] / t[i]);
    let b = DMatrix::from_fn(n, fdn.p(), |i, j| fdn.b[(i, j)] / t[i]);
    let c = DMatrix::from_fn(fdn.p(), n, |i, j| fdn.c[(i, j)] * t[j]);
    FdnSystem::new(a, b, c, fdn.d.clone(), fdn.delays.clone())
}

/// Solves `X - A X A^T = B B^T` and returns `diag X` when `X` is diagonal and positive.
pub fn dsim_lyapunov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DiagonalSimilarity> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(FdnError::Dimension(
            "A must be square and B must have N rows".into(),
        ));
    }
    let poles = linalg::eigenvalues(a)?;
    let rho = poles.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if rho >= 1.0 {
        return Err(FdnError::Unstable {
            max_modulus: rho,
            poles,
        });
    }
    // column-major vec: vec(A X A^T) = (A kron A) vec(X)
    let system = DMatrix::identity(n * n, n * n) - linalg::kron(a, a);
    let rhs_m = b * b.transpose();
    let rhs = DVector::from_column_slice(rhs_m.as_slice());
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FdnError::Singular("Lyapunov operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    let x = (&x + x.transpose()) * 0.5;

    let mut diag_mass = 0.0;
    let mut off_mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag_mass += x[(i, j)] * x[(i, j)];
            } else {
                off_mass += x[(i, j)] * x[(i, j)];
            }
        }
    }
    if off_mass.sqrt() > DIAGONALITY_TOL * diag_mass.sqrt() {
        return Err(FdnError::NotCertifiable(format!(
            "Lyapunov solution is not diagonal (off-diagonal ratio {:.3e})",
            off_mass.sqrt() / diag_mass.sqrt().max(f64::MIN_POSITIVE)
        )));
    }
    let d: Vec<f64> = (0..n).map(|i| x[(i, i)]).collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(FdnError::NotCertifiable(
            "Lyapunov solution is not positive".into(),
        ));
    }
    Ok(DiagonalSimilarity(d))
}

/// Recovers `Dsim` from the Hadamard quotient `Q = S_D^-1 / A^T`, which equals
/// `Dsim 1 Dsim^-1` for a fully connected uniallpass system. Normalized to `dsim_1 = 1`.
pub fn dsim_hadamard(sys: &SystemMatrix) -> Result<DiagonalSimilarity> {
    let (a, b, c, d) = sys.blocks();
    let n = sys.n;
    let d_inv = linalg::inverse(&d, "D").map_err(|_| FdnError::SingularBlock(Block::Direct))?;
    let s_d = &a - &b * d_inv * &c;
    let s_d_inv = linalg::inverse(&s_d, "S_D")?;

    let scale = linalg::max_abs(&a).max(f64::MIN_POSITIVE);
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let den = a[(j, i)];
            if den.abs() <= 1e-14 * scale {
                return Err(FdnError::NotFullyConnected { row: j, col: i });
            }
            q[(i, j)] = s_d_inv[(i, j)] / den;
        }
    }

    // Q is rank one: Q = u v^T with u ∝ Dsim and v ∝ Dsim^-1.
    let svd = linalg::svd(&q);
    let (k, sigma) =
        svd.singular_values.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
        );
    let u = svd
        .u
        .as_ref()
        .expect("left vectors requested")
        .column(k)
        .into_owned();
    let v = svd
        .v_t
        .as_ref()
        .expect("right vectors requested")
        .row(k)
        .transpose();

    let mut dsim = Vec::with_capacity(n);
    for i in 0..n {
        let ratio = u[i] / v[i];
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(FdnError::NotCertifiable(
                "Hadamard quotient is not diagonally similar to the all-ones matrix".into(),
            ));
        }
        dsim.push(ratio.sqrt());
    }
    let dsim = DiagonalSimilarity(dsim).normalized();

    let misfit = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| {
            acc.max((q[(i, j)] - dsim.0[i] / dsim.0[j]).abs())
        });
    if misfit > 1e-6 * sigma.max(1.0) {
        return Err(FdnError::NotCertifiable(format!(
            "Hadamard quotient is not rank one (misfit {misfit:.3e})"
        )));
    }
    Ok(dsim)
}

/// `max |S diag(Dsim, I) S^T - diag(Dsim, I)|`.
pub fn theorem3_residual(sys: &SystemMatrix, dsim: &DiagonalSimilarity) -> Result<f64> {
    if dsim.len() != sys.n {
        return Err(FdnError::Dimension(format!(
            "Dsim has {} entries for {} delay lines",
            dsim.len(),
            sys.n
        )));
    }
    let mut w = dsim.0.clone();
    w.extend(std::iter::repeat_n(1.0, sys.p()));
    let w = linalg::diag(&w);
    Ok(linalg::max_abs(&(&sys.u * &w * sys.u.transpose() - w)))
}

/// Sufficient uniallpass condition for the given `Dsim`.
pub fn check_theorem3(
    fdn: &FdnSystem,
    dsim: &DiagonalSimilarity,
    tol: f64,
) -> Result<UniallpassCertificate> {
    let residual = theorem3_residual(&fdn.system_matrix(), dsim)?;
    Ok(UniallpassCertificate {
        dsim: dsim.clone(),
        residual,
        tol,
        verdict: residual < tol && dsim.is_positive(),
    })
}

/// Principal-minor test `det S_D(I) = a det A^-1(I)` over all subsets, for the
/// better of `a = +1` and `a = -1`. Deviations are measured relative to
/// `max(1, |det A^-1(I)|)`.
pub fn check_theorem4(fdn: &FdnSystem, tol: f64) -> Result<Theorem4Report> {
    let n = fdn.n();
    if n > MAX_SUBSET_DIM {
        return Err(FdnError::TooLarge(format!(
            "{n} delay lines exceed the {MAX_SUBSET_DIM}-line subset limit"
        )));
    }
    let s_d = schur_of_direct(fdn)?;
    let a_inv =
        linalg::inverse(&fdn.a, "A").map_err(|_| FdnError::SingularBlock(Block::Feedback))?;

    let subsets = ordered_subsets(n);
    let pairs: Vec<(f64, f64)> = subsets
        .iter()
        .map(|s| {
            (
                linalg::det(&principal_submatrix(&s_d, s)),
                linalg::det(&principal_submatrix(&a_inv, s)),
            )
        })
        .collect();

    let worst = |sign: f64| {
        pairs
            .iter()
            .enumerate()
            .map(|(k, (x, y))| (k, (x - sign * y).abs() / y.abs().max(1.0)))
            .fold(
                (0, 0.0f64),
                |acc, (k, e)| if e > acc.1 { (k, e) } else { acc },
            )
    };
    let (plus, minus) = (worst(1.0), worst(-1.0));
    let (sign, (k, dev)) = if plus.1 <= minus.1 {
        (1, plus)
    } else {
        (-1, minus)
    };

    Ok(Theorem4Report {
        verdict: dev < tol,
        sign,
        worst_subset: subsets[k].clone(),
        max_deviation: dev,
        necessary_only: !fdn.is_siso(),
    })
}

/// Equivalent realization with `T = Dsim^(1/2)`, orthogonal when certified.
pub fn balanced_form(fdn: &FdnSystem, dsim: &DiagonalSimilarity) -> Result<FdnSystem> {
    apply_diagonal_similarity(fdn, &dsim.sqrt()?)
}
