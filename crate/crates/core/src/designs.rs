//! Closed-form uniallpass structures: Schroeder series, Gardner nested and
//! Poletti's unitary reverberator, plus a system that is allpass only for
//! some delays.

use nalgebra::DMatrix;

use crate::error::{FdnError, Result};
use crate::fixtures;
use crate::linalg::max_abs;
use crate::system::{DelayVector, FdnSystem};
use crate::verify::{dsim_lyapunov, DiagonalSimilarity};

/// Feedforward/feedback gains, each strictly inside `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.is_empty() {
            return Err(FdnError::Dimension("at least one gain is required".into()));
        }
        if let Some(i) = g.iter().position(|x| !(x.abs() < 1.0)) {
            return Err(FdnError::Domain(format!(
                "|g[{i}]| = {} is not below one",
                g[i].abs()
            )));
        }
        Ok(Self(g))
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
}

fn check_len(g: &GainVector, delays: &DelayVector) -> Result<()> {
    if g.len() != delays.len() {
        return Err(FdnError::Dimension(format!(
            "{} gains for {} delay lines",
            g.len(),
            delays.len()
        )));
    }
    Ok(())
}

/// Cascade of `(g_i + z^-m_i) / (1 + g_i z^-m_i)`; `Dsim_i = 1 / (1 - g_i^2)`.
pub fn schroeder_series(
    g: &GainVector,
    delays: DelayVector,
) -> Result<(FdnSystem, DiagonalSimilarity)> {
    check_len(g, &delays)?;
    let g = g.as_slice();
    let n = g.len();
    let prod = |range: std::ops::Range<usize>| -> f64 { g[range].iter().product() };
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -g[i]
        } else if i > j {
            (1.0 - g[j] * g[j]) * prod(j + 1..i)
        } else {
            0.0
        }
    });
    let b: Vec<f64> = (0..n).map(|i| prod(0..i)).collect();
    let c: Vec<f64> = (0..n)
        .map(|i| (1.0 - g[i] * g[i]) * prod(i + 1..n))
        .collect();
    let fdn = FdnSystem::siso(a, &b, &c, prod(0..n), delays)?;
    let dsim = DiagonalSimilarity(g.iter().map(|x| 1.0 / (1.0 - x * x)).collect());
    Ok((fdn, dsim))
}

/// Nested allpasses with the first delay line innermost:
/// `H_k = (g_k + z^-m_k H_{k-1}) / (1 + g_k z^-m_k H_{k-1})`.
/// The similarity is recovered from the Lyapunov equation.
pub fn gardner_nested(
    g: &GainVector,
    delays: DelayVector,
) -> Result<(FdnSystem, DiagonalSimilarity)> {
    check_len(g, &delays)?;
    let g = g.as_slice();
    let n = g.len();
    let eps = |j: usize| if j == 0 { 1.0 } else { g[j - 1] };
    let loss =
        |range: std::ops::Range<usize>| -> f64 { g[range].iter().map(|x| 1.0 - x * x).product() };
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -g[i] * eps(i)
        } else if j == i + 1 {
            1.0
        } else if i > j {
            -g[i] * eps(j) * loss(j..i)
        } else {
            0.0
        }
    });
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let c: Vec<f64> = (0..n).map(|i| eps(i) * loss(i..n)).collect();
    let fdn = FdnSystem::siso(a, &b, &c, g[n - 1], delays)?;
    let dsim = dsim_lyapunov(&fdn.a, &fdn.b)?;
    Ok((fdn, dsim))
}

/// `H(z) = (g I + U D_m(z)) (I + g U D_m(z))^-1` as an `N`-channel FDN.
/// Returns the similarity `Dsim = (1 + g) / (1 - g) I`.
pub fn poletti_unitary(
    u: &DMatrix<f64>,
    g: f64,
    delays: DelayVector,
) -> Result<(FdnSystem, DiagonalSimilarity)> {
    let n = u.nrows();
    if !u.is_square() || n != delays.len() {
        return Err(FdnError::Dimension(format!(
            "U must be {0}x{0}",
            delays.len()
        )));
    }
    let defect = max_abs(&(u * u.transpose() - DMatrix::identity(n, n)));
    if defect > 1e-9 {
        return Err(FdnError::Domain(format!(
            "U is not orthogonal (defect {defect:.3e})"
        )));
    }
    if !(g.abs() < 1.0) {
        return Err(FdnError::Domain(format!(
            "|g| = {} is not below one",
            g.abs()
        )));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let fdn = FdnSystem::new(-g * u, (1.0 + g) * &eye, (1.0 - g) * u, g * &eye, delays)?;
    Ok((fdn, DiagonalSimilarity(vec![(1.0 + g) / (1.0 - g); n])))
}

/// A three-line system that is allpass for some delay vectors but not others.
pub fn counterexample(delays: DelayVector) -> Result<FdnSystem> {
    FdnSystem::siso(
        fixtures::matrix(&fixtures::COUNTEREXAMPLE_A),
        &fixtures::COUNTEREXAMPLE_B,
        &fixtures::COUNTEREXAMPLE_C,
        fixtures::COUNTEREXAMPLE_D,
        delays,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::check_theorem3;

    #[test]
    fn gains_bounded() {
        assert!(GainVector::new(vec![0.5, 1.0]).is_err());
        assert!(GainVector::new(vec![]).is_err());
        assert!(GainVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn single_stage_structures_agree() {
        let g = GainVector::new(vec![0.5]).unwrap();
        let m = DelayVector::new(vec![3]).unwrap();
        let (s, _) = schroeder_series(&g, m.clone()).unwrap();
        let (n, _) = gardner_nested(&g, m).unwrap();
        assert_eq!(s, n);
        assert_eq!(s.a[(0, 0)], -0.5);
        assert_eq!(s.c[(0, 0)], 0.75);
    }

    #[test]
    fn schroeder_two_stage_layout() {
        let g = GainVector::new(vec![0.3, 0.4]).unwrap();
        let (fdn, dsim) = schroeder_series(&g, DelayVector::ones(2)).unwrap();
        assert_eq!(fdn.a[(0, 1)], 0.0);
        assert!((fdn.a[(1, 0)] - 0.91).abs() < 1e-15);
        assert_eq!(fdn.b.as_slice(), &[1.0, 0.3]);
        assert!((fdn.d[(0, 0)] - 0.12).abs() < 1e-15);
        assert!(check_theorem3(&fdn, &dsim, 1e-12).unwrap().verdict);
    }

    #[test]
    fn gardner_dsim_is_positive() {
        let g = GainVector::new(fixtures::REFERENCE_GAINS.to_vec()).unwrap();
        let (_, dsim) = gardner_nested(&g, DelayVector::ones(6)).unwrap();
        let printed = fixtures::gardner_printed_dsim(g.as_slice());
        for (x, y) in dsim.as_slice().iter().zip(&printed) {
            assert!((x + y).abs() < 1e-9 * x.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn poletti_rejects_non_orthogonal() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(poletti_unitary(&u, 0.5, DelayVector::ones(2)).is_err());
    }

    #[test]
    fn poletti_zero_gain_is_pure_delay() {
        let (fdn, _) =
            poletti_unitary(&DMatrix::identity(2, 2), 0.0, DelayVector::ones(2)).unwrap();
        assert_eq!(fdn.a, DMatrix::zeros(2, 2));
        assert_eq!(fdn.d, DMatrix::zeros(2, 2));
    }
}
