//! Allpass and stability predicates for a fixed choice of delays.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{FdnError, Result};
use crate::gcp::{denominator_poly, determinant_numerator, is_stable, poles};
use crate::linalg::{self, max_abs_c};
use crate::response::transfer_function;
use crate::system::FdnSystem;

pub const DEFAULT_TOL: f64 = 1e-8;

/// Extra off-grid frequencies checked beyond the uniform grid.
const RANDOM_FREQUENCIES: usize = 8;
const GRID_SEED: u64 = 0x5eed_a110_a55;

#[derive(Debug, Clone, Serialize)]
pub struct AllpassReport {
    /// `max |H H^* - I|` (entrywise) over the frequency grid.
    pub unitary_defect: f64,
    /// Coefficient-reversal defect of `det H`, for the better sign.
    pub reversal_defect: f64,
    /// Sign factor `a` in `det H(z) = a z^-M p(z^-1) / p(z)`.
    pub sign: i8,
    pub grid_points: usize,
    pub max_pole_modulus: f64,
    pub allpass: bool,
}

/// Unit-circle frequencies: `4 M` uniform points plus a few seeded random ones.
pub fn frequency_grid(order: usize) -> Vec<f64> {
    let k = 4 * order.max(1);
    let mut grid: Vec<f64> = (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED);
    grid.extend((0..RANDOM_FREQUENCIES).map(|_| rng.random_range(0.0..2.0 * PI)));
    grid
}

/// Largest entry of `H(e^jw) H(e^jw)^* - I` over the given frequencies.
pub fn unitary_defect(fdn: &FdnSystem, omegas: &[f64]) -> Result<f64> {
    let eye = DMatrix::<Complex64>::identity(fdn.p(), fdn.p());
    let mut worst: f64 = 0.0;
    for &w in omegas {
        let h = transfer_function(fdn, Complex64::from_polar(1.0, w))?.h;
        let g = &h * h.adjoint() - &eye;
        worst = worst.max(max_abs_c(&g));
    }
    Ok(worst)
}

/// Checks whether the FDN with its current delays is allpass: unitary on a
/// frequency grid, and `det H` has reversed numerator coefficients.
pub fn is_allpass(fdn: &FdnSystem, tol: f64) -> Result<AllpassReport> {
    let p = poles(fdn)?;
    let max_pole_modulus = p.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if !is_stable(&p) {
        return Err(FdnError::Unstable {
            max_modulus: max_pole_modulus,
            poles: p,
        });
    }

    let den = denominator_poly(fdn)?;
    let grid = frequency_grid(den.degree());
    let unitary = unitary_defect(fdn, &grid)?;

    let (num, _) = determinant_numerator(fdn)?;
    let reversed = den.reversed();
    let defect = |sign: f64| {
        num.iter()
            .zip(&reversed)
            .fold(0.0f64, |acc, (x, y)| acc.max((x - sign * y).abs()))
    };
    let (plus, minus) = (defect(1.0), defect(-1.0));
    let (sign, reversal) = if plus <= minus {
        (1, plus)
    } else {
        (-1, minus)
    };

    Ok(AllpassReport {
        unitary_defect: unitary,
        reversal_defect: reversal,
        sign,
        grid_points: grid.len(),
        max_pole_modulus,
        allpass: unitary < tol && reversal < tol,
    })
}

/// Sufficient stability test: `|| T^-1 A T ||_2 < 1` for a positive diagonal `T`.
pub fn stability_certificate(a: &DMatrix<f64>, t: &[f64]) -> Result<bool> {
    if a.nrows() != t.len() || !a.is_square() {
        return Err(FdnError::Dimension("T must match the size of A".into()));
    }
    if let Some(i) = t.iter().position(|&x| !(x > 0.0)) {
        return Err(FdnError::Domain(format!("T[{i}] is not positive")));
    }
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * t[j] / t[i]);
    Ok(linalg::spectral_norm(&scaled) < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::DelayVector;

    #[test]
    fn scaled_identity_is_certified() {
        let a = DMatrix::identity(3, 3) * 0.5;
        assert!(stability_certificate(&a, &[1.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn expansive_matrix_never_certified() {
        let a = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, 0.0, 0.4]);
        for t in [[1.0, 1.0], [1.0, 10.0], [0.01, 1.0]] {
            assert!(!stability_certificate(&a, &t).unwrap());
        }
    }

    #[test]
    fn nonpositive_scaling_rejected() {
        let a = DMatrix::identity(2, 2) * 0.5;
        assert!(stability_certificate(&a, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn schroeder_section_is_allpass() {
        let g = 0.5;
        let fdn = FdnSystem::siso(
            DMatrix::from_element(1, 1, -g),
            &[1.0],
            &[1.0 - g * g],
            g,
            DelayVector::new(vec![3]).unwrap(),
        )
        .unwrap();
        let r = is_allpass(&fdn, DEFAULT_TOL).unwrap();
        assert!(r.allpass, "{r:?}");
        assert_eq!(r.grid_points, 12 + RANDOM_FREQUENCIES);
    }

    #[test]
    fn comb_filter_is_not_allpass() {
        let fdn = FdnSystem::siso(
            DMatrix::from_element(1, 1, 0.5),
            &[1.0],
            &[1.0],
            0.0,
            DelayVector::new(vec![2]).unwrap(),
        )
        .unwrap();
        let r = is_allpass(&fdn, DEFAULT_TOL).unwrap();
        assert!(!r.allpass);
    }

    #[test]
    fn unstable_system_rejected() {
        let fdn = FdnSystem::siso(
            DMatrix::from_element(1, 1, 1.5),
            &[1.0],
            &[1.0],
            0.0,
            DelayVector::ones(1),
        )
        .unwrap();
        assert!(matches!(
            is_allpass(&fdn, DEFAULT_TOL),
            Err(FdnError::Unstable { .. })
        ));
    }
}
