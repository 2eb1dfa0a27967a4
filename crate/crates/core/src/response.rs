//! Frequency- and time-domain evaluation of an FDN.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{FdnError, Result};
use crate::linalg::to_complex;
use crate::system::{DelayVector, FdnSystem};

/// Transfer function matrix `H(z)` sampled at a single point.
#[derive(Debug, Clone)]
pub struct TransferSample {
    pub z: Complex64,
    pub h: DMatrix<Complex64>,
}

/// Diagonal delay matrix with entries `z^(-m_i)`.
pub fn delay_matrix(delays: &DelayVector, z: Complex64) -> Result<DMatrix<Complex64>> {
    if z.norm() == 0.0 {
        return Err(FdnError::Domain(
            "delay matrix is undefined at z = 0".into(),
        ));
    }
    let zi = z.inv();
    let entries: Vec<Complex64> = delays
        .as_slice()
        .iter()
        .map(|&m| zi.powu(m as u32))
        .collect();
    Ok(DMatrix::from_diagonal(&DVector::from_vec(entries)))
}

/// `H(z) = C (D_m(z^-1) - A)^-1 B + D`.
pub fn transfer_function(fdn: &FdnSystem, z: Complex64) -> Result<TransferSample> {
    if z.norm() == 0.0 {
        return Err(FdnError::Domain(
            "transfer function is undefined at z = 0".into(),
        ));
    }
    let mut loop_matrix = delay_matrix(&fdn.delays, z.inv())?;
    loop_matrix -= to_complex(&fdn.a);
    let lu = loop_matrix.lu();
    let x = lu
        .solve(&to_complex(&fdn.b))
        .ok_or(FdnError::PoleEvaluation { z })?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(FdnError::PoleEvaluation { z });
    }
    let h = to_complex(&fdn.c) * x + to_complex(&fdn.d);
    Ok(TransferSample { z, h })
}

/// SISO convenience: the scalar `H(z)`.
pub fn transfer_scalar(fdn: &FdnSystem, z: Complex64) -> Result<Complex64> {
    Ok(transfer_function(fdn, z)?.h[(0, 0)])
}

/// Impulse responses of every input/output pair; `result[n][(out, in)]`.
pub fn impulse_response(fdn: &FdnSystem, length: usize) -> Result<Vec<DMatrix<f64>>> {
    if length == 0 {
        return Err(FdnError::Domain(
            "impulse response length must be positive".into(),
        ));
    }
    let n = fdn.n();
    let p = fdn.p();
    let delays = fdn.delays.as_slice();
    let mut out = vec![DMatrix::<f64>::zeros(p, p); length];

    for input in 0..p {
        let mut lines: Vec<Vec<f64>> = delays.iter().map(|&m| vec![0.0; m]).collect();
        let mut heads = vec![0usize; n];
        let mut state = DVector::<f64>::zeros(n);
        for t in 0..length {
            for i in 0..n {
                state[i] = lines[i][heads[i]];
            }
            let mut feed = &fdn.a * &state;
            if t == 0 {
                feed += fdn.b.column(input);
            }
            let mut y = &fdn.c * &state;
            if t == 0 {
                y += fdn.d.column(input);
            }
            for o in 0..p {
                out[t][(o, input)] = y[o];
            }
            for i in 0..n {
                lines[i][heads[i]] = feed[i];
                heads[i] = (heads[i] + 1) % delays[i];
            }
        }
    }
    Ok(out)
}
