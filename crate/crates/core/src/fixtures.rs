//! Published reference values, stored at their printed precision.

/// Feedback matrix of a 3-line FDN that is allpass for some delays only.
pub const COUNTEREXAMPLE_A: [[f64; 3]; 3] = [
    [1.241, 3.833, -6.028],
    [-0.859, -2.276, 3.582],
    [-0.048, -0.180, -0.332],
];
pub const COUNTEREXAMPLE_B: [f64; 3] = [1.833, -0.469, 0.826];
pub const COUNTEREXAMPLE_C: [f64; 3] = [0.430, 0.831, 0.452];
pub const COUNTEREXAMPLE_D: f64 = 0.288;

/// Principal minors of `A^-1`, subsets by cardinality then lexicographically.
pub const COUNTEREXAMPLE_MINORS_A_INV: [f64; 8] =
    [1.00, -4.86, 2.44, -1.63, 1.15, 7.89, -4.30, -3.47];
/// Principal minors of `S_D = A - b d^-1 c`, same ordering.
pub const COUNTEREXAMPLE_MINORS_S_D: [f64; 8] =
    [1.00, -1.49, -0.92, -1.63, 1.15, -8.97, 12.56, -3.47];

/// `(delays, numerator, denominator)`, coefficients ascending in `z^-1`.
pub const COUNTEREXAMPLE_POLYS: [(&[usize], &[f64], &[f64]); 3] = [
    (
        &[1, 1, 1],
        &[0.29, 1.17, 1.37, 1.00],
        &[1.00, 1.37, 1.17, 0.29],
    ),
    (
        &[2, 1, 1],
        &[0.29, 0.74, 4.05, -2.26, 1.00],
        &[1.00, 2.61, 0.16, -0.23, 0.29],
    ),
    (
        &[2, 2, 1],
        &[0.29, 0.47, 0.70, 1.03, 0.33, 1.00],
        &[1.00, 0.33, 1.03, 0.70, 0.47, 0.29],
    ),
];

/// Homogeneous-decay design example.
pub const HOMOGENEOUS_DELAYS: [usize; 6] = [13, 22, 1, 10, 5, 3];
pub const HOMOGENEOUS_GAMMA: f64 = 0.99;
pub const HOMOGENEOUS_GAINS: [f64; 6] = [0.878, 0.802, 0.990, 0.904, 0.951, 0.970];
pub const HOMOGENEOUS_DSIM: [f64; 6] = [1.000, 1.808, 2.096, 2.743, 3.413, 3.662];
pub const HOMOGENEOUS_U: [[f64; 6]; 6] = [
    [0.702, -0.708, -0.034, -0.059, -0.027, -0.006],
    [0.474, 0.540, -0.448, -0.515, -0.132, -0.026],
    [0.120, 0.120, 0.853, -0.491, -0.055, -0.010],
    [0.327, 0.289, 0.210, 0.589, -0.642, -0.078],
    [0.136, 0.114, 0.059, 0.141, 0.378, -0.896],
    [0.378, 0.310, 0.152, 0.352, 0.651, 0.437],
];
#[allow(clippy::approx_constant)]
pub const HOMOGENEOUS_A: [[f64; 6]; 6] = [
    [0.616, -0.568, -0.034, -0.054, -0.025, -0.005],
    [0.416, 0.433, -0.443, -0.466, -0.125, -0.025],
    [0.105, 0.097, 0.844, -0.444, -0.052, -0.010],
    [0.287, 0.232, 0.208, 0.533, -0.611, -0.076],
    [0.120, 0.091, 0.059, 0.127, 0.360, -0.869],
    [0.332, 0.249, 0.151, 0.318, 0.619, 0.424],
];
pub const HOMOGENEOUS_B: [f64; 6] = [0.159, 0.483, 0.156, 0.633, 0.354, 1.073];
pub const HOMOGENEOUS_C: [f64; 6] = [-0.675, -0.290, -0.064, -0.109, -0.062, -0.014];
pub const HOMOGENEOUS_D: f64 = 0.581;

/// Gains of the six-stage series, nested and homogeneous figures.
pub const REFERENCE_GAINS: [f64; 6] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
pub const POLETTI_LOOP_GAIN: f64 = 0.7;

/// Published similarity for the nested design, `-1 / prod_{k >= i} (1 - g_k^2)`.
/// Negative, so it cannot satisfy the positive-definite condition as printed.
pub fn gardner_printed_dsim(g: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|i| -1.0 / g[i..].iter().map(|x| 1.0 - x * x).product::<f64>())
        .collect()
}

/// Published scalar similarity for the unitary reverberator, `(1 + g) / sqrt(1 - g^2)`.
pub fn poletti_printed_dsim(g: f64) -> f64 {
    (1.0 + g) / (1.0 - g * g).sqrt()
}

pub fn matrix<const R: usize, const C: usize>(rows: &[[f64; C]; R]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(R, C, |i, j| rows[i][j])
}
