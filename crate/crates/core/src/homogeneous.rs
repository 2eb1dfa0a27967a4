//! Homogeneous-decay SISO designs: every pole on the circle of radius `gamma`.
//!
//! The feedback matrix is `A = U Γ` with delay-proportional gains
//! `Γ_ii = gamma^m_i` and an orthogonal `U` built from a Cauchy-like matrix
//! whose nodes `d` (the diagonal similarity) and `dq = Γ² d` interlace.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::complete::{siso_completion_scaled, SisoCompletionTrace};
use crate::error::{FdnError, Result};
use crate::gcp::poles;
use crate::linalg::max_abs;
use crate::system::{DelayVector, FdnSystem};
use crate::verify::DiagonalSimilarity;

pub const DEFAULT_SLACK: f64 = 0.9;
/// Smallest admissible gap `|d_i - dq_j|`.
pub const NODE_GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HomogeneousSpec {
    pub delays: DelayVector,
    pub gamma: f64,
    /// Cauchy nodes; chosen by [`choose_dsim`] when absent.
    pub dsim: Option<Vec<f64>>,
    pub strategy: DsimStrategy,
}

impl HomogeneousSpec {
    pub fn new(delays: DelayVector, gamma: f64) -> Self {
        Self {
            delays,
            gamma,
            dsim: None,
            strategy: DsimStrategy::default(),
        }
    }

    pub fn with_dsim(mut self, dsim: Vec<f64>) -> Self {
        self.dsim = Some(dsim);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DsimStrategy {
    /// `d_i = d_{i-1} / (r Γ_ii²)` with `0 < r < 1`.
    Slack(f64),
}

impl Default for DsimStrategy {
    fn default() -> Self {
        DsimStrategy::Slack(DEFAULT_SLACK)
    }
}

/// Interlacing node sets `d` and `dq = Γ² d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyPair {
    pub d: Vec<f64>,
    pub dq: Vec<f64>,
}

impl CauchyPair {
    pub fn new(d: Vec<f64>, dq: Vec<f64>) -> Result<Self> {
        if d.len() != dq.len() || d.is_empty() {
            return Err(FdnError::Dimension(
                "node vectors must be non-empty and of equal length".into(),
            ));
        }
        if let Some(i) = d
            .iter()
            .chain(&dq)
            .position(|&x| !(x > 0.0 && x.is_finite()))
        {
            return Err(FdnError::Domain(format!("node {i} is not positive")));
        }
        Ok(Self { d, dq })
    }

    pub fn from_gains(gains: &[f64], d: Vec<f64>) -> Result<Self> {
        if gains.len() != d.len() {
            return Err(FdnError::Dimension(format!(
                "{} gains for {} nodes",
                gains.len(),
                d.len()
            )));
        }
        let dq = gains.iter().zip(&d).map(|(g, x)| g * g * x).collect();
        Self::new(d, dq)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(FdnError::Domain(format!(
            "gamma = {gamma} is outside (0, 1)"
        )))
    }
}

/// `Γ_ii = gamma^m_i`.
pub fn decay_gains(delays: &DelayVector, gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    Ok(delays
        .as_slice()
        .iter()
        .map(|&m| gamma.powf(m as f64))
        .collect())
}

/// Nodes satisfying `0 < d_{i-1} / d_i < Γ_ii²`, starting from `d_1 = 1`.
pub fn choose_dsim(gains: &[f64], strategy: DsimStrategy) -> Vec<f64> {
    let DsimStrategy::Slack(r) = strategy;
    let mut d = Vec::with_capacity(gains.len());
    for (i, g) in gains.iter().enumerate() {
        d.push(if i == 0 { 1.0 } else { d[i - 1] / (r * g * g) });
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interleaving {
    pub valid: bool,
    /// Position `k` of the first failure `s_k >= s_{k+1}` in the chain
    /// `s = [dq_1, d_1, dq_2, d_2, ...]` after sorting pairs by `d`.
    pub first_violation: Option<usize>,
}

pub fn validate_interleaving(d: &[f64], dq: &[f64]) -> Interleaving {
    assert_eq!(d.len(), dq.len(), "node vectors must have equal length");
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let chain: Vec<f64> = idx.iter().flat_map(|&i| [dq[i], d[i]]).collect();
    let first_violation = chain.windows(2).position(|w| !(w[0] < w[1]));
    Interleaving {
        valid: first_violation.is_none(),
        first_violation,
    }
}

/// `(log|prod_k (x - nodes_k)|, sign)`, skipping index `skip`.
fn log_product(x: f64, nodes: &[f64], skip: Option<usize>) -> (f64, f64) {
    let mut log = 0.0;
    let mut sign = 1.0;
    for (k, &n) in nodes.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        let t = x - n;
        log += t.abs().ln();
        if t < 0.0 {
            sign = -sign;
        }
    }
    (log, sign)
}

/// Orthogonal matrix `U_ij = sqrt(beta_i alpha_j) / (d_i - dq_j)`.
pub fn cauchy_unitary(pair: &CauchyPair) -> Result<DMatrix<f64>> {
    let (d, dq) = (&pair.d, &pair.dq);
    let n = d.len();
    for i in 0..n {
        for j in 0..n {
            let gap = d[i] - dq[j];
            if gap.abs() < NODE_GAP_TOL {
                return Err(FdnError::NearSingularCauchy {
                    row: i,
                    col: j,
                    gap,
                });
            }
        }
    }
    let inter = validate_interleaving(d, dq);
    if let Some(index) = inter.first_violation {
        return Err(FdnError::InterleavingViolation { index });
    }

    let mut log_alpha = Vec::with_capacity(n);
    let mut log_beta = Vec::with_capacity(n);
    for i in 0..n {
        // alpha_i = -A(dq_i) / B'(dq_i), beta_i = B(d_i) / A'(d_i)
        let (la, sa) = log_product(dq[i], d, None);
        let (lb, sb) = log_product(dq[i], dq, Some(i));
        if -sa * sb <= 0.0 {
            return Err(FdnError::InterleavingViolation { index: 2 * i });
        }
        log_alpha.push(la - lb);
        let (lb, sb) = log_product(d[i], dq, None);
        let (la, sa) = log_product(d[i], d, Some(i));
        if sb * sa <= 0.0 {
            return Err(FdnError::InterleavingViolation { index: 2 * i + 1 });
        }
        log_beta.push(lb - la);
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let gap = d[i] - dq[j];
        gap.signum() * (0.5 * (log_beta[i] + log_alpha[j]) - gap.abs().ln()).exp()
    }))
}

#[derive(Debug, Clone)]
pub struct HomogeneousDesign {
    pub fdn: FdnSystem,
    pub gains: Vec<f64>,
    pub pair: CauchyPair,
    pub u: DMatrix<f64>,
    pub trace: SisoCompletionTrace,
    pub poles: Vec<Complex64>,
    /// `max_i ||pole_i| - gamma|`
    pub pole_radius_error: f64,
}

impl HomogeneousDesign {
    pub fn dsim(&self) -> &DiagonalSimilarity {
        &self.trace.dsim
    }
}

/// `A = U Γ`, then `b`, `c`, `d` from the SISO completion.
pub fn design_homogeneous_siso(spec: &HomogeneousSpec) -> Result<HomogeneousDesign> {
    let gains = decay_gains(&spec.delays, spec.gamma)?;
    let d = match &spec.dsim {
        Some(d) => d.clone(),
        None => choose_dsim(&gains, spec.strategy),
    };
    let pair = CauchyPair::from_gains(&gains, d)?;
    let u = cauchy_unitary(&pair)?;
    let n = u.nrows();
    let defect = max_abs(&(&u * u.transpose() - DMatrix::identity(n, n)));
    if defect > 1e-9 {
        return Err(FdnError::CompletionFailure { residual: defect });
    }

    let a = DMatrix::from_fn(n, n, |i, j| u[(i, j)] * gains[j]);
    // the Cauchy nodes are the similarity of A; their square roots balance it
    let t: Vec<f64> = pair.d.iter().map(|x| x.sqrt()).collect();
    let (sys, trace) = siso_completion_scaled(&a, Some(&t))?;
    let fdn = FdnSystem::from_system_matrix(&sys, spec.delays.clone())?;
    let poles = poles(&fdn)?;
    let pole_radius_error = poles
        .iter()
        .fold(0.0f64, |acc, z| acc.max((z.norm() - spec.gamma).abs()));
    Ok(HomogeneousDesign {
        fdn,
        gains,
        pair,
        u,
        trace,
        poles,
        pole_radius_error,
    })
}
