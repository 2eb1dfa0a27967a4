//! Completion: given a feedback matrix `A`, find `B`, `C`, `D` and `Dsim`
//! such that the resulting FDN is uniallpass.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{FdnError, Result};
use crate::linalg::{self, max_abs};
use crate::system::SystemMatrix;
use crate::verify::{theorem3_residual, DiagonalSimilarity};

/// Eigenvalues of `I - A A^T` below this are treated as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Orthogonality required of an assembled system matrix.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Relative residual accepted when checking a value against its quadratic.
pub const ROOT_TOL: f64 = 1e-6;
/// Certification residual for a SISO completion, relative to `max(1, max Dsim)`.
pub const CERTIFY_TOL: f64 = 1e-8;

const SEARCH_BUDGET: usize = 1 << 20;
const REBALANCE_PASSES: usize = 3;
const CANDIDATE_LIMIT: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Singular values strictly below one.
    pub k: usize,
    /// Singular values equal to one within tolerance.
    pub ones: usize,
    /// The only `P` for which an orthogonal embedding exists, if any.
    pub admissible_for_p: Option<usize>,
    pub p: usize,
    pub admissible: bool,
}

/// Whether `A` is the leading block of some orthogonal `(N+P) x (N+P)` matrix.
pub fn admissibility(a: &DMatrix<f64>, p: usize, tol: f64) -> AdmissibilityReport {
    let n = a.nrows();
    let singular_values = linalg::singular_values(a);
    let k = singular_values.iter().filter(|&&s| s < 1.0 - tol).count();
    let ones = singular_values
        .iter()
        .filter(|&&s| (s - 1.0).abs() <= tol)
        .count();
    let admissible_for_p = (k + ones == n && ones < n).then_some(n - ones);
    AdmissibilityReport {
        singular_values,
        k,
        ones,
        admissible_for_p,
        p,
        admissible: p >= 1 && p <= n && admissible_for_p == Some(p),
    }
}

/// Factor `F` (N x P) with `F F^T = M` for a PSD matrix of rank `P`.
fn low_rank_factor(m: DMatrix<f64>, p: usize, what: &str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let rank = idx
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > RANK_TOL)
        .count();
    if rank != p {
        return Err(FdnError::NotAdmissible(format!(
            "{what} has rank {rank}, expected {p}"
        )));
    }
    Ok(DMatrix::from_fn(n, p, |r, c| {
        let i = idx[c];
        eig.eigenvectors[(r, i)] * eig.eigenvalues[i].sqrt()
    }))
}

/// Embeds an admissible `A` into an orthogonal system matrix; `Dsim = I`.
pub fn orthogonal_completion(
    a: &DMatrix<f64>,
    p: usize,
) -> Result<(SystemMatrix, DiagonalSimilarity)> {
    let n = a.nrows();
    if !a.is_square() || n == 0 {
        return Err(FdnError::Dimension("A must be square and non-empty".into()));
    }
    let report = admissibility(a, p, 1e-9);
    if !report.admissible {
        return Err(FdnError::NotAdmissible(format!(
            "{} unit and {} contractive singular values, P = {p}",
            report.ones, report.k
        )));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let b = low_rank_factor(&eye - a * a.transpose(), p, "I - A A^T")?;
    let ct = low_rank_factor(&eye - a.transpose() * a, p, "I - A^T A")?;
    let b_pinv = linalg::pseudo_inverse(&b, RANK_TOL);
    let dt = -(b_pinv * a * &ct);
    let sys = SystemMatrix::from_blocks(a, &b, &ct.transpose(), &dt.transpose());

    let m = sys.u.nrows();
    let residual = max_abs(&(&sys.u * sys.u.transpose() - DMatrix::identity(m, m)));
    if residual > ORTHOGONALITY_TOL {
        return Err(FdnError::CompletionFailure { residual });
    }
    Ok((sys, DiagonalSimilarity::ones(n)))
}

/// `a2 x^2 + a1 x + a0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadratic {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl Quadratic {
    fn scale(&self) -> f64 {
        self.a2.abs().max(self.a1.abs()).max(self.a0.abs())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.a2 * x + self.a1) * x + self.a0
    }

    /// Residual relative to the size of the terms; zero for the null quadratic.
    pub fn residual(&self, x: f64) -> f64 {
        let size = self.a2.abs() * x * x + self.a1.abs() * x.abs() + self.a0.abs();
        if size == 0.0 {
            0.0
        } else {
            self.eval(x).abs() / size
        }
    }

    /// Real roots; `None` when every coefficient vanishes. Slightly negative
    /// discriminants are clamped to a double root.
    pub fn roots(&self, tol: f64) -> Option<Vec<f64>> {
        let s = self.scale();
        if s == 0.0 {
            return None;
        }
        let (a2, a1, a0) = (self.a2 / s, self.a1 / s, self.a0 / s);
        if a2.abs() <= 1e-12 {
            if a1.abs() <= 1e-12 {
                return Some(Vec::new());
            }
            return Some(vec![-a0 / a1]);
        }
        let mut disc = a1 * a1 - 4.0 * a2 * a0;
        if disc < 0.0 {
            if disc < -tol * (a1 * a1 + (4.0 * a2 * a0).abs()) {
                return Some(Vec::new());
            }
            disc = 0.0;
        }
        let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
        if q == 0.0 {
            return Some(vec![0.0]);
        }
        let r1 = q / a2;
        let r2 = a0 / q;
        Some(if (r1 - r2).abs() <= 1e-12 * r1.abs().max(r2.abs()) {
            vec![r1]
        } else {
            vec![r1, r2]
        })
    }
}

fn push_unique(v: &mut Vec<(f64, f64)>, cand: (f64, f64)) {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300);
    if cand.0.is_finite()
        && cand.1.is_finite()
        && !v.iter().any(|c| close(c.0, cand.0) && close(c.1, cand.1))
    {
        v.push(cand);
    }
}

struct Search<'a> {
    q: &'a [Vec<Quadratic>],
    tol: f64,
    pivot: usize,
    order: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
    budget: usize,
    found: Vec<DMatrix<f64>>,
    limit: usize,
}

impl Search<'_> {
    /// Candidate factors `(u_i, v_i)` for row/column `i` with `u_p = 1`, `v_p = x_pp`.
    fn candidates(&self, i: usize, depth: usize) -> Vec<(f64, f64)> {
        let p = self.pivot;
        let xpp = self.v[p];
        let tiny = 1e-14 * xpp.abs();
        let xii = self.q[i][i].roots(self.tol).unwrap_or_default();
        let mut out = Vec::new();
        let from_root_ip = |out: &mut Vec<(f64, f64)>, r: f64| {
            let u = r / xpp;
            if u.abs() > tiny {
                for &x in &xii {
                    push_unique(out, (u, x / u));
                }
            } else if let Some(rs) = self.q[p][i].roots(self.tol) {
                for s in rs {
                    push_unique(out, (0.0, s));
                }
            }
        };
        if let Some(rs) = self.q[i][p].roots(self.tol) {
            for r in rs {
                from_root_ip(&mut out, r);
            }
        }
        if let Some(rs) = self.q[p][i].roots(self.tol) {
            for s in rs {
                if s.abs() > tiny {
                    for &x in &xii {
                        push_unique(&mut out, (x / s, s));
                    }
                }
            }
        }
        if out.is_empty() {
            for &j in &self.order[..depth] {
                if self.v[j] != 0.0 {
                    for r in self.q[i][j].roots(self.tol).unwrap_or_default() {
                        from_root_ip(&mut out, r / self.v[j] * xpp);
                    }
                }
            }
        }
        out
    }

    fn consistent(&self, i: usize, depth: usize) -> bool {
        let p = self.pivot;
        let (ui, vi) = (self.u[i], self.v[i]);
        let ok = |r: usize, c: usize, x: f64| self.q[r][c].residual(x) <= self.tol;
        if !(ok(i, p, ui * self.v[p]) && ok(p, i, vi) && ok(i, i, ui * vi)) {
            return false;
        }
        self.order[..depth]
            .iter()
            .all(|&j| ok(i, j, ui * self.v[j]) && ok(j, i, self.u[j] * vi))
    }

    /// Returns `true` once enough solutions have been collected.
    fn dfs(&mut self, depth: usize) -> Result<bool> {
        if depth == self.order.len() {
            let n = self.u.len();
            let x = DMatrix::from_fn(n, n, |i, j| self.u[i] * self.v[j]);
            if !self
                .found
                .iter()
                .any(|y| (y - &x).abs().max() <= 1e-9 * x.abs().max())
            {
                self.found.push(x);
            }
            return Ok(self.found.len() >= self.limit);
        }
        let i = self.order[depth];
        for (u, v) in self.candidates(i, depth) {
            if self.budget == 0 {
                return Err(FdnError::NoRank1Solution);
            }
            self.budget -= 1;
            self.u[i] = u;
            self.v[i] = v;
            if self.consistent(i, depth) && self.dfs(depth + 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Picks one root per entry so that the solution matrix has rank one.
///
/// Every off-pivot row and column is parametrized through the pivot entry,
/// and candidates are searched depth-first with each newly implied entry
/// checked against its own quadratic.
pub fn select_rank1_roots(quadratics: &[Vec<Quadratic>], tol: f64) -> Result<DMatrix<f64>> {
    Ok(rank1_solutions(quadratics, tol, 1)?.remove(0))
}

/// Up to `limit` distinct rank-one root assignments, in search order. When
/// some quadratics have a near-zero root several assignments pass the
/// consistency check, and only the completed system tells them apart.
pub fn rank1_solutions(
    quadratics: &[Vec<Quadratic>],
    tol: f64,
    limit: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let n = quadratics.len();
    if n == 0 || quadratics.iter().any(|row| row.len() != n) {
        return Err(FdnError::Dimension(
            "quadratics must form a square array".into(),
        ));
    }
    let mut pivots: Vec<(usize, f64)> = Vec::new();
    for p in 0..n {
        for r in quadratics[p][p].roots(tol).unwrap_or_default() {
            pivots.push((p, r));
        }
    }
    pivots.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    let floor = pivots.first().map_or(0.0, |x| x.1.abs()) * 1e-8;

    let mut tried = false;
    let mut found = Vec::new();
    for (p, xpp) in pivots {
        if xpp.abs() <= floor || xpp == 0.0 {
            continue;
        }
        tried = true;
        let mut s = Search {
            q: quadratics,
            tol,
            pivot: p,
            order: (0..n).filter(|&i| i != p).collect(),
            u: vec![0.0; n],
            v: vec![0.0; n],
            budget: SEARCH_BUDGET,
            found,
            limit,
        };
        s.u[p] = 1.0;
        s.v[p] = xpp;
        let done = s.dfs(0);
        found = s.found;
        match done {
            Ok(true) => break,
            Ok(false) => {}
            Err(e) if found.is_empty() => return Err(e),
            Err(_) => break,
        }
    }
    if !found.is_empty() {
        Ok(found)
    } else if tried {
        Err(FdnError::NoRank1Solution)
    } else {
        Err(FdnError::PivotDegenerate)
    }
}

/// Intermediate quantities of a SISO completion.
#[derive(Debug, Clone, Serialize)]
pub struct SisoCompletionTrace {
    pub d: f64,
    /// `A_ii - (A^-1)_ii`
    pub a_vec: Vec<f64>,
    pub r: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub dsim: DiagonalSimilarity,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub residual: f64,
}

/// The per-entry quadratics for a chosen direct gain `d`.
fn completion_quadratics(
    a: &DMatrix<f64>,
    a_inv: &DMatrix<f64>,
    d: f64,
) -> (Vec<f64>, DMatrix<f64>, Vec<Vec<Quadratic>>) {
    let n = a.nrows();
    let abar: Vec<f64> = (0..n).map(|i| a[(i, i)] - a_inv[(i, i)]).collect();
    let r = DMatrix::from_fn(n, n, |i, j| {
        d * (a[(i, j)] * a[(j, i)] - a_inv[(i, j)] * a_inv[(j, i)] - abar[i] * abar[j])
    });
    let q = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Quadratic {
                    a2: a_inv[(i, j)],
                    a1: -r[(i, j)],
                    a0: a_inv[(j, i)] * d * d * abar[i] * abar[j],
                })
                .collect()
        })
        .collect();
    (abar, r, q)
}

/// Completes with each rank-one root assignment in turn and keeps the first
/// that certifies, or else the one with the smallest residual.
fn complete_with_sign(
    a: &DMatrix<f64>,
    a_inv: &DMatrix<f64>,
    d: f64,
) -> Result<SisoCompletionTrace> {
    let (a_vec, r, q) = completion_quadratics(a, a_inv, d);
    let mut best: Option<SisoCompletionTrace> = None;
    let mut first_error = None;
    for x in rank1_solutions(&q, ROOT_TOL, CANDIDATE_LIMIT)? {
        match complete_from_roots(a, d, x) {
            Ok((dsim, b, c, x)) => {
                let (sys, dsim, residual) = polish(a, dsim, b, c, d)?;
                let scale = dsim.as_slice().iter().fold(1.0f64, |m, &x| m.max(x));
                let (b, c) = (sys.b().as_slice().to_vec(), sys.c().as_slice().to_vec());
                let trace = SisoCompletionTrace {
                    d,
                    a_vec: a_vec.clone(),
                    r: r.clone(),
                    x,
                    dsim,
                    b,
                    c,
                    residual,
                };
                if residual <= CERTIFY_TOL * scale {
                    return Ok(trace);
                }
                if best.as_ref().is_none_or(|t| residual < t.residual) {
                    best = Some(trace);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match (best, first_error) {
        (Some(t), _) => Ok(t),
        (None, Some(e)) => Err(e),
        (None, None) => Err(FdnError::NoRank1Solution),
    }
}

/// Steps 4-5: split `X = b~ c~`, recover `Dsim` and scale to `dsim_1 = 1`.
fn complete_from_roots(
    a: &DMatrix<f64>,
    d: f64,
    x: DMatrix<f64>,
) -> Result<(DiagonalSimilarity, Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();

    let svd = linalg::svd(&x);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let (k, sigma) =
        svd.singular_values.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
        );
    let root = sigma.sqrt();
    let bt: Vec<f64> = (0..n).map(|i| u[(i, k)] * root).collect();
    let ct: Vec<f64> = (0..n).map(|j| vt[(k, j)] * root).collect();

    let act = a * DVector::from_column_slice(&ct);
    let mut dsim = Vec::with_capacity(n);
    for i in 0..n {
        if bt[i].abs() <= 1e-14 * root {
            return Err(FdnError::Singular(format!("input gain {i} vanishes")));
        }
        dsim.push(-act[i] / (bt[i] * d));
    }
    if let Some(i) = dsim.iter().position(|&x| !(x > 0.0)) {
        return Err(FdnError::NotAdmissible(format!(
            "Dsim[{i}] = {:.3e} is not positive",
            dsim[i]
        )));
    }

    // fix the free scale: dsim_1 = 1 and the first nonzero input gain positive
    let mu = 1.0 / dsim[0];
    let mut b: Vec<f64> = (0..n).map(|i| dsim[i] * bt[i] * mu.sqrt()).collect();
    let mut c: Vec<f64> = (0..n).map(|i| ct[i] / dsim[i] / mu.sqrt()).collect();
    let dsim = DiagonalSimilarity(dsim.iter().map(|x| x * mu).collect());
    if b.iter().find(|x| **x != 0.0).is_some_and(|&x| x < 0.0) {
        b.iter_mut().for_each(|x| *x = -*x);
        c.iter_mut().for_each(|x| *x = -*x);
    }

    Ok((dsim, b, c, x))
}

fn siso_system(a: &DMatrix<f64>, b: &[f64], c: &[f64], d: f64) -> SystemMatrix {
    let n = a.nrows();
    SystemMatrix::from_blocks(
        a,
        &DMatrix::from_column_slice(n, 1, b),
        &DMatrix::from_row_slice(1, n, c),
        &DMatrix::from_element(1, 1, d),
    )
}

/// Gauss-Newton on `S W S^T - W` over `dsim_2.., b, c` with `A`, `d` and
/// `dsim_1` held fixed. Near-double roots of the entry quadratics cost about
/// half the working precision; a few steps restore it.
fn polish(
    a: &DMatrix<f64>,
    mut dsim: DiagonalSimilarity,
    mut b: Vec<f64>,
    mut c: Vec<f64>,
    d: f64,
) -> Result<(SystemMatrix, DiagonalSimilarity, f64)> {
    let n = a.nrows();
    let m = n + 1;
    let upper: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let defect = |sys: &SystemMatrix, dsim: &DiagonalSimilarity| {
        let mut w = dsim.0.clone();
        w.push(1.0);
        let w = linalg::diag(&w);
        &sys.u * &w * sys.u.transpose() - w
    };

    let mut sys = siso_system(a, &b, &c, d);
    let mut residual = theorem3_residual(&sys, &dsim)?;
    for _ in 0..6 {
        if residual == 0.0 {
            break;
        }
        let f = defect(&sys, &dsim);
        let s = &sys.u;
        let mut w = dsim.0.clone();
        w.push(1.0);
        let mut jac = DMatrix::<f64>::zeros(upper.len(), 3 * n - 1);
        for (row, &(i, j)) in upper.iter().enumerate() {
            let mut k = 0;
            for t in 1..n {
                jac[(row, k)] = s[(i, t)] * s[(j, t)] - if i == j && i == t { 1.0 } else { 0.0 };
                k += 1;
            }
            for t in 0..n {
                // d/d b_t of e_t s_n^T + s_n e_t^T
                let e = |x: usize| if x == t { 1.0 } else { 0.0 };
                jac[(row, k)] = e(i) * s[(j, n)] + s[(i, n)] * e(j);
                k += 1;
            }
            for t in 0..n {
                let e = |x: usize| if x == n { 1.0 } else { 0.0 };
                jac[(row, k)] = w[t] * (e(i) * s[(j, t)] + s[(i, t)] * e(j));
                k += 1;
            }
        }
        let rhs = DVector::from_iterator(upper.len(), upper.iter().map(|&(i, j)| -f[(i, j)]));
        let step = match linalg::svd(&jac).solve(&rhs, 1e-13) {
            Ok(x) => x,
            Err(_) => break,
        };
        let mut trial = dsim.clone();
        let (mut tb, mut tc) = (b.clone(), c.clone());
        for t in 1..n {
            trial.0[t] += step[t - 1];
        }
        for t in 0..n {
            tb[t] += step[n - 1 + t];
            tc[t] += step[2 * n - 1 + t];
        }
        let tsys = siso_system(a, &tb, &tc, d);
        let tres = theorem3_residual(&tsys, &trial)?;
        if !(tres < residual) || !trial.is_positive() {
            break;
        }
        (dsim, b, c, sys, residual) = (trial, tb, tc, tsys, tres);
    }
    Ok((sys, dsim, residual))
}

/// Completes a SISO uniallpass system around `A`. Tries `d = det A` first,
/// then `d = -det A`; only a certified result is returned.
pub fn siso_completion(a: &DMatrix<f64>) -> Result<(SystemMatrix, SisoCompletionTrace)> {
    siso_completion_scaled(a, None)
}

/// As [`siso_completion`], starting from the diagonal similarity `t` instead
/// of plain balancing. A rough `sqrt(Dsim)` makes badly scaled matrices
/// tractable; the result does not depend on `t` beyond numerics.
pub fn siso_completion_scaled(
    a: &DMatrix<f64>,
    t: Option<&[f64]>,
) -> Result<(SystemMatrix, SisoCompletionTrace)> {
    let n = a.nrows();
    if !a.is_square() || n == 0 {
        return Err(FdnError::Dimension("A must be square and non-empty".into()));
    }
    if let Some(t) = t {
        if t.len() != n || t.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(FdnError::Domain(
                "scaling must be N positive finite values".into(),
            ));
        }
    }
    linalg::inverse(a, "A")?;
    let det = linalg::det(a);
    let mut failures = Vec::new();
    for d in [det, -det] {
        match complete_rebalanced(a, d, t) {
            Ok(done) => return Ok(done),
            Err(e) => failures.push(format!("d = {d:+.6e}: {e}")),
        }
    }
    Err(FdnError::NotAdmissible(failures.join("; ")))
}

/// The problem is covariant under diagonal similarity, and when `Dsim`
/// spans decades the entry roots drown in cancellation. Each pass completes
/// `T^-1 A T` and takes `T = sqrt(Dsim)` from the result, which drives the
/// working matrix towards the well-conditioned balanced form.
fn complete_rebalanced(
    a: &DMatrix<f64>,
    d: f64,
    start: Option<&[f64]>,
) -> Result<(SystemMatrix, SisoCompletionTrace)> {
    let mut t = match start {
        Some(t) => t.to_vec(),
        None => linalg::balance(&mut a.clone()),
    };
    let mut best = f64::INFINITY;
    for _ in 0..REBALANCE_PASSES {
        let work = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * t[j] / t[i]);
        let work_inv = linalg::inverse(&work, "A")?;
        let trace = complete_with_sign(&work, &work_inv, d)?;
        let (sys, trace) = unbalance(a, trace, &t)?;
        let scale = trace.dsim.as_slice().iter().fold(1.0f64, |m, &x| m.max(x));
        if trace.residual <= CERTIFY_TOL * scale {
            return Ok((sys, trace));
        }
        best = best.min(trace.residual);
        t = trace.dsim.as_slice().iter().map(|x| x.sqrt()).collect();
    }
    Err(FdnError::CompletionFailure { residual: best })
}

/// Maps a completion of `T^-1 A T` back to `A`: `b = T b'`, `c = c' T^-1`,
/// `Dsim = T^2 Dsim'`, then renormalizes to `dsim_1 = 1`.
fn unbalance(
    a: &DMatrix<f64>,
    trace: SisoCompletionTrace,
    t: &[f64],
) -> Result<(SystemMatrix, SisoCompletionTrace)> {
    let n = t.len();
    let dsim: Vec<f64> = (0..n).map(|i| trace.dsim.0[i] * t[i] * t[i]).collect();
    let tau = dsim[0].sqrt();
    let b: Vec<f64> = (0..n).map(|i| trace.b[i] * t[i] / tau).collect();
    let c: Vec<f64> = (0..n).map(|i| trace.c[i] / t[i] * tau).collect();
    let dsim = DiagonalSimilarity(dsim.iter().map(|x| x / dsim[0]).collect());
    let x = DMatrix::from_fn(n, n, |i, j| trace.x[(i, j)] * t[j] / t[i]);
    let sys = siso_system(a, &b, &c, trace.d);
    let residual = theorem3_residual(&sys, &dsim)?;
    Ok((
        sys,
        SisoCompletionTrace {
            x,
            dsim,
            b,
            c,
            residual,
            ..trace
        },
    ))
}

fn haar_sample(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    linalg::haar_orthogonal(DMatrix::from_fn(n, n, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    }))
}

/// Seeded Haar-distributed orthogonal matrix.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    haar_sample(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// A random uniallpass system matrix from a Haar-distributed orthogonal
/// matrix. With `scaled`, a random positive diagonal similarity is applied
/// and returned as `Dsim`; otherwise `Dsim = I`.
pub fn random_uniallpass(
    n: usize,
    p: usize,
    seed: u64,
    scaled: bool,
) -> Result<(SystemMatrix, DiagonalSimilarity)> {
    if n == 0 || p == 0 {
        return Err(FdnError::Dimension("N and P must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n + p;
    let q = haar_sample(m, &mut rng);
    if !scaled {
        return Ok((SystemMatrix::new(q, n)?, DiagonalSimilarity::ones(n)));
    }
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let u = DMatrix::from_fn(m, m, |i, j| {
        let ti = if i < n { t[i] } else { 1.0 };
        let tj = if j < n { t[j] } else { 1.0 };
        q[(i, j)] * ti / tj
    });
    let dsim = DiagonalSimilarity(t.iter().map(|x| x * x).collect());
    Ok((SystemMatrix::new(u, n)?, dsim))
}
