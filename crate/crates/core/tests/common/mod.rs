//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uniallpass::{DelayVector, FdnSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_delays(rng: &mut ChaCha8Rng, n: usize, max: usize) -> DelayVector {
    DelayVector::new((0..n).map(|_| rng.random_range(1..=max)).collect()).unwrap()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All permutations of `0..n` with their signs (Heap's algorithm).
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![(perm.clone(), 1.0)];
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            out.push((perm.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// `det(diag(z^m) - A)` expanded by the Leibniz formula, returned ascending in `z^-1`.
pub fn leibniz_gcp(a: &DMatrix<f64>, delays: &DelayVector) -> Vec<f64> {
    let n = a.nrows();
    let m = delays.as_slice();
    let order = delays.system_order();
    let entry = |i: usize, j: usize| -> Vec<f64> {
        if i == j {
            let mut p = vec![0.0; m[i] + 1];
            p[0] = -a[(i, i)];
            p[m[i]] += 1.0;
            p
        } else {
            vec![-a[(i, j)]]
        }
    };
    let mut total = vec![0.0; order + 1];
    for (perm, sign) in permutations(n) {
        let mut term = vec![sign];
        for (i, &j) in perm.iter().enumerate() {
            term = poly_mul(&term, &entry(i, j));
        }
        for (k, x) in term.iter().enumerate() {
            total[k] += x;
        }
    }
    total.reverse();
    total
}

/// Single-sample state transition of the FDN: one state per delay element.
pub fn shift_register_matrix(a: &DMatrix<f64>, delays: &DelayVector) -> DMatrix<f64> {
    let m = delays.as_slice();
    let offsets: Vec<usize> = m
        .iter()
        .scan(0, |acc, &x| Some(std::mem::replace(acc, *acc + x)))
        .collect();
    let total = delays.system_order();
    let mut s = DMatrix::zeros(total, total);
    for i in 0..m.len() {
        let base = offsets[i];
        for k in 0..m[i] - 1 {
            s[(base + k, base + k + 1)] = 1.0;
        }
        for j in 0..m.len() {
            s[(base + m[i] - 1, offsets[j])] = a[(i, j)];
        }
    }
    s
}

pub fn shift_register_poles(a: &DMatrix<f64>, delays: &DelayVector) -> Vec<Complex64> {
    let s = shift_register_matrix(a, delays);
    let n = s.nrows();
    // a random orthogonal similarity sidesteps QR cycles on shift structures
    let mut r = rng(n as u64);
    let q = random_matrix(&mut r, n, n, 1.0).qr().q();
    let s = q.transpose() * s * &q;
    Schur::try_new(s, f64::EPSILON, 10_000 * n)
        .expect("Schur iteration did not converge")
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect()
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, c| {
                if c.1 < acc.1 {
                    c
                } else {
                    acc
                }
            });
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// `H(z)` straight from the definition with a dense complex inverse.
pub fn transfer_direct(fdn: &FdnSystem, z: Complex64) -> DMatrix<Complex64> {
    let n = fdn.n();
    let c = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let mut k = DMatrix::<Complex64>::zeros(n, n);
    for (i, &m) in fdn.delays.as_slice().iter().enumerate() {
        k[(i, i)] = z.powu(m as u32);
    }
    let k = k - c(&fdn.a);
    let inv = k.try_inverse().expect("evaluation at a pole");
    c(&fdn.c) * inv * c(&fdn.b) + c(&fdn.d)
}

/// Impulse response from `k` unit-circle samples of `H` by an inverse DFT.
pub fn idft_impulse(fdn: &FdnSystem, length: usize, k: usize) -> Vec<DMatrix<f64>> {
    let p = fdn.p();
    let samples: Vec<DMatrix<Complex64>> = (0..k)
        .map(|i| {
            transfer_direct(
                fdn,
                Complex64::from_polar(1.0, 2.0 * PI * i as f64 / k as f64),
            )
        })
        .collect();
    (0..length)
        .map(|n| {
            let mut acc = DMatrix::<Complex64>::zeros(p, p);
            for (i, h) in samples.iter().enumerate() {
                acc += h * Complex64::from_polar(
                    1.0 / k as f64,
                    2.0 * PI * (i * n % k) as f64 / k as f64,
                );
            }
            acc.map(|x| x.re)
        })
        .collect()
}

/// `sum_k A^k B B^T (A^T)^k` by Smith's doubling: after `k` steps the first
/// `2^k` terms are summed.
pub fn lyapunov_doubling(a: &DMatrix<f64>, b: &DMatrix<f64>, steps: usize) -> DMatrix<f64> {
    let mut x = b * b.transpose();
    let mut ak = a.clone();
    for _ in 0..steps {
        x += &ak * &x * ak.transpose();
        ak = &ak * &ak;
    }
    x
}

pub fn schroeder_product(g: &[f64], delays: &DelayVector, z: Complex64) -> Complex64 {
    g.iter()
        .zip(delays.as_slice())
        .map(|(&g, &m)| {
            let zm = z.powu(m as u32).inv();
            (g + zm) / (1.0 + g * zm)
        })
        .product()
}

pub fn gardner_recursion(g: &[f64], delays: &DelayVector, z: Complex64) -> Complex64 {
    let mut h = Complex64::new(1.0, 0.0);
    for (&g, &m) in g.iter().zip(delays.as_slice()) {
        let x = z.powu(m as u32).inv() * h;
        h = (g + x) / (1.0 + g * x);
    }
    h
}

/// `(g I + U D_m) (I + g U D_m)^-1` with `D_m = diag(z^-m)`.
pub fn poletti_formula(
    u: &DMatrix<f64>,
    g: f64,
    delays: &DelayVector,
    z: Complex64,
) -> DMatrix<Complex64> {
    let n = u.nrows();
    let dm = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        delays.as_slice().iter().map(|&m| z.powu(m as u32).inv()),
    ));
    let uc = u.map(|x| Complex64::new(x, 0.0));
    let eye = DMatrix::<Complex64>::identity(n, n);
    let g = Complex64::new(g, 0.0);
    (&eye * g + &uc * &dm) * (&eye + &uc * &dm * g).try_inverse().unwrap()
}

pub fn random_unit_points(rng: &mut ChaCha8Rng, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
        .collect()
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().fold(0.0, |m, x| m.max(x.norm()))
}
