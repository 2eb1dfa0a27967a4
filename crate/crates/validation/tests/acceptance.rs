//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! straight to stderr, so the summary survives output capture.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;

use common::*;
use uniallpass::allpass::{is_allpass, DEFAULT_TOL};
use uniallpass::complete::{
    orthogonal_completion, random_orthogonal, random_uniallpass, siso_completion,
};
use uniallpass::designs::{
    counterexample, gardner_nested, poletti_unitary, schroeder_series, GainVector,
};
use uniallpass::fixtures::{self, matrix};
use uniallpass::gcp::{
    gcp, numerator_poly, ordered_subsets, poles, principal_minor, principal_minor_list,
};
use uniallpass::homogeneous::{decay_gains, design_homogeneous_siso, HomogeneousSpec};
use uniallpass::linalg;
use uniallpass::response::{impulse_response, transfer_scalar};
use uniallpass::verify::{check_theorem3, check_theorem4, schur_of_direct, DiagonalSimilarity};
use uniallpass::{DelayVector, FdnSystem};

/// Printed values carry two or three decimals.
const PRINTED_TOL: f64 = 5e-3;

fn report(n: usize, pass: bool, detail: &str) {
    let line = format!(
        "criterion {n}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Deviation from a printed coefficient list in either orientation.
fn oriented_dev(got: &[f64], printed: &[f64]) -> f64 {
    let rev: Vec<f64> = got.iter().rev().copied().collect();
    max_dev(got, printed).min(max_dev(&rev, printed))
}

fn siso_random(
    rng: &mut rand_chacha::ChaCha8Rng,
    n: usize,
    max_delay: usize,
    radius: f64,
) -> FdnSystem {
    let a = random_matrix(rng, n, n, 1.0);
    let a = &a * (radius / linalg::spectral_norm(&a));
    FdnSystem::new(
        a,
        random_matrix(rng, n, 1, 1.0),
        random_matrix(rng, 1, n, 1.0),
        random_matrix(rng, 1, 1, 1.0),
        random_delays(rng, n, max_delay),
    )
    .unwrap()
}

#[test]
fn criterion_1_counterexample() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;

    for (m, want) in [
        (vec![1, 1, 1], true),
        (vec![2, 2, 1], true),
        (vec![2, 1, 1], false),
    ] {
        let fdn = counterexample(DelayVector::new(m.clone()).unwrap()).unwrap();
        let got = match is_allpass(&fdn, PRINTED_TOL) {
            Ok(r) => {
                notes.push(format!(
                    "{m:?} defect {:.2e}",
                    r.unitary_defect.max(r.reversal_defect)
                ));
                r.allpass
            }
            Err(e) => {
                notes.push(format!("{m:?} {e}"));
                false
            }
        };
        pass &= got == want;
    }

    let mut coeff_dev: f64 = 0.0;
    for (m, num, den) in fixtures::COUNTEREXAMPLE_POLYS {
        let fdn = counterexample(DelayVector::new(m.to_vec()).unwrap()).unwrap();
        let d = gcp(&fdn.a, &fdn.delays).unwrap();
        let n = numerator_poly(&fdn).unwrap();
        coeff_dev = coeff_dev
            .max(oriented_dev(d.coeffs(), den))
            .max(oriented_dev(n.siso(), num));
    }
    notes.push(format!("coefficients {coeff_dev:.2e}"));
    pass &= coeff_dev <= PRINTED_TOL;

    let fdn = counterexample(DelayVector::ones(3)).unwrap();
    let inv = principal_minor_list(&linalg::inverse(&fdn.a, "A").unwrap()).unwrap();
    let sd = principal_minor_list(&schur_of_direct(&fdn).unwrap()).unwrap();
    let minor_dev = max_dev(&inv, &fixtures::COUNTEREXAMPLE_MINORS_A_INV)
        .max(max_dev(&sd, &fixtures::COUNTEREXAMPLE_MINORS_S_D));
    notes.push(format!("minors {minor_dev:.2e}"));
    pass &= minor_dev <= PRINTED_TOL;

    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    notes.push(format!("tol {PRINTED_TOL:.0e}, {elapsed:.2?}"));
    report(1, pass, &format!("({})", notes.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_2_homogeneous_example() {
    let start = Instant::now();
    let delays = DelayVector::new(fixtures::HOMOGENEOUS_DELAYS.to_vec()).unwrap();
    let spec = HomogeneousSpec::new(delays.clone(), fixtures::HOMOGENEOUS_GAMMA)
        .with_dsim(fixtures::HOMOGENEOUS_DSIM.to_vec());
    let design = design_homogeneous_siso(&spec).unwrap();

    let gains = decay_gains(&delays, fixtures::HOMOGENEOUS_GAMMA).unwrap();
    let gamma_dev = max_dev(&gains, &fixtures::HOMOGENEOUS_GAINS);
    let u_dev = (&design.u - matrix(&fixtures::HOMOGENEOUS_U)).abs().max();
    let a_dev = (&design.fdn.a - matrix(&fixtures::HOMOGENEOUS_A))
        .abs()
        .max();

    let printed = FdnSystem::siso(
        matrix(&fixtures::HOMOGENEOUS_A),
        &fixtures::HOMOGENEOUS_B,
        &fixtures::HOMOGENEOUS_C,
        fixtures::HOMOGENEOUS_D,
        delays,
    )
    .unwrap();
    let mut rng = rng(2);
    let transfer_dev = random_unit_points(&mut rng, 32)
        .into_iter()
        .fold(0.0f64, |m, z| {
            let h = transfer_scalar(&design.fdn, z).unwrap();
            let p = transfer_scalar(&printed, z).unwrap();
            m.max((h - p).norm().min((h + p).norm()))
        });

    let elapsed = start.elapsed();
    let pass = gamma_dev <= PRINTED_TOL
        && u_dev <= PRINTED_TOL
        && a_dev <= PRINTED_TOL
        && transfer_dev <= 1e-3
        && design.poles.len() == 54
        && design.pole_radius_error <= 1e-6
        && elapsed < Duration::from_secs(5);
    report(
        2,
        pass,
        &format!(
            "(gamma {gamma_dev:.1e}, U {u_dev:.1e}, A {a_dev:.1e} vs {PRINTED_TOL:.0e}; transfer {transfer_dev:.1e} vs 1e-3; \
             {} poles, radius error {:.1e}; {elapsed:.2?})",
            design.poles.len(),
            design.pole_radius_error
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_reference_designs() {
    let g = GainVector::new(fixtures::REFERENCE_GAINS.to_vec()).unwrap();
    let mut rng = rng(3);
    let mut notes = Vec::new();
    let mut pass = true;

    let (schroeder, s_dsim) = schroeder_series(&g, DelayVector::ones(6)).unwrap();
    let (gardner, g_dsim) = gardner_nested(&g, DelayVector::ones(6)).unwrap();
    let u = random_orthogonal(4, 3);
    let pg = fixtures::POLETTI_LOOP_GAIN;
    let (poletti, _) = poletti_unitary(&u, pg, DelayVector::ones(4)).unwrap();
    let stated = DiagonalSimilarity(vec![fixtures::poletti_printed_dsim(pg); 4]);

    for (name, fdn, dsim) in [
        ("schroeder", &schroeder, &s_dsim),
        ("gardner", &gardner, &g_dsim),
        ("poletti", &poletti, &stated),
    ] {
        let cert = check_theorem3(fdn, dsim, 1e-8).unwrap();
        let mut allpass = 0;
        for _ in 0..10 {
            let f = fdn
                .with_delays(random_delays(&mut rng, fdn.n(), 30))
                .unwrap();
            allpass += is_allpass(&f, DEFAULT_TOL).is_ok_and(|r| r.allpass) as usize;
        }
        notes.push(format!(
            "{name} residual {:.1e}, allpass {allpass}/10",
            cert.residual
        ));
        pass &= cert.verdict && allpass == 10;
    }
    report(3, pass, &format!("({})", notes.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_4_theorem_chain() {
    let mut rng = rng(4);
    let (mut allpass_failures, mut t4_failures, mut uncertified) = (0, 0, 0);
    for seed in 0..200 {
        let n = rng.random_range(1..=6);
        let p = if rng.random_bool(0.5) { 1 } else { n };
        let (sys, dsim) = random_uniallpass(n, p, seed, true).unwrap();
        for _ in 0..5 {
            let fdn = FdnSystem::from_system_matrix(&sys, random_delays(&mut rng, n, 12)).unwrap();
            if !check_theorem3(&fdn, &dsim, 1e-8).unwrap().verdict {
                uncertified += 1;
                continue;
            }
            allpass_failures += !is_allpass(&fdn, DEFAULT_TOL).is_ok_and(|r| r.allpass) as usize;
            t4_failures += !check_theorem4(&fdn, DEFAULT_TOL).unwrap().verdict as usize;
        }
    }
    let mut detected = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let fdn = siso_random(&mut rng, n, 12, 0.9);
        let caught = (0..5).any(|_| {
            let f = fdn.with_delays(random_delays(&mut rng, n, 12)).unwrap();
            !is_allpass(&f, DEFAULT_TOL).is_ok_and(|r| r.allpass)
        });
        detected += caught as usize;
    }
    let pass = allpass_failures == 0 && t4_failures == 0 && uncertified == 0 && detected == 50;
    report(
        4,
        pass,
        &format!(
            "(1000 certified cases: {allpass_failures} not allpass, {t4_failures} theorem-4 failures, \
             {uncertified} uncertified; {detected}/50 non-allpass detected)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_oracles() {
    let mut rng = rng(5);

    let mut gcp_err: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=5);
        let a = random_matrix(&mut rng, n, n, 1.0);
        let m = random_delays(&mut rng, n, 4);
        let got = gcp(&a, &m).unwrap();
        gcp_err = gcp_err.max(max_dev(got.coeffs(), &leibniz_gcp(&a, &m)));
    }

    let mut pole_dist: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let fdn = siso_random(&mut rng, n, 3, 0.9);
        let got = poles(&fdn).unwrap();
        pole_dist = pole_dist.max(multiset_distance(
            &got,
            &shift_register_poles(&fdn.a, &fdn.delays),
        ));
    }

    let mut ir_err: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let fdn = siso_random(&mut rng, n, 4, 0.6);
        let got = impulse_response(&fdn, 32).unwrap();
        let want = idft_impulse(&fdn, 32, 512);
        for (g, w) in got.iter().zip(&want) {
            ir_err = ir_err.max((g - w).abs().max());
        }
    }

    let mut jacobi_err: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let m = random_matrix(&mut rng, n, n, 1.0) + DMatrix::identity(n, n) * 0.5;
        let det = linalg::det(&m);
        let inv = m.clone().try_inverse().unwrap();
        for subset in ordered_subsets(n) {
            let complement: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
            let lhs = principal_minor(&inv, &subset).unwrap();
            let rhs = principal_minor(&m, &complement).unwrap() / det;
            jacobi_err = jacobi_err.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }

    let pass = gcp_err < 1e-9 && pole_dist < 1e-6 && ir_err < 1e-8 && jacobi_err < 1e-9;
    report(
        5,
        pass,
        &format!("(gcp {gcp_err:.1e}, poles {pole_dist:.1e}, impulse {ir_err:.1e}, jacobi {jacobi_err:.1e})"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_completion() {
    let mut rng = rng(6);

    let mut orthogonal_ok = 0;
    for seed in 0..100 {
        let n = rng.random_range(1..=6);
        let p = if seed % 2 == 0 { 1 } else { n };
        let q = random_orthogonal(n + p, 1000 + seed);
        let a = q.view((0, 0), (n, n)).into_owned();
        let ok = orthogonal_completion(&a, p).is_ok_and(|(sys, dsim)| {
            let fdn = FdnSystem::from_system_matrix(&sys, random_delays(&mut rng, n, 12)).unwrap();
            check_theorem3(&fdn, &dsim, 1e-8).unwrap().verdict
        });
        orthogonal_ok += ok as usize;
    }

    let mut siso_ok = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let m = random_delays(&mut rng, n, 20);
        let gamma = rng.random_range(0.9..0.999);
        let design = design_homogeneous_siso(&HomogeneousSpec::new(m.clone(), gamma)).unwrap();
        let ok = siso_completion(&design.fdn.a).is_ok_and(|(sys, trace)| {
            let fdn = FdnSystem::from_system_matrix(&sys, m).unwrap();
            check_theorem3(&fdn, &trace.dsim, 1e-8).unwrap().verdict
        });
        siso_ok += ok as usize;
    }

    let (mut rejected, mut accepted_n2, mut accepted_certified) = (0, 0, 0);
    for seed in 0..50 {
        let n = rng.random_range(2..=6);
        let gains: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..0.95)).collect();
        let a = random_orthogonal(n, 2000 + seed) * linalg::diag(&gains);
        match siso_completion(&a) {
            Err(_) => rejected += 1,
            Ok((sys, trace)) => {
                accepted_n2 += (n == 2) as usize;
                let fdn =
                    FdnSystem::from_system_matrix(&sys, DelayVector::powers_of_two(n)).unwrap();
                accepted_certified +=
                    check_theorem3(&fdn, &trace.dsim, 1e-8).unwrap().verdict as usize;
            }
        }
    }

    let pass = orthogonal_ok == 100 && siso_ok == 50 && rejected == 50;
    report(
        6,
        pass,
        &format!(
            "(orthogonal {orthogonal_ok}/100, siso {siso_ok}/50, inadmissible rejected {rejected}/50; \
             accepted {} of which N = 2: {accepted_n2}, certified: {accepted_certified})",
            50 - rejected
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_fiedler_count() {
    let mut rng = rng(7);
    let mut correct = 0;
    for seed in 0..100 {
        let n = rng.random_range(1..=8);
        let p = rng.random_range(1..=n);
        let q = random_orthogonal(n + p, 3000 + seed);
        let corner = q.view((0, 0), (n, n)).into_owned();
        let ones = linalg::singular_values(&corner)
            .iter()
            .filter(|s| (*s - 1.0).abs() <= 1e-9)
            .count();
        correct += (ones == n - p) as usize;
    }
    let pass = correct == 100;
    report(
        7,
        pass,
        &format!("({correct}/100 corners with N-P unit singular values)"),
    );
    assert!(pass);
}
