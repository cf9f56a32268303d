//! Cross-module invariants: robustness of the iteration to perturbed start
//! points, the certified Lipschitz property of the built-in problems, and a
//! couple of randomized structural invariants.

use conewton::cone::{ConeSpec, ConeTag};
use conewton::io::{parse_trace_csv, write_trace_csv, TraceRow};
use conewton::majorant::Variant;
use conewton::minnorm::{robinson_check, t_inverse_norm_at};
use conewton::newton::{
    audit, audit_passed, certify, finite_diff_jacobian_check, newton_solve, ResidualMode,
    SolverConfig,
};
use conewton::problems::builtin;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn builtins_satisfy_surjectivity_at_start() {
    for name in ["quad1d", "ineq2", "smale1d"] {
        let p = builtin(name).unwrap();
        assert!(robinson_check(&p.jac(&p.x0), &p.cone).unwrap(), "{name}");
    }
}

#[test]
fn builtins_have_consistent_jacobians() {
    for name in ["quad1d", "ineq2", "smale1d"] {
        let p = builtin(name).unwrap();
        let err = finite_diff_jacobian_check(&p, &p.x0, 1e-6).unwrap();
        assert!(err <= 1e-6, "{name}: finite-difference error {err}");
    }
}

/// The certified affine-invariant Lipschitz constants hold over the domain
/// ball: `||T_{x0}^{-1} [J(y) - J(x)] u|| <= L ||x - y||` on sampled pairs
/// and unit directions.
#[test]
fn builtin_lipschitz_constants_are_certified() {
    for name in ["quad1d", "ineq2"] {
        let p = builtin(name).unwrap();
        let l = p.lipschitz.unwrap();
        let radius = p.domain_radius.unwrap();
        let j0 = p.jac(&p.x0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let x = sample_in_ball(&mut rng, &p.x0, 0.98 * radius);
            let y = sample_in_ball(&mut rng, &p.x0, 0.98 * radius);
            let dist = (&y - &x).norm();
            if dist < 1e-9 {
                continue;
            }
            let jdiff = p.jac(&y) - p.jac(&x);
            let u = unit_direction(&mut rng, p.n);
            let lhs = t_inverse_norm_at(&j0, &(&jdiff * u), &p.cone).unwrap();
            assert!(
                lhs <= l * dist + 1e-9,
                "{name}: {lhs} > {l} * {dist}",
            );
        }
    }
}

/// Runs started anywhere inside the robustness ball converge and satisfy
/// every audited bound of the rho-shifted certificate.
#[test]
fn perturbed_starts_converge_and_audit_clean() {
    let p = builtin("quad1d").unwrap();
    let beta = certify(&p, 0.0, Some(Variant::Lipschitz), None).unwrap().critical.beta;
    let rho = 0.4 * beta / 2.0;
    let cert = certify(&p, rho, Some(Variant::Lipschitz), None).unwrap();
    let theta_tilde = cert.constants.theta_tilde;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..20 {
        let offset: f64 = rng.random_range(-0.999..0.999) * rho;
        let start = DVector::from_vec(vec![p.x0[0] + offset]);
        let theta = if trial % 2 == 0 { 0.0 } else { theta_tilde / 2.0 };
        let config = SolverConfig {
            theta,
            residual_mode: ResidualMode::ScaledRandom,
            tol: 1e-11,
            max_iter: 300,
            rho,
            seed: trial,
            start: Some(start),
            ..SolverConfig::default()
        };
        let report = newton_solve(&p, &config).unwrap();
        assert!(report.converged(), "trial {trial}");
        assert!((report.final_x[0] - std::f64::consts::SQRT_2).abs() <= 1e-8);
        let checks = audit(&report, &cert, theta);
        assert!(audit_passed(&checks), "trial {trial}: {checks:#?}");
    }
}

/// Solves own their state: concurrent runs over shared problems agree with
/// sequential ones bit for bit.
#[test]
fn concurrent_solves_are_independent() {
    let p = std::sync::Arc::new(builtin("quad1d").unwrap());
    let handles: Vec<_> = (0..8)
        .map(|seed| {
            let p = std::sync::Arc::clone(&p);
            std::thread::spawn(move || {
                let config = SolverConfig {
                    theta: 0.3,
                    residual_mode: ResidualMode::ScaledRandom,
                    seed,
                    max_iter: 300,
                    ..SolverConfig::default()
                };
                newton_solve(&p, &config).unwrap().final_x[0]
            })
        })
        .collect();
    let parallel: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    for (seed, got) in parallel.into_iter().enumerate() {
        let config = SolverConfig {
            theta: 0.3,
            residual_mode: ResidualMode::ScaledRandom,
            seed: seed as u64,
            max_iter: 300,
            ..SolverConfig::default()
        };
        let want = newton_solve(&p, &config).unwrap().final_x[0];
        assert_eq!(got.to_bits(), want.to_bits());
    }
}

fn sample_in_ball(rng: &mut ChaCha8Rng, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = center.len();
    loop {
        let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if u.norm() <= 1.0 {
            return center + radius * u;
        }
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = u.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return u / norm;
        }
    }
}

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e12..1e12_f64,
        -1.0..1.0_f64,
        prop_oneof![Just(0.0_f64), Just(-0.0), Just(1e-300), Just(-1e-300), Just(1e300)],
    ]
}

proptest! {
    // CSV round trip is bit-exact for any finite payload.
    #[test]
    fn trace_csv_round_trips(rows in proptest::collection::vec(
        (0usize..10_000, proptest::collection::vec(finite_f64(), 9)),
        0..16,
    )) {
        let rows: Vec<TraceRow> = rows
            .into_iter()
            .map(|(k, v)| TraceRow {
                k,
                residual_norm: v[0],
                step_norm: v[1],
                dist_from_start: v[2],
                theta_k: v[3],
                r_norm_plus: v[4],
                r_norm_minus: v[5],
                fc_bound: v[6],
                t_k: v[7],
                eps_k: v[8],
            })
            .collect();
        let text = write_trace_csv(&rows);
        let back = parse_trace_csv(&text).unwrap();
        prop_assert_eq!(rows.len(), back.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.k, b.k);
            prop_assert_eq!(a.residual_norm.to_bits(), b.residual_norm.to_bits());
            prop_assert_eq!(a.step_norm.to_bits(), b.step_norm.to_bits());
            prop_assert_eq!(a.eps_k.to_bits(), b.eps_k.to_bits());
        }
    }

    // Distance to a product cone is positively homogeneous, and membership
    // is exactly the zero set of the violation.
    #[test]
    fn cone_violation_homogeneity(
        tags in proptest::collection::vec(0u8..4, 1..6),
        y in proptest::collection::vec(-100.0..100.0_f64, 6),
        s in 0.01..100.0_f64,
    ) {
        let tags: Vec<ConeTag> = tags
            .iter()
            .map(|t| [ConeTag::NonPos, ConeTag::NonNeg, ConeTag::Zero, ConeTag::Free][*t as usize])
            .collect();
        let m = tags.len();
        let cone = ConeSpec::new(tags).unwrap();
        let y = DVector::from_vec(y[..m].to_vec());
        let v = cone.violation(&y).unwrap();
        let vs = cone.violation(&(&y * s)).unwrap();
        prop_assert!((vs - s * v).abs() <= 1e-9 * (1.0 + s * v));
        prop_assert_eq!(cone.contains(&y, 0.0).unwrap(), v == 0.0);
    }
}
