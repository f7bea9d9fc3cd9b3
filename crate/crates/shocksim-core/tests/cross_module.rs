//! Cross-module checks: both shipped semigroups run through the generic
//! certificate harness, and shocked p-Laplacian paths satisfy the pathwise
//! bounds end to end.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use shocksim_core::ergodic::{stabilization_check, Functional, ProcessSpec};
use shocksim_core::ode::OdeSemigroup;
use shocksim_core::plaplacian::{PLapGrid, PLapSemigroup};
use shocksim_core::poisson::{bump_profile, ShockLaw};
use shocksim_core::process::{
    coupled_distance, coupling_rhs, verification_grid, verify_coupling_bound, verify_norm_bound,
};
use shocksim_core::semigroup::{check_certificate, check_decay_bound, log_time_grid, Semigroup};
use shocksim_core::StateVector;

fn random_scalar_samples(
    t_grid: &[f64],
    pairs: usize,
    seed: u64,
) -> Vec<(f64, StateVector, StateVector)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for _ in 0..pairs {
        let t = t_grid[rng.gen_range(0..t_grid.len())];
        samples.push((
            t,
            StateVector::scalar(rng.gen_range(-20.0..20.0)),
            StateVector::scalar(rng.gen_range(-20.0..20.0)),
        ));
    }
    samples
}

#[test]
fn ode_certificate_never_violated_on_sampled_grid() {
    // Log-spaced times over [0, 1e3], 256 random pairs, fixed seed.
    let t_grid = log_time_grid(1e3, 48);
    for rho in [0.4, 0.5, 1.0, 2.0] {
        let sg = OdeSemigroup::new(rho);
        let cert = sg.certificate().unwrap();
        let samples = random_scalar_samples(&t_grid, 256, 99);
        let report = check_decay_bound(&sg, &cert, &samples).unwrap();
        assert!(
            report.passes(1e-12),
            "rho={rho}: worst margin {} at sample {}",
            report.worst_margin_w,
            report.worst_index
        );
        // V = W here, so the ambient margin agrees.
        assert!(report.worst_margin_v <= 1e-12);
        // The handle-based entry point reproduces the explicit one.
        let via_handle = check_certificate(&sg, &samples).unwrap();
        assert_eq!(via_handle.worst_margin_w, report.worst_margin_w);
    }
}

#[test]
fn plap_certificate_never_violated_on_sampled_grid() {
    let grid = PLapGrid::uniform(16, 1.0, 3.0, 1.0).unwrap();
    let sg = PLapSemigroup::new(grid, 1e-2, 2.0).unwrap();
    let cert = sg.certificate().unwrap();
    let space = *sg.space();
    let mut rng = StdRng::seed_from_u64(7);
    let mut samples = Vec::new();
    let t_grid = [0.0, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0];
    for _ in 0..24 {
        let t = t_grid[rng.gen_range(0..t_grid.len())];
        let mk = |rng: &mut StdRng| {
            let mut vals: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = vals.iter().sum::<f64>() / 16.0;
            vals.iter_mut().for_each(|v| *v -= mean);
            StateVector::new(vals, space.v_norm)
        };
        samples.push((t, mk(&mut rng), mk(&mut rng)));
    }
    let report = check_decay_bound(&sg, &cert, &samples).unwrap();
    assert!(
        report.worst_margin_w <= 1e-6,
        "worst margin {} at sample {}",
        report.worst_margin_w,
        report.worst_index
    );
}

#[test]
fn shocked_plaplacian_paths_obey_pathwise_bounds() {
    let grid = PLapGrid::uniform(32, 1.0, 3.0, 1.0).unwrap();
    let sg = PLapSemigroup::new(grid, 1e-2, 2.0).unwrap();
    let law = ShockLaw::ScaledBump { amplitude: 0.5 };
    let spec = ProcessSpec {
        semigroup: &sg,
        theta: 1.0,
        seed: 404,
        law: &law,
    };
    let horizon = 10.0;
    for r in 0..2 {
        let mut a = spec.path(r, spec.zero_state()).unwrap();
        let grid_t = verification_grid(a.stream_mut(), horizon, 24);
        let norm_report = verify_norm_bound(&mut a, &grid_t).unwrap();
        assert!(
            norm_report.worst_margin <= 1e-6,
            "norm bound margin {} at t={}",
            norm_report.worst_margin,
            norm_report.worst_t
        );

        let offset = bump_profile(sg.space()).scale(0.7);
        let mut b = spec.path(r, offset).unwrap();
        let mut a2 = spec.path(r, spec.zero_state()).unwrap();
        let coup = verify_coupling_bound(&mut a2, &mut b, &grid_t).unwrap();
        assert!(
            coup.worst_margin <= 1e-6,
            "coupling margin {} at t={}",
            coup.worst_margin,
            coup.worst_t
        );
        for &t in grid_t.iter().step_by(7) {
            let lhs = coupled_distance(&mut a2, &mut b, t).unwrap();
            let rhs = coupling_rhs(&mut a2, &mut b, t).unwrap();
            assert!(lhs <= rhs + 1e-9, "t={t}: {lhs} > {rhs}");
        }
    }
}

#[test]
fn shocked_plaplacian_time_average_stabilizes() {
    // Small smoke version of the shocked-PDE ergodic run.
    let grid = PLapGrid::uniform(8, 1.0, 3.0, 1.0).unwrap();
    let sg = PLapSemigroup::new(grid, 1e-2, 2.0).unwrap();
    let law = ShockLaw::ScaledBump { amplitude: 1.0 };
    let spec = ProcessSpec {
        semigroup: &sg,
        theta: 1.0,
        seed: 11,
        law: &law,
    };
    let report = stabilization_check(
        &spec,
        &Functional::v_norm(),
        spec.zero_state(),
        10.0,
        60.0,
        8,
        5e-2,
    )
    .unwrap();
    assert!(report.stable(), "{report:?}");
}

#[test]
fn ode_path_bounds_full_grid() {
    let sg = OdeSemigroup::new(1.0);
    let law = ShockLaw::GaussianIidCoords { sigma: 1.0 };
    let spec = ProcessSpec {
        semigroup: &sg,
        theta: 1.0,
        seed: 2024,
        law: &law,
    };
    for r in 0..10 {
        let mut path = spec.path(r, StateVector::scalar(1.0)).unwrap();
        let grid_t = verification_grid(path.stream_mut(), 100.0, 64);
        let report = verify_norm_bound(&mut path, &grid_t).unwrap();
        assert!(report.worst_margin <= 1e-9, "margin {}", report.worst_margin);

        let mut x = spec.path(r, StateVector::scalar(0.0)).unwrap();
        let mut y = spec.path(r, StateVector::scalar(1.0)).unwrap();
        let coup = verify_coupling_bound(&mut x, &mut y, &grid_t).unwrap();
        assert!(coup.worst_margin <= 1e-9);
        // With shared shocks the distance also sits below both the initial
        // gap and the certificate envelope of the initial gap.
        let cert = sg.certificate().unwrap();
        for &t in grid_t.iter().step_by(11) {
            let d = coupled_distance(&mut x, &mut y, t).unwrap();
            let envelope = shocksim_core::semigroup::decay_envelope(&cert, t, 1.0);
            assert!(d <= 1.0 + 1e-12);
            assert!(d <= cert.c_embed * envelope + 1e-12, "t={t}");
        }
    }
}

#[test]
fn processes_evaluate_concurrently() {
    // Independent replicas of one spec evaluated from worker threads.
    let sg = OdeSemigroup::new(1.0);
    let law = ShockLaw::TwoPoint { magnitude: 1.0 };
    let spec = ProcessSpec {
        semigroup: &sg,
        theta: 1.0,
        seed: 7,
        law: &law,
    };
    let serial: Vec<f64> = (0..8u64)
        .map(|r| {
            let mut p = spec.path(r, StateVector::scalar(0.0)).unwrap();
            p.state_at(5.0).unwrap().coords()[0]
        })
        .collect();
    let parallel: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..8u64)
            .map(|r| {
                scope.spawn(move || {
                    let mut p = spec.path(r, StateVector::scalar(0.0)).unwrap();
                    p.state_at(5.0).unwrap().coords()[0]
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
}
