//! Statistical validation of the jump unraveling against closed-form and
//! master-equation oracles.

use qfeedback_core::liouville::{build_feedback_liouvillian, evolve};
use qfeedback_core::model::{preset_two_level, FeedbackConfig, IntegrationConfig, ZSpec};
use qfeedback_core::trajectory::{
    ensemble_average, InitialState, JumpRecord, StepOperators, TrajectoryRng, TrajectoryState,
};
use qfeedback_core::{DensityMatrix, StateVector};

fn excited() -> StateVector {
    StateVector::basis(2, 0)
}

/// Pure decay from |e⟩ waits an exponential time before its single jump:
/// the empirical detection-time distribution over 1e5 seeds must pass a
/// KS test against 1 − e^{−γt} at the 1% level.
#[test]
fn detection_times_are_exponential() {
    let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
    let dt = 2e-3;
    let ops = StepOperators::new(&model, FeedbackConfig::markovian(), dt).unwrap();
    let n_traj = 100_000u64;
    let max_steps = (20.0 / dt) as usize;

    let mut detections = Vec::with_capacity(n_traj as usize);
    for traj in 0..n_traj {
        let rng = TrajectoryRng::from_master(20_240_817, traj);
        let mut state = TrajectoryState::new(excited(), dt, rng).unwrap();
        let mut record = JumpRecord::default();
        for _ in 0..max_steps {
            ops.step(&mut state, &mut record).unwrap();
            if let Some(&t) = record.detection_times.first() {
                detections.push(t);
                break;
            }
        }
    }
    // P(no jump by t=20) ~ 2e-9; a missing trajectory would be a bug.
    assert_eq!(detections.len(), n_traj as usize);

    detections.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = detections.len() as f64;
    let mut ks = 0.0f64;
    for (i, t) in detections.iter().enumerate() {
        let cdf = 1.0 - (-t).exp();
        let lower = (cdf - i as f64 / n).abs();
        let upper = ((i + 1) as f64 / n - cdf).abs();
        ks = ks.max(lower).max(upper);
    }
    let critical_1pct = 1.628 / n.sqrt();
    assert!(
        ks < critical_1pct,
        "KS statistic {ks} exceeds 1% critical value {critical_1pct}"
    );
}

/// τ=0 statistical equivalence: ensemble means of every observable track
/// the master equation within 5 standard errors at all recorded times.
#[test]
fn markovian_ensemble_tracks_master_equation() {
    let model = preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap();
    let cfg = IntegrationConfig::new(2e-3, 10.0, 100).unwrap();
    let n_traj = 1000;
    let ensemble = ensemble_average(
        &model,
        FeedbackConfig::markovian(),
        &cfg,
        &InitialState::Pure(excited()),
        n_traj,
        7,
    )
    .unwrap();
    let l = build_feedback_liouvillian(&model).unwrap();
    let me = evolve(&l, &DensityMatrix::pure(&excited()).unwrap(), &cfg).unwrap();
    let se = ensemble.std_errors.as_ref().unwrap();

    for (t_idx, (t, rho)) in me.iter().enumerate() {
        assert!((ensemble.times[t_idx] - t).abs() < 1e-9);
        for (k, (label, op)) in model.observables().iter().enumerate() {
            let exact = rho.expectation(op).re;
            let diff = (ensemble.means[t_idx][k] - exact).abs();
            let band = 5.0 * se[t_idx][k] + 1e-12;
            assert!(
                diff <= band,
                "{label} at t={t}: |mean - ME| = {diff} > 5 SE = {band}"
            );
        }
    }
}

/// A delay of one time step is a dt-sized perturbation of the Markovian
/// ensemble: the gap between the two means shrinks linearly with dt.
#[test]
fn small_delay_perturbs_at_first_order() {
    let model = preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap();
    let n_traj = 2000;
    let gap = |dt: f64| {
        let cfg = IntegrationConfig::new(dt, 2.0, (0.25 / dt) as usize).unwrap();
        let run = |fb: FeedbackConfig| {
            ensemble_average(&model, fb, &cfg, &InitialState::Pure(excited()), n_traj, 77)
                .unwrap()
        };
        let markov = run(FeedbackConfig::markovian());
        let delayed = run(FeedbackConfig::from_delay(dt).unwrap());
        let mut worst = 0.0f64;
        for t_idx in 0..markov.times.len() {
            for k in 0..markov.labels.len() {
                worst = worst.max((markov.means[t_idx][k] - delayed.means[t_idx][k]).abs());
            }
        }
        worst
    };
    // Identical seeds on both sides cancel most sampling noise, leaving the
    // systematic O(dt) shift; C bounds gap/dt across the ladder.
    let c_bound = 30.0;
    for dt in [1e-2, 5e-3, 2.5e-3] {
        let g = gap(dt);
        assert!(g <= c_bound * dt, "dt={dt}: ensemble gap {g} not O(dt)");
    }
}
