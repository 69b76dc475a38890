use super::*;
use crate::linalg::{sigma_x, sigma_z, ONE};
use crate::liouville::{build_feedback_liouvillian, evolve};
use crate::model::{preset_two_level, ZSpec};
use alloc::vec;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn excited_rho() -> DensityMatrix {
    DensityMatrix::pure(&StateVector::basis(2, 0)).unwrap()
}

#[test]
fn vacuum_bin_moments_are_exact() {
    // ⟨0|BB†|0⟩ = 1, ⟨0|B†B|0⟩ = ⟨0|BB|0⟩ = ⟨0|B†B†|0⟩ = 0, exactly.
    let b = bin_annihilator();
    let vacuum = StateVector::basis(2, 0);
    assert_eq!(vacuum.expectation(&(&b * &b.dagger())), ONE);
    assert_eq!(vacuum.expectation(&(&b.dagger() * &b)), crate::linalg::ZERO);
    assert_eq!(vacuum.expectation(&(&b * &b)), crate::linalg::ZERO);
    assert_eq!(
        vacuum.expectation(&(&b.dagger() * &b.dagger())),
        crate::linalg::ZERO
    );
}

#[test]
fn bin_commutator_is_canonical_on_the_vacuum_sector() {
    // [B, B†] = diag(1, −1): the +1 on the vacuum level realizes the
    // canonical commutator; the −1 lives on the truncated photon level.
    let b = bin_annihilator();
    let comm = crate::linalg::commutator(&b, &b.dagger()).unwrap();
    assert_eq!(comm[(0, 0)], ONE);
}

#[test]
fn interaction_unitary_is_trivial_without_coupling() {
    let model = crate::model::SystemModel::new(
        Operator::zeros(2),
        Operator::zeros(2),
        Operator::zeros(2),
        vec![],
    )
    .unwrap();
    let u = interaction_unitary(&model, 1e-3).unwrap();
    assert!(u.max_abs_diff(&Operator::identity(4)) < 1e-14);
}

#[test]
fn interaction_unitary_is_unitary() {
    let model = preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap();
    let u = interaction_unitary(&model, 1e-2).unwrap();
    let gram = &u * &u.dagger();
    assert!(gram.max_abs_diff(&Operator::identity(4)) < 1e-12);
}

#[test]
fn emission_amplitude_is_sqrt_gamma_dt() {
    // |e⟩⊗|0⟩ → amplitude √(γ dt) + O(dt^{3/2}) on |g⟩⊗|1⟩.
    let gamma = 1.0;
    let model = preset_two_level(0.0, gamma, &ZSpec::Zero).unwrap();
    for dt in [1e-3, 1e-4] {
        let u = interaction_unitary(&model, dt).unwrap();
        let input = StateVector::basis(4, 0); // (s=e, b=0)
        let output = u.apply(&input);
        let amp = output.amplitudes()[3]; // (s=g, b=1): index 1*2+1
        let expected = (gamma * dt).sqrt();
        assert!(
            (amp.norm() - expected).abs() < 10.0 * dt.powf(1.5),
            "dt={dt}: amplitude {} vs {expected}",
            amp.norm()
        );
    }
}

#[test]
fn feedback_unitary_is_identity_without_z() {
    let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
    let u = feedback_unitary(&model).unwrap();
    assert!(u.max_abs_diff(&Operator::identity(4)) < 1e-14);
}

#[test]
fn feedback_unitary_block_structure() {
    // diag(I_D, e^{−iZ}) in the bin {|0⟩, |1⟩} basis.
    let model = preset_two_level(0.0, 1.0, &ZSpec::SigmaX(0.7)).unwrap();
    let u = feedback_unitary(&model).unwrap();
    let ez = model.feedback_unitary().unwrap();
    for s in 0..2 {
        for sp in 0..2 {
            // Bin empty: identity on the system.
            let empty = u[(s * 2, sp * 2)];
            let expected_empty = if s == sp { ONE } else { crate::linalg::ZERO };
            assert!((empty - expected_empty).norm() < 1e-12);
            // Bin occupied: e^{−iZ}.
            assert!((u[(s * 2 + 1, sp * 2 + 1)] - ez[(s, sp)]).norm() < 1e-12);
            // No bin-flip blocks.
            assert!(u[(s * 2, sp * 2 + 1)].norm() < 1e-13);
            assert!(u[(s * 2 + 1, sp * 2)].norm() < 1e-13);
        }
    }
}

#[test]
fn decoupled_field_leaves_pure_hamiltonian_evolution() {
    let model = crate::model::SystemModel::new(
        sigma_x(),
        Operator::zeros(2),
        sigma_z().scale(c64(0.4, 0.0)),
        vec![],
    )
    .unwrap();
    let disc = FieldDiscretization::new(1e-3, 1).unwrap();
    let t_final = 1.0;
    let series = run_oracle(&model, &disc, &excited_rho(), t_final, 200).unwrap();
    for (t, rho) in &series {
        let u = sigma_x().scale(c64(0.0, -t)).matrix_exp().unwrap();
        let expected = &(&u * excited_rho().operator()) * &u.dagger();
        assert!(rho.operator().max_abs_diff(&expected) < 1e-10, "t={t}");
    }
}

#[test]
fn oracle_reduced_states_are_valid() {
    let model = preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap();
    let disc = FieldDiscretization::new(5e-3, 2).unwrap();
    let series = run_oracle(&model, &disc, &excited_rho(), 2.0, 50).unwrap();
    for (_, rho) in &series {
        assert!(rho.operator().hermiticity_defect() < 1e-10);
        assert!((rho.operator().trace().re - 1.0).abs() < 1e-8);
        assert!(rho.operator().min_eigenvalue().unwrap() >= -1e-8);
    }
}

#[test]
fn markovian_oracle_tracks_master_equation() {
    // Coarse check here; the dt-halving convergence-ratio study lives in
    // the cross-validation suite.
    let model = preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap();
    let dt = 1e-3;
    let disc = FieldDiscretization::new(dt, 0).unwrap();
    let oracle = run_oracle(&model, &disc, &excited_rho(), 2.0, 100).unwrap();
    let l = build_feedback_liouvillian(&model).unwrap();
    let cfg = crate::model::IntegrationConfig::new(dt, 2.0, 100).unwrap();
    let me = evolve(&l, &excited_rho(), &cfg).unwrap();
    let mut worst = 0.0f64;
    for ((t1, a), (t2, b)) in oracle.iter().zip(&me) {
        assert!((t1 - t2).abs() < 1e-9);
        worst = worst.max(a.trace_distance(b).unwrap());
    }
    assert!(worst < 10.0 * dt, "max trace distance {worst} not O(dt)");
}

#[test]
fn one_bin_delay_is_a_dt_sized_perturbation() {
    let model = preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap();
    let dt = 1e-3;
    let run = |k: usize| {
        let disc = FieldDiscretization::new(dt, k).unwrap();
        run_oracle(&model, &disc, &excited_rho(), 1.0, 100).unwrap()
    };
    let k0 = run(0);
    let k1 = run(1);
    let mut worst = 0.0f64;
    for ((_, a), (_, b)) in k0.iter().zip(&k1) {
        worst = worst.max(a.trace_distance(b).unwrap());
    }
    assert!(worst > 0.0);
    assert!(worst < 20.0 * dt, "delay-by-one-bin difference {worst} not O(dt)");
}

#[test]
fn dimension_cap_is_enforced() {
    let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
    let disc = FieldDiscretization::new(1e-3, 3).unwrap().with_dimension_cap(16);
    let err = run_oracle(&model, &disc, &excited_rho(), 0.1, 10).unwrap_err();
    assert!(matches!(err, Error::DimensionCapExceeded { required: 32, cap: 16 }));
}

#[test]
fn comparison_requires_an_ensemble() {
    let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
    let disc = FieldDiscretization::new(1e-2, 0).unwrap();
    let err = oracle_vs_delayed_trajectories(
        &model,
        &disc,
        &StateVector::basis(2, 0),
        1,
        0,
        1.0,
        10,
        DEFAULT_ALLOWANCE_COEFFICIENT,
    )
    .unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)));
}

#[test]
fn zero_feedback_comparison_passes_for_any_delay() {
    // Z = 0 collapses the delay structure: both sides follow plain Lindblad
    // decay and must agree within bands.
    let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
    for k in [0usize, 2] {
        let disc = FieldDiscretization::new(1e-2, k).unwrap();
        let report = oracle_vs_delayed_trajectories(
            &model,
            &disc,
            &StateVector::basis(2, 0),
            600,
            42,
            3.0,
            25,
            DEFAULT_ALLOWANCE_COEFFICIENT,
        )
        .unwrap();
        assert!(report.pass, "k={k}: {:?}", report.per_observable);
    }
}
