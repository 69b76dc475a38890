//! Acceptance suite: the eight release criteria, one test each, every
//! test printing a single `criterion N (...): pass|FAIL` line. Tolerances
//! are pinned here and must not be loosened to make a failing build green.

use std::fs;
use std::process::Command;

use qfeedback_core::collision::{
    bin_annihilator, oracle_vs_delayed_trajectories, run_oracle, FieldDiscretization,
    DEFAULT_ALLOWANCE_COEFFICIENT,
};
use qfeedback_core::liouville::{build_feedback_liouvillian, evolve};
use qfeedback_core::model::{
    preset_cavity, preset_two_level, FeedbackConfig, IntegrationConfig, SystemModel, ZSpec,
};
use qfeedback_core::trajectory::{ensemble_average, run_trajectory, InitialState};
use qfeedback_core::{Complex64, DensityMatrix, Operator, StateVector};

fn criterion(number: usize, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {number} ({name}): pass"),
        Err(why) => {
            println!("criterion {number} ({name}): FAIL — {why}");
            panic!("criterion {number} ({name}) failed: {why}");
        }
    }
}

fn excited() -> StateVector {
    StateVector::basis(2, 0)
}

fn driven_feedback_model() -> SystemModel {
    preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap()
}

/// Independent standard-Lindblad construction: the generator's columns
/// are its action on matrix units, computed directly from the equation
/// of motion rather than through Kronecker identities.
fn lindblad_by_columns(h: &Operator, c: &Operator) -> Operator {
    let d = h.dim();
    let cdc = &c.dagger() * c;
    let mut entries = vec![Complex64::new(0.0, 0.0); d * d * d * d];
    for col in 0..d {
        for row in 0..d {
            let mut unit_entries = vec![Complex64::new(0.0, 0.0); d * d];
            unit_entries[row * d + col] = Complex64::new(1.0, 0.0);
            let unit = Operator::from_entries(d, unit_entries);
            let commut = &(h * &unit) - &(&unit * h);
            let jump = &(c * &unit) * &c.dagger();
            let anti = &(&cdc * &unit) + &(&unit * &cdc);
            let rhs = &(&commut.scale(Complex64::new(0.0, -1.0)) + &jump)
                - &anti.scale(Complex64::new(0.5, 0.0));
            // Column-stacking: vec index of entry (r, c) is c*d + r.
            let col_index = col * d + row;
            for cc in 0..d {
                for rr in 0..d {
                    entries[(cc * d + rr) * d * d + col_index] = rhs[(rr, cc)];
                }
            }
        }
    }
    Operator::from_entries(d * d, entries)
}

#[test]
fn criterion_1_zero_feedback_reduces_to_standard_lindblad() {
    criterion(1, "Z=0 feedback Liouvillian equals standard Lindblad", || {
        let models = [
            preset_two_level(2.0, 1.0, &ZSpec::Zero).map_err(|e| e.to_string())?,
            preset_cavity(4, 1.0, 0.0).map_err(|e| e.to_string())?,
        ];
        for model in &models {
            let fme = build_feedback_liouvillian(model).map_err(|e| e.to_string())?;
            let reference = lindblad_by_columns(model.hamiltonian(), model.collapse());
            let diff = fme.matrix().max_abs_diff(&reference);
            if diff > 1e-13 {
                return Err(format!("dim {}: max |L - L_ref| = {diff:e} > 1e-13", model.dim()));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_2_analytic_decay_and_rk4_order() {
    criterion(2, "pure decay matches e^{-t}; RK4 error ratio in [12, 20]", || {
        let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).map_err(|e| e.to_string())?;
        let l = build_feedback_liouvillian(&model).map_err(|e| e.to_string())?;
        let rho0 = DensityMatrix::pure(&excited()).map_err(|e| e.to_string())?;
        let pop = &model.observables()[1].1; // sigma_plus_sigma_minus

        let max_error = |dt: f64| -> Result<f64, String> {
            let cfg = IntegrationConfig::new(dt, 5.0, 1).map_err(|e| e.to_string())?;
            let series = evolve(&l, &rho0, &cfg).map_err(|e| e.to_string())?;
            Ok(series
                .iter()
                .map(|(t, rho)| (rho.expectation(pop).re - (-t).exp()).abs())
                .fold(0.0, f64::max))
        };

        let fine = max_error(1e-3)?;
        if fine > 1e-8 {
            return Err(format!("dt=1e-3: max |rho_ee - e^-t| = {fine:e} > 1e-8"));
        }
        // Order check at step sizes where truncation dominates roundoff.
        let coarse = max_error(0.05)?;
        let halved = max_error(0.025)?;
        let ratio = coarse / halved;
        if !(12.0..=20.0).contains(&ratio) {
            return Err(format!("halving ratio {ratio} outside [12, 20]"));
        }
        Ok(())
    });
}

#[test]
fn criterion_3_markovian_trajectories_track_master_equation() {
    criterion(3, "tau=0 ensemble within 5 SE of master equation", || {
        let model = driven_feedback_model();
        let cfg = IntegrationConfig::new(2e-3, 10.0, 250).map_err(|e| e.to_string())?;
        let n_traj = 4000;
        let ensemble = ensemble_average(
            &model,
            FeedbackConfig::markovian(),
            &cfg,
            &InitialState::Pure(excited()),
            n_traj,
            42,
        )
        .map_err(|e| e.to_string())?;
        let se = ensemble.std_errors.as_ref().expect("n_traj >= 2");

        let l = build_feedback_liouvillian(&model).map_err(|e| e.to_string())?;
        let rho0 = DensityMatrix::pure(&excited()).map_err(|e| e.to_string())?;
        let me = evolve(&l, &rho0, &cfg).map_err(|e| e.to_string())?;

        for (t_idx, (t, rho)) in me.iter().enumerate() {
            for (k, (label, op)) in model.observables().iter().enumerate() {
                let diff = (ensemble.means[t_idx][k] - rho.expectation(op).re).abs();
                let band = 5.0 * se[t_idx][k] + 1e-12;
                if diff > band {
                    return Err(format!("{label} at t={t}: |diff| = {diff:e} > 5 SE = {band:e}"));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_4_oracle_error_scales_linearly_in_dt() {
    criterion(4, "k=0 oracle vs master equation is O(dt)", || {
        let model = driven_feedback_model();
        let rho0 = DensityMatrix::pure(&excited()).map_err(|e| e.to_string())?;
        let t_final = 2.0;

        // High-accuracy master-equation reference on the shared 0.2 grid.
        let l = build_feedback_liouvillian(&model).map_err(|e| e.to_string())?;
        let ref_cfg = IntegrationConfig::new(2.5e-4, t_final, 800).map_err(|e| e.to_string())?;
        let reference = evolve(&l, &rho0, &ref_cfg).map_err(|e| e.to_string())?;

        let max_distance = |dt: f64, record_every: usize| -> Result<f64, String> {
            let disc = FieldDiscretization::new(dt, 0).map_err(|e| e.to_string())?;
            let oracle = run_oracle(&model, &disc, &rho0, t_final, record_every)
                .map_err(|e| e.to_string())?;
            if oracle.len() != reference.len() {
                return Err(format!(
                    "grid mismatch: {} oracle points vs {} reference",
                    oracle.len(),
                    reference.len()
                ));
            }
            let mut worst = 0.0f64;
            for ((t_o, rho_o), (t_r, rho_r)) in oracle.iter().zip(&reference) {
                if (t_o - t_r).abs() > 1e-9 {
                    return Err(format!("time mismatch {t_o} vs {t_r}"));
                }
                worst = worst.max(rho_o.trace_distance(rho_r).map_err(|e| e.to_string())?);
            }
            Ok(worst)
        };

        let coarse = max_distance(2e-3, 100)?;
        let fine = max_distance(1e-3, 200)?;
        let ratio = coarse / fine;
        if !(1.5..=2.5).contains(&ratio) {
            return Err(format!(
                "error ratio {ratio} outside [1.5, 2.5] (coarse {coarse:e}, fine {fine:e})"
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_5_delayed_trajectories_match_collision_oracle() {
    criterion(5, "k=2 delayed ensemble within 5 SE + C dt of oracle", || {
        let model = driven_feedback_model();
        let disc = FieldDiscretization::new(5e-3, 2).map_err(|e| e.to_string())?;
        let report = oracle_vs_delayed_trajectories(
            &model,
            &disc,
            &excited(),
            4000,
            42,
            3.0,
            40,
            DEFAULT_ALLOWANCE_COEFFICIENT,
        )
        .map_err(|e| e.to_string())?;
        if !report.pass {
            let detail: Vec<String> = report
                .per_observable
                .iter()
                .filter(|o| !o.pass)
                .map(|o| format!("{}: {:e} > {:e}", o.label, o.max_abs_diff, o.max_allowed))
                .collect();
            return Err(detail.join("; "));
        }
        Ok(())
    });
}

#[test]
fn criterion_6_vacuum_bin_moments_are_exact() {
    criterion(6, "vacuum bin moments <BB^dag>=1, others 0, exactly", || {
        let b = bin_annihilator();
        let vacuum = StateVector::basis(2, 0);
        let moments = [
            ("BB^dag", &b * &b.dagger(), 1.0),
            ("B^dag B", &b.dagger() * &b, 0.0),
            ("BB", &b * &b, 0.0),
            ("B^dag B^dag", &b.dagger() * &b.dagger(), 0.0),
        ];
        for (name, op, expected) in &moments {
            let value = vacuum.expectation(op);
            if value.re != *expected || value.im != 0.0 {
                return Err(format!("<{name}> = {value} != {expected} (must be exact)"));
            }
        }
        Ok(())
    });
}

/// Deterministic LCG for reproducible random models without touching the
/// trajectory RNG contract.
struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn operator(&mut self, dim: usize) -> Operator {
        let entries = (0..dim * dim)
            .map(|_| Complex64::new(self.next_f64(), self.next_f64()))
            .collect();
        Operator::from_entries(dim, entries)
    }

    fn hermitian(&mut self, dim: usize) -> Operator {
        let a = self.operator(dim);
        (&a + &a.dagger()).scale(Complex64::new(0.5, 0.0))
    }
}

fn check_model_invariants(model: &SystemModel, what: &str) -> Result<(), String> {
    let fail = |msg: String| Err(format!("{what}: {msg}"));

    let violations = model.validate();
    if !violations.is_empty() {
        return fail(format!("model invalid: {violations:?}"));
    }

    // Feedback unitary is unitary.
    let u = model.feedback_unitary().map_err(|e| format!("{what}: {e}"))?;
    let defect = (&u.dagger() * &u).max_abs_diff(&Operator::identity(model.dim()));
    if defect > 1e-12 {
        return fail(format!("e^-iZ unitarity defect {defect:e}"));
    }

    // Generator preserves trace.
    let l = build_feedback_liouvillian(model).map_err(|e| format!("{what}: {e}"))?;
    let trace_defect = l.trace_preservation_defect();
    if trace_defect > 1e-10 {
        return fail(format!("trace preservation defect {trace_defect:e}"));
    }

    // Master-equation evolution keeps states physical: the DensityMatrix
    // constructor inside evolve enforces trace 1, Hermiticity, and the
    // positivity floor; purity must stay <= 1.
    let cfg = IntegrationConfig::new(1e-3, 0.2, 50).map_err(|e| format!("{what}: {e}"))?;
    let rho0 = DensityMatrix::maximally_mixed(model.dim());
    let series = evolve(&l, &rho0, &cfg).map_err(|e| format!("{what}: evolve: {e}"))?;
    for (t, rho) in &series {
        if rho.purity() > 1.0 + 1e-10 {
            return fail(format!("purity {} > 1 at t={t}", rho.purity()));
        }
    }

    // Trajectories stay normalized and keep detection/feedback pairing.
    let tau = 5e-3;
    let (series, record) = run_trajectory(
        model,
        FeedbackConfig::from_delay(tau).map_err(|e| format!("{what}: {e}"))?,
        &IntegrationConfig::new(1e-3, 0.5, 100).map_err(|e| format!("{what}: {e}"))?,
        &InitialState::Pure(StateVector::basis(model.dim(), 0)),
        9,
    )
    .map_err(|e| format!("{what}: trajectory: {e}"))?;
    for (t, psi) in &series {
        if (psi.norm() - 1.0).abs() > 1e-10 {
            return fail(format!("trajectory norm drift at t={t}"));
        }
    }
    if record.detection_times.len() != record.feedback_times.len() {
        return fail("detection/feedback record length mismatch".into());
    }
    for (d, f) in record.detection_times.iter().zip(&record.feedback_times) {
        if (f - d - tau).abs() > 1e-12 {
            return fail(format!("feedback at {f} not detection {d} + tau"));
        }
    }
    Ok(())
}

#[test]
fn criterion_7_invariants_hold_on_presets_and_random_models() {
    criterion(7, "invariant suite on presets and 100 random models", || {
        check_model_invariants(&driven_feedback_model(), "two_level preset")?;
        check_model_invariants(
            &preset_cavity(4, 1.0, 0.7).map_err(|e| e.to_string())?,
            "cavity preset",
        )?;

        let mut lcg = Lcg(0x9e3779b97f4a7c15);
        for i in 0..100 {
            let dim = 2 + i % 3; // 2, 3, 4
            let h = lcg.hermitian(dim);
            let z = lcg.hermitian(dim);
            let c = lcg.operator(dim).scale(Complex64::new(0.7, 0.0));
            let model = SystemModel::new(h, c, z, vec![(String::from("p0"), {
                let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
                entries[0] = Complex64::new(1.0, 0.0);
                Operator::from_entries(dim, entries)
            })])
            .map_err(|e| format!("random model {i}: {e}"))?;
            check_model_invariants(&model, &format!("random model {i} (dim {dim})"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_8_csv_output_is_byte_identical() {
    criterion(8, "identical configs and seeds give byte-identical CSVs", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config_path = dir.path().join("run.json");
        fs::write(
            &config_path,
            r#"{
                "engine": "trajectory",
                "model": {"preset": "two_level", "omega": 2.0, "gamma": 1.0,
                          "Z": {"type": "sigma_x", "strength": 1.0}},
                "feedback": {"k": 1},
                "integration": {"dt": 5e-3, "t_final": 2.0, "record_every": 40},
                "n_traj": 200,
                "master_seed": 42
            }"#,
        )
        .map_err(|e| e.to_string())?;

        let run = |name: &str| -> Result<Vec<u8>, String> {
            let output_path = dir.path().join(name);
            let status = Command::new(env!("CARGO_BIN_EXE_qfeedback"))
                .args(["trajectory", "--config"])
                .arg(&config_path)
                .arg("--output")
                .arg(&output_path)
                .arg("--quiet")
                .status()
                .map_err(|e| e.to_string())?;
            if status.code() != Some(0) {
                return Err(format!("run exited with {:?}", status.code()));
            }
            fs::read(&output_path).map_err(|e| e.to_string())
        };

        let first = run("a.csv")?;
        let second = run("b.csv")?;
        if first != second {
            return Err("repeated runs produced different bytes".into());
        }
        if first.is_empty() {
            return Err("output is empty".into());
        }
        Ok(())
    });
}
