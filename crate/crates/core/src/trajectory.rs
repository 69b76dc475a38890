//! Quantum-jump unraveling of the feedback master equation.
//!
//! At zero delay a detection applies the combined jump operator e^{−iZ}c in
//! one go. At finite delay the physical ordering is kept: the detection
//! applies c alone, the feedback unitary e^{−iZ} is queued and applied one
//! round-trip time later. The ensemble average of either picture is checked
//! against the master equation and the collision oracle elsewhere.
//!
//! Reproducibility contract: each trajectory owns a ChaCha8 stream whose
//! 32-byte seed is the little-endian master seed in bytes 0..8 and the
//! little-endian trajectory index in bytes 8..16 (remaining bytes zero).
//! Uniform draws are `(next_u64 >> 11) · 2⁻⁵³`. Ensemble reductions happen
//! in trajectory-index order, so results do not depend on scheduling.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::linalg::{Complex64, DensityMatrix, Operator, StateVector};
use crate::model::{FeedbackConfig, FeedbackMode, IntegrationConfig, SystemModel};
use crate::{Error, Result};

/// Deterministic per-trajectory random stream.
#[derive(Clone, Debug)]
pub struct TrajectoryRng {
    inner: rand_chacha::ChaCha8Rng,
}

impl TrajectoryRng {
    pub fn from_master(master_seed: u64, trajectory_index: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&trajectory_index.to_le_bytes());
        TrajectoryRng { inner: rand_chacha::ChaCha8Rng::from_seed(seed) }
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Conditioned pure state plus the delay bookkeeping.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    psi: StateVector,
    step_index: usize,
    dt: f64,
    pending: VecDeque<f64>,
    rng: TrajectoryRng,
}

impl TrajectoryState {
    pub fn new(psi: StateVector, dt: f64, rng: TrajectoryRng) -> Result<Self> {
        let mut psi = psi;
        psi.normalize()?;
        Ok(TrajectoryState { psi, step_index: 0, dt, pending: VecDeque::new(), rng })
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    /// Current time, reconstructed from the step counter so it never drifts.
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn pending_feedback(&self) -> impl Iterator<Item = &f64> {
        self.pending.iter()
    }
}

/// Detection and feedback-application audit trail. Feedback times are the
/// scheduled ones (detection + τ), so `feedback == detection + τ` holds
/// elementwise by construction; application happens at the first step
/// boundary that reaches the scheduled time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JumpRecord {
    pub detection_times: Vec<f64>,
    pub feedback_times: Vec<f64>,
    pub seed: u64,
}

/// The rotated collapse operator e^{−iZ}c of the zero-delay jump rule.
pub fn feedback_jump_operator(model: &SystemModel) -> Result<Operator> {
    Ok(&model.feedback_unitary()? * model.collapse())
}

/// Operators shared by every step of a trajectory, precomputed once.
pub struct StepOperators {
    feedback: FeedbackConfig,
    dt: f64,
    collapse: Operator,
    number: Operator, // c†c
    feedback_unitary: Operator,
    markovian_jump: Operator, // e^{−iZ} c
    no_jump: Operator,        // I − i dt H − ½ dt c†c
}

impl StepOperators {
    pub fn new(model: &SystemModel, feedback: FeedbackConfig, dt: f64) -> Result<Self> {
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let collapse = model.collapse().clone();
        let number = &collapse.dagger() * &collapse;
        let feedback_unitary = model.feedback_unitary()?;
        let markovian_jump = &feedback_unitary * &collapse;
        let d = model.dim();
        let no_jump = &(&Operator::identity(d)
            - &model.hamiltonian().scale(Complex64::new(0.0, dt)))
            - &number.scale(Complex64::new(0.5 * dt, 0.0));
        Ok(StepOperators {
            feedback,
            dt,
            collapse,
            number,
            feedback_unitary,
            markovian_jump,
            no_jump,
        })
    }

    /// One step of length dt: due feedback first, then the jump draw, then
    /// the first-order no-jump propagation; the jump draw consumes exactly
    /// one uniform variate either way.
    pub fn step(&self, state: &mut TrajectoryState, record: &mut JumpRecord) -> Result<()> {
        let u = state.rng.uniform();
        self.step_with_draw(state, record, u)
    }

    pub(crate) fn step_with_draw(
        &self,
        state: &mut TrajectoryState,
        record: &mut JumpRecord,
        u: f64,
    ) -> Result<()> {
        let t = state.time();
        // Feedback scheduled for this instant acts before new detections;
        // half a step of slack absorbs roundoff in detection + τ.
        while let Some(&due) = state.pending.front() {
            if due > t + 0.5 * self.dt {
                break;
            }
            state.pending.pop_front();
            let before = state.psi.norm();
            state.psi = self.feedback_unitary.apply(&state.psi);
            let drift = (state.psi.norm() - before).abs();
            if drift > 1e-12 {
                return Err(Error::InvariantBreach(format!(
                    "feedback unitary changed the norm by {drift:e}"
                )));
            }
        }

        let excitation = state.psi.expectation(&self.number).re;
        let p_jump = excitation * self.dt;
        if p_jump > 0.1 {
            return Err(Error::InvariantBreach(format!(
                "jump probability {p_jump} exceeds 0.1 at t={t}; reduce dt"
            )));
        }

        if u < p_jump {
            if excitation <= 0.0 {
                return Err(Error::ZeroProbabilityJump);
            }
            // Detections are stamped at the end of the step they occur in;
            // stamping at the start would bias the waiting-time law by a
            // whole γ·dt instead of O(dt²).
            let t_detect = t + self.dt;
            record.detection_times.push(t_detect);
            match self.feedback.mode() {
                FeedbackMode::Markovian => {
                    state.psi = self.markovian_jump.apply(&state.psi);
                    record.feedback_times.push(t_detect);
                }
                FeedbackMode::Delayed => {
                    state.psi = self.collapse.apply(&state.psi);
                    let due = t_detect + self.feedback.tau();
                    record.feedback_times.push(due);
                    state.pending.push_back(due);
                }
            }
            if state.psi.norm() == 0.0 {
                return Err(Error::ZeroProbabilityJump);
            }
        } else {
            state.psi = self.no_jump.apply(&state.psi);
        }
        state.psi.normalize()?;
        state.step_index += 1;
        Ok(())
    }
}

/// How a trajectory starts: a pure state, or a mixed state sampled from its
/// eigendecomposition once per trajectory.
#[derive(Clone, Debug)]
pub enum InitialState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl InitialState {
    /// Resolves to a pure state, consuming one uniform draw when mixed.
    fn sample(&self, rng: &mut TrajectoryRng) -> Result<StateVector> {
        match self {
            InitialState::Pure(psi) => Ok(psi.clone()),
            InitialState::Mixed(rho) => {
                let spectrum = rho.eigendecompose()?;
                let u = rng.uniform();
                let mut acc = 0.0;
                for (p, psi) in &spectrum {
                    acc += p;
                    if u < acc {
                        return Ok(psi.clone());
                    }
                }
                Ok(spectrum
                    .last()
                    .ok_or_else(|| {
                        Error::InvariantBreach(String::from("empty eigendecomposition"))
                    })?
                    .1
                    .clone())
            }
        }
    }
}

/// A single unraveled trajectory: the recorded conditioned states and the
/// jump audit trail. Bit-exact replay from the same inputs and seed.
pub fn run_trajectory(
    model: &SystemModel,
    feedback: FeedbackConfig,
    cfg: &IntegrationConfig,
    initial: &InitialState,
    seed: u64,
) -> Result<(Vec<(f64, StateVector)>, JumpRecord)> {
    let ops = StepOperators::new(model, feedback, cfg.dt)?;
    let mut rng = TrajectoryRng::from_master(seed, 0);
    let psi0 = initial.sample(&mut rng)?;
    if psi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: psi0.dim() });
    }
    let mut state = TrajectoryState::new(psi0, cfg.dt, rng)?;
    let mut record = JumpRecord { seed, ..Default::default() };
    let n_steps = cfg.n_steps();
    let mut series = Vec::with_capacity(n_steps / cfg.record_every + 2);
    series.push((0.0, state.psi.clone()));
    for step in 0..n_steps {
        ops.step(&mut state, &mut record)?;
        if (step + 1) % cfg.record_every == 0 || step + 1 == n_steps {
            let norm_drift = (state.psi.norm() - 1.0).abs();
            if norm_drift > 1e-10 {
                return Err(Error::InvariantBreach(format!(
                    "norm drift {norm_drift:e} at t={}",
                    state.time()
                )));
            }
            series.push((state.time(), state.psi.clone()));
        }
    }
    Ok((series, record))
}

/// Mean observables with standard errors over a deterministic ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// means[time_index][observable_index]
    pub means: Vec<Vec<f64>>,
    /// Standard errors, present only for n_traj ≥ 2.
    pub std_errors: Option<Vec<Vec<f64>>>,
    /// Ensemble-averaged density matrix at each recorded time.
    pub mean_states: Vec<Operator>,
    pub n_traj: usize,
    pub total_jumps: usize,
}

/// Averages `n_traj` trajectories; trajectory i uses the stream derived
/// from (master_seed, i), and sums are accumulated in index order so the
/// result is independent of any execution schedule.
pub fn ensemble_average(
    model: &SystemModel,
    feedback: FeedbackConfig,
    cfg: &IntegrationConfig,
    initial: &InitialState,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSeries> {
    if n_traj == 0 {
        return Err(Error::InvalidConfig(String::from("n_traj must be >= 1")));
    }
    let ops = StepOperators::new(model, feedback, cfg.dt)?;
    let observables: Vec<(String, Operator)> = model.observables().to_vec();
    let n_steps = cfg.n_steps();

    let mut times = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut sq_sums: Vec<Vec<f64>> = Vec::new();
    let mut state_sums: Vec<Operator> = Vec::new();
    let mut total_jumps = 0usize;

    for traj in 0..n_traj {
        let mut rng = TrajectoryRng::from_master(master_seed, traj as u64);
        let psi0 = initial.sample(&mut rng)?;
        let mut state = TrajectoryState::new(psi0, cfg.dt, rng)?;
        let mut record = JumpRecord { seed: master_seed, ..Default::default() };

        let record_point = |state: &TrajectoryState,
                                slot: usize,
                                times: &mut Vec<f64>,
                                sums: &mut Vec<Vec<f64>>,
                                sq_sums: &mut Vec<Vec<f64>>,
                                state_sums: &mut Vec<Operator>| {
            if traj == 0 {
                times.push(state.time());
                sums.push(alloc::vec![0.0; observables.len()]);
                sq_sums.push(alloc::vec![0.0; observables.len()]);
                state_sums.push(Operator::zeros(model.dim()));
            }
            for (k, (_, op)) in observables.iter().enumerate() {
                let value = state.psi.expectation(op).re;
                sums[slot][k] += value;
                sq_sums[slot][k] += value * value;
            }
            state_sums[slot] = &state_sums[slot] + &state.psi.projector();
        };

        let mut slot = 0;
        record_point(&state, slot, &mut times, &mut sums, &mut sq_sums, &mut state_sums);
        slot += 1;
        for step in 0..n_steps {
            ops.step(&mut state, &mut record)?;
            if (step + 1) % cfg.record_every == 0 || step + 1 == n_steps {
                record_point(&state, slot, &mut times, &mut sums, &mut sq_sums, &mut state_sums);
                slot += 1;
            }
        }
        total_jumps += record.detection_times.len();
    }

    let n = n_traj as f64;
    let means: Vec<Vec<f64>> = sums.iter().map(|row| row.iter().map(|s| s / n).collect()).collect();
    let std_errors = if n_traj >= 2 {
        Some(
            sums.iter()
                .zip(&sq_sums)
                .map(|(srow, qrow)| {
                    srow.iter()
                        .zip(qrow)
                        .map(|(&s, &q)| {
                            let mean = s / n;
                            let var = ((q / n) - mean * mean).max(0.0) * n / (n - 1.0);
                            num_traits::Float::sqrt(var / n)
                        })
                        .collect()
                })
                .collect(),
        )
    } else {
        None
    };
    let mean_states = state_sums
        .into_iter()
        .map(|op| op.scale(Complex64::new(1.0 / n, 0.0)))
        .collect();
    Ok(EnsembleSeries {
        times,
        labels: observables.into_iter().map(|(l, _)| l).collect(),
        means,
        std_errors,
        mean_states,
        n_traj,
        total_jumps,
    })
}
