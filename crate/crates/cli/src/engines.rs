//! Engine dispatch: each engine turns a resolved run into a numeric
//! table; the compare engine additionally produces a verdict and a
//! per-leg summary for the standard error stream.

use qfeedback_core::collision::{
    oracle_vs_delayed_trajectories, run_oracle, FieldDiscretization, DEFAULT_ALLOWANCE_COEFFICIENT,
};
use qfeedback_core::liouville::{build_feedback_liouvillian, evolve};
use qfeedback_core::model::FeedbackConfig;
use qfeedback_core::trajectory::{ensemble_average, InitialState};
use qfeedback_core::{DensityMatrix, Operator};

use crate::config::{from_core, CliError, Engine, ResolvedRun, RunInitial};

/// Trace-distance allowance coefficient for the oracle↔master leg of the
/// compare engine: max-over-time distance must stay below this times dt.
pub const ORACLE_MASTER_COEFFICIENT: f64 = 10.0;

/// Column-labelled numeric table, one row per recorded time.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Result of any engine run: the CSV table, a pass/fail verdict (always
/// pass for the non-compare engines), and summary lines for stderr.
pub struct EngineOutcome {
    pub table: Table,
    pub pass: bool,
    pub summary: Vec<String>,
}

fn state_row(t: f64, rho: &DensityMatrix, observables: &[(String, Operator)]) -> Vec<f64> {
    let mut row = Vec::with_capacity(observables.len() + 3);
    row.push(t);
    for (_, op) in observables {
        row.push(rho.expectation(op).re);
    }
    row.push(rho.operator().trace().re);
    row.push(rho.purity());
    row
}

fn state_header(observables: &[(String, Operator)]) -> Vec<String> {
    let mut header = vec![String::from("time")];
    header.extend(observables.iter().map(|(l, _)| l.clone()));
    header.push(String::from("trace"));
    header.push(String::from("purity"));
    header
}

fn density_series_outcome(
    series: &[(f64, DensityMatrix)],
    observables: &[(String, Operator)],
) -> EngineOutcome {
    EngineOutcome {
        table: Table {
            header: state_header(observables),
            rows: series.iter().map(|(t, rho)| state_row(*t, rho, observables)).collect(),
        },
        pass: true,
        summary: Vec::new(),
    }
}

fn core_initial(initial: &RunInitial) -> InitialState {
    match initial {
        RunInitial::Pure(psi) => InitialState::Pure(psi.clone()),
        RunInitial::Mixed(rho) => InitialState::Mixed(rho.clone()),
    }
}

pub fn run_master(run: &ResolvedRun) -> Result<EngineOutcome, CliError> {
    let l = build_feedback_liouvillian(&run.model).map_err(from_core)?;
    let rho0 = run.initial.density()?;
    let series = evolve(&l, &rho0, &run.integration).map_err(from_core)?;
    Ok(density_series_outcome(&series, run.model.observables()))
}

pub fn run_trajectory_engine(run: &ResolvedRun) -> Result<EngineOutcome, CliError> {
    let n_traj = run.n_traj.expect("resolve() enforces n_traj for trajectory");
    let feedback = if run.tau == 0.0 {
        FeedbackConfig::markovian()
    } else {
        FeedbackConfig::from_delay(run.tau).map_err(from_core)?
    };
    let ensemble = ensemble_average(
        &run.model,
        feedback,
        &run.integration,
        &core_initial(&run.initial),
        n_traj,
        run.master_seed,
    )
    .map_err(from_core)?;

    let observables = run.model.observables();
    let mut header = vec![String::from("time")];
    for (label, _) in observables {
        header.push(label.clone());
        if ensemble.std_errors.is_some() {
            header.push(format!("{label}_se"));
        }
    }
    header.push(String::from("trace"));
    header.push(String::from("purity"));

    let mut rows = Vec::with_capacity(ensemble.times.len());
    for (t_idx, &t) in ensemble.times.iter().enumerate() {
        let mut row = Vec::with_capacity(header.len());
        row.push(t);
        for k in 0..observables.len() {
            row.push(ensemble.means[t_idx][k]);
            if let Some(se) = &ensemble.std_errors {
                row.push(se[t_idx][k]);
            }
        }
        let mean = &ensemble.mean_states[t_idx];
        row.push(mean.trace().re);
        row.push((mean * mean).trace().re);
        rows.push(row);
    }
    Ok(EngineOutcome { table: Table { header, rows }, pass: true, summary: Vec::new() })
}

pub fn run_oracle_engine(run: &ResolvedRun) -> Result<EngineOutcome, CliError> {
    let k = run.delay_bins.expect("resolve() enforces k for oracle");
    let disc = FieldDiscretization::new(run.integration.dt, k).map_err(from_core)?;
    let rho0 = run.initial.density()?;
    let series = run_oracle(
        &run.model,
        &disc,
        &rho0,
        run.integration.t_final,
        run.integration.record_every,
    )
    .map_err(from_core)?;
    Ok(density_series_outcome(&series, run.model.observables()))
}

/// Bundles the three cross-engine checks: Markovian trajectories against
/// the master equation (5·SE bands), the k=0 collision oracle against the
/// master equation (O(dt) trace distance), and delayed trajectories
/// against the k-bin oracle (5·SE + C·dt bands).
pub fn run_compare(run: &ResolvedRun) -> Result<EngineOutcome, CliError> {
    let n_traj = run.n_traj.expect("resolve() enforces n_traj for compare");
    let k = run.delay_bins.expect("resolve() enforces k for compare");
    let RunInitial::Pure(psi0) = &run.initial else {
        return Err(CliError::Config(vec![String::from(
            "initial: compare engine requires a pure initial state",
        )]));
    };
    let cfg = &run.integration;
    let observables = run.model.observables();
    let rho0 = DensityMatrix::pure(psi0).map_err(from_core)?;

    let l = build_feedback_liouvillian(&run.model).map_err(from_core)?;
    let me = evolve(&l, &rho0, cfg).map_err(from_core)?;

    // Leg 1: τ=0 unraveling vs the master equation, within 5 SE.
    let ensemble = ensemble_average(
        &run.model,
        FeedbackConfig::markovian(),
        cfg,
        &InitialState::Pure(psi0.clone()),
        n_traj,
        run.master_seed,
    )
    .map_err(from_core)?;
    let se = ensemble
        .std_errors
        .as_ref()
        .expect("n_traj >= 2 enforced for compare");

    let mut leg1_pass = true;
    let mut leg1_worst: f64 = 0.0; // |diff| / band
    let mut leg1_diffs: Vec<Vec<f64>> = Vec::with_capacity(me.len());
    for (t_idx, (_, rho)) in me.iter().enumerate() {
        let mut row = Vec::with_capacity(observables.len());
        for (obs_idx, (_, op)) in observables.iter().enumerate() {
            let diff = (ensemble.means[t_idx][obs_idx] - rho.expectation(op).re).abs();
            let band = 5.0 * se[t_idx][obs_idx] + 1e-12;
            leg1_worst = leg1_worst.max(diff / band);
            if diff > band {
                leg1_pass = false;
            }
            row.push(diff);
        }
        leg1_diffs.push(row);
    }

    // Leg 2: zero-delay collision oracle vs the master equation, O(dt).
    let disc0 = FieldDiscretization::new(cfg.dt, 0).map_err(from_core)?;
    let oracle0 =
        run_oracle(&run.model, &disc0, &rho0, cfg.t_final, cfg.record_every).map_err(from_core)?;
    if oracle0.len() != me.len() {
        return Err(CliError::Numeric(format!(
            "recording mismatch: oracle {} points, master equation {}",
            oracle0.len(),
            me.len()
        )));
    }
    let leg2_band = ORACLE_MASTER_COEFFICIENT * cfg.dt;
    let mut leg2_worst: f64 = 0.0;
    let mut leg2_distances = Vec::with_capacity(me.len());
    for ((_, rho_me), (_, rho_or)) in me.iter().zip(&oracle0) {
        let d = rho_me.trace_distance(rho_or).map_err(from_core)?;
        leg2_worst = leg2_worst.max(d);
        leg2_distances.push(d);
    }
    let leg2_pass = leg2_worst <= leg2_band;

    // Leg 3: delayed trajectories vs the k-bin oracle, 5·SE + C·dt.
    let disc = FieldDiscretization::new(cfg.dt, k).map_err(from_core)?;
    let report = oracle_vs_delayed_trajectories(
        &run.model,
        &disc,
        psi0,
        n_traj,
        run.master_seed,
        cfg.t_final,
        cfg.record_every,
        DEFAULT_ALLOWANCE_COEFFICIENT,
    )
    .map_err(from_core)?;

    let mut header = vec![String::from("time")];
    for (label, _) in observables {
        header.push(format!("{label}_diff_traj_me"));
        header.push(format!("{label}_diff_traj_oracle"));
    }
    header.push(String::from("trace_distance_oracle_me"));

    let mut rows = Vec::with_capacity(me.len());
    for t_idx in 0..me.len() {
        let mut row = Vec::with_capacity(header.len());
        row.push(me[t_idx].0);
        for obs_idx in 0..observables.len() {
            row.push(leg1_diffs[t_idx][obs_idx]);
            row.push(
                (report.oracle_values[t_idx][obs_idx] - report.ensemble_means[t_idx][obs_idx])
                    .abs(),
            );
        }
        row.push(leg2_distances[t_idx]);
        rows.push(row);
    }

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut summary = vec![
        format!(
            "compare trajectory<->master (tau=0, n_traj={n_traj}): {} (worst |diff|/band = {leg1_worst:.3})",
            verdict(leg1_pass)
        ),
        format!(
            "compare oracle<->master (k=0): {} (max trace distance {leg2_worst:.3e} vs band {leg2_band:.3e})",
            verdict(leg2_pass)
        ),
        format!(
            "compare trajectory<->oracle (k={k}, tau={}): {}",
            disc.tau(),
            verdict(report.pass)
        ),
    ];
    for obs in &report.per_observable {
        summary.push(format!(
            "  {}: {} (max |diff| {:.3e} vs allowed {:.3e})",
            obs.label,
            verdict(obs.pass),
            obs.max_abs_diff,
            obs.max_allowed
        ));
    }
    let pass = leg1_pass && leg2_pass && report.pass;
    summary.push(format!("compare overall: {}", verdict(pass)));

    Ok(EngineOutcome { table: Table { header, rows }, pass, summary })
}

pub fn dispatch(run: &ResolvedRun) -> Result<EngineOutcome, CliError> {
    match run.engine {
        Engine::Master => run_master(run),
        Engine::Trajectory => run_trajectory_engine(run),
        Engine::Oracle => run_oracle_engine(run),
        Engine::Compare => run_compare(run),
    }
}
