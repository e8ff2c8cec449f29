use serde::{Deserialize, Serialize};

use super::scenario::{Mode, Scenario};
use super::trace::{Trace, TraceRow};
use crate::control::{ideal_closed_loop, regulator_step, tune_bandwidth, RegulatorConfig, RegulatorState};
use crate::error::{Error, Result};
use crate::estimation::{error_constants, predicted_orders, ErrorDecomposition, PredictedLine};
use crate::frames::{inverse_park_abc, park_abc, PhaseCurrents, SynchronousCurrents};
use crate::plant::{step, terminal_voltage, torque, PlantState, Voltages};
use crate::sensing::{measure_currents, position_estimate};
use crate::spectral::{parseval_residual, spectrum, Spectrum};

/// Channels whose spectra accompany every run.
pub const SPECTRUM_CHANNELS: [&str; 4] = ["id_est", "iq_est", "id", "iq"];

/// Currents beyond this multiple of the command scale abort a closed-loop run.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

/// Settling window discarded before closed-loop statistics: the longer of
/// this many `1/ω_bw` and [`SETTLING_TIME_CONSTANTS`] electrical time
/// constants. A position error δ tilts the fast pole to `-ω_bw·e^{-jδ}` and
/// breaks the PI zero's cancellation of the `R/L` pole, which then lingers
/// with a small residue.
pub const SETTLING_BANDWIDTHS: f64 = 10.0;
pub const SETTLING_TIME_CONSTANTS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpectrum {
    pub channel: String,
    pub spectrum: Spectrum,
    pub parseval_residual: f64,
}

/// Steady-window statistics of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopReport {
    pub settle_time_s: f64,
    pub window_samples: usize,
    pub mean_true: SynchronousCurrents,
    pub mean_estimated: SynchronousCurrents,
    pub mean_ideal: SynchronousCurrents,
    /// Largest `|true − ideal_closed_loop|` over the window, amperes.
    pub max_true_vs_ideal: f64,
    /// Largest `|estimated − command|` over the window, amperes.
    pub max_estimated_vs_command: f64,
    /// Peak-to-peak spread of the true and estimated currents (largest of d, q).
    pub true_ripple_pp: f64,
    pub estimated_ripple_pp: f64,
    /// Whether any regulator output was clamped inside the window.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: Scenario,
    pub constants: ErrorDecomposition,
    pub trace: Trace,
    pub spectra: Vec<ChannelSpectrum>,
    /// `Err` carries the reason the sideband expansion was not applicable.
    pub predicted_orders: std::result::Result<Vec<PredictedLine>, String>,
    pub closed_loop: Option<ClosedLoopReport>,
    /// Number of regulator updates executed. Zero for open loop.
    pub regulator_calls: u64,
}

impl RunResult {
    pub fn spectrum(&self, channel: &str) -> Option<&Spectrum> {
        self.spectra.iter().find(|s| s.channel == channel).map(|s| &s.spectrum)
    }
}

struct Instant {
    theta_m: f64,
    theta_e: f64,
    theta_e_hat: f64,
    true_abc: PhaseCurrents,
    measured: PhaseCurrents,
    estimated: SynchronousCurrents,
}

fn sense(s: &Scenario, t: f64, true_dq: SynchronousCurrents) -> Instant {
    let theta_m = s.omega_m() * t;
    let theta_e = s.motor.pole_pairs as f64 * theta_m;
    let theta_e_hat = position_estimate(theta_m, &s.motor, &s.position_error);
    let true_abc = inverse_park_abc(true_dq, theta_e);
    let measured = measure_currents(true_abc, &s.current_error);
    let estimated = park_abc(measured, theta_e_hat).dq;
    Instant { theta_m, theta_e, theta_e_hat, true_abc, measured, estimated }
}

fn row(s: &Scenario, t: f64, x: SynchronousCurrents, inst: &Instant, v: Voltages) -> TraceRow {
    TraceRow {
        t,
        theta_m: inst.theta_m,
        theta_e: inst.theta_e,
        theta_e_hat: inst.theta_e_hat,
        ia: inst.true_abc.a,
        ib: inst.true_abc.b,
        ic: inst.true_abc.c,
        ia_m: inst.measured.a,
        ib_m: inst.measured.b,
        ic_m: inst.measured.c,
        id: x.d,
        iq: x.q,
        id_est: inst.estimated.d,
        iq_est: inst.estimated.q,
        vd: v.v_d,
        vq: v.v_q,
        torque: torque(x, &s.motor),
    }
}

fn finish(
    s: &Scenario,
    trace: Trace,
    closed_loop: Option<ClosedLoopReport>,
    regulator_calls: u64,
) -> Result<RunResult> {
    let mut spectra = Vec::with_capacity(SPECTRUM_CHANNELS.len());
    for channel in SPECTRUM_CHANNELS {
        let ts = trace.series(channel)?;
        let spec = spectrum(&ts, s.omega_m())?;
        let residual = parseval_residual(&ts, &spec);
        spectra.push(ChannelSpectrum { channel: channel.to_string(), spectrum: spec, parseval_residual: residual });
    }
    let predicted =
        predicted_orders(&s.position_error, &s.current_error, &s.motor, s.command_dq()).map_err(|e| e.to_string());
    Ok(RunResult {
        scenario: s.clone(),
        constants: error_constants(&s.current_error),
        trace,
        spectra,
        predicted_orders: predicted,
        closed_loop,
        regulator_calls,
    })
}

/// Estimation chain with the true currents pinned to the command: the
/// machine acts as an ideal current source and no regulator runs.
pub fn run_open_loop(s: &Scenario) -> Result<RunResult> {
    if s.mode != Mode::OpenLoop {
        return Err(Error::InvalidConfig("run_open_loop needs mode = open_loop".into()));
    }
    s.validate()?;
    let x = s.command_dq();
    let v = terminal_voltage(x, s.omega_e(), &s.motor);
    let dt = s.sample_period();
    let rows = (0..s.sample_count())
        .map(|k| {
            let t = k as f64 * dt;
            row(s, t, x, &sense(s, t, x), v)
        })
        .collect();
    finish(s, Trace { dt, rows }, None, 0)
}

/// Full loop: sensing → estimation → PI regulator → inverter commutated at
/// the estimated angle → RK4 plant.
pub fn run_closed_loop(s: &Scenario) -> Result<RunResult> {
    if s.mode != Mode::ClosedLoop {
        return Err(Error::InvalidConfig("run_closed_loop needs mode = closed_loop".into()));
    }
    s.validate()?;
    let bandwidth = s.bandwidth()?;
    let config = RegulatorConfig {
        gains: tune_bandwidth(&s.motor, bandwidth),
        voltage_limit: s.voltage_limit()?,
        feedforward: s.back_emf_feedforward,
    };
    let command = s.command_dq();
    let omega_e = s.omega_e();
    let substeps = s.substeps();
    let dt = s.control_period();
    let limit = DIVERGENCE_FACTOR * command.norm().max(1.0);

    let n = s.sample_count();
    let settle_time = (SETTLING_BANDWIDTHS / bandwidth).max(SETTLING_TIME_CONSTANTS * s.motor.time_constant());
    let mut rows = Vec::with_capacity(n);
    let mut saturated_in_window = false;
    let mut x = PlantState::ZERO;
    let mut reg = RegulatorState::default();
    let mut calls = 0u64;

    for k in 0..n * substeps {
        let t = k as f64 * dt;
        let inst = sense(s, t, x);
        let (next, v_cmd) = regulator_step(&reg, command, inst.estimated, omega_e, &s.motor, &config, dt);
        reg = next;
        calls += 1;
        if reg.saturated && t >= settle_time {
            saturated_in_window = true;
        }
        if k % substeps == 0 {
            rows.push(row(s, t, x, &inst, v_cmd));
        }
        let v_plant = v_cmd.rotate(inst.theta_e_hat, inst.theta_e);
        x = step(x, v_plant, omega_e, dt, &s.motor)?;
        let magnitude = x.norm();
        if magnitude.is_nan() || magnitude > limit {
            return Err(Error::Divergence { time: t + dt, magnitude, limit });
        }
    }

    let trace = Trace { dt: s.sample_period(), rows };
    let report = closed_loop_report(s, &trace, settle_time, saturated_in_window)?;
    finish(s, trace, Some(report), calls)
}

fn closed_loop_report(s: &Scenario, trace: &Trace, settle_time: f64, saturated: bool) -> Result<ClosedLoopReport> {
    let command = s.command_dq();
    let window: Vec<&TraceRow> = trace.rows.iter().filter(|r| r.t >= settle_time).collect();
    if window.is_empty() {
        return Err(Error::InvalidConfig("settling window covers the whole record".into()));
    }
    let count = window.len() as f64;
    let mut sum_true = SynchronousCurrents::ZERO;
    let mut sum_est = SynchronousCurrents::ZERO;
    let mut sum_ideal = SynchronousCurrents::ZERO;
    let mut max_ideal: f64 = 0.0;
    let mut max_cmd: f64 = 0.0;
    let mut true_range = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let mut est_range = true_range;
    let widen = |r: &mut [f64; 4], v: SynchronousCurrents| {
        r[0] = r[0].min(v.d);
        r[1] = r[1].max(v.d);
        r[2] = r[2].min(v.q);
        r[3] = r[3].max(v.q);
    };
    for r in &window {
        let truth = SynchronousCurrents::new(r.id, r.iq);
        let est = SynchronousCurrents::new(r.id_est, r.iq_est);
        let ideal = ideal_closed_loop(command, r.theta_e, r.theta_e_hat, &s.current_error)?;
        sum_true = sum_true + truth;
        sum_est = sum_est + est;
        sum_ideal = sum_ideal + ideal;
        max_ideal = max_ideal.max((truth - ideal).norm());
        max_cmd = max_cmd.max((est - command).norm());
        widen(&mut true_range, truth);
        widen(&mut est_range, est);
    }
    let pp = |r: [f64; 4]| (r[1] - r[0]).max(r[3] - r[2]);
    Ok(ClosedLoopReport {
        settle_time_s: settle_time,
        window_samples: window.len(),
        mean_true: (1.0 / count) * sum_true,
        mean_estimated: (1.0 / count) * sum_est,
        mean_ideal: (1.0 / count) * sum_ideal,
        max_true_vs_ideal: max_ideal,
        max_estimated_vs_command: max_cmd,
        true_ripple_pp: pp(true_range),
        estimated_ripple_pp: pp(est_range),
        saturated,
    })
}

/// Dispatch on the scenario's mode.
pub fn run(s: &Scenario) -> Result<RunResult> {
    match s.mode {
        Mode::OpenLoop => run_open_loop(s),
        Mode::ClosedLoop => run_closed_loop(s),
    }
}
