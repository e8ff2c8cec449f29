//! Synchronous-frame current regulator: one PI per axis plus back-EMF
//! feedforward, and the ideal-tracking prediction of the true currents.
//!
//! The regulator is only ever handed estimated currents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::error_constants;
use crate::frames::SynchronousCurrents;
use crate::plant::{back_emf, MotorParams, Voltages};
use crate::sensing::CurrentErrorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PiGains {
    pub kp_d: f64,
    pub ki_d: f64,
    pub kp_q: f64,
    pub ki_q: f64,
}

/// Pole-zero cancellation tuning: `kp = L·ω_bw`, `ki = R·ω_bw`, giving a
/// first-order closed loop at `ω_bw` on the nominal plant.
pub fn tune_bandwidth(params: &MotorParams, bandwidth: f64) -> PiGains {
    PiGains {
        kp_d: params.l_d * bandwidth,
        ki_d: params.resistance * bandwidth,
        kp_q: params.l_q * bandwidth,
        ki_q: params.resistance * bandwidth,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulatorConfig {
    pub gains: PiGains,
    /// Per-axis output clamp, volts.
    pub voltage_limit: f64,
    pub feedforward: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegulatorState {
    pub integrator_d: f64,
    pub integrator_q: f64,
    pub last_error: SynchronousCurrents,
    pub last_command: Voltages,
    /// Set when the last output was clamped on either axis.
    pub saturated: bool,
}

struct AxisOutput {
    integrator: f64,
    volts: f64,
    saturated: bool,
}

#[allow(clippy::too_many_arguments)]
fn pi_axis(
    integrator: f64,
    error: f64,
    last_error: f64,
    kp: f64,
    ki: f64,
    feedforward: f64,
    dt: f64,
    limit: f64,
) -> AxisOutput {
    let candidate = integrator + ki * dt * 0.5 * (error + last_error);
    let raw = kp * error + candidate + feedforward;
    if raw.abs() <= limit {
        return AxisOutput { integrator: candidate, volts: raw, saturated: false };
    }
    // clamp; hold the integrator if the error pushes further into the limit
    let integrator = if raw.signum() == error.signum() { integrator } else { candidate };
    let volts = (kp * error + integrator + feedforward).clamp(-limit, limit);
    AxisOutput { integrator, volts, saturated: true }
}

/// One regulator update. `estimated` is the current feedback the
/// controller believes; it never sees the true plant currents.
pub fn regulator_step(
    state: &RegulatorState,
    command: SynchronousCurrents,
    estimated: SynchronousCurrents,
    omega_e: f64,
    params: &MotorParams,
    config: &RegulatorConfig,
    dt: f64,
) -> (RegulatorState, Voltages) {
    let error = command - estimated;
    let ff = if config.feedforward { back_emf(omega_e, params) } else { Voltages::ZERO };
    let g = &config.gains;
    let d = pi_axis(state.integrator_d, error.d, state.last_error.d, g.kp_d, g.ki_d, ff.v_d, dt, config.voltage_limit);
    let q = pi_axis(state.integrator_q, error.q, state.last_error.q, g.kp_q, g.ki_q, ff.v_q, dt, config.voltage_limit);
    let volts = Voltages::new(d.volts, q.volts);
    let next = RegulatorState {
        integrator_d: d.integrator,
        integrator_q: q.integrator,
        last_error: error,
        last_command: volts,
        saturated: d.saturated || q.saturated,
    };
    (next, volts)
}

/// True currents the machine carries when the regulator drives the
/// corrupted estimate exactly onto the command:
/// `I = (M_θ + M_ig)⁻¹ (I* − m_io)`.
pub fn ideal_closed_loop(
    command: SynchronousCurrents,
    theta_e: f64,
    theta_e_hat: f64,
    spec: &CurrentErrorSpec,
) -> Result<SynchronousCurrents> {
    let k = error_constants(spec);
    let scaling = 1.0 + k.k_igc;
    // det(M_θ + M_ig) = (1 + K_igc)² − K_igp²
    if scaling - k.k_igp <= 1e-12 * (1.0 + k.k_igp) {
        return Err(Error::SingularGain { scaling, pulsation: k.k_igp });
    }
    let m = k.linear_part(theta_e, theta_e_hat);
    let rhs = command - k.offset_vector(theta_e_hat);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Ok(SynchronousCurrents::new((m[1][1] * rhs.d - m[0][1] * rhs.q) / det, (m[0][0] * rhs.q - m[1][0] * rhs.d) / det))
}
