//! dq-frame electrical model of a PMSM driven at an imposed speed.
//!
//! The voltage equation is
//!
//! ```text
//! [v_d]   [L_d s + R    ω_e L_q ] [i_d]   [   0    ]
//! [v_q] = [-ω_e L_d    L_q s + R] [i_q] + [ω_e λ_m ]
//! ```
//!
//! Note the off-diagonal signs: the `v_d` row carries `+ω_e L_q i_q` and the
//! `v_q` row `-ω_e L_d i_d`, the opposite of the usual textbook
//! placement. This sign convention is kept deliberately; the steady-state solve, the
//! derivative and the RK4 step all use the same matrix.
//!
//! Speed is exogenous. There is no mechanical state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::SynchronousCurrents;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    #[serde(rename = "r_ohm")]
    pub resistance: f64,
    #[serde(rename = "l_d_henry")]
    pub l_d: f64,
    #[serde(rename = "l_q_henry")]
    pub l_q: f64,
    #[serde(rename = "lambda_m_weber")]
    pub flux_linkage: f64,
    pub pole_pairs: u32,
}

impl MotorParams {
    /// 9-slot, 6-pole non-salient test machine.
    pub const REFERENCE: MotorParams =
        MotorParams { resistance: 0.0106, l_d: 59.45e-6, l_q: 59.45e-6, flux_linkage: 0.0077, pole_pairs: 3 };

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.resistance) {
            return Err(Error::InvalidConfig(format!("resistance must be > 0, got {}", self.resistance)));
        }
        if !ok(self.l_d) || !ok(self.l_q) {
            return Err(Error::InvalidConfig(format!(
                "inductances must be > 0, got L_d = {}, L_q = {}",
                self.l_d, self.l_q
            )));
        }
        if !self.flux_linkage.is_finite() || self.flux_linkage < 0.0 {
            return Err(Error::InvalidConfig(format!("flux linkage must be >= 0, got {}", self.flux_linkage)));
        }
        if self.pole_pairs < 1 {
            return Err(Error::InvalidConfig("pole_pairs must be >= 1".into()));
        }
        Ok(())
    }

    /// Slowest electrical time constant, `max(L_d, L_q) / R`.
    pub fn time_constant(&self) -> f64 {
        self.l_d.max(self.l_q) / self.resistance
    }

    /// Largest step accepted by [`step`].
    pub fn max_step(&self) -> f64 {
        0.2 * self.l_d.min(self.l_q) / self.resistance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Voltages {
    pub v_d: f64,
    pub v_q: f64,
}

impl Voltages {
    pub const ZERO: Self = Self { v_d: 0.0, v_q: 0.0 };

    pub const fn new(v_d: f64, v_q: f64) -> Self {
        Self { v_d, v_q }
    }

    /// Rotate from the frame at angle `from` into the frame at angle `to`.
    pub fn rotate(self, from: f64, to: f64) -> Self {
        let (sin, cos) = (to - from).sin_cos();
        Self::new(cos * self.v_d + sin * self.v_q, -sin * self.v_d + cos * self.v_q)
    }
}

/// dq currents carried by the machine.
pub type PlantState = SynchronousCurrents;

pub fn back_emf(omega_e: f64, params: &MotorParams) -> Voltages {
    Voltages::new(0.0, omega_e * params.flux_linkage)
}

pub fn derivative(state: PlantState, volts: Voltages, omega_e: f64, params: &MotorParams) -> PlantState {
    let r = params.resistance;
    let di_d = (volts.v_d - r * state.d - omega_e * params.l_q * state.q) / params.l_d;
    let di_q = (volts.v_q - r * state.q + omega_e * params.l_d * state.d - omega_e * params.flux_linkage) / params.l_q;
    PlantState::new(di_d, di_q)
}

/// Terminal voltage that holds `state` constant (`s = 0`).
pub fn terminal_voltage(state: PlantState, omega_e: f64, params: &MotorParams) -> Voltages {
    let r = params.resistance;
    Voltages::new(
        r * state.d + omega_e * params.l_q * state.q,
        -omega_e * params.l_d * state.d + r * state.q + omega_e * params.flux_linkage,
    )
}

/// Static solve of the voltage equation at `s = 0`. The determinant is
/// `R² + ω_e² L_d L_q`, which is positive for any `R > 0`.
pub fn steady_state(volts: Voltages, omega_e: f64, params: &MotorParams) -> PlantState {
    let r = params.resistance;
    let a12 = omega_e * params.l_q;
    let a21 = -omega_e * params.l_d;
    let rhs_d = volts.v_d;
    let rhs_q = volts.v_q - omega_e * params.flux_linkage;
    let det = r * r - a12 * a21;
    PlantState::new((r * rhs_d - a12 * rhs_q) / det, (r * rhs_q - a21 * rhs_d) / det)
}

/// One classical RK4 step with voltages held over the interval.
pub fn step(state: PlantState, volts: Voltages, omega_e: f64, dt: f64, params: &MotorParams) -> Result<PlantState> {
    let max = params.max_step();
    if dt == 0.0 {
        return Ok(state);
    }
    if !(dt > 0.0 && dt <= max) {
        return Err(Error::InvalidTimeStep { dt, max });
    }
    let f = |x: PlantState| derivative(x, volts, omega_e, params);
    let k1 = f(state);
    let k2 = f(state + (0.5 * dt) * k1);
    let k3 = f(state + (0.5 * dt) * k2);
    let k4 = f(state + dt * k3);
    Ok(state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Electromagnetic torque, `1.5 p (λ_m i_q + (L_d - L_q) i_d i_q)`.
pub fn torque(state: PlantState, params: &MotorParams) -> f64 {
    1.5 * params.pole_pairs as f64 * (params.flux_linkage * state.q + (params.l_d - params.l_q) * state.d * state.q)
}
