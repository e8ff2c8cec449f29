use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::SynchronousCurrents;
use crate::plant::MotorParams;
use crate::sensing::{CurrentErrorSpec, PositionErrorSpec};
use crate::spectral::MIN_REVOLUTIONS;

/// Minimum samples per period of the electrical fundamental.
pub const MIN_SAMPLES_PER_ELECTRICAL_PERIOD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OpenLoop,
    ClosedLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSpec {
    pub i_d_amp: f64,
    pub i_q_amp: f64,
}

impl From<CommandSpec> for SynchronousCurrents {
    fn from(c: CommandSpec) -> Self {
        SynchronousCurrents::new(c.i_d_amp, c.i_q_amp)
    }
}

fn default_true() -> bool {
    true
}

/// One simulation run. Every quantity carries its unit in the key name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub motor: MotorParams,
    pub speed_rpm: f64,
    pub command: CommandSpec,
    #[serde(default)]
    pub position_error: PositionErrorSpec,
    #[serde(default)]
    pub current_error: CurrentErrorSpec,
    pub mode: Mode,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Regulator and plant update rate; an integer multiple of the sample
    /// rate. Defaults to the sample rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage_limit_volt: Option<f64>,
    #[serde(default = "default_true")]
    pub back_emf_feedforward: bool,
}

impl Scenario {
    /// Open-loop run of the 9-slot/6-pole test machine at 100 rpm over 20
    /// revolutions, sampled at 1 kHz.
    pub fn reference_open_loop(i_q_amp: f64) -> Self {
        Self {
            name: format!("open_loop_iq_{i_q_amp}"),
            motor: MotorParams::REFERENCE,
            speed_rpm: 100.0,
            command: CommandSpec { i_d_amp: 0.0, i_q_amp },
            position_error: PositionErrorSpec::none(),
            current_error: CurrentErrorSpec::none(),
            mode: Mode::OpenLoop,
            duration_s: 12.0,
            sample_rate_hz: 1000.0,
            control_rate_hz: None,
            bandwidth_rad_per_s: None,
            voltage_limit_volt: None,
            back_emf_feedforward: true,
        }
    }

    /// Closed-loop counterpart: regulator at 20 kHz tuned to 500 Hz.
    pub fn reference_closed_loop(i_q_amp: f64) -> Self {
        Self {
            name: format!("closed_loop_iq_{i_q_amp}"),
            mode: Mode::ClosedLoop,
            control_rate_hz: Some(20_000.0),
            bandwidth_rad_per_s: Some(TAU * 500.0),
            voltage_limit_volt: Some(12.0),
            ..Self::reference_open_loop(i_q_amp)
        }
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let s: Scenario = serde_json::from_slice(bytes)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_json_slice(&bytes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn command_dq(&self) -> SynchronousCurrents {
        self.command.into()
    }

    pub fn shaft_hz(&self) -> f64 {
        self.speed_rpm / 60.0
    }

    pub fn omega_m(&self) -> f64 {
        TAU * self.shaft_hz()
    }

    pub fn omega_e(&self) -> f64 {
        self.motor.pole_pairs as f64 * self.omega_m()
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Control updates per logged sample.
    pub fn substeps(&self) -> usize {
        self.control_rate_hz.map_or(1, |c| (c / self.sample_rate_hz).round() as usize)
    }

    pub fn control_period(&self) -> f64 {
        self.sample_period() / self.substeps() as f64
    }

    pub fn bandwidth(&self) -> Result<f64> {
        self.bandwidth_rad_per_s.ok_or_else(|| Error::InvalidConfig("closed loop needs bandwidth_rad_per_s".into()))
    }

    pub fn voltage_limit(&self) -> Result<f64> {
        self.voltage_limit_volt.ok_or_else(|| Error::InvalidConfig("closed loop needs voltage_limit_volt".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.motor.validate()?;
        self.position_error.validate()?;
        self.current_error.validate()?;

        if !SynchronousCurrents::from(self.command).is_finite() {
            return bad("current command must be finite".into());
        }
        if !(self.speed_rpm.is_finite() && self.speed_rpm > 0.0) {
            return bad(format!("speed_rpm must be > 0, got {}", self.speed_rpm));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s must be > 0, got {}", self.duration_s));
        }
        let revolutions = self.duration_s * self.shaft_hz();
        if revolutions < MIN_REVOLUTIONS * (1.0 - 1e-9) {
            return bad(format!(
                "duration_s = {} covers {revolutions:.3} revolutions; at least {MIN_REVOLUTIONS} needed ({:.6} s)",
                self.duration_s,
                MIN_REVOLUTIONS / self.shaft_hz()
            ));
        }
        let electrical_hz = self.motor.pole_pairs as f64 * self.shaft_hz();
        let min_rate = MIN_SAMPLES_PER_ELECTRICAL_PERIOD * electrical_hz;
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz >= min_rate) {
            return bad(format!("sample_rate_hz = {} below the minimum {min_rate} Hz", self.sample_rate_hz));
        }
        if self.sample_count() < 2 {
            return bad("scenario yields fewer than 2 samples".into());
        }

        if let Some(c) = self.control_rate_hz {
            let ratio = c / self.sample_rate_hz;
            if !(c.is_finite() && ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
                return bad(format!(
                    "control_rate_hz = {c} must be an integer multiple of sample_rate_hz = {}",
                    self.sample_rate_hz
                ));
            }
        }

        if self.mode == Mode::ClosedLoop {
            let bw = self.bandwidth()?;
            if !(bw.is_finite() && bw > 0.0) {
                return bad(format!("bandwidth_rad_per_s must be > 0, got {bw}"));
            }
            let v = self.voltage_limit()?;
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("voltage_limit_volt must be > 0, got {v}"));
            }
            let dt = self.control_period();
            let max = self.motor.max_step();
            if dt > max {
                return bad(format!("control period {dt} s exceeds the integrator limit {max} s"));
            }
        }
        Ok(())
    }
}
