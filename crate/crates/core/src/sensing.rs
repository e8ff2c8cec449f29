//! Sensor error injection.
//!
//! Position: `θ̂ᵉ = p·θᵐ + δθ₀ᵉ + p·Σ_r θ_ra·sin(r·θᵐ + φ_r)`, harmonic
//! amplitudes given in mechanical radians.
//!
//! Phase currents: `measured_x = (1 + ΔK_x)·true_x + ΔI_x`.
//!
//! Both models are deterministic. Noise or quantization would enter here as
//! further terms on the measured signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::PhaseCurrents;
use crate::plant::MotorParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionHarmonic {
    /// Cycles per mechanical revolution.
    pub order: u32,
    #[serde(rename = "amplitude_rad_m")]
    pub amplitude: f64,
    #[serde(rename = "phase_rad", default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PositionErrorSpec {
    #[serde(rename = "static_offset_rad_e", default)]
    pub static_offset: f64,
    #[serde(default)]
    pub harmonics: Vec<PositionHarmonic>,
}

impl PositionErrorSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn static_offset(offset_e: f64) -> Self {
        Self { static_offset: offset_e, harmonics: Vec::new() }
    }

    pub fn with_harmonic(mut self, order: u32, amplitude: f64, phase: f64) -> Self {
        self.harmonics.push(PositionHarmonic { order, amplitude, phase });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.static_offset == 0.0 && self.harmonics.iter().all(|h| h.amplitude == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.static_offset.is_finite() {
            return Err(Error::InvalidConfig("static position offset must be finite".into()));
        }
        for (i, h) in self.harmonics.iter().enumerate() {
            if h.order == 0 {
                return Err(Error::InvalidConfig("position harmonic order must be a positive integer".into()));
            }
            if !h.amplitude.is_finite() || h.amplitude < 0.0 || !h.phase.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "position harmonic of order {} needs a finite amplitude >= 0 and finite phase",
                    h.order
                )));
            }
            if self.harmonics[..i].iter().any(|o| o.order == h.order) {
                return Err(Error::InvalidConfig(format!("duplicate position harmonic order {}", h.order)));
            }
        }
        Ok(())
    }

    /// Total electrical position error `Δθᵉ` at mechanical angle `theta_m`.
    pub fn error_at(&self, theta_m: f64, pole_pairs: u32) -> f64 {
        let ripple: f64 = self.harmonics.iter().map(|h| h.amplitude * (h.order as f64 * theta_m + h.phase).sin()).sum();
        self.static_offset + pole_pairs as f64 * ripple
    }
}

/// Per-phase gain errors (dimensionless) and offsets (amperes).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurrentErrorSpec {
    #[serde(default)]
    pub gain_a: f64,
    #[serde(default)]
    pub gain_b: f64,
    #[serde(default)]
    pub gain_c: f64,
    #[serde(rename = "offset_a_amp", default)]
    pub offset_a: f64,
    #[serde(rename = "offset_b_amp", default)]
    pub offset_b: f64,
    #[serde(rename = "offset_c_amp", default)]
    pub offset_c: f64,
}

impl CurrentErrorSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn gains(a: f64, b: f64, c: f64) -> Self {
        Self { gain_a: a, gain_b: b, gain_c: c, ..Self::default() }
    }

    pub fn offsets(a: f64, b: f64, c: f64) -> Self {
        Self { offset_a: a, offset_b: b, offset_c: c, ..Self::default() }
    }

    pub fn gain_errors(&self) -> [f64; 3] {
        [self.gain_a, self.gain_b, self.gain_c]
    }

    pub fn offset_errors(&self) -> [f64; 3] {
        [self.offset_a, self.offset_b, self.offset_c]
    }

    pub fn is_zero(&self) -> bool {
        self.gain_errors().iter().chain(self.offset_errors().iter()).all(|&v| v == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (phase, (g, o)) in ['a', 'b', 'c'].iter().zip(self.gain_errors().into_iter().zip(self.offset_errors())) {
            if !g.is_finite() || !o.is_finite() {
                return Err(Error::InvalidConfig(format!("phase {phase} current error must be finite")));
            }
            if 1.0 + g <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "phase {phase} gain error {g} inverts the sensor (1 + gain must be > 0)"
                )));
            }
        }
        Ok(())
    }
}

/// Estimated electrical angle, unwrapped.
pub fn position_estimate(theta_m: f64, params: &MotorParams, spec: &PositionErrorSpec) -> f64 {
    params.pole_pairs as f64 * theta_m + spec.error_at(theta_m, params.pole_pairs)
}

pub fn measure_currents(true_abc: PhaseCurrents, spec: &CurrentErrorSpec) -> PhaseCurrents {
    PhaseCurrents {
        a: (1.0 + spec.gain_a) * true_abc.a + spec.offset_a,
        b: (1.0 + spec.gain_b) * true_abc.b + spec.offset_b,
        c: (1.0 + spec.gain_c) * true_abc.c + spec.offset_c,
    }
}
