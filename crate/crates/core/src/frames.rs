//! Reference-frame transforms between phase (abc), stationary orthogonal
//! (αβ0) and synchronous (dq0) quantities.
//!
//! Clarke uses the amplitude-invariant 2/3 scaling, so a balanced set of
//! peak amplitude `A` maps to an αβ vector of length `A`. Park rotates by
//! `-θ`: `d = cosθ·α + sinθ·β`, `q = -sinθ·α + cosθ·β`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const HALF_SQRT_3: f64 = SQRT_3 / 2.0;
const FRAC_1_SQRT_3: f64 = 1.0 / SQRT_3;

/// Currents in the three phase windings. No balance constraint: sensor
/// offsets routinely break `a + b + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseCurrents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OrthogonalCurrents {
    pub alpha: f64,
    pub beta: f64,
    pub zero: f64,
}

/// Rotor-synchronous currents (d aligned with the magnet flux).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SynchronousCurrents {
    pub d: f64,
    pub q: f64,
}

/// Output of the composite abc → dq0 transform.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dq0 {
    pub dq: SynchronousCurrents,
    pub zero: f64,
}

impl PhaseCurrents {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

impl SynchronousCurrents {
    pub const ZERO: Self = Self { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn norm(&self) -> f64 {
        self.d.hypot(self.q)
    }

    /// Mirror about the d axis, `(d, -q)`. This is the image a
    /// negative-sequence component rotates.
    pub fn conj(self) -> Self {
        Self::new(self.d, -self.q)
    }

    /// Angle of the current vector measured from the d axis.
    pub fn angle(&self) -> f64 {
        self.q.atan2(self.d)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.d - other.d).abs().max((self.q - other.q).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }
}

impl Add for SynchronousCurrents {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl Sub for SynchronousCurrents {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl Neg for SynchronousCurrents {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.d, -self.q)
    }
}

impl Mul<SynchronousCurrents> for f64 {
    type Output = SynchronousCurrents;
    fn mul(self, rhs: SynchronousCurrents) -> SynchronousCurrents {
        SynchronousCurrents::new(self * rhs.d, self * rhs.q)
    }
}

pub fn clarke(abc: PhaseCurrents) -> OrthogonalCurrents {
    OrthogonalCurrents {
        alpha: (2.0 / 3.0) * (abc.a - 0.5 * abc.b - 0.5 * abc.c),
        beta: (abc.b - abc.c) * FRAC_1_SQRT_3,
        zero: (abc.a + abc.b + abc.c) / 3.0,
    }
}

pub fn inverse_clarke(ab: OrthogonalCurrents) -> PhaseCurrents {
    PhaseCurrents {
        a: ab.alpha + ab.zero,
        b: -0.5 * ab.alpha + HALF_SQRT_3 * ab.beta + ab.zero,
        c: -0.5 * ab.alpha - HALF_SQRT_3 * ab.beta + ab.zero,
    }
}

/// Rotate a stationary vector into the frame at electrical angle `theta_e`.
/// The zero-sequence component is not part of the rotation and is dropped.
pub fn park(ab: OrthogonalCurrents, theta_e: f64) -> SynchronousCurrents {
    let (sin, cos) = theta_e.sin_cos();
    SynchronousCurrents { d: cos * ab.alpha + sin * ab.beta, q: -sin * ab.alpha + cos * ab.beta }
}

pub fn inverse_park(dq: SynchronousCurrents, theta_e: f64) -> OrthogonalCurrents {
    let (sin, cos) = theta_e.sin_cos();
    OrthogonalCurrents { alpha: cos * dq.d - sin * dq.q, beta: sin * dq.d + cos * dq.q, zero: 0.0 }
}

/// Composite abc → dq0 transform `H(θ)`.
pub fn park_abc(abc: PhaseCurrents, theta_e: f64) -> Dq0 {
    let ab = clarke(abc);
    Dq0 { dq: park(ab, theta_e), zero: ab.zero }
}

/// dq → abc with zero zero-sequence.
pub fn inverse_park_abc(dq: SynchronousCurrents, theta_e: f64) -> PhaseCurrents {
    inverse_clarke(inverse_park(dq, theta_e))
}
