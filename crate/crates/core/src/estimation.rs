//! Estimated synchronous-frame currents under combined sensor errors.
//!
//! Two independent routes:
//!
//! * [`estimate_dq_oracle`] runs the measurement chain literally: corrupt
//!   each phase, Clarke, Park at the estimated angle.
//! * [`estimate_dq_analytic`] evaluates the closed-form decomposition
//!
//! ```text
//! Î = M_θ I + K_igc M_θ I + K_igp M_igp Ī + K_iop m_iop
//! ```
//!
//! with `M_θ = rot(θ̂ - θ)`, `M_igp = rot(θ + θ̂ + φ_igp)`,
//! `Ī = (I_d, -I_q)` and `m_iop = (cos(θ̂ + φ_iop), -sin(θ̂ + φ_iop))`.
//!
//! `rot(x)` is `[[cos x, sin x], [-sin x, cos x]]`.
//!
//! The gain pulsation term acts on the mirrored current `Ī`: a gain
//! imbalance turns the positive-sequence phase currents partly into a
//! negative-sequence set, and a negative-sequence vector appears in the dq
//! frame rotating at `-(θ + θ̂)` with the mirrored phase. The scale of
//! `K_igp` is `1/3 · √(Σ ΔK_x² − Σ_{x<y} ΔK_x ΔK_y)`. The 1/3 factor was
//! obtained by a least-squares fit against the measurement chain (see
//! [`resolve_gain_pulsation_scale`]) and is frozen in
//! [`GAIN_PULSATION_SCALE`]; [`unscaled_k_igp`] returns the unscaled
//! radical for comparison.
//!
//! Zero-sequence current is produced by the oracle path only.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{clarke, park_abc, Dq0, PhaseCurrents, SynchronousCurrents};
use crate::plant::MotorParams;
use crate::sensing::{measure_currents, CurrentErrorSpec, PositionErrorSpec};

/// Scale applied to the unscaled gain-imbalance radical to obtain `K_igp`.
pub const GAIN_PULSATION_SCALE: f64 = 1.0 / 3.0;

/// Largest `|p·θ_ra|` accepted by [`predicted_orders`].
pub const MAX_MODULATION_INDEX: f64 = 0.2;

/// 2×2 rotation `[[cos x, sin x], [-sin x, cos x]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix2 {
    pub m: [[f64; 2]; 2],
}

impl RotationMatrix2 {
    pub fn new(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { m: [[c, s], [-s, c]] }
    }

    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn apply(&self, x: SynchronousCurrents) -> SynchronousCurrents {
        SynchronousCurrents::new(self.m[0][0] * x.d + self.m[0][1] * x.q, self.m[1][0] * x.d + self.m[1][1] * x.q)
    }

    pub fn compose(&self, other: &Self) -> Self {
        let a = &self.m;
        let b = &other.m;
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m }
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self { m: [[m[0][0], m[1][0]], [m[0][1], m[1][1]]] }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Largest deviation of `MᵀM` from identity.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose().compose(self);
        (p.m[0][0] - 1.0).abs().max((p.m[1][1] - 1.0).abs()).max(p.m[0][1].abs()).max(p.m[1][0].abs())
    }
}

/// Position error matrix `M_θ` for `Δθᵉ = θ̂ᵉ − θᵉ`.
pub fn m_theta(delta_theta_e: f64) -> RotationMatrix2 {
    RotationMatrix2::new(delta_theta_e)
}

/// Constants of the error decomposition for one current-sensor error set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    /// Mean gain error, `ΣΔK_x / 3`.
    pub k_igc: f64,
    /// Gain imbalance (negative-sequence) amplitude.
    pub k_igp: f64,
    /// Offset vector length, amperes.
    pub k_iop: f64,
    pub phi_igp: f64,
    pub phi_iop: f64,
}

/// `√(Σ x² − Σ_{x<y} x·y)` over three values, clamped at zero for round-off.
fn sequence_radical(v: [f64; 3]) -> f64 {
    let squares = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let pairs = v[0] * v[1] + v[0] * v[2] + v[1] * v[2];
    (squares - pairs).max(0.0).sqrt()
}

/// Gain-imbalance constant without the resolved 1/3 scale.
pub fn unscaled_k_igp(spec: &CurrentErrorSpec) -> f64 {
    sequence_radical(spec.gain_errors())
}

pub fn error_constants(spec: &CurrentErrorSpec) -> ErrorDecomposition {
    let g = spec.gain_errors();
    let o = spec.offset_errors();

    let g_ab = clarke(PhaseCurrents::new(g[0], g[1], g[2]));
    let o_ab = clarke(PhaseCurrents::new(o[0], o[1], o[2]));

    let k_igp = GAIN_PULSATION_SCALE * sequence_radical(g);
    let k_iop = (2.0 / 3.0) * sequence_radical(o);

    // atan2(0, 0) is 0, which covers the all-equal cases
    let phi_igp = if k_igp > 0.0 { g_ab.beta.atan2(g_ab.alpha) } else { 0.0 };
    let phi_iop = if k_iop > 0.0 { (-o_ab.beta).atan2(o_ab.alpha) } else { 0.0 };

    ErrorDecomposition { k_igc: (g[0] + g[1] + g[2]) / 3.0, k_igp, k_iop, phi_igp, phi_iop }
}

impl ErrorDecomposition {
    /// Offset contribution `K_iop·(cos(θ̂ + φ_iop), −sin(θ̂ + φ_iop))`.
    pub fn offset_vector(&self, theta_e_hat: f64) -> SynchronousCurrents {
        let (s, c) = (theta_e_hat + self.phi_iop).sin_cos();
        SynchronousCurrents::new(self.k_iop * c, -self.k_iop * s)
    }

    pub fn m_igp(&self, theta_e: f64, theta_e_hat: f64) -> RotationMatrix2 {
        RotationMatrix2::new(theta_e + theta_e_hat + self.phi_igp)
    }

    /// Gain pulsation contribution `K_igp·M_igp·Ī`.
    pub fn gain_pulsation(&self, true_dq: SynchronousCurrents, theta_e: f64, theta_e_hat: f64) -> SynchronousCurrents {
        self.k_igp * self.m_igp(theta_e, theta_e_hat).apply(true_dq.conj())
    }

    pub fn estimate(&self, true_dq: SynchronousCurrents, theta_e: f64, theta_e_hat: f64) -> SynchronousCurrents {
        let rotated = m_theta(theta_e_hat - theta_e).apply(true_dq);
        (1.0 + self.k_igc) * rotated
            + self.gain_pulsation(true_dq, theta_e, theta_e_hat)
            + self.offset_vector(theta_e_hat)
    }

    /// Real 2×2 matrix of the linear part `M_θ + M_ig` acting on `I`.
    ///
    /// Returned row-major as `[[a, b], [c, d]]`.
    pub fn linear_part(&self, theta_e: f64, theta_e_hat: f64) -> [[f64; 2]; 2] {
        let r = m_theta(theta_e_hat - theta_e).m;
        let g = self.m_igp(theta_e, theta_e_hat).m;
        let s = 1.0 + self.k_igc;
        // M_igp acts on (d, -q): negate its second column
        [
            [s * r[0][0] + self.k_igp * g[0][0], s * r[0][1] - self.k_igp * g[0][1]],
            [s * r[1][0] + self.k_igp * g[1][0], s * r[1][1] - self.k_igp * g[1][1]],
        ]
    }
}

/// Estimated dq0 currents by the literal measurement chain.
pub fn estimate_dq0_oracle(true_abc: PhaseCurrents, theta_e_hat: f64, spec: &CurrentErrorSpec) -> Dq0 {
    park_abc(measure_currents(true_abc, spec), theta_e_hat)
}

pub fn estimate_dq_oracle(true_abc: PhaseCurrents, theta_e_hat: f64, spec: &CurrentErrorSpec) -> SynchronousCurrents {
    estimate_dq0_oracle(true_abc, theta_e_hat, spec).dq
}

pub fn estimate_dq_analytic(
    true_dq: SynchronousCurrents,
    theta_e: f64,
    theta_e_hat: f64,
    spec: &CurrentErrorSpec,
) -> SynchronousCurrents {
    error_constants(spec).estimate(true_dq, theta_e, theta_e_hat)
}

/// One point on which the two estimation routes can be compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCase {
    pub theta_e: f64,
    pub theta_e_hat: f64,
    pub true_dq: SynchronousCurrents,
    pub spec: CurrentErrorSpec,
}

impl OracleCase {
    pub fn oracle(&self) -> SynchronousCurrents {
        let abc = crate::frames::inverse_park_abc(self.true_dq, self.theta_e);
        estimate_dq_oracle(abc, self.theta_e_hat, &self.spec)
    }

    pub fn analytic(&self) -> SynchronousCurrents {
        estimate_dq_analytic(self.true_dq, self.theta_e, self.theta_e_hat, &self.spec)
    }
}

/// Least-squares scale `s` such that the oracle matches the decomposition
/// with `K_igp = s · unscaled_k_igp`.
///
/// Everything except the gain pulsation term is subtracted from the oracle;
/// the remainder is projected onto the unit-scale pulsation basis. Returns
/// `None` when no case carries a gain imbalance.
pub fn resolve_gain_pulsation_scale(cases: &[OracleCase]) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for case in cases {
        let k = error_constants(&case.spec);
        let without_pulsation = ErrorDecomposition { k_igp: 0.0, ..k };
        let residual = case.oracle() - without_pulsation.estimate(case.true_dq, case.theta_e, case.theta_e_hat);
        let basis = unscaled_k_igp(&case.spec) * k.m_igp(case.theta_e, case.theta_e_hat).apply(case.true_dq.conj());
        num += residual.d * basis.d + residual.q * basis.q;
        den += basis.d * basis.d + basis.q * basis.q;
    }
    (den > 0.0).then(|| num / den)
}

/// Dense `(θ, θ̂)` grid over a handful of gain-imbalance patterns, used to
/// pin [`GAIN_PULSATION_SCALE`].
pub fn gain_scale_grid(points_per_axis: usize) -> Vec<OracleCase> {
    let specs = [
        CurrentErrorSpec::gains(0.1, 0.0, 0.0),
        CurrentErrorSpec::gains(0.0, -0.07, 0.0),
        CurrentErrorSpec { gain_a: 0.05, gain_b: -0.12, gain_c: 0.02, offset_a: 0.4, offset_b: -0.3, offset_c: 0.0 },
    ];
    let currents = [SynchronousCurrents::new(0.0, 21.5), SynchronousCurrents::new(-8.0, 12.0)];
    let n = points_per_axis.max(1);
    let step = std::f64::consts::TAU / n as f64;
    let mut cases = Vec::with_capacity(specs.len() * currents.len() * n * n);
    for spec in specs {
        for true_dq in currents {
            for i in 0..n {
                for j in 0..n {
                    cases.push(OracleCase { theta_e: i as f64 * step, theta_e_hat: j as f64 * step, true_dq, spec });
                }
            }
        }
    }
    cases
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    D,
    Q,
    /// Same amplitude on both axes (a rotating vector).
    Dq,
}

/// Predicted spectral line of the estimated dq currents.
///
/// The order-0 line carries the DC shift of the estimate relative to the
/// true current, not the DC value itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedLine {
    pub order: f64,
    pub amplitude: f64,
    pub channel: Channel,
}

fn bessel_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(order as i32) / (1..=order).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..60u32 {
        term *= -(half * half) / (m as f64 * (m + order) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    bessel_series(0, x)
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_series(1, x)
}

type Series = BTreeMap<i64, Complex64>;

fn add_to(series: &mut Series, order: i64, c: Complex64) {
    *series.entry(order).or_insert(Complex64::new(0.0, 0.0)) += c;
}

/// First-order expansion of `e^{-jΔθᵉ(θᵐ)}` in mechanical orders.
fn modulation_series(position: &PositionErrorSpec, pole_pairs: u32) -> Series {
    let p = pole_pairs as f64;
    let base = Complex64::from_polar(1.0, -position.static_offset);
    let j0: Vec<f64> = position.harmonics.iter().map(|h| bessel_j0(p * h.amplitude)).collect();
    let all_j0: f64 = j0.iter().product();

    let mut series = Series::new();
    add_to(&mut series, 0, base * all_j0);
    for (i, h) in position.harmonics.iter().enumerate() {
        if h.amplitude == 0.0 {
            continue;
        }
        let others: f64 = j0.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v).product();
        let j1 = bessel_j1(p * h.amplitude) * others;
        let r = h.order as i64;
        // e^{-jβ sin y} ≈ J0 + J1 e^{-jy} - J1 e^{+jy}
        add_to(&mut series, -r, base * Complex64::from_polar(j1, -h.phase));
        add_to(&mut series, r, base * Complex64::from_polar(-j1, h.phase));
    }
    series
}

/// Spectral lines of the estimated dq currents in mechanical orders, for a
/// constant true current.
///
/// Position harmonics enter through a first-order Bessel expansion, so each
/// position harmonic of order `r` adds sidebands `±r` around every carrier:
/// DC (the rotated, gain-scaled current), order `p` (offsets) and order `2p`
/// (gain imbalance).
pub fn predicted_orders(
    position: &PositionErrorSpec,
    current: &CurrentErrorSpec,
    params: &MotorParams,
    true_dq: SynchronousCurrents,
) -> Result<Vec<PredictedLine>> {
    let p = params.pole_pairs as f64;
    for h in &position.harmonics {
        let beta = p * h.amplitude;
        if beta.abs() >= MAX_MODULATION_INDEX {
            return Err(Error::ExpansionInvalid { order: h.order, modulation_index: beta.abs() });
        }
    }

    let k = error_constants(current);
    let modulation = modulation_series(position, params.pole_pairs);
    let i = Complex64::new(true_dq.d, true_dq.q);
    let pp = params.pole_pairs as i64;

    // complex envelope of d + jq as Σ c_n e^{jnθᵐ}
    let mut z = Series::new();
    let carriers = [
        (0, i * (1.0 + k.k_igc)),
        (-2 * pp, i.conj() * Complex64::from_polar(k.k_igp, -k.phi_igp)),
        (-pp, Complex64::from_polar(k.k_iop, -k.phi_iop)),
    ];
    for (carrier, amp) in carriers {
        if amp.norm() == 0.0 {
            continue;
        }
        for (&m, &c) in &modulation {
            add_to(&mut z, carrier + m, amp * c);
        }
    }
    add_to(&mut z, 0, -i);

    let floor = 1e-12 * (1.0 + true_dq.norm() + k.k_iop);
    let zero = Complex64::new(0.0, 0.0);
    let max_order = z.keys().map(|o| o.abs()).max().unwrap_or(0);
    let mut lines = Vec::new();
    for n in 0..=max_order {
        let pos = z.get(&n).copied().unwrap_or(zero);
        let neg = z.get(&-n).copied().unwrap_or(zero);
        let (d_amp, q_amp) =
            if n == 0 { (pos.re.abs(), pos.im.abs()) } else { ((pos + neg.conj()).norm(), (pos - neg.conj()).norm()) };
        let order = n as f64;
        let d_on = d_amp > floor;
        let q_on = q_amp > floor;
        if d_on && q_on && (d_amp - q_amp).abs() <= 1e-9 * d_amp.max(q_amp) {
            lines.push(PredictedLine { order, amplitude: d_amp, channel: Channel::Dq });
            continue;
        }
        if d_on {
            lines.push(PredictedLine { order, amplitude: d_amp, channel: Channel::D });
        }
        if q_on {
            lines.push(PredictedLine { order, amplitude: q_amp, channel: Channel::Q });
        }
    }
    Ok(lines)
}
