//! Order-domain amplitude spectra.
//!
//! A periodic Hann window is applied and the single-sided magnitudes are
//! corrected by the window's coherent gain, so a sinusoid of amplitude `A`
//! sitting on a bin reports `A` and a constant `c` reports `c` at order 0.
//! Frequencies are divided by the shaft rotation frequency to give
//! mechanical orders. With an integer number of revolutions in the record,
//! integer orders fall exactly on bins and Hann leakage stays inside the
//! two neighbouring bins.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum record length in shaft revolutions.
pub const MIN_REVOLUTIONS: f64 = 10.0;

/// Half-width of the search window used by [`harmonic_at`], in orders.
pub const CAPTURE_HALF_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub channel: String,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(channel: impl Into<String>, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("sample period must be > 0, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidConfig("time series needs at least 2 samples".into()));
        }
        Ok(Self { dt, channel: channel.into(), samples })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub order: f64,
    pub freq_hz: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    pub lines: Vec<SpectralLine>,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.5 * (1.0 - (TAU * k as f64 / n as f64).cos())).collect()
}

fn windowed_fft(ts: &TimeSeries) -> (Vec<Complex64>, f64) {
    let n = ts.samples.len();
    let window = hann(n);
    let gain: f64 = window.iter().sum();
    let mut buf: Vec<Complex64> = ts.samples.iter().zip(&window).map(|(x, w)| Complex64::new(x * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (buf, gain)
}

/// Amplitude spectrum of `ts` on a mechanical-order axis for shaft speed
/// `omega_m` (rad/s).
pub fn spectrum(ts: &TimeSeries, omega_m: f64) -> Result<Spectrum> {
    if !(omega_m.is_finite() && omega_m > 0.0) {
        return Err(Error::InvalidConfig(format!("shaft speed must be > 0, got {omega_m} rad/s")));
    }
    let shaft_hz = omega_m / TAU;
    let min_duration = MIN_REVOLUTIONS / shaft_hz;
    // allow for the duration being a rounded product of sample count and dt
    if ts.duration() < min_duration * (1.0 - 1e-9) {
        return Err(Error::RecordTooShort { duration: ts.duration(), min_duration });
    }

    let n = ts.samples.len();
    let (bins, gain) = windowed_fft(ts);
    let df = 1.0 / ts.duration();
    let half = n / 2;
    let lines = (0..=half)
        .map(|k| {
            let one_sided = k != 0 && !(n.is_multiple_of(2) && k == half);
            let scale = if one_sided { 2.0 } else { 1.0 };
            let freq_hz = k as f64 * df;
            SpectralLine { order: freq_hz / shaft_hz, freq_hz, magnitude: scale * bins[k].norm() / gain }
        })
        .collect();
    Ok(Spectrum { lines })
}

impl Spectrum {
    pub fn max_order(&self) -> f64 {
        self.lines.last().map_or(0.0, |l| l.order)
    }

    /// Largest magnitude, with or without the order-0 bin.
    pub fn dominant(&self, include_dc: bool) -> Option<SpectralLine> {
        self.lines.iter().skip(usize::from(!include_dc)).copied().max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
    }

    fn order_step(&self) -> f64 {
        match self.lines.as_slice() {
            [a, b, ..] => b.order - a.order,
            _ => 0.0,
        }
    }

    /// Index of the bin nearest `order`.
    pub fn bin_of(&self, order: f64) -> Option<usize> {
        let step = self.order_step();
        if step <= 0.0 {
            return None;
        }
        let k = (order / step).round();
        (k >= 0.0 && (k as usize) < self.lines.len()).then_some(k as usize)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["order", "freq_hz", "magnitude"])?;
        for l in &self.lines {
            w.write_record([fmt17(l.order), fmt17(l.freq_hz), fmt17(l.magnitude)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["order", "freq_hz", "magnitude"] {
            return Err(Error::Parse(format!("unexpected spectrum header {header:?}")));
        }
        let mut lines = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| parse_f64(rec.get(i).unwrap_or_default());
            let line = SpectralLine { order: field(0)?, freq_hz: field(1)?, magnitude: field(2)? };
            if line.magnitude < 0.0 {
                return Err(Error::Parse(format!("negative magnitude {}", line.magnitude)));
            }
            if lines.last().is_some_and(|prev: &SpectralLine| prev.order >= line.order) {
                return Err(Error::Parse("spectrum orders must be strictly ascending".into()));
            }
            lines.push(line);
        }
        Ok(Self { lines })
    }
}

/// 17 significant digits, enough for an exact f64 round trip.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite value {s:?}")));
    }
    Ok(v)
}

/// Peak magnitude within ±[`CAPTURE_HALF_WIDTH`] orders of `order`,
/// refined by a parabola through the peak bin and its neighbours.
pub fn harmonic_at(spec: &Spectrum, order: f64) -> Result<f64> {
    let max_order = spec.max_order();
    if !(order.is_finite() && (0.0..=max_order).contains(&order)) || spec.lines.len() < 3 {
        return Err(Error::OrderOutOfRange { order, max_order });
    }
    let lines = &spec.lines;
    if order == 0.0 {
        // Hann leakage puts an equal-height (doubly scaled) copy of DC in bin 1
        return Ok(lines[0].magnitude);
    }
    let lo = order - CAPTURE_HALF_WIDTH;
    let hi = order + CAPTURE_HALF_WIDTH;
    let peak = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.order >= lo && l.order <= hi)
        .max_by(|a, b| a.1.magnitude.total_cmp(&b.1.magnitude))
        .map(|(k, _)| k)
        .or_else(|| spec.bin_of(order))
        .ok_or(Error::OrderOutOfRange { order, max_order })?;

    let y1 = lines[peak].magnitude;
    if peak == 0 || peak + 1 >= lines.len() {
        return Ok(y1);
    }
    let y0 = lines[peak - 1].magnitude;
    let y2 = lines[peak + 1].magnitude;
    let denom = y0 - 2.0 * y1 + y2;
    if denom >= 0.0 {
        // not a strict local maximum (flat or edge of capture window)
        return Ok(y1);
    }
    let offset = 0.5 * (y0 - y2) / denom;
    Ok(y1 - 0.25 * (y0 - y2) * offset)
}

/// Relative mismatch between the spectral energy and the mean square of
/// the windowed, gain-corrected signal. Zero up to round-off for any input.
pub fn parseval_residual(ts: &TimeSeries, spec: &Spectrum) -> f64 {
    let n = ts.samples.len();
    let window = hann(n);
    let cg: f64 = window.iter().sum::<f64>() / n as f64;
    let mean_square: f64 = ts.samples.iter().zip(&window).map(|(x, w)| (x * w / cg).powi(2)).sum::<f64>() / n as f64;

    let half = n / 2;
    let energy: f64 = spec
        .lines
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let edge = k == 0 || (n.is_multiple_of(2) && k == half);
            if edge {
                l.magnitude * l.magnitude
            } else {
                l.magnitude * l.magnitude / 2.0
            }
        })
        .sum();
    if mean_square == 0.0 {
        return energy;
    }
    (energy - mean_square).abs() / mean_square
}
