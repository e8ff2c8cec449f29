use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::spectral::{fmt17, parse_f64, TimeSeries};

pub const TRACE_COLUMNS: [&str; 17] = [
    "t",
    "theta_m",
    "theta_e",
    "theta_e_hat",
    "ia",
    "ib",
    "ic",
    "ia_m",
    "ib_m",
    "ic_m",
    "id",
    "iq",
    "id_est",
    "iq_est",
    "vd",
    "vq",
    "torque",
];

/// One logged instant. Angles are unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub theta_m: f64,
    pub theta_e: f64,
    pub theta_e_hat: f64,
    pub ia: f64,
    pub ib: f64,
    pub ic: f64,
    pub ia_m: f64,
    pub ib_m: f64,
    pub ic_m: f64,
    pub id: f64,
    pub iq: f64,
    pub id_est: f64,
    pub iq_est: f64,
    pub vd: f64,
    pub vq: f64,
    pub torque: f64,
}

impl TraceRow {
    pub fn to_array(&self) -> [f64; 17] {
        [
            self.t,
            self.theta_m,
            self.theta_e,
            self.theta_e_hat,
            self.ia,
            self.ib,
            self.ic,
            self.ia_m,
            self.ib_m,
            self.ic_m,
            self.id,
            self.iq,
            self.id_est,
            self.iq_est,
            self.vd,
            self.vq,
            self.torque,
        ]
    }

    pub fn from_array(v: [f64; 17]) -> Self {
        let [t, theta_m, theta_e, theta_e_hat, ia, ib, ic, ia_m, ib_m, ic_m, id, iq, id_est, iq_est, vd, vq, torque] =
            v;
        Self { t, theta_m, theta_e, theta_e_hat, ia, ib, ic, ia_m, ib_m, ic_m, id, iq, id_est, iq_est, vd, vq, torque }
    }
}

/// Uniformly sampled simulation log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub dt: f64,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = TRACE_COLUMNS.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r.to_array()[idx]).collect())
    }

    pub fn series(&self, name: &str) -> Result<TimeSeries> {
        let samples =
            self.column(name).ok_or_else(|| Error::InvalidConfig(format!("no trace column named {name:?}")))?;
        TimeSeries::new(name, self.dt, samples)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.to_array().iter().map(|v| fmt17(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse a trace written by [`Trace::write_csv`]. The sample period is
    /// recovered from the first two time stamps.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(TRACE_COLUMNS.iter().copied()) {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut v = [0.0; 17];
            for (slot, field) in v.iter_mut().zip(rec.iter()) {
                *slot = parse_f64(field)?;
            }
            rows.push(TraceRow::from_array(v));
        }
        let dt = match rows.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => 0.0,
        };
        if rows.len() >= 2 && (dt.is_nan() || dt <= 0.0) {
            return Err(Error::Parse("time stamps must increase".into()));
        }
        Ok(Self { dt, rows })
    }
}
