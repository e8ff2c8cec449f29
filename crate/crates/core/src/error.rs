use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time step {dt} s outside (0, {max}] s")]
    InvalidTimeStep { dt: f64, max: f64 },

    #[error("record covers {duration:.6} s but at least {min_duration:.6} s (10 revolutions) is required")]
    RecordTooShort { duration: f64, min_duration: f64 },

    #[error("order {order} outside spectrum range [0, {max_order}]")]
    OrderOutOfRange { order: f64, max_order: f64 },

    #[error("first-order sideband expansion invalid: |p*theta_ra| = {modulation_index:.4} rad for order {order} (limit 0.2 rad)")]
    ExpansionInvalid { order: u32, modulation_index: f64 },

    #[error("gain errors are degenerate: 1 + K_igc = {scaling} does not exceed K_igp = {pulsation}")]
    SingularGain { scaling: f64, pulsation: f64 },

    #[error("numerical divergence at t = {time:.6} s: |i| = {magnitude:.3e} A exceeds {limit:.3e} A")]
    Divergence { time: f64, magnitude: f64, limit: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::InvalidConfig(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}
