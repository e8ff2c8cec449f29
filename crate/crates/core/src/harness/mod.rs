//! Scenario configuration, open- and closed-loop runners, the randomized
//! oracle sweep, and result files.

mod emit;
mod run;
mod scenario;
mod svg;
mod trace;
mod validate;

pub use emit::{emit, parse_formats, read_predicted_orders, Format};
pub use run::{
    run, run_closed_loop, run_open_loop, ChannelSpectrum, ClosedLoopReport, RunResult, DIVERGENCE_FACTOR,
    SETTLING_BANDWIDTHS, SETTLING_TIME_CONSTANTS, SPECTRUM_CHANNELS,
};
pub use scenario::{CommandSpec, Mode, Scenario, MIN_SAMPLES_PER_ELECTRICAL_PERIOD};
pub use trace::{Trace, TraceRow, TRACE_COLUMNS};
pub use validate::{random_case, validate_analytic, validate_cases, ValidationReport};
