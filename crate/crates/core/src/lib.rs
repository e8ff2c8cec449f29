//! Synchronous-frame current estimation for PMSM drives with concurrent
//! position-sensor and phase-current-sensor errors.
//!
//! The crate carries two independent routes from true currents to the
//! estimated dq currents a field-oriented controller sees:
//!
//! * the brute-force chain (measure each phase, Clarke, Park at the
//!   estimated angle) in [`estimation::estimate_dq_oracle`], and
//! * the closed-form decomposition into a position-error rotation, a
//!   gain-error scaling and negative-sequence pulsation, and an offset
//!   vector in [`estimation::estimate_dq_analytic`].
//!
//! Around them sit a dq-frame machine model ([`plant`]), a PI current
//! regulator with back-EMF feedforward ([`control`]), order-domain spectra
//! ([`spectral`]) and a scenario runner that writes CSV/JSON/SVG results
//! ([`harness`]).

pub mod control;
pub mod error;
pub mod estimation;
pub mod frames;
pub mod harness;
pub mod plant;
pub mod sensing;
pub mod spectral;

pub use error::{Error, Result};
