//! Analysis toolkit for superconducting resonators and qubits housed in
//! coaxial tunnels: evanescent waveguide coupling, S21 resonance fitting,
//! dispersive circuit parameters and participation loss budgets.

pub mod budget;
pub mod coupling;
pub mod dispersive;
pub mod error;
pub mod io;
pub mod lsq;
pub mod pipeline;
pub mod report;
pub mod resonator;
pub mod units;
pub mod waveguide;

pub use error::{Error, Result};
