//! Link-level Monte Carlo simulator for unsourced random access over
//! cell-free massive MIMO with ODMA-placed polar-coded QPSK.

pub mod ap;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod cpu;
pub mod error;
pub mod harness;
pub mod modem;
pub mod polar;
pub mod tx;

pub use config::{validate_config, Message, SystemConfig, TrialResult};
pub use error::{Error, Result};
pub use harness::{estimate_pupe, run_trial, ExperimentSpec, Mode, PupeEstimate, Simulator};
