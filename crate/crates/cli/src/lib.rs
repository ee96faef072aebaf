//! Command-line front end: channel bounds, parameter sweeps and protocol
//! simulations with canonical CSV/JSON output.

pub mod commands;
pub mod format;
pub mod sweep;
