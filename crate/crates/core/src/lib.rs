// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod interp;
pub mod ntp;
pub mod placement;
pub mod receiver;
pub mod scenario;
pub mod seed;
pub mod solver;
pub mod stats;
pub mod time;

pub use error::{Error, Result};
pub use seed::Seed;
pub use time::{ClockChain, ErrorBudget, TimeOffset};
