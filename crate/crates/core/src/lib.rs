//! Route-level air-passenger forecasting and travel-ban impact estimation.
//!
//! The pipeline runs in four stages, each in its own module:
//!
//! * [`ingest`] loads the monthly route corpus and the airport reference table,
//!   filters infrequent routes and generates synthetic corpora.
//! * [`forecast`] fits one quadratic trend per calendar month and route and
//!   projects a Poisson-mean baseline for Nov 2019 to Dec 2020.
//! * [`scenario`] holds the multiplier curves and the booking-availability mask
//!   that turn a baseline into a travel-ban scenario.
//! * [`impact`] converts baseline/scenario revenue gaps into quarterly loss
//!   shares and proportional job and GDP losses.
//!
//! [`tracking`] is an independent analytics suite over flight departure logs.
//! [`cli`] wires everything together behind the `airshock` binary.

pub mod calendar;
pub mod cli;
pub mod config;
pub mod error;
pub mod forecast;
pub mod impact;
pub mod ingest;
pub mod kv;
pub mod output;
pub mod scenario;
pub mod tracking;

pub use error::{Error, Result};
