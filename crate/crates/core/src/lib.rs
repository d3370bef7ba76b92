//! Hedonic modeling toolkit for annual city-level home prices.
//!
//! The pipeline takes a yearly panel of average sale price plus five count
//! factors (new homes and four ESG attributes) per city and
//!
//! 1. stationarizes the factors with arithmetic returns or first differences
//!    ([`transforms`]), checked by a no-deterministic-term augmented
//!    Dickey-Fuller test ([`adf`]);
//! 2. replaces the price series by the innovations of an AR(q)-ARCH(1) model
//!    with standardized Student-t shocks ([`arch`]);
//! 3. regresses the innovations on the transformed factors with a linear model
//!    and a P-spline additive model ([`regression`]);
//! 4. studies the cross-city residual matrix with PCA, exponential vs
//!    power-law decay fits and a two-threshold quadrant proxy analysis
//!    ([`diagnostics`]).
//!
//! [`pipeline`] wires the stages together for a set of cities and
//! [`report`] writes the resulting tables.

pub mod adf;
pub mod arch;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod panel;
pub mod pipeline;
pub mod regression;
pub mod report;
pub mod transforms;

pub use error::{Error, Result};
