//! Simulation and numerical verification toolkit for multivariate mixed
//! moving average processes driven by heavy-tailed Lévy bases.
//!
//! The crate is organized bottom-up:
//! - [`levy_basis`]: Lévy measures, mixing measures, generating quadruples,
//!   and exact/adaptive integration against them.
//! - [`kernels`]: moving-average kernel families and their moduli.
//! - [`conditions`]: numerical certification of existence, regular-variation,
//!   and small-increment conditions.
//! - [`simulate`]: exact series-representation path simulation with an
//!   independent ODE cross-check.
//! - [`paths`]: càdlàg path containers and moduli of continuity.
//! - [`tails`]: Hill estimation, spectral harvesting, and limit-measure
//!   queries.
//! - [`pointproc`]: exceedance point processes and Poisson diagnostics.
//! - [`config`] / [`io`]: TOML experiment configs and deterministic file I/O.

pub mod conditions;
pub mod config;
pub mod error;
pub mod io;
pub mod kernels;
pub mod levy_basis;
pub mod paths;
pub mod pointproc;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod tails;
