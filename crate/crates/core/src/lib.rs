//! Groundwater model screening and calibration toolkit.
//!
//! The crate is organised around four library modules and one orchestration
//! layer:
//!
//! - [`gwflow`]: steady-state unconfined flow solver and the quantities of
//!   interest extracted from it (head RMSE, percent of cells flooded, river
//!   flux, spring discharge).
//! - [`hydrology`]: weekly recharge from precipitation using curve-number
//!   runoff and FAO-56 reference evapotranspiration.
//! - [`morris`]: elementary-effects screening with trajectory selection.
//! - [`calibrate`]: negative log-likelihood, brute-force search,
//!   Nelder-Mead refinement and residual uncertainty.
//! - [`pipeline`]: batch commands wiring the above to files on disk, plus
//!   the bundled synthetic scenario in [`scenario`].

pub mod calibrate;
pub mod config;
pub mod error;
pub mod gwflow;
pub mod hydrology;
pub mod morris;
pub mod pipeline;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
