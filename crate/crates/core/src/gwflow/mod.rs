//! Cell-centred finite-difference model of steady unconfined flow in a
//! zoned, layered aquifer, with constant-head, general-head, drain and
//! recharge boundaries.

pub mod boundary;
pub mod conductance;
pub mod grid;
pub mod io;
pub mod qoi;
pub mod solver;
pub mod sparse;

pub use boundary::{apply_drains, BoundarySet, ConstantHead, Drain, DrainTag, GeneralHead, RICE_PONDING_DEPTH};
pub use conductance::{intercell_conductance, Face, FaceDirection, DRY_THICKNESS_FLOOR};
pub use grid::{build_grid, Cell, Grid, GridSpec, LayerKind};
pub use qoi::{compute_qoi, heads_above_surface_pct, rmse, QoIBundle, Well, WellSet};
pub use solver::{solve_steady, Budget, NonlinearMethod, SolveResult, SolverOptions, SteadySolver, MASS_BALANCE_TOLERANCE};
