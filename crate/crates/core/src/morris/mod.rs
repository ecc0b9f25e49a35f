//! Morris elementary-effects screening: lattice trajectories over a mixed
//! linear/log parameter space, spread-maximising selection from a random
//! pool, and `μ`, `μ*`, `σ` per parameter and model output.

pub mod effects;
pub mod runner;
pub mod selection;
pub mod space;
pub mod trajectory;

pub use effects::{aggregate, elementary_effects, EffectStats};
pub use runner::{
    analyze, evaluate_trajectories, run_morris, MorrisReport, MorrisResult, MorrisRun,
    MorrisSettings, TrajectoryOutputs,
};
pub use selection::{criterion, distance_matrix, select_trajectories, trajectory_distance, Strategy};
pub use space::{ParameterDef, ParameterSpace, Scale};
pub use trajectory::{generate_pool, Step, Trajectory};
