//! Weekly recharge due to precipitation: curve-number runoff, FAO-56
//! reference evapotranspiration and the clamped water balance
//! `R = max(0, P - Pe - PET)`, averaged over a study period.

pub mod met;
pub mod pet;
pub mod recharge;
pub mod scs;

pub use met::{aggregate_weekly, fill_missing, load_stations, write_stations, MetRecord, Provenance, Station};
pub use pet::{penman_monteith_pet, reference_et_daily, DailyWeather, Site};
pub use recharge::{
    basin_recharge_flux, compute_recharge, load_basins, mm_per_week_to_flux, weekly_recharge, write_basins,
    BasinFlux, Period, RechargeSeries, RechargeSummary, RechargeWeek, SubBasin,
};
pub use scs::{initial_abstraction, potential_retention, scs_runoff};
