//! FAO-56 Penman-Monteith reference evapotranspiration.
//!
//! The daily formulation is evaluated on weekly-mean inputs and multiplied
//! by seven. Net longwave radiation uses the cloudiness factor
//! `1.35 Rs/Rso - 0.35` clamped to `[0.05, 1]`, and negative ET0 is set to
//! zero, so overcast saturated weeks have no evaporative demand.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SOLAR_CONSTANT: f64 = 0.0820; // MJ m-2 min-1
const STEFAN_BOLTZMANN: f64 = 4.903e-9; // MJ K-4 m-2 day-1
const WATTS_TO_MJ_DAY: f64 = 0.0864;

/// Weather for one day (or the mean day of a week).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyWeather {
    pub t_mean: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Mean relative humidity [%].
    pub rh: f64,
    /// Incoming shortwave radiation [W/m²].
    pub shortwave: f64,
    /// Wind speed at 2 m [m/s].
    pub wind: f64,
}

/// Station location used for the radiation terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub latitude_deg: f64,
    pub elevation_m: f64,
}

/// Saturation vapour pressure [kPa] at temperature `t` [°C].
pub fn saturation_vapour_pressure(t: f64) -> f64 {
    0.6108 * (17.27 * t / (t + 237.3)).exp()
}

/// Extraterrestrial radiation [MJ m-2 day-1].
pub fn extraterrestrial_radiation(latitude_deg: f64, day_of_year: u32) -> f64 {
    let phi = latitude_deg.to_radians();
    let j = day_of_year as f64;
    let dr = 1.0 + 0.033 * (2.0 * PI * j / 365.0).cos();
    let delta = 0.409 * (2.0 * PI * j / 365.0 - 1.39).sin();
    let ws = (-phi.tan() * delta.tan()).clamp(-1.0, 1.0).acos();
    24.0 * 60.0 / PI
        * SOLAR_CONSTANT
        * dr
        * (ws * phi.sin() * delta.sin() + phi.cos() * delta.cos() * ws.sin())
}

fn validate(w: &DailyWeather) -> Result<()> {
    let bad = |what: &str, v: f64| Err(Error::invalid(format!("{what} = {v} is not physical")));
    if !(0.0..=100.0).contains(&w.rh) {
        return bad("relative humidity", w.rh);
    }
    if !(w.shortwave >= 0.0) {
        return bad("shortwave radiation", w.shortwave);
    }
    if !(w.wind >= 0.0) {
        return bad("wind speed", w.wind);
    }
    if !(w.t_min <= w.t_max) {
        return bad("minimum temperature above maximum", w.t_min);
    }
    if !w.t_mean.is_finite() {
        return bad("mean temperature", w.t_mean);
    }
    Ok(())
}

/// Reference evapotranspiration for one day [mm/day].
pub fn reference_et_daily(w: &DailyWeather, site: Site, day_of_year: u32) -> Result<f64> {
    validate(w)?;
    let z = site.elevation_m;
    let pressure = 101.3 * ((293.0 - 0.0065 * z) / 293.0).powf(5.26);
    let gamma = 0.000665 * pressure;
    let t = w.t_mean;
    let es = 0.5 * (saturation_vapour_pressure(w.t_max) + saturation_vapour_pressure(w.t_min));
    let ea = w.rh / 100.0 * es;
    let slope = 4098.0 * saturation_vapour_pressure(t) / ((t + 237.3) * (t + 237.3));

    let rs = w.shortwave * WATTS_TO_MJ_DAY;
    let ra = extraterrestrial_radiation(site.latitude_deg, day_of_year);
    let rso = (0.75 + 2e-5 * z) * ra;
    let cloud = if rso > 0.0 {
        (1.35 * (rs / rso).min(1.0) - 0.35).clamp(0.05, 1.0)
    } else {
        0.05
    };
    let tk4 = 0.5 * ((w.t_max + 273.16).powi(4) + (w.t_min + 273.16).powi(4));
    let rnl = STEFAN_BOLTZMANN * tk4 * (0.34 - 0.14 * ea.sqrt()) * cloud;
    let rn = 0.77 * rs - rnl;

    let num = 0.408 * slope * rn + gamma * 900.0 / (t + 273.0) * w.wind * (es - ea);
    let den = slope + gamma * (1.0 + 0.34 * w.wind);
    Ok((num / den).max(0.0))
}

/// Weekly reference evapotranspiration [mm/week] from mean-day weather.
pub fn penman_monteith_pet(w: &DailyWeather, site: Site, mid_week_day: u32) -> Result<f64> {
    Ok(7.0 * reference_et_daily(w, site, mid_week_day)?)
}
