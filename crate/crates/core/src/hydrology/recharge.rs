//! Weekly recharge from precipitation per sub-basin and its period average.
//!
//! Basins CSV (one row per basin and contributing station):
//! `basin,area_km2,cn,station,weight`.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::met::{fill_missing, Provenance, Station};
use super::pet::penman_monteith_pet;
use super::scs::scs_runoff;
use crate::error::{Error, Result};
use crate::report::{read_csv, write_csv};

const SECONDS_PER_WEEK: f64 = 7.0 * 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBasin {
    pub id: String,
    pub area_km2: f64,
    pub cn: f64,
    /// Area weight per station, summing to 1.
    pub station_weights: BTreeMap<String, f64>,
}

impl SubBasin {
    pub fn validate(&self) -> Result<()> {
        if !(self.cn > 0.0 && self.cn <= 100.0) {
            return Err(Error::invalid(format!(
                "basin {}: curve number {} outside (0, 100]",
                self.id, self.cn
            )));
        }
        if !(self.area_km2 > 0.0) {
            return Err(Error::invalid(format!("basin {}: area must be positive", self.id)));
        }
        if self.station_weights.values().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid(format!("basin {}: negative weight", self.id)));
        }
        let sum: f64 = self.station_weights.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "basin {}: station weights sum to {sum}",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BasinRecord {
    basin: String,
    area_km2: f64,
    cn: f64,
    station: String,
    weight: f64,
}

pub fn load_basins(path: &Path) -> Result<Vec<SubBasin>> {
    let mut basins: Vec<SubBasin> = Vec::new();
    for r in read_csv::<BasinRecord>(path)? {
        match basins.iter_mut().find(|b| b.id == r.basin) {
            Some(b) => {
                if b.area_km2 != r.area_km2 || b.cn != r.cn {
                    return Err(Error::parse(
                        path,
                        format!("basin {} has conflicting area or CN", r.basin),
                    ));
                }
                b.station_weights.insert(r.station, r.weight);
            }
            None => basins.push(SubBasin {
                id: r.basin,
                area_km2: r.area_km2,
                cn: r.cn,
                station_weights: BTreeMap::from([(r.station, r.weight)]),
            }),
        }
    }
    if basins.is_empty() {
        return Err(Error::parse(path, "no basins"));
    }
    for b in &basins {
        b.validate()?;
    }
    Ok(basins)
}

pub fn write_basins(path: &Path, basins: &[SubBasin]) -> Result<()> {
    write_csv(
        path,
        basins.iter().flat_map(|b| {
            b.station_weights.iter().map(move |(s, &w)| BasinRecord {
                basin: b.id.clone(),
                area_km2: b.area_km2,
                cn: b.cn,
                station: s.clone(),
                weight: w,
            })
        }),
    )
}

/// `max(0, p - p_e - pet)` [mm/week].
pub fn weekly_recharge(p: f64, p_e: f64, pet: f64) -> f64 {
    (p - p_e - pet).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RechargeWeek {
    pub week_start: NaiveDate,
    pub p: f64,
    pub p_e: f64,
    pub pet: f64,
    pub r_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RechargeSeries {
    pub basin: String,
    pub area_km2: f64,
    pub weeks: Vec<RechargeWeek>,
}

/// Inclusive range of week start dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinFlux {
    pub basin: String,
    pub area_km2: f64,
    pub weeks: usize,
    pub mean_r_p_mm_week: f64,
    /// [m/s]
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RechargeSummary {
    pub period: Period,
    pub basins: Vec<BasinFlux>,
    /// Area-weighted mean over basins [m/s].
    pub domain_flux: f64,
    pub provenance: Vec<Provenance>,
}

/// Converts a weekly depth [mm/week] to a flux [m/s].
pub fn mm_per_week_to_flux(mm: f64) -> f64 {
    mm * 1e-3 / SECONDS_PER_WEEK
}

/// Averages each basin's weekly recharge over `period` and converts to m/s.
pub fn basin_recharge_flux(series: &[RechargeSeries], period: Period) -> Result<RechargeSummary> {
    let mut basins = Vec::new();
    for s in series {
        let rp: Vec<f64> = s
            .weeks
            .iter()
            .filter(|w| period.contains(w.week_start))
            .map(|w| w.r_p)
            .collect();
        if rp.is_empty() {
            return Err(Error::invalid(format!(
                "basin {} has no weeks in {} .. {}",
                s.basin, period.start, period.end
            )));
        }
        let mean = rp.iter().sum::<f64>() / rp.len() as f64;
        basins.push(BasinFlux {
            basin: s.basin.clone(),
            area_km2: s.area_km2,
            weeks: rp.len(),
            mean_r_p_mm_week: mean,
            flux: mm_per_week_to_flux(mean),
        });
    }
    if basins.is_empty() {
        return Err(Error::invalid("no basins"));
    }
    let area: f64 = basins.iter().map(|b| b.area_km2).sum();
    let domain_flux = basins.iter().map(|b| b.flux * b.area_km2).sum::<f64>() / area;
    Ok(RechargeSummary {
        period,
        basins,
        domain_flux,
        provenance: Vec::new(),
    })
}

/// Fills gaps from `donor`, then builds every basin's weekly series from
/// area-weighted station precipitation and PET.
pub fn compute_recharge(
    basins: &[SubBasin],
    stations: &[Station],
    donor: Option<&str>,
) -> Result<(Vec<RechargeSeries>, Vec<Provenance>)> {
    let mut provenance = Vec::new();
    let donor_station = match donor {
        Some(id) => Some(
            stations
                .iter()
                .find(|s| s.id == id)
                .ok_or_else(|| Error::invalid(format!("donor station {id} not found")))?
                .clone(),
        ),
        None => None,
    };
    let mut filled: BTreeMap<String, Station> = BTreeMap::new();
    for st in stations {
        let st = match &donor_station {
            Some(d) if d.id != st.id => {
                let (s, p) = fill_missing(st, d)?;
                provenance.extend(p);
                s
            }
            _ => st.clone(),
        };
        filled.insert(st.id.clone(), st);
    }

    // per-station weekly P and PET
    let mut station_weeks: BTreeMap<&str, BTreeMap<NaiveDate, (f64, f64)>> = BTreeMap::new();
    for st in filled.values() {
        let mut weeks = BTreeMap::new();
        for rec in &st.records {
            let p = rec.p_mm.ok_or_else(|| Error::MissingVariable {
                station: st.id.clone(),
                variable: "p_mm".into(),
            })?;
            let pet = penman_monteith_pet(&rec.weather()?, st.site, rec.mid_week_day())?;
            weeks.insert(rec.week_start, (p, pet));
        }
        station_weeks.insert(st.id.as_str(), weeks);
    }

    let mut out = Vec::new();
    for b in basins {
        b.validate()?;
        let mut dates: Option<Vec<NaiveDate>> = None;
        for sid in b.station_weights.keys() {
            let w = station_weeks.get(sid.as_str()).ok_or_else(|| {
                Error::invalid(format!("basin {} references unknown station {sid}", b.id))
            })?;
            let d: Vec<NaiveDate> = w.keys().copied().collect();
            match &dates {
                None => dates = Some(d),
                Some(prev) if *prev != d => {
                    return Err(Error::invalid(format!(
                        "stations of basin {} cover different weeks",
                        b.id
                    )))
                }
                _ => {}
            }
        }
        let dates = dates.unwrap_or_default();
        let mut weeks = Vec::with_capacity(dates.len());
        for d in dates {
            let (mut p, mut pet) = (0.0, 0.0);
            for (sid, w) in &b.station_weights {
                let (sp, spet) = station_weeks[sid.as_str()][&d];
                p += w * sp;
                pet += w * spet;
            }
            let p_e = scs_runoff(p, b.cn)?;
            weeks.push(RechargeWeek {
                week_start: d,
                p,
                p_e,
                pet,
                r_p: weekly_recharge(p, p_e, pet),
            });
        }
        out.push(RechargeSeries {
            basin: b.id.clone(),
            area_km2: b.area_km2,
            weeks,
        });
    }
    Ok((out, provenance))
}
