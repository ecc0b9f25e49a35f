//! Meteorological station series at weekly resolution.
//!
//! Met CSV: `station,week_start,p_mm,t_mean,t_min,t_max,rh,shortwave,wind`
//! with blank fields for missing values. Stations CSV:
//! `station,latitude,elevation`. Daily data can be folded into weeks with
//! [`aggregate_weekly`] (precipitation summed, everything else averaged).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::pet::{DailyWeather, Site};
use crate::error::{Error, Result};
use crate::report::{read_csv, write_csv};

/// Variables carried by a met record, in file order.
pub const VARIABLES: [&str; 7] = ["p_mm", "t_mean", "t_min", "t_max", "rh", "shortwave", "wind"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetRecord {
    pub station: String,
    pub week_start: NaiveDate,
    pub p_mm: Option<f64>,
    pub t_mean: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub rh: Option<f64>,
    /// [W/m²]
    pub shortwave: Option<f64>,
    /// At 2 m [m/s].
    pub wind: Option<f64>,
}

impl MetRecord {
    pub fn get(&self, variable: &str) -> Option<f64> {
        match variable {
            "p_mm" => self.p_mm,
            "t_mean" => self.t_mean,
            "t_min" => self.t_min,
            "t_max" => self.t_max,
            "rh" => self.rh,
            "shortwave" => self.shortwave,
            "wind" => self.wind,
            _ => None,
        }
    }

    fn slot(&mut self, variable: &str) -> &mut Option<f64> {
        match variable {
            "p_mm" => &mut self.p_mm,
            "t_mean" => &mut self.t_mean,
            "t_min" => &mut self.t_min,
            "t_max" => &mut self.t_max,
            "rh" => &mut self.rh,
            "shortwave" => &mut self.shortwave,
            "wind" => &mut self.wind,
            _ => unreachable!("unknown variable {variable}"),
        }
    }

    /// Mean-day weather, failing on the first missing variable.
    pub fn weather(&self) -> Result<DailyWeather> {
        let need = |v: &str| {
            self.get(v).ok_or_else(|| Error::MissingVariable {
                station: self.station.clone(),
                variable: v.to_string(),
            })
        };
        Ok(DailyWeather {
            t_mean: need("t_mean")?,
            t_min: need("t_min")?,
            t_max: need("t_max")?,
            rh: need("rh")?,
            shortwave: need("shortwave")?,
            wind: need("wind")?,
        })
    }

    /// Day of year in the middle of the week.
    pub fn mid_week_day(&self) -> u32 {
        (self.week_start + Duration::days(3)).ordinal()
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::invalid(format!(
                "station {} week {}: {what} = {v}",
                self.station, self.week_start
            )))
        };
        if let Some(p) = self.p_mm.filter(|p| !(*p >= 0.0)) {
            return bad("precipitation", p);
        }
        if let Some(rh) = self.rh.filter(|r| !(0.0..=100.0).contains(r)) {
            return bad("relative humidity", rh);
        }
        if let Some(s) = self.shortwave.filter(|s| !(*s >= 0.0)) {
            return bad("shortwave radiation", s);
        }
        if let Some(u) = self.wind.filter(|u| !(*u >= 0.0)) {
            return bad("wind speed", u);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub site: Site,
    /// Weekly records sorted by week start.
    pub records: Vec<MetRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StationRecord {
    station: String,
    latitude: f64,
    elevation: f64,
}

/// Loads station metadata and their weekly records.
pub fn load_stations(stations_csv: &Path, met_csv: &Path) -> Result<Vec<Station>> {
    let mut by_id: BTreeMap<String, Station> = BTreeMap::new();
    for s in read_csv::<StationRecord>(stations_csv)? {
        by_id.insert(
            s.station.clone(),
            Station {
                id: s.station,
                site: Site {
                    latitude_deg: s.latitude,
                    elevation_m: s.elevation,
                },
                records: Vec::new(),
            },
        );
    }
    for rec in read_csv::<MetRecord>(met_csv)? {
        rec.validate()?;
        match by_id.get_mut(&rec.station) {
            Some(st) => st.records.push(rec),
            None => {
                return Err(Error::parse(
                    met_csv,
                    format!("unknown station {}", rec.station),
                ))
            }
        }
    }
    let mut out: Vec<Station> = by_id.into_values().collect();
    for st in &mut out {
        st.records.sort_by_key(|r| r.week_start);
        if st.records.windows(2).any(|w| w[0].week_start == w[1].week_start) {
            return Err(Error::parse(met_csv, format!("duplicate week at {}", st.id)));
        }
    }
    Ok(out)
}

/// Writes station metadata and all weekly records.
pub fn write_stations(stations_csv: &Path, met_csv: &Path, stations: &[Station]) -> Result<()> {
    write_csv(
        stations_csv,
        stations.iter().map(|s| StationRecord {
            station: s.id.clone(),
            latitude: s.site.latitude_deg,
            elevation: s.site.elevation_m,
        }),
    )?;
    write_csv(met_csv, stations.iter().flat_map(|s| s.records.iter()))
}

/// One substituted variable: which station supplied it and for how many weeks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub station: String,
    pub variable: String,
    pub donor: String,
    pub weeks: usize,
}

/// Fills gaps in `station` from the same week of `donor`.
pub fn fill_missing(station: &Station, donor: &Station) -> Result<(Station, Vec<Provenance>)> {
    let donor_weeks: BTreeMap<NaiveDate, &MetRecord> =
        donor.records.iter().map(|r| (r.week_start, r)).collect();
    let mut filled = station.clone();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for rec in &mut filled.records {
        for var in VARIABLES {
            if rec.get(var).is_some() {
                continue;
            }
            let value = donor_weeks
                .get(&rec.week_start)
                .and_then(|d| d.get(var))
                .ok_or_else(|| Error::MissingVariable {
                    station: station.id.clone(),
                    variable: var.to_string(),
                })?;
            *rec.slot(var) = Some(value);
            *counts.entry(var).or_default() += 1;
        }
    }
    let provenance = VARIABLES
        .iter()
        .filter_map(|v| {
            counts.get(v).map(|&n| Provenance {
                station: station.id.clone(),
                variable: v.to_string(),
                donor: donor.id.clone(),
                weeks: n,
            })
        })
        .collect();
    Ok((filled, provenance))
}

/// Folds daily records (keyed by their date in `week_start`) into weeks
/// starting at `first_day`. Incomplete trailing weeks are dropped.
pub fn aggregate_weekly(daily: &[MetRecord], first_day: NaiveDate) -> Result<Vec<MetRecord>> {
    let mut weeks: BTreeMap<i64, Vec<&MetRecord>> = BTreeMap::new();
    for d in daily {
        let offset = (d.week_start - first_day).num_days();
        if offset >= 0 {
            weeks.entry(offset / 7).or_default().push(d);
        }
    }
    let station = daily.first().map(|d| d.station.clone()).unwrap_or_default();
    let mut out = Vec::new();
    for (w, days) in weeks {
        if days.len() != 7 {
            continue;
        }
        let mut rec = MetRecord {
            station: station.clone(),
            week_start: first_day + Duration::days(7 * w),
            p_mm: None,
            t_mean: None,
            t_min: None,
            t_max: None,
            rh: None,
            shortwave: None,
            wind: None,
        };
        for var in VARIABLES {
            let vals: Option<Vec<f64>> = days.iter().map(|d| d.get(var)).collect();
            *rec.slot(var) = vals.map(|v| {
                let s: f64 = v.iter().sum();
                if var == "p_mm" {
                    s
                } else {
                    s / 7.0
                }
            });
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::invalid("no complete week in daily series"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(station: &str, day: u32, wind: Option<f64>) -> MetRecord {
        MetRecord {
            station: station.into(),
            week_start: NaiveDate::from_ymd_opt(2014, 8, day).unwrap(),
            p_mm: Some(10.0),
            t_mean: Some(22.0),
            t_min: Some(16.0),
            t_max: Some(28.0),
            rh: Some(70.0),
            shortwave: Some(180.0),
            wind,
        }
    }

    fn station(id: &str, wind: Option<f64>) -> Station {
        Station {
            id: id.into(),
            site: Site {
                latitude_deg: 45.2,
                elevation_m: 90.0,
            },
            records: vec![rec(id, 4, wind), rec(id, 11, wind)],
        }
    }

    #[test]
    fn donor_supplies_missing_wind() {
        let (b, prov) = fill_missing(&station("B", None), &station("D", Some(1.3))).unwrap();
        assert!(b.records.iter().all(|r| r.wind == Some(1.3)));
        assert_eq!(prov.len(), 1);
        assert_eq!(prov[0].variable, "wind");
        assert_eq!(prov[0].weeks, 2);
    }

    #[test]
    fn complete_series_is_unchanged() {
        let a = station("A", Some(2.0));
        let (b, prov) = fill_missing(&a, &station("D", None)).unwrap();
        assert_eq!(a, b);
        assert!(prov.is_empty());
    }

    #[test]
    fn missing_everywhere_names_the_variable() {
        let err = fill_missing(&station("B", None), &station("D", None)).unwrap_err();
        match err {
            Error::MissingVariable { variable, .. } => assert_eq!(variable, "wind"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn daily_values_fold_into_weeks() {
        let start = NaiveDate::from_ymd_opt(2014, 8, 4).unwrap();
        let daily: Vec<MetRecord> = (0..10)
            .map(|i| MetRecord {
                week_start: start + Duration::days(i),
                p_mm: Some(i as f64),
                rh: Some(60.0 + i as f64),
                ..rec("A", 4, Some(1.0))
            })
            .collect();
        let w = aggregate_weekly(&daily, start).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].p_mm, Some(21.0));
        assert_eq!(w[0].rh, Some(63.0));
        assert_eq!(w[0].wind, Some(1.0));
    }
}
