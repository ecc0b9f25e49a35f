//! Bundled synthetic scenario with known true parameters.
//!
//! A 60 x 40 x 3 grid of 250 m cells: a gravel valley (zone 3) follows a
//! river running north to south through plains of finer sediments (zone 1),
//! with a more permeable patch (zone 2) through the full thickness to the
//! north-east. The river is a constant-head strip, the west, east and south
//! edges are general-head boundaries, a terrace step
//! crosses the plains with spring drains along its foot and irrigated rice fields carry ponding drains. Observed
//! heads are the true solution at 20 wells plus Gaussian noise.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{write_columns, ColumnInfo, Scenario, ScenarioModel};
use crate::calibrate::SigmaScan;
use crate::config::{
    CalibrateSection, GridAxis, MorrisSection, NllSection, OutputSection, RunConfig,
    ScenarioSection,
};
use crate::error::{Error, Result};
use crate::gwflow::io::{boundary_records, write_wells, GridDims, ColumnRecord, ZoneRecord};
use crate::gwflow::{
    build_grid, BoundarySet, Cell, ConstantHead, Drain, GeneralHead, GridSpec, NonlinearMethod,
    SolverOptions,
    Well, WellSet,
};
use crate::hydrology::{
    basin_recharge_flux, compute_recharge, write_basins, write_stations, MetRecord, Period, Site,
    Station, SubBasin,
};
use crate::morris::{ParameterDef, Strategy};
use crate::report::{write_csv, write_json};

pub const NROWS: usize = 60;
pub const NCOLS: usize = 40;
pub const CELL_SIZE: f64 = 250.0;
const AQUIFER_THICKNESS: f64 = 60.0;
const VALLEY_HALF_WIDTH: usize = 4;
const VALLEY_DEPTH: f64 = 6.0;
const RIVER_DEPTH: f64 = 1.0;
const GHB_DEPTH: f64 = 6.0;
const PLAINS_SLOPE: f64 = 0.0035;
const TERRACE_ROW: usize = 38;
const TERRACE_STEP: f64 = 3.5;
const LAYOUT_SEED: u64 = 7;

/// Ranges of the seven uncertain parameters, six levels each.
pub fn screening_parameters() -> Vec<ParameterDef> {
    vec![
        ParameterDef::log10("K_zone1", 5e-5, 1e-3),
        ParameterDef::log10("K_zone2", 5e-5, 1e-3),
        ParameterDef::log10("K_zone3", 1e-4, 1e-2),
        ParameterDef::log10("R_Irrig", 1e-10, 1e-6),
        ParameterDef::linear("S_Riv", -1.0, 1.0),
        ParameterDef::linear("H_GHB", -2.0, 2.0),
        ParameterDef::log10("C_D", 0.1, 100.0),
    ]
}

/// Candidate values for the brute-force search (15, 4, 15 and 20 values).
pub fn brute_force_axes() -> Vec<GridAxis> {
    let axis = |name: &str, values: &[f64]| GridAxis {
        name: name.into(),
        values: values.to_vec(),
    };
    vec![
        axis(
            "K_zone1",
            &[
                1.00e-3, 8.07e-4, 6.52e-4, 5.26e-4, 4.25e-4, 3.43e-4, 2.77e-4, 2.24e-4, 1.81e-4,
                1.46e-4, 1.18e-4, 9.50e-5, 7.67e-5, 6.19e-5, 5.00e-5,
            ],
        ),
        axis("K_zone2", &[1e-3, 3.68e-4, 1.36e-4, 5e-5]),
        axis(
            "K_zone3",
            &[
                1.00e-2, 7.20e-3, 5.18e-3, 3.73e-3, 2.68e-3, 1.93e-3, 1.39e-3, 1.00e-3, 7.20e-4,
                5.18e-4, 3.73e-4, 2.68e-4, 1.93e-4, 1.39e-4, 1.00e-4,
            ],
        ),
        axis(
            "R_Irrig",
            &[
                1.00e-6, 6.16e-7, 3.79e-7, 2.34e-7, 1.44e-7, 8.86e-8, 5.46e-8, 3.36e-8, 2.07e-8,
                1.27e-8, 7.85e-9, 4.83e-9, 2.98e-9, 1.83e-9, 1.13e-9, 6.95e-10, 4.28e-10,
                2.64e-10, 1.62e-10, 1.00e-10,
            ],
        ),
    ]
}

/// The ordering `K_zone3 >= K_zone2 >= K_zone1`.
pub fn conductivity_ordering() -> Vec<String> {
    vec![
        "K_zone3 >= K_zone1".into(),
        "K_zone3 >= K_zone2".into(),
        "K_zone2 >= K_zone1".into(),
    ]
}

pub fn truth() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("K_zone1".to_string(), 2.5e-4),
        ("K_zone2".to_string(), 5.0e-4),
        ("K_zone3".to_string(), 3.0e-3),
        ("R_Irrig".to_string(), 2.5e-8),
        ("S_Riv".to_string(), 0.0),
        ("H_GHB".to_string(), 0.0),
        ("C_D".to_string(), 10.0),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOptions {
    /// Seed of the head noise and weather series.
    pub seed: u64,
    /// Standard deviation of the head noise [m].
    pub noise_sd: f64,
    pub truth: BTreeMap<String, f64>,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            seed: 2014,
            noise_sd: 0.5,
            truth: truth(),
        }
    }
}

/// Everything the bundled scenario consists of, in memory.
#[derive(Debug, Clone)]
pub struct SyntheticScenario {
    pub scenario: Scenario,
    pub stations: Vec<Station>,
    pub basins: Vec<SubBasin>,
    pub period: Period,
    pub donor: String,
    pub options: SyntheticOptions,
    /// Noise-free heads at the wells.
    pub true_heads: Vec<f64>,
}

fn river_col(row: usize) -> usize {
    (20.0 + (1.5 * (row as f64 / 9.0).sin()).round()) as usize
}

fn valley_distance(row: usize, col: usize) -> usize {
    col.abs_diff(river_col(row))
}

fn in_valley(row: usize, col: usize) -> bool {
    valley_distance(row, col) <= VALLEY_HALF_WIDTH
}

fn in_zone2(row: usize, col: usize) -> bool {
    (3..=15).contains(&row) && (28..=37).contains(&col)
}

fn land_surface(row: usize, col: usize) -> f64 {
    let base = 140.0 - 0.003 * CELL_SIZE * row as f64;
    let d = valley_distance(row, col) as f64;
    if in_valley(row, col) {
        base - VALLEY_DEPTH + 0.1 * d
    } else {
        let step = if row >= TERRACE_ROW { TERRACE_STEP } else { 0.0 };
        base - step + PLAINS_SLOPE * CELL_SIZE * (d - VALLEY_HALF_WIDTH as f64)
    }
}

fn is_spring(row: usize, col: usize) -> bool {
    let d = valley_distance(row, col);
    (TERRACE_ROW..TERRACE_ROW + 3).contains(&row) && (6..=14).contains(&d) && d % 2 == 0
}

const WELLS: [(usize, usize); 20] = [
    (8, 6),
    (20, 8),
    (30, 5),
    (42, 10),
    (52, 6),
    (25, 13),
    (36, 3),
    (22, 30),
    (33, 34),
    (45, 29),
    (55, 33),
    (28, 27),
    (50, 31),
    (6, 31),
    (10, 35),
    (13, 30),
    (12, 22),
    (30, 18),
    (45, 22),
    (56, 19),
];

fn weather_series(seed: u64) -> Vec<Station> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let first = NaiveDate::from_ymd_opt(2014, 6, 2).expect("valid date");
    let sites = [("S1", 45.40, 150.0), ("S2", 45.30, 120.0), ("S3", 45.20, 90.0)];
    let noise = Normal::new(0.0, 1.0).expect("valid");
    let mut stations = Vec::new();
    for (k, (id, lat, elev)) in sites.iter().enumerate() {
        let mut records = Vec::new();
        for w in 0..22 {
            let week_start = first + Duration::days(7 * w);
            let doy = (week_start + Duration::days(3)).ordinal() as f64;
            let season = (2.0 * PI * (doy - 200.0) / 365.0).cos();
            let t_mean = 21.0 + 3.0 * season - 0.006 * (elev - 100.0) + 0.8 * noise.sample(&mut rng);
            let p_mm = if rng.gen::<f64>() < 0.25 {
                0.0
            } else {
                (32.0 + 18.0 * noise.sample(&mut rng)).max(2.0) * (1.0 + 0.05 * k as f64)
            };
            let wind = (1.4 + 0.25 * noise.sample(&mut rng)).max(0.3);
            records.push(MetRecord {
                station: id.to_string(),
                week_start,
                p_mm: Some(p_mm),
                t_mean: Some(t_mean),
                t_min: Some(t_mean - 5.5),
                t_max: Some(t_mean + 5.5),
                rh: Some((76.0 + 4.0 * noise.sample(&mut rng)).clamp(40.0, 95.0)),
                shortwave: Some((170.0 + 35.0 * season + 15.0 * noise.sample(&mut rng)).max(50.0)),
                wind: if *id == "S2" && (9..13).contains(&w) {
                    None
                } else {
                    Some(wind)
                },
            });
        }
        stations.push(Station {
            id: id.to_string(),
            site: Site {
                latitude_deg: *lat,
                elevation_m: *elev,
            },
            records,
        });
    }
    stations
}

fn basin_of(row: usize, col: usize) -> &'static str {
    match (row < NROWS / 2, col < NCOLS / 2) {
        (true, true) => "B1",
        (true, false) => "B2",
        (false, true) => "B3",
        (false, false) => "B4",
    }
}

fn sub_basins(columns: &[ColumnInfo]) -> Vec<SubBasin> {
    let area = |id: &str| {
        columns.iter().filter(|c| c.basin == id).count() as f64 * CELL_SIZE * CELL_SIZE / 1e6
    };
    let w = |pairs: &[(&str, f64)]| pairs.iter().map(|(s, x)| (s.to_string(), *x)).collect();
    vec![
        SubBasin {
            id: "B1".into(),
            area_km2: area("B1"),
            cn: 74.0,
            station_weights: w(&[("S1", 0.7), ("S2", 0.3)]),
        },
        SubBasin {
            id: "B2".into(),
            area_km2: area("B2"),
            cn: 70.0,
            station_weights: w(&[("S1", 0.5), ("S2", 0.5)]),
        },
        SubBasin {
            id: "B3".into(),
            area_km2: area("B3"),
            cn: 78.0,
            station_weights: w(&[("S2", 0.4), ("S3", 0.6)]),
        },
        SubBasin {
            id: "B4".into(),
            area_km2: area("B4"),
            cn: 72.0,
            station_weights: w(&[("S3", 1.0)]),
        },
    ]
}

pub fn study_period() -> Period {
    Period {
        start: NaiveDate::from_ymd_opt(2014, 8, 1).expect("valid date"),
        end: NaiveDate::from_ymd_opt(2014, 9, 30).expect("valid date"),
    }
}

fn grid_dims() -> GridDims {
    GridDims {
        nrows: NROWS,
        ncols: NCOLS,
        dx: CELL_SIZE,
        dy: CELL_SIZE,
        anisotropy: crate::gwflow::grid::DEFAULT_ANISOTROPY,
    }
}

/// Builds the scenario and its observed heads.
pub fn generate(options: &SyntheticOptions) -> Result<SyntheticScenario> {
    let mut spec = GridSpec::uniform(NROWS, NCOLS, CELL_SIZE, CELL_SIZE, 0.0, -1.0);
    for r in 0..NROWS {
        for c in 0..NCOLS {
            let j = r * NCOLS + c;
            spec.top[j] = land_surface(r, c);
            spec.base[j] = spec.top[j] - AQUIFER_THICKNESS;
            let nc = NROWS * NCOLS;
            for layer in 0..3 {
                spec.zone_id[layer * nc + j] = if in_valley(r, c) {
                    3
                } else if in_zone2(r, c) {
                    2
                } else {
                    1
                };
            }
        }
    }
    let grid = build_grid(spec)?;

    let mut bcs = BoundarySet::new(&grid);
    for r in 0..NROWS {
        let c = river_col(r);
        bcs.chd.push(ConstantHead {
            cell: Cell::new(0, r, c),
            head: land_surface(r, c) - RIVER_DEPTH,
            river: true,
        });
    }
    let mut ghb_cells = Vec::new();
    for r in 0..NROWS {
        ghb_cells.push((r, 0));
        ghb_cells.push((r, NCOLS - 1));
    }
    for c in 1..NCOLS - 1 {
        ghb_cells.push((NROWS - 1, c));
    }
    for &(r, c) in &ghb_cells {
        for layer in 0..3 {
            if layer == 0 && c == river_col(r) {
                continue;
            }
            let thickness = grid.cell_thickness(grid.index(Cell::new(layer, r, c)));
            bcs.ghb.push(GeneralHead {
                cell: Cell::new(layer, r, c),
                head: land_surface(r, c) - GHB_DEPTH,
                conductance: 1.2e-4 * CELL_SIZE * thickness / (0.5 * CELL_SIZE),
            });
        }
    }

    let c_d = options.truth.get("C_D").copied().unwrap_or(10.0);
    let mut layout = ChaCha8Rng::seed_from_u64(LAYOUT_SEED);
    let mut columns = Vec::with_capacity(NROWS * NCOLS);
    let block_rice: Vec<bool> = (0..(NROWS / 2) * (NCOLS / 2)).map(|_| layout.gen::<f64>() < 0.6).collect();
    for r in 0..NROWS {
        for c in 0..NCOLS {
            let rice = r >= 18
                && (2..NCOLS - 2).contains(&c)
                && !in_valley(r, c)
                && !is_spring(r, c)
                && valley_distance(r, c) > VALLEY_HALF_WIDTH + 1
                && block_rice[(r / 2) * (NCOLS / 2) + c / 2];
            if is_spring(r, c) {
                bcs.drn.push(Drain::spring(&grid, Cell::new(0, r, c), c_d));
            }
            if rice {
                bcs.drn.push(Drain::rice(&grid, Cell::new(0, r, c), c_d));
            }
            columns.push(ColumnInfo {
                row: r,
                col: c,
                basin: basin_of(r, c).into(),
                irrigated: rice as u8,
            });
        }
    }

    let placeholder: Vec<Well> = WELLS
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| Well {
            id: format!("W{:02}", i + 1),
            cell: Cell::new(0, r, c),
            head: 0.0,
        })
        .collect();
    let wells = WellSet::new(&grid, placeholder)?;

    let stations = weather_series(options.seed);
    let basins = sub_basins(&columns);
    let donor = "S1".to_string();
    let period = study_period();
    let (series, provenance) = compute_recharge(&basins, &stations, Some(&donor))?;
    let mut summary = basin_recharge_flux(&series, period)?;
    summary.provenance = provenance;

    let mut scenario = Scenario {
        dims: grid_dims(),
        grid,
        bcs,
        wells,
        columns,
        river_length: NROWS as f64 * CELL_SIZE,
        precip_recharge: Vec::new(),
    };
    scenario.set_precip_recharge(&summary)?;

    let names: Vec<String> = options.truth.keys().cloned().collect();
    let values: Vec<f64> = options.truth.values().copied().collect();
    let model = ScenarioModel::new(scenario.clone(), &names, &BTreeMap::new(), SolverOptions::default())?;
    let run = model.run(&values)?;
    let true_heads = scenario.wells.modelled(&scenario.grid, &run.result.heads);
    let noise = Normal::new(0.0, options.noise_sd)
        .map_err(|e| Error::invalid(format!("noise standard deviation: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let observed: Vec<f64> = true_heads.iter().map(|h| h + noise.sample(&mut rng)).collect();
    scenario.wells = scenario.wells.with_heads(&observed);

    Ok(SyntheticScenario {
        scenario,
        stations,
        basins,
        period,
        donor,
        options: options.clone(),
        true_heads,
    })
}

impl SyntheticScenario {
    /// Run configuration pointing at the files written by [`SyntheticScenario::write`].
    pub fn run_config(&self) -> RunConfig {
        let truth = self.options.truth.clone();
        let fixed: BTreeMap<String, f64> = ["S_Riv", "H_GHB", "C_D"]
            .iter()
            .filter_map(|k| truth.get(*k).map(|v| (k.to_string(), *v)))
            .collect();
        RunConfig {
            scenario: ScenarioSection {
                grid: "grid.csv".into(),
                zones: "zones.csv".into(),
                boundaries: "boundaries.csv".into(),
                wells: "wells.csv".into(),
                columns: "columns.csv".into(),
                stations: "stations.csv".into(),
                met: "met.csv".into(),
                basins: "basins.csv".into(),
                dims: self.scenario.dims.clone(),
                river_length: self.scenario.river_length,
                donor: Some(self.donor.clone()),
                period_start: self.period.start,
                period_end: self.period.end,
            },
            solver: SolverOptions {
                method: NonlinearMethod::Picard,
                ..SolverOptions::default()
            },
            values: truth.clone(),
            parameters: screening_parameters(),
            morris: Some(MorrisSection {
                r_list: vec![30, 50],
                pool_size: 100,
                seed: Some(2014),
                strategy: Strategy::Greedy,
            }),
            calibrate: Some(CalibrateSection {
                seeds: 15,
                grid: brute_force_axes(),
                constraints: conductivity_ordering(),
                fixed,
                sigma_scan: SigmaScan {
                    count: 50,
                    low: 0.98,
                    high: 4.5,
                },
                sigma_bounds: [0.01, 100.0],
                nll: NllSection {
                    h_pas_ref: 1.0,
                    sigma_hpas: 0.3,
                    n_wells: Some(self.scenario.wells.len()),
                },
                nelder_mead: Default::default(),
                uncertainty: Default::default(),
                truth: Some(truth),
            }),
            output: OutputSection::default(),
            base_dir: Default::default(),
        }
    }

    /// Writes every scenario file plus `config.toml` and `truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let s = &self.scenario;
        let g = &s.grid;
        write_csv(
            &dir.join("grid.csv"),
            (0..g.ncolumns()).map(|j| {
                let (r, c) = (j / g.ncols(), j % g.ncols());
                ColumnRecord {
                    row: r,
                    col: c,
                    top: g.land_surface(j),
                    base: g.column_bottoms(r, c).last().copied().unwrap_or(f64::NAN),
                    active: g.topmost_active(j).is_some() as u8,
                }
            }),
        )?;
        write_csv(
            &dir.join("zones.csv"),
            (0..g.ncells()).map(|i| {
                let cell = g.cell(i);
                ZoneRecord {
                    layer: cell.layer,
                    row: cell.row,
                    col: cell.col,
                    zone: g.zone(i),
                }
            }),
        )?;
        write_csv(&dir.join("boundaries.csv"), boundary_records(&s.bcs))?;
        write_wells(&dir.join("wells.csv"), &s.wells)?;
        write_columns(&dir.join("columns.csv"), &s.columns)?;
        write_stations(&dir.join("stations.csv"), &dir.join("met.csv"), &self.stations)?;
        write_basins(&dir.join("basins.csv"), &self.basins)?;
        let cfg = self.run_config();
        let path = dir.join("config.toml");
        std::fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))?;
        #[derive(Serialize)]
        struct Truth<'a> {
            parameters: &'a BTreeMap<String, f64>,
            noise_sd: f64,
            seed: u64,
            true_heads: &'a [f64],
        }
        write_json(
            &dir.join("truth.json"),
            &Truth {
                parameters: &self.options.truth,
                noise_sd: self.options.noise_sd,
                seed: self.options.seed,
                true_heads: &self.true_heads,
            },
        )
    }
}
