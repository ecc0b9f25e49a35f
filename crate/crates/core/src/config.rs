//! Run configuration: one TOML file with nested sections. Every path in it
//! is relative to the file's own directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibrate::{BruteForceGrid, Constraint, NelderMeadOptions, SigmaScan, UncertaintyOptions};
use crate::error::{Error, Result};
use crate::gwflow::io::GridDims;
use crate::gwflow::SolverOptions;
use crate::morris::{ParameterDef, ParameterSpace, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub grid: PathBuf,
    pub zones: PathBuf,
    pub boundaries: PathBuf,
    pub wells: PathBuf,
    pub columns: PathBuf,
    pub stations: PathBuf,
    pub met: PathBuf,
    pub basins: PathBuf,
    pub dims: GridDims,
    /// [m]
    pub river_length: f64,
    /// Station that fills gaps at the others.
    #[serde(default)]
    pub donor: Option<String>,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorrisSection {
    pub r_list: Vec<usize>,
    pub pool_size: usize,
    /// Required; `--seed` overrides it.
    pub seed: Option<u64>,
    #[serde(default)]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NllSection {
    pub h_pas_ref: f64,
    pub sigma_hpas: f64,
    /// Defaults to the number of wells.
    #[serde(default)]
    pub n_wells: Option<usize>,
}

fn default_seeds() -> usize {
    15
}

fn default_sigma_bounds() -> [f64; 2] {
    [0.01, 100.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    pub grid: Vec<GridAxis>,
    #[serde(default)]
    pub constraints: Vec<String>,
    /// Values of the parameters held constant.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub sigma_scan: SigmaScan,
    /// Bounds on `σ_h` during refinement [m].
    #[serde(default = "default_sigma_bounds")]
    pub sigma_bounds: [f64; 2],
    pub nll: NllSection,
    #[serde(default)]
    pub nelder_mead: NelderMeadOptions,
    #[serde(default)]
    pub uncertainty: UncertaintyOptions,
    /// Known true values, for synthetic scenarios.
    #[serde(default)]
    pub truth: Option<BTreeMap<String, f64>>,
}

impl CalibrateSection {
    pub fn brute_force_grid(&self) -> Result<BruteForceGrid> {
        let constraints = self
            .constraints
            .iter()
            .map(|c| c.parse())
            .collect::<Result<Vec<Constraint>>>()?;
        let g = BruteForceGrid {
            names: self.grid.iter().map(|a| a.name.clone()).collect(),
            values: self.grid.iter().map(|a| a.values.clone()).collect(),
            constraints,
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Parameter values for a single simulation.
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    /// Ranges of the uncertain parameters.
    #[serde(default)]
    pub parameters: Vec<ParameterDef>,
    #[serde(default)]
    pub morris: Option<MorrisSection>,
    #[serde(default)]
    pub calibrate: Option<CalibrateSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Which command a configuration is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Recharge,
    Morris,
    Calibrate,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::invalid(format!("cannot serialise config: {e}")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn parameter_space(&self) -> Result<ParameterSpace> {
        if self.parameters.is_empty() {
            return Err(Error::invalid("no [[parameters]] defined"));
        }
        ParameterSpace::new(self.parameters.clone())
    }

    fn check_files(&self, files: &[&Path]) -> Result<()> {
        for f in files {
            let p = self.resolve(f);
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        Ok(())
    }

    /// Everything that can be checked without solving.
    pub fn validate(&self, cmd: Command) -> Result<()> {
        let s = &self.scenario;
        if s.period_end < s.period_start {
            return Err(Error::invalid("period_end precedes period_start"));
        }
        let met_files = [s.stations.as_path(), s.met.as_path(), s.basins.as_path()];
        self.check_files(&met_files)?;
        if cmd == Command::Recharge {
            return Ok(());
        }
        self.check_files(&[&s.grid, &s.zones, &s.boundaries, &s.wells, &s.columns])?;
        if !(s.river_length > 0.0) {
            return Err(Error::invalid("river_length must be positive"));
        }
        match cmd {
            Command::Simulate => Ok(()),
            Command::Recharge => Ok(()),
            Command::Morris => {
                let m = self
                    .morris
                    .as_ref()
                    .ok_or_else(|| Error::invalid("no [morris] section"))?;
                if m.seed.is_none() {
                    return Err(Error::invalid("[morris] needs a seed"));
                }
                if m.r_list.is_empty() || m.r_list.iter().any(|&r| r < 2 || r > m.pool_size) {
                    return Err(Error::invalid("every r must lie in 2..=pool_size"));
                }
                self.parameter_space().map(|_| ())
            }
            Command::Calibrate => {
                let c = self
                    .calibrate
                    .as_ref()
                    .ok_or_else(|| Error::invalid("no [calibrate] section"))?;
                if c.grid.is_empty() {
                    return Err(Error::invalid("brute-force grid is empty"));
                }
                let grid = c.brute_force_grid()?;
                let space = self.parameter_space()?;
                for (name, vals) in grid.names.iter().zip(&grid.values) {
                    let p = space.get(name).ok_or_else(|| {
                        Error::invalid(format!("grid parameter {name} has no [[parameters]] range"))
                    })?;
                    if let Some(v) = vals.iter().find(|&&v| !(v >= p.low && v <= p.high)) {
                        return Err(Error::invalid(format!(
                            "grid value {v} of {name} outside [{}, {}]",
                            p.low, p.high
                        )));
                    }
                    if c.fixed.contains_key(name) {
                        return Err(Error::invalid(format!("{name} is both fixed and calibrated")));
                    }
                }
                if c.seeds == 0 {
                    return Err(Error::invalid("seeds must be at least 1"));
                }
                c.sigma_scan.values()?;
                if !(c.nll.sigma_hpas > 0.0) {
                    return Err(Error::invalid("sigma_hpas must be positive"));
                }
                if !(c.sigma_bounds[0] > 0.0 && c.sigma_bounds[0] < c.sigma_bounds[1]) {
                    return Err(Error::invalid("sigma_bounds must satisfy 0 < low < high"));
                }
                Ok(())
            }
        }
    }
}
