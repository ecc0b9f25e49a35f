//! Scenario data on disk and the parameterised model built from it.
//!
//! Besides the flow-model files, a scenario carries a `columns` file with
//! header `row,col,basin,irrigated` assigning every column to a recharge
//! sub-basin and flagging irrigated (rice) columns.

pub mod synthetic;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibrate::Evaluation;
use crate::error::{Error, Result};
use crate::gwflow::io::GridDims;
use crate::gwflow::{
    compute_qoi, heads_above_surface_pct, BoundarySet, Grid, QoIBundle, SolveResult,
    SolverOptions, SteadySolver, WellSet,
};
use crate::hydrology::RechargeSummary;
use crate::report::{read_csv, write_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub row: usize,
    pub col: usize,
    pub basin: String,
    pub irrigated: u8,
}

pub fn load_columns(path: &Path, grid: &Grid) -> Result<Vec<ColumnInfo>> {
    let mut recs = read_csv::<ColumnInfo>(path)?;
    if recs.len() != grid.ncolumns() {
        return Err(Error::parse(
            path,
            format!("{} column records for {} columns", recs.len(), grid.ncolumns()),
        ));
    }
    recs.sort_by_key(|r| (r.row, r.col));
    for (i, r) in recs.iter().enumerate() {
        if r.row * grid.ncols() + r.col != i {
            return Err(Error::parse(path, format!("column ({}, {}) repeated or outside grid", r.row, r.col)));
        }
    }
    Ok(recs)
}

pub fn write_columns(path: &Path, columns: &[ColumnInfo]) -> Result<()> {
    write_csv(path, columns)
}

/// Grid, base boundaries and wells plus the column attributes needed to
/// place recharge.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dims: GridDims,
    pub grid: Grid,
    /// Boundaries as read; recharge is assembled per run.
    pub bcs: BoundarySet,
    pub wells: WellSet,
    pub columns: Vec<ColumnInfo>,
    pub river_length: f64,
    /// Precipitation recharge per column [m/s].
    pub precip_recharge: Vec<f64>,
}

impl Scenario {
    /// Spreads each basin's period-average flux over its columns.
    pub fn set_precip_recharge(&mut self, summary: &RechargeSummary) -> Result<()> {
        let by_basin: BTreeMap<&str, f64> =
            summary.basins.iter().map(|b| (b.basin.as_str(), b.flux)).collect();
        self.precip_recharge = self
            .columns
            .iter()
            .map(|c| {
                by_basin.get(c.basin.as_str()).copied().ok_or_else(|| {
                    Error::invalid(format!("column ({}, {}) lies in unknown basin {}", c.row, c.col, c.basin))
                })
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn irrigated_area(&self) -> f64 {
        self.columns.iter().filter(|c| c.irrigated != 0).count() as f64 * self.grid.cell_area()
    }
}

/// How a named parameter acts on the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Horizontal conductivity of a zone [m/s].
    Conductivity(usize),
    /// Irrigation recharge on irrigated columns [m/s].
    IrrigationRecharge,
    /// Offset added to every river CHD head [m].
    RiverStage,
    /// Offset added to every GHB head [m].
    GhbHead,
    /// Conductance of every drain [m²/s].
    DrainConductance,
}

impl ParamKind {
    pub fn parse(name: &str) -> Result<Self> {
        if let Some(z) = name.strip_prefix("K_zone") {
            return z
                .parse()
                .map(ParamKind::Conductivity)
                .map_err(|_| Error::invalid(format!("bad zone in parameter {name}")));
        }
        match name {
            "R_Irrig" => Ok(ParamKind::IrrigationRecharge),
            "S_Riv" => Ok(ParamKind::RiverStage),
            "H_GHB" => Ok(ParamKind::GhbHead),
            "C_D" => Ok(ParamKind::DrainConductance),
            _ => Err(Error::invalid(format!(
                "unknown parameter {name} (expected K_zone<n>, R_Irrig, S_Riv, H_GHB or C_D)"
            ))),
        }
    }
}

/// Result of one run at a full parameter vector.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub bcs: BoundarySet,
    pub result: SolveResult,
    pub qoi: QoIBundle,
}

/// A scenario bound to an ordered list of free parameters; everything else
/// is taken from `fixed`.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    scenario: Scenario,
    names: Vec<String>,
    kinds: Vec<ParamKind>,
    fixed: Vec<(ParamKind, f64)>,
    solver: SolverOptions,
}

impl ScenarioModel {
    pub fn new(
        scenario: Scenario,
        names: &[String],
        fixed: &BTreeMap<String, f64>,
        solver: SolverOptions,
    ) -> Result<Self> {
        let kinds = names.iter().map(|n| ParamKind::parse(n)).collect::<Result<Vec<_>>>()?;
        let mut fixed_kinds = Vec::new();
        for (n, &v) in fixed {
            if names.contains(n) {
                continue;
            }
            fixed_kinds.push((ParamKind::parse(n)?, v));
        }
        let zones: std::collections::BTreeSet<usize> = (0..scenario.grid.ncells())
            .filter(|&i| scenario.grid.is_active(i))
            .map(|i| scenario.grid.zone(i))
            .collect();
        for z in zones {
            let k = ParamKind::Conductivity(z);
            if !kinds.contains(&k) && !fixed_kinds.iter().any(|(f, _)| *f == k) {
                return Err(Error::invalid(format!("no value for K_zone{z}")));
            }
        }
        if scenario.precip_recharge.len() != scenario.grid.ncolumns() {
            return Err(Error::invalid("precipitation recharge not set for every column"));
        }
        Ok(Self {
            scenario,
            names: names.to_vec(),
            kinds,
            fixed: fixed_kinds,
            solver,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Conductivities and boundaries for the given free values.
    pub fn build(&self, values: &[f64]) -> Result<(BTreeMap<usize, f64>, BoundarySet)> {
        if values.len() != self.names.len() {
            return Err(Error::invalid(format!(
                "{} values for {} parameters",
                values.len(),
                self.names.len()
            )));
        }
        let s = &self.scenario;
        let mut k = BTreeMap::new();
        let mut r_irrig = 0.0;
        let mut s_riv = 0.0;
        let mut h_ghb = 0.0;
        let mut c_d = None;
        for (kind, v) in self.fixed.iter().copied().chain(self.kinds.iter().copied().zip(values.iter().copied())) {
            match kind {
                ParamKind::Conductivity(z) => {
                    k.insert(z, v);
                }
                ParamKind::IrrigationRecharge => r_irrig = v,
                ParamKind::RiverStage => s_riv = v,
                ParamKind::GhbHead => h_ghb = v,
                ParamKind::DrainConductance => c_d = Some(v),
            }
        }
        let mut bcs = s.bcs.clone();
        for b in bcs.chd.iter_mut().filter(|b| b.river) {
            b.head += s_riv;
        }
        for b in &mut bcs.ghb {
            b.head += h_ghb;
        }
        if let Some(c) = c_d {
            for d in &mut bcs.drn {
                d.conductance = c;
            }
        }
        bcs.rch = s
            .precip_recharge
            .iter()
            .zip(&s.columns)
            .map(|(&p, c)| if c.irrigated != 0 { p + r_irrig } else { p })
            .collect();
        Ok((k, bcs))
    }

    pub fn run(&self, values: &[f64]) -> Result<ModelRun> {
        let (k, bcs) = self.build(values)?;
        let s = &self.scenario;
        let result = SteadySolver::new(&s.grid, &k, &bcs, self.solver.clone())?.solve()?;
        let qoi = compute_qoi(&s.grid, &result, &bcs, &s.wells, s.river_length)?;
        Ok(ModelRun { bcs, result, qoi })
    }

    /// Well heads and flooded share; `None` if the solve fails.
    pub fn evaluation(&self, values: &[f64]) -> Option<Evaluation> {
        let run = self.run(values).ok()?;
        let s = &self.scenario;
        Some(Evaluation {
            heads: s.wells.modelled(&s.grid, &run.result.heads),
            h_pas: heads_above_surface_pct(&s.grid, &run.result.heads),
            qoi: Some(run.qoi),
        })
    }

    /// Names of the outputs returned by [`ScenarioModel::screening_outputs`].
    pub fn screening_output_names(&self) -> Vec<String> {
        let mut v: Vec<String> = SCREENING_QOIS.iter().map(|s| s.to_string()).collect();
        v.extend(self.scenario.wells.wells().iter().map(|w| format!("head:{}", w.id)));
        v
    }

    /// RMSE, flooded share, river flux per metre, then every well head.
    pub fn screening_outputs(&self, values: &[f64]) -> Option<Vec<f64>> {
        let run = self.run(values).ok()?;
        let s = &self.scenario;
        let mut v = vec![run.qoi.rmse_h, run.qoi.h_pas, run.qoi.gw_flux_per_m];
        v.extend(s.wells.modelled(&s.grid, &run.result.heads));
        Some(v)
    }
}

/// Scalar outputs screened alongside the per-well heads.
pub const SCREENING_QOIS: [&str; 3] = ["rmse_h", "h_pas", "gw_flux_per_m"];
