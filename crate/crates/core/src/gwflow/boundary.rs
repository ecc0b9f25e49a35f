//! Boundary conditions: constant head, general head, drains and recharge.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, Grid};
use crate::error::{Error, Result};

/// Height above land surface at which rice-field drains start to discharge [m].
pub const RICE_PONDING_DEPTH: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantHead {
    pub cell: Cell,
    pub head: f64,
    /// Counts towards the groundwater flux to the river.
    pub river: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralHead {
    pub cell: Cell,
    pub head: f64,
    /// [m²/s]
    pub conductance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrainTag {
    Spring,
    Rice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drain {
    pub cell: Cell,
    pub elevation: f64,
    /// [m²/s]
    pub conductance: f64,
    pub tag: DrainTag,
}

impl Drain {
    /// Spring drain discharging above the land surface of its column.
    pub fn spring(grid: &Grid, cell: Cell, conductance: f64) -> Self {
        Self {
            cell,
            elevation: grid.land_surface_at(cell.row, cell.col),
            conductance,
            tag: DrainTag::Spring,
        }
    }

    /// Rice-field drain discharging above the ponded water level.
    pub fn rice(grid: &Grid, cell: Cell, conductance: f64) -> Self {
        Self {
            cell,
            elevation: grid.land_surface_at(cell.row, cell.col) + RICE_PONDING_DEPTH,
            conductance,
            tag: DrainTag::Rice,
        }
    }

    /// Discharge out of the aquifer for a given head [m³/s].
    pub fn discharge(&self, head: f64) -> f64 {
        self.conductance * (head - self.elevation).max(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundarySet {
    pub chd: Vec<ConstantHead>,
    pub ghb: Vec<GeneralHead>,
    pub drn: Vec<Drain>,
    /// Recharge flux per column [m/s], applied to the topmost active cell.
    pub rch: Vec<f64>,
}

impl BoundarySet {
    pub fn new(grid: &Grid) -> Self {
        Self {
            rch: vec![0.0; grid.ncolumns()],
            ..Default::default()
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let check_cell = |cell: Cell, what: &str| -> Result<usize> {
            if !grid.contains(cell) {
                return Err(Error::invalid(format!("{what} cell {cell:?} outside grid")));
            }
            let idx = grid.index(cell);
            if !grid.is_active(idx) {
                return Err(Error::invalid(format!("{what} cell {cell:?} is inactive")));
            }
            Ok(idx)
        };
        let mut chd_cells = HashSet::new();
        for b in &self.chd {
            let idx = check_cell(b.cell, "CHD")?;
            if !b.head.is_finite() {
                return Err(Error::invalid(format!("CHD head at {:?} not finite", b.cell)));
            }
            chd_cells.insert(idx);
        }
        for b in &self.ghb {
            let idx = check_cell(b.cell, "GHB")?;
            if chd_cells.contains(&idx) {
                return Err(Error::invalid(format!(
                    "cell {:?} carries both CHD and GHB",
                    b.cell
                )));
            }
            if !(b.conductance > 0.0) {
                return Err(Error::invalid(format!(
                    "GHB conductance at {:?} must be positive",
                    b.cell
                )));
            }
        }
        for d in &self.drn {
            check_cell(d.cell, "DRN")?;
            if !(d.conductance > 0.0) {
                return Err(Error::invalid(format!(
                    "drain conductance at {:?} must be positive",
                    d.cell
                )));
            }
        }
        if self.rch.len() != grid.ncolumns() {
            return Err(Error::invalid(format!(
                "recharge needs {} column values, got {}",
                grid.ncolumns(),
                self.rch.len()
            )));
        }
        if let Some(r) = self.rch.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::invalid(format!("recharge flux {r} must be >= 0")));
        }
        Ok(())
    }
}

/// Discharge of every drain for the given heads [m³/s].
pub fn apply_drains(grid: &Grid, heads: &[f64], drains: &[Drain]) -> Vec<f64> {
    drains
        .iter()
        .map(|d| d.discharge(heads[grid.index(d.cell)]))
        .collect()
}
