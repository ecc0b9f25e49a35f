//! Quantities of interest extracted from a solved model.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::boundary::{BoundarySet, DrainTag};
use super::grid::{Cell, Grid};
use super::solver::SolveResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Well {
    pub id: String,
    pub cell: Cell,
    /// Measured head [m asl].
    pub head: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WellSet {
    wells: Vec<Well>,
}

impl WellSet {
    pub fn new(grid: &Grid, wells: Vec<Well>) -> Result<Self> {
        let mut ids = HashSet::new();
        for w in &wells {
            if !grid.contains(w.cell) || !grid.is_active(grid.index(w.cell)) {
                return Err(Error::invalid(format!(
                    "well {} is not in an active cell",
                    w.id
                )));
            }
            if !ids.insert(w.id.clone()) {
                return Err(Error::invalid(format!("duplicate well id {}", w.id)));
            }
            if !w.head.is_finite() {
                return Err(Error::invalid(format!("well {} head not finite", w.id)));
            }
        }
        Ok(Self { wells })
    }

    pub fn wells(&self) -> &[Well] {
        &self.wells
    }

    pub fn len(&self) -> usize {
        self.wells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wells.is_empty()
    }

    pub fn observed(&self) -> Vec<f64> {
        self.wells.iter().map(|w| w.head).collect()
    }

    pub fn modelled(&self, grid: &Grid, heads: &[f64]) -> Vec<f64> {
        self.wells
            .iter()
            .map(|w| heads[grid.index(w.cell)])
            .collect()
    }

    /// Same wells with measured heads replaced.
    pub fn with_heads(&self, heads: &[f64]) -> Self {
        Self {
            wells: self
                .wells
                .iter()
                .zip(heads)
                .map(|(w, &h)| Well { head: h, ..w.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoIBundle {
    /// [m]
    pub rmse_h: f64,
    /// Percent of active surface cells with head above land surface.
    pub h_pas: f64,
    /// Net groundwater flow into river CHD cells per unit river length [m³/s/m].
    pub gw_flux_per_m: f64,
    /// Percent of spring drains discharging.
    pub active_drain_pct: f64,
    /// Mean discharge of discharging spring drains [l/s].
    pub mean_drain_q: f64,
    /// [l/s]
    pub max_drain_q: f64,
}

pub fn rmse(modelled: &[f64], observed: &[f64]) -> f64 {
    let n = modelled.len() as f64;
    let ss: f64 = modelled
        .iter()
        .zip(observed)
        .map(|(m, o)| (m - o) * (m - o))
        .sum();
    (ss / n).sqrt()
}

/// Percent of columns whose topmost active cell has head above land surface.
pub fn heads_above_surface_pct(grid: &Grid, heads: &[f64]) -> f64 {
    let mut total = 0usize;
    let mut above = 0usize;
    for col in 0..grid.ncolumns() {
        if let Some(i) = grid.topmost_active(col) {
            total += 1;
            if heads[i] > grid.land_surface(col) {
                above += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        100.0 * above as f64 / total as f64
    }
}

pub fn compute_qoi(
    grid: &Grid,
    result: &SolveResult,
    bcs: &BoundarySet,
    wells: &WellSet,
    river_length: f64,
) -> Result<QoIBundle> {
    if wells.is_empty() {
        return Err(Error::invalid("well set is empty"));
    }
    if !result.converged {
        return Err(Error::NotConverged {
            iterations: result.iterations,
            residual: result.final_residual,
        });
    }
    if !(river_length > 0.0) {
        return Err(Error::invalid("river length must be positive"));
    }
    let rmse_h = rmse(&wells.modelled(grid, &result.heads), &wells.observed());
    let h_pas = heads_above_surface_pct(grid, &result.heads);
    let river_q: f64 = bcs
        .chd
        .iter()
        .zip(&result.chd_flows)
        .filter(|(b, _)| b.river)
        .map(|(_, q)| q)
        .sum();
    let springs: Vec<f64> = bcs
        .drn
        .iter()
        .zip(&result.drain_flows)
        .filter(|(d, _)| d.tag == DrainTag::Spring)
        .map(|(_, &q)| q)
        .collect();
    let active: Vec<f64> = springs.iter().copied().filter(|&q| q > 0.0).collect();
    let active_drain_pct = if springs.is_empty() {
        0.0
    } else {
        100.0 * active.len() as f64 / springs.len() as f64
    };
    let (mean_drain_q, max_drain_q) = if active.is_empty() {
        (0.0, 0.0)
    } else {
        (
            1e3 * active.iter().sum::<f64>() / active.len() as f64,
            1e3 * active.iter().copied().fold(0.0, f64::max),
        )
    };
    Ok(QoIBundle {
        rmse_h,
        h_pas,
        gw_flux_per_m: river_q / river_length,
        active_drain_pct,
        mean_drain_q,
        max_drain_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_of_known_residuals() {
        let r = rmse(&[11.0, 8.0, 12.0], &[10.0, 10.0, 10.0]);
        assert!((r - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    }
}
