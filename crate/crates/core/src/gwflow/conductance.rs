//! Intercell conductances of the control-volume discretisation.

use std::collections::BTreeMap;

use super::grid::{Grid, LayerKind};
use crate::error::{Error, Result};

/// Minimum saturated thickness used for transmissivity [m].
pub const DRY_THICKNESS_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceDirection {
    /// Between columns `c` and `c + 1`.
    Row,
    /// Between rows `r` and `r + 1`.
    Column,
    /// Between layers `l` and `l + 1`.
    Vertical,
}

/// A face shared by two active cells, `a` before `b` in flat order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub direction: FaceDirection,
}

/// All faces between pairs of active cells.
pub fn faces(grid: &Grid) -> Vec<Face> {
    let (nr, nc, nl) = (grid.nrows(), grid.ncols(), grid.nlayers());
    let ncol = grid.ncolumns();
    let mut out = Vec::new();
    for l in 0..nl {
        for r in 0..nr {
            for c in 0..nc {
                let i = (l * nr + r) * nc + c;
                if !grid.is_active(i) {
                    continue;
                }
                let mut push = |j: usize, direction| {
                    if grid.is_active(j) {
                        out.push(Face { a: i, b: j, direction });
                    }
                };
                if c + 1 < nc {
                    push(i + 1, FaceDirection::Row);
                }
                if r + 1 < nr {
                    push(i + nc, FaceDirection::Column);
                }
                if l + 1 < nl {
                    push(i + ncol, FaceDirection::Vertical);
                }
            }
        }
    }
    out
}

/// Horizontal hydraulic conductivity per cell from zone values; NaN for
/// inactive cells.
pub fn cell_conductivity(grid: &Grid, k_values: &BTreeMap<usize, f64>) -> Result<Vec<f64>> {
    (0..grid.ncells())
        .map(|i| {
            if !grid.is_active(i) {
                return Ok(f64::NAN);
            }
            let zone = grid.zone(i);
            match k_values.get(&zone) {
                Some(&k) if k > 0.0 && k.is_finite() => Ok(k),
                Some(&k) => Err(Error::invalid(format!(
                    "conductivity {k} of zone {zone} must be positive"
                ))),
                None => {
                    let cell = grid.cell(i);
                    Err(Error::InvalidCell {
                        layer: cell.layer,
                        row: cell.row,
                        col: cell.col,
                        reason: format!("zone {zone} has no conductivity value"),
                    })
                }
            }
        })
        .collect()
}

/// Thickness carrying horizontal flow and its derivative with respect to head.
pub fn saturated_thickness(grid: &Grid, index: usize, head: f64, floor: f64) -> (f64, f64) {
    let top = grid.cell_top(index);
    let bottom = grid.cell_bottom(index);
    let layer = index / grid.ncolumns();
    match grid.layer_kind(layer) {
        LayerKind::Confined => (top - bottom, 0.0),
        LayerKind::Convertible => {
            let b = head.min(top) - bottom;
            if b <= floor {
                (floor, 0.0)
            } else if head >= top {
                (b, 0.0)
            } else {
                (b, 1.0)
            }
        }
    }
}

/// Evaluates face conductances for given heads.
#[derive(Debug, Clone)]
pub struct ConductanceModel {
    faces: Vec<Face>,
    k: Vec<f64>,
    /// Head-independent conductance of vertical faces, 0 for horizontal ones.
    vertical: Vec<f64>,
    floor: f64,
}

/// Conductance of a face and its partial derivatives with respect to the
/// heads of cells `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceConductance {
    pub value: f64,
    pub d_da: f64,
    pub d_db: f64,
}

impl ConductanceModel {
    pub fn new(grid: &Grid, k_values: &BTreeMap<usize, f64>, floor: f64) -> Result<Self> {
        let k = cell_conductivity(grid, k_values)?;
        let faces = faces(grid);
        let area = grid.cell_area();
        let aniso = grid.anisotropy_ratio();
        let vertical = faces
            .iter()
            .map(|f| match f.direction {
                FaceDirection::Vertical => {
                    let ca = k[f.a] / aniso * area / (0.5 * grid.cell_thickness(f.a));
                    let cb = k[f.b] / aniso * area / (0.5 * grid.cell_thickness(f.b));
                    ca * cb / (ca + cb)
                }
                _ => 0.0,
            })
            .collect();
        Ok(Self {
            faces,
            k,
            vertical,
            floor,
        })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn conductivity(&self) -> &[f64] {
        &self.k
    }

    pub fn evaluate(&self, grid: &Grid, face_index: usize, heads: &[f64]) -> FaceConductance {
        let f = self.faces[face_index];
        let (width, dist) = match f.direction {
            FaceDirection::Vertical => {
                return FaceConductance {
                    value: self.vertical[face_index],
                    d_da: 0.0,
                    d_db: 0.0,
                }
            }
            FaceDirection::Row => (grid.dy(), grid.dx()),
            FaceDirection::Column => (grid.dx(), grid.dy()),
        };
        let geom = width / dist;
        let (ba, dba) = saturated_thickness(grid, f.a, heads[f.a], self.floor);
        let (bb, dbb) = saturated_thickness(grid, f.b, heads[f.b], self.floor);
        let ca = self.k[f.a] * ba * geom;
        let cb = self.k[f.b] * bb * geom;
        let sum = ca + cb;
        let value = 2.0 * ca * cb / sum;
        let d_ca = 2.0 * cb * cb / (sum * sum);
        let d_cb = 2.0 * ca * ca / (sum * sum);
        FaceConductance {
            value,
            d_da: d_ca * self.k[f.a] * geom * dba,
            d_db: d_cb * self.k[f.b] * geom * dbb,
        }
    }
}

/// Conductance of every active face for the given heads [m²/s].
pub fn intercell_conductance(
    grid: &Grid,
    k_values: &BTreeMap<usize, f64>,
    heads: &[f64],
) -> Result<Vec<(Face, f64)>> {
    if heads.len() != grid.ncells() {
        return Err(Error::invalid("one head per cell is required"));
    }
    let model = ConductanceModel::new(grid, k_values, DRY_THICKNESS_FLOOR)?;
    Ok((0..model.faces.len())
        .map(|i| (model.faces[i], model.evaluate(grid, i, heads).value))
        .collect())
}
