//! Structured layered grid.
//!
//! Cells are addressed by `(layer, row, col)` with layer 0 at the land
//! surface. Flat indices run column-fastest within a row, rows within a
//! layer: `(layer * nrows + row) * ncols + col`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default horizontal-to-vertical conductivity ratio.
pub const DEFAULT_ANISOTROPY: f64 = 5.0;

/// Thickness fractions of the three model layers, top to bottom.
pub const DEFAULT_LAYER_FRACTIONS: [f64; 3] = [0.25, 0.25, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(layer: usize, row: usize, col: usize) -> Self {
        Self { layer, row, col }
    }
}

/// How the horizontal transmissivity of a layer responds to head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    /// Transmissivity uses the full cell thickness.
    Confined,
    /// Transmissivity uses the saturated thickness `min(h, top) - bottom`.
    #[default]
    Convertible,
}

/// Input to [`build_grid`]: surfaces per column, zones per cell.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub nrows: usize,
    pub ncols: usize,
    pub dx: f64,
    pub dy: f64,
    /// Land surface per column.
    pub top: Vec<f64>,
    /// Aquifer base per column.
    pub base: Vec<f64>,
    /// Active flag per column; an inactive column is inactive in every layer.
    pub active: Vec<bool>,
    /// Conductivity zone per cell.
    pub zone_id: Vec<usize>,
    pub anisotropy_ratio: f64,
    pub layer_fractions: Vec<f64>,
    pub layer_kind: Vec<LayerKind>,
}

impl GridSpec {
    /// A fully active spec with uniform zone 1 and the default 3-layer split.
    pub fn uniform(nrows: usize, ncols: usize, dx: f64, dy: f64, top: f64, base: f64) -> Self {
        let ncol = nrows * ncols;
        let nlay = DEFAULT_LAYER_FRACTIONS.len();
        Self {
            nrows,
            ncols,
            dx,
            dy,
            top: vec![top; ncol],
            base: vec![base; ncol],
            active: vec![true; ncol],
            zone_id: vec![1; ncol * nlay],
            anisotropy_ratio: DEFAULT_ANISOTROPY,
            layer_fractions: DEFAULT_LAYER_FRACTIONS.to_vec(),
            layer_kind: vec![LayerKind::Convertible; nlay],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nrows: usize,
    ncols: usize,
    nlayers: usize,
    dx: f64,
    dy: f64,
    top: Vec<f64>,
    bottoms: Vec<f64>,
    active: Vec<bool>,
    zone_id: Vec<usize>,
    anisotropy_ratio: f64,
    layer_kind: Vec<LayerKind>,
}

/// Splits each column into layers by thickness fraction.
pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    let GridSpec {
        nrows,
        ncols,
        dx,
        dy,
        top,
        base,
        active,
        zone_id,
        anisotropy_ratio,
        layer_fractions,
        layer_kind,
    } = spec;
    let nlay = layer_fractions.len();
    let ncol = nrows * ncols;
    if nlay == 0 {
        return Err(Error::invalid("at least one layer is required"));
    }
    if layer_fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::invalid("layer fractions must be positive"));
    }
    let fsum: f64 = layer_fractions.iter().sum();
    if (fsum - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "layer fractions sum to {fsum}, expected 1"
        )));
    }
    if top.len() != ncol || base.len() != ncol || active.len() != ncol {
        return Err(Error::invalid(format!(
            "column arrays must have {ncol} entries"
        )));
    }
    let mut bottoms = vec![0.0; ncol * nlay];
    let mut cell_active = vec![false; ncol * nlay];
    for r in 0..nrows {
        for c in 0..ncols {
            let j = r * ncols + c;
            let thickness = top[j] - base[j];
            if active[j] && !(thickness > 0.0) {
                let reason = if thickness == 0.0 {
                    "zero thickness".to_string()
                } else {
                    format!("aquifer base {} above land surface {}", base[j], top[j])
                };
                return Err(Error::InvalidCell {
                    layer: 0,
                    row: r,
                    col: c,
                    reason,
                });
            }
            let mut acc = 0.0;
            for (l, f) in layer_fractions.iter().enumerate() {
                acc += f;
                // The last layer ends exactly at the base.
                bottoms[l * ncol + j] = if l + 1 == nlay {
                    base[j]
                } else {
                    top[j] - acc * thickness
                };
                cell_active[l * ncol + j] = active[j];
            }
        }
    }
    Grid::new(
        nrows,
        ncols,
        dx,
        dy,
        top,
        bottoms,
        cell_active,
        zone_id,
        anisotropy_ratio,
        layer_kind,
    )
}

impl Grid {
    /// Builds a grid from explicit per-cell arrays and validates it.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nrows: usize,
        ncols: usize,
        dx: f64,
        dy: f64,
        top: Vec<f64>,
        bottoms: Vec<f64>,
        active: Vec<bool>,
        zone_id: Vec<usize>,
        anisotropy_ratio: f64,
        layer_kind: Vec<LayerKind>,
    ) -> Result<Self> {
        if !(dx > 0.0) || !(dy > 0.0) {
            return Err(Error::invalid(format!(
                "cell size must be positive (dx={dx}, dy={dy})"
            )));
        }
        if !(anisotropy_ratio > 0.0) {
            return Err(Error::invalid("anisotropy ratio must be positive"));
        }
        let ncol = nrows * ncols;
        if ncol == 0 {
            return Err(Error::invalid("grid has no cells"));
        }
        let nlayers = layer_kind.len();
        if top.len() != ncol {
            return Err(Error::invalid("top must have one entry per column"));
        }
        for (name, len) in [
            ("bottoms", bottoms.len()),
            ("active", active.len()),
            ("zone_id", zone_id.len()),
        ] {
            if len != ncol * nlayers {
                return Err(Error::invalid(format!(
                    "{name} must have {} entries, got {len}",
                    ncol * nlayers
                )));
            }
        }
        let grid = Self {
            nrows,
            ncols,
            nlayers,
            dx,
            dy,
            top,
            bottoms,
            active,
            zone_id,
            anisotropy_ratio,
            layer_kind,
        };
        for idx in 0..grid.ncells() {
            if grid.cell_top(idx) <= grid.cell_bottom(idx) {
                let cell = grid.cell(idx);
                return Err(Error::InvalidCell {
                    layer: cell.layer,
                    row: cell.row,
                    col: cell.col,
                    reason: "layer bottoms must strictly decrease with depth".into(),
                });
            }
        }
        Ok(grid)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nlayers(&self) -> usize {
        self.nlayers
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn anisotropy_ratio(&self) -> f64 {
        self.anisotropy_ratio
    }
    pub fn layer_kind(&self, layer: usize) -> LayerKind {
        self.layer_kind[layer]
    }
    pub fn ncells(&self) -> usize {
        self.nlayers * self.nrows * self.ncols
    }
    pub fn ncolumns(&self) -> usize {
        self.nrows * self.ncols
    }
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.layer < self.nlayers && cell.row < self.nrows && cell.col < self.ncols
    }

    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        (cell.layer * self.nrows + cell.row) * self.ncols + cell.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        let col = index % self.ncols;
        let rest = index / self.ncols;
        Cell::new(rest / self.nrows, rest % self.nrows, col)
    }

    /// Column index (row-major) of a flat cell index.
    pub fn column_of(&self, index: usize) -> usize {
        index % self.ncolumns()
    }

    pub fn land_surface(&self, column: usize) -> f64 {
        self.top[column]
    }

    pub fn land_surface_at(&self, row: usize, col: usize) -> f64 {
        self.top[row * self.ncols + col]
    }

    pub fn cell_top(&self, index: usize) -> f64 {
        let ncol = self.ncolumns();
        if index < ncol {
            self.top[index]
        } else {
            self.bottoms[index - ncol]
        }
    }

    pub fn cell_bottom(&self, index: usize) -> f64 {
        self.bottoms[index]
    }

    pub fn cell_thickness(&self, index: usize) -> f64 {
        self.cell_top(index) - self.cell_bottom(index)
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.active[index]
    }

    pub fn zone(&self, index: usize) -> usize {
        self.zone_id[index]
    }

    pub fn zone_ids(&self) -> &[usize] {
        &self.zone_id
    }

    pub fn bottoms(&self) -> &[f64] {
        &self.bottoms
    }

    /// Layer bottoms of one column, top to bottom.
    pub fn column_bottoms(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.nlayers)
            .map(|l| self.bottoms[self.index(Cell::new(l, row, col))])
            .collect()
    }

    /// Flat index of the uppermost active cell in a column, if any.
    pub fn topmost_active(&self, column: usize) -> Option<usize> {
        let ncol = self.ncolumns();
        (0..self.nlayers)
            .map(|l| l * ncol + column)
            .find(|&i| self.active[i])
    }
}
