//! CSV schemas for grids, boundaries, wells and solver output.
//!
//! | file            | header                                                   |
//! |-----------------|----------------------------------------------------------|
//! | grid            | `row,col,top,base,active`                                |
//! | zones           | `layer,row,col,zone`                                     |
//! | boundaries      | `kind,layer,row,col,head,elevation,conductance,tag`      |
//! | wells           | `id,layer,row,col,head`                                  |
//! | heads (output)  | `layer,row,col,head`                                     |
//! | budget (output) | `component,in_m3s,out_m3s`                               |
//!
//! `kind` is `chd`, `ghb` or `drn`. For `chd` the `tag` may be `river`.
//! For drains `tag` is `spring` or `rice`; an empty `elevation` means land
//! surface (springs) or land surface plus ponding depth (rice).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::boundary::{BoundarySet, ConstantHead, Drain, DrainTag, GeneralHead};
use super::grid::{build_grid, Cell, Grid, GridSpec, LayerKind, DEFAULT_LAYER_FRACTIONS};
use super::qoi::{Well, WellSet};
use super::solver::SolveResult;
use crate::error::{Error, Result};
use crate::report::{read_csv, write_csv};

/// Grid dimensions that are not carried by the per-cell files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDims {
    pub nrows: usize,
    pub ncols: usize,
    pub dx: f64,
    pub dy: f64,
    #[serde(default = "default_anisotropy")]
    pub anisotropy: f64,
}

fn default_anisotropy() -> f64 {
    super::grid::DEFAULT_ANISOTROPY
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnRecord {
    pub row: usize,
    pub col: usize,
    pub top: f64,
    pub base: f64,
    pub active: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneRecord {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub zone: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub kind: String,
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub head: Option<f64>,
    pub elevation: Option<f64>,
    pub conductance: Option<f64>,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WellRecord {
    pub id: String,
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub head: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadRecord {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub head: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetRecord {
    pub component: String,
    pub in_m3s: f64,
    pub out_m3s: f64,
}

fn out_of_range(path: &Path, what: &str, r: usize, c: usize) -> Error {
    Error::parse(path, format!("{what} ({r}, {c}) outside grid"))
}

pub fn load_grid(grid_csv: &Path, zones_csv: &Path, dims: &GridDims) -> Result<Grid> {
    let (nr, nc) = (dims.nrows, dims.ncols);
    let nlay = DEFAULT_LAYER_FRACTIONS.len();
    let mut spec = GridSpec::uniform(nr, nc, dims.dx, dims.dy, f64::NAN, f64::NAN);
    spec.anisotropy_ratio = dims.anisotropy;
    spec.active = vec![false; nr * nc];
    spec.zone_id = vec![0; nr * nc * nlay];
    spec.layer_kind = vec![LayerKind::Convertible; nlay];
    let mut seen = vec![false; nr * nc];
    for rec in read_csv::<ColumnRecord>(grid_csv)? {
        if rec.row >= nr || rec.col >= nc {
            return Err(out_of_range(grid_csv, "column", rec.row, rec.col));
        }
        let j = rec.row * nc + rec.col;
        spec.top[j] = rec.top;
        spec.base[j] = rec.base;
        spec.active[j] = rec.active != 0;
        seen[j] = true;
    }
    if let Some(j) = seen.iter().position(|s| !s) {
        return Err(Error::parse(
            grid_csv,
            format!("missing column ({}, {})", j / nc, j % nc),
        ));
    }
    for rec in read_csv::<ZoneRecord>(zones_csv)? {
        if rec.layer >= nlay || rec.row >= nr || rec.col >= nc {
            return Err(out_of_range(zones_csv, "zone cell", rec.row, rec.col));
        }
        spec.zone_id[(rec.layer * nr + rec.row) * nc + rec.col] = rec.zone;
    }
    build_grid(spec)
}

fn cell_of(grid: &Grid, path: &Path, layer: usize, row: usize, col: usize) -> Result<Cell> {
    let cell = Cell::new(layer, row, col);
    if !grid.contains(cell) {
        return Err(out_of_range(path, "cell", row, col));
    }
    Ok(cell)
}

pub fn load_boundaries(path: &Path, grid: &Grid) -> Result<BoundarySet> {
    let mut bcs = BoundarySet::new(grid);
    for rec in read_csv::<BoundaryRecord>(path)? {
        let cell = cell_of(grid, path, rec.layer, rec.row, rec.col)?;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::parse(path, format!("{} at {cell:?} needs {name}", rec.kind)))
        };
        match rec.kind.as_str() {
            "chd" => bcs.chd.push(ConstantHead {
                cell,
                head: need(rec.head, "head")?,
                river: rec.tag.as_deref() == Some("river"),
            }),
            "ghb" => bcs.ghb.push(GeneralHead {
                cell,
                head: need(rec.head, "head")?,
                conductance: need(rec.conductance, "conductance")?,
            }),
            "drn" => {
                let conductance = need(rec.conductance, "conductance")?;
                let mut d = match rec.tag.as_deref() {
                    Some("spring") | None => Drain::spring(grid, cell, conductance),
                    Some("rice") => Drain::rice(grid, cell, conductance),
                    Some(t) => return Err(Error::parse(path, format!("unknown drain tag {t}"))),
                };
                if let Some(z) = rec.elevation {
                    d.elevation = z;
                }
                bcs.drn.push(d);
            }
            k => return Err(Error::parse(path, format!("unknown boundary kind {k}"))),
        }
    }
    bcs.validate(grid)?;
    Ok(bcs)
}

pub fn boundary_records(bcs: &BoundarySet) -> Vec<BoundaryRecord> {
    let mut out = Vec::new();
    for b in &bcs.chd {
        out.push(BoundaryRecord {
            kind: "chd".into(),
            layer: b.cell.layer,
            row: b.cell.row,
            col: b.cell.col,
            head: Some(b.head),
            elevation: None,
            conductance: None,
            tag: b.river.then(|| "river".to_string()),
        });
    }
    for b in &bcs.ghb {
        out.push(BoundaryRecord {
            kind: "ghb".into(),
            layer: b.cell.layer,
            row: b.cell.row,
            col: b.cell.col,
            head: Some(b.head),
            elevation: None,
            conductance: Some(b.conductance),
            tag: None,
        });
    }
    for d in &bcs.drn {
        out.push(BoundaryRecord {
            kind: "drn".into(),
            layer: d.cell.layer,
            row: d.cell.row,
            col: d.cell.col,
            head: None,
            elevation: None,
            conductance: Some(d.conductance),
            tag: Some(
                match d.tag {
                    DrainTag::Spring => "spring",
                    DrainTag::Rice => "rice",
                }
                .into(),
            ),
        });
    }
    out
}

pub fn load_wells(path: &Path, grid: &Grid) -> Result<WellSet> {
    let wells = read_csv::<WellRecord>(path)?
        .into_iter()
        .map(|r| {
            Ok(Well {
                cell: cell_of(grid, path, r.layer, r.row, r.col)?,
                id: r.id,
                head: r.head,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if wells.is_empty() {
        return Err(Error::parse(path, "no wells"));
    }
    WellSet::new(grid, wells)
}

pub fn write_wells(path: &Path, wells: &WellSet) -> Result<()> {
    write_csv(
        path,
        wells.wells().iter().map(|w| WellRecord {
            id: w.id.clone(),
            layer: w.cell.layer,
            row: w.cell.row,
            col: w.cell.col,
            head: w.head,
        }),
    )
}

pub fn write_heads(path: &Path, grid: &Grid, result: &SolveResult) -> Result<()> {
    write_csv(
        path,
        (0..grid.ncells())
            .filter(|&i| grid.is_active(i))
            .map(|i| {
                let c = grid.cell(i);
                HeadRecord {
                    layer: c.layer,
                    row: c.row,
                    col: c.col,
                    head: result.heads[i],
                }
            }),
    )
}

pub fn write_budget(path: &Path, result: &SolveResult) -> Result<()> {
    write_csv(
        path,
        result.budget.rows().iter().map(|&(c, i, o)| BudgetRecord {
            component: c.to_string(),
            in_m3s: i,
            out_m3s: o,
        }),
    )
}
