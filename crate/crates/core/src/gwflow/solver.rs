//! Steady-state solver for the unconfined flow equation.
//!
//! Every active non-CHD cell carries one unknown. Per cell the discrete
//! balance is
//!
//! ```text
//! sum_f C_f(h) (h_i - h_j) + sum_ghb C_g (h_i - H_g) + sum_drn C_d max(0, h_i - z_d) - Q_i = 0
//! ```
//!
//! where horizontal `C_f` depend on the saturated thickness of both cells.
//! Picard iterations freeze `C_f` and drain activity at the previous iterate
//! and solve the symmetric system with PCG. Newton iterations linearise the
//! full residual, solve with BiCGSTAB, and backtrack on the residual norm,
//! falling back to a Picard step when backtracking fails.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::boundary::{BoundarySet, DrainTag};
use super::conductance::{ConductanceModel, DRY_THICKNESS_FLOOR};
use super::grid::Grid;
use super::sparse::{bicgstab, pcg, CsrMatrix, Ilu0};
use crate::error::{Error, Result};

/// Relative budget discrepancy accepted for a converged solve.
pub const MASS_BALANCE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearMethod {
    Picard,
    #[default]
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: NonlinearMethod,
    /// Outer iterations stop when max |dh| falls below this [m].
    pub head_tolerance: f64,
    pub max_outer: usize,
    /// Relative residual of the inner linear solve.
    pub linear_tolerance: f64,
    pub max_linear: usize,
    pub dry_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: NonlinearMethod::Newton,
            head_tolerance: 1e-6,
            max_outer: 200,
            linear_tolerance: 1e-10,
            max_linear: 2000,
            dry_floor: DRY_THICKNESS_FLOOR,
        }
    }
}

/// Volumetric flow rates per boundary type [m³/s]; all entries are >= 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub chd_in: f64,
    pub chd_out: f64,
    pub ghb_in: f64,
    pub ghb_out: f64,
    pub drn_spring_out: f64,
    pub drn_rice_out: f64,
    pub rch_in: f64,
}

impl Budget {
    pub fn total_in(&self) -> f64 {
        self.chd_in + self.ghb_in + self.rch_in
    }

    pub fn total_out(&self) -> f64 {
        self.chd_out + self.ghb_out + self.drn_spring_out + self.drn_rice_out
    }

    /// `|in - out| / in`, or 0 when nothing flows.
    pub fn discrepancy(&self) -> f64 {
        let (i, o) = (self.total_in(), self.total_out());
        let scale = i.max(o);
        if scale == 0.0 {
            0.0
        } else {
            (i - o).abs() / scale
        }
    }

    /// `(component, in, out)` rows in a fixed order.
    pub fn rows(&self) -> [(&'static str, f64, f64); 5] {
        [
            ("chd", self.chd_in, self.chd_out),
            ("ghb", self.ghb_in, self.ghb_out),
            ("drn_spring", 0.0, self.drn_spring_out),
            ("drn_rice", 0.0, self.drn_rice_out),
            ("rch", self.rch_in, 0.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Head per cell; NaN in inactive cells.
    pub heads: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Max |dh| of the last outer iteration [m].
    pub final_residual: f64,
    pub budget: Budget,
    /// Flow from the aquifer into each CHD cell (same order as the
    /// boundary set), positive when the aquifer loses water [m³/s].
    pub chd_flows: Vec<f64>,
    /// Flow from each GHB into the aquifer [m³/s].
    pub ghb_flows: Vec<f64>,
    /// Discharge of each drain [m³/s].
    pub drain_flows: Vec<f64>,
}

/// A solver bound to one grid, conductivity field and boundary set.
///
/// Immutable after construction; `solve` takes `&self` and can be called
/// from several threads at once.
#[derive(Debug, Clone)]
pub struct SteadySolver<'a> {
    grid: &'a Grid,
    bcs: &'a BoundarySet,
    opts: SolverOptions,
    conductance: ConductanceModel,
    /// Equation number of each cell; `None` for inactive or CHD cells.
    equation: Vec<Option<usize>>,
    cell_of: Vec<usize>,
    fixed_head: Vec<Option<f64>>,
    pattern: CsrMatrix,
    /// Storage positions `(aa, ab, ba, bb)` per face, if both cells are unknowns.
    face_slots: Vec<FaceSlots>,
    recharge: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum FaceSlots {
    Both { aa: usize, ab: usize, ba: usize, bb: usize },
    /// Only one side is an unknown; the other is a constant head.
    One { slot: usize, eq: usize, free_is_a: bool },
    None,
}

impl<'a> SteadySolver<'a> {
    pub fn new(
        grid: &'a Grid,
        k_values: &BTreeMap<usize, f64>,
        bcs: &'a BoundarySet,
        opts: SolverOptions,
    ) -> Result<Self> {
        bcs.validate(grid)?;
        if bcs.chd.is_empty() && bcs.ghb.is_empty() {
            return Err(Error::Singular(
                "no constant-head or general-head boundary fixes the head level".into(),
            ));
        }
        let conductance = ConductanceModel::new(grid, k_values, opts.dry_floor)?;
        let n = grid.ncells();
        let mut fixed_head = vec![None; n];
        for b in &bcs.chd {
            fixed_head[grid.index(b.cell)] = Some(b.head);
        }
        let mut equation = vec![None; n];
        let mut cell_of = Vec::new();
        for i in 0..n {
            if grid.is_active(i) && fixed_head[i].is_none() {
                equation[i] = Some(cell_of.len());
                cell_of.push(i);
            }
        }
        let neq = cell_of.len();
        let mut adjacency = vec![Vec::new(); neq];
        for f in conductance.faces() {
            if let (Some(ea), Some(eb)) = (equation[f.a], equation[f.b]) {
                adjacency[ea].push(eb);
                adjacency[eb].push(ea);
            }
        }
        let pattern = CsrMatrix::from_adjacency(&adjacency);
        let face_slots = conductance
            .faces()
            .iter()
            .map(|f| match (equation[f.a], equation[f.b]) {
                (Some(ea), Some(eb)) => FaceSlots::Both {
                    aa: pattern.diag_position(ea),
                    ab: pattern.position(ea, eb).unwrap(),
                    ba: pattern.position(eb, ea).unwrap(),
                    bb: pattern.diag_position(eb),
                },
                (Some(ea), None) => FaceSlots::One {
                    slot: pattern.diag_position(ea),
                    eq: ea,
                    free_is_a: true,
                },
                (None, Some(eb)) => FaceSlots::One {
                    slot: pattern.diag_position(eb),
                    eq: eb,
                    free_is_a: false,
                },
                (None, None) => FaceSlots::None,
            })
            .collect();

        let area = grid.cell_area();
        let mut recharge = vec![0.0; n];
        for (col, &r) in bcs.rch.iter().enumerate() {
            if r > 0.0 {
                if let Some(i) = grid.topmost_active(col) {
                    recharge[i] += r * area;
                }
            }
        }
        Ok(Self {
            grid,
            bcs,
            opts,
            conductance,
            equation,
            cell_of,
            fixed_head,
            pattern,
            face_slots,
            recharge,
        })
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn unknowns(&self) -> usize {
        self.cell_of.len()
    }

    /// Starting heads: land surface for free cells, prescribed values for CHD.
    pub fn initial_heads(&self) -> Vec<f64> {
        (0..self.grid.ncells())
            .map(|i| {
                if !self.grid.is_active(i) {
                    f64::NAN
                } else if let Some(h) = self.fixed_head[i] {
                    h
                } else {
                    self.grid.land_surface(self.grid.column_of(i))
                }
            })
            .collect()
    }

    pub fn solve(&self) -> Result<SolveResult> {
        self.solve_from(self.initial_heads())
    }

    pub fn solve_from(&self, mut heads: Vec<f64>) -> Result<SolveResult> {
        if heads.len() != self.grid.ncells() {
            return Err(Error::invalid("initial heads must cover every cell"));
        }
        for i in 0..heads.len() {
            if let Some(h) = self.fixed_head[i] {
                heads[i] = h;
            }
        }
        let mut iterations = 0;
        let mut max_dh = f64::INFINITY;
        let mut converged = false;
        while iterations < self.opts.max_outer {
            iterations += 1;
            let step = match self.opts.method {
                NonlinearMethod::Picard => self.picard_step(&heads)?,
                NonlinearMethod::Newton => self.newton_step(&heads)?,
            };
            max_dh = 0.0;
            for (e, &i) in self.cell_of.iter().enumerate() {
                let dh = step[e] - heads[i];
                max_dh = f64::max(max_dh, dh.abs());
                heads[i] = step[e];
            }
            if !max_dh.is_finite() {
                break;
            }
            if max_dh < self.opts.head_tolerance {
                converged = true;
                break;
            }
        }
        let (budget, chd_flows, ghb_flows, drain_flows) = self.budget(&heads);
        if converged && budget.discrepancy() > MASS_BALANCE_TOLERANCE {
            converged = false;
        }
        Ok(SolveResult {
            heads,
            converged,
            iterations,
            final_residual: max_dh,
            budget,
            chd_flows,
            ghb_flows,
            drain_flows,
        })
    }

    /// Heads of the free cells after one Picard update.
    fn picard_step(&self, heads: &[f64]) -> Result<Vec<f64>> {
        let neq = self.unknowns();
        let mut a = self.pattern.clone();
        a.clear();
        let mut rhs = vec![0.0; neq];
        self.assemble_linear(heads, &mut a, &mut rhs);
        let mut x: Vec<f64> = self.cell_of.iter().map(|&i| heads[i]).collect();
        let ilu = Ilu0::factor(&a)
            .ok_or_else(|| Error::Singular("zero pivot in incomplete factorisation".into()))?;
        pcg(
            &a,
            &ilu,
            &rhs,
            &mut x,
            self.opts.linear_tolerance,
            self.opts.max_linear,
        );
        Ok(x)
    }

    /// Symmetric system with conductances and drain states frozen at `heads`.
    fn assemble_linear(&self, heads: &[f64], a: &mut CsrMatrix, rhs: &mut [f64]) {
        for (fi, slots) in self.face_slots.iter().enumerate() {
            if matches!(slots, FaceSlots::None) {
                continue;
            }
            let c = self.conductance.evaluate(self.grid, fi, heads).value;
            match *slots {
                FaceSlots::Both { aa, ab, ba, bb } => {
                    a.values[aa] += c;
                    a.values[bb] += c;
                    a.values[ab] -= c;
                    a.values[ba] -= c;
                }
                FaceSlots::One { slot, eq, free_is_a } => {
                    let f = self.conductance.faces()[fi];
                    let fixed = if free_is_a { f.b } else { f.a };
                    a.values[slot] += c;
                    rhs[eq] += c * self.fixed_head[fixed].unwrap();
                }
                FaceSlots::None => {}
            }
        }
        self.assemble_sources(heads, a, rhs, false);
    }

    /// Adds GHB, drain and recharge terms. With `residual_form` the rhs gets
    /// the Newton residual contribution instead of the linear-system one.
    fn assemble_sources(&self, heads: &[f64], a: &mut CsrMatrix, rhs: &mut [f64], residual_form: bool) {
        for g in &self.bcs.ghb {
            let i = self.grid.index(g.cell);
            if let Some(e) = self.equation[i] {
                let p = a.diag_position(e);
                a.values[p] += g.conductance;
                if residual_form {
                    rhs[e] -= g.conductance * (heads[i] - g.head);
                } else {
                    rhs[e] += g.conductance * g.head;
                }
            }
        }
        for d in &self.bcs.drn {
            let i = self.grid.index(d.cell);
            if let Some(e) = self.equation[i] {
                if heads[i] > d.elevation {
                    let p = a.diag_position(e);
                    a.values[p] += d.conductance;
                    if residual_form {
                        rhs[e] -= d.conductance * (heads[i] - d.elevation);
                    } else {
                        rhs[e] += d.conductance * d.elevation;
                    }
                }
            }
        }
        for (e, &i) in self.cell_of.iter().enumerate() {
            rhs[e] += self.recharge[i];
        }
    }

    /// Net outflow residual per equation, `F(h)`.
    fn residual(&self, heads: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.unknowns()];
        for (fi, f) in self.conductance.faces().iter().enumerate() {
            let c = match self.face_slots[fi] {
                FaceSlots::None => continue,
                _ => self.conductance.evaluate(self.grid, fi, heads).value,
            };
            let q = c * (heads[f.a] - heads[f.b]);
            if let Some(ea) = self.equation[f.a] {
                r[ea] += q;
            }
            if let Some(eb) = self.equation[f.b] {
                r[eb] -= q;
            }
        }
        for g in &self.bcs.ghb {
            let i = self.grid.index(g.cell);
            if let Some(e) = self.equation[i] {
                r[e] += g.conductance * (heads[i] - g.head);
            }
        }
        for d in &self.bcs.drn {
            let i = self.grid.index(d.cell);
            if let Some(e) = self.equation[i] {
                r[e] += d.discharge(heads[i]);
            }
        }
        for (e, &i) in self.cell_of.iter().enumerate() {
            r[e] -= self.recharge[i];
        }
        r
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn newton_step(&self, heads: &[f64]) -> Result<Vec<f64>> {
        let neq = self.unknowns();
        let mut jac = self.pattern.clone();
        jac.clear();
        // rhs = -F(h)
        let mut rhs = vec![0.0; neq];
        for (fi, slots) in self.face_slots.iter().enumerate() {
            if matches!(slots, FaceSlots::None) {
                continue;
            }
            let f = self.conductance.faces()[fi];
            let fc = self.conductance.evaluate(self.grid, fi, heads);
            let dh = heads[f.a] - heads[f.b];
            let q = fc.value * dh;
            match *slots {
                FaceSlots::Both { aa, ab, ba, bb } => {
                    let ea = self.equation[f.a].unwrap();
                    let eb = self.equation[f.b].unwrap();
                    // dq/dh_a and dq/dh_b
                    let dqa = fc.value + fc.d_da * dh;
                    let dqb = -fc.value + fc.d_db * dh;
                    jac.values[aa] += dqa;
                    jac.values[ab] += dqb;
                    jac.values[ba] -= dqa;
                    jac.values[bb] -= dqb;
                    rhs[ea] -= q;
                    rhs[eb] += q;
                }
                FaceSlots::One { slot, eq, free_is_a } => {
                    if free_is_a {
                        jac.values[slot] += fc.value + fc.d_da * dh;
                        rhs[eq] -= q;
                    } else {
                        jac.values[slot] += fc.value - fc.d_db * dh;
                        rhs[eq] += q;
                    }
                }
                FaceSlots::None => {}
            }
        }
        self.assemble_sources(heads, &mut jac, &mut rhs, true);
        let f0 = Self::norm(&rhs);
        let mut delta = vec![0.0; neq];
        let solved = match Ilu0::factor(&jac) {
            Some(ilu) => {
                let out = bicgstab(
                    &jac,
                    &ilu,
                    &rhs,
                    &mut delta,
                    self.opts.linear_tolerance,
                    self.opts.max_linear,
                );
                out.converged || out.relative_residual < 1e-4
            }
            None => false,
        };
        let current: Vec<f64> = self.cell_of.iter().map(|&i| heads[i]).collect();
        if solved && delta.iter().all(|d| d.is_finite()) {
            let mut trial = heads.to_vec();
            let mut lambda = 1.0;
            for _ in 0..5 {
                for (e, &i) in self.cell_of.iter().enumerate() {
                    trial[i] = current[e] + lambda * delta[e];
                }
                let f1 = Self::norm(&self.residual(&trial));
                if f1 < (1.0 - 1e-4 * lambda) * f0 || f0 == 0.0 {
                    return Ok(self.cell_of.iter().map(|&i| trial[i]).collect());
                }
                lambda *= 0.5;
            }
        }
        self.picard_step(heads)
    }

    fn budget(&self, heads: &[f64]) -> (Budget, Vec<f64>, Vec<f64>, Vec<f64>) {
        let grid = self.grid;
        let mut budget = Budget::default();
        let mut chd_net = vec![0.0; grid.ncells()];
        for (fi, f) in self.conductance.faces().iter().enumerate() {
            if let FaceSlots::One { free_is_a, .. } = self.face_slots[fi] {
                let c = self.conductance.evaluate(grid, fi, heads).value;
                let (free, fixed) = if free_is_a { (f.a, f.b) } else { (f.b, f.a) };
                chd_net[fixed] += c * (heads[free] - heads[fixed]);
            }
        }
        // Recharge or GHB sitting on a CHD cell leaves through the CHD.
        for (i, &q) in self.recharge.iter().enumerate() {
            if self.fixed_head[i].is_some() {
                chd_net[i] += q;
            }
        }
        let chd_flows: Vec<f64> = self
            .bcs
            .chd
            .iter()
            .map(|b| chd_net[grid.index(b.cell)])
            .collect();
        for &q in &chd_flows {
            if q > 0.0 {
                budget.chd_out += q;
            } else {
                budget.chd_in -= q;
            }
        }
        let ghb_flows: Vec<f64> = self
            .bcs
            .ghb
            .iter()
            .map(|g| g.conductance * (g.head - heads[grid.index(g.cell)]))
            .collect();
        for &q in &ghb_flows {
            if q > 0.0 {
                budget.ghb_in += q;
            } else {
                budget.ghb_out -= q;
            }
        }
        let drain_flows: Vec<f64> = self
            .bcs
            .drn
            .iter()
            .map(|d| {
                let i = grid.index(d.cell);
                if self.fixed_head[i].is_some() {
                    0.0
                } else {
                    d.discharge(heads[i])
                }
            })
            .collect();
        for (d, &q) in self.bcs.drn.iter().zip(&drain_flows) {
            match d.tag {
                DrainTag::Spring => budget.drn_spring_out += q,
                DrainTag::Rice => budget.drn_rice_out += q,
            }
        }
        budget.rch_in = self.recharge.iter().sum();
        (budget, chd_flows, ghb_flows, drain_flows)
    }
}

/// Builds a [`SteadySolver`] and solves from the default starting heads.
pub fn solve_steady(
    grid: &Grid,
    k_values: &BTreeMap<usize, f64>,
    bcs: &BoundarySet,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    SteadySolver::new(grid, k_values, bcs, opts.clone())?.solve()
}
