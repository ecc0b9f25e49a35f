//! Constrained Cartesian search with a scan over the head error.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nll::{nll, NllConfig};
use super::Evaluation;
use crate::error::{Error, Result};

/// `greater >= lesser` between two named parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub greater: String,
    pub lesser: String,
}

impl Constraint {
    pub fn new(greater: &str, lesser: &str) -> Self {
        Self {
            greater: greater.into(),
            lesser: lesser.into(),
        }
    }

    /// Indices of the two parameters within `names`.
    pub fn resolve(&self, names: &[String]) -> Result<(usize, usize)> {
        let find = |n: &str| {
            names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| Error::invalid(format!("constraint refers to unknown parameter {n}")))
        };
        Ok((find(&self.greater)?, find(&self.lesser)?))
    }
}

impl FromStr for Constraint {
    type Err = Error;

    /// Parses `a >= b` or `a <= b`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse constraint `{s}`"));
        let (l, r, flip) = if let Some((l, r)) = s.split_once(">=") {
            (l, r, false)
        } else if let Some((l, r)) = s.split_once("<=") {
            (l, r, true)
        } else {
            return Err(bad());
        };
        let (l, r) = (l.trim(), r.trim());
        if l.is_empty() || r.is_empty() {
            return Err(bad());
        }
        Ok(if flip {
            Constraint::new(r, l)
        } else {
            Constraint::new(l, r)
        })
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} >= {}", self.greater, self.lesser)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceGrid {
    pub names: Vec<String>,
    /// Candidate physical values per parameter.
    pub values: Vec<Vec<f64>>,
    pub constraints: Vec<Constraint>,
}

impl BruteForceGrid {
    pub fn validate(&self) -> Result<()> {
        if self.names.is_empty() || self.names.len() != self.values.len() {
            return Err(Error::invalid("brute-force grid needs one value list per parameter"));
        }
        if let Some(i) = self.values.iter().position(|v| v.is_empty()) {
            return Err(Error::invalid(format!(
                "brute-force grid has no values for {}",
                self.names[i]
            )));
        }
        for c in &self.constraints {
            c.resolve(&self.names)?;
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    pub fn satisfies(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|c| {
            let (g, l) = c.resolve(&self.names).expect("validated");
            x[g] >= x[l]
        })
    }

    /// Tuples satisfying every constraint, with their Cartesian index (first
    /// parameter varies slowest).
    pub fn feasible(&self) -> Result<Vec<(usize, Vec<f64>)>> {
        self.validate()?;
        let dims: Vec<usize> = self.values.iter().map(Vec::len).collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; dims.len()];
        for flat in 0..self.total() {
            let x: Vec<f64> = idx.iter().zip(&self.values).map(|(&i, v)| v[i]).collect();
            if self.satisfies(&x) {
                out.push((flat, x));
            }
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(out)
    }
}

/// `count` equispaced values in `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaScan {
    pub count: usize,
    pub low: f64,
    pub high: f64,
}

impl SigmaScan {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 || !(self.low > 0.0) || self.high < self.low {
            return Err(Error::invalid("sigma scan needs count >= 1 and 0 < low <= high"));
        }
        if self.count == 1 {
            return Ok(vec![self.low]);
        }
        let step = (self.high - self.low) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    self.high
                } else {
                    self.low + step * i as f64
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceEntry {
    /// Cartesian index within the full grid.
    pub index: usize,
    pub params: Vec<f64>,
    pub sigma_h: f64,
    /// `+inf` when the model failed.
    pub nll: f64,
    pub evaluation: Option<Evaluation>,
}

/// Evaluates the model once per feasible tuple and scores it at the best
/// head error of the scan. Results are sorted by NLL, ties by index.
pub fn brute_force<F>(
    grid: &BruteForceGrid,
    model: &F,
    observed: &[f64],
    scan: SigmaScan,
    cfg: &NllConfig,
) -> Result<Vec<BruteForceEntry>>
where
    F: Fn(&[f64]) -> Option<Evaluation> + Sync,
{
    let sigmas = scan.values()?;
    let tuples = grid.feasible()?;
    if tuples.is_empty() {
        return Err(Error::invalid("no brute-force tuple satisfies the constraints"));
    }
    let evaluated: Vec<Option<Evaluation>> = tuples.par_iter().map(|(_, x)| model(x)).collect();
    let mut entries = Vec::with_capacity(tuples.len());
    for ((index, params), ev) in tuples.into_iter().zip(evaluated) {
        let mut best = (f64::INFINITY, sigmas[0]);
        if let Some(e) = &ev {
            for &s in &sigmas {
                let c = NllConfig { sigma_h: s, ..*cfg };
                let v = nll(&e.heads, observed, e.h_pas, &c)?;
                if v < best.0 {
                    best = (v, s);
                }
            }
        }
        entries.push(BruteForceEntry {
            index,
            params,
            sigma_h: best.1,
            nll: best.0,
            evaluation: ev,
        });
    }
    if entries.iter().all(|e| !e.nll.is_finite()) {
        return Err(Error::Numerical("every brute-force evaluation failed".into()));
    }
    entries.sort_by(|a, b| a.nll.total_cmp(&b.nll).then(a.index.cmp(&b.index)));
    Ok(entries)
}
