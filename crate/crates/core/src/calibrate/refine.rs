//! Nelder-Mead refinement of brute-force seeds over the calibration
//! parameters and the head error jointly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::brute::{BruteForceEntry, Constraint};
use super::nelder_mead::{nelder_mead, Feasibility, NelderMeadOptions};
use super::nll::{nll, NllConfig};
use super::Evaluation;
use crate::error::{Error, Result};
use crate::morris::{ParameterDef, Scale};

/// Everything needed to score a parameter vector. Optimisation runs in
/// transformed coordinates: log10 for log-scaled parameters, identity
/// otherwise, with `σ_h` appended last on a linear scale.
pub struct CalibrationProblem<'a, F> {
    pub params: Vec<ParameterDef>,
    /// `(greater, lesser)` parameter index pairs.
    pub ordered: Vec<(usize, usize)>,
    pub observed: Vec<f64>,
    pub cfg: NllConfig,
    pub sigma_bounds: (f64, f64),
    pub model: &'a F,
}

impl<'a, F> CalibrationProblem<'a, F>
where
    F: Fn(&[f64]) -> Option<Evaluation> + Sync,
{
    pub fn new(
        params: Vec<ParameterDef>,
        constraints: &[Constraint],
        observed: Vec<f64>,
        cfg: NllConfig,
        sigma_bounds: (f64, f64),
        model: &'a F,
    ) -> Result<Self> {
        cfg.validate()?;
        if observed.len() != cfg.n_wells {
            return Err(Error::invalid(format!(
                "{} observed heads for {} wells",
                observed.len(),
                cfg.n_wells
            )));
        }
        if !(sigma_bounds.0 > 0.0 && sigma_bounds.0 < sigma_bounds.1) {
            return Err(Error::invalid("sigma_h bounds must satisfy 0 < low < high"));
        }
        let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
        let mut ordered = Vec::new();
        for c in constraints {
            let (g, l) = c.resolve(&names)?;
            if params[g].scale != params[l].scale {
                return Err(Error::invalid(format!(
                    "constraint {c} mixes linear and log parameters"
                )));
            }
            ordered.push((g, l));
        }
        Ok(Self {
            params,
            ordered,
            observed,
            cfg,
            sigma_bounds,
            model,
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn to_transformed(&self, physical: &[f64]) -> Vec<f64> {
        physical
            .iter()
            .zip(&self.params)
            .map(|(&x, p)| match p.scale {
                Scale::Linear => x,
                Scale::Log10 => x.log10(),
            })
            .collect()
    }

    pub fn to_physical(&self, transformed: &[f64]) -> Vec<f64> {
        transformed
            .iter()
            .zip(&self.params)
            .map(|(&t, p)| match p.scale {
                Scale::Linear => t,
                Scale::Log10 => 10f64.powf(t),
            })
            .collect()
    }

    /// Box bounds and orderings over `[transformed params.., σ_h]`.
    pub fn feasibility(&self) -> Feasibility {
        let bound = |x: f64, p: &ParameterDef| match p.scale {
            Scale::Linear => x,
            Scale::Log10 => x.log10(),
        };
        let mut lower: Vec<f64> = self.params.iter().map(|p| bound(p.low, p)).collect();
        let mut upper: Vec<f64> = self.params.iter().map(|p| bound(p.high, p)).collect();
        lower.push(self.sigma_bounds.0);
        upper.push(self.sigma_bounds.1);
        Feasibility {
            lower: Some(lower),
            upper: Some(upper),
            ordered: self.ordered.clone(),
        }
    }

    pub fn evaluate(&self, physical: &[f64]) -> Option<Evaluation> {
        (self.model)(physical)
    }

    pub fn score(&self, ev: &Evaluation, sigma_h: f64) -> f64 {
        let cfg = NllConfig { sigma_h, ..self.cfg };
        nll(&ev.heads, &self.observed, ev.h_pas, &cfg).unwrap_or(f64::INFINITY)
    }

    /// NLL at `[transformed params.., σ_h]`; `+inf` if the model fails.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.params.len();
        match self.evaluate(&self.to_physical(&x[..n])) {
            Some(ev) => self.score(&ev, x[n]),
            None => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub nelder_mead: NelderMeadOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedResult {
    /// Cartesian index of the seed tuple.
    pub seed_index: usize,
    pub seed_params: Vec<f64>,
    pub seed_sigma_h: f64,
    pub seed_nll: f64,
    pub params: Vec<f64>,
    pub sigma_h: f64,
    pub nll: f64,
    pub evaluation: Option<Evaluation>,
    pub iterations: usize,
    pub converged: bool,
    /// Lowest NLL of all refined results.
    pub best: bool,
}

/// The first `n` seeds with a finite NLL, in ranking order.
pub fn best_seeds(ranked: &[BruteForceEntry], n: usize) -> Vec<BruteForceEntry> {
    ranked
        .iter()
        .filter(|e| e.nll.is_finite())
        .take(n)
        .cloned()
        .collect()
}

/// One Nelder-Mead chain per seed, run concurrently. A chain that ends
/// worse than its seed reports the seed unchanged.
pub fn refine<F>(
    problem: &CalibrationProblem<'_, F>,
    seeds: &[BruteForceEntry],
    opts: &RefineOptions,
) -> Result<Vec<RefinedResult>>
where
    F: Fn(&[f64]) -> Option<Evaluation> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::invalid("refinement needs at least one seed"));
    }
    let feas = problem.feasibility();
    let mut out: Vec<RefinedResult> = seeds
        .par_iter()
        .map(|seed| -> Result<RefinedResult> {
            let mut start = problem.to_transformed(&seed.params);
            start.push(seed.sigma_h);
            let r = nelder_mead(|x| problem.objective(x), &start, &feas, &opts.nelder_mead)?;
            let n = problem.params.len();
            let seed_result = || RefinedResult {
                seed_index: seed.index,
                seed_params: seed.params.clone(),
                seed_sigma_h: seed.sigma_h,
                seed_nll: seed.nll,
                params: seed.params.clone(),
                sigma_h: seed.sigma_h,
                nll: seed.nll,
                evaluation: seed.evaluation.clone(),
                iterations: r.iterations,
                converged: r.converged,
                best: false,
            };
            if !(r.value <= seed.nll) {
                return Ok(seed_result());
            }
            let params = problem.to_physical(&r.x[..n]);
            let Some(ev) = problem.evaluate(&params) else {
                return Ok(seed_result());
            };
            let value = problem.score(&ev, r.x[n]);
            if !(value <= seed.nll) {
                return Ok(seed_result());
            }
            Ok(RefinedResult {
                params,
                sigma_h: r.x[n],
                nll: value,
                evaluation: Some(ev),
                ..seed_result()
            })
        })
        .collect::<Result<_>>()?;
    let best = (0..out.len())
        .min_by(|&a, &b| out[a].nll.total_cmp(&out[b].nll).then(a.cmp(&b)))
        .expect("non-empty");
    out[best].best = true;
    Ok(out)
}
