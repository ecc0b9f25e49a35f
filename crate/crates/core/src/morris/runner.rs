//! Screening runs against an arbitrary model.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::effects::{aggregate, elementary_effects, EffectStats};
use super::selection::{select_trajectories, Strategy};
use super::space::ParameterSpace;
use super::trajectory::{generate_pool, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisSettings {
    pub r_list: Vec<usize>,
    pub pool_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub strategy: Strategy,
}

/// Model outputs at every point of one trajectory, or `None` if any point failed.
pub type TrajectoryOutputs = Option<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisResult {
    pub param_names: Vec<String>,
    pub qoi_names: Vec<String>,
    /// `stats[q][i]` for output `q` and parameter `i`.
    pub stats: Vec<Vec<EffectStats>>,
    pub r_requested: usize,
    pub r_effective: usize,
    pub r_failed: usize,
    /// Pool indices of dropped trajectories.
    pub failed: Vec<usize>,
}

impl MorrisResult {
    /// 1-based rank of each parameter by decreasing `μ*` for output `q`;
    /// ties keep parameter order.
    pub fn ranks(&self, q: usize) -> Vec<usize> {
        let s = &self.stats[q];
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].mu_star.total_cmp(&s[a].mu_star));
        let mut rank = vec![0; s.len()];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos + 1;
        }
        rank
    }

    pub fn qoi_index(&self, name: &str) -> Option<usize> {
        self.qoi_names.iter().position(|q| q == name)
    }
}

/// Evaluates every point of every trajectory. Points are dispatched in
/// parallel; results come back in trajectory order.
pub fn evaluate_trajectories<F>(
    space: &ParameterSpace,
    trajectories: &[&Trajectory],
    model: &F,
) -> Result<Vec<TrajectoryOutputs>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    let mut jobs = Vec::new();
    for (t, traj) in trajectories.iter().enumerate() {
        for pt in traj.points(space) {
            jobs.push((t, space.denormalize(&pt)?));
        }
    }
    let values: Vec<Option<Vec<f64>>> = jobs.par_iter().map(|(_, x)| model(x)).collect();
    let mut out: Vec<TrajectoryOutputs> = trajectories
        .iter()
        .map(|t| Some(Vec::with_capacity(t.levels.len())))
        .collect();
    for ((t, _), v) in jobs.iter().zip(values) {
        let slot = &mut out[*t];
        match (slot.as_mut(), v) {
            (Some(acc), Some(v)) if v.iter().all(|x| x.is_finite()) => acc.push(v),
            _ => *slot = None,
        }
    }
    Ok(out)
}

/// Statistics for a set of trajectories and their outputs. Failed
/// trajectories are dropped whole.
pub fn analyze(
    space: &ParameterSpace,
    trajectories: &[&Trajectory],
    outputs: &[TrajectoryOutputs],
    qoi_names: &[String],
) -> Result<MorrisResult> {
    let nq = qoi_names.len();
    let mut effects: Vec<Vec<Vec<f64>>> = vec![Vec::new(); nq];
    let mut failed = Vec::new();
    for (traj, out) in trajectories.iter().zip(outputs) {
        let Some(out) = out else {
            failed.push(traj.index);
            continue;
        };
        if out.iter().any(|v| v.len() != nq) {
            return Err(Error::invalid(format!(
                "model returned a vector of the wrong length (expected {nq})"
            )));
        }
        let per_q: Option<Vec<Vec<f64>>> = (0..nq)
            .map(|q| {
                let vals: Vec<f64> = out.iter().map(|v| v[q]).collect();
                elementary_effects(traj, &vals)
            })
            .collect();
        match per_q {
            Some(ee) => {
                for (q, e) in ee.into_iter().enumerate() {
                    effects[q].push(e);
                }
            }
            None => failed.push(traj.index),
        }
    }
    let retained = trajectories.len() - failed.len();
    if retained == 0 {
        return Err(Error::Numerical("every trajectory failed".into()));
    }
    let stats = effects
        .iter()
        .map(|e| aggregate(e))
        .collect::<Result<Vec<_>>>()?;
    Ok(MorrisResult {
        param_names: space.names(),
        qoi_names: qoi_names.to_vec(),
        stats,
        r_requested: trajectories.len(),
        r_effective: retained,
        r_failed: failed.len(),
        failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisRun {
    pub r: usize,
    /// Pool indices of the selected trajectories.
    pub selected: Vec<usize>,
    pub result: MorrisResult,
    /// Outputs of the selected trajectories, in selection order.
    pub outputs: Vec<TrajectoryOutputs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisReport {
    pub pool: Vec<Trajectory>,
    pub runs: Vec<MorrisRun>,
}

/// Generates a pool, selects `r` trajectories for every `r` in the list,
/// evaluates each distinct selected trajectory once and summarises.
pub fn run_morris<F>(
    space: &ParameterSpace,
    model: &F,
    qoi_names: &[String],
    settings: &MorrisSettings,
) -> Result<MorrisReport>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    if settings.r_list.is_empty() {
        return Err(Error::invalid("r_list is empty"));
    }
    let pool = generate_pool(space, settings.pool_size, settings.seed)?;
    let selections = settings
        .r_list
        .iter()
        .map(|&r| select_trajectories(space, &pool, r, settings.strategy))
        .collect::<Result<Vec<_>>>()?;
    let union: Vec<usize> = selections
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let trajs: Vec<&Trajectory> = union.iter().map(|&i| &pool[i]).collect();
    let evaluated = evaluate_trajectories(space, &trajs, model)?;
    let lookup = |i: usize| union.binary_search(&i).map(|p| evaluated[p].clone()).unwrap();
    let mut runs = Vec::new();
    for (&r, sel) in settings.r_list.iter().zip(selections) {
        let t: Vec<&Trajectory> = sel.iter().map(|&i| &pool[i]).collect();
        let outputs: Vec<TrajectoryOutputs> = sel.iter().map(|&i| lookup(i)).collect();
        let result = analyze(space, &t, &outputs, qoi_names)?;
        runs.push(MorrisRun {
            r,
            selected: sel,
            result,
            outputs,
        });
    }
    Ok(MorrisReport { pool, runs })
}
