//! One-at-a-time trajectories on the level lattice.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::space::ParameterSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub param: usize,
    /// Signed change of the coordinate in [0, 1] units.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `k + 1` points as integer lattice levels.
    pub levels: Vec<Vec<u32>>,
    pub steps: Vec<Step>,
    /// Seed of the pool and position in it.
    pub seed: u64,
    pub index: usize,
}

impl Trajectory {
    /// Builds a trajectory from a base point and the order in which the
    /// parameters move. Each step goes up by `p/2` levels when that stays on
    /// the lattice and down otherwise.
    pub fn from_base(space: &ParameterSpace, base: &[u32], order: &[usize]) -> Result<Self> {
        let k = space.len();
        if base.len() != k || order.len() != k {
            return Err(Error::invalid("base point and order must have one entry per parameter"));
        }
        let mut seen = vec![false; k];
        for &i in order {
            if i >= k || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("order must be a permutation"));
            }
        }
        for (p, &l) in space.params().iter().zip(base) {
            if l >= p.levels {
                return Err(Error::invalid(format!("level {l} of {} out of range", p.name)));
            }
        }
        let mut levels = vec![base.to_vec()];
        let mut steps = Vec::with_capacity(k);
        let mut cur = base.to_vec();
        for &i in order {
            let p = &space.params()[i];
            let s = p.step_levels();
            let up = cur[i] + s <= p.levels - 1;
            cur[i] = if up { cur[i] + s } else { cur[i] - s };
            steps.push(Step {
                param: i,
                delta: if up { p.delta() } else { -p.delta() },
            });
            levels.push(cur.clone());
        }
        Ok(Self {
            levels,
            steps,
            seed: 0,
            index: 0,
        })
    }

    /// Points in [0, 1]^k.
    pub fn points(&self, space: &ParameterSpace) -> Vec<Vec<f64>> {
        self.levels
            .iter()
            .map(|pt| {
                space
                    .params()
                    .iter()
                    .zip(pt)
                    .map(|(p, &l)| p.level_coordinate(l))
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self, space: &ParameterSpace) -> Result<()> {
        let k = space.len();
        let fail = |m: String| Err(Error::invalid(format!("trajectory {}: {m}", self.index)));
        if self.levels.len() != k + 1 || self.steps.len() != k {
            return fail("wrong number of points".into());
        }
        let mut moved = vec![false; k];
        for (s, step) in self.steps.iter().enumerate() {
            let (a, b) = (&self.levels[s], &self.levels[s + 1]);
            let diff: Vec<usize> = (0..k).filter(|&i| a[i] != b[i]).collect();
            if diff != [step.param] {
                return fail(format!("step {s} does not change exactly one coordinate"));
            }
            let p = &space.params()[step.param];
            let d = b[step.param] as i64 - a[step.param] as i64;
            if d.unsigned_abs() as u32 != p.step_levels() || (d > 0) != (step.delta > 0.0) {
                return fail(format!("step {s} is not ±Δ"));
            }
            if std::mem::replace(&mut moved[step.param], true) {
                return fail(format!("parameter {} moves twice", step.param));
            }
        }
        for pt in &self.levels {
            if pt.iter().zip(space.params()).any(|(&l, p)| l >= p.levels) {
                return fail("point off the lattice".into());
            }
        }
        Ok(())
    }
}

/// Random pool of trajectories, reproducible from `seed`.
pub fn generate_pool(space: &ParameterSpace, pool_size: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if pool_size == 0 {
        return Err(Error::invalid("pool size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = space.len();
    (0..pool_size)
        .map(|index| {
            let base: Vec<u32> = space
                .params()
                .iter()
                .map(|p| rng.gen_range(0..p.levels))
                .collect();
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut rng);
            let mut t = Trajectory::from_base(space, &base, &order)?;
            t.seed = seed;
            t.index = index;
            Ok(t)
        })
        .collect()
}
