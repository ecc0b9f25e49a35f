//! Choosing `r` well-spread trajectories out of a larger pool.
//!
//! Two trajectories are `d = Σ_i Σ_j |x_i - y_j|` apart (Euclidean point
//! distances over all point pairs). A set is scored by the sum of `d²` over
//! its pairs, which is the square of the usual spread measure and has the
//! same maximiser.

use serde::{Deserialize, Serialize};

use super::space::ParameterSpace;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

/// Largest number of subsets the exhaustive search will enumerate.
pub const EXHAUSTIVE_CAP: f64 = 2e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exhaustive,
    #[default]
    Greedy,
}

pub fn trajectory_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut d = 0.0;
    for x in a {
        for y in b {
            d += x
                .iter()
                .zip(y)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
        }
    }
    d
}

/// Matrix of squared trajectory distances.
pub fn distance_matrix(space: &ParameterSpace, pool: &[Trajectory]) -> Vec<Vec<f64>> {
    let pts: Vec<Vec<Vec<f64>>> = pool.iter().map(|t| t.points(space)).collect();
    let n = pool.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = trajectory_distance(&pts[i], &pts[j]);
            m[i][j] = d * d;
            m[j][i] = d * d;
        }
    }
    m
}

/// Spread score of a set of pool indices.
pub fn criterion(d2: &[Vec<f64>], set: &[usize]) -> f64 {
    let mut s = 0.0;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            s += d2[i][j];
        }
    }
    s
}

/// Binomial coefficient as a float (saturates rather than overflows).
pub fn binomial(n: usize, r: usize) -> f64 {
    let r = r.min(n - r.min(n));
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn exhaustive(d2: &[Vec<f64>], r: usize) -> Vec<usize> {
    let n = d2.len();
    let mut idx: Vec<usize> = (0..r).collect();
    let mut best = idx.clone();
    let mut best_val = criterion(d2, &idx);
    loop {
        // next combination in lexicographic order
        let mut i = r;
        while i > 0 && idx[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
        let v = criterion(d2, &idx);
        if v > best_val {
            best_val = v;
            best = idx.clone();
        }
    }
}

/// Backward elimination followed by single-swap improvement.
fn greedy(d2: &[Vec<f64>], r: usize) -> Vec<usize> {
    let n = d2.len();
    let mut keep = vec![true; n];
    let mut row: Vec<f64> = (0..n).map(|i| d2[i].iter().sum()).collect();
    for _ in r..n {
        let worst = (0..n)
            .filter(|&i| keep[i])
            .min_by(|&a, &b| row[a].total_cmp(&row[b]))
            .unwrap();
        keep[worst] = false;
        for i in 0..n {
            row[i] -= d2[i][worst];
        }
    }
    let mut set: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    loop {
        let mut best_gain = 0.0;
        let mut best_swap = None;
        for (a, &out) in set.iter().enumerate() {
            let loss: f64 = set.iter().map(|&j| d2[out][j]).sum();
            for cand in (0..n).filter(|&c| !keep[c]) {
                let gain: f64 = set
                    .iter()
                    .enumerate()
                    .filter(|&(b, _)| b != a)
                    .map(|(_, &j)| d2[cand][j])
                    .sum::<f64>()
                    - loss;
                if gain > best_gain * (1.0 + 1e-12) + 1e-15 {
                    best_gain = gain;
                    best_swap = Some((a, cand));
                }
            }
        }
        match best_swap {
            Some((a, cand)) => {
                keep[set[a]] = false;
                keep[cand] = true;
                set[a] = cand;
            }
            None => break,
        }
    }
    set.sort_unstable();
    set
}

/// Pool indices of the selected trajectories, in increasing order.
pub fn select_trajectories(
    space: &ParameterSpace,
    pool: &[Trajectory],
    r: usize,
    strategy: Strategy,
) -> Result<Vec<usize>> {
    let n = pool.len();
    if r == 0 || r > n {
        return Err(Error::invalid(format!("cannot select {r} of {n} trajectories")));
    }
    if r == n {
        return Ok((0..n).collect());
    }
    match strategy {
        Strategy::Exhaustive => {
            let c = binomial(n, r);
            if c > EXHAUSTIVE_CAP {
                return Err(Error::invalid(format!(
                    "exhaustive selection of {r} from {n} needs {c:.3e} subsets; use greedy"
                )));
            }
            Ok(exhaustive(&distance_matrix(space, pool), r))
        }
        Strategy::Greedy => Ok(greedy(&distance_matrix(space, pool), r)),
    }
}
