//! Elementary effects and their summary statistics.

use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::error::{Error, Result};

/// Elementary effect of every parameter along one trajectory, indexed by
/// parameter. `None` if any model value is not finite.
pub fn elementary_effects(trajectory: &Trajectory, values: &[f64]) -> Option<Vec<f64>> {
    if values.len() != trajectory.levels.len() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut ee = vec![0.0; trajectory.steps.len()];
    for (s, step) in trajectory.steps.iter().enumerate() {
        ee[step.param] = (values[s + 1] - values[s]) / step.delta;
    }
    Some(ee)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectStats {
    pub mu: f64,
    pub mu_star: f64,
    pub sigma: f64,
}

/// `μ`, `μ*` and the sample standard deviation (n - 1) of each parameter's
/// effects. `effects[t][i]` is the effect of parameter `i` on trajectory `t`.
pub fn aggregate(effects: &[Vec<f64>]) -> Result<Vec<EffectStats>> {
    let n = effects.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "{n} trajectories retained, at least 2 are needed"
        )));
    }
    let k = effects[0].len();
    let nf = n as f64;
    Ok((0..k)
        .map(|i| {
            let mu = effects.iter().map(|e| e[i]).sum::<f64>() / nf;
            let mu_star = effects.iter().map(|e| e[i].abs()).sum::<f64>() / nf;
            let ss: f64 = effects.iter().map(|e| (e[i] - mu) * (e[i] - mu)).sum();
            EffectStats {
                mu,
                mu_star,
                sigma: (ss / (nf - 1.0)).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plus_minus_two() {
        let s = aggregate(&[vec![2.0], vec![-2.0]]).unwrap()[0];
        assert_eq!(s.mu, 0.0);
        assert_eq!(s.mu_star, 2.0);
        assert!((s.sigma - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_effects() {
        let s = aggregate(&vec![vec![-1.5]; 4]).unwrap()[0];
        assert_eq!((s.mu_star, s.sigma), (1.5, 0.0));
        assert_eq!(s.mu, -1.5);
    }

    #[test]
    fn needs_two() {
        assert!(aggregate(&[vec![1.0]]).is_err());
    }
}
