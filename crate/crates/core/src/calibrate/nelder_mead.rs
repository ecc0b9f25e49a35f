//! Nelder-Mead simplex minimisation with penalised bounds and orderings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base value returned for any point that violates a bound or ordering.
pub const PENALTY: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Spread of simplex values at convergence.
    pub f_tol: f64,
    /// Simplex size at convergence.
    pub x_tol: f64,
    /// Relative perturbation of each coordinate for the initial simplex.
    pub initial_step: f64,
    /// Perturbation used for zero coordinates.
    pub zero_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            f_tol: 1e-8,
            x_tol: 1e-6,
            initial_step: 0.05,
            zero_step: 0.00025,
        }
    }
}

/// Feasible region: optional box bounds and `x[g] >= x[l]` orderings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub ordered: Vec<(usize, usize)>,
}

impl Feasibility {
    /// Total amount by which `x` leaves the region; 0 inside.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        if let Some(lo) = &self.lower {
            v += x.iter().zip(lo).map(|(a, b)| (b - a).max(0.0)).sum::<f64>();
        }
        if let Some(hi) = &self.upper {
            v += x.iter().zip(hi).map(|(a, b)| (a - b).max(0.0)).sum::<f64>();
        }
        v += self
            .ordered
            .iter()
            .map(|&(g, l)| (x[l] - x[g]).max(0.0))
            .sum::<f64>();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn combine(a: &[f64], wa: f64, b: &[f64], wb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    feasibility: &Feasibility,
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    if n == 0 {
        return Err(Error::invalid("nothing to optimise"));
    }
    let v0 = feasibility.violation(start);
    if v0 > 0.0 {
        return Err(Error::invalid(format!(
            "start point is infeasible (violation {v0:.3e})"
        )));
    }
    let mut evaluations = 0;
    let mut f = |x: &[f64]| -> f64 {
        let v = feasibility.violation(x);
        if v > 0.0 {
            return PENALTY + v * v;
        }
        evaluations += 1;
        let y = objective(x);
        if y.is_finite() {
            y
        } else {
            f64::INFINITY
        }
    };
    let f_start = f(start);
    if !f_start.is_finite() {
        return Err(Error::Numerical("objective is not finite at the start point".into()));
    }

    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for k in 0..n {
        let mut y = start.to_vec();
        y[k] = if y[k] != 0.0 {
            (1.0 + opts.initial_step) * y[k]
        } else {
            opts.zero_step
        };
        simplex.push(y);
    }
    let mut values: Vec<f64> = std::iter::once(f_start)
        .chain(simplex[1..].iter().map(|x| f(x)))
        .collect();

    let (rho, chi, psi, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let size = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = values[1..]
            .iter()
            .map(|v| (v - values[0]).abs())
            .fold(0.0, f64::max);
        if size <= opts.x_tol && spread <= opts.f_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = combine(&centroid, 1.0 + rho, &worst, -rho);
        let fr = f(&xr);
        let mut shrink = false;
        if fr < values[0] {
            let xe = combine(&centroid, 1.0 + rho * chi, &worst, -rho * chi);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else if fr < values[n] {
            let xc = combine(&centroid, 1.0 + psi * rho, &worst, -psi * rho);
            let fc = f(&xc);
            if fc <= fr {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            let xcc = combine(&centroid, 1.0 - psi, &worst, psi);
            let fcc = f(&xcc);
            if fcc < values[n] {
                simplex[n] = xcc;
                values[n] = fcc;
            } else {
                shrink = true;
            }
        }
        if shrink {
            for j in 1..=n {
                simplex[j] = combine(&simplex[0], 1.0 - sigma, &simplex[j], sigma);
                values[j] = f(&simplex[j]);
            }
        }
    }
    Ok(NelderMeadResult {
        x: simplex[0].clone(),
        value: values[0],
        iterations,
        evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(
            |x| (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &Feasibility::default(),
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 2.0).abs() < 1e-5 && (r.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let feas = Feasibility {
            ordered: vec![(1, 0)],
            ..Default::default()
        };
        assert!(nelder_mead(|x| x[0], &[1.0, 0.0], &feas, &NelderMeadOptions::default()).is_err());
    }
}
