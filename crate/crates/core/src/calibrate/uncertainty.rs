//! Residual parameter uncertainty from the Gauss-Newton Hessian at an optimum.

use std::f64::consts::LN_10;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::refine::{CalibrationProblem, RefinedResult};
use super::Evaluation;
use crate::error::{Error, Result};
use crate::morris::Scale;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyOptions {
    /// Central-difference step in transformed coordinates.
    pub step: f64,
    /// Include the flooded-cell residual in the Jacobian.
    pub include_hpas: bool,
}

impl Default for UncertaintyOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            include_hpas: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    /// `JᵀJ`, row-major.
    pub hessian: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub std: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// `0.71·a − 0.70·b`, largest component positive, tiny components omitted.
fn describe_direction(v: &[f64], names: &[String]) -> String {
    let lead = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    let mut s = String::new();
    for (x, name) in v.iter().zip(names) {
        let x = sign * x;
        if x.abs() < 0.05 {
            continue;
        }
        if s.is_empty() {
            if x < 0.0 {
                s.push('−');
            }
        } else {
            s.push_str(if x < 0.0 { " − " } else { " + " });
        }
        s.push_str(&format!("{:.2}·{name}", x.abs()));
    }
    s
}

/// Inverse of `JᵀJ` where `J` is the central-difference Jacobian of the
/// weighted residual vector at `x`.
pub fn gauss_newton_covariance<R>(
    residuals: R,
    x: &[f64],
    step: f64,
    names: &[String],
) -> Result<Covariance>
where
    R: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x.len();
    if n == 0 || names.len() != n {
        return Err(Error::invalid("one name per coordinate is required"));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += step;
        xm[j] -= step;
        let fail = || Error::Numerical(format!("model failed while perturbing {}", names[j]));
        let rp = residuals(&xp).ok_or_else(fail)?;
        let rm = residuals(&xm).ok_or_else(fail)?;
        if rp.len() != rm.len() {
            return Err(Error::Numerical("residual vector changed length".into()));
        }
        columns.push(rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * step)).collect());
    }
    let m = columns[0].len();
    let jac = DMatrix::from_fn(m, n, |i, j| columns[j][i]);
    let h = jac.transpose() * &jac;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Hessian has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(h.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    if !(lmin > 1e-12 * lmax) || lmax <= 0.0 {
        let v: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        return Err(Error::NotPositiveDefinite {
            eigenvalue: lmin,
            direction: describe_direction(&v, names),
        });
    }
    let cov = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Cholesky factorisation failed".into()))?
        .inverse();
    let std = (0..n).map(|i| cov[(i, i)].sqrt()).collect();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(Covariance {
        hessian: rows(&h),
        covariance: rows(&cov),
        std,
        eigenvalues,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub names: Vec<String>,
    pub optimum: Vec<f64>,
    pub sigma_h: f64,
    /// Standard deviations in transformed coordinates.
    pub std_transformed: Vec<f64>,
    /// Standard deviations in physical units.
    pub std: Vec<f64>,
    /// `optimum - 2σ`
    pub lower: Vec<f64>,
    /// `optimum + 2σ`
    pub upper: Vec<f64>,
    pub covariance: Covariance,
}

impl UncertaintyReport {
    pub fn contains(&self, physical: &[f64]) -> Vec<bool> {
        physical
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| x >= lo && x <= hi)
            .collect()
    }
}

fn weighted_residuals<F>(
    problem: &CalibrationProblem<'_, F>,
    ev: &Evaluation,
    sigma_h: f64,
    include_hpas: bool,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> Option<Evaluation> + Sync,
{
    let mut r: Vec<f64> = ev
        .heads
        .iter()
        .zip(&problem.observed)
        .map(|(h, o)| (h - o) / sigma_h)
        .collect();
    if include_hpas {
        r.push((ev.h_pas - problem.cfg.h_pas_ref) / problem.cfg.sigma_hpas);
    }
    r
}

/// Standard deviations and `±2σ` ranges of the calibration parameters at a
/// refined optimum, with `σ_h` held at its optimised value.
pub fn residual_uncertainty<F>(
    problem: &CalibrationProblem<'_, F>,
    optimum: &RefinedResult,
    opts: &UncertaintyOptions,
) -> Result<UncertaintyReport>
where
    F: Fn(&[f64]) -> Option<Evaluation> + Sync,
{
    let x = problem.to_transformed(&optimum.params);
    let names = problem.names();
    let cov = gauss_newton_covariance(
        |t| {
            let ev = problem.evaluate(&problem.to_physical(t))?;
            Some(weighted_residuals(problem, &ev, optimum.sigma_h, opts.include_hpas))
        },
        &x,
        opts.step,
        &names,
    )?;
    let std: Vec<f64> = problem
        .params
        .iter()
        .zip(&optimum.params)
        .zip(&cov.std)
        .map(|((p, &v), &s)| match p.scale {
            Scale::Linear => s,
            Scale::Log10 => v * LN_10 * s,
        })
        .collect();
    let lower = optimum.params.iter().zip(&std).map(|(v, s)| v - 2.0 * s).collect();
    let upper = optimum.params.iter().zip(&std).map(|(v, s)| v + 2.0 * s).collect();
    Ok(UncertaintyReport {
        names,
        optimum: optimum.params.clone(),
        sigma_h: optimum.sigma_h,
        std_transformed: cov.std.clone(),
        std,
        lower,
        upper,
        covariance: cov,
    })
}
