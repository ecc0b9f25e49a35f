//! Joint negative log-likelihood of well heads and the flooded-cell share.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NllConfig {
    /// Head measurement error [m].
    pub sigma_h: f64,
    /// Nominal percent of cells with heads above land surface.
    pub h_pas_ref: f64,
    /// Plausibility spread of that percentage [%].
    pub sigma_hpas: f64,
    pub n_wells: usize,
}

impl NllConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_h > 0.0) || !(self.sigma_hpas > 0.0) {
            return Err(Error::invalid("sigma_h and sigma_hpas must be positive"));
        }
        if self.n_wells == 0 {
            return Err(Error::invalid("n_wells must be at least 1"));
        }
        Ok(())
    }
}

/// The five additive terms, in the order they are summed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NllTerms {
    pub heads: f64,
    pub h_pas: f64,
    pub log_sigma_h: f64,
    pub log_sigma_hpas: f64,
    pub constant: f64,
}

impl NllTerms {
    pub fn total(&self) -> f64 {
        self.heads + self.h_pas + self.log_sigma_h + self.log_sigma_hpas + self.constant
    }
}

pub fn sum_squared_residuals(model: &[f64], observed: &[f64]) -> f64 {
    model
        .iter()
        .zip(observed)
        .map(|(m, o)| (m - o) * (m - o))
        .sum()
}

pub fn nll_terms(model: &[f64], observed: &[f64], h_pas: f64, cfg: &NllConfig) -> Result<NllTerms> {
    cfg.validate()?;
    if model.len() != cfg.n_wells || observed.len() != cfg.n_wells {
        return Err(Error::invalid(format!(
            "{} modelled and {} observed heads for {} wells",
            model.len(),
            observed.len(),
            cfg.n_wells
        )));
    }
    let n = cfg.n_wells as f64;
    let dh = h_pas - cfg.h_pas_ref;
    Ok(NllTerms {
        heads: sum_squared_residuals(model, observed) / (2.0 * cfg.sigma_h * cfg.sigma_h),
        h_pas: dh * dh / (2.0 * cfg.sigma_hpas * cfg.sigma_hpas),
        log_sigma_h: n * cfg.sigma_h.ln(),
        log_sigma_hpas: cfg.sigma_hpas.ln(),
        constant: 0.5 * (n + 1.0) * (2.0 * PI).ln(),
    })
}

pub fn nll(model: &[f64], observed: &[f64], h_pas: f64, cfg: &NllConfig) -> Result<f64> {
    Ok(nll_terms(model, observed, h_pas, cfg)?.total())
}
