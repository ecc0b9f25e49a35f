//! Curve-number runoff.

use crate::error::{Error, Result};

fn check_cn(cn: f64) -> Result<()> {
    if cn > 0.0 && cn <= 100.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("curve number {cn} outside (0, 100]")))
    }
}

/// Potential maximum retention S [mm].
pub fn potential_retention(cn: f64) -> Result<f64> {
    check_cn(cn)?;
    Ok(25.4 * (1000.0 / cn - 10.0))
}

/// Initial abstraction, 0.2 S [mm].
pub fn initial_abstraction(cn: f64) -> Result<f64> {
    Ok(0.2 * potential_retention(cn)?)
}

/// Precipitation excess for cumulative precipitation `p` [mm].
pub fn scs_runoff(p: f64, cn: f64) -> Result<f64> {
    let s = potential_retention(cn)?;
    if !(p >= 0.0) {
        return Err(Error::invalid(format!("precipitation {p} must be >= 0")));
    }
    let ia = 0.2 * s;
    if p <= ia {
        return Ok(0.0);
    }
    let x = p - ia;
    Ok(x * x / (x + s))
}
