//! Parameter definitions and the map between physical and unit-cube values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log10,
}

fn default_levels() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub name: String,
    pub low: f64,
    pub high: f64,
    #[serde(default)]
    pub scale: Scale,
    /// Number of lattice levels; must be even.
    #[serde(default = "default_levels")]
    pub levels: u32,
}

impl ParameterDef {
    pub fn linear(name: &str, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            low,
            high,
            scale: Scale::Linear,
            levels: 6,
        }
    }

    pub fn log10(name: &str, low: f64, high: f64) -> Self {
        Self {
            scale: Scale::Log10,
            ..Self::linear(name, low, high)
        }
    }

    pub fn with_levels(mut self, levels: u32) -> Self {
        self.levels = levels;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::invalid(format!("parameter {}: {why}", self.name)));
        if !(self.low < self.high) || !self.low.is_finite() || !self.high.is_finite() {
            return bad("low must be below high");
        }
        if self.scale == Scale::Log10 && !(self.low > 0.0) {
            return bad("log10 scale needs a positive lower bound");
        }
        if self.levels < 2 {
            return bad("at least 2 levels are needed");
        }
        if self.levels % 2 != 0 {
            return bad("the number of levels must be even");
        }
        Ok(())
    }

    fn transformed(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => x,
            Scale::Log10 => x.log10(),
        }
    }

    /// Physical value to [0, 1].
    pub fn normalize(&self, x: f64) -> Result<f64> {
        if !(x >= self.low && x <= self.high) {
            return Err(Error::invalid(format!(
                "{} = {x} outside [{}, {}]",
                self.name, self.low, self.high
            )));
        }
        if x == self.low {
            return Ok(0.0);
        }
        if x == self.high {
            return Ok(1.0);
        }
        let (a, b) = (self.transformed(self.low), self.transformed(self.high));
        Ok(((self.transformed(x) - a) / (b - a)).clamp(0.0, 1.0))
    }

    /// [0, 1] to physical value; the endpoints map exactly to `low` and `high`.
    pub fn denormalize(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!(
                "normalized {} = {u} outside [0, 1]",
                self.name
            )));
        }
        if u == 0.0 {
            return Ok(self.low);
        }
        if u == 1.0 {
            return Ok(self.high);
        }
        Ok(match self.scale {
            Scale::Linear => self.low + u * (self.high - self.low),
            Scale::Log10 => {
                let (a, b) = (self.low.log10(), self.high.log10());
                10f64.powf(a + u * (b - a))
            }
        })
    }

    /// Normalized coordinate of a lattice level.
    pub fn level_coordinate(&self, level: u32) -> f64 {
        level as f64 / (self.levels - 1) as f64
    }

    /// Physical values of all lattice levels, low to high.
    pub fn lattice(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|l| self.denormalize(self.level_coordinate(l)).unwrap())
            .collect()
    }

    /// Step in levels, `p / 2`, i.e. `Δ = p / (2 (p - 1))` in [0, 1] units.
    pub fn step_levels(&self) -> u32 {
        self.levels / 2
    }

    pub fn delta(&self) -> f64 {
        self.levels as f64 / (2.0 * (self.levels - 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    params: Vec<ParameterDef>,
}

impl ParameterSpace {
    pub fn new(params: Vec<ParameterDef>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("parameter space is empty"));
        }
        for (i, p) in params.iter().enumerate() {
            p.validate()?;
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::invalid(format!("duplicate parameter {}", p.name)));
            }
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[ParameterDef] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&ParameterDef> {
        self.params.iter().find(|p| p.name == name)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n == self.params.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "point has {n} coordinates, space has {}",
                self.params.len()
            )))
        }
    }

    pub fn normalize(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_len(point.len())?;
        self.params
            .iter()
            .zip(point)
            .map(|(p, &x)| p.normalize(x))
            .collect()
    }

    pub fn denormalize(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_len(point.len())?;
        self.params
            .iter()
            .zip(point)
            .map(|(p, &u)| p.denormalize(u))
            .collect()
    }
}
