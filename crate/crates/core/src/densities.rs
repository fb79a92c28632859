//! Built-in test densities, projected exactly onto dyadic grids through
//! their antiderivatives.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gridfn::{Density, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `1` on `[0, 1)`.
    Uniform,
    /// `2·1_{[0,1/2)}`.
    Halfstep,
    /// `min(4x, 4(1 − x))`.
    Tent,
    /// `0` on `[0.4, 0.6)`, `1.25` elsewhere.
    Withzero,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::Uniform, Builtin::Halfstep, Builtin::Tent, Builtin::Withzero];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Uniform => "uniform",
            Builtin::Halfstep => "halfstep",
            Builtin::Tent => "tent",
            Builtin::Withzero => "withzero",
        }
    }

    /// `∫₀ˣ f`.
    pub fn cdf(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Builtin::Uniform => x,
            Builtin::Halfstep => 2.0 * x.min(0.5),
            Builtin::Tent => {
                if x <= 0.5 {
                    2.0 * x * x
                } else {
                    1.0 - 2.0 * (1.0 - x) * (1.0 - x)
                }
            }
            Builtin::Withzero => 1.25 * (x.min(0.4) + (x - 0.6).max(0.0)),
        }
    }

    /// Cell averages on `resolution` equal cells.
    pub fn project(self, resolution: usize) -> Result<Density> {
        if resolution == 0 {
            return Err(Error::Domain("resolution must be positive".into()));
        }
        let k = resolution as f64;
        let values = (0..resolution)
            .map(|j| k * (self.cdf((j + 1) as f64 / k) - self.cdf(j as f64 / k)))
            .collect();
        Density::new(GridFunction::new(values)?)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown built-in density `{s}`")))
    }
}

/// A built-in name projected to `resolution`, or else a grid-function file.
pub fn load_function(spec: &str, resolution: usize) -> Result<GridFunction> {
    if let Ok(b) = spec.parse::<Builtin>() {
        return Ok(b.project(resolution)?.into_grid());
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Parse(format!(
            "`{spec}` is neither a built-in density (uniform|halfstep|tent|withzero) nor a file"
        )));
    }
    std::fs::read_to_string(path)?.parse()
}

/// [`load_function`] followed by the density check.
pub fn load_density(spec: &str, resolution: usize) -> Result<Density> {
    Density::new(load_function(spec, resolution)?)
}

/// A random density: independent standard exponential cell values, each
/// replaced by zero with probability `zero_prob`, then normalized. An
/// all-zero draw is resampled.
pub fn random_density<R: Rng + ?Sized>(resolution: usize, zero_prob: f64, rng: &mut R) -> Result<Density> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    loop {
        let values: Vec<f64> = (0..resolution)
            .map(|_| {
                if rng.random::<f64>() < zero_prob {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln()
                }
            })
            .collect();
        if values.iter().any(|&v| v > 0.0) {
            return Density::from_unnormalized(GridFunction::new(values)?);
        }
    }
}
