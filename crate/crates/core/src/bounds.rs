//! Closed-form deficiency and tail bounds, and exact checks of the
//! inequalities that can be evaluated numerically.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dist::{poisson_cdf, poisson_sf};
use crate::error::{domain, Error, Result};
use crate::gridfn::GridFunction;
use crate::losses::{hellinger_sq_poisson, ln_loss, weighted_chi_sq};

/// A computed quantity next to its claimed upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The bound is no smaller than the largest value the quantity can take.
    pub vacuous: bool,
    pub margin: f64,
}

impl BoundReport {
    /// `trivial_max` is the a priori upper limit of the bounded quantity.
    pub fn new(lhs: f64, rhs: f64, trivial_max: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-12 * rhs.abs().max(1.0),
            vacuous: rhs >= trivial_max,
            margin: rhs - lhs,
        }
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return domain(format!("{name} must be nonnegative, got {x}"));
    }
    Ok(())
}

fn check_pos(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("{name} must be positive, got {x}"));
    }
    Ok(())
}

/// `√(8·r·β_n)`, the cost of `r` extra observations given minimax risk `β_n`.
pub fn lecam_additional_obs_bound(r: f64, beta_n: f64) -> Result<f64> {
    check_nonneg("r", r)?;
    check_nonneg("beta_n", beta_n)?;
    Ok((8.0 * r * beta_n).sqrt())
}

/// `m/√(2n)`, the cost of `m` extra expected observations in the Poisson experiment.
pub fn poisson_pair_bound(n: f64, m: f64) -> Result<f64> {
    check_pos("n", n)?;
    check_nonneg("m", m)?;
    Ok(m / (2.0 * n).sqrt())
}

/// Deficiency-type distances never exceed this.
pub const DEFICIENCY_MAX: f64 = 2.0;

/// Hellinger distance between the superposed process `n·f + m·f₀` and the
/// process `(n+m)·f`, against `m²/(n+m)·∫(f − f₀)²/(f + m·f₀/(n+m))`.
pub fn superposition_check(f: &GridFunction, f0: &GridFunction, n: f64, m: f64) -> Result<BoundReport> {
    check_pos("n", n)?;
    check_pos("m", m)?;
    let mixed = f.zip_with(f0, |a, b| n * a + m * b)?;
    let target = f.scaled(n + m)?;
    let lhs = hellinger_sq_poisson(&mixed, &target)?;
    let rhs = m * m / (n + m) * weighted_chi_sq(f, f0, m / (n + m))?;
    Ok(BoundReport::new(lhs, rhs, 2.0))
}

/// `2D²·∫(f − f₀)²/(f + n^{-1/2}·f₀)`, the coarser bound on the superposition integral.
pub fn superposition_secondary_rhs(f: &GridFunction, f0: &GridFunction, n: f64, d: f64) -> Result<f64> {
    check_pos("D", d)?;
    Ok(2.0 * d * d * ln_loss(f, f0, n)?)
}

/// `2D√c_n`; requires `D > 1`.
pub fn lemma3_neighborhood_bound(d: f64, c_n: f64) -> Result<f64> {
    if !(d > 1.0 && d.is_finite()) {
        return domain(format!(
            "D must exceed 1 (the superposition argument takes m = D·sqrt(n) with D > 1), got {d}"
        ));
    }
    check_nonneg("c_n", c_n)?;
    Ok(2.0 * d * c_n.sqrt())
}

/// Whether `∫(f − f₀)²/(f + n^{-1/2}·f₀) ≤ c_n`.
pub fn in_neighborhood(f: &GridFunction, f0: &GridFunction, n: f64, c_n: f64) -> Result<bool> {
    check_nonneg("c_n", c_n)?;
    Ok(ln_loss(f, f0, n)? <= c_n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailSide {
    /// `P(N − λ ≥ m₀)`.
    Upper,
    /// `P(N − λ ≤ −m₀)`.
    Lower,
    /// `P(|N − λ| ≥ m₀)`.
    TwoSided,
}

impl TailSide {
    pub const ALL: [TailSide; 3] = [TailSide::Upper, TailSide::Lower, TailSide::TwoSided];

    pub fn name(self) -> &'static str {
        match self {
            TailSide::Upper => "upper",
            TailSide::Lower => "lower",
            TailSide::TwoSided => "two-sided",
        }
    }
}

impl fmt::Display for TailSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TailSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TailSide::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown tail side `{s}`")))
    }
}

/// Exact tail probability of `N ~ Poisson(λ)` at distance `m₀` from the mean.
pub fn poisson_tail_prob(lambda: f64, m0: f64, side: TailSide) -> Result<f64> {
    check_pos("lambda", lambda)?;
    check_pos("m0", m0)?;
    let upper = || poisson_sf(lambda, (lambda + m0).ceil() as u64);
    let lower = || {
        let x = lambda - m0;
        if x < 0.0 {
            0.0
        } else {
            poisson_cdf(lambda, x.floor() as u64)
        }
    };
    Ok(match side {
        TailSide::Upper => upper(),
        TailSide::Lower => lower(),
        TailSide::TwoSided => (upper() + lower()).min(1.0),
    })
}

/// `exp(−m₀³/(m₀ + λ)²)`.
pub fn poisson_tail_rhs(lambda: f64, m0: f64) -> f64 {
    (-m0.powi(3) / (m0 + lambda).powi(2)).exp()
}

pub fn poisson_tail_check(lambda: f64, m0: f64, side: TailSide) -> Result<BoundReport> {
    let lhs = poisson_tail_prob(lambda, m0, side)?;
    Ok(BoundReport::new(lhs, poisson_tail_rhs(lambda, m0), 1.0))
}

/// `P(Poisson(n + ⌈D√n⌉) ≤ n − 1)` against `2/D²`.
pub fn lemma2_tail_check(n: u64, d: f64) -> Result<BoundReport> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    check_pos("D", d)?;
    let nf = n as f64;
    let lambda = nf + (d * nf.sqrt()).ceil();
    let lhs = poisson_cdf(lambda, n - 1);
    Ok(BoundReport::new(lhs, 2.0 / (d * d), 1.0))
}
