//! Samplers for the fixed-size experiment (n i.i.d. draws from `f`) and the
//! Poissonized one (a Poisson process with intensity `n·f`), plus binning,
//! occupancy statistics and their exact distributions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::dist::{binomial_cdf, sample_poisson};
use crate::error::{domain, Error, Result};
use crate::gridfn::{Density, GridFunction};

/// Work budget (`n·k'` cell updates) for the exact i.i.d. occupancy DP.
pub const IID_DP_BUDGET: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct IidSample {
    pub points: Vec<f64>,
}

impl IidSample {
    pub fn n(&self) -> usize {
        self.points.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSample {
    /// Mean total count `n·∫f`.
    pub intensity_total: f64,
    pub points: Vec<f64>,
}

impl PoissonSample {
    pub fn empty() -> Self {
        Self { intensity_total: 0.0, points: Vec::new() }
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinCounts {
    pub counts: Vec<u64>,
}

impl BinCounts {
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Which experiment generated the observations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OccupancyModel {
    Iid,
    Poisson,
}

impl OccupancyModel {
    pub const ALL: [OccupancyModel; 2] = [OccupancyModel::Iid, OccupancyModel::Poisson];

    pub fn name(self) -> &'static str {
        match self {
            OccupancyModel::Iid => "iid",
            OccupancyModel::Poisson => "poisson",
        }
    }
}

impl fmt::Display for OccupancyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OccupancyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(OccupancyModel::Iid),
            "poisson" => Ok(OccupancyModel::Poisson),
            other => Err(Error::Parse(format!("unknown model `{other}` (expected iid|poisson)"))),
        }
    }
}

/// Inverse-CDF sampler for a nonnegative piecewise-constant function.
#[derive(Clone, Debug)]
pub struct CellSampler {
    cumulative: Vec<f64>,
}

impl CellSampler {
    pub fn new(f: &GridFunction) -> Result<Self> {
        f.check_nonnegative()?;
        let mut acc = 0.0;
        let cumulative: Vec<f64> = f
            .values()
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return domain("cannot sample from a function with zero mass");
        }
        Ok(Self { cumulative })
    }

    pub fn resolution(&self) -> usize {
        self.cumulative.len()
    }

    /// Picks a cell with probability proportional to its mass.
    pub fn sample_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// A draw from the normalized function: a cell, then uniform within it.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let j = self.sample_cell(rng);
        let k = self.resolution() as f64;
        let x = (j as f64 + rng.random::<f64>()) / k;
        x.min(1.0 - f64::EPSILON / 2.0)
    }
}

pub fn sample_iid<R: Rng + ?Sized>(f: &Density, n: usize, rng: &mut R) -> IidSample {
    let sampler = CellSampler::new(f).expect("densities have unit mass");
    IidSample { points: (0..n).map(|_| sampler.sample_point(rng)).collect() }
}

/// Poisson process on `[0,1)` with intensity `n·f`; `f` need not be normalized.
pub fn sample_poisson_process<R: Rng + ?Sized>(
    f: &GridFunction,
    n: f64,
    rng: &mut R,
) -> Result<PoissonSample> {
    if !(n > 0.0 && n.is_finite()) {
        return domain(format!("intensity scale must be positive, got {n}"));
    }
    f.check_nonnegative()?;
    let intensity_total = n * f.integral();
    if intensity_total == 0.0 {
        return Ok(PoissonSample { intensity_total, points: Vec::new() });
    }
    let sampler = CellSampler::new(f)?;
    let count = sample_poisson(rng, intensity_total) as usize;
    let points = (0..count).map(|_| sampler.sample_point(rng)).collect();
    Ok(PoissonSample { intensity_total, points })
}

/// `counts[j] = #{x : ⌊k·x⌋ = j}` for points in `[0, 1)`.
pub fn bin_counts(points: &[f64], k: usize) -> Result<BinCounts> {
    if k == 0 {
        return domain("need at least one bin");
    }
    let mut counts = vec![0u64; k];
    for &x in points {
        if !(0.0..1.0).contains(&x) {
            return domain(format!("point {x} lies outside [0, 1)"));
        }
        let j = ((x * k as f64) as usize).min(k - 1);
        counts[j] += 1;
    }
    Ok(BinCounts { counts })
}

/// Number of bins holding at least one point.
pub fn occupancy(bc: &BinCounts) -> usize {
    bc.counts.iter().filter(|&&c| c > 0).count()
}

fn check_iid_n(n: f64) -> Result<u64> {
    if !(n >= 0.0 && n.fract() == 0.0 && n.is_finite()) {
        return domain(format!("the i.i.d. model needs an integer sample size, got {n}"));
    }
    Ok(n as u64)
}

/// Mean and variance of the occupied-cell count when the points are spread
/// uniformly over `kprime` equiprobable cells.
pub fn occupancy_moments_exact(n: f64, kprime: u64, model: OccupancyModel) -> Result<(f64, f64)> {
    if kprime == 0 {
        return domain("need at least one cell");
    }
    if !(n >= 0.0) {
        return domain(format!("sample size must be nonnegative, got {n}"));
    }
    let kp = kprime as f64;
    match model {
        OccupancyModel::Poisson => {
            let p = -(-n / kp).exp_m1();
            Ok((kp * p, kp * p * (1.0 - p)))
        }
        OccupancyModel::Iid => {
            let balls = check_iid_n(n)?;
            if balls == 0 {
                return Ok((0.0, 0.0));
            }
            if kprime == 1 {
                return Ok((1.0, 0.0));
            }
            let nf = balls as f64;
            // a = (1 − 1/k')^n, and b − a² with b = (1 − 2/k')^n written as
            // a²·expm1(n·ln(1 − 1/(k'−1)²)) to avoid cancellation.
            let a = (nf * (-1.0 / kp).ln_1p()).exp();
            let b_minus_a2 = a * a * (nf * (-1.0 / ((kp - 1.0) * (kp - 1.0))).ln_1p()).exp_m1();
            let mean = kp * (1.0 - a);
            let var = kp * a * (1.0 - a) + kp * (kp - 1.0) * b_minus_a2;
            Ok((mean, var.max(0.0)))
        }
    }
}

/// Exact pmf of the occupied-cell count for `n` balls thrown uniformly into
/// `kprime` cells, by the forward DP over balls.
pub fn occupancy_pmf_iid(n: u64, kprime: u64) -> Result<Vec<f64>> {
    if kprime == 0 {
        return domain("need at least one cell");
    }
    let work = n as u128 * kprime as u128;
    if work > IID_DP_BUDGET {
        return Err(Error::BudgetExceeded { work, budget: IID_DP_BUDGET });
    }
    let kp = kprime as usize;
    let kpf = kprime as f64;
    let mut p = vec![0.0; kp + 1];
    p[0] = 1.0;
    for t in 0..n as usize {
        let top = (t + 1).min(kp);
        for occ in (1..=top).rev() {
            p[occ] = p[occ] * (occ as f64 / kpf) + p[occ - 1] * ((kp - occ + 1) as f64 / kpf);
        }
        p[0] = 0.0;
    }
    Ok(p)
}

/// `P(K ≤ j)` for the occupied-cell count `K` over `kprime` equiprobable cells.
pub fn occupancy_cdf_exact(n: f64, kprime: u64, j: u64, model: OccupancyModel) -> Result<f64> {
    if kprime == 0 {
        return domain("need at least one cell");
    }
    if !(n >= 0.0) {
        return domain(format!("sample size must be nonnegative, got {n}"));
    }
    match model {
        OccupancyModel::Poisson => {
            let p = -(-n / kprime as f64).exp_m1();
            Ok(binomial_cdf(kprime, p, j))
        }
        OccupancyModel::Iid => {
            let balls = check_iid_n(n)?;
            if j >= kprime.min(balls) {
                return Ok(1.0);
            }
            let pmf = occupancy_pmf_iid(balls, kprime)?;
            Ok(pmf[..=j as usize].iter().sum::<f64>().min(1.0))
        }
    }
}

/// Union of two independent Poisson processes.
pub fn superpose(a: &PoissonSample, b: &PoissonSample) -> PoissonSample {
    let mut points = Vec::with_capacity(a.points.len() + b.points.len());
    points.extend_from_slice(&a.points);
    points.extend_from_slice(&b.points);
    PoissonSample { intensity_total: a.intensity_total + b.intensity_total, points }
}
