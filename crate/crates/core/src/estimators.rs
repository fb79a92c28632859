//! Histogram density estimators: the raw bin-count histogram, its thresholded
//! version, and zero-truncation.

use clap::ValueEnum;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::experiments::{bin_counts, sample_iid, sample_poisson_process, BinCounts, OccupancyModel};
use crate::gridfn::{Density, GridFunction};
use crate::losses::Metric;
use crate::mc::{McEngine, McResult};

/// `k_n = ⌈n / (ln n)^4⌉`.
pub fn bin_resolution(n: u64) -> Result<usize> {
    if n < 3 {
        return domain(format!("bin resolution needs n >= 3, got {n}"));
    }
    let nf = n as f64;
    Ok((nf / nf.ln().powi(4)).ceil() as usize)
}

/// `c_n = 1/√(ln n)`.
pub fn threshold_level(n: u64) -> Result<f64> {
    if n < 8 {
        return domain(format!("threshold level needs n >= 8, got {n}"));
    }
    Ok(1.0 / (n as f64).ln().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub n: f64,
    pub k_n: usize,
    pub c_n: f64,
}

impl EstimatorConfig {
    pub fn new(n: f64, k_n: usize, c_n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return domain(format!("sample scale must be positive, got {n}"));
        }
        if k_n == 0 {
            return domain("need at least one bin");
        }
        check_level(c_n)?;
        Ok(Self { n, k_n, c_n })
    }

    /// The standard choice `k_n`, `c_n` for sample size `n`.
    pub fn for_sample_size(n: u64) -> Result<Self> {
        Self::new(n as f64, bin_resolution(n)?, threshold_level(n)?)
    }

    /// Raw histogram followed by thresholding.
    pub fn estimate(&self, bc: &BinCounts) -> Result<GridFunction> {
        if bc.k() != self.k_n {
            return domain(format!("expected {} bins, got {}", self.k_n, bc.k()));
        }
        threshold_histogram(&raw_histogram(bc, self.n)?, self.c_n)
    }
}

fn check_level(c_n: f64) -> Result<()> {
    if !(c_n > 0.0 && c_n <= std::f64::consts::FRAC_1_SQRT_2) {
        return domain(format!("threshold level must lie in (0, 1/sqrt 2], got {c_n}"));
    }
    Ok(())
}

/// `(k/n)·N_j` on each of the `k` bins.
pub fn raw_histogram(bc: &BinCounts, n: f64) -> Result<GridFunction> {
    if !(n > 0.0 && n.is_finite()) {
        return domain(format!("sample scale must be positive, got {n}"));
    }
    let scale = bc.k() as f64 / n;
    GridFunction::new(bc.counts.iter().map(|&c| scale * c as f64).collect())
}

/// Zero below `2c`, capped at `1/c`, unchanged in between.
pub fn threshold_histogram(raw: &GridFunction, c_n: f64) -> Result<GridFunction> {
    check_level(c_n)?;
    let (lo, hi) = (2.0 * c_n, 1.0 / c_n);
    raw.map(|v| {
        if v < lo {
            0.0
        } else if v > hi {
            hi
        } else {
            v
        }
    })
}

/// Keeps cells with value at least `2·eps`.
pub fn truncate_below(f_hat: &GridFunction, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    f_hat.map(|v| if v >= 2.0 * eps { v } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    /// Raw histogram, then thresholding.
    Threshold,
    /// Raw histogram only.
    Raw,
    /// The true density itself (a zero-loss sanity path).
    Oracle,
}

/// Monte Carlo estimate of `E metric(f, f̂_n)` for the standard `k_n`, `c_n`.
#[allow(clippy::too_many_arguments)]
pub fn estimator_risk(
    truth: &Density,
    n: u64,
    model: OccupancyModel,
    metric: Metric,
    kind: EstimatorKind,
    reps: u64,
    seed: u64,
    engine: &McEngine,
) -> Result<McResult> {
    let cfg = EstimatorConfig::for_sample_size(n)?;
    engine.run_mc(reps, seed, |_, rng| {
        let estimate = match kind {
            EstimatorKind::Oracle => truth.as_grid().clone(),
            kind => {
                let points = match model {
                    OccupancyModel::Iid => sample_iid(truth, n as usize, rng).points,
                    OccupancyModel::Poisson => sample_poisson_process(truth, cfg.n, rng)?.points,
                };
                let raw = raw_histogram(&bin_counts(&points, cfg.k_n)?, cfg.n)?;
                if kind == EstimatorKind::Threshold {
                    threshold_histogram(&raw, cfg.c_n)?
                } else {
                    raw
                }
            }
        };
        metric.evaluate(truth, &estimate, cfg.n)
    })
}
