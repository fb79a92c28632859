//! The interval-selection problem on the family `F_{β,n}`.
//!
//! `[0,1)` is cut into `n` equal cells. A member of the family vanishes on
//! `z = ⌊n^β⌋` of them and is constant on the rest. The statistician must name
//! `m` cells on which the density is positive. Under a uniform prior on the
//! zero set the Bayes rule names every occupied cell (if there are at most
//! `m`) and completes the list uniformly from the unoccupied ones, so its risk
//! depends on the sample only through the occupied count `K`.

use rand::seq::index;
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::dist::{binomial_cdf, binomial_pmf, normal_cdf, sample_poisson};
use crate::error::{Error, Result};
use crate::experiments::{occupancy_pmf_iid, OccupancyModel, IID_DP_BUDGET};
use crate::gridfn::{Density, GridFunction};
use crate::mc::{McEngine, McResult, McRng};

/// `z = ⌊n^β⌋`, guarded against `n^β` landing a rounding error below an integer.
pub fn zero_count(n: u64, beta: f64) -> u64 {
    let x = (n as f64).powf(beta);
    (x * (1.0 + 1e-12)).floor() as u64
}

/// `m = ⌊n(1 − e^{-1}) + z(2e^{-1} − 1) − √n⌋`.
pub fn target_m(n: u64, beta: f64) -> Result<u64> {
    if n < 4 {
        return Err(Error::Config(format!("need n >= 4, got {n}")));
    }
    let nf = n as f64;
    let e1 = (-1.0f64).exp();
    let z = zero_count(n, beta) as f64;
    let m = (nf * (1.0 - e1) + z * (2.0 * e1 - 1.0) - nf.sqrt()).floor();
    if m < 1.0 {
        return Err(Error::Config(format!(
            "n = {n} is too small: the target count comes out as {m}"
        )));
    }
    Ok(m as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CounterexampleConfig {
    pub n: u64,
    pub beta: Option<f64>,
    pub z: u64,
    pub m: u64,
    pub reps: u64,
    pub seed: u64,
}

impl CounterexampleConfig {
    /// The standard configuration with `z` and `m` derived from `(n, β)`.
    pub fn new(n: u64, beta: f64, reps: u64, seed: u64) -> Result<Self> {
        if !(beta > 0.5 && beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (1/2, 1), got {beta}")));
        }
        let z = zero_count(n, beta);
        let m = target_m(n, beta)?;
        let cfg = Self::custom(n, z, m, reps, seed)?;
        Ok(Self { beta: Some(beta), ..cfg })
    }

    /// Arbitrary `(n, z, m)`. `m` may exceed `n − z`, in which case no rule can succeed.
    pub fn custom(n: u64, z: u64, m: u64, reps: u64, seed: u64) -> Result<Self> {
        if z == 0 || z >= n {
            return Err(Error::Config(format!("need 1 <= z < n, got z = {z}, n = {n}")));
        }
        if m > n {
            return Err(Error::Config(format!("cannot name m = {m} of only {n} cells")));
        }
        Ok(Self { n, beta: None, z, m, reps, seed })
    }

    /// Number of cells carrying mass.
    pub fn support(&self) -> u64 {
        self.n - self.z
    }
}

/// Cell masses of the member of `F_{β,n}` vanishing on `zero_set` (1-based indices).
pub fn make_fbeta(n: u64, beta: f64, zero_set: &[u64]) -> Result<Vec<f64>> {
    let z = zero_count(n, beta);
    if z == 0 || z >= n {
        return Err(Error::Config(format!("n^beta must give 1 <= z < n, got z = {z}")));
    }
    if zero_set.len() as u64 != z {
        return Err(Error::Config(format!(
            "zero set has {} cells, expected {z}",
            zero_set.len()
        )));
    }
    let w = 1.0 / (n - z) as f64;
    let mut masses = vec![w; n as usize];
    for &i in zero_set {
        if i == 0 || i > n {
            return Err(Error::Config(format!("zero-set index {i} outside 1..={n}")));
        }
        if masses[i as usize - 1] == 0.0 {
            return Err(Error::Config(format!("zero-set index {i} repeated")));
        }
        masses[i as usize - 1] = 0.0;
    }
    Ok(masses)
}

/// A zero set drawn uniformly among all `z`-subsets of `1..=n`.
pub fn random_zero_set<R: Rng + ?Sized>(n: u64, z: u64, rng: &mut R) -> Vec<u64> {
    let mut set: Vec<u64> = index::sample(rng, n as usize, z as usize)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    set.sort_unstable();
    set
}

/// [`make_fbeta`] with the zero set drawn from the uniform prior.
pub fn make_fbeta_random<R: Rng + ?Sized>(n: u64, beta: f64, rng: &mut R) -> Result<Vec<f64>> {
    let z = zero_count(n, beta);
    make_fbeta(n, beta, &random_zero_set(n, z, rng))
}

/// Density (values `n·mass`) of a cell-mass vector.
pub fn masses_to_density(masses: &[f64]) -> Result<Density> {
    let n = masses.len() as f64;
    Density::new(GridFunction::new(masses.iter().map(|w| w * n).collect())?)
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `ln((n − z − i)/(n − i))`.
fn log_factor(n: u64, z: u64, i: u64) -> f64 {
    (-(z as f64) / (n - i) as f64).ln_1p()
}

/// Risk of the Bayes rule given `K` occupied cells:
/// `1 − ∏_{i=K}^{m-1} (n − z − i)/(n − i)` when `K < m`, else 0.
pub fn conditional_bayes_risk(n: u64, z: u64, m: u64, k: u64) -> f64 {
    if k >= m {
        return 0.0;
    }
    if m > n - z {
        return 1.0;
    }
    let mut s = CompensatedSum::default();
    for i in k..m {
        s.add(log_factor(n, z, i));
    }
    (-s.value().exp_m1()).clamp(0.0, 1.0)
}

/// [`conditional_bayes_risk`] for every `K = 0, …, m`, from shared suffix sums.
#[derive(Clone, Debug)]
pub struct RiskTable {
    risks: Vec<f64>,
}

impl RiskTable {
    pub fn new(n: u64, z: u64, m: u64) -> Self {
        let mut risks = vec![0.0; m as usize + 1];
        if m > n - z {
            risks[..m as usize].fill(1.0);
            return Self { risks };
        }
        let mut s = CompensatedSum::default();
        for i in (0..m).rev() {
            s.add(log_factor(n, z, i));
            risks[i as usize] = (-s.value().exp_m1()).clamp(0.0, 1.0);
        }
        Self { risks }
    }

    pub fn risk(&self, k: u64) -> f64 {
        self.risks.get(k as usize).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
    pub exact: Option<f64>,
}

impl RiskEstimate {
    fn exact_only(v: f64) -> Self {
        Self { mean: v, stderr: 0.0, reps: 0, exact: Some(v) }
    }

    fn from_mc(mc: &McResult, exact: Option<f64>) -> Self {
        Self { mean: mc.mean, stderr: mc.stderr, reps: mc.reps, exact }
    }

    /// The exact value when available, otherwise the Monte Carlo mean.
    pub fn value(&self) -> f64 {
        self.exact.unwrap_or(self.mean)
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

/// Occupancy shortfall, Bayes risk and their difference, from one pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    /// `P(K < m)`.
    pub shortfall: RiskEstimate,
    pub bayes: RiskEstimate,
    /// `P(K < m) − R_n`; nonnegative.
    pub gap: RiskEstimate,
}

fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, len: u64) -> u64 {
    ((rng.next_u64() as u128 * len as u128) >> 64) as u64
}

/// Throws `balls` uniform balls into `cells` cells and counts the occupied ones.
pub fn throw_balls<R: RngCore + ?Sized>(rng: &mut R, balls: u64, cells: u64, mask: &mut Vec<u64>) -> u64 {
    let words = cells.div_ceil(64) as usize;
    mask.clear();
    mask.resize(words, 0);
    for _ in 0..balls {
        let c = uniform_index(rng, cells);
        mask[(c / 64) as usize] |= 1u64 << (c % 64);
    }
    mask.iter().map(|w| w.count_ones() as u64).sum()
}

fn simulate_occupied(model: OccupancyModel, cfg: &CounterexampleConfig, rng: &mut McRng) -> u64 {
    let balls = match model {
        OccupancyModel::Iid => cfg.n,
        OccupancyModel::Poisson => sample_poisson(rng, cfg.n as f64),
    };
    let mut mask = Vec::new();
    throw_balls(rng, balls, cfg.support(), &mut mask)
}

/// Exact `(P(K < m), R_n)` when available.
pub fn exact_values(model: OccupancyModel, cfg: &CounterexampleConfig) -> Result<Option<(f64, f64)>> {
    let (n, m, support) = (cfg.n, cfg.m, cfg.support());
    if m == 0 {
        return Ok(Some((0.0, 0.0)));
    }
    let table = RiskTable::new(n, cfg.z, m);
    match model {
        OccupancyModel::Poisson => {
            let p = -(-(n as f64) / support as f64).exp_m1();
            let shortfall = binomial_cdf(support, p, m - 1);
            let mut bayes = CompensatedSum::default();
            for j in 0..m.min(support + 1) {
                bayes.add(binomial_pmf(support, p, j) * table.risk(j));
            }
            Ok(Some((shortfall, bayes.value().min(shortfall))))
        }
        OccupancyModel::Iid => {
            if n as u128 * support as u128 > IID_DP_BUDGET {
                return Ok(None);
            }
            let pmf = occupancy_pmf_iid(n, support)?;
            let mut shortfall = CompensatedSum::default();
            let mut bayes = CompensatedSum::default();
            for (j, &p) in pmf.iter().enumerate().take(m as usize) {
                shortfall.add(p);
                bayes.add(p * table.risk(j as u64));
            }
            let s = shortfall.value().min(1.0);
            Ok(Some((s, bayes.value().min(s))))
        }
    }
}

/// Exact values where available plus `cfg.reps` Monte Carlo replications.
pub fn evaluate(
    model: OccupancyModel,
    cfg: &CounterexampleConfig,
    engine: &McEngine,
) -> Result<CounterexampleReport> {
    let exact = exact_values(model, cfg)?;
    if cfg.reps == 0 {
        return match exact {
            Some((s, b)) => Ok(CounterexampleReport {
                shortfall: RiskEstimate::exact_only(s),
                bayes: RiskEstimate::exact_only(b),
                gap: RiskEstimate::exact_only(s - b),
            }),
            None => Err(Error::Config(format!(
                "no exact {model} computation for n = {} within the work budget; set reps > 0",
                cfg.n
            ))),
        };
    }
    let table = RiskTable::new(cfg.n, cfg.z, cfg.m);
    let ks = engine.replicate(cfg.reps, cfg.seed, |_, rng| Ok(simulate_occupied(model, cfg, rng)))?;
    let short: Vec<f64> = ks.iter().map(|&k| if k < cfg.m { 1.0 } else { 0.0 }).collect();
    let risk: Vec<f64> = ks.iter().map(|&k| table.risk(k)).collect();
    let gap: Vec<f64> = short.iter().zip(&risk).map(|(s, r)| s - r).collect();
    Ok(CounterexampleReport {
        shortfall: RiskEstimate::from_mc(&McResult::from_values(&short, cfg.seed)?, exact.map(|e| e.0)),
        bayes: RiskEstimate::from_mc(&McResult::from_values(&risk, cfg.seed)?, exact.map(|e| e.1)),
        gap: RiskEstimate::from_mc(&McResult::from_values(&gap, cfg.seed)?, exact.map(|e| e.0 - e.1)),
    })
}

pub fn bayes_risk(model: OccupancyModel, cfg: &CounterexampleConfig) -> Result<RiskEstimate> {
    Ok(evaluate(model, cfg, &McEngine::default())?.bayes)
}

/// `P(K < m)`.
pub fn occupancy_shortfall_prob(model: OccupancyModel, cfg: &CounterexampleConfig) -> Result<RiskEstimate> {
    Ok(evaluate(model, cfg, &McEngine::default())?.shortfall)
}

/// `(Φ(−√e), Φ(−√e/√(1 − e^{-1})))`: the normal limits of `P(K < m)` for the
/// i.i.d. model under the variance `n·e^{-1}`, and for the Poisson model.
pub fn asymptotic_limits() -> (f64, f64) {
    let se = 0.5f64.exp();
    let e1 = (-1.0f64).exp();
    (normal_cdf(-se), normal_cdf(-se / (1.0 - e1).sqrt()))
}

/// Limit of `P(K < m)` in the i.i.d. model under the exact occupancy
/// variance `n(e^{-1} − 2e^{-2})`.
pub fn iid_limit_exact_variance() -> f64 {
    let e1 = (-1.0f64).exp();
    normal_cdf(-1.0 / (e1 - 2.0 * e1 * e1).sqrt())
}

/// Limit quoted for `model` by [`asymptotic_limits`].
pub fn model_limit(model: OccupancyModel) -> f64 {
    let (iid, poisson) = asymptotic_limits();
    match model {
        OccupancyModel::Iid => iid,
        OccupancyModel::Poisson => poisson,
    }
}
