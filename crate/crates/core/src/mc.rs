//! Deterministic Monte Carlo replication engine.
//!
//! Replication `i` of a run with seed `s` always draws from the ChaCha8 stream
//! keyed by `s` with stream id `mix(i)`. Values are gathered by index and
//! reduced serially in index order, so a result is a function of
//! `(task, reps, seed)` alone and not of the worker count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// The generator handed to every replication.
pub type McRng = ChaCha8Rng;

/// Two-sided 95% normal critical value.
pub const Z95: f64 = 1.96;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> McRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(mix64(self.stream));
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McResult {
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
    pub seed: u64,
    pub ci95: (f64, f64),
}

impl McResult {
    /// Mean and standard error of `values`, accumulated in order with Welford's update.
    pub fn from_values(values: &[f64], seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("Monte Carlo needs at least one replication".into()));
        }
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in values.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let reps = values.len() as u64;
        let var = if reps > 1 { m2 / (reps - 1) as f64 } else { 0.0 };
        let stderr = (var.max(0.0) / reps as f64).sqrt();
        Ok(Self {
            mean,
            stderr,
            reps,
            seed,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
        })
    }
}

/// How many workers replications are spread over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Workers {
    /// The global rayon pool.
    #[default]
    Auto,
    /// Run in the calling thread.
    Serial,
    /// A dedicated pool of this many threads.
    Fixed(usize),
}

impl Workers {
    /// `0` means [`Workers::Auto`], `1` means [`Workers::Serial`].
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => Workers::Auto,
            1 => Workers::Serial,
            n => Workers::Fixed(n),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct McEngine {
    pub workers: Workers,
}

impl McEngine {
    pub fn new(workers: Workers) -> Self {
        Self { workers }
    }

    pub fn serial() -> Self {
        Self::new(Workers::Serial)
    }

    /// Runs `task(i, rng_i)` for `i in 0..reps` and returns the outputs in index order.
    /// The first failing index (in index order) is reported.
    pub fn replicate<T, F>(&self, reps: u64, seed: u64, task: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &mut McRng) -> Result<T> + Sync,
    {
        let run_one = |i: u64| {
            let mut rng = RngSpec::new(seed, i).rng();
            task(i, &mut rng).map_err(|e| Error::Replication {
                index: i,
                source: Box::new(e),
            })
        };
        let outcomes: Vec<Result<T>> = match self.workers {
            Workers::Serial => (0..reps).map(run_one).collect(),
            Workers::Auto => (0..reps).into_par_iter().map(run_one).collect(),
            Workers::Fixed(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
                pool.install(|| (0..reps).into_par_iter().map(run_one).collect())
            }
        };
        outcomes.into_iter().collect()
    }

    pub fn run_mc<F>(&self, reps: u64, seed: u64, task: F) -> Result<McResult>
    where
        F: Fn(u64, &mut McRng) -> Result<f64> + Sync,
    {
        if reps == 0 {
            return Err(Error::Config("Monte Carlo needs at least one replication".into()));
        }
        let values = self.replicate(reps, seed, task)?;
        McResult::from_values(&values, seed)
    }
}

/// [`McEngine::run_mc`] on the default engine.
pub fn run_mc<F>(reps: u64, seed: u64, task: F) -> Result<McResult>
where
    F: Fn(u64, &mut McRng) -> Result<f64> + Sync,
{
    McEngine::default().run_mc(reps, seed, task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn coin(_: u64, rng: &mut McRng) -> Result<f64> {
        Ok(if rng.random::<bool>() { 1.0 } else { 0.0 })
    }

    #[test]
    fn constant_task_has_zero_stderr() {
        let r = run_mc(100, 3, |_, _| Ok(2.5)).unwrap();
        assert_eq!(r.mean, 2.5);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.ci95, (2.5, 2.5));
    }

    #[test]
    fn fair_coin_within_band() {
        let r = run_mc(100_000, 0, coin).unwrap();
        assert!((r.mean - 0.5).abs() < 0.0158, "{}", r.mean);
        assert!((r.ci95.1 - r.mean - Z95 * r.stderr).abs() < 1e-15);
    }

    #[test]
    fn bit_identical_across_runs_and_workers() {
        let a = McEngine::serial().run_mc(20_000, 42, coin).unwrap();
        let b = McEngine::new(Workers::Fixed(4)).run_mc(20_000, 42, coin).unwrap();
        let c = run_mc(20_000, 42, coin).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = run_mc(20_000, 43, coin).unwrap();
        assert_ne!(a.mean, d.mean);
    }

    #[test]
    fn stderr_scales_with_root_reps() {
        let small = run_mc(50_000, 9, coin).unwrap();
        let large = run_mc(100_000, 9, coin).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn failing_replication_reports_first_index() {
        let err = McEngine::new(Workers::Fixed(3))
            .run_mc(1000, 0, |i, _| {
                if i % 400 == 399 {
                    Err(Error::Domain("boom".into()))
                } else {
                    Ok(0.0)
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::Replication { index: 399, .. }), "{err}");
        assert!(run_mc(0, 0, |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = RngSpec::new(5, 0).rng();
        let mut b = RngSpec::new(5, 1).rng();
        let xa: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
        let mut a2 = RngSpec::new(5, 0).rng();
        let xa2: Vec<u64> = (0..4).map(|_| a2.random()).collect();
        assert_eq!(xa, xa2);
    }
}
