//! Piecewise-constant functions on equal partitions of `[0, 1)`.
//!
//! A [`GridFunction`] with resolution `k` takes the constant value
//! `values[j]` on `[j/k, (j+1)/k)`. All integrals in the crate are computed
//! exactly (up to floating rounding) as finite sums over a common partition;
//! there is no quadrature error anywhere.
//!
//! Dyadic resolutions (powers of two) are what the Besov machinery needs, but
//! histogram estimators naturally live on `k_n` cells for arbitrary `k_n`, so
//! the type itself accepts any positive resolution and the dyadic-only
//! operations check for it.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Absolute tolerance on `∫f = 1` that a [`Density`] is held to.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// Largest normalization drift a [`Density`] constructor will silently absorb.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("a grid function needs at least one cell".into()));
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { cell, value });
        }
        Ok(Self { values })
    }

    /// Like [`GridFunction::new`] but additionally requires a power-of-two resolution.
    pub fn dyadic(values: Vec<f64>) -> Result<Self> {
        let f = Self::new(values)?;
        f.log2_resolution()?;
        Ok(f)
    }

    pub fn constant(resolution: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; resolution])
    }

    pub fn zeros(resolution: usize) -> Result<Self> {
        Self::constant(resolution, 0.0)
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_dyadic(&self) -> bool {
        self.resolution().is_power_of_two()
    }

    /// `J` such that the resolution is `2^J`.
    pub fn log2_resolution(&self) -> Result<u32> {
        let k = self.resolution();
        if k.is_power_of_two() {
            Ok(k.trailing_zeros())
        } else {
            Err(Error::NotDyadic(k))
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub(crate) fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().enumerate().find(|(_, &v)| v < 0.0) {
            Some((cell, &value)) => Err(Error::Negative { cell, value }),
            None => Ok(()),
        }
    }

    /// `∫₀¹ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.resolution() as f64
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cellwise `φ(f)`, keeping the resolution.
    pub fn map(&self, phi: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| phi(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Cellwise `φ(f, g)` on the finer of the two grids; one resolution must divide the other.
    pub fn zip_with(&self, other: &GridFunction, phi: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let k = self.resolution().max(other.resolution());
        let a = self.refine(k)?;
        let b = other.refine(k)?;
        Self::new(a.values.iter().zip(&b.values).map(|(&u, &v)| phi(u, v)).collect())
    }

    /// `J_{j,k'}(f) = k'·∫ f` over the `j`-th (1-based) of `k'` equal cells.
    pub fn average_operator(&self, j: usize, kprime: usize) -> Result<f64> {
        let block = self.block_len(kprime)?;
        if j == 0 || j > kprime {
            return Err(Error::IndexOutOfRange { index: j, len: kprime });
        }
        let cells = &self.values[(j - 1) * block..j * block];
        Ok(cells.iter().sum::<f64>() / block as f64)
    }

    /// The piecewise-constant approximation `f̄_(k')`.
    pub fn coarsen(&self, kprime: usize) -> Result<Self> {
        let block = self.block_len(kprime)?;
        let values = self
            .values
            .chunks_exact(block)
            .map(|c| c.iter().sum::<f64>() / block as f64)
            .collect();
        Ok(Self { values })
    }

    /// Value-replicating embedding into a finer grid.
    pub fn refine(&self, kfine: usize) -> Result<Self> {
        let k = self.resolution();
        if kfine == 0 || !kfine.is_multiple_of(k) {
            return Err(Error::ResolutionMismatch { from: k, to: kfine });
        }
        let rep = kfine / k;
        if rep == 1 {
            return Ok(self.clone());
        }
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, rep))
            .collect();
        Ok(Self { values })
    }

    fn block_len(&self, kprime: usize) -> Result<usize> {
        let k = self.resolution();
        if kprime == 0 || !k.is_multiple_of(kprime) {
            return Err(Error::ResolutionMismatch { from: k, to: kprime });
        }
        Ok(k / kprime)
    }
}

/// `∫₀¹ φ(f₁(x), …, f_r(x)) dx` on the merged breakpoint set of all inputs.
///
/// Breakpoints are located on the integer lattice `{0, …, L}` with
/// `L = lcm(resolutions)`, so cell lengths are exact integer ratios. When all
/// inputs share one resolution `K` this reduces to `(1/K)·Σ φ`.
pub fn integrate_map<F>(fs: &[&GridFunction], phi: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut total = 0.0;
    let lattice = for_each_common_cell(fs, |cell, weight, args| {
        let y = phi(args);
        if !y.is_finite() {
            return Err(Error::Evaluation { cell, value: y });
        }
        total += weight as f64 * y;
        Ok(())
    })?;
    Ok(total / lattice as f64)
}

/// Largest `|φ(f₁, …, f_r)|` over the cells of the merged partition.
pub fn sup_map<F>(fs: &[&GridFunction], phi: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut sup = 0.0f64;
    for_each_common_cell(fs, |cell, _, args| {
        let y = phi(args);
        if !y.is_finite() {
            return Err(Error::Evaluation { cell, value: y });
        }
        sup = sup.max(y.abs());
        Ok(())
    })?;
    Ok(sup)
}

/// Visits each cell of the merged partition with its lattice width and the
/// input values on it. Returns the lattice size `L`.
pub(crate) fn for_each_common_cell<V>(fs: &[&GridFunction], mut visit: V) -> Result<u64>
where
    V: FnMut(usize, u64, &[f64]) -> Result<()>,
{
    if fs.is_empty() {
        return Err(Error::Domain("integrate_map needs at least one function".into()));
    }
    let mut lattice: u64 = 1;
    for f in fs {
        let k = f.resolution() as u64;
        lattice = lcm(lattice, k).ok_or_else(|| {
            Error::Domain(format!("common refinement of resolutions overflows (at {k})"))
        })?;
    }
    let steps: Vec<u64> = fs.iter().map(|f| lattice / f.resolution() as u64).collect();

    // Fast path: a single common resolution.
    if steps.iter().all(|&s| s == 1) {
        let mut args = vec![0.0; fs.len()];
        for cell in 0..lattice as usize {
            for (a, f) in args.iter_mut().zip(fs) {
                *a = f.values[cell];
            }
            visit(cell, 1, &args)?;
        }
        return Ok(lattice);
    }

    let mut idx = vec![0usize; fs.len()];
    let mut args: Vec<f64> = fs.iter().map(|f| f.values[0]).collect();
    let mut pos = 0u64;
    let mut cell = 0usize;
    while pos < lattice {
        let next = idx
            .iter()
            .zip(&steps)
            .map(|(&i, &s)| (i as u64 + 1) * s)
            .min()
            .expect("nonempty");
        visit(cell, next - pos, &args)?;
        cell += 1;
        pos = next;
        if pos == lattice {
            break;
        }
        for (i, f) in fs.iter().enumerate() {
            if (idx[i] as u64 + 1) * steps[i] == pos {
                idx[i] += 1;
                args[i] = f.values[idx[i]];
            }
        }
    }
    Ok(lattice)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

impl fmt::Display for GridFunction {
    /// `resolution=<k>` followed by one line of whitespace-separated values.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "resolution={}", self.resolution())?;
        let mut first = true;
        for v in &self.values {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        writeln!(f)
    }
}

impl FromStr for GridFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid function file".into()))?;
        let k: usize = header
            .trim()
            .strip_prefix("resolution=")
            .ok_or_else(|| Error::Parse(format!("expected `resolution=<k>`, found `{header}`")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad resolution: {e}")))?;
        let values = lines
            .flat_map(str::split_whitespace)
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != k {
            return Err(Error::Parse(format!(
                "header declares {k} values but {} were given",
                values.len()
            )));
        }
        Self::new(values)
    }
}

/// A nonnegative grid function with unit integral.
#[derive(Clone, Debug, PartialEq)]
pub struct Density(GridFunction);

impl Density {
    /// Accepts `f` if it is nonnegative and `|∫f − 1| ≤ 1e-6`, renormalizing the drift away.
    pub fn new(f: GridFunction) -> Result<Self> {
        f.check_nonnegative()?;
        let total = f.integral();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::NotNormalized { total });
        }
        if (total - 1.0).abs() <= DENSITY_TOLERANCE {
            return Ok(Self(f));
        }
        Ok(Self(f.scaled(1.0 / total)?))
    }

    /// Normalizes an arbitrary nonnegative function with positive mass.
    pub fn from_unnormalized(f: GridFunction) -> Result<Self> {
        f.check_nonnegative()?;
        let total = f.integral();
        if total <= 0.0 {
            return Err(Error::NotNormalized { total });
        }
        Self::new(f.scaled(1.0 / total)?)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(GridFunction::new(values)?)
    }

    pub fn uniform(resolution: usize) -> Result<Self> {
        Self::new(GridFunction::constant(resolution, 1.0)?)
    }

    pub fn as_grid(&self) -> &GridFunction {
        &self.0
    }

    pub fn into_grid(self) -> GridFunction {
        self.0
    }

    /// Cell probabilities `values[j]/k`.
    pub fn cell_masses(&self) -> Vec<f64> {
        let k = self.resolution() as f64;
        self.values().iter().map(|v| v / k).collect()
    }
}

impl Deref for Density {
    type Target = GridFunction;

    fn deref(&self) -> &GridFunction {
        &self.0
    }
}

impl AsRef<GridFunction> for Density {
    fn as_ref(&self) -> &GridFunction {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn halfstep(k: usize) -> GridFunction {
        GridFunction::new((0..k).map(|j| if j < k / 2 { 2.0 } else { 0.0 }).collect()).unwrap()
    }

    #[test]
    fn averaging_constant_and_halfstep() {
        let c = GridFunction::constant(8, 3.25).unwrap();
        for kp in [1, 2, 4, 8] {
            for j in 1..=kp {
                assert_eq!(c.average_operator(j, kp).unwrap(), 3.25);
            }
        }
        assert_eq!(halfstep(2).average_operator(1, 2).unwrap(), 2.0);
        let d = Density::from_values(vec![0.5, 1.5, 1.0, 1.0]).unwrap();
        assert_eq!(d.average_operator(1, 1).unwrap(), 1.0);
    }

    #[test]
    fn averaging_errors() {
        let f = halfstep(8);
        assert!(matches!(
            f.average_operator(1, 3),
            Err(Error::ResolutionMismatch { .. })
        ));
        assert!(matches!(
            f.average_operator(0, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            f.average_operator(5, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(f.coarsen(3).is_err());
        assert!(f.refine(12).is_err());
    }

    #[test]
    fn coarsen_examples() {
        let f = halfstep(4);
        assert_eq!(f.coarsen(4).unwrap(), f);
        assert_eq!(f.coarsen(1).unwrap().values(), &[1.0]);
        let g = GridFunction::new((0..8).map(|j| (j * j) as f64 / 8.0).collect()).unwrap();
        assert_eq!(g.coarsen(4).unwrap().coarsen(2).unwrap(), g.coarsen(2).unwrap());
    }

    #[test]
    fn refine_examples() {
        let c = GridFunction::constant(2, 0.7).unwrap();
        assert_eq!(c.refine(16).unwrap(), GridFunction::constant(16, 0.7).unwrap());
        let f = GridFunction::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(f.refine(4).unwrap().values(), &[1.0, 1.0, 3.0, 3.0]);
        assert_eq!(f.refine(8).unwrap().coarsen(2).unwrap(), f);
    }

    #[test]
    fn integrate_map_examples() {
        let d = Density::from_values(vec![0.25, 1.75, 1.0, 1.0]).unwrap();
        assert_eq!(integrate_map(&[&d], |a| a[0]).unwrap(), 1.0);
        let one = GridFunction::constant(1, 1.0).unwrap();
        let g = halfstep(2);
        let v = integrate_map(&[&one, &g], |a| (a[0] - a[1]).powi(2)).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(integrate_map(&[&g], |a| a[0] * a[0]).unwrap(), 2.0);
    }

    #[test]
    fn integrate_map_names_failing_cell() {
        let f = GridFunction::new(vec![1.0, 0.0, 2.0, 1.0]).unwrap();
        match integrate_map(&[&f], |a| 1.0 / a[0]) {
            Err(Error::Evaluation { cell, .. }) => assert_eq!(cell, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_partition_integral_is_exact() {
        // 1/3-grid against 1/2-grid: breakpoints 0, 1/3, 1/2, 2/3, 1.
        let a = GridFunction::new(vec![3.0, 6.0, 9.0]).unwrap();
        let b = GridFunction::new(vec![1.0, 2.0]).unwrap();
        // ∫ab = 3·1·(1/3) + 6·1·(1/6) + 6·2·(1/6) + 9·2·(1/3)
        let expected = 1.0 + 1.0 + 2.0 + 6.0;
        let got = integrate_map(&[&a, &b], |v| v[0] * v[1]).unwrap();
        assert!((got - expected).abs() < 1e-14);
        let mut cells = 0;
        for_each_common_cell(&[&a, &b], |_, _, _| {
            cells += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(cells, 4);
    }

    #[test]
    fn text_format_round_trip() {
        let f = GridFunction::new(vec![0.1, 2.5, -3.0, 1e-300]).unwrap();
        let text = f.to_string();
        assert!(text.starts_with("resolution=4\n"));
        assert_eq!(text.parse::<GridFunction>().unwrap(), f);
        let multi = "resolution=4\n1 2\n  3\n4\n";
        assert_eq!(multi.parse::<GridFunction>().unwrap().values(), &[1.0, 2.0, 3.0, 4.0]);
        assert!("resolution=3\n1 2".parse::<GridFunction>().is_err());
        assert!("res=2\n1 2".parse::<GridFunction>().is_err());
        assert!("resolution=2\n1 nan".parse::<GridFunction>().is_err());
    }

    #[test]
    fn density_normalization_rules() {
        assert!(Density::from_values(vec![1.0, 1.0 + 1e-7]).is_ok());
        let d = Density::from_values(vec![1.0, 1.0 + 1e-7]).unwrap();
        assert!((d.integral() - 1.0).abs() <= DENSITY_TOLERANCE);
        assert!(matches!(
            Density::from_values(vec![1.0, 1.1]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            Density::from_values(vec![-0.5, 2.5]),
            Err(Error::Negative { cell: 0, .. })
        ));
        assert!(GridFunction::new(vec![f64::INFINITY]).is_err());
        assert!(GridFunction::new(vec![]).is_err());
        assert!(GridFunction::dyadic(vec![1.0; 6]).is_err());
    }

    fn arb_grid(max_log: u32) -> impl Strategy<Value = GridFunction> {
        (0..=max_log).prop_flat_map(|j| {
            prop::collection::vec(-64i32..64, 1usize << j).prop_map(|v| {
                GridFunction::new(v.into_iter().map(|x| x as f64 / 8.0).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn coarsening_preserves_integral(f in arb_grid(8), s in 0u32..9) {
            let k = f.resolution();
            let kp = k >> s.min(k.trailing_zeros());
            let g = f.coarsen(kp).unwrap();
            // dyadic-rational values: exact
            prop_assert_eq!(
                integrate_map(&[&g], |a| a[0]).unwrap(),
                integrate_map(&[&f], |a| a[0]).unwrap()
            );
        }

        #[test]
        fn tower_and_refine_identities(f in arb_grid(8), a in 0u32..9, b in 0u32..9) {
            let j = f.log2_resolution().unwrap();
            let (hi, lo) = (a.min(j).max(b.min(j)), a.min(j).min(b.min(j)));
            let mid = f.coarsen(1 << hi).unwrap();
            prop_assert_eq!(mid.coarsen(1 << lo).unwrap(), f.coarsen(1 << lo).unwrap());
            let coarse = f.coarsen(1 << lo).unwrap();
            prop_assert_eq!(coarse.refine(1 << j).unwrap().coarsen(1 << lo).unwrap(), coarse);
        }

        #[test]
        fn integral_is_refinement_invariant(f in arb_grid(6), r in 0u32..5) {
            let fine = f.refine(f.resolution() << r).unwrap();
            let phi = |a: &[f64]| a[0] * a[0] - 3.0 * a[0];
            prop_assert_eq!(integrate_map(&[&fine], phi).unwrap(), integrate_map(&[&f], phi).unwrap());
        }
    }
}
