//! Divergences between piecewise-constant functions, all evaluated exactly on
//! the merged partition of the two inputs.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gridfn::{integrate_map, sup_map, GridFunction};

/// `∫(√f − √g)²`.
pub fn hellinger_sq(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_nonnegative()?;
    g.check_nonnegative()?;
    integrate_map(&[f, g], |a| {
        if a[0] == a[1] {
            return 0.0;
        }
        // (√u − √v) written as (u − v)/(√u + √v) to avoid cancellation
        let d = (a[0] - a[1]) / (a[0].sqrt() + a[1].sqrt());
        d * d
    })
}

/// `∫(g − f)²/(f + w·g)` with `0/0 := 0`.
pub fn weighted_chi_sq(f: &GridFunction, g: &GridFunction, w: f64) -> Result<f64> {
    if !(w >= 0.0 && w.is_finite()) {
        return domain(format!("weight must be nonnegative, got {w}"));
    }
    f.check_nonnegative()?;
    g.check_nonnegative()?;
    integrate_map(&[f, g], |a| {
        let d = a[1] - a[0];
        let num = d * d;
        if num == 0.0 {
            return 0.0;
        }
        let den = a[0] + w * a[1];
        // f = 0 with w = 0 is the only way to reach here with den = 0; the
        // integrand is then infinite and integrate_map reports the cell.
        num / den
    })
}

/// `L_n(f, g) = ∫(g − f)²/(f + n^{-1/2}·g)`.
pub fn ln_loss(f: &GridFunction, g: &GridFunction, n: f64) -> Result<f64> {
    if !(n >= 1.0 && n.is_finite()) {
        return domain(format!("loss scale must be at least 1, got {n}"));
    }
    weighted_chi_sq(f, g, 1.0 / n.sqrt())
}

/// Squared Hellinger distance between Poisson process laws with intensities `g`, `h`.
pub fn hellinger_sq_poisson(g: &GridFunction, h: &GridFunction) -> Result<f64> {
    let x = hellinger_sq(g, h)?;
    Ok(-2.0 * (-0.5 * x).exp_m1())
}

pub fn l2_sq(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    integrate_map(&[f, g], |a| (a[0] - a[1]) * (a[0] - a[1]))
}

pub fn sup_dist(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    sup_map(&[f, g], |a| a[0] - a[1])
}

/// Loss used to score an estimate against the truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Ln,
    Hellinger2,
    /// `√n·H²`.
    ScaledHellinger2,
    L2,
    Sup,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Ln,
        Metric::Hellinger2,
        Metric::ScaledHellinger2,
        Metric::L2,
        Metric::Sup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ln => "ln",
            Metric::Hellinger2 => "hellinger2",
            Metric::ScaledHellinger2 => "scaled-hellinger2",
            Metric::L2 => "l2",
            Metric::Sup => "sup",
        }
    }

    pub fn evaluate(self, truth: &GridFunction, estimate: &GridFunction, n: f64) -> Result<f64> {
        match self {
            Metric::Ln => ln_loss(truth, estimate, n),
            Metric::Hellinger2 => hellinger_sq(truth, estimate),
            Metric::ScaledHellinger2 => Ok(n.sqrt() * hellinger_sq(truth, estimate)?),
            Metric::L2 => l2_sq(truth, estimate),
            Metric::Sup => sup_dist(truth, estimate),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown metric `{s}` (expected ln|hellinger2|scaled-hellinger2|l2|sup)"
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Density;
    use proptest::prelude::*;

    fn one() -> GridFunction {
        GridFunction::constant(1, 1.0).unwrap()
    }

    fn halfstep() -> GridFunction {
        GridFunction::new(vec![2.0, 0.0]).unwrap()
    }

    #[test]
    fn hellinger_examples() {
        let f = Density::from_values(vec![0.5, 1.5, 1.0, 1.0]).unwrap();
        assert_eq!(hellinger_sq(&f, &f).unwrap(), 0.0);
        let expected = 0.5 * (2f64.sqrt() - 1.0).powi(2) + 0.5;
        let got = hellinger_sq(&one(), &halfstep()).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.58579).abs() < 1e-5);
        assert_eq!(hellinger_sq(&one(), &GridFunction::zeros(4).unwrap()).unwrap(), 1.0);
        assert!(hellinger_sq(&one(), &GridFunction::new(vec![-1.0, 3.0]).unwrap()).is_err());
    }

    #[test]
    fn ln_loss_examples() {
        let h = halfstep();
        assert_eq!(ln_loss(&one(), &one(), 4.0).unwrap(), 0.0);
        let l = ln_loss(&one(), &h, 4.0).unwrap();
        assert!((l - 0.75).abs() < 1e-15);
        let h2 = hellinger_sq(&one(), &h).unwrap();
        assert!(h2 <= l && l <= 3.0 * h2);
        assert!((3.0 * h2 - 1.75736).abs() < 1e-5);
        // reversed arguments: ½·1/(2 + ½) + ½·1/(0 + ½) = 0.2 + 1
        let r = ln_loss(&h, &one(), 4.0).unwrap();
        assert!((r - 1.2).abs() < 1e-15);
        assert!(ln_loss(&one(), &h, 0.5).is_err());
        let both_zero = GridFunction::new(vec![0.0, 2.0]).unwrap();
        assert!((ln_loss(&both_zero, &both_zero, 1.0).unwrap()).abs() == 0.0);
    }

    #[test]
    fn poisson_hellinger_examples() {
        let f = Density::from_values(vec![0.25, 1.75]).unwrap();
        assert_eq!(hellinger_sq_poisson(&f, &f).unwrap(), 0.0);
        let g = f.scaled(1.0).unwrap();
        let h = f.scaled(4.0).unwrap();
        let v = hellinger_sq_poisson(&g, &h).unwrap();
        assert!((v - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((v - 0.78694).abs() < 1e-5);
    }

    #[test]
    fn l2_and_sup_examples() {
        assert_eq!(l2_sq(&one(), &one()).unwrap(), 0.0);
        assert_eq!(sup_dist(&one(), &one()).unwrap(), 0.0);
        assert_eq!(l2_sq(&one(), &halfstep()).unwrap(), 1.0);
        assert_eq!(sup_dist(&one(), &halfstep()).unwrap(), 1.0);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("kl".parse::<Metric>().is_err());
        let n = 64.0;
        let s = Metric::ScaledHellinger2.evaluate(&one(), &halfstep(), n).unwrap();
        let h = Metric::Hellinger2.evaluate(&one(), &halfstep(), n).unwrap();
        assert_eq!(s, 8.0 * h);
    }

    fn arb_density(k: usize) -> impl Strategy<Value = Density> {
        prop::collection::vec(0.0f64..3.0, k).prop_filter_map("zero mass", |v| {
            Density::from_unnormalized(GridFunction::new(v).ok()?).ok()
        })
    }

    fn arb_nonneg() -> impl Strategy<Value = GridFunction> {
        (0u32..6).prop_flat_map(|j| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..4.0], 1usize << j)
                .prop_map(|v| GridFunction::new(v).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn sandwich_holds(f in arb_density(12), g in arb_nonneg(), n in prop_oneof![Just(1.0), 1.0f64..1e6]) {
            // 12 against a power of two forces a mixed partition.
            let h2 = hellinger_sq(&f, &g).unwrap();
            let l = ln_loss(&f, &g, n).unwrap();
            let slack = 1e-10 * l.abs().max(h2).max(1e-300);
            prop_assert!(h2 <= l + slack, "{h2} > {l}");
            prop_assert!(l <= (1.0 + n.sqrt()) * h2 + slack, "{l} > (1+√n)·{h2}");
            prop_assert!(l >= 0.0);
        }

        #[test]
        fn poisson_hellinger_properties(f in arb_nonneg(), g in arb_nonneg()) {
            let x = hellinger_sq(&f, &g).unwrap();
            let p = hellinger_sq_poisson(&f, &g).unwrap();
            prop_assert!(p <= x + 1e-15);
            prop_assert!((0.0..=2.0).contains(&p));
            prop_assert_eq!(hellinger_sq(&f, &g).unwrap(), hellinger_sq(&g, &f).unwrap());
        }

        #[test]
        fn scaling_identity(f in arb_density(8), n in 1.0f64..1e4, m in prop_oneof![Just(0.0), 1e-3f64..1e3]) {
            let a = f.scaled(n).unwrap();
            let b = f.scaled(n + m).unwrap();
            let gap = m / (n.sqrt() + (n + m).sqrt());
            let want = -2.0 * (-0.5 * gap * gap).exp_m1();
            let got = hellinger_sq_poisson(&a, &b).unwrap();
            // the intensities n·f and (n+m)·f are rounded separately, so their
            // difference carries relative error ~ ε·n/m
            if m == 0.0 {
                prop_assert_eq!(got, 0.0);
                return Ok(());
            }
            let tol = 64.0 * f64::EPSILON * (1.0 + n / m);
            prop_assert!((got - want).abs() <= tol * want, "{got} vs {want}");
        }

        #[test]
        fn chi_sq_bounded_by_l2_over_floor(
            v in prop::collection::vec(0.2f64..3.0, 8),
            g in arb_nonneg(),
            n in 1.0f64..1e6,
        ) {
            let f = GridFunction::new(v).unwrap();
            let c = f.min_value();
            let l = ln_loss(&f, &g, n).unwrap();
            prop_assert!(l <= l2_sq(&f, &g).unwrap() / c * (1.0 + 1e-12));
        }

        #[test]
        fn ln_loss_zero_iff_equal(f in arb_density(4), i in 0usize..4, bump in 0.01f64..1.0) {
            prop_assert_eq!(ln_loss(&f, &f, 10.0).unwrap(), 0.0);
            let mut v = f.values().to_vec();
            v[i] += bump;
            let g = GridFunction::new(v).unwrap();
            prop_assert!(ln_loss(&f, &g, 10.0).unwrap() > 0.0);
        }
    }
}
