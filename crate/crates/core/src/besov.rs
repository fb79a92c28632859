//! Besov norms through the dyadic ladder of piecewise-constant averages, and
//! the approximation-error bounds that follow from them.
//!
//! For `f` at resolution `2^J` the ladder `f̄_(1), f̄_(2), …, f̄_(2^J) = f` is
//! finite, so the norm
//!
//! ```text
//! ‖f‖_{α,p,q} = { |∫f|^q + Σ_{i=0}^{J-1} (2^{iα} ‖f̄_(2^{i+1}) − f̄_(2^i)‖_p)^q }^{1/q}
//! ```
//!
//! is computed without truncation error.

use crate::error::{domain, Error, Result};
use crate::gridfn::{integrate_map, GridFunction};

/// Parameters `(α, p, q, M)` of the ball `B^α_{p,q}(M)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub radius: f64,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64, radius: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return domain(format!("smoothness alpha must be positive, got {alpha}"));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return domain(format!("p must be at least 1, got {p}"));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return domain(format!("q must be at least 1, got {q}"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return domain(format!("radius M must be positive, got {radius}"));
        }
        Ok(Self { alpha, p, q, radius })
    }

    /// `M₁ = M·2^α/(2^α − 1)`.
    pub fn chebyshev_radius(&self) -> f64 {
        geometric_radius(self.alpha, self.radius)
    }
}

fn geometric_radius(alpha: f64, radius: f64) -> f64 {
    let t = alpha.exp2();
    radius * t / (t - 1.0)
}

fn lp_norm_of_difference(f: &GridFunction, g: &GridFunction, p: f64) -> Result<f64> {
    let integral = if p == 1.0 {
        integrate_map(&[f, g], |a| (a[0] - a[1]).abs())?
    } else {
        integrate_map(&[f, g], |a| (a[0] - a[1]).abs().powf(p))?
    };
    Ok(if p == 1.0 { integral } else { integral.powf(1.0 / p) })
}

/// `f̄_(1), f̄_(2), …, f̄_(2^J)` for dyadic `f`.
pub fn dyadic_ladder(f: &GridFunction) -> Result<Vec<GridFunction>> {
    let levels = f.log2_resolution()?;
    let mut ladder = Vec::with_capacity(levels as usize + 1);
    ladder.push(f.clone());
    for _ in 0..levels {
        let last = ladder.last().expect("nonempty");
        let next = last.coarsen(last.resolution() / 2)?;
        ladder.push(next);
    }
    ladder.reverse();
    Ok(ladder)
}

/// Weighted ladder terms `2^{iα}·‖f̄_(2^{i+1}) − f̄_(2^i)‖_p` for `i = 0, …, J − 1`.
pub fn ladder_terms(f: &GridFunction, alpha: f64, p: f64) -> Result<Vec<f64>> {
    let ladder = dyadic_ladder(f)?;
    ladder
        .windows(2)
        .enumerate()
        .map(|(i, w)| Ok((i as f64 * alpha).exp2() * lp_norm_of_difference(&w[1], &w[0], p)?))
        .collect()
}

pub fn besov_norm(f: &GridFunction, params: &BesovParams) -> Result<f64> {
    let terms = ladder_terms(f, params.alpha, params.p)?;
    let q = params.q;
    let mean = f.integral().abs();
    if q == 1.0 {
        return Ok(mean + terms.iter().sum::<f64>());
    }
    let sum = mean.powf(q) + terms.iter().map(|t| t.powf(q)).sum::<f64>();
    Ok(sum.powf(1.0 / q))
}

pub fn in_ball(f: &GridFunction, params: &BesovParams) -> Result<bool> {
    Ok(besov_norm(f, params)? <= params.radius)
}

/// `∫|f − f̄_(k)|^p`.
pub fn approximation_lp_error(f: &GridFunction, k: usize, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("p must be at least 1, got {p}"));
    }
    let coarse = f.coarsen(k)?;
    if p == 1.0 {
        integrate_map(&[f, &coarse], |a| (a[0] - a[1]).abs())
    } else {
        integrate_map(&[f, &coarse], |a| (a[0] - a[1]).abs().powf(p))
    }
}

/// `(M·2^α/(2^α − 1))^p / k^{αp}`, the bound on [`approximation_lp_error`] for members of the ball.
pub fn approximation_bound_rhs(params: &BesovParams, k: usize, p: f64) -> Result<f64> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::NotDyadic(k));
    }
    let m1 = params.chebyshev_radius();
    Ok(m1.powf(p) / (k as f64).powf(params.alpha * p))
}

/// Lebesgue measure of `{x : |f(x) − f̄_(k)(x)| > t}`.
pub fn exceedance_measure(f: &GridFunction, k: usize, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("threshold must be positive, got {t}"));
    }
    let coarse = f.coarsen(k)?;
    integrate_map(&[f, &coarse], |a| if (a[0] - a[1]).abs() > t { 1.0 } else { 0.0 })
}

/// `1/√(ln k)`, the exceedance threshold used with [`condition15_rhs`].
pub fn exceedance_threshold(k: usize) -> Result<f64> {
    if k < 2 {
        return domain(format!("need k >= 2 so that ln k > 0, got {k}"));
    }
    Ok(1.0 / (k as f64).ln().sqrt())
}

/// `M₁^p · k^{−αp} · (ln k)^{p/2}` with `M₁ = M·2^α/(2^α − 1)` unless overridden.
pub fn condition15_rhs(params: &BesovParams, k: usize, m1_override: Option<f64>) -> Result<f64> {
    if k < 2 {
        return domain(format!("need k >= 2 so that ln k > 0, got {k}"));
    }
    let m1 = m1_override.unwrap_or_else(|| params.chebyshev_radius());
    let kf = k as f64;
    let p = params.p;
    Ok(m1.powf(p) * kf.powf(-params.alpha * p) * kf.ln().powf(p / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn halfstep(k: usize) -> GridFunction {
        GridFunction::new((0..k).map(|j| if j < k / 2 { 2.0 } else { 0.0 }).collect()).unwrap()
    }

    fn params(alpha: f64, p: f64, q: f64, m: f64) -> BesovParams {
        BesovParams::new(alpha, p, q, m).unwrap()
    }

    #[test]
    fn norm_examples() {
        let one = GridFunction::constant(64, 1.0).unwrap();
        for (a, p, q) in [(0.3, 1.0, 1.0), (2.0, 3.0, 2.0), (1.0, 1.5, 4.0)] {
            assert_eq!(besov_norm(&one, &params(a, p, q, 1.0)).unwrap(), 1.0);
        }
        for k in [2, 8, 1024] {
            for (a, p) in [(0.3, 1.0), (1.0, 2.0), (2.5, 1.7)] {
                let n1 = besov_norm(&halfstep(k), &params(a, p, 1.0, 1.0)).unwrap();
                assert!((n1 - 2.0).abs() < 1e-14, "k={k} a={a} p={p}: {n1}");
                let n2 = besov_norm(&halfstep(k), &params(a, p, 2.0, 1.0)).unwrap();
                assert!((n2 - 2f64.sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quarter_step_by_hand() {
        // f = (4, 0, 0, 0): ∫f = 1; level 0: f̄₂ = (2, 0) vs 1 → L1 = 1;
        // level 1: f vs (2,2,0,0) → L1 = (2+2)/4 = 1, weight 2^α.
        let f = GridFunction::new(vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let a = 0.7;
        let got = besov_norm(&f, &params(a, 1.0, 1.0, 1.0)).unwrap();
        assert!((got - (2.0 + a.exp2())).abs() < 1e-14);
        let terms = ladder_terms(&f, a, 1.0).unwrap();
        assert_eq!(terms.len(), 2);
    }

    #[test]
    fn ball_membership() {
        let one = GridFunction::constant(8, 1.0).unwrap();
        assert!(in_ball(&one, &params(1.0, 1.0, 1.0, 1.0)).unwrap());
        assert!(!in_ball(&halfstep(8), &params(1.0, 1.0, 1.0, 1.5)).unwrap());
        assert!(in_ball(&halfstep(8), &params(1.0, 1.0, 1.0, 2.0)).unwrap());
        let odd = GridFunction::constant(6, 1.0).unwrap();
        assert!(matches!(besov_norm(&odd, &params(1.0, 1.0, 1.0, 1.0)), Err(Error::NotDyadic(6))));
    }

    #[test]
    fn parameter_validation() {
        assert!(BesovParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(BesovParams::new(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(BesovParams::new(1.0, 1.0, 0.9, 1.0).is_err());
        assert!(BesovParams::new(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn approximation_error_examples() {
        let c = GridFunction::constant(16, 0.3).unwrap();
        assert_eq!(approximation_lp_error(&c, 4, 1.0).unwrap(), 0.0);
        assert_eq!(approximation_lp_error(&halfstep(2), 1, 1.0).unwrap(), 1.0);
        assert_eq!(approximation_lp_error(&halfstep(2), 2, 1.0).unwrap(), 0.0);
        assert!(approximation_lp_error(&halfstep(8), 3, 1.0).is_err());
    }

    #[test]
    fn bound_rhs_examples() {
        let p1 = params(1.0, 1.0, 1.0, 1.0);
        assert_eq!(approximation_bound_rhs(&p1, 2, 1.0).unwrap(), 1.0);
        assert_eq!(approximation_bound_rhs(&p1, 4, 1.0).unwrap(), 0.5);
        let p2 = params(0.4, 2.0, 1.0, 3.0);
        let m1 = 3.0 * 0.4f64.exp2() / (0.4f64.exp2() - 1.0);
        assert!((approximation_bound_rhs(&p2, 1, 2.0).unwrap() - m1 * m1).abs() < 1e-12);
        assert!(approximation_bound_rhs(&p1, 3, 1.0).is_err());
    }

    #[test]
    fn exceedance_examples() {
        let c = GridFunction::constant(8, 5.0).unwrap();
        assert_eq!(exceedance_measure(&c, 2, 1e-9).unwrap(), 0.0);
        assert_eq!(exceedance_measure(&halfstep(2), 1, 0.5).unwrap(), 1.0);
        assert_eq!(exceedance_measure(&halfstep(2), 1, 1.5).unwrap(), 0.0);
        // strict inequality at the threshold itself
        assert_eq!(exceedance_measure(&halfstep(2), 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn condition15_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0);
        let v = condition15_rhs(&p, 8, None).unwrap();
        assert!((v - 2.0 / 8.0 * 8f64.ln().sqrt()).abs() < 1e-15);
        assert!((v - 0.3605).abs() < 1e-4);
        let p2 = params(1.0, 2.0, 1.0, 1.0);
        let v2 = condition15_rhs(&p2, 8, None).unwrap();
        assert!((v2 - 4.0 * 8f64.powi(-2) * 8f64.ln()).abs() < 1e-15);
        assert!((v2 - v * v).abs() < 1e-15);
        assert!(condition15_rhs(&p, 1, None).is_err());
        let overridden = condition15_rhs(&p, 8, Some(1.0)).unwrap();
        assert!((overridden - v / 2.0).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for j in 1..40 {
            let r = condition15_rhs(&p, 1usize << j, None).unwrap();
            assert!(r < last, "not decreasing at 2^{j}");
            last = r;
        }
        assert!(last < 1e-10);
    }

    fn arb_dyadic() -> impl Strategy<Value = GridFunction> {
        (0u32..=7).prop_flat_map(|j| {
            prop::collection::vec(-10.0f64..10.0, 1usize << j)
                .prop_map(|v| GridFunction::new(v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn homogeneity(f in arb_dyadic(), c in -5.0f64..5.0, a in 0.1f64..2.0, p in 1.0f64..3.0, q in 1.0f64..3.0) {
            let prm = params(a, p, q, 1.0);
            let lhs = besov_norm(&f.scaled(c).unwrap(), &prm).unwrap();
            let rhs = c.abs() * besov_norm(&f, &prm).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300) + 1e-300);
        }

        #[test]
        fn monotone_in_alpha(f in arb_dyadic(), a in 0.1f64..2.0, da in 0.0f64..1.0, p in 1.0f64..3.0, q in 1.0f64..3.0) {
            let lo = besov_norm(&f, &params(a, p, q, 1.0)).unwrap();
            let hi = besov_norm(&f, &params(a + da, p, q, 1.0)).unwrap();
            prop_assert!(hi >= lo * (1.0 - 1e-12));
        }

        #[test]
        fn refinement_does_not_change_norm(f in arb_dyadic(), extra in 1u32..4, a in 0.1f64..2.0) {
            // appending ladder levels beyond J contributes zero terms
            let prm = params(a, 1.0, 1.0, 1.0);
            let fine = f.refine(f.resolution() << extra).unwrap();
            let lhs = besov_norm(&fine, &prm).unwrap();
            let rhs = besov_norm(&f, &prm).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn approximation_and_chebyshev_chain(f in arb_dyadic(), a in 0.1f64..1.5, p in 1.0f64..3.0, t in 0.01f64..5.0) {
            let j = f.log2_resolution().unwrap();
            let m_f = besov_norm(&f, &params(a, p, 1.0, 1.0)).unwrap();
            let prm = params(a, p, 1.0, m_f.max(1e-300));
            for i in 0..=j {
                let k = 1usize << i;
                let err = approximation_lp_error(&f, k, p).unwrap();
                let kf = (k as f64).powf(a * p);
                let bound = (prm.chebyshev_radius()).powf(p);
                prop_assert!(kf * err <= bound * (1.0 + 1e-10) + 1e-12);
                let ex = exceedance_measure(&f, k, t).unwrap();
                prop_assert!(ex <= err / t.powf(p) * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}
