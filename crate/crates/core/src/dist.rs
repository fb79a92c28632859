//! Poisson, binomial and normal distribution functions.
//!
//! Point probabilities use Loader's saddle-point form so that they stay
//! accurate to near machine precision for means in the millions; tails are
//! summed from the point of evaluation outward with the pmf recursion and a
//! ratio-test stopping rule.

use rand::Rng;
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Relative size of the neglected remainder at which tail sums stop.
const TAIL_REL_EPS: f64 = 1e-17;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln n! − [(n + ½) ln n − n + ½ ln 2π]`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let lf = if n.fract() == 0.0 {
            ln_factorial(n as u64)
        } else {
            ln_gamma(n + 1.0)
        };
        return lf - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x/np) + np − x`, computed without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1;
        loop {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1;
            if j > 1000 {
                return s;
            }
        }
    }
    x * (x / np).ln() + np - x
}

/// `P(N = k)` for `N ~ Poisson(lambda)`.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return (-lambda).exp();
    }
    let x = k as f64;
    (-stirlerr(x) - bd0(x, lambda)).exp() / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Sum of `start` and its successors under the ratio `next = term·ratio(k)`,
/// where the ratio is decreasing along the walk; stops once the geometric
/// bound on the remainder falls below `TAIL_REL_EPS` of the running sum.
fn walk_sum(start: f64, mut k: u64, step: impl Fn(u64) -> Option<(u64, f64)>) -> f64 {
    let mut term = start;
    let mut sum = start;
    while let Some((next, ratio)) = step(k) {
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < TAIL_REL_EPS * sum {
            break;
        }
        term *= ratio;
        if term == 0.0 {
            break;
        }
        sum += term;
        k = next;
    }
    sum
}

fn poisson_lower_sum(lambda: f64, j: u64) -> f64 {
    walk_sum(poisson_pmf(lambda, j), j, |k| {
        (k > 0).then(|| (k - 1, k as f64 / lambda))
    })
}

fn poisson_upper_sum(lambda: f64, j: u64) -> f64 {
    walk_sum(poisson_pmf(lambda, j), j, |k| Some((k + 1, lambda / (k + 1) as f64)))
}

/// `P(N ≤ j)` for `N ~ Poisson(lambda)`.
pub fn poisson_cdf(lambda: f64, j: u64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mode = lambda.floor() as u64;
    if j <= mode {
        poisson_lower_sum(lambda, j).min(1.0)
    } else {
        (1.0 - poisson_upper_sum(lambda, j + 1)).clamp(0.0, 1.0)
    }
}

/// `P(N ≥ j)` for `N ~ Poisson(lambda)`.
pub fn poisson_sf(lambda: f64, j: u64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let mode = lambda.floor() as u64;
    if j > mode {
        poisson_upper_sum(lambda, j).min(1.0)
    } else {
        (1.0 - poisson_lower_sum(lambda, j - 1)).clamp(0.0, 1.0)
    }
}

/// `P(X = k)` for `X ~ Binomial(n, p)`.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q <= 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        return (nf * q.ln()).exp();
    }
    if k == n {
        return (nf * p.ln()).exp();
    }
    let x = k as f64;
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(nf - x) - bd0(x, nf * p) - bd0(nf - x, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + x.ln() + (-x / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `P(X ≤ j)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(n: u64, p: f64, j: u64) -> f64 {
    if j >= n {
        return 1.0;
    }
    let q = 1.0 - p;
    if p <= 0.0 {
        return 1.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    let mode = ((n + 1) as f64 * p).floor() as u64;
    if j <= mode {
        walk_sum(binomial_pmf(n, p, j), j, |k| {
            (k > 0).then(|| (k - 1, k as f64 * q / ((n - k + 1) as f64 * p)))
        })
        .min(1.0)
    } else {
        let start = j + 1;
        let upper = walk_sum(binomial_pmf(n, p, start), start, |k| {
            (k < n).then(|| (k + 1, (n - k) as f64 * p / ((k + 1) as f64 * q)))
        });
        (1.0 - upper).clamp(0.0, 1.0)
    }
}

/// Poisson variate: sequential inversion for small means, Hörmann's
/// transformed rejection (PTRS) above.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean <= 30.0 {
        let u: f64 = rng.random();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            if p == 0.0 {
                break;
            }
            cdf += p;
        }
        return k;
    }
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
