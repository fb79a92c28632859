use std::time::Instant;

use super::output::{cell, num, opt_num, write_report, RunManifest, Table};
use super::{
    BesovArgs, BoundCheck, BoundsArgs, Command, CounterexampleArgs, EstimatorRiskArgs,
    TailArgs,
};
use crate::besov::{
    approximation_bound_rhs, approximation_lp_error, besov_norm, condition15_rhs, exceedance_measure,
    exceedance_threshold, BesovParams,
};
use crate::bounds::{
    lecam_additional_obs_bound, lemma2_tail_check, lemma3_neighborhood_bound, poisson_pair_bound,
    poisson_tail_check, superposition_check, superposition_secondary_rhs, BoundReport, DEFICIENCY_MAX,
};
use crate::counterexample::{evaluate, model_limit, CounterexampleConfig};
use crate::densities::{load_density, load_function, random_density};
use crate::error::{Error, Result};
use crate::estimators::{estimator_risk, EstimatorConfig};
use crate::gridfn::Density;
use crate::mc::RngSpec;

/// Runs one command and returns the number of violated checks.
pub(super) fn run(command: &Command) -> Result<usize> {
    match command {
        Command::Counterexample(a) => counterexample(a),
        Command::EstimatorRisk(a) => estimator_risk_cmd(a),
        Command::Besov(a) => besov(a),
        Command::Bounds(a) => bounds(a),
        Command::Tail(a) => tail(a),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn counterexample(a: &CounterexampleArgs) -> Result<usize> {
    let start = Instant::now();
    if !(a.beta > 0.5 && a.beta < 1.0) {
        return Err(usage(format!("--beta must lie in (0.5, 1), got {}", a.beta)));
    }
    if let Some(&n) = a.n.iter().find(|&&n| n < 100) {
        return Err(usage(format!("--n values must be at least 100, got {n}")));
    }
    let engine = a.common.engine();
    let mut table = Table::new(&[
        "n",
        "model",
        "z",
        "m",
        "P_K_lt_m",
        "P_K_lt_m_kind",
        "bayes_risk",
        "bayes_stderr",
        "limit",
        "gap_lemma1",
    ]);
    for &n in &a.n {
        for &model in &a.model {
            let exact_only = CounterexampleConfig::new(n, a.beta, 0, a.common.seed)?;
            let exact = evaluate(model, &exact_only, &engine).ok();
            let report = match exact {
                Some(r) if !a.mc_check => r,
                _ => {
                    if a.reps == 0 {
                        return Err(usage(format!("n = {n} ({model}) needs --reps > 0")));
                    }
                    let cfg = CounterexampleConfig { reps: a.reps, ..exact_only };
                    evaluate(model, &cfg, &engine)?
                }
            };
            // with --mc-check the Monte Carlo figures are reported even where exact ones exist
            let use_mc = report.shortfall.reps > 0;
            let (kind, bayes_se) = if use_mc { ("mc", report.bayes.stderr) } else { ("exact", 0.0) };
            let pick = |r: &crate::counterexample::RiskEstimate| if use_mc { r.mean } else { r.value() };
            table.push(vec![
                cell(n),
                cell(model),
                cell(exact_only.z),
                cell(exact_only.m),
                num(pick(&report.shortfall)),
                cell(kind),
                num(pick(&report.bayes)),
                num(bayes_se),
                num(model_limit(model)),
                num(pick(&report.gap)),
            ]);
        }
    }
    let manifest = RunManifest { command: "counterexample", params: a, seed: a.common.seed };
    write_report(&a.common.out, &manifest, &table, start.elapsed())?;
    Ok(0)
}

fn estimator_risk_cmd(a: &EstimatorRiskArgs) -> Result<usize> {
    let start = Instant::now();
    if a.reps == 0 {
        return Err(usage("--reps must be positive"));
    }
    if let Some(&n) = a.n.iter().find(|&&n| n < 8) {
        return Err(usage(format!("--n values must be at least 8, got {n}")));
    }
    let engine = a.common.engine();
    let mut table = Table::new(&["density", "model", "n", "k_n", "c_n", "metric", "risk", "stderr", "reps"]);
    for spec in &a.density {
        let truth = load_density(spec, a.resolution)?;
        for &n in &a.n {
            let cfg = EstimatorConfig::for_sample_size(n)?;
            let (k_n, c_n) = (cfg.k_n, cfg.c_n);
            let r = estimator_risk(&truth, n, a.model, a.metric, a.estimator, a.reps, a.common.seed, &engine)?;
            table.push(vec![
                cell(spec),
                cell(a.model),
                cell(n),
                cell(k_n),
                num(c_n),
                cell(a.metric),
                num(r.mean),
                num(r.stderr),
                cell(r.reps),
            ]);
        }
    }
    let manifest = RunManifest { command: "estimator-risk", params: a, seed: a.common.seed };
    write_report(&a.common.out, &manifest, &table, start.elapsed())?;
    Ok(0)
}

fn besov(a: &BesovArgs) -> Result<usize> {
    let start = Instant::now();
    let f = load_function(&a.function, a.resolution)?;
    let levels = f.log2_resolution()?;
    let provisional = BesovParams::new(a.alpha, a.p, a.q, 1.0)?;
    let norm = besov_norm(&f, &provisional)?;
    let radius = a.m_ball.unwrap_or(norm);
    let ball = BesovParams::new(a.alpha, a.p, a.q, radius)?;
    // the approximation bounds are stated with M equal to the norm itself
    let at_norm = BesovParams::new(a.alpha, a.p, a.q, norm.max(f64::MIN_POSITIVE))?;
    let ks: Vec<usize> = if a.k.is_empty() {
        (1..=levels).map(|j| 1usize << j).collect()
    } else {
        a.k.clone()
    };
    for &k in &ks {
        if k < 2 || !k.is_power_of_two() || k > f.resolution() {
            return Err(usage(format!(
                "--k values must be powers of two in 2..={}, got {k}",
                f.resolution()
            )));
        }
    }
    let mut table = Table::new(&[
        "function",
        "resolution",
        "alpha",
        "p",
        "q",
        "besov_norm",
        "m_ball",
        "in_ball",
        "k",
        "lp_error",
        "bound_rhs",
        "lp_holds",
        "threshold",
        "exceedance",
        "condition15_rhs",
        "exceedance_holds",
    ]);
    let head = |table: &mut Table, rest: Vec<String>| {
        let mut row = vec![
            cell(&a.function),
            cell(f.resolution()),
            num(a.alpha),
            num(a.p),
            num(a.q),
            num(norm),
            num(radius),
            cell(norm <= ball.radius),
        ];
        row.extend(rest);
        table.push(row);
    };
    let mut violations = 0;
    if ks.is_empty() {
        head(&mut table, vec![String::new(); 8]);
    }
    for &k in &ks {
        let err = approximation_lp_error(&f, k, a.p)?;
        let bound = approximation_bound_rhs(&at_norm, k, a.p)?;
        let lp = BoundReport::new(err, bound, f64::INFINITY);
        let t = exceedance_threshold(k)?;
        let ex = exceedance_measure(&f, k, t)?;
        let c15 = condition15_rhs(&at_norm, k, None)?;
        let exr = BoundReport::new(ex, c15, 1.0);
        violations += usize::from(!lp.holds) + usize::from(!exr.holds);
        head(
            &mut table,
            vec![
                cell(k),
                num(err),
                num(bound),
                cell(lp.holds),
                num(t),
                num(ex),
                num(c15),
                cell(exr.holds),
            ],
        );
    }
    let manifest = RunManifest { command: "besov", params: a, seed: a.common.seed };
    write_report(&a.common.out, &manifest, &table, start.elapsed())?;
    Ok(violations)
}

struct BoundRows {
    table: Table,
    violations: usize,
}

impl BoundRows {
    fn push(&mut self, check: &str, params: String, lhs: Option<f64>, report: BoundReport) {
        self.violations += usize::from(!report.holds);
        self.table.push(vec![
            cell(check),
            params,
            opt_num(lhs),
            num(report.rhs),
            cell(report.holds),
            cell(report.vacuous),
            opt_num(lhs.map(|_| report.margin)),
        ]);
    }

    /// A closed-form bound with nothing computed to compare it against.
    fn push_calculator(&mut self, check: &str, params: String, rhs: f64) {
        self.push(check, params, None, BoundReport::new(f64::NEG_INFINITY, rhs, DEFICIENCY_MAX));
    }
}

fn bounds(a: &BoundsArgs) -> Result<usize> {
    let start = Instant::now();
    let checks: Vec<BoundCheck> = if a.checks.is_empty() {
        vec![
            BoundCheck::Eq1,
            BoundCheck::Pair,
            BoundCheck::Superposition,
            BoundCheck::Lemma3,
            BoundCheck::Lemma2,
        ]
    } else {
        a.checks.clone()
    };
    let d_or = |default: &[f64]| a.d.clone().unwrap_or_else(|| default.to_vec());
    let mut rows = BoundRows {
        table: Table::new(&["check", "params", "lhs", "rhs", "holds", "vacuous", "margin"]),
        violations: 0,
    };
    for check in checks {
        match check {
            BoundCheck::Eq1 => {
                for &r in &a.r {
                    for &b in &a.beta_n {
                        let rhs = lecam_additional_obs_bound(r, b)?;
                        rows.push_calculator("eq1", format!("r={r};beta_n={b}"), rhs);
                    }
                }
            }
            BoundCheck::Pair => {
                for &n in &a.n {
                    for &m in &a.m {
                        let rhs = poisson_pair_bound(n, m)?;
                        rows.push_calculator("pair", format!("n={n};m={m}"), rhs);
                    }
                }
            }
            BoundCheck::Lemma3 => {
                for &d in &d_or(&[2.0]) {
                    for &c in &a.c_n {
                        let rhs = lemma3_neighborhood_bound(d, c)?;
                        rows.push_calculator("lemma3", format!("D={d};c_n={c}"), rhs);
                    }
                }
            }
            BoundCheck::Lemma2 => {
                for &n in &a.n {
                    if n.fract() != 0.0 || n < 1.0 {
                        return Err(usage(format!("lemma2 needs integer n >= 1, got {n}")));
                    }
                    for &d in &d_or(&[1.0, 2.0, 5.0, 10.0]) {
                        let rep = lemma2_tail_check(n as u64, d)?;
                        rows.push("lemma2", format!("n={n};D={d}"), Some(rep.lhs), rep);
                    }
                }
            }
            BoundCheck::Superposition => {
                let mut pairs: Vec<(String, Density, Density)> = vec![(
                    format!("{}/{}", a.density, a.density0),
                    load_density(&a.density, a.resolution)?,
                    load_density(&a.density0, a.resolution)?,
                )];
                for i in 0..a.random_pairs {
                    let mut rng = RngSpec::new(a.common.seed, i as u64).rng();
                    let f = random_density(a.resolution, 0.1, &mut rng)?;
                    let f0 = random_density(a.resolution, 0.1, &mut rng)?;
                    pairs.push((format!("random{i}"), f, f0));
                }
                for (name, f, f0) in &pairs {
                    for &n in &a.n {
                        for &d in &d_or(&[1.0, 3.0]) {
                            let m = (d * n.sqrt()).ceil();
                            let rep = superposition_check(f, f0, n, m)?;
                            let params = format!("pair={name};n={n};D={d};m={m}");
                            rows.push("superposition", params.clone(), Some(rep.lhs), rep);
                            if d > 1.0 {
                                let rhs2 = superposition_secondary_rhs(f, f0, n, d)?;
                                let sec = BoundReport::new(rep.rhs, rhs2, f64::INFINITY);
                                rows.push("superposition-secondary", params, Some(rep.rhs), sec);
                            }
                        }
                    }
                }
            }
        }
    }
    let manifest = RunManifest { command: "bounds", params: a, seed: a.common.seed };
    write_report(&a.common.out, &manifest, &rows.table, start.elapsed())?;
    Ok(rows.violations)
}

fn tail(a: &TailArgs) -> Result<usize> {
    let start = Instant::now();
    let mut table = Table::new(&["lambda", "m0", "side", "lhs", "rhs", "holds", "vacuous", "margin"]);
    if let Some(&bad) = a.lambda.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(usage(format!("--lambda values must be positive, got {bad}")));
    }
    let mut violations = 0;
    for &lambda in &a.lambda {
        let m0s: Vec<f64> = match &a.m0 {
            Some(v) => v.clone(),
            None => (1..=(10.0 * lambda.sqrt()).ceil() as u64).map(|x| x as f64).collect(),
        };
        for &m0 in &m0s {
            for &side in &a.side {
                let r = poisson_tail_check(lambda, m0, side)?;
                violations += usize::from(!r.holds);
                table.push(vec![
                    num(lambda),
                    num(m0),
                    cell(side),
                    num(r.lhs),
                    num(r.rhs),
                    cell(r.holds),
                    cell(r.vacuous),
                    num(r.margin),
                ]);
            }
        }
    }
    let manifest = RunManifest { command: "tail", params: a, seed: a.common.seed };
    write_report(&a.common.out, &manifest, &table, start.elapsed())?;
    Ok(violations)
}
