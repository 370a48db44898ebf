//! Linear birth-death processes: each individual gives birth at rate
//! `alpha` and dies at rate `beta`. They bound the early and late phases of
//! an outbreak, and the checks in [`verify_lemma_suite`] measure the
//! hitting, extinction and birth-count behaviour that those bounds rely on.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::replication_rng;
use crate::stats::{mean_and_standard_error, wilson_interval};
use crate::verify::{Report, ReportRow};

/// Default cap on births per run.
pub const DEFAULT_BIRTH_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BdError {
    #[error("{what} = {value} outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("birth budget of {0} exhausted before the run was decided")]
    BudgetExceeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdParams {
    pub alpha: f64,
    pub beta: f64,
    /// Initial number of individuals.
    pub k: u64,
}

impl BdParams {
    pub fn new(alpha: f64, beta: f64, k: u64) -> Result<Self, BdError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(BdError::Domain {
                what: "alpha",
                value: alpha,
                domain: "[0, inf)",
            });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(BdError::Domain {
                what: "beta",
                value: beta,
                domain: "(0, inf)",
            });
        }
        if k == 0 {
            return Err(BdError::Domain {
                what: "k",
                value: 0.0,
                domain: "[1, inf)",
            });
        }
        Ok(Self { alpha, beta, k })
    }

    /// Offspring ratio `alpha / beta`.
    pub fn a(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Where a run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BdEnd {
    /// Reached the upper level before extinction.
    HitUpper,
    Extinct,
    /// Extinction-only mode, supercritical: reached the survival level,
    /// from which extinction has probability below `1e-12`.
    Survived,
    /// Reached the observation horizon undecided.
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdOptions {
    /// Stop when the count reaches this level. `None` runs until extinction
    /// (or survival, see [`BdEnd::Survived`]).
    pub upper: Option<u64>,
    pub birth_budget: u64,
    /// Record the first time cumulative births reach this level.
    pub birth_level: Option<u64>,
    /// Stop at this time if nothing else happened earlier.
    pub horizon: Option<f64>,
}

impl Default for BdOptions {
    fn default() -> Self {
        Self {
            upper: None,
            birth_budget: DEFAULT_BIRTH_BUDGET,
            birth_level: None,
            horizon: None,
        }
    }
}

impl BdOptions {
    pub fn hitting(upper: u64) -> Self {
        Self {
            upper: Some(upper),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdOutcome {
    pub end: BdEnd,
    /// Time the upper level was reached, if it was.
    pub hit_time: Option<f64>,
    pub extinct_time: Option<f64>,
    /// Births up to the end of the run.
    pub total_births: u64,
    /// First time cumulative births reached the requested level.
    pub birth_level_time: Option<f64>,
    /// Count when the run stopped.
    pub final_level: u64,
    /// Time the run stopped.
    pub end_time: f64,
}

impl BdOutcome {
    /// `min(hit, extinct)` time: when the run was decided.
    pub fn decision_time(&self) -> Option<f64> {
        match self.end {
            BdEnd::HitUpper | BdEnd::Extinct | BdEnd::Survived => Some(self.end_time),
            BdEnd::Horizon => None,
        }
    }
}

/// Count from which a birth-death process with ratio `a > 1` dies out with
/// probability below `1e-12`.
pub fn survival_level(a: f64) -> u64 {
    (1e12f64.ln() / a.ln()).ceil() as u64
}

/// Probability that the process with ratio `a` started at `k` reaches `m`
/// before 0.
pub fn ladder_probability(a: f64, k: u64, m: u64) -> f64 {
    if k >= m {
        return 1.0;
    }
    if (a - 1.0).abs() < 1e-12 {
        return k as f64 / m as f64;
    }
    let r = a.recip();
    (1.0 - r.powf(k as f64)) / (1.0 - r.powf(m as f64))
}

/// Simulates one run event by event.
pub fn simulate_bd<R: Rng + ?Sized>(
    params: &BdParams,
    opts: &BdOptions,
    rng: &mut R,
) -> Result<BdOutcome, BdError> {
    if let Some(u) = opts.upper {
        if u <= params.k {
            return Err(BdError::Domain {
                what: "upper",
                value: u as f64,
                domain: "(k, inf)",
            });
        }
    }
    let survive_at = match opts.upper {
        None if params.a() > 1.0 => Some(survival_level(params.a()).max(params.k + 1)),
        _ => None,
    };
    let horizon = opts.horizon.unwrap_or(f64::INFINITY);
    let p_birth = params.alpha / (params.alpha + params.beta);
    let per_capita = params.alpha + params.beta;

    let mut z = params.k;
    let mut t = 0.0f64;
    let mut births = 0u64;
    let mut birth_level_time = opts.birth_level.filter(|&l| l == 0).map(|_| 0.0);
    let outcome = |end, t, z, births, blt| BdOutcome {
        end,
        hit_time: (end == BdEnd::HitUpper).then_some(t),
        extinct_time: (end == BdEnd::Extinct).then_some(t),
        total_births: births,
        birth_level_time: blt,
        final_level: z,
        end_time: t,
    };
    loop {
        let e: f64 = rng.sample(Exp1);
        let u: f64 = rng.random();
        let dt = e / (per_capita * z as f64);
        if t + dt > horizon {
            return Ok(outcome(BdEnd::Horizon, horizon, z, births, birth_level_time));
        }
        t += dt;
        if u < p_birth {
            z += 1;
            births += 1;
            if birth_level_time.is_none() && opts.birth_level.is_some_and(|l| births >= l) {
                birth_level_time = Some(t);
            }
            if births > opts.birth_budget {
                return Err(BdError::BudgetExceeded(opts.birth_budget));
            }
            if opts.upper.is_some_and(|l| z >= l) {
                return Ok(outcome(BdEnd::HitUpper, t, z, births, birth_level_time));
            }
            let level_done = opts.birth_level.is_none() || birth_level_time.is_some();
            if survive_at.is_some_and(|l| z >= l) && level_done {
                return Ok(outcome(BdEnd::Survived, t, z, births, birth_level_time));
            }
        } else {
            z -= 1;
            if z == 0 {
                return Ok(outcome(BdEnd::Extinct, t, z, births, birth_level_time));
            }
        }
    }
}

/// Settings of the lemma suite. Rates along the `n` grid are
/// `beta_n = beta_scale (ln n)^2` and `alpha_n = a beta_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub a_super: f64,
    pub a_sub: f64,
    pub n_grid: Vec<f64>,
    pub beta_scale: f64,
    /// Replications for frequency estimates.
    pub reps: u64,
    /// Replications for the birth-level time check, which runs to `c n` births.
    pub reps_birth_level: u64,
    /// `c` in the birth level `c n`.
    pub birth_fraction: f64,
    /// Confidence level of the Wilson intervals.
    pub level: f64,
    pub seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            a_super: 2.0,
            a_sub: 0.5,
            n_grid: vec![1e3, 1e4, 1e5, 1e6],
            beta_scale: 1.0,
            reps: 100_000,
            reps_birth_level: 200,
            birth_fraction: 1.0,
            level: 0.99,
            seed: 1,
        }
    }
}

/// Runs `reps` independent replications in parallel; replication `j` uses
/// stream `j` of `seed`, so results do not depend on the thread count.
pub fn replicate<T: Send>(
    seed: u64,
    reps: u64,
    f: impl Fn(&mut crate::rng::SimRng) -> T + Sync,
) -> Vec<T> {
    (0..reps)
        .into_par_iter()
        .map(|j| f(&mut replication_rng(seed, j)))
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Frequency with which the process hits `upper` before extinction.
pub fn hit_frequency(params: &BdParams, upper: u64, reps: u64, seed: u64) -> Result<u64, BdError> {
    let outs = replicate(seed, reps, |rng| simulate_bd(params, &BdOptions::hitting(upper), rng));
    let mut hits = 0;
    for o in outs {
        if o?.end == BdEnd::HitUpper {
            hits += 1;
        }
    }
    Ok(hits)
}

fn frequency_row(check: &str, n: f64, hits: u64, reps: u64, level: f64, target: f64, pass: bool) -> ReportRow {
    let (lo, hi) = wilson_interval(hits, reps, level);
    ReportRow {
        check: check.into(),
        n,
        estimate: hits as f64 / reps as f64,
        ci_lo: Some(lo),
        ci_hi: Some(hi),
        target,
        pass,
    }
}

fn within(ci: (f64, f64), x: f64) -> bool {
    ci.0 <= x && x <= ci.1
}

/// Ladder-probability check on the grid `a x k x m`.
pub fn ladder_checks(
    grid_a: &[f64],
    grid_k: &[u64],
    grid_m: &[u64],
    reps: u64,
    level: f64,
    seed: u64,
) -> Result<Report, BdError> {
    let mut report = Report::default();
    let mut cell = 0u64;
    for &a in grid_a {
        for &k in grid_k {
            for &m in grid_m {
                let p = BdParams::new(a, 1.0, k)?;
                let hits = hit_frequency(&p, m, reps, seed.wrapping_add(cell.wrapping_mul(1 << 32)))?;
                cell += 1;
                let exact = ladder_probability(a, k, m);
                let ci = wilson_interval(hits, reps, level);
                report.push(frequency_row(
                    &format!("ladder_a{a}_k{k}_m{m}"),
                    m as f64,
                    hits,
                    reps,
                    level,
                    exact,
                    within(ci, exact),
                ));
            }
        }
    }
    Ok(report)
}

/// Mean total progeny of one ancestor in the subcritical process with
/// ratio `a`, against `a / (1 - a)` within three standard errors.
pub fn progeny_check(a: f64, reps: u64, seed: u64) -> Result<ReportRow, BdError> {
    let p = BdParams::new(a, 1.0, 1)?;
    let outs = replicate(seed, reps, |rng| simulate_bd(&p, &BdOptions::default(), rng));
    let births = outs
        .into_iter()
        .map(|o| o.map(|o| o.total_births as f64))
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, se) = mean_and_standard_error(&births);
    let target = a / (1.0 - a);
    Ok(ReportRow {
        check: "mean_progeny".into(),
        n: reps as f64,
        estimate: mean,
        ci_lo: Some(mean - 3.0 * se),
        ci_hi: Some(mean + 3.0 * se),
        target,
        pass: (mean - target).abs() <= 3.0 * se,
    })
}

/// Monte Carlo checks of the birth-death limits along a growing `n` grid,
/// with the hitting level `ceil(ln n)`.
///
/// * `sub_reach`: subcritical frequency of reaching the level from one
///   ancestor; compared with the exact ladder value and required to fall
///   along the grid.
/// * `super_hit`: supercritical hit-before-extinction frequency; compared
///   with the exact ladder value and with the limit `1 - 1/a` at each `n`.
/// * `decision_time`: median of `min(hit, extinct)`; must fall along the grid.
/// * `births_below_cuberoot`: frequency that fewer than `n^(1/3)` births
///   occur before the decision; must rise along the grid and end above 0.99.
/// * `birth_level_time`: median time for cumulative births to reach `c n`
///   from `ceil(ln n)` ancestors; must fall along the grid.
pub fn verify_lemma_suite(cfg: &LemmaConfig) -> Result<Report, BdError> {
    let mut report = Report::default();
    let mut sub_freq = Vec::new();
    let mut decision = Vec::new();
    let mut cuberoot = Vec::new();
    let mut birth_level = Vec::new();
    let last = cfg.n_grid.len().saturating_sub(1);
    for (gi, &n) in cfg.n_grid.iter().enumerate() {
        let m = n.ln().ceil() as u64;
        let beta = cfg.beta_scale * n.ln().powi(2);
        let seed = cfg.seed.wrapping_add((gi as u64) << 40);

        let sub = BdParams::new(cfg.a_sub * beta, beta, 1)?;
        let hits = hit_frequency(&sub, m, cfg.reps, seed)?;
        let exact = ladder_probability(cfg.a_sub, 1, m);
        let ci = wilson_interval(hits, cfg.reps, cfg.level);
        sub_freq.push(hits as f64 / cfg.reps as f64);
        report.push(frequency_row("sub_reach", n, hits, cfg.reps, cfg.level, exact, within(ci, exact)));

        let sup = BdParams::new(cfg.a_super * beta, beta, 1)?;
        let outs = replicate(seed ^ 0x5555, cfg.reps, |rng| {
            simulate_bd(&sup, &BdOptions::hitting(m), rng)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let hits = outs.iter().filter(|o| o.end == BdEnd::HitUpper).count() as u64;
        let exact = ladder_probability(cfg.a_super, 1, m);
        let ci = wilson_interval(hits, cfg.reps, cfg.level);
        report.push(frequency_row("super_hit", n, hits, cfg.reps, cfg.level, exact, within(ci, exact)));
        let limit = 1.0 - cfg.a_super.recip();
        report.push(frequency_row("super_hit_limit", n, hits, cfg.reps, cfg.level, limit, within(ci, limit)));

        let times: Vec<f64> = outs.iter().filter_map(BdOutcome::decision_time).collect();
        decision.push(median(times));
        let cap = n.cbrt();
        let few = outs.iter().filter(|o| (o.total_births as f64) < cap).count() as u64;
        let (lo, hi) = wilson_interval(few, cfg.reps, cfg.level);
        cuberoot.push((few as f64 / cfg.reps as f64, lo, hi));

        let level = (cfg.birth_fraction * n).ceil() as u64;
        let from_m = BdParams::new(cfg.a_super * beta, beta, m)?;
        let opts = BdOptions {
            upper: None,
            birth_level: Some(level),
            birth_budget: level.saturating_mul(4).max(DEFAULT_BIRTH_BUDGET),
            horizon: None,
        };
        let outs = replicate(seed ^ 0xAAAA, cfg.reps_birth_level, |rng| simulate_bd(&from_m, &opts, rng))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let times: Vec<f64> = outs
            .iter()
            .map(|o| o.birth_level_time.unwrap_or(f64::INFINITY))
            .collect();
        birth_level.push(median(times));
    }

    let falling = |xs: &[f64], k: usize| k == 0 || xs[k] < xs[k - 1];
    for (k, &n) in cfg.n_grid.iter().enumerate() {
        report.push(ReportRow {
            check: "sub_reach_trend".into(),
            n,
            estimate: sub_freq[k],
            ci_lo: None,
            ci_hi: None,
            target: 0.0,
            pass: k == 0 || sub_freq[k] <= sub_freq[k - 1],
        });
        report.push(ReportRow {
            check: "decision_time".into(),
            n,
            estimate: decision[k],
            ci_lo: None,
            ci_hi: None,
            target: 0.0,
            pass: falling(&decision, k),
        });
        let (est, lo, hi) = cuberoot[k];
        let rising = k == 0 || est >= cuberoot[k - 1].0;
        report.push(ReportRow {
            check: "births_below_cuberoot".into(),
            n,
            estimate: est,
            ci_lo: Some(lo),
            ci_hi: Some(hi),
            target: 1.0,
            pass: rising && (k != last || est > 0.99),
        });
        report.push(ReportRow {
            check: "birth_level_time".into(),
            n,
            estimate: birth_level[k],
            ci_lo: None,
            ci_hi: None,
            target: 0.0,
            pass: birth_level[k].is_finite() && falling(&birth_level, k),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn ladder_formula_edges() {
        assert_eq!(ladder_probability(2.0, 5, 5), 1.0);
        assert!((ladder_probability(2.0, 1, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((ladder_probability(1.0, 3, 10) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn pure_death_always_dies() {
        let p = BdParams::new(0.0, 1.0, 4).unwrap();
        let o = simulate_bd(&p, &BdOptions::default(), &mut rng_from_seed(1)).unwrap();
        assert_eq!(o.end, BdEnd::Extinct);
        assert_eq!(o.total_births, 0);
    }

    #[test]
    fn survival_level_bounds_extinction() {
        let l = survival_level(2.0);
        assert!(0.5f64.powi(l as i32) < 1e-12);
        let p = BdParams::new(2.0, 1.0, 1).unwrap();
        for seed in 0..200 {
            let o = simulate_bd(&p, &BdOptions::default(), &mut rng_from_seed(seed)).unwrap();
            assert!(matches!(o.end, BdEnd::Extinct | BdEnd::Survived));
            if o.end == BdEnd::Survived {
                assert_eq!(o.final_level, l);
            }
        }
    }

    #[test]
    fn budget_error() {
        let p = BdParams::new(2.0, 1.0, 1).unwrap();
        let opts = BdOptions {
            upper: Some(1_000_000),
            birth_budget: 10,
            ..BdOptions::default()
        };
        let mut saw = false;
        for seed in 0..50 {
            if let Err(e) = simulate_bd(&p, &opts, &mut rng_from_seed(seed)) {
                assert_eq!(e, BdError::BudgetExceeded(10));
                saw = true;
            }
        }
        assert!(saw);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(BdParams::new(-1.0, 1.0, 1).is_err());
        assert!(BdParams::new(1.0, 0.0, 1).is_err());
        assert!(BdParams::new(1.0, 1.0, 0).is_err());
        let p = BdParams::new(1.0, 1.0, 3).unwrap();
        assert!(simulate_bd(&p, &BdOptions::hitting(3), &mut rng_from_seed(0)).is_err());
    }
}
