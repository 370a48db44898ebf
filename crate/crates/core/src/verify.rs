//! Named verification suites. Each returns a [`Report`] with one row per
//! check; a suite passes when every row does.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{solve_tau, AnalyticError, LimitModel};
use crate::birthdeath::{self, BdError, LemmaConfig};
use crate::ctmc::{self, CtmcError, EpidemicState, OccupancyRecorder, RunOptions};
use crate::limitproc::{simulate_thinned, LimitError};
use crate::params::ModelParams;
use crate::rng::replication_rng;
use crate::stats::{tv_distance, StatsError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error(transparent)]
    BirthDeath(#[from] BdError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub check: String,
    pub n: f64,
    pub estimate: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub target: f64,
    pub pass: bool,
}

impl ReportRow {
    /// A row that passes when `estimate <= bound`.
    pub fn bounded(check: &str, n: f64, estimate: f64, bound: f64) -> Self {
        Self {
            check: check.into(),
            n,
            estimate,
            ci_lo: None,
            ci_hi: None,
            target: bound,
            pass: estimate <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }
}

/// Interior grid of `k` points of `(lo, hi)`.
fn interior(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (1..=k).map(move |j| lo + (hi - lo) * j as f64 / (k + 1) as f64)
}

fn max_over(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

/// Algebraic identities among the closed forms, each as a worst-case error
/// over a grid against its tolerance.
pub fn analytic_identities(params: &ModelParams<f64>) -> Result<Report, VerifyError> {
    let model = LimitModel::new(*params)?;
    let n = params.n;
    let tau1 = model.tau_one();
    let r0 = params.r0;
    let mut report = Report::default();

    let mut tau_err: f64 = 0.0;
    for r in [1.2, 1.5, 2.0, 4.0, 8.0] {
        let lo = 1.0 / r + 0.01;
        for s in (0..=20).map(|j| lo + (1.0 - lo) * j as f64 / 20.0) {
            let tau = solve_tau(r, s)?;
            tau_err = tau_err.max((1.0 - tau - (-r * s * tau).exp()).abs());
        }
    }
    report.push(ReportRow::bounded("tau_residual", n, tau_err, 1e-12));

    let xs: Vec<f64> = interior(0.0, tau1, 400).collect();
    let push = max_over(xs.iter().map(|&x| {
        let t = model.time_to_level(model.pre_jump_level(x));
        (model.jump_size_cdf(x) - model.jump_time_cdf(t)).abs()
    }));
    report.push(ReportRow::bounded("jump_size_pushforward", n, push, 1e-8));

    let mut ratio: f64 = 0.0;
    for &x in &xs {
        let post = model.post_jump_level(x)?;
        let pre = model.pre_jump_level(x);
        ratio = ratio.max((post / pre - (-r0 * x).exp()).abs());
    }
    report.push(ReportRow::bounded("post_pre_ratio", n, ratio, 1e-12));

    let mut inv: f64 = 0.0;
    for s in interior(model.support_floor(), model.critical_level(), 400) {
        inv = inv.max((model.post_jump_level(model.post_jump_level_inv(s)?)? - s).abs());
    }
    for &x in &xs {
        inv = inv.max((model.post_jump_level_inv(model.post_jump_level(x)?)? - x).abs());
    }
    report.push(ReportRow::bounded("post_jump_inverse", n, inv, 1e-9));

    let mut cyc: f64 = 0.0;
    let mut expanded: f64 = 0.0;
    for &x in &xs {
        let t_star = model.cycle_length(x)?;
        let t = model.time_to_level(model.pre_jump_level(x));
        let g = model.post_jump_level(x)?;
        let rebuilt = t + ((1.0 - g) / (1.0 - 1.0 / r0)).ln() / params.mu;
        cyc = cyc.max((t_star - rebuilt).abs());
        expanded = expanded.max(((model.cycle_length_expanded(x)? - t_star) / t_star).abs());
    }
    report.push(ReportRow::bounded("cycle_length_decomposition", n, cyc, 1e-9));
    report.push(ReportRow::bounded("cycle_length_expanded_form", n, expanded, 1e-9));

    let c = model.normalizing_constant();
    let z = model.density_mass();
    report.push(ReportRow::bounded("density_normalization", n, (c * z - 1.0).abs(), 1e-6));
    report.push(ReportRow::bounded(
        "normalizing_constant_routes",
        n,
        ((1.0 / z - c) / c).abs(),
        1e-6,
    ));
    Ok(report)
}

/// Birth-death checks: the limits along the `n` grid, the ladder oracle on
/// `{0.5, 2} x {1, 3} x {10, 20}`, and the subcritical mean progeny.
pub fn bd_lemma(cfg: &LemmaConfig) -> Result<Report, VerifyError> {
    let mut report = birthdeath::verify_lemma_suite(cfg)?;
    report.extend(birthdeath::ladder_checks(
        &[0.5, 2.0],
        &[1, 3],
        &[10, 20],
        cfg.reps,
        cfg.level,
        cfg.seed ^ 0x1ADD,
    )?);
    report.push(birthdeath::progeny_check(cfg.a_sub, cfg.reps, cfg.seed ^ 0x9E7)?);
    Ok(report)
}

/// Settings of the occupancy comparison between the chain, the limit
/// process and the stationary law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitVsCtmcConfig {
    pub params: ModelParams<f64>,
    pub s0: f64,
    pub horizon: f64,
    pub bins: usize,
    pub seed: u64,
    pub ctmc_tv_bound: f64,
    pub limit_tv_bound: f64,
}

impl LimitVsCtmcConfig {
    /// Ten thousand years at the given `n` and `kappa`, with `r0 = 2`,
    /// `mu = 1/75` and `gamma = 50`.
    pub fn desk(n: f64, kappa: f64) -> Self {
        Self {
            params: ModelParams {
                n,
                mu: 1.0 / 75.0,
                r0: 2.0,
                gamma: 50.0,
                kappa,
            },
            s0: 0.5,
            horizon: 1e4,
            bins: 50,
            seed: 1,
            ctmc_tv_bound: 0.1,
            limit_tv_bound: 0.05,
        }
    }
}

/// Total variation between the occupancy histograms of one long chain run
/// and one long limit run and the binned stationary law.
pub fn limit_vs_ctmc(cfg: &LimitVsCtmcConfig) -> Result<Report, VerifyError> {
    let model = LimitModel::new(cfg.params)?;
    let exact = model.binned_stationary(cfg.bins);

    let (limit, chain) = rayon::join(
        || -> Result<_, VerifyError> {
            let mut rng = replication_rng(cfg.seed, 0);
            let path = simulate_thinned(&model, cfg.s0, cfg.horizon, &mut rng)?;
            Ok(path.occupancy_histogram(cfg.bins))
        },
        || -> Result<_, VerifyError> {
            let mut rng = replication_rng(cfg.seed, 1);
            let init = EpidemicState::from_fractions(cfg.params.n, cfg.s0, 0.0)?;
            let mut occ = OccupancyRecorder::new(cfg.params.n, cfg.bins);
            ctmc::run(&cfg.params, init, cfg.horizon, &mut occ, &mut rng, RunOptions::default())?;
            Ok(occ.time_histogram().normalized())
        },
    );
    let mut report = Report::default();
    let n = cfg.params.n;
    report.push(ReportRow::bounded(
        "limit_occupancy_tv",
        n,
        tv_distance(&limit?, &exact)?,
        cfg.limit_tv_bound,
    ));
    report.push(ReportRow::bounded(
        "ctmc_occupancy_tv",
        n,
        tv_distance(&chain?, &exact)?,
        cfg.ctmc_tv_bound,
    ));
    Ok(report)
}
