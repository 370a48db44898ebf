use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde_json::json;
use sirdi::analytic::{final_size, final_size_without_infectives, growth, FinalSizeInput};
use sirdi::ctmc::{OccupancyRecorder, OutbreakDetector, TimeSeries, TimeSeriesRow};
use sirdi::output;
use sirdi::rng::replication_rng;
use sirdi::verify::{self, LimitVsCtmcConfig};
use sirdi::{
    simulate_thinned, solve_tau, CtmcError, EpidemicState, Hist, LemmaConfig, Model,
    ModelParams, OutbreakMarker, Report, RunOptions,
};

use crate::config::{RunConfig, Target};

/// A failed command with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

impl Failure {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_VALIDATION,
            error,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub out: Option<PathBuf>,
    pub stride: Option<f64>,
    pub bins: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        if let Some(s) = self.stride {
            cfg.recorder.stride = s;
        }
        if let Some(b) = self.bins {
            cfg.recorder.bins = b;
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_csv(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
) -> anyhow::Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_config(root: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let path = root.join("config.json");
    fs::write(&path, cfg.to_json() + "\n").with_context(|| format!("writing {}", path.display()))
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.scenario));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn rep_dir(root: &Path, j: u64) -> anyhow::Result<PathBuf> {
    let dir = root.join(format!("rep_{j:04}"));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

/// Sums the raw histograms in replication order and normalizes.
fn merge_histograms<'a>(hists: impl Iterator<Item = &'a Hist>, bins: usize) -> Hist {
    let mut merged = Hist::uniform(0.0, 1.0, bins);
    for h in hists {
        merged.merge(h).expect("histograms share one binning");
    }
    merged.normalized()
}

struct ChainRep {
    series: Vec<TimeSeriesRow>,
    markers: Vec<OutbreakMarker>,
    occupancy: Hist,
    events: u64,
    final_state: EpidemicState,
    max_rate_drift: Option<f64>,
    budget: Option<CtmcError>,
    wall: f64,
}

fn chain_replication(cfg: &RunConfig, j: u64) -> Result<ChainRep, CtmcError> {
    let started = Instant::now();
    let p = &cfg.params;
    let init = EpidemicState::from_fractions(p.n, cfg.s0, cfg.i0)?;
    let mut rec = (
        TimeSeries::new(cfg.recorder.stride),
        OutbreakDetector::new(p.n),
        OccupancyRecorder::new(p.n, cfg.recorder.bins),
        FinalState(init),
    );
    let opts = cfg
        .max_events
        .map_or_else(RunOptions::default, |max_events| RunOptions { max_events });
    let mut rng = replication_rng(cfg.seed, j);
    let outcome = sirdi::ctmc::run(p, init, cfg.horizon, &mut rec, &mut rng, opts);
    let (events, max_rate_drift, budget) = match outcome {
        Ok(s) => (s.events, Some(s.max_rate_drift), None),
        Err(e @ CtmcError::EventBudgetExceeded { limit, .. }) => (limit, None, Some(e)),
        Err(e) => return Err(e),
    };
    let (series, detector, occ, last) = rec;
    Ok(ChainRep {
        series: series.rows().to_vec(),
        markers: detector.into_markers(),
        occupancy: occ.time_histogram().clone(),
        events,
        final_state: last.0,
        max_rate_drift,
        budget,
        wall: started.elapsed().as_secs_f64(),
    })
}

/// Keeps the last state seen, so a run cut short by its budget still
/// reports where it stopped.
struct FinalState(EpidemicState);

impl sirdi::Recorder for FinalState {
    fn on_event(&mut self, state: &EpidemicState, _kind: sirdi::EventKind) {
        self.0 = *state;
    }

    fn on_finish(&mut self, state: &EpidemicState) {
        self.0 = *state;
    }
}

pub fn simulate_ctmc(mut cfg: RunConfig, ov: &Overrides) -> CmdResult {
    ov.apply(&mut cfg);
    cfg.validate(Target::Chain).map_err(Failure::validation)?;
    let reps: Vec<ChainRep> = (0..cfg.reps)
        .into_par_iter()
        .map(|j| chain_replication(&cfg, j))
        .collect::<Result<_, _>>()
        .map_err(Failure::validation)?;

    let root = out_dir(&cfg)?;
    write_config(&root, &cfg)?;
    let mut budget_hit = Vec::new();
    for (j, rep) in reps.iter().enumerate() {
        let dir = rep_dir(&root, j as u64)?;
        write_csv(&dir.join("timeseries.csv"), |w| output::write_time_series(w, &rep.series))?;
        write_csv(&dir.join("outbreaks.csv"), |w| output::write_markers(w, &rep.markers))?;
        write_csv(&dir.join("occupancy.csv"), |w| {
            output::write_histogram(w, &rep.occupancy.normalized())
        })?;
        let s = rep.final_state;
        write_json(
            &dir.join("summary.json"),
            &json!({
                "scenario": cfg.scenario,
                "replication": j,
                "seed": cfg.seed,
                "events": rep.events,
                "final_state": { "t": s.t, "s": s.s, "i": s.i, "r": s.r },
                "outbreaks": rep.markers.len(),
                "max_rate_drift": rep.max_rate_drift,
                "budget_exceeded": rep.budget.is_some(),
            }),
        )?;
        println!("replication {j}: {} events, {:.3} s wall", rep.events, rep.wall);
        if let Some(e) = &rep.budget {
            budget_hit.push(format!("replication {j}: {e}"));
        }
    }
    let merged = merge_histograms(reps.iter().map(|r| &r.occupancy), cfg.recorder.bins);
    write_csv(&root.join("occupancy_merged.csv"), |w| output::write_histogram(w, &merged))?;
    if !budget_hit.is_empty() {
        return Err(Failure {
            code: EXIT_BUDGET,
            error: anyhow::anyhow!(
                "event budget exhausted, partial outputs written: {}",
                budget_hit.join("; ")
            ),
        });
    }
    Ok(())
}

pub fn simulate_limit(mut cfg: RunConfig, ov: &Overrides) -> CmdResult {
    ov.apply(&mut cfg);
    cfg.validate(Target::Limit).map_err(Failure::validation)?;
    let model = Model::new(cfg.params).map_err(Failure::validation)?;
    let bins = cfg.recorder.bins;
    let paths = (0..cfg.reps)
        .into_par_iter()
        .map(|j| {
            let started = Instant::now();
            let mut rng = replication_rng(cfg.seed, j);
            simulate_thinned(&model, cfg.s0, cfg.horizon, &mut rng)
                .map(|p| (p, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::validation)?;

    let root = out_dir(&cfg)?;
    write_config(&root, &cfg)?;
    let mut time_hists = Vec::with_capacity(paths.len());
    for (j, (path, wall)) in paths.iter().enumerate() {
        let dir = rep_dir(&root, j as u64)?;
        let cycles = path.cycles();
        write_csv(&dir.join("path.csv"), |w| {
            output::write_path(w, &path.sample(cfg.recorder.stride))
        })?;
        write_csv(&dir.join("cycles.csv"), |w| output::write_cycles(w, &cycles))?;
        write_csv(&dir.join("occupancy.csv"), |w| {
            output::write_histogram(w, &path.occupancy_histogram(bins))
        })?;
        write_json(
            &dir.join("summary.json"),
            &json!({
                "scenario": cfg.scenario,
                "replication": j,
                "seed": cfg.seed,
                "jumps": path.jumps().len(),
                "cycles": cycles.len(),
            }),
        )?;
        println!("replication {j}: {} jumps, {wall:.3} s wall", path.jumps().len());
        time_hists.push(path.occupancy_time_histogram(bins));
    }
    let merged = merge_histograms(time_hists.iter(), bins);
    write_csv(&root.join("occupancy_merged.csv"), |w| output::write_histogram(w, &merged))?;
    Ok(())
}

/// Closed-form functions that can be tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Function {
    /// Relative final size tau(s); argument s.
    Tau,
    /// Deterministic growth from level --s after t years; argument t.
    Growth,
    /// CDF of the renewal-to-jump time; argument t.
    Ft,
    /// CDF of the jump size; argument x.
    Fx,
    /// Post-jump level for jump size x; argument x.
    G,
    /// Jump size for post-jump level s; argument s.
    Ginv,
    /// Cycle length for jump size x; argument x.
    Tstar,
    /// Stationary density; argument s.
    Fstar,
    /// Final susceptible fraction from (--s, i0); argument i0.
    #[value(name = "final_size")]
    FinalSize,
}

/// The variable a function is tabulated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgName {
    S,
    T,
    X,
    I0,
}

impl Function {
    pub fn arg(self) -> ArgName {
        match self {
            Function::Tau | Function::Ginv | Function::Fstar => ArgName::S,
            Function::Growth | Function::Ft => ArgName::T,
            Function::Fx | Function::G | Function::Tstar => ArgName::X,
            Function::FinalSize => ArgName::I0,
        }
    }

    fn needs_model(self) -> bool {
        !matches!(self, Function::Tau | Function::Growth | Function::FinalSize)
    }
}

/// `lo:hi:k`, the `k + 1` equally spaced points from `lo` to `hi`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, k] = parts[..] else {
        return Err(format!("grid `{text}` is not of the form lo:hi:k"));
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("grid lower end: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("grid upper end: {e}"))?;
    let k: usize = k.trim().parse().map_err(|e| format!("grid intervals: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("grid needs finite lo <= hi, got {lo}:{hi}"));
    }
    if k == 0 {
        return Ok(vec![lo]);
    }
    Ok((0..=k)
        .map(|j| if j == k { hi } else { lo + (hi - lo) * j as f64 / k as f64 })
        .collect())
}

pub struct AnalyticRequest {
    pub function: Function,
    pub params: ModelParams<f64>,
    pub points: Vec<f64>,
    /// Starting susceptible level for `growth` and `final_size`.
    pub level: Option<f64>,
    pub strict: bool,
    pub out: Option<PathBuf>,
}

fn evaluate(
    f: Function,
    params: &ModelParams<f64>,
    model: Option<&Model>,
    level: Option<f64>,
    a: f64,
) -> Result<f64, String> {
    let m = || model.expect("model built for this function");
    let level = || level.ok_or_else(|| "needs --s".to_string());
    let res = match f {
        Function::Tau => solve_tau(params.r0, a).map_err(|e| e.to_string())?,
        Function::Growth => {
            let s = level()?;
            if !(0.0..=1.0).contains(&s) || !(a >= 0.0) {
                return Err(format!("growth needs s in [0, 1] and t >= 0, got s = {s}, t = {a}"));
            }
            growth(s, a, params.mu)
        }
        Function::Ft => m().jump_time_cdf(a),
        Function::Fx => m().jump_size_cdf(a),
        Function::G => m().post_jump_level(a).map_err(|e| e.to_string())?,
        Function::Ginv => m().post_jump_level_inv(a).map_err(|e| e.to_string())?,
        Function::Tstar => m().cycle_length(a).map_err(|e| e.to_string())?,
        Function::Fstar => m().stationary_density(a),
        Function::FinalSize => {
            let s0 = level()?;
            let input = FinalSizeInput::new(s0, a).map_err(|e| e.to_string())?;
            if a == 0.0 {
                final_size_without_infectives(s0, params.r0)
            } else {
                final_size(input, params.r0).map_err(|e| e.to_string())?
            }
        }
    };
    if !res.is_finite() {
        return Err(format!("non-finite value {res}"));
    }
    Ok(res)
}

pub fn analytic(req: AnalyticRequest) -> CmdResult {
    req.params.validate().map_err(Failure::validation)?;
    let model = if req.function.needs_model() {
        Some(Model::new(req.params).map_err(Failure::validation)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(req.points.len());
    for &a in &req.points {
        match evaluate(req.function, &req.params, model.as_ref(), req.level, a) {
            Ok(v) => rows.push((a, Some(v))),
            Err(msg) if req.strict => {
                return Err(Failure::validation(anyhow::anyhow!("at {a}: {msg}")));
            }
            Err(msg) => {
                eprintln!("warning: at {a}: {msg}");
                rows.push((a, None));
            }
        }
    }
    match &req.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let name = format!("{:?}.csv", req.function).to_lowercase();
            let name = if req.function == Function::FinalSize { "final_size.csv".into() } else { name };
            write_csv(&dir.join(name), |w| output::write_arg_value(w, &rows))?;
        }
        None => {
            let stdout = io::stdout();
            output::write_arg_value(stdout.lock(), &rows).context("writing to stdout")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    #[value(name = "analytic_identities")]
    AnalyticIdentities,
    #[value(name = "bd_lemma")]
    BdLemma,
    #[value(name = "limit_vs_ctmc")]
    LimitVsCtmc,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::AnalyticIdentities => "analytic_identities",
            Suite::BdLemma => "bd_lemma",
            Suite::LimitVsCtmc => "limit_vs_ctmc",
        }
    }
}

pub enum SuiteInput {
    Identities(ModelParams<f64>),
    Lemma(LemmaConfig),
    LimitVsCtmc(LimitVsCtmcConfig),
}

pub fn verify(suite: Suite, input: SuiteInput, out: Option<&Path>) -> CmdResult {
    let report: Report = match input {
        SuiteInput::Identities(p) => verify::analytic_identities(&p),
        SuiteInput::Lemma(cfg) => verify::bd_lemma(&cfg),
        SuiteInput::LimitVsCtmc(cfg) => verify::limit_vs_ctmc(&cfg),
    }
    .map_err(Failure::validation)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            write_csv(&dir.join(format!("{}.csv", suite.name())), |w| {
                output::write_report(w, &report)
            })?;
        }
        None => {
            output::write_report(io::stdout().lock(), &report).context("writing to stdout")?;
        }
    }
    let failed: Vec<String> = report
        .failures()
        .map(|r| format!("{} (estimate {}, target {})", r.check, r.estimate, r.target))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFICATION,
            error: anyhow::anyhow!("{} failed: {}", suite.name(), failed.join(", ")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_exact() {
        let g = parse_grid("0:1:200").unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[200], 1.0);
        assert_eq!(parse_grid("0.5:0.5:0").unwrap(), vec![0.5]);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
    }
}
