//! `sirdi`: simulate the epidemic chain and its limit process, tabulate the
//! closed forms, and run the verification suites.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sirdi::verify::LimitVsCtmcConfig;
use sirdi::{LemmaConfig, ModelParams};

use commands::{AnalyticRequest, ArgName, Failure, Function, Overrides, Suite, SuiteInput};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "sirdi", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Number of independent replications.
    #[arg(long, global = true, value_name = "K")]
    reps: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Time-series spacing in years.
    #[arg(long, global = true, value_name = "YEARS")]
    stride: Option<f64>,
    /// Histogram bins on [0, 1].
    #[arg(long, global = true, value_name = "K")]
    bins: Option<usize>,
    /// Fail on the first domain error instead of writing an empty value.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, p: &mut ModelParams<f64>) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.n, self.n);
        set(&mut p.mu, self.mu);
        set(&mut p.r0, self.r0);
        set(&mut p.gamma, self.gamma);
        set(&mut p.kappa, self.kappa);
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the epidemic chain for every replication of a scenario.
    SimulateCtmc,
    /// Run the limit process for every replication of a scenario.
    SimulateLimit,
    /// Tabulate a closed-form function as `arg,value` rows.
    Analytic {
        #[arg(value_enum)]
        function: Function,
        #[command(flatten)]
        params: ParamArgs,
        /// Points `lo:hi:k`, the k + 1 equally spaced values from lo to hi.
        #[arg(long, value_name = "LO:HI:K")]
        grid: Option<String>,
        /// Susceptible level: the argument of tau, ginv and fstar, the
        /// starting level of growth and final_size.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        i0: Option<f64>,
    },
    /// Run a named verification suite and write its report.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        params: ParamArgs,
        /// Run length in years for limit_vs_ctmc.
        #[arg(long)]
        horizon: Option<f64>,
    },
}

/// Model constants used when neither a config nor a flag sets them.
fn default_params() -> ModelParams<f64> {
    config::example(3.0).params
}

fn load_config(path: Option<&PathBuf>) -> Result<Option<RunConfig>, Failure> {
    path.map(|p| RunConfig::load(p).map_err(Failure::validation)).transpose()
}

fn require_config(common: &Common, cmd: &str) -> Result<RunConfig, Failure> {
    load_config(common.config.as_ref())?
        .ok_or_else(|| Failure::validation(anyhow::anyhow!("{cmd} needs --config PATH")))
}

fn analytic_request(
    common: &Common,
    function: Function,
    params: &ParamArgs,
    grid: Option<&str>,
    point: [Option<f64>; 4],
) -> Result<AnalyticRequest, Failure> {
    let mut p = load_config(common.config.as_ref())?.map_or_else(default_params, |c| c.params);
    params.apply(&mut p);
    let [s, t, x, i0] = point;
    let (arg_value, level) = match function.arg() {
        ArgName::S => (s, None),
        ArgName::T => (t, s),
        ArgName::X => (x, None),
        ArgName::I0 => (i0, s),
    };
    let points = match (grid, arg_value) {
        (Some(g), _) => commands::parse_grid(g).map_err(|e| Failure::validation(anyhow::anyhow!(e)))?,
        (None, Some(v)) => vec![v],
        (None, None) => {
            let flag = match function.arg() {
                ArgName::S => "--s",
                ArgName::T => "--t",
                ArgName::X => "--x",
                ArgName::I0 => "--i0",
            };
            return Err(Failure::validation(anyhow::anyhow!(
                "{function:?} needs {flag} or --grid"
            )));
        }
    };
    Ok(AnalyticRequest {
        function,
        params: p,
        points,
        level,
        strict: common.strict,
        out: common.out.clone(),
    })
}

fn suite_input(
    common: &Common,
    suite: Suite,
    params: &ParamArgs,
    horizon: Option<f64>,
) -> Result<SuiteInput, Failure> {
    Ok(match suite {
        Suite::AnalyticIdentities => {
            let mut p = load_config(common.config.as_ref())?.map_or_else(default_params, |c| c.params);
            params.apply(&mut p);
            SuiteInput::Identities(p)
        }
        Suite::BdLemma => {
            let mut cfg = match &common.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Failure::validation(anyhow::anyhow!("{}: {e}", path.display())))?;
                    serde_json::from_str::<LemmaConfig>(&text).map_err(Failure::validation)?
                }
                None => LemmaConfig::default(),
            };
            if let Some(r) = common.reps {
                cfg.reps = r;
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            SuiteInput::Lemma(cfg)
        }
        Suite::LimitVsCtmc => {
            let mut cfg = LimitVsCtmcConfig::desk(1e4, 3.0);
            if let Some(rc) = load_config(common.config.as_ref())? {
                cfg.params = rc.params;
                cfg.s0 = rc.s0;
                cfg.horizon = rc.horizon;
                cfg.seed = rc.seed;
                cfg.bins = rc.recorder.bins;
            }
            params.apply(&mut cfg.params);
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(b) = common.bins {
                cfg.bins = b;
            }
            cfg.params.validate().map_err(Failure::validation)?;
            if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
                return Err(Failure::validation(anyhow::anyhow!(
                    "horizon must be finite and > 0, got {}",
                    cfg.horizon
                )));
            }
            if cfg.bins == 0 {
                return Err(Failure::validation(anyhow::anyhow!("bins must be at least 1")));
            }
            SuiteInput::LimitVsCtmc(cfg)
        }
    })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    if let Some(k) = common.threads {
        if k == 0 {
            return Err(Failure::validation(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(Failure::validation)?;
    }
    let overrides = Overrides {
        seed: common.seed,
        reps: common.reps,
        out: common.out.clone(),
        stride: common.stride,
        bins: common.bins,
    };
    match &cli.command {
        Command::SimulateCtmc => {
            commands::simulate_ctmc(require_config(common, "simulate-ctmc")?, &overrides)
        }
        Command::SimulateLimit => {
            commands::simulate_limit(require_config(common, "simulate-limit")?, &overrides)
        }
        Command::Analytic {
            function,
            params,
            grid,
            s,
            t,
            x,
            i0,
        } => commands::analytic(analytic_request(
            common,
            *function,
            params,
            grid.as_deref(),
            [*s, *t, *x, *i0],
        )?),
        Command::Verify {
            suite,
            params,
            horizon,
        } => {
            let input = suite_input(common, *suite, params, *horizon)?;
            commands::verify(*suite, input, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
