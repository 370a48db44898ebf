//! Exact simulation and analytics for the Markovian SIR epidemic with
//! demography and importation of infectives, and for the regenerative
//! process that its susceptible fraction converges to in large populations.
//!
//! The analytic and limit-process code is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix it to `f64`, which is what the
//! simulators and the command-line tool use.

pub mod analytic;
pub mod birthdeath;
pub mod ctmc;
pub mod limitproc;
pub mod numeric;
pub mod output;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod verify;

pub use analytic::{
    final_size, final_size_without_infectives, growth, solve_tau, AnalyticError,
    FinalSizeInput,
};
pub use birthdeath::{simulate_bd, BdEnd, BdError, BdOptions, BdOutcome, BdParams, LemmaConfig};
pub use ctmc::{
    delineate_outbreaks, functional_estimates, run, sandwich, step, CtmcError, EpidemicState,
    EventKind, EventLog, OutbreakMarker, Recorder, RunOptions, RunSummary, SandwichPaths,
};
pub use limitproc::{
    simulate_cycles, simulate_thinned, simulate_thinned_jumps, CycleRecord, JumpEvent,
    LimitError, LimitPath,
};
pub use params::{ModelParams, ParamError};
pub use scalar::Scalar;
pub use stats::{Ecdf, Histogram, StatsError};
pub use verify::{Report, ReportRow, VerifyError};

pub type Params = params::ModelParams<f64>;
pub type Model = analytic::LimitModel<f64>;
pub type Path = limitproc::LimitPath<f64>;
pub type Cycle = limitproc::CycleRecord<f64>;
pub type Hist = stats::Histogram<f64>;
