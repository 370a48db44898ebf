//! Exact event-driven simulation of the SIR epidemic with demography and
//! importation of infectives.
//!
//! Seven transitions act on the integer state `(s, i, r)`:
//!
//! | event              | rate                 | change      |
//! |--------------------|----------------------|-------------|
//! | susceptible birth  | `mu (n - kappa)`     | `s + 1`     |
//! | infective birth    | `mu kappa`           | `i + 1`     |
//! | susceptible death  | `mu s`               | `s - 1`     |
//! | infective death    | `mu i`               | `i - 1`     |
//! | recovered death    | `mu r`               | `r - 1`     |
//! | infection          | `lambda s i / n`     | `s - 1, i + 1` |
//! | recovery           | `gamma i`            | `i - 1, r + 1` |
//!
//! The simulator is the direct (Gillespie) method. Category rates are kept
//! up to date after each event and the total is maintained by differences,
//! with a full recomputation every [`RESYNC_INTERVAL`] events.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::params::{ModelParams, ParamError};
use crate::stats::Histogram;

/// Default cap on the number of events in one run.
pub const DEFAULT_MAX_EVENTS: u64 = 1 << 33;

/// Events between full recomputations of the total rate.
pub const RESYNC_INTERVAL: u64 = 1_000_000;

/// Largest relative difference allowed between the maintained and the
/// recomputed total rate.
pub const MAX_RATE_DRIFT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtmcError {
    #[error("total transition rate is zero; the chain is absorbed")]
    AbsorbedEmpty,
    #[error("event budget of {limit} exhausted at t = {t}")]
    EventBudgetExceeded { limit: u64, t: f64 },
    #[error("total rate drifted by {0:e} (relative) from its recomputed value")]
    RateDrift(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{what} = {value} outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
}

fn domain(what: &'static str, value: f64, domain: &'static str) -> CtmcError {
    CtmcError::Domain {
        what,
        value,
        domain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum EventKind {
    SusceptibleBirth,
    InfectiveBirth,
    SusceptibleDeath,
    InfectiveDeath,
    RecoveredDeath,
    Infection,
    Recovery,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::SusceptibleBirth,
        EventKind::InfectiveBirth,
        EventKind::SusceptibleDeath,
        EventKind::InfectiveDeath,
        EventKind::RecoveredDeath,
        EventKind::Infection,
        EventKind::Recovery,
    ];

    /// Signed change of the population size.
    pub fn population_change(self) -> i64 {
        match self {
            EventKind::SusceptibleBirth | EventKind::InfectiveBirth => 1,
            EventKind::SusceptibleDeath | EventKind::InfectiveDeath | EventKind::RecoveredDeath => -1,
            EventKind::Infection | EventKind::Recovery => 0,
        }
    }
}

/// Counts of susceptibles, infectives and recovered at time `t` (years).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub s: u64,
    pub i: u64,
    pub r: u64,
    pub t: f64,
}

impl EpidemicState {
    pub fn new(s: u64, i: u64, r: u64) -> Self {
        Self { s, i, r, t: 0.0 }
    }

    /// `round(s0 n)` susceptibles, `round(i0 n)` infectives and the rest of
    /// `round(n)` recovered.
    pub fn from_fractions(n: f64, s0: f64, i0: f64) -> Result<Self, CtmcError> {
        if !(n.is_finite() && n > 0.0) {
            return Err(domain("n", n, "(0, inf)"));
        }
        if !(0.0..=1.0).contains(&s0) {
            return Err(domain("s0", s0, "[0, 1]"));
        }
        if !(i0 >= 0.0 && s0 + i0 <= 1.0 + 1e-12) {
            return Err(domain("i0", i0, "[0, 1 - s0]"));
        }
        let s = (s0 * n).round() as u64;
        let i = (i0 * n).round() as u64;
        let r = ((1.0 - s0 - i0).max(0.0) * n).round() as u64;
        Ok(Self::new(s, i, r))
    }

    pub fn population(&self) -> u64 {
        self.s + self.i + self.r
    }

    /// Susceptible count scaled by the target size `n`.
    pub fn s_bar(&self, n: f64) -> f64 {
        self.s as f64 / n
    }

    /// Applies the count change of `kind`. Panics if a count would go negative.
    pub fn apply(&mut self, kind: EventKind) {
        fn dec(x: &mut u64, what: &str) {
            *x = x.checked_sub(1).unwrap_or_else(|| panic!("{what} count went negative"));
        }
        match kind {
            EventKind::SusceptibleBirth => self.s += 1,
            EventKind::InfectiveBirth => self.i += 1,
            EventKind::SusceptibleDeath => dec(&mut self.s, "susceptible"),
            EventKind::InfectiveDeath => dec(&mut self.i, "infective"),
            EventKind::RecoveredDeath => dec(&mut self.r, "recovered"),
            EventKind::Infection => {
                dec(&mut self.s, "susceptible");
                self.i += 1;
            }
            EventKind::Recovery => {
                dec(&mut self.i, "infective");
                self.r += 1;
            }
        }
    }
}

/// Rates of the seven transitions at `state`, in [`EventKind::ALL`] order.
pub fn category_rates(p: &ModelParams<f64>, state: &EpidemicState) -> [f64; 7] {
    let (s, i, r) = (state.s as f64, state.i as f64, state.r as f64);
    [
        p.mu * (p.n - p.kappa),
        p.importation_rate(),
        p.mu * s,
        p.mu * i,
        p.mu * r,
        p.lambda() * s * i / p.n,
        p.gamma * i,
    ]
}

/// Picks the category whose cumulative-rate interval contains `target`.
/// Rounding can leave `target` past the last boundary; the last category
/// with positive rate is used then.
fn choose(rates: &[f64; 7], target: f64) -> EventKind {
    let mut acc = 0.0;
    let mut last = None;
    for (k, &q) in rates.iter().enumerate() {
        if q > 0.0 {
            acc += q;
            last = Some(k);
            if target < acc {
                return EventKind::ALL[k];
            }
        }
    }
    EventKind::ALL[last.expect("some rate is positive")]
}

/// One transition from `state` with rates recomputed from scratch.
pub fn step<R: Rng + ?Sized>(
    state: &EpidemicState,
    params: &ModelParams<f64>,
    rng: &mut R,
) -> Result<(EpidemicState, EventKind), CtmcError> {
    let rates = category_rates(params, state);
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) {
        return Err(CtmcError::AbsorbedEmpty);
    }
    let e: f64 = rng.sample(Exp1);
    let u: f64 = rng.random();
    let kind = choose(&rates, u * total);
    let mut next = *state;
    next.t += e / total;
    next.apply(kind);
    Ok((next, kind))
}

/// Direct-method simulator holding the chain state and its rates.
#[derive(Debug, Clone)]
pub struct Gillespie {
    params: ModelParams<f64>,
    state: EpidemicState,
    population: u64,
    rates: [f64; 7],
    total: f64,
    clock: CompensatedSum,
    events: u64,
    max_drift: f64,
}

impl Gillespie {
    pub fn new(params: ModelParams<f64>, init: EpidemicState) -> Result<Self, CtmcError> {
        params.validate()?;
        if !init.t.is_finite() {
            return Err(domain("initial time", init.t, "finite"));
        }
        let rates = category_rates(&params, &init);
        Ok(Self {
            params,
            state: init,
            population: init.population(),
            total: rates.iter().sum(),
            rates,
            clock: CompensatedSum::new(init.t),
            events: 0,
            max_drift: 0.0,
        })
    }

    pub fn state(&self) -> &EpidemicState {
        &self.state
    }

    pub fn params(&self) -> &ModelParams<f64> {
        &self.params
    }

    /// Incrementally maintained total rate.
    pub fn total_rate(&self) -> f64 {
        self.total
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Largest relative drift of the maintained total seen at a resync.
    pub fn max_rate_drift(&self) -> f64 {
        self.max_drift
    }

    /// Recomputes every rate and the total, recording the drift.
    pub fn resync(&mut self) -> Result<(), CtmcError> {
        self.rates = category_rates(&self.params, &self.state);
        let exact: f64 = self.rates.iter().sum();
        let drift = if exact > 0.0 {
            ((self.total - exact) / exact).abs()
        } else {
            self.total.abs()
        };
        self.max_drift = self.max_drift.max(drift);
        self.total = exact;
        if drift > MAX_RATE_DRIFT {
            return Err(CtmcError::RateDrift(drift));
        }
        Ok(())
    }

    /// Advances to the next event if it occurs no later than `until`.
    /// Otherwise moves the clock to `until` (exact by memorylessness) and
    /// returns `None`.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        until: f64,
    ) -> Result<Option<EventKind>, CtmcError> {
        if !(self.total > 0.0) {
            return Err(CtmcError::AbsorbedEmpty);
        }
        let e: f64 = rng.sample(Exp1);
        let u: f64 = rng.random();
        let dt = e / self.total;
        if self.state.t + dt > until {
            self.clock = CompensatedSum::new(until);
            self.state.t = until;
            return Ok(None);
        }
        let kind = choose(&self.rates, u * self.total);
        self.clock.add(dt);
        self.state.t = self.clock.value();
        self.state.apply(kind);
        self.population = self
            .population
            .checked_add_signed(kind.population_change())
            .expect("population bookkeeping");
        self.events += 1;

        let p = &self.params;
        let (s, i, r) = (self.state.s as f64, self.state.i as f64, self.state.r as f64);
        let fresh = [p.mu * s, p.mu * i, p.mu * r, p.lambda() * s * i / p.n, p.gamma * i];
        let mut delta = 0.0;
        for (old, new) in self.rates[2..].iter_mut().zip(fresh) {
            delta += new - *old;
            *old = new;
        }
        self.total += delta;

        if cfg!(debug_assertions) || self.events % 1024 == 0 {
            assert_eq!(self.state.population(), self.population, "conservation violated");
        }
        if self.events % RESYNC_INTERVAL == 0 {
            self.resync()?;
        }
        Ok(Some(kind))
    }
}

/// Receives the trajectory of a run. `on_event` gets the state right after
/// each event, with `t` the event time; `on_finish` gets the state at the end
/// of the run, with `t` the end time.
pub trait Recorder {
    fn on_start(&mut self, _state: &EpidemicState) {}
    fn on_event(&mut self, state: &EpidemicState, kind: EventKind);
    fn on_finish(&mut self, _state: &EpidemicState) {}
    /// Once this returns true the run may stop before its horizon.
    fn done(&self) -> bool {
        false
    }
}

impl Recorder for () {
    fn on_event(&mut self, _: &EpidemicState, _: EventKind) {}
}

impl<R: Recorder + ?Sized> Recorder for &mut R {
    fn on_start(&mut self, state: &EpidemicState) {
        (**self).on_start(state)
    }
    fn on_event(&mut self, state: &EpidemicState, kind: EventKind) {
        (**self).on_event(state, kind)
    }
    fn on_finish(&mut self, state: &EpidemicState) {
        (**self).on_finish(state)
    }
    fn done(&self) -> bool {
        (**self).done()
    }
}

macro_rules! tuple_recorder {
    ($($name:ident : $idx:tt),+) => {
        impl<$($name: Recorder),+> Recorder for ($($name,)+) {
            fn on_start(&mut self, state: &EpidemicState) {
                $(self.$idx.on_start(state);)+
            }
            fn on_event(&mut self, state: &EpidemicState, kind: EventKind) {
                $(self.$idx.on_event(state, kind);)+
            }
            fn on_finish(&mut self, state: &EpidemicState) {
                $(self.$idx.on_finish(state);)+
            }
            fn done(&self) -> bool {
                true $(&& self.$idx.done())+
            }
        }
    };
}

tuple_recorder!(A: 0, B: 1);
tuple_recorder!(A: 0, B: 1, C: 2);
tuple_recorder!(A: 0, B: 1, C: 2, D: 3);
tuple_recorder!(A: 0, B: 1, C: 2, D: 3, E: 4);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_events: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_state: EpidemicState,
    pub events: u64,
    pub max_rate_drift: f64,
    /// The recorder asked to stop before the horizon.
    pub stopped_early: bool,
}

/// Simulates from `init` until time `init.t + horizon`, feeding `recorder`.
///
/// When the event budget runs out the recorder is still finished at the
/// current time, so what it holds is a valid record of the partial run.
pub fn run<Rec: Recorder + ?Sized, R: Rng + ?Sized>(
    params: &ModelParams<f64>,
    init: EpidemicState,
    horizon: f64,
    recorder: &mut Rec,
    rng: &mut R,
    opts: RunOptions,
) -> Result<RunSummary, CtmcError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(domain("horizon", horizon, "[0, inf)"));
    }
    let mut sim = Gillespie::new(*params, init)?;
    let end = init.t + horizon;
    recorder.on_start(sim.state());
    let mut stopped_early = false;
    loop {
        if recorder.done() {
            stopped_early = true;
            break;
        }
        if sim.events() >= opts.max_events {
            recorder.on_finish(sim.state());
            return Err(CtmcError::EventBudgetExceeded {
                limit: opts.max_events,
                t: sim.state().t,
            });
        }
        match sim.advance(rng, end)? {
            Some(kind) => recorder.on_event(sim.state(), kind),
            None => break,
        }
    }
    recorder.on_finish(sim.state());
    Ok(RunSummary {
        final_state: *sim.state(),
        events: sim.events(),
        max_rate_drift: sim.max_rate_drift(),
        stopped_early,
    })
}

/// Counts are stored as `u32`; populations beyond four billion are out of reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub t: f64,
    pub s: u32,
    pub i: u32,
    pub r: u32,
    pub kind: EventKind,
}

impl LogEntry {
    pub fn state(&self) -> EpidemicState {
        EpidemicState {
            s: self.s.into(),
            i: self.i.into(),
            r: self.r.into(),
            t: self.t,
        }
    }
}

/// Complete event-by-event record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    n: f64,
    initial: EpidemicState,
    entries: Vec<LogEntry>,
    end: f64,
}

impl EventLog {
    pub fn new(n: f64) -> Self {
        Self {
            n,
            initial: EpidemicState::new(0, 0, 0),
            entries: Vec::new(),
            end: 0.0,
        }
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn initial(&self) -> &EpidemicState {
        &self.initial
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    /// End time of the recorded run.
    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn final_state(&self) -> EpidemicState {
        let mut st = self.entries.last().map_or(self.initial, LogEntry::state);
        st.t = self.end;
        st
    }

    /// Feeds the recorded run to another recorder.
    pub fn replay<Rec: Recorder + ?Sized>(&self, rec: &mut Rec) {
        rec.on_start(&self.initial);
        for e in &self.entries {
            rec.on_event(&e.state(), e.kind);
        }
        rec.on_finish(&self.final_state());
    }
}

impl Recorder for EventLog {
    fn on_start(&mut self, state: &EpidemicState) {
        self.initial = *state;
        self.entries.clear();
        self.end = state.t;
    }

    fn on_event(&mut self, state: &EpidemicState, kind: EventKind) {
        let narrow = |x: u64| u32::try_from(x).expect("count exceeds u32");
        self.entries.push(LogEntry {
            t: state.t,
            s: narrow(state.s),
            i: narrow(state.i),
            r: narrow(state.r),
            kind,
        });
    }

    fn on_finish(&mut self, state: &EpidemicState) {
        self.end = state.t;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub s: u64,
    pub i: u64,
    pub r: u64,
    pub n_total: u64,
}

/// State on the grid `t0, t0 + stride, ...` strictly before the end time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    stride: f64,
    next: f64,
    k: u64,
    t0: f64,
    last: Option<EpidemicState>,
    rows: Vec<TimeSeriesRow>,
}

impl TimeSeries {
    pub fn new(stride: f64) -> Self {
        assert!(stride > 0.0 && stride.is_finite(), "stride must be positive");
        Self {
            stride,
            next: 0.0,
            k: 0,
            t0: 0.0,
            last: None,
            rows: Vec::new(),
        }
    }

    pub fn rows(&self) -> &[TimeSeriesRow] {
        &self.rows
    }

    fn flush_before(&mut self, t: f64) {
        let Some(st) = self.last else { return };
        while self.next < t {
            self.rows.push(TimeSeriesRow {
                t: self.next,
                s: st.s,
                i: st.i,
                r: st.r,
                n_total: st.population(),
            });
            self.k += 1;
            self.next = self.t0 + self.stride * self.k as f64;
        }
    }
}

impl Recorder for TimeSeries {
    fn on_start(&mut self, state: &EpidemicState) {
        self.rows.clear();
        self.t0 = state.t;
        self.next = state.t;
        self.k = 0;
        self.last = Some(*state);
    }

    fn on_event(&mut self, state: &EpidemicState, _: EventKind) {
        self.flush_before(state.t);
        self.last = Some(*state);
    }

    fn on_finish(&mut self, state: &EpidemicState) {
        self.flush_before(state.t);
    }
}

/// Time spent by `S/n` in each bin of a uniform histogram on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyRecorder {
    n: f64,
    hist: Histogram<f64>,
    last_t: f64,
    last_s_bar: f64,
}

impl OccupancyRecorder {
    pub fn new(n: f64, bins: usize) -> Self {
        Self {
            n,
            hist: Histogram::uniform(0.0, 1.0, bins),
            last_t: 0.0,
            last_s_bar: 0.0,
        }
    }

    /// Unnormalized times per bin; they sum to the run length.
    pub fn time_histogram(&self) -> &Histogram<f64> {
        &self.hist
    }

    fn advance(&mut self, state: &EpidemicState) {
        let dt = state.t - self.last_t;
        if dt > 0.0 {
            self.hist.add_value(self.last_s_bar, dt);
        }
        self.last_t = state.t;
        self.last_s_bar = state.s_bar(self.n);
    }
}

impl Recorder for OccupancyRecorder {
    fn on_start(&mut self, state: &EpidemicState) {
        self.hist = Histogram::uniform(0.0, 1.0, self.hist.bins());
        self.last_t = state.t;
        self.last_s_bar = state.s_bar(self.n);
    }

    fn on_event(&mut self, state: &EpidemicState, _: EventKind) {
        self.advance(state);
    }

    fn on_finish(&mut self, state: &EpidemicState) {
        self.advance(state);
    }
}

/// Infective-count threshold `ceil(ln n)` (at least 1) that delineates outbreaks.
pub fn outbreak_threshold(n: f64) -> u64 {
    (n.ln().ceil() as u64).max(1)
}

/// An outbreak: infectives reach the threshold at `t_k` and die out at `u_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutbreakMarker {
    pub k: usize,
    pub t_k: f64,
    pub u_k: f64,
    /// Extremes of `S/n` over `[t_k, u_k]`.
    pub s_min: f64,
    pub s_max: f64,
    /// Infection events in `[t_k, u_k]`.
    pub infections: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OpenOutbreak {
    t_k: f64,
    s_min: f64,
    s_max: f64,
    infections: u64,
}

/// Streaming outbreak delineation. An outbreak still running when the
/// record ends has no `u_k` and is not reported.
#[derive(Debug, Clone, PartialEq)]
pub struct OutbreakDetector {
    n: f64,
    threshold: u64,
    open: Option<OpenOutbreak>,
    markers: Vec<OutbreakMarker>,
}

impl OutbreakDetector {
    pub fn new(n: f64) -> Self {
        Self::with_threshold(n, outbreak_threshold(n))
    }

    pub fn with_threshold(n: f64, threshold: u64) -> Self {
        Self {
            n,
            threshold,
            open: None,
            markers: Vec::new(),
        }
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn markers(&self) -> &[OutbreakMarker] {
        &self.markers
    }

    pub fn into_markers(self) -> Vec<OutbreakMarker> {
        self.markers
    }

    /// Whether an outbreak has started and not yet ended.
    pub fn in_outbreak(&self) -> bool {
        self.open.is_some()
    }

    fn observe(&mut self, state: &EpidemicState, infection: bool) {
        let s_bar = state.s_bar(self.n);
        match &mut self.open {
            None => {
                if state.i >= self.threshold {
                    self.open = Some(OpenOutbreak {
                        t_k: state.t,
                        s_min: s_bar,
                        s_max: s_bar,
                        infections: u64::from(infection),
                    });
                }
            }
            Some(o) => {
                o.s_min = o.s_min.min(s_bar);
                o.s_max = o.s_max.max(s_bar);
                o.infections += u64::from(infection);
                if state.i == 0 {
                    self.markers.push(OutbreakMarker {
                        k: self.markers.len(),
                        t_k: o.t_k,
                        u_k: state.t,
                        s_min: o.s_min,
                        s_max: o.s_max,
                        infections: o.infections,
                    });
                    self.open = None;
                }
            }
        }
    }
}

impl Recorder for OutbreakDetector {
    fn on_start(&mut self, state: &EpidemicState) {
        self.open = None;
        self.markers.clear();
        self.observe(state, false);
    }

    fn on_event(&mut self, state: &EpidemicState, kind: EventKind) {
        self.observe(state, kind == EventKind::Infection);
    }
}

/// Outbreak markers of a complete event log, with threshold `ceil(ln n)`.
pub fn delineate_outbreaks(log: &EventLog) -> Vec<OutbreakMarker> {
    let mut det = OutbreakDetector::new(log.n());
    log.replay(&mut det);
    det.into_markers()
}

/// First-passage functional of `S/n` to level `a`: the first time it
/// reaches `a` from below when it starts at or below `a`, or drops to `a`
/// or lower when it starts above.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageRecorder {
    n: f64,
    a: f64,
    from_below: bool,
    hit: Option<f64>,
    stop_when_hit: bool,
}

impl FirstPassageRecorder {
    pub fn new(n: f64, a: f64) -> Self {
        Self {
            n,
            a,
            from_below: true,
            hit: None,
            stop_when_hit: false,
        }
    }

    /// Lets the run stop as soon as the level is reached.
    pub fn stopping(mut self) -> Self {
        self.stop_when_hit = true;
        self
    }

    pub fn time(&self) -> Option<f64> {
        self.hit
    }

    fn check(&mut self, state: &EpidemicState) {
        if self.hit.is_some() {
            return;
        }
        let v = state.s_bar(self.n);
        let crossed = if self.from_below { v >= self.a } else { v <= self.a };
        if crossed {
            self.hit = Some(state.t);
        }
    }
}

impl Recorder for FirstPassageRecorder {
    fn on_start(&mut self, state: &EpidemicState) {
        self.hit = None;
        self.from_below = state.s_bar(self.n) <= self.a;
        self.check(state);
    }

    fn on_event(&mut self, state: &EpidemicState, _: EventKind) {
        self.check(state);
    }

    fn done(&self) -> bool {
        self.stop_when_hit && self.hit.is_some()
    }
}

/// Follows importations that arrive while `S/n < 1/r0` and no infective is
/// present, and counts those whose chain of infection reaches the outbreak
/// threshold before dying out.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportationTracker {
    n: f64,
    critical: f64,
    threshold: u64,
    last_i: u64,
    following: bool,
    importations: u64,
    reached: u64,
}

impl ImportationTracker {
    pub fn new(params: &ModelParams<f64>) -> Self {
        Self {
            n: params.n,
            critical: params.critical_level(),
            threshold: outbreak_threshold(params.n),
            last_i: 0,
            following: false,
            importations: 0,
            reached: 0,
        }
    }

    /// Subcritical importations followed so far.
    pub fn importations(&self) -> u64 {
        self.importations
    }

    /// Of those, the ones whose chain reached the threshold.
    pub fn reached(&self) -> u64 {
        self.reached
    }
}

impl Recorder for ImportationTracker {
    fn on_start(&mut self, state: &EpidemicState) {
        self.last_i = state.i;
        self.following = false;
        self.importations = 0;
        self.reached = 0;
    }

    fn on_event(&mut self, state: &EpidemicState, kind: EventKind) {
        if self.following {
            if state.i >= self.threshold {
                self.reached += 1;
                self.following = false;
            } else if state.i == 0 {
                self.following = false;
            }
        } else if kind == EventKind::InfectiveBirth
            && self.last_i == 0
            && state.s_bar(self.n) < self.critical
        {
            self.importations += 1;
            self.following = true;
        }
        self.last_i = state.i;
    }
}

/// `S/n` with every outbreak window `[t_k, u_k)` replaced by the minimum
/// (lower) or maximum (upper) of `S/n` over `[t_k, u_k]`. All three are
/// piecewise constant, with one value per event of the log.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPaths {
    times: Vec<f64>,
    end: f64,
    base: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    in_window: Vec<bool>,
}

/// Builds the sandwich paths of `log` from its outbreak markers.
pub fn sandwich(log: &EventLog, markers: &[OutbreakMarker]) -> SandwichPaths {
    let n = log.n();
    let mut times = Vec::with_capacity(log.entries().len() + 1);
    let mut base = Vec::with_capacity(log.entries().len() + 1);
    times.push(log.initial().t);
    base.push(log.initial().s_bar(n));
    for e in log.entries() {
        times.push(e.t);
        base.push(f64::from(e.s) / n);
    }
    let mut lower = base.clone();
    let mut upper = base.clone();
    let mut in_window = vec![false; base.len()];
    for m in markers {
        let first = times.partition_point(|&t| t < m.t_k);
        let stop = times.partition_point(|&t| t < m.u_k);
        let closed = times.partition_point(|&t| t <= m.u_k);
        let window = &base[first..closed];
        let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for j in first..stop {
            lower[j] = lo;
            upper[j] = hi;
            in_window[j] = true;
        }
    }
    SandwichPaths {
        times,
        end: log.end(),
        base,
        lower,
        upper,
        in_window,
    }
}

impl SandwichPaths {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Event indices where `lower <= base <= upper` fails, or where the
    /// three differ outside an outbreak window.
    pub fn violations(&self) -> Vec<usize> {
        (0..self.base.len())
            .filter(|&j| {
                let (l, b, u) = (self.lower[j], self.base[j], self.upper[j]);
                !(l <= b && b <= u) || (!self.in_window[j] && (l != b || u != b))
            })
            .collect()
    }

    fn time_histogram(&self, values: &[f64], bins: usize) -> Histogram<f64> {
        let mut h = Histogram::uniform(0.0, 1.0, bins);
        for (j, &v) in values.iter().enumerate() {
            let until = self.times.get(j + 1).copied().unwrap_or(self.end);
            let dt = until - self.times[j];
            if dt > 0.0 {
                h.add_value(v, dt);
            }
        }
        h
    }

    /// Normalized occupancy histograms of `(base, lower, upper)`.
    pub fn occupancy_histograms(&self, bins: usize) -> [Histogram<f64>; 3] {
        [&self.base, &self.lower, &self.upper].map(|v| self.time_histogram(v, bins).normalized())
    }
}

/// First-passage time to `a` and time at or below `a` in `[0, t_star]`
/// (relative to the start of the log) of the piecewise-constant `S/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalEstimates {
    pub first_passage: Option<f64>,
    pub occupancy: f64,
}

pub fn functional_estimates(
    log: &EventLog,
    a: f64,
    t_star: f64,
) -> Result<FunctionalEstimates, CtmcError> {
    let t0 = log.initial().t;
    let span = log.end() - t0;
    if !(t_star >= 0.0 && t_star <= span) {
        return Err(domain("t_star", t_star, "[0, run length]"));
    }
    let mut fp = FirstPassageRecorder::new(log.n(), a);
    log.replay(&mut fp);

    let cutoff = t0 + t_star;
    let n = log.n();
    let mut occupancy = 0.0;
    let mut prev_t = t0;
    let mut prev_v = log.initial().s_bar(n);
    for e in log.entries() {
        if e.t >= cutoff {
            break;
        }
        if prev_v <= a {
            occupancy += e.t - prev_t;
        }
        prev_t = e.t;
        prev_v = f64::from(e.s) / n;
    }
    if prev_v <= a {
        occupancy += cutoff - prev_t;
    }
    Ok(FunctionalEstimates {
        first_passage: fp.time().map(|t| t - t0),
        occupancy,
    })
}

/// Convenience: a run recorded into a full event log.
pub fn run_logged<R: Rng + ?Sized>(
    params: &ModelParams<f64>,
    init: EpidemicState,
    horizon: f64,
    rng: &mut R,
    opts: RunOptions,
) -> Result<(EventLog, RunSummary), CtmcError> {
    let mut log = EventLog::new(params.n);
    let summary = run(params, init, horizon, &mut log, rng, opts)?;
    Ok((log, summary))
}

/// Whether an outbreak counts as major: it started above `1/r0` and
/// infected at least `ceil(sqrt(n))` individuals after crossing the threshold.
pub fn is_major(marker: &OutbreakMarker, params: &ModelParams<f64>) -> bool {
    marker.s_max > params.critical_level() && marker.infections as f64 >= params.n.sqrt().ceil()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn fig1(kappa: f64) -> ModelParams<f64> {
        ModelParams::new(1e4, 1.0 / 75.0, 2.0, 50.0, kappa).unwrap()
    }

    #[test]
    fn empty_state_only_births() {
        let p = fig1(20.0);
        let rates = category_rates(&p, &EpidemicState::new(0, 0, 0));
        let total: f64 = rates.iter().sum();
        assert!((total - p.mu * p.n).abs() < 1e-12 * total);
        assert!((rates[1] / total - p.kappa_n()).abs() < 1e-15);
        assert!(rates[2..].iter().all(|&q| q == 0.0));
    }

    #[test]
    fn infection_rate_formula() {
        let p = fig1(20.0);
        let st = EpidemicState::new(6000, 15, 3985);
        let rates = category_rates(&p, &st);
        assert_eq!(rates[5], p.lambda() * 6000.0 * 15.0 / p.n);
        assert_eq!(rates[6], p.gamma * 15.0);
    }

    #[test]
    fn step_changes_counts_by_one() {
        let p = fig1(20.0);
        let mut rng = rng_from_seed(3);
        let mut st = EpidemicState::new(5000, 20, 4980);
        for _ in 0..10_000 {
            let (next, kind) = step(&st, &p, &mut rng).unwrap();
            assert!(next.t > st.t);
            let diff = next.population() as i64 - st.population() as i64;
            assert_eq!(diff, kind.population_change());
            st = next;
        }
    }

    #[test]
    fn zero_horizon_is_no_op() {
        let p = fig1(20.0);
        let init = EpidemicState::from_fractions(p.n, 0.5, 0.0).unwrap();
        let mut log = EventLog::new(p.n);
        let out = run(&p, init, 0.0, &mut log, &mut rng_from_seed(1), RunOptions::default()).unwrap();
        assert_eq!(out.events, 0);
        assert_eq!(out.final_state, init);
        assert!(log.entries().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let p = fig1(20.0);
        let init = EpidemicState::from_fractions(p.n, 0.5, 0.0).unwrap();
        let err = run(&p, init, 100.0, &mut (), &mut rng_from_seed(1), RunOptions { max_events: 100 })
            .unwrap_err();
        assert!(matches!(err, CtmcError::EventBudgetExceeded { limit: 100, .. }));
    }

    #[test]
    fn threshold_is_ceiling_of_natural_log() {
        assert_eq!(outbreak_threshold(1e4), 10);
        assert_eq!(outbreak_threshold(1e3), 7);
        assert_eq!(outbreak_threshold(1e5), 12);
        assert_eq!(outbreak_threshold(2.0), 1);
    }

    #[test]
    fn default_initial_state() {
        let st = EpidemicState::from_fractions(1e4, 0.6, 0.0).unwrap();
        assert_eq!((st.s, st.i, st.r), (6000, 0, 4000));
        assert!(EpidemicState::from_fractions(1e4, 0.6, 0.5).is_err());
    }

    #[test]
    fn time_series_grid_is_half_open() {
        let p = fig1(20.0);
        let init = EpidemicState::from_fractions(p.n, 0.5, 0.0).unwrap();
        let mut ts = TimeSeries::new(0.5);
        run(&p, init, 2.0, &mut ts, &mut rng_from_seed(2), RunOptions::default()).unwrap();
        let t: Vec<f64> = ts.rows().iter().map(|r| r.t).collect();
        assert_eq!(t, vec![0.0, 0.5, 1.0, 1.5]);
        assert_eq!(ts.rows()[0].s, 5000);
    }

    #[test]
    fn occupancy_recorder_sums_to_run_length() {
        let p = fig1(20.0);
        let init = EpidemicState::from_fractions(p.n, 0.5, 0.0).unwrap();
        let mut occ = OccupancyRecorder::new(p.n, 50);
        run(&p, init, 10.0, &mut occ, &mut rng_from_seed(4), RunOptions::default()).unwrap();
        assert!((occ.time_histogram().total() - 10.0).abs() < 1e-9);
    }
}
