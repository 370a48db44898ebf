//! The limiting regenerative process `S` of the susceptible fraction.
//!
//! A realization is stored exactly: a list of segments, each following the
//! deterministic growth `1 - (1 - v) exp(-mu (t - t_start))` from its start
//! value, separated by instantaneous down jumps at major outbreaks. Every
//! path functional below is evaluated in closed form per segment.

use rand::Rng;
use rand_distr::{Exp1, Open01};
use thiserror::Error;

use crate::analytic::{growth, solve_tau, AnalyticError, LimitModel};
use crate::scalar::Scalar;
use crate::stats::Histogram;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("{what} = {value} outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("no importation (kappa = 0): the process never jumps")]
    NoImportation,
}

fn domain<T: Scalar>(what: &'static str, value: T, domain: &'static str) -> LimitError {
    LimitError::Domain {
        what,
        value: value.as_f64(),
        domain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub t_start: T,
    pub v_start: T,
}

/// A major outbreak in the limit: an instantaneous drop from `pre_value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<T> {
    pub time: T,
    pub pre_value: T,
    pub post_value: T,
    pub jump_size: T,
}

/// One regenerative cycle started at level `1/r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord<T> {
    /// Time from the renewal to the jump.
    pub t_jump: T,
    /// Jump size.
    pub x: T,
    /// Cycle length.
    pub t_star: T,
}

/// Exact piecewise representation of a realization on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath<T> {
    mu: T,
    r0: T,
    horizon: T,
    segments: Vec<Segment<T>>,
    jumps: Vec<JumpEvent<T>>,
}

impl<T: Scalar> LimitPath<T> {
    /// A path with no jumps: deterministic growth from `s0`.
    pub fn pure_growth(s0: T, horizon: T, mu: T, r0: T) -> Self {
        Self {
            mu,
            r0,
            horizon,
            segments: vec![Segment {
                t_start: T::zero(),
                v_start: s0,
            }],
            jumps: Vec::new(),
        }
    }

    pub fn s_start(&self) -> T {
        self.segments[0].v_start
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn jumps(&self) -> &[JumpEvent<T>] {
        &self.jumps
    }

    /// End time of segment `k` (the next jump, or the horizon).
    fn segment_end(&self, k: usize) -> T {
        self.segments
            .get(k + 1)
            .map_or(self.horizon, |s| s.t_start)
    }

    /// Time at which segment `k` reaches `level` (may lie beyond its end).
    fn level_time(&self, k: usize, level: T) -> T {
        let seg = self.segments[k];
        if level <= seg.v_start {
            return seg.t_start;
        }
        if level >= T::one() {
            return T::infinity();
        }
        seg.t_start + ((T::one() - seg.v_start) / (T::one() - level)).ln() / self.mu
    }

    /// Right-continuous value at time `t` within `[0, horizon]`.
    pub fn value_at(&self, t: T) -> T {
        let k = self
            .segments
            .partition_point(|s| s.t_start <= t)
            .saturating_sub(1);
        let seg = self.segments[k];
        growth(seg.v_start, t - seg.t_start, self.mu)
    }

    /// First-passage functional: the first time the path reaches `a` from
    /// below (when it starts at or below `a`), or drops to `a` or lower
    /// (when it starts above). `None` if that never happens by the horizon.
    pub fn first_passage(&self, a: T) -> Option<T> {
        if self.s_start() <= a {
            for k in 0..self.segments.len() {
                let t_cross = self.level_time(k, a);
                let t_end = self.segment_end(k);
                let last = k + 1 == self.segments.len();
                if t_cross == self.segments[k].t_start || t_cross < t_end || last && t_cross <= t_end {
                    return Some(t_cross);
                }
            }
            None
        } else {
            // Growth never decreases, so only a jump can carry the path down.
            self.jumps.iter().find(|j| j.post_value <= a).map(|j| j.time)
        }
    }

    /// Time in `[0, t_star]` spent at or below `a`.
    pub fn occupancy(&self, a: T, t_star: T) -> Result<T, LimitError> {
        if !(t_star >= T::zero() && t_star <= self.horizon) {
            return Err(domain("t_star", t_star, "[0, horizon]"));
        }
        let mut total = T::zero();
        for k in 0..self.segments.len() {
            let start = self.segments[k].t_start;
            if start >= t_star {
                break;
            }
            let end = self.segment_end(k).min(t_star);
            if self.segments[k].v_start > a {
                continue;
            }
            let leave = self.level_time(k, a).min(end);
            total = total + (leave - start);
        }
        // Summing segment lengths can overshoot by an ulp.
        Ok(total.min(t_star))
    }

    /// Time spent in each of `bins` uniform bins on `[0, 1]`; sums to the horizon.
    pub fn occupancy_time_histogram(&self, bins: usize) -> Histogram<T> {
        let mut h = Histogram::uniform(T::zero(), T::one(), bins);
        for k in 0..self.segments.len() {
            let start = self.segments[k].t_start;
            let end = self.segment_end(k);
            if end <= start {
                continue;
            }
            let first = h.bin_of(self.segments[k].v_start);
            for b in first..bins {
                let (lo, hi) = h.bin_bounds(b);
                let enter = self.level_time(k, lo).max(start);
                if enter >= end {
                    break;
                }
                let leave = if b + 1 == bins {
                    end
                } else {
                    self.level_time(k, hi).min(end)
                };
                if leave > enter {
                    h.add_mass(b, leave - enter);
                }
            }
        }
        h
    }

    /// Fraction of time spent per bin, normalized to unit mass.
    pub fn occupancy_histogram(&self, bins: usize) -> Histogram<T> {
        self.occupancy_time_histogram(bins).normalized()
    }

    /// Rows `(t, s)` on the grid `0, dt, 2 dt, ...` plus the exact pre- and
    /// post-jump values at every jump time, in time order.
    pub fn sample(&self, dt: T) -> Vec<(T, T)> {
        assert!(dt > T::zero(), "sampling step must be positive");
        let mut rows = Vec::new();
        let mut jumps = self.jumps.iter().peekable();
        let mut k = 0usize;
        loop {
            let t = dt * T::from_count(k);
            if t > self.horizon {
                break;
            }
            while let Some(j) = jumps.next_if(|j| j.time <= t) {
                rows.push((j.time, j.pre_value));
                rows.push((j.time, j.post_value));
            }
            if rows.last().is_none_or(|&(last, _)| last < t) {
                rows.push((t, self.value_at(t)));
            }
            k += 1;
        }
        for j in jumps {
            rows.push((j.time, j.pre_value));
            rows.push((j.time, j.post_value));
        }
        rows
    }

    /// Complete regenerative cycles of the path: each runs from an upward
    /// passage through `1/r0` to the next one, with exactly one jump in
    /// between. A cycle cut off by the start or the horizon is left out.
    pub fn cycles(&self) -> Vec<CycleRecord<T>> {
        let crit = self.r0.recip();
        let renewal = |k: usize| {
            let t = self.level_time(k, crit);
            (self.segments[k].v_start < crit && t <= self.segment_end(k)).then_some(t)
        };
        let mut out = Vec::new();
        for (k, j) in self.jumps.iter().enumerate() {
            if let (Some(start), Some(next)) = (renewal(k), renewal(k + 1)) {
                out.push(CycleRecord {
                    t_jump: j.time - start,
                    x: j.jump_size,
                    t_star: next - start,
                });
            }
        }
        out
    }

    /// Checks the structural invariants of a realization. Returns a
    /// description of the first violation found.
    pub fn check_invariants(&self, tau_one: T) -> Result<(), String> {
        let tol = T::lit(1e-12);
        let crit = self.r0.recip();
        if self.segments.len() != self.jumps.len() + 1 {
            return Err("every jump must start exactly one segment".into());
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.v_start > T::zero() && seg.v_start < T::one()) {
                return Err(format!("segment {k} starts at {} outside (0, 1)", seg.v_start));
            }
            if k > 0 && seg.t_start < self.segments[k - 1].t_start {
                return Err(format!("segment {k} out of time order"));
            }
        }
        for (k, j) in self.jumps.iter().enumerate() {
            let prev = self.segments[k];
            let next = self.segments[k + 1];
            if next.t_start != j.time || next.v_start != j.post_value {
                return Err(format!("jump {k} does not begin segment {}", k + 1));
            }
            let grown = growth(prev.v_start, j.time - prev.t_start, self.mu);
            if (grown - j.pre_value).abs() > tol {
                return Err(format!("jump {k}: pre value {} != grown {grown}", j.pre_value));
            }
            if !(j.pre_value > crit) {
                return Err(format!("jump {k}: pre value {} not above 1/r0", j.pre_value));
            }
            if !(j.jump_size > T::zero() && j.jump_size < tau_one) {
                return Err(format!("jump {k}: size {} outside (0, tau(1))", j.jump_size));
            }
            let expected = j.pre_value * (-self.r0 * j.jump_size).exp();
            if (expected - j.post_value).abs() > tol {
                return Err(format!("jump {k}: post value {} != pre * exp(-r0 x)", j.post_value));
            }
            if (j.pre_value - j.post_value - j.jump_size).abs() > tol {
                return Err(format!("jump {k}: size inconsistent with levels"));
            }
        }
        Ok(())
    }
}

enum Stop<T> {
    Horizon(T),
    Jumps(usize),
}

fn thinned<T: Scalar, R: Rng + ?Sized>(
    model: &LimitModel<T>,
    s0: T,
    stop: Stop<T>,
    rng: &mut R,
) -> Result<LimitPath<T>, LimitError> {
    if !(s0 > T::zero() && s0 < T::one()) {
        return Err(domain("s0", s0, "(0, 1)"));
    }
    let p = model.params();
    let rate = p.importation_rate();
    let horizon = match stop {
        Stop::Horizon(h) => {
            if !(h > T::zero()) {
                return Err(domain("horizon", h, "(0, inf)"));
            }
            h
        }
        Stop::Jumps(_) if rate == T::zero() => return Err(LimitError::NoImportation),
        Stop::Jumps(_) => T::infinity(),
    };
    let max_jumps = match stop {
        Stop::Jumps(n) => n,
        Stop::Horizon(_) => usize::MAX,
    };
    let mut path = LimitPath::pure_growth(s0, horizon, p.mu, p.r0);
    if rate == T::zero() {
        return Ok(path);
    }
    let mut t = T::zero();
    while path.jumps.len() < max_jumps {
        let gap: f64 = rng.sample(Exp1);
        t = t + T::lit(gap) / rate;
        let accept_u: f64 = rng.random();
        if t > horizon {
            break;
        }
        let seg = *path.segments.last().expect("path has a segment");
        let pre = growth(seg.v_start, t - seg.t_start, p.mu);
        let accept = T::one() - (p.r0 * pre).recip();
        if T::lit(accept_u) < accept {
            let tau = solve_tau(p.r0, pre)?;
            let post = pre * (T::one() - tau);
            path.jumps.push(JumpEvent {
                time: t,
                pre_value: pre,
                post_value: post,
                jump_size: pre - post,
            });
            path.segments.push(Segment {
                t_start: t,
                v_start: post,
            });
        }
    }
    if let Stop::Jumps(_) = stop {
        path.horizon = t;
    }
    Ok(path)
}

/// Simulates `S` on `(0, horizon]` from `s0` by thinning a rate `mu kappa`
/// Poisson stream of importations: an importation at level `s` triggers a
/// jump with probability `max(1 - 1/(r0 s), 0)`.
pub fn simulate_thinned<T: Scalar, R: Rng + ?Sized>(
    model: &LimitModel<T>,
    s0: T,
    horizon: T,
    rng: &mut R,
) -> Result<LimitPath<T>, LimitError> {
    thinned(model, s0, Stop::Horizon(horizon), rng)
}

/// As [`simulate_thinned`], but runs until `n_jumps` jumps have occurred;
/// the horizon is the time of the last jump.
pub fn simulate_thinned_jumps<T: Scalar, R: Rng + ?Sized>(
    model: &LimitModel<T>,
    s0: T,
    n_jumps: usize,
    rng: &mut R,
) -> Result<LimitPath<T>, LimitError> {
    thinned(model, s0, Stop::Jumps(n_jumps), rng)
}

/// Samples `n_cycles` independent regenerative cycles: the jump time by
/// inverting its CDF, then the jump size and cycle length it determines.
pub fn simulate_cycles<T: Scalar, R: Rng + ?Sized>(
    model: &LimitModel<T>,
    n_cycles: usize,
    rng: &mut R,
) -> Result<Vec<CycleRecord<T>>, LimitError> {
    if model.params().kappa == T::zero() {
        return Err(LimitError::NoImportation);
    }
    (0..n_cycles)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            let t_jump = model.jump_time_quantile(T::lit(u));
            let pre = model.level_after_renewal(t_jump);
            let x = model.jump_size_at_level(pre);
            let t_star = model.cycle_length(x)?;
            Ok(CycleRecord { t_jump, x, t_star })
        })
        .collect()
}

/// Absolute jump times implied by consecutive cycles started at time zero.
pub fn cycle_jump_times<T: Scalar>(cycles: &[CycleRecord<T>]) -> Vec<T> {
    let mut renewal = T::zero();
    cycles
        .iter()
        .map(|c| {
            let at = renewal + c.t_jump;
            renewal = renewal + c.t_star;
            at
        })
        .collect()
}
