//! Closed-form and quadrature evaluation of the limit-process distributions.
//!
//! Notation used in doc comments: `S(u)` is the susceptible fraction `u`
//! years after a renewal (a visit to `1/r0`), `T` the time from a renewal to
//! the down jump, `X` the jump size and `T*` the cycle length.
//!
//! Two independent routes give the normalizing constant of the stationary
//! density: quadrature of the unnormalized density over its support
//! ([`LimitModel::density_mass`]) and the reciprocal of the mean cycle
//! length ([`LimitModel::mean_cycle_length`]). They must agree.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{adaptive_simpson, bisect, bracketed_root};
use crate::params::{ModelParams, ParamError};
use crate::scalar::Scalar;
use crate::stats::Histogram;

/// `r0 * x` below which `1 - x - exp(-r0 x)` switches to its Taylor series.
const SERIES_SWITCH: f64 = 1e-3;
/// Relative tolerance of every quadrature in this module.
const QUAD_REL_TOL: f64 = 1e-8;
/// Survival level at which the jump-time integral is truncated.
const TAIL_LOG_SURVIVAL: f64 = -45.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("no strictly positive final-size root: r0 * s = {0} <= 1")]
    SubcriticalDomain(f64),
    #[error("{what} = {value} outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },
    #[error(transparent)]
    Params(#[from] ParamError),
}

fn domain_err<T: Scalar>(what: &'static str, value: T, domain: String) -> AnalyticError {
    AnalyticError::Domain {
        what,
        value: value.as_f64(),
        domain,
    }
}

/// Relative final size: the unique root in `(0, 1)` of `1 - tau = exp(-r0 s tau)`.
pub fn solve_tau<T: Scalar>(r0: T, s: T) -> Result<T, AnalyticError> {
    let c = r0 * s;
    if !(c > T::one()) {
        return Err(AnalyticError::SubcriticalDomain(c.as_f64()));
    }
    // 1 - tau - exp(-c tau), without cancellation for small tau.
    let h = |tau: T| -(-c * tau).exp_m1() - tau;
    let dh = |tau: T| c * (-c * tau).exp() - T::one();

    // h(1 - 1/c) >= 0 because exp(c - 1) >= c; h(1) = -exp(-c) < 0.
    let mut lo = T::one() - c.recip();
    while h(lo) <= T::zero() && lo > T::min_positive_value() {
        lo = lo / T::lit(2.0);
    }
    let tol = T::epsilon() * T::lit(4.0);
    Ok(bracketed_root(h, dh, lo, T::one(), tol))
}

/// Deterministic growth of the susceptible fraction: `1 - (1 - x) exp(-mu t)`.
#[inline]
pub fn growth<T: Scalar>(x: T, t: T, mu: T) -> T {
    x - (T::one() - x) * (-mu * t).exp_m1()
}

/// Time for [`growth`] to carry level `from` up to level `to` (`from <= to < 1`).
#[inline]
pub fn growth_time<T: Scalar>(from: T, to: T, mu: T) -> T {
    ((T::one() - from) / (T::one() - to)).ln() / mu
}

/// Initial condition of the deterministic general epidemic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSizeInput<T> {
    pub s0: T,
    pub i0: T,
}

impl<T: Scalar> FinalSizeInput<T> {
    pub fn new(s0: T, i0: T) -> Result<Self, AnalyticError> {
        if !(s0 > T::zero() && s0 <= T::one()) {
            return Err(domain_err("s0", s0, "(0, 1]".into()));
        }
        if !(i0 >= T::zero()) {
            return Err(domain_err("i0", i0, "[0, inf)".into()));
        }
        if s0 + i0 > T::one() + T::lit(1e-9) {
            return Err(domain_err("s0 + i0", s0 + i0, "(0, 1]".into()));
        }
        Ok(Self { s0, i0 })
    }
}

/// Final susceptible fraction of the deterministic general epidemic with
/// `i0 > 0`: the root in `(0, s0)` of `s = s0 exp(-r0 (s0 + i0 - s))`.
pub fn final_size<T: Scalar>(input: FinalSizeInput<T>, r0: T) -> Result<T, AnalyticError> {
    let FinalSizeInput { s0, i0 } = input;
    if !(i0 > T::zero()) {
        return Err(domain_err("i0", i0, "(0, 1) (use final_size_without_infectives)".into()));
    }
    // phi is concave with phi(0) < 0 < phi(s0): exactly one root in between.
    let phi = |s: T| s - s0 * (-r0 * (s0 + i0 - s)).exp();
    let dphi = |s: T| T::one() - r0 * s0 * (-r0 * (s0 + i0 - s)).exp();
    let tol = T::epsilon() * T::lit(4.0);
    Ok(bracketed_root(phi, dphi, T::zero(), s0, tol))
}

/// The `i0 -> 0` limit of [`final_size`].
///
/// Supercritical starts (`r0 s0 > 1`) crash to `s0 (1 - tau(s0))`. Otherwise
/// the fixed-point equation's only root in `(0, s0]` is `s0` itself, so no
/// susceptibles are lost; this is the continuous limit, checked against the
/// ODE in the test suite.
pub fn final_size_without_infectives<T: Scalar>(s0: T, r0: T) -> T {
    match solve_tau(r0, s0) {
        Ok(tau) => s0 * (T::one() - tau),
        Err(_) => s0,
    }
}

/// `1 - x - exp(-r0 x)`, with a degree-8 series near `x = 0`.
fn one_minus_x_minus_exp<T: Scalar>(x: T, r0: T) -> T {
    let y = r0 * x;
    if y < T::lit(SERIES_SWITCH) {
        // 1 - exp(-y) = sum_{k>=1} (-1)^{k+1} y^k / k!
        let mut term = y;
        let mut tail = T::zero();
        for k in 2..=8 {
            term = -term * y / T::from_count(k);
            tail = tail + term;
        }
        (r0 - T::one()) * x + tail
    } else {
        -(-y).exp_m1() - x
    }
}

/// The limit process for supercritical parameters, with `tau(1)` and the
/// mean cycle length cached.
#[derive(Debug)]
pub struct LimitModel<T> {
    params: ModelParams<T>,
    tau_one: T,
    mean_cycle: OnceLock<T>,
}

impl<T: Scalar> Clone for LimitModel<T> {
    fn clone(&self) -> Self {
        Self {
            params: self.params,
            tau_one: self.tau_one,
            mean_cycle: self.mean_cycle.clone(),
        }
    }
}

impl<T: Scalar> LimitModel<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self, AnalyticError> {
        params.validate()?;
        params.require_supercritical()?;
        let tau_one = solve_tau(params.r0, T::one())?;
        Ok(Self {
            params,
            tau_one,
            mean_cycle: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    /// `tau(1)`: supremum of jump sizes.
    pub fn tau_one(&self) -> T {
        self.tau_one
    }

    /// Lower end `1 - tau(1)` of the stationary support.
    pub fn support_floor(&self) -> T {
        T::one() - self.tau_one
    }

    pub fn critical_level(&self) -> T {
        self.params.critical_level()
    }

    /// `S(u) = 1 - (1 - 1/r0) exp(-mu u)`, the level `u` years after a renewal.
    pub fn level_after_renewal(&self, u: T) -> T {
        growth(self.critical_level(), u, self.params.mu)
    }

    /// Inverse of [`Self::level_after_renewal`] for `1/r0 <= s < 1`.
    pub fn time_to_level(&self, s: T) -> T {
        growth_time(self.critical_level(), s, self.params.mu)
    }

    /// Instantaneous major-outbreak intensity `mu kappa (1 - 1/(r0 S(u)))`.
    pub fn jump_hazard(&self, u: T) -> T {
        let p = &self.params;
        let s = self.level_after_renewal(u);
        p.mu * p.kappa * (T::one() - (p.r0 * s).recip()).max(T::zero())
    }

    /// `ln P(T > t)`, evaluated without overflow for large `t`.
    pub fn jump_time_log_survival(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let ModelParams { mu, r0, kappa, .. } = self.params;
        // ln(r0 e^{mu t} - r0 + 1) = mu t + ln(r0 - (r0 - 1) e^{-mu t})
        let inner = (r0 - (r0 - T::one()) * (-mu * t).exp()).ln();
        -mu * kappa * t * (T::one() - r0.recip()) + kappa / r0 * inner
    }

    /// `P(T <= t) = 1 - exp(-mu kappa t) (r0 exp(mu t) - r0 + 1)^(kappa / r0)`.
    pub fn jump_time_cdf(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        -self.jump_time_log_survival(t).exp_m1()
    }

    /// Density of `T`: hazard times survival.
    pub fn jump_time_density(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        self.jump_hazard(t) * self.jump_time_log_survival(t).exp()
    }

    /// Inverse of [`Self::jump_time_cdf`], located by bisection on the
    /// survival function until it is within `1e-10` of `1 - p` (or the
    /// precision floor of `T`).
    pub fn jump_time_quantile(&self, p: T) -> T {
        if p <= T::zero() {
            return T::zero();
        }
        if p >= T::one() {
            return T::infinity();
        }
        let target = T::one() - p;
        let ln_target = target.ln();
        let surv = |t: T| self.jump_time_log_survival(t).exp();
        let mut hi = self.params.mu.recip();
        while self.jump_time_log_survival(hi) > ln_target {
            hi = hi * T::lit(2.0);
        }
        let prob_tol = T::lit(1e-10).max(T::epsilon() * T::lit(8.0));
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            let sm = surv(mid);
            if (sm - target).abs() <= prob_tol {
                return mid;
            }
            if sm > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / T::lit(2.0)
    }

    /// Level just before the jump, `S(T-) = x / (1 - exp(-r0 x))`.
    pub fn pre_jump_level(&self, x: T) -> T {
        if x <= T::zero() {
            return self.critical_level();
        }
        x / -(-self.params.r0 * x).exp_m1()
    }

    /// Jump size `s tau(s)` triggered at level `s`; zero when `r0 s <= 1`.
    pub fn jump_size_at_level(&self, s: T) -> T {
        solve_tau(self.params.r0, s).map_or(T::zero(), |tau| s * tau)
    }

    fn jump_size_log_survival(&self, x: T) -> T {
        let ModelParams { r0, kappa, .. } = self.params;
        let a = one_minus_x_minus_exp(x, r0);
        let b = -(-r0 * x).exp_m1();
        let rm1 = r0 - T::one();
        kappa * (r0.ln() + a.ln() - rm1.ln() - b.ln()) + kappa / r0 * (rm1.ln() + x.ln() - a.ln())
    }

    /// `P(X <= x)` for the jump size.
    pub fn jump_size_cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        if x >= self.tau_one {
            return T::one();
        }
        let ls = self.jump_size_log_survival(x);
        (-ls.exp_m1()).max(T::zero()).min(T::one())
    }

    /// `P(X > x)`, computed without subtracting from one.
    pub fn jump_size_survival(&self, x: T) -> T {
        if x <= T::zero() {
            return T::one();
        }
        if x >= self.tau_one {
            return T::zero();
        }
        self.jump_size_log_survival(x).exp().min(T::one())
    }

    fn check_jump_size(&self, x: T, closed_top: bool) -> Result<(), AnalyticError> {
        let ok = x >= T::zero() && (x < self.tau_one || closed_top && x == self.tau_one);
        if ok {
            Ok(())
        } else {
            let bracket = if closed_top { ']' } else { ')' };
            Err(domain_err(
                "jump size",
                x,
                format!("[0, {}{bracket}", self.tau_one),
            ))
        }
    }

    /// `g(x) = x / (exp(r0 x) - 1)`: the post-jump level `S(T)` for jump size `x`.
    ///
    /// Defined on `[0, tau(1)]` with the limit `1/r0` at zero.
    pub fn post_jump_level(&self, x: T) -> Result<T, AnalyticError> {
        self.check_jump_size(x, true)?;
        if x == T::zero() {
            return Ok(self.critical_level());
        }
        Ok(x / (self.params.r0 * x).exp_m1())
    }

    /// Inverse of [`Self::post_jump_level`] on `[1 - tau(1), 1/r0]`, by bisection.
    pub fn post_jump_level_inv(&self, s: T) -> Result<T, AnalyticError> {
        let floor = self.support_floor();
        let crit = self.critical_level();
        if !(s >= floor && s <= crit) {
            return Err(domain_err("post-jump level", s, format!("[{floor}, {crit}]")));
        }
        if s == crit {
            return Ok(T::zero());
        }
        if s == floor {
            return Ok(self.tau_one);
        }
        let r0 = self.params.r0;
        // g is decreasing; bracket on (0, tau(1)).
        let f = |x: T| {
            if x <= T::zero() {
                crit - s
            } else {
                x / (r0 * x).exp_m1() - s
            }
        };
        let (lo, hi) = bisect(f, T::zero(), self.tau_one, T::epsilon());
        Ok((lo + hi) / T::lit(2.0))
    }

    /// Cycle length `T*` for jump size `x`: the growth time from `S(T)` back
    /// up to `S(T-)`, `mu^-1 ln((1 - S(T)) / (1 - S(T-)))`.
    pub fn cycle_length(&self, x: T) -> Result<T, AnalyticError> {
        self.check_jump_size(x, false)?;
        if x == T::zero() {
            return Ok(T::zero());
        }
        // S(T-) - S(T) = x, so the ratio is 1 + x / (1 - S(T-)).
        let pre = self.pre_jump_level(x);
        Ok((x / (T::one() - pre)).ln_1p() / self.params.mu)
    }

    /// Same quantity through the expanded closed form
    /// `mu^-1 ln((e^{r0 x} - 1 - x) / ((1 - x) e^{r0 x} - 1))`.
    pub fn cycle_length_expanded(&self, x: T) -> Result<T, AnalyticError> {
        self.check_jump_size(x, false)?;
        let e = (self.params.r0 * x).exp();
        Ok(((e - T::one() - x) / ((T::one() - x) * e - T::one())).ln() / self.params.mu)
    }

    /// Cycle length as a function of the renewal-to-jump time `t`.
    fn cycle_length_from_jump_time(&self, t: T) -> T {
        let pre = self.level_after_renewal(t);
        let post = pre - self.jump_size_at_level(pre);
        let crit = self.critical_level();
        if post >= crit {
            return t;
        }
        t + growth_time(post, crit, self.params.mu)
    }

    /// `E[T*]` as the integral of `T*` against the jump-size law, written in
    /// the renewal-to-jump time `t` (the jump size is a monotone function of
    /// it) so that the weight is the exact density of `T`. Infinite when
    /// `kappa = 0`.
    pub fn mean_cycle_length(&self) -> T {
        *self.mean_cycle.get_or_init(|| {
            let p = &self.params;
            if p.kappa == T::zero() {
                return T::infinity();
            }
            let decay = p.mu * p.kappa * (T::one() - p.r0.recip());
            let t_max = (-T::lit(TAIL_LOG_SURVIVAL) + p.kappa / p.r0 * p.r0.ln()) / decay;
            // The density of T peaks within a few mean lifetimes; split there.
            let knee = (p.mu.recip() * T::lit(4.0)).min(t_max);
            let f = |t: T| self.cycle_length_from_jump_time(t) * self.jump_time_density(t);
            let tol = T::lit(QUAD_REL_TOL);
            adaptive_simpson(f, T::zero(), knee, tol) + adaptive_simpson(f, knee, t_max, tol)
        })
    }

    /// `c = 1 / E[T*]`.
    pub fn normalizing_constant(&self) -> T {
        self.mean_cycle_length().recip()
    }

    /// Exponent of the power substitution that flattens both support endpoints.
    fn substitution_power(&self) -> T {
        let p = &self.params;
        let edge = p.kappa * (T::one() - p.r0.recip());
        (T::lit(2.0) / edge).max(T::one())
    }

    /// `P(S(T) <= s <= S(T-))`, the probability that a cycle visits level `s`.
    pub fn visit_probability(&self, s: T) -> T {
        let p = &self.params;
        let crit = self.critical_level();
        if s <= self.support_floor() || s >= T::one() {
            return T::zero();
        }
        if s >= crit {
            // P(T >= time_to_level(s)) in closed form.
            let ln = p.kappa * p.r0.ln()
                + p.kappa / p.r0 * s.ln()
                + p.kappa * (T::one() - p.r0.recip()) * ((T::one() - s) / (p.r0 - T::one())).ln();
            ln.exp()
        } else {
            let x = self
                .post_jump_level_inv(s)
                .expect("level inside (1 - tau(1), 1/r0)");
            self.jump_size_survival(x)
        }
    }

    /// Stationary density without the constant `c`: `P(visit s) / (mu (1 - s))`.
    pub fn unnormalized_density(&self, s: T) -> T {
        let v = self.visit_probability(s);
        if v == T::zero() {
            return v;
        }
        v / (self.params.mu * (T::one() - s))
    }

    /// Density of the stationary law of `S`, zero outside `(1 - tau(1), 1)`.
    pub fn stationary_density(&self, s: T) -> T {
        let c = self.normalizing_constant();
        if c == T::zero() {
            return T::zero();
        }
        c * self.unnormalized_density(s)
    }

    /// Integral of [`Self::unnormalized_density`] over `[lo, hi]`.
    fn unnormalized_mass(&self, lo: T, hi: T) -> T {
        let floor = self.support_floor();
        let crit = self.critical_level();
        let lo = lo.max(floor);
        let hi = hi.min(T::one());
        if !(hi > lo) {
            return T::zero();
        }
        let pw = self.substitution_power();
        let mu = self.params.mu;
        let tol = T::lit(QUAD_REL_TOL);
        let mut total = T::zero();

        // Lower branch: s = floor + (crit - floor) w^pw.
        if lo < crit {
            let span = crit - floor;
            let w_of = |s: T| ((s - floor) / span).max(T::zero()).powf(pw.recip());
            let (wa, wb) = (w_of(lo), w_of(hi.min(crit)));
            let f = |w: T| {
                if w <= T::zero() {
                    return T::zero();
                }
                let s = floor + span * w.powf(pw);
                self.unnormalized_density(s) * span * pw * w.powf(pw - T::one())
            };
            total = total + adaptive_simpson(f, wa, wb, tol);
        }
        // Upper branch: s = 1 - (1 - crit) w^pw, so (1 - s) cancels exactly.
        if hi > crit {
            let span = T::one() - crit;
            let w_of = |s: T| ((T::one() - s) / span).max(T::zero()).powf(pw.recip());
            let (wa, wb) = (w_of(hi), w_of(lo.max(crit)));
            let p = self.params;
            let f = |w: T| {
                if w <= T::zero() {
                    return T::zero();
                }
                let s = T::one() - span * w.powf(pw);
                let ln_one_minus_s = span.ln() + pw * w.ln();
                let ln_visit = p.kappa * p.r0.ln()
                    + p.kappa / p.r0 * s.ln()
                    + p.kappa * (T::one() - p.r0.recip()) * (ln_one_minus_s - (p.r0 - T::one()).ln());
                pw * ln_visit.exp() / (mu * w)
            };
            total = total + adaptive_simpson(f, wa, wb, tol);
        }
        total
    }

    /// Total mass of the unnormalized density; its reciprocal is the second
    /// route to `c`.
    pub fn density_mass(&self) -> T {
        self.unnormalized_mass(self.support_floor(), T::one())
    }

    /// Stationary probability of `[lo, hi]`.
    pub fn stationary_mass(&self, lo: T, hi: T) -> T {
        self.normalizing_constant() * self.unnormalized_mass(lo, hi)
    }

    /// `P(S* <= a)`, accurate to the quadrature tolerance and clamped to `[0, 1]`.
    pub fn stationary_cdf(&self, a: T) -> T {
        self.stationary_mass(self.support_floor(), a).max(T::zero()).min(T::one())
    }

    /// Stationary law integrated exactly over `bins` uniform bins on `[0, 1]`.
    pub fn binned_stationary(&self, bins: usize) -> Histogram<T> {
        let mut h = Histogram::uniform(T::zero(), T::one(), bins);
        for k in 0..bins {
            let (lo, hi) = h.bin_bounds(k);
            h.add_mass(k, self.stationary_mass(lo, hi));
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(kappa: f64) -> LimitModel<f64> {
        LimitModel::new(ModelParams::new(1e4, 1.0 / 75.0, 2.0, 50.0, kappa).unwrap()).unwrap()
    }

    #[test]
    fn tau_at_full_susceptibility() {
        let tau = solve_tau(2.0_f64, 1.0).unwrap();
        assert!((tau - 0.7968).abs() < 5e-4);
        assert!((1.0 - tau - (-2.0 * tau).exp()).abs() < 1e-12);
    }

    #[test]
    fn tau_rejects_critical_and_subcritical() {
        assert_eq!(solve_tau(2.0, 0.5), Err(AnalyticError::SubcriticalDomain(1.0)));
        assert!(solve_tau(2.0, 0.3).is_err());
    }

    #[test]
    fn tau_near_threshold_is_small_and_accurate() {
        let tau = solve_tau(2.0_f64, 0.5 + 1e-9).unwrap();
        assert!(tau > 0.0 && tau < 1e-8);
        assert!((1.0 - tau - (-2.0 * (0.5 + 1e-9) * tau).exp()).abs() < 1e-12);
    }

    #[test]
    fn tau_in_single_precision() {
        let tau = solve_tau(2.0f32, 1.0f32).unwrap();
        assert!((tau - 0.7968).abs() < 5e-4);
    }

    #[test]
    fn growth_fixed_point_and_identity() {
        assert_eq!(growth(1.0, 123.0, 0.1), 1.0);
        assert_eq!(growth(0.3, 0.0, 0.1), 0.3);
        assert!(growth(0.3, 2.0, 0.1) > growth(0.3, 1.0, 0.1));
    }

    #[test]
    fn series_matches_closed_form_at_switch() {
        let r0 = 2.0;
        let x = SERIES_SWITCH / r0 * 0.999_999;
        let series = one_minus_x_minus_exp(x, r0);
        let closed = -(-r0 * x).exp_m1() - x;
        assert_relative_eq!(series, closed, max_relative = 1e-12);
    }

    #[test]
    fn jump_time_cdf_limits() {
        let m = model(1.0);
        assert_eq!(m.jump_time_cdf(0.0), 0.0);
        assert!(m.jump_time_cdf(1e7) > 1.0 - 1e-12);
    }

    #[test]
    fn jump_size_cdf_edges() {
        let m = model(3.0);
        assert_eq!(m.jump_size_cdf(-0.1), 0.0);
        assert_eq!(m.jump_size_cdf(0.0), 0.0);
        assert_eq!(m.jump_size_cdf(m.tau_one()), 1.0);
        assert!(m.jump_size_cdf(m.tau_one() - 1e-9) > 0.999);
        let mid = m.jump_size_cdf(0.4);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn post_jump_level_limits() {
        let m = model(3.0);
        assert_relative_eq!(m.post_jump_level(1e-12).unwrap(), 0.5, max_relative = 1e-9);
        assert_relative_eq!(
            m.post_jump_level(m.tau_one()).unwrap(),
            1.0 - m.tau_one(),
            max_relative = 1e-12
        );
        let g = m.post_jump_level(0.5).unwrap();
        assert_relative_eq!(g, 0.5 / (1f64.exp() - 1.0), max_relative = 1e-14);
        assert!((m.post_jump_level_inv(g).unwrap() - 0.5).abs() < 1e-9);
        assert!(m.post_jump_level(0.9).is_err());
        assert!(m.post_jump_level(-0.1).is_err());
        assert!(m.post_jump_level_inv(0.6).is_err());
    }

    #[test]
    fn cycle_length_forms_agree() {
        let m = model(3.0);
        assert_eq!(m.cycle_length(0.0).unwrap(), 0.0);
        assert!(m.cycle_length(1e-10).unwrap() < 1e-6);
        for &x in &[0.01, 0.1, 0.3, 0.6, 0.79] {
            assert_relative_eq!(
                m.cycle_length(x).unwrap(),
                m.cycle_length_expanded(x).unwrap(),
                max_relative = 1e-10
            );
        }
        assert!(m.cycle_length(m.tau_one()).is_err());
    }

    #[test]
    fn stationary_support() {
        let m = model(3.0);
        assert_eq!(m.stationary_density(m.support_floor()), 0.0);
        assert_eq!(m.stationary_density(0.1), 0.0);
        assert_eq!(m.stationary_density(1.0), 0.0);
        assert!(m.stationary_density(0.5) > 0.0);
    }

    #[test]
    fn density_continuous_at_critical_level() {
        let m = model(3.0);
        let below = m.unnormalized_density(0.5 - 1e-9);
        let at = m.unnormalized_density(0.5);
        assert_relative_eq!(below, at, max_relative = 1e-6);
    }

    #[test]
    fn no_importation_has_infinite_cycle() {
        let m = model(0.0);
        assert!(m.mean_cycle_length().is_infinite());
        assert_eq!(m.stationary_density(0.7), 0.0);
    }

    #[test]
    fn final_size_requires_infectives() {
        let inp = FinalSizeInput::new(0.5, 0.0).unwrap();
        assert!(final_size(inp, 2.0).is_err());
        assert!(FinalSizeInput::new(0.0, 0.1).is_err());
        assert!(FinalSizeInput::new(0.8, 0.5).is_err());
    }

    #[test]
    fn final_size_without_infectives_branches() {
        let s0 = 0.9;
        assert_relative_eq!(
            final_size_without_infectives(s0, 2.0),
            s0 * (1.0 - solve_tau(2.0, s0).unwrap())
        );
        assert_eq!(final_size_without_infectives(0.4, 2.0), 0.4);
    }
}
