//! Closed forms against independent numerical oracles written here, and
//! against reference values computed once with 25-digit arithmetic.

use rand::Rng;
use sirdi::analytic::{growth, LimitModel};
use sirdi::rng::rng_from_seed;
use sirdi::{final_size, final_size_without_infectives, solve_tau, AnalyticError, FinalSizeInput, Model, ModelParams};

const MU: f64 = 1.0 / 75.0;

fn params(kappa: f64) -> ModelParams<f64> {
    ModelParams::new(1e4, MU, 2.0, 50.0, kappa).unwrap()
}

fn model(kappa: f64) -> Model {
    LimitModel::new(params(kappa)).unwrap()
}

/// Plain bisection for a sign change on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn rk4<const D: usize>(f: impl Fn(&[f64; D]) -> [f64; D], mut y: [f64; D], h: f64, steps: usize) -> [f64; D] {
    let add = |y: &[f64; D], k: &[f64; D], c: f64| {
        let mut out = *y;
        for j in 0..D {
            out[j] += c * k[j];
        }
        out
    };
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&add(&y, &k1, h / 2.0));
        let k3 = f(&add(&y, &k2, h / 2.0));
        let k4 = f(&add(&y, &k3, h));
        for j in 0..D {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

/// Tanh-sinh quadrature on `(a, b)`; tolerant of integrable endpoint singularities.
fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
    let h = 1.0 / 256.0;
    let mut sum = 0.0;
    for k in -1536i32..=1536 {
        let t = h * k as f64;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let x = u.tanh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let p = c + d * x;
        if p <= a || p >= b || w == 0.0 {
            continue;
        }
        sum += w * f(p);
    }
    sum * d * h
}

#[test]
fn tau_at_one_matches_reported_final_size() {
    let tau = solve_tau(2.0_f64, 1.0).unwrap();
    assert!((tau - 0.7968).abs() < 5e-4);
    assert!((tau - 0.796_812_130_020_020_05).abs() < 1e-15);
    assert!((1.0 - tau - 0.2032).abs() < 5e-4);
}

#[test]
fn tau_threshold_is_a_domain_error() {
    assert!(matches!(solve_tau(2.0, 0.5), Err(AnalyticError::SubcriticalDomain(_))));
    assert!(solve_tau(2.0, 0.3).is_err());
}

#[test]
fn tau_matches_bisection_oracle() {
    let oracle = bisect(|t| 1.0 - t - (-1.5 * t).exp(), 1e-3, 1.0);
    let tau = solve_tau(2.0_f64, 0.75).unwrap();
    assert!((tau - oracle).abs() < 1e-12, "{tau} vs {oracle}");
    assert!((tau - 0.582_811_643_865_811_4).abs() < 1e-12);
}

#[test]
fn growth_matches_ode_integration() {
    assert_eq!(growth(1.0, 123.0, MU), 1.0);
    assert_eq!(growth(0.37, 0.0, MU), 0.37);
    let ode = rk4(|y: &[f64; 1]| [MU * (1.0 - y[0])], [0.5], 0.01, 7500);
    let g = growth(0.5, 75.0, MU);
    assert!((g - ode[0]).abs() < 1e-12, "{g} vs {}", ode[0]);
    assert!((g - 0.816_060_279_414_278_8).abs() < 1e-14);
}

#[test]
fn jump_time_cdf_matches_hazard_integral() {
    let m = model(1.0);
    assert_eq!(m.jump_time_cdf(0.0), 0.0);
    assert!((m.jump_time_cdf(1e6) - 1.0).abs() < 1e-15);
    // Hazard mu kappa (1 - 1/(r0 S(u))) with S written out independently.
    let s = |u: f64| 1.0 - 0.5 * (-MU * u).exp();
    let hazard = |u: f64| MU * (1.0 - 1.0 / (2.0 * s(u)));
    for t in [5.0, 30.0, 75.0, 200.0, 600.0] {
        let oracle = 1.0 - (-simpson(hazard, 0.0, t, 20_000)).exp();
        let got = m.jump_time_cdf(t);
        assert!((got - oracle).abs() < 1e-8, "t = {t}: {got} vs {oracle}");
    }
    assert!((m.jump_time_cdf(75.0) - 0.225_129_946_954_799_4).abs() < 1e-12);
}

#[test]
fn jump_size_cdf_edges() {
    let m = model(3.0);
    assert_eq!(m.jump_size_cdf(0.0), 0.0);
    assert_eq!(m.jump_size_cdf(-0.2), 0.0);
    assert_eq!(m.jump_size_cdf(m.tau_one()), 1.0);
    assert!(m.jump_size_cdf(m.tau_one() - 1e-9) > 1.0 - 1e-6);
    assert!((m.jump_size_cdf(0.4) - 0.291_160_463_733_065_8).abs() < 1e-10);
}

/// Samples X by inverting the jump-time CDF, growing to the pre-jump level
/// and solving the final-size equation, all by bisection written here.
#[test]
fn jump_size_cdf_matches_monte_carlo() {
    let m = model(3.0);
    let (r0, kappa) = (2.0_f64, 3.0_f64);
    let surv = |t: f64| (-MU * kappa * t).exp() * (r0 * (MU * t).exp() - r0 + 1.0).powf(kappa / r0);
    let mut rng = rng_from_seed(20_240_401);
    let n = 1_000_000;
    let mut below = 0u64;
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut hi = 75.0;
        while surv(hi) > u {
            hi *= 2.0;
        }
        let t = bisect(|t| surv(t) - u, 0.0, hi);
        let pre = 1.0 - 0.5 * (-MU * t).exp();
        let tau = bisect(|x| 1.0 - x - (-r0 * pre * x).exp(), 1e-12, 1.0);
        if pre * tau <= 0.4 {
            below += 1;
        }
    }
    let p = below as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let exact = m.jump_size_cdf(0.4);
    assert!(exact > 0.0 && exact < 1.0);
    assert!((p - exact).abs() < 3.0 * se, "MC {p} +- {se} vs {exact}");
}

#[test]
fn post_jump_level_and_inverse() {
    let m = model(3.0);
    assert!((m.post_jump_level(1e-12).unwrap() - 0.5).abs() < 1e-11);
    let t1 = m.tau_one();
    assert!((m.post_jump_level(t1).unwrap() - (1.0 - t1)).abs() < 1e-12);
    let g = m.post_jump_level(0.5).unwrap();
    assert!((g - 0.5 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
    assert!((g - 0.2910).abs() < 5e-5);
    assert!((m.post_jump_level_inv(g).unwrap() - 0.5).abs() < 1e-9);
    assert!(m.post_jump_level(t1 + 1e-6).is_err());
    assert!(m.post_jump_level_inv(0.6).is_err());
}

/// Grows the post-jump level with an ODE stepper until it re-reaches the
/// pre-jump level; the crossing is located by bisection on the step.
#[test]
fn cycle_length_matches_deterministic_cycle() {
    let m = model(3.0);
    let x = 0.6_f64;
    let post = x / ((2.0 * x).exp() - 1.0);
    let pre = x / (1.0 - (-2.0 * x).exp());
    let f = |y: &[f64; 1]| [MU * (1.0 - y[0])];
    let h = 0.01;
    let (mut t, mut y) = (0.0, [post]);
    loop {
        let next = rk4(f, y, h, 1);
        if next[0] >= pre {
            let dt = bisect(|d| rk4(f, y, d, 1)[0] - pre, 0.0, h);
            t += dt;
            break;
        }
        y = next;
        t += h;
    }
    let got = m.cycle_length(x).unwrap();
    assert!((got - t).abs() < 1e-9, "{got} vs {t}");
    assert!((got - 124.274_351_918_237_3).abs() < 1e-9);
    assert!(m.cycle_length(1e-10).unwrap() < 1e-6);
}

#[test]
fn stationary_density_support_and_mass() {
    for kappa in [1.0, 3.0, 100.0] {
        let m = model(kappa);
        let floor = m.support_floor();
        assert_eq!(m.stationary_density(floor), 0.0);
        assert_eq!(m.stationary_density(floor - 0.01), 0.0);
        assert_eq!(m.stationary_density(1.0), 0.0);
        assert_eq!(m.stationary_density(1.2), 0.0);
        let mass = tanh_sinh(|s| m.stationary_density(s), floor, 0.5) + tanh_sinh(|s| m.stationary_density(s), 0.5, 1.0);
        assert!((mass - 1.0).abs() < 1e-6, "kappa = {kappa}: mass {mass}");
    }
}

#[test]
fn mean_cycle_length_matches_reference() {
    for (kappa, reference) in [
        (1.0, 223.040_604_143_437_8),
        (3.0, 109.206_992_723_988_3),
        (100.0, 18.097_698_201_458_2),
    ] {
        let got = model(kappa).mean_cycle_length();
        assert!(((got - reference) / reference).abs() < 1e-7, "kappa = {kappa}: {got}");
    }
}

#[test]
fn large_kappa_mode_near_critical_level() {
    let m = model(100.0);
    let floor = m.support_floor();
    let mut best = (0.0, f64::MIN);
    for k in 1..100_000 {
        let s = floor + (1.0 - floor) * k as f64 / 100_000.0;
        let d = m.stationary_density(s);
        if d > best.1 {
            best = (s, d);
        }
    }
    assert!((best.0 - 0.5).abs() < 0.05, "mode at {}", best.0);
}

#[test]
fn fewer_importations_push_mass_toward_one() {
    let above = |kappa: f64| 1.0 - model(kappa).stationary_cdf(0.8);
    let (k1, k3, k100) = (above(1.0), above(3.0), above(100.0));
    eprintln!("P(S* > 0.8): kappa 1 {k1}, kappa 3 {k3}, kappa 100 {k100}");
    assert!(k1 > k3 && k3 > k100);
}

#[test]
fn final_size_matches_bisection_and_ode() {
    let (s0, i0, r0) = (0.5, 0.01, 2.0);
    let got = final_size(FinalSizeInput::new(s0, i0).unwrap(), r0).unwrap();
    let root = bisect(|s| s - s0 * (-r0 * (s0 + i0 - s)).exp(), 1e-12, s0);
    assert!((got - root).abs() < 1e-12);
    assert!((got - 0.406_552_557_606_557_8).abs() < 1e-12);
    let ode = rk4(
        |y: &[f64; 2]| [-r0 * y[0] * y[1], r0 * y[0] * y[1] - y[1]],
        [s0, i0],
        1e-3,
        200_000,
    );
    assert!((ode[0] - got).abs() < 1e-4, "ODE {} vs {got}", ode[0]);
}

#[test]
fn final_size_from_full_susceptibility() {
    let (s0, i0, r0) = (1.0 - 0.01, 0.01, 2.0);
    let got = final_size(FinalSizeInput::new(s0, i0).unwrap(), r0).unwrap();
    let ode = rk4(
        |y: &[f64; 2]| [-r0 * y[0] * y[1], r0 * y[0] * y[1] - y[1]],
        [s0, i0],
        1e-3,
        200_000,
    );
    assert!((ode[0] - got).abs() < 1e-4);
}

#[test]
fn final_size_vanishing_infectives_supercritical() {
    let r0 = 2.0_f64;
    for s0 in [0.6, 0.9, 1.0] {
        let limit = s0 * (1.0 - solve_tau(r0, s0).unwrap());
        let tiny = final_size(FinalSizeInput::new(s0 - 1e-9, 1e-9).unwrap(), r0).unwrap();
        assert!((tiny - limit).abs() < 1e-3, "s0 = {s0}: {tiny} vs {limit}");
        assert_eq!(final_size_without_infectives(s0, r0), limit);
    }
}

/// Below threshold the ODE started with a vanishing infective fraction
/// loses almost no susceptibles, so the `i0 -> 0` limit is `s0`, not 0.
#[test]
fn final_size_vanishing_infectives_subcritical() {
    let r0 = 2.0_f64;
    for s0 in [0.2, 0.4, 0.45] {
        let i0 = 1e-6;
        let ode = rk4(
            |y: &[f64; 2]| [-r0 * y[0] * y[1], r0 * y[0] * y[1] - y[1]],
            [s0, i0],
            1e-2,
            20_000,
        );
        let fixed = final_size(FinalSizeInput::new(s0, i0).unwrap(), r0).unwrap();
        assert!((ode[0] - fixed).abs() < 1e-6);
        assert!((ode[0] - s0).abs() < 1e-4, "s0 = {s0}: ODE ends at {}", ode[0]);
        assert_eq!(final_size_without_infectives(s0, r0), s0);
    }
}

#[test]
fn final_size_without_infectives_is_domain_error() {
    assert!(final_size(FinalSizeInput::new(0.8, 0.0).unwrap(), 2.0).is_err());
    assert!(FinalSizeInput::new(0.8, 0.5).is_err());
    assert!(FinalSizeInput::new(0.0, 0.1).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let m32: LimitModel<f32> = LimitModel::new(params(3.0).cast()).unwrap();
    let m64 = model(3.0);
    assert!((solve_tau(2.0_f32, 1.0).unwrap() as f64 - m64.tau_one()).abs() < 1e-5);
    for x in [0.1_f32, 0.3, 0.6] {
        let d = (m32.jump_size_cdf(x) as f64 - m64.jump_size_cdf(x as f64)).abs();
        assert!(d < 1e-4, "x = {x}: {d}");
        let g = (m32.post_jump_level(x).unwrap() as f64 - m64.post_jump_level(x as f64).unwrap()).abs();
        assert!(g < 1e-5);
    }
    assert!((m32.stationary_density(0.7) as f64 - m64.stationary_density(0.7)).abs() < 1e-3);
}
