//! Root bracketing and adaptive quadrature used by the closed-form evaluators.

use crate::scalar::Scalar;

const MAX_BISECTIONS: usize = 400;
const NEWTON_STEPS: usize = 8;

/// Bisection on a sign change of `f` over `[lo, hi]` until the bracket is
/// narrower than `x_tol`. Returns the final `(lo, hi)` bracket.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one may be zero).
pub(crate) fn bisect<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    mut lo: T,
    mut hi: T,
    x_tol: T,
) -> (T, T) {
    let f_lo = f(lo);
    let lo_positive = f_lo > T::zero();
    let two = T::lit(2.0);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= x_tol {
            break;
        }
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return (mid, mid);
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Bisection followed by a few safeguarded Newton steps.
///
/// Newton iterates that leave `[lo, hi]` are discarded, so the result is
/// never worse than the bisection midpoint.
pub(crate) fn bracketed_root<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    mut df: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    x_tol: T,
) -> T {
    let (blo, bhi) = bisect(&mut f, lo, hi, x_tol);
    let mut x = (blo + bhi) / T::lit(2.0);
    let mut fx = f(x);
    for _ in 0..NEWTON_STEPS {
        if fx == T::zero() {
            break;
        }
        let d = df(x);
        if d == T::zero() || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let f_next = f(next);
        if f_next.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = f_next;
    }
    x
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with relative tolerance
/// `rel_tol`. The interval is first split into 16 panels so that features
/// narrower than a single Simpson stencil are not skipped.
pub(crate) fn adaptive_simpson<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, rel_tol: T) -> T {
    if a == b {
        return T::zero();
    }
    const PANELS: usize = 16;
    let width = (b - a) / T::from_count(PANELS);
    let half = T::lit(0.5);

    // Coarse pass to fix the absolute scale of the tolerance.
    let mut coarse = Vec::with_capacity(PANELS);
    let mut scale = T::zero();
    for k in 0..PANELS {
        let lo = a + width * T::from_count(k);
        let hi = if k + 1 == PANELS { b } else { lo + width };
        let mid = (lo + hi) * half;
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(lo, hi, flo, fmid, fhi);
        scale = scale + whole.abs();
        coarse.push((lo, hi, flo, fmid, fhi, whole));
    }
    let floor = T::min_positive_value().sqrt();
    let abs_tol = (rel_tol * scale).max(floor) / T::from_count(PANELS);

    coarse
        .into_iter()
        .map(|(lo, hi, flo, fmid, fhi, whole)| {
            simpson_step(&f, lo, hi, flo, fmid, fhi, whole, abs_tol, 52)
        })
        .fold(T::zero(), |acc, v| acc + v)
}

#[inline]
fn simpson<T: Scalar>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol || m <= a || m >= b {
        return left + right + delta / T::lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}

/// Neumaier-compensated running sum, used for event-time accumulation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new(start: f64) -> Self {
        Self {
            sum: start,
            carry: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
