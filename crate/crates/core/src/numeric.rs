//! Small one-dimensional numerical kernels: bracketed bisection, golden-section
//! minimization, adaptive Simpson quadrature and compensated summation.

use crate::Real;

/// Bisection on a predicate that is `false` on the left of some threshold and
/// `true` on the right. Returns the final bracket `(lo, hi)` with `pred(lo) == false`
/// and `pred(hi) == true`, shrunk until `hi - lo <= width` or no representable
/// midpoint remains.
///
/// The caller guarantees `pred(lo) == false` and `pred(hi) == true` on entry.
pub fn bisect_threshold<F, P>(mut lo: F, mut hi: F, width: F, mut pred: P) -> (F, F)
where
    F: Real,
    P: FnMut(F) -> bool,
{
    let half = F::lit(0.5);
    for _ in 0..2048 {
        if hi - lo <= width {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Root of a continuous nonincreasing function on `[lo, hi]` with
/// `f(lo) >= 0 >= f(hi)`, by plain bisection down to `width`.
pub fn bisect_decreasing<F, G>(lo: F, hi: F, width: F, mut f: G) -> F
where
    F: Real,
    G: FnMut(F) -> F,
{
    if f(lo) <= F::zero() {
        return lo;
    }
    if f(hi) >= F::zero() {
        return hi;
    }
    let (a, b) = bisect_threshold(lo, hi, width, |x| f(x) < F::zero());
    let (fa, fb) = (f(a).abs(), f(b).abs());
    if fa <= fb {
        a
    } else {
        b
    }
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F, G>(mut lo: F, mut hi: F, tol: F, mut f: G) -> (F, F)
where
    F: Real,
    G: FnMut(F) -> F,
{
    let inv_phi = (F::lit(5.0).sqrt() - F::one()) * F::lit(0.5);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    // the bracket ends are candidates too, the objective may have a kink there
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<F> {
    pub value: F,
    /// Sum of the local Richardson error estimates.
    pub error_estimate: F,
    /// Whether some subinterval hit the depth limit before meeting its tolerance.
    pub depth_limited: bool,
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`,
/// splitting at most `max_depth` levels deep.
pub fn adaptive_simpson<F, G>(f: G, a: F, b: F, tol: F, max_depth: u32) -> Quadrature<F>
where
    F: Real,
    G: Fn(F) -> F,
{
    if b <= a {
        return Quadrature {
            value: F::zero(),
            error_estimate: F::zero(),
            depth_limited: false,
        };
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * F::lit(0.5);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut out = Quadrature {
        value: F::zero(),
        error_estimate: F::zero(),
        depth_limited: false,
    };
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut out);
    out
}

#[inline]
fn simpson<F: Real>(a: F, b: F, fa: F, fm: F, fb: F) -> F {
    (b - a) / F::lit(6.0) * (fa + F::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F, G>(
    f: &G,
    a: F,
    b: F,
    fa: F,
    fm: F,
    fb: F,
    whole: F,
    tol: F,
    depth: u32,
    out: &mut Quadrature<F>,
) where
    F: Real,
    G: Fn(F) -> F,
{
    let m = (a + b) * F::lit(0.5);
    let lm = (a + m) * F::lit(0.5);
    let rm = (m + b) * F::lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    let fifteen = F::lit(15.0);
    if depth == 0 || diff.abs() <= fifteen * tol {
        if depth == 0 && diff.abs() > fifteen * tol {
            out.depth_limited = true;
        }
        out.value = out.value + left + right + diff / fifteen;
        out.error_estimate = out.error_estimate + diff.abs() / fifteen;
        return;
    }
    let half = tol * F::lit(0.5);
    simpson_step(f, a, m, fa, flm, fm, left, half, depth - 1, out);
    simpson_step(f, m, b, fm, frm, fb, right, half, depth - 1, out);
}

/// Neumaier-compensated running sum. Summation order is the caller's, so results
/// are reproducible for a fixed input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<F> {
    sum: F,
    carry: F,
}

impl<F: Real> CompensatedSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            carry: F::zero(),
        }
    }

    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.carry
    }
}

impl<F: Real> FromIterator<F> for CompensatedSum<F> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_threshold() {
        let (lo, hi) = bisect_threshold(0.0_f64, 10.0, 1e-12, |x| x >= std::f64::consts::PI);
        assert!(lo < std::f64::consts::PI && hi >= std::f64::consts::PI);
        assert!(hi - lo <= 1e-12);
    }

    #[test]
    fn decreasing_root() {
        let r = bisect_decreasing(0.0_f64, 2.0, 1e-14, |x| 1.0 - x * x);
        assert!((r - 1.0).abs() < 1e-13);
    }

    #[test]
    fn golden_section_on_kinked_function() {
        let (x, fx) = golden_section_min(0.0_f64, 1.0, 1e-12, |x| (x - 0.3).abs() * 2.0 + 1.0);
        assert!((x - 0.3).abs() < 1e-10);
        assert!((fx - 1.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_integrates_peaked_function() {
        // int_0^1 c / (c + (1-c) v)^2 dv = 1
        let c = 0.01_f64;
        let q = adaptive_simpson(|v| c / (c + (1.0 - c) * v).powi(2), 0.0, 1.0, 1e-12, 60);
        assert!((q.value - 1.0).abs() < 1e-10, "{q:?}");
        assert!(!q.depth_limited);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16_f64, 1.0, -1e16, 1.0];
        let s: CompensatedSum<f64> = xs.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
    }
}
