//! Consistent scoring functions for quantiles and expectiles, and score-based
//! ranking of competing point forecasts.
//!
//! Quantile family: `s(x, y) = (1{x >= y} - α)(g(x) - g(y))` with `g`
//! nondecreasing. Expectile family:
//! `s(x, y) = |1{x >= y} - τ|(g(y) - g(x) - g'(x)(y - x))` with `g` convex and
//! `g'` a subgradient. The indicator uses `x >= y` literally; on atomic laws
//! the tie matters.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::distributions::Distribution;
use crate::error::{check_range, Error, Result};
use crate::numeric::{bisect_threshold, CompensatedSum};
use crate::risk::expectile_identification;
use crate::scalar::pos;
use crate::Real;

/// Piecewise-linear generator given on a grid, extended linearly beyond the
/// end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedGenerator<F> {
    xs: Vec<F>,
    ys: Vec<F>,
}

impl<F: Real> TabulatedGenerator<F> {
    pub fn new(xs: Vec<F>, ys: Vec<F>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::Invalid(
                "tabulated generator needs at least two (x, g(x)) pairs".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "generator knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { xs, ys })
    }

    fn slope(&self, i: usize) -> F {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_convex(&self) -> bool {
        (1..self.xs.len() - 1).all(|i| self.slope(i - 1) <= self.slope(i))
    }

    /// Index of the segment used at `x` for the left derivative.
    fn segment_left(&self, x: F) -> usize {
        // first knot >= x; the segment ending there
        let k = self.xs.partition_point(|&k| k < x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    pub fn value(&self, x: F) -> F {
        let i = self.segment_left(x);
        self.ys[i] + self.slope(i) * (x - self.xs[i])
    }

    /// Left derivative of the interpolant, a valid subgradient when convex.
    pub fn left_derivative(&self, x: F) -> F {
        self.slope(self.segment_left(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator<F> {
    /// `g(x) = x`, quantile family only.
    Identity,
    /// `g(x) = x²`, expectile family only.
    Squared,
    Tabulated(TabulatedGenerator<F>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Quantile,
    Expectile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringFunction<F> {
    family: Family,
    level: F,
    generator: Generator<F>,
}

/// Closed interval of minimizers of an expected score, as an outer
/// approximation: the true minimizer set lies inside `[lo, hi]` and each end
/// is within the requested resolution of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerInterval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Real> MinimizerInterval<F> {
    pub fn contains(&self, x: F) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }
}

impl<F: Real> ScoringFunction<F> {
    /// Pinball loss for the α-quantile.
    pub fn pinball(alpha: F) -> Result<Self> {
        Self::quantile(alpha, Generator::Identity)
    }

    /// Asymmetric squared loss for the τ-expectile.
    pub fn asymmetric_squared(tau: F) -> Result<Self> {
        Self::expectile(tau, Generator::Squared)
    }

    pub fn quantile(alpha: F, generator: Generator<F>) -> Result<Self> {
        check_range(
            "alpha",
            alpha,
            alpha > F::zero() && alpha < F::one(),
            "(0, 1)",
        )?;
        match &generator {
            Generator::Identity => {}
            Generator::Squared => {
                return Err(Error::Invalid(
                    "x² is not increasing on ℝ; use it with the expectile family".into(),
                ))
            }
            Generator::Tabulated(t) if !t.is_nondecreasing() => {
                return Err(Error::Invalid(
                    "quantile generator must be nondecreasing".into(),
                ))
            }
            Generator::Tabulated(_) => {}
        }
        Ok(Self {
            family: Family::Quantile,
            level: alpha,
            generator,
        })
    }

    pub fn expectile(tau: F, generator: Generator<F>) -> Result<Self> {
        check_range("tau", tau, tau > F::zero() && tau < F::one(), "(0, 1)")?;
        match &generator {
            Generator::Squared => {}
            Generator::Identity => {
                return Err(Error::Invalid(
                    "identity generator is only valid for the quantile family".into(),
                ))
            }
            Generator::Tabulated(t) if !t.is_convex() => {
                return Err(Error::Invalid("expectile generator must be convex".into()))
            }
            Generator::Tabulated(_) => {}
        }
        Ok(Self {
            family: Family::Expectile,
            level: tau,
            generator,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn level(&self) -> F {
        self.level
    }

    pub fn generator(&self) -> &Generator<F> {
        &self.generator
    }

    pub fn score(&self, x: F, y: F) -> F {
        let hit = if x >= y { F::one() } else { F::zero() };
        match (self.family, &self.generator) {
            (Family::Quantile, Generator::Identity) => (hit - self.level) * (x - y),
            (Family::Quantile, Generator::Tabulated(g)) => {
                (hit - self.level) * (g.value(x) - g.value(y))
            }
            (Family::Expectile, Generator::Squared) => (hit - self.level).abs() * (y - x) * (y - x),
            (Family::Expectile, Generator::Tabulated(g)) => {
                let bregman = g.value(y) - g.value(x) - g.left_derivative(x) * (y - x);
                (hit - self.level).abs() * pos(bregman)
            }
            _ => unreachable!("constructors reject other combinations"),
        }
    }

    /// `E_P s(x, Y)`: exact sum over atoms, closed form on `Uniform` for the
    /// two default generators.
    pub fn expected_score(&self, x: F, d: &Distribution<F>) -> Result<F> {
        if let Some(atoms) = d.atoms() {
            return Ok(atoms
                .iter()
                .map(|a| a.weight * self.score(x, a.value))
                .sum());
        }
        let (a, b) = d.uniform_bounds().expect("non-atomic laws are uniform");
        let width = b - a;
        let c = x.max(a).min(b);
        match (self.family, &self.generator) {
            (Family::Quantile, Generator::Identity) => {
                // E(x-Y)⁺ - α(x - EY)
                let below = ((x - a) * (x - a) - (x - c) * (x - c)) / (F::lit(2.0) * width);
                Ok(below - self.level * (x - d.mean()))
            }
            (Family::Expectile, Generator::Squared) => {
                let three = F::lit(3.0) * width;
                let cube = |t: F| t * t * t;
                let below = (cube(x - a) - cube(x - c)) / three;
                let above = (cube(b - x) - cube(c - x)) / three;
                Ok((F::one() - self.level) * below + self.level * above)
            }
            _ => Err(Error::Unsupported(
                "expected score of a tabulated generator under a parametric law".into(),
            )),
        }
    }

    /// Right and left derivatives of `x ↦ E s(x, Y)` for the default generators.
    fn one_sided_derivatives(&self, x: F, d: &Distribution<F>) -> (F, F) {
        match self.family {
            Family::Quantile => (d.cdf(x) - self.level, d.cdf_left(x) - self.level),
            Family::Expectile => {
                let slope = -F::lit(2.0) * expectile_identification(d, self.level, x);
                (slope, slope)
            }
        }
    }

    /// Interval of minimizers of `x ↦ E s(x, Y)` on an atomic law: a grid scan
    /// over the support at the given resolution, refined by bisection on the
    /// one-sided derivatives for the default generators.
    pub fn argmin_expected_score(
        &self,
        d: &Distribution<F>,
        resolution: F,
    ) -> Result<MinimizerInterval<F>> {
        if !d.is_atomic() {
            return Err(Error::Unsupported("argmin over a parametric law".into()));
        }
        if resolution.is_nan() || resolution <= F::zero() {
            return Err(Error::Invalid("resolution must be positive".into()));
        }
        let (lo, hi) = (d.ess_inf(), d.ess_sup());
        if lo == hi {
            return Ok(MinimizerInterval { lo, hi });
        }
        let span = hi - lo;
        let eval = |x: F| self.expected_score(x, d).expect("atomic");

        if let Generator::Tabulated(_) = self.generator {
            let max_points = 1usize << 22;
            let steps = (span / resolution)
                .ceil()
                .to_usize()
                .unwrap_or(max_points)
                .min(max_points)
                .max(1);
            let step = span / F::from_usize_lossy(steps);
            let values: Vec<F> = (0..=steps)
                .map(|i| eval(lo + step * F::from_usize_lossy(i)))
                .collect();
            let min = values.iter().copied().fold(F::infinity(), F::min);
            let slack = F::tol(1e-12) * (F::one() + min.abs());
            let first = values.iter().position(|&v| v <= min + slack).unwrap_or(0);
            let last = values
                .iter()
                .rposition(|&v| v <= min + slack)
                .unwrap_or(steps);
            return Ok(MinimizerInterval {
                lo: lo + step * F::from_usize_lossy(first),
                hi: lo + step * F::from_usize_lossy(last),
            });
        }

        // coarse scan to seed the brackets
        let coarse = 1024usize;
        let step = span / F::from_usize_lossy(coarse);
        let grid: Vec<F> = (0..=coarse)
            .map(|i| lo + step * F::from_usize_lossy(i))
            .collect();
        let values: Vec<F> = grid.iter().map(|&x| eval(x)).collect();
        let min = values.iter().copied().fold(F::infinity(), F::min);
        let slack = F::tol(1e-12) * (F::one() + min.abs());
        let first = values.iter().position(|&v| v <= min + slack).unwrap_or(0);
        let last = values
            .iter()
            .rposition(|&v| v <= min + slack)
            .unwrap_or(coarse);

        let right_nonneg = |x: F| self.one_sided_derivatives(x, d).0 >= F::zero();
        let left_positive = |x: F| self.one_sided_derivatives(x, d).1 > F::zero();

        let lo_bracket = {
            let a = grid[first.saturating_sub(1)] - resolution;
            let b = grid[(first + 1).min(coarse)];
            if !right_nonneg(a) && right_nonneg(b) {
                (a, b)
            } else {
                (lo - resolution, hi)
            }
        };
        let hi_bracket = {
            let a = grid[last.saturating_sub(1)];
            let b = grid[(last + 1).min(coarse)] + resolution;
            if !left_positive(a) && left_positive(b) {
                (a, b)
            } else {
                (lo, hi + resolution)
            }
        };
        let (min_lo, _) = bisect_threshold(lo_bracket.0, lo_bracket.1, resolution, right_nonneg);
        let (_, max_hi) = bisect_threshold(hi_bracket.0, hi_bracket.1, resolution, left_positive);
        Ok(MinimizerInterval {
            lo: min_lo,
            hi: max_hi,
        })
    }
}

/// Paired point forecasts of competing methods and the realized observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries<F> {
    methods: Vec<(String, Vec<F>)>,
    realizations: Vec<F>,
}

impl<F: Real> ForecastSeries<F> {
    pub fn new(methods: Vec<(String, Vec<F>)>, realizations: Vec<F>) -> Result<Self> {
        if realizations.is_empty() {
            return Err(Error::Empty("realizations"));
        }
        if methods.is_empty() {
            return Err(Error::Empty("forecast methods"));
        }
        let mut seen = HashSet::new();
        for (id, xs) in &methods {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate method id {id:?}")));
            }
            if xs.len() != realizations.len() {
                return Err(Error::Invalid(format!(
                    "method {id:?} has {} forecasts for {} realizations",
                    xs.len(),
                    realizations.len()
                )));
            }
        }
        if methods
            .iter()
            .flat_map(|m| m.1.iter())
            .chain(&realizations)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            methods,
            realizations,
        })
    }

    pub fn methods(&self) -> &[(String, Vec<F>)] {
        &self.methods
    }

    pub fn realizations(&self) -> &[F] {
        &self.realizations
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedMethod<F> {
    pub method: String,
    pub mean_score: F,
    /// Competition rank, 1 is best; tied means share the smaller rank.
    pub rank: usize,
}

/// Ranks methods by mean score, ascending. Ties are ordered by method id.
pub fn compare<F: Real>(
    series: &ForecastSeries<F>,
    s: &ScoringFunction<F>,
) -> Vec<RankedMethod<F>> {
    let n = F::from_usize_lossy(series.len());
    let mut rows: Vec<RankedMethod<F>> = series
        .methods
        .iter()
        .map(|(id, xs)| {
            let total: CompensatedSum<F> = xs
                .iter()
                .zip(&series.realizations)
                .map(|(&x, &y)| s.score(x, y))
                .collect();
            RankedMethod {
                method: id.clone(),
                mean_score: total.value() / n,
                rank: 0,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_score
            .partial_cmp(&b.mean_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.method.cmp(&b.method))
    });
    for i in 0..rows.len() {
        rows[i].rank = if i > 0 && rows[i].mean_score == rows[i - 1].mean_score {
            rows[i - 1].rank
        } else {
            i + 1
        };
    }
    rows
}
