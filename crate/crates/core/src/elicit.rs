//! Elicitability diagnostics.
//!
//! A law-invariant coherent risk measure with convex level sets is pinned
//! between `l_C` and `u_C` for some `C ∈ (0, 1]`, and on the two-point laws
//! `pδ_0 + (1-p)δ_1` it must equal `-C(1-p)/(C(1-p)+p)`. This module recovers
//! `C` from those two-point values, searches for mixtures that leave a level
//! set, and checks the bounds on a test set or directly on a spectral function.
//!
//! None of these checks proves elicitability. A clean report means no
//! violation was found, nothing more.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::Distribution;
use crate::error::{check_range, Error, Result};
use crate::risk::{evaluate, l_c, u_c, RiskFunctional};
use crate::spectral::SpectralMeasure;
use crate::Real;

pub const DEFAULT_C_TOLERANCE: f64 = 1e-8;
/// Margin below which a bound counts as attained.
pub const EQUALITY_TOLERANCE: f64 = 1e-10;
pub const TARGETS: [f64; 3] = [-0.5, -1.0, -2.0];
pub const MIX_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];
/// Probabilities of the two-point families searched, `k/100`.
pub const SEARCH_GRID_STEPS: usize = 100;
const MAX_DOUBLINGS: usize = 60;

/// The 19-point grid `0.05, 0.10, ..., 0.95`.
pub fn default_grid<F: Real>() -> Vec<F> {
    (1..20).map(|k| F::lit(k as f64 / 20.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CIdentification<F> {
    /// Median of the per-level solutions; may be infinite or zero when the
    /// two-point values are out of range.
    pub c_hat: F,
    /// `(p, C_p - C_hat)`.
    pub residuals: Vec<(F, F)>,
    /// `(p, ρ(pδ_0 + (1-p)δ_1))` for levels where that value is outside `(-1, 0)`.
    pub out_of_range: Vec<(F, F)>,
    pub consistent: bool,
    pub tolerance: F,
}

impl<F: Real> CIdentification<F> {
    pub fn max_abs_residual(&self) -> F {
        self.residuals
            .iter()
            .map(|r| r.1.abs())
            .fold(
                F::zero(),
                |a, b| if b.is_nan() { F::infinity() } else { a.max(b) },
            )
    }
}

fn two_point_01<F: Real>(p: F) -> Distribution<F> {
    Distribution::two_point(F::zero(), F::one(), p).expect("p inside (0, 1)")
}

/// Solves `ρ(pδ_0 + (1-p)δ_1) = -C(1-p)/(C(1-p)+p)` for `C` at every grid
/// level: `C_p = -p·r/((1-p)(1+r))`.
pub fn identify_c<F: Real>(
    rf: &RiskFunctional<F>,
    grid: &[F],
    tolerance: F,
) -> Result<CIdentification<F>> {
    rf.validate()?;
    for &p in grid {
        check_range("p", p, p > F::zero() && p < F::one(), "(0, 1)")?;
    }
    let mut distinct: Vec<F> = grid.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Invalid(
            "C identification needs at least two distinct levels".into(),
        ));
    }
    let mut solutions = Vec::with_capacity(distinct.len());
    let mut out_of_range = Vec::new();
    for &p in &distinct {
        let r = evaluate(rf, &two_point_01(p))?;
        if !(r > -F::one() && r < F::zero()) {
            out_of_range.push((p, r));
        }
        let c = if r > -F::one() {
            -p * r / ((F::one() - p) * (F::one() + r))
        } else {
            F::infinity()
        };
        solutions.push((p, c));
    }
    let mut sorted: Vec<F> = solutions.iter().map(|s| s.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    let c_hat = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) * F::lit(0.5)
    };
    let residuals: Vec<(F, F)> = solutions.iter().map(|&(p, c)| (p, c - c_hat)).collect();
    let mut report = CIdentification {
        c_hat,
        residuals,
        out_of_range,
        consistent: false,
        tolerance,
    };
    report.consistent = report.out_of_range.is_empty()
        && report.max_abs_residual() <= tolerance
        && c_hat > F::zero()
        && c_hat <= F::one() + tolerance;
    Ok(report)
}

/// Two laws with the same risk `t` whose mixture has a different risk.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityWitness<F: Real> {
    pub p0: Distribution<F>,
    pub p1: Distribution<F>,
    /// Mixture weight on `p0`.
    pub p: F,
    pub t: F,
    pub value_at_mixture: F,
}

impl<F: Real> ConvexityWitness<F> {
    pub fn mixture(&self) -> Distribution<F> {
        Distribution::mix(&self.p0, &self.p1, self.p).expect("atomic by construction")
    }

    /// Recomputes all three values and checks the witness invariants.
    pub fn validate(&self, rf: &RiskFunctional<F>, tol: F) -> bool {
        let at = |d: &Distribution<F>| evaluate(rf, d).ok();
        match (at(&self.p0), at(&self.p1), at(&self.mixture())) {
            (Some(v0), Some(v1), Some(vm)) => {
                (v0 - self.t).abs() <= tol
                    && (v1 - self.t).abs() <= tol
                    && (vm - self.t).abs() > F::lit(10.0) * tol
                    && vm == self.value_at_mixture
            }
            _ => false,
        }
    }
}

/// Member of `{pδ_0 + (1-p)δ_x : x >= 0}` with risk `t`, if reachable.
fn solve_level<F: Real>(rf: &RiskFunctional<F>, p: F, t: F, tol: F) -> Option<Distribution<F>> {
    let rho = |x: F| evaluate(rf, &Distribution::two_point(F::zero(), x, p).ok()?).ok();
    let mut lo = F::zero();
    let mut hi = F::one();
    let mut reached = false;
    for _ in 0..MAX_DOUBLINGS {
        if rho(hi)? <= t {
            reached = true;
            break;
        }
        lo = hi;
        hi = hi + hi;
    }
    if !reached {
        return None;
    }
    let (a, b) =
        crate::numeric::bisect_threshold(lo, hi, F::zero(), |x| rho(x).is_none_or(|v| v <= t));
    let (ra, rb) = (rho(a)?, rho(b)?);
    let x = if (ra - t).abs() <= (rb - t).abs() {
        a
    } else {
        b
    };
    let d = Distribution::two_point(F::zero(), x, p).ok()?;
    let v = evaluate(rf, &d).ok()?;
    ((v - t).abs() <= tol).then_some(d)
}

/// Solutions of every `(t, p)` family on the search grid, `None` where the
/// target is out of reach.
struct LevelTable<F: Real> {
    members: Vec<Option<Distribution<F>>>,
}

impl<F: Real> LevelTable<F> {
    fn level(k: usize) -> F {
        F::lit(k as f64 / SEARCH_GRID_STEPS as f64)
    }

    fn build(rf: &RiskFunctional<F>, tol: F) -> Self {
        let members = (0..TARGETS.len() * SEARCH_GRID_STEPS)
            .into_par_iter()
            .map(|i| {
                let (ti, k) = (i / SEARCH_GRID_STEPS, i % SEARCH_GRID_STEPS);
                if k == 0 {
                    return None;
                }
                solve_level(rf, Self::level(k), F::lit(TARGETS[ti]), tol)
            })
            .collect();
        Self { members }
    }

    fn get(&self, ti: usize, k: usize) -> Option<&Distribution<F>> {
        self.members[ti * SEARCH_GRID_STEPS + k].as_ref()
    }
}

fn candidate<F: Real>(
    rf: &RiskFunctional<F>,
    table: &LevelTable<F>,
    index: usize,
    seed: u64,
    tol: F,
) -> Option<ConvexityWitness<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let ti = rng.gen_range(0..TARGETS.len());
    let k0 = rng.gen_range(1..SEARCH_GRID_STEPS);
    let mut k1 = rng.gen_range(1..SEARCH_GRID_STEPS - 1);
    if k1 >= k0 {
        k1 += 1;
    }
    let w = F::lit(MIX_WEIGHTS[rng.gen_range(0..MIX_WEIGHTS.len())]);
    let p0 = table.get(ti, k0)?.clone();
    let p1 = table.get(ti, k1)?.clone();
    let mixture = Distribution::mix(&p0, &p1, w).ok()?;
    let value_at_mixture = evaluate(rf, &mixture).ok()?;
    let witness = ConvexityWitness {
        p0,
        p1,
        p: w,
        t: F::lit(TARGETS[ti]),
        value_at_mixture,
    };
    witness.validate(rf, tol).then_some(witness)
}

/// Randomized search for a violation of convex level sets among mixtures of
/// two-point laws. Candidate `i` draws from ChaCha stream `i` under `seed`
/// and the lowest-index witness is returned, independent of thread count.
pub fn convex_level_set_test<F: Real>(
    rf: &RiskFunctional<F>,
    budget: usize,
    seed: u64,
    tol: F,
) -> Result<Option<ConvexityWitness<F>>> {
    rf.validate()?;
    if budget == 0 {
        return Ok(None);
    }
    let table = LevelTable::build(rf, tol);
    Ok((0..budget)
        .into_par_iter()
        .find_map_first(|i| candidate(rf, &table, i, seed, tol)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRecord<F> {
    pub index: usize,
    pub lower: F,
    pub value: F,
    pub upper: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<F> {
    pub c: F,
    pub tol: F,
    pub records: Vec<BoundRecord<F>>,
}

impl<F: Real> BoundReport<F> {
    pub fn violations(&self) -> impl Iterator<Item = &BoundRecord<F>> {
        self.records
            .iter()
            .filter(|r| r.value < r.lower - self.tol || r.value > r.upper + self.tol)
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }

    /// Largest `|ρ - l_C|` over the test set.
    pub fn max_lower_gap(&self) -> F {
        self.records
            .iter()
            .map(|r| (r.value - r.lower).abs())
            .fold(F::zero(), F::max)
    }
}

/// Checks `l_C(d) - tol <= ρ(d) <= u_C(d) + tol` on every law of the test set.
pub fn bound_check<F: Real>(
    rf: &RiskFunctional<F>,
    c: F,
    test_set: &[Distribution<F>],
    tol: F,
) -> Result<BoundReport<F>> {
    rf.validate()?;
    check_range("C", c, c > F::zero() && c <= F::one(), "(0, 1]")?;
    let records = test_set
        .iter()
        .enumerate()
        .map(|(index, d)| {
            Ok(BoundRecord {
                index,
                lower: l_c(d, c)?,
                value: evaluate(rf, d)?,
                upper: u_c(d, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport { c, tol, records })
}

/// Per-level margins of the spectral-function bounds. Positive margins mean
/// the bound holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMargin<F> {
    pub p: F,
    pub g: F,
    /// `g_m(p) - C/s(p)` with `s(p) = C(1-p) + p`.
    pub lower_margin: F,
    /// `1/s(p) - g_m(p)`.
    pub upper_margin: F,
    /// `∫_p^1 g_m - C(1-p)/s(p)`.
    pub integrated_margin: F,
}

impl<F: Real> SpectralMargin<F> {
    fn eq_tol() -> F {
        F::tol(EQUALITY_TOLERANCE)
    }

    pub fn violated(&self) -> bool {
        let e = -Self::eq_tol();
        self.lower_margin < e || self.upper_margin < e || self.integrated_margin < e
    }

    pub fn integrated_equality(&self) -> bool {
        self.integrated_margin.abs() <= Self::eq_tol()
    }

    pub fn pointwise_equality(&self) -> bool {
        self.lower_margin.abs() <= Self::eq_tol() || self.upper_margin.abs() <= Self::eq_tol()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBoundsReport<F> {
    pub c: F,
    pub margins: Vec<SpectralMargin<F>>,
}

impl<F: Real> SpectralBoundsReport<F> {
    pub fn violations(&self) -> usize {
        self.margins.iter().filter(|m| m.violated()).count()
    }

    /// Levels at which the integrated bound is attained.
    pub fn integrated_equalities(&self) -> Vec<F> {
        self.margins
            .iter()
            .filter(|m| m.integrated_equality())
            .map(|m| m.p)
            .collect()
    }
}

/// `C(1-p)/(C(1-p)+p)`, the integrated spectral function of `u_C`.
pub fn envelope<F: Real>(c: F, p: F) -> F {
    let a = c * (F::one() - p);
    a / (a + p)
}

/// Evaluates `C/s(p) <= g_m(p) <= 1/s(p)` and
/// `∫_p^1 g_m >= C(1-p)/s(p)` on the grid.
pub fn spectral_bounds_check<F: Real>(
    m: &SpectralMeasure<F>,
    c: F,
    grid: &[F],
) -> Result<SpectralBoundsReport<F>> {
    check_range("C", c, c > F::zero() && c <= F::one(), "(0, 1]")?;
    let margins = grid
        .iter()
        .map(|&p| {
            check_range("p", p, p > F::zero() && p < F::one(), "(0, 1)")?;
            let s = c * (F::one() - p) + p;
            let g = m.spectral_fn(p)?;
            Ok(SpectralMargin {
                p,
                g,
                lower_margin: g - c / s,
                upper_margin: F::one() / s - g,
                integrated_margin: m.integrated_spectral(p)? - envelope(c, p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralBoundsReport { c, margins })
}
