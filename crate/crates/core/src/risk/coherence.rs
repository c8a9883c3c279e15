//! Randomized check of the four coherence axioms.
//!
//! Subadditivity is a statement about random variables on a common space, not
//! about marginal laws, so each trial draws a finite probability space and two
//! positions on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{evaluate, RiskFunctional};
use crate::distributions::Distribution;
use crate::error::Result;
use crate::Real;

const MAX_STATES: usize = 8;
const VALUE_RANGE: f64 = 10.0;
const SLACK: f64 = 1e-9;
const LAMBDAS: [f64; 4] = [0.0, 0.5, 2.0, 10.0];
const SHIFTS: [f64; 3] = [-1.0, 0.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Monotonicity,
    Subadditivity,
    Homogeneity,
    TranslationInvariance,
}

/// A failed axiom with the positions that exhibit it. `lhs` and `rhs` are the
/// two sides of the axiom as stated, e.g. `ρ(X+Y)` and `ρ(X)+ρ(Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceViolation<F> {
    pub axiom: Axiom,
    pub trial: usize,
    pub probabilities: Vec<F>,
    pub x: Vec<F>,
    /// Second position (subadditivity) or dominating position (monotonicity).
    pub y: Option<Vec<F>>,
    /// `λ` for homogeneity, `a` for translation.
    pub parameter: Option<F>,
    pub lhs: F,
    pub rhs: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport<F> {
    pub trials: usize,
    pub checks: usize,
    pub violations: Vec<CoherenceViolation<F>>,
}

impl<F> CoherenceReport<F> {
    pub fn count(&self, axiom: Axiom) -> usize {
        self.violations.iter().filter(|v| v.axiom == axiom).count()
    }

    pub fn is_coherent(&self) -> bool {
        self.violations.is_empty()
    }
}

fn law<F: Real>(values: &[F], probs: &[F]) -> Result<Distribution<F>> {
    Distribution::finite_atomic(values.iter().copied().zip(probs.iter().copied()).collect())
}

/// Runs `trials` independent trials. Trial `i` draws from its own ChaCha stream
/// `i` under `seed`, so the report does not depend on scheduling.
pub fn coherence_check<F: Real>(
    rf: &RiskFunctional<F>,
    trials: usize,
    seed: u64,
) -> Result<CoherenceReport<F>> {
    rf.validate()?;
    let per_trial: Vec<Result<(usize, Vec<CoherenceViolation<F>>)>> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(rf, trial, seed))
        .collect();
    let mut checks = 0;
    let mut violations = Vec::new();
    for r in per_trial {
        let (n, v) = r?;
        checks += n;
        violations.extend(v);
    }
    Ok(CoherenceReport {
        trials,
        checks,
        violations,
    })
}

fn run_trial<F: Real>(
    rf: &RiskFunctional<F>,
    trial: usize,
    seed: u64,
) -> Result<(usize, Vec<CoherenceViolation<F>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let n = rng.gen_range(2..=MAX_STATES);
    // state probabilities are drawn at random; with equally likely states
    // and n <= 8 every level below 1/8 sees only the worst state
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<F> = raw.iter().map(|w| F::lit(w / total)).collect();
    let head: F = probs[..n - 1].iter().copied().sum();
    probs[n - 1] = (F::one() - head).max(F::zero());
    let draw = |rng: &mut ChaCha8Rng| -> Vec<F> {
        (0..n)
            .map(|_| F::lit(rng.gen_range(-VALUE_RANGE..=VALUE_RANGE)))
            .collect()
    };
    let x = draw(&mut rng);
    let y = draw(&mut rng);
    let bump: Vec<F> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                F::zero()
            } else {
                F::lit(rng.gen_range(0.0..VALUE_RANGE))
            }
        })
        .collect();

    let slack = F::tol(SLACK);
    let rho = |v: &[F]| evaluate(rf, &law(v, &probs)?);
    let rho_x = rho(&x)?;
    let rho_y = rho(&y)?;
    let mut out = Vec::new();
    let mut checks = 0;
    let mut record = |axiom, y: Option<Vec<F>>, parameter, lhs, rhs| {
        out.push(CoherenceViolation {
            axiom,
            trial,
            probabilities: probs.clone(),
            x: x.clone(),
            y,
            parameter,
            lhs,
            rhs,
        })
    };

    let sum: Vec<F> = x.iter().zip(&y).map(|(a, b)| *a + *b).collect();
    let lhs = rho(&sum)?;
    checks += 1;
    if lhs > rho_x + rho_y + slack {
        record(
            Axiom::Subadditivity,
            Some(y.clone()),
            None,
            lhs,
            rho_x + rho_y,
        );
    }

    let dominating: Vec<F> = x.iter().zip(&bump).map(|(a, b)| *a + *b).collect();
    let lhs = rho(&dominating)?;
    checks += 1;
    if lhs > rho_x + slack {
        record(Axiom::Monotonicity, Some(dominating), None, lhs, rho_x);
    }

    for lambda in LAMBDAS.map(F::lit) {
        let scaled: Vec<F> = x.iter().map(|a| *a * lambda).collect();
        let lhs = rho(&scaled)?;
        let rhs = lambda * rho_x;
        checks += 1;
        if (lhs - rhs).abs() > slack * (F::one() + rhs.abs()) {
            record(Axiom::Homogeneity, None, Some(lambda), lhs, rhs);
        }
    }

    for shift in SHIFTS.map(F::lit) {
        let moved: Vec<F> = x.iter().map(|a| *a + shift).collect();
        let lhs = rho(&moved)?;
        let rhs = rho_x - shift;
        checks += 1;
        if (lhs - rhs).abs() > slack * (F::one() + rhs.abs()) {
            record(Axiom::TranslationInvariance, None, Some(shift), lhs, rhs);
        }
    }
    Ok((checks, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralMeasure;

    #[test]
    fn es_is_coherent() {
        let r = coherence_check(&RiskFunctional::Es { alpha: 0.3 }, 1000, 7).unwrap();
        assert!(r.is_coherent(), "{:?}", r.violations.first());
        assert_eq!(r.checks, 1000 * 9);
    }

    #[test]
    fn low_expectile_is_coherent() {
        let r = coherence_check(&RiskFunctional::Expectile { tau: 0.25 }, 1000, 11).unwrap();
        assert!(r.is_coherent(), "{:?}", r.violations.first());
    }

    #[test]
    fn var_fails_subadditivity() {
        let r = coherence_check(&RiskFunctional::VaR { alpha: 0.1 }, 1000, 3).unwrap();
        assert!(r.count(Axiom::Subadditivity) > 0);
        assert_eq!(r.count(Axiom::Homogeneity), 0);
        assert_eq!(r.count(Axiom::TranslationInvariance), 0);
        assert_eq!(r.count(Axiom::Monotonicity), 0);
        let w = r
            .violations
            .iter()
            .find(|v| v.axiom == Axiom::Subadditivity)
            .unwrap();
        assert!(w.lhs > w.rhs);
    }

    #[test]
    fn spectral_measures_are_coherent() {
        let m = SpectralMeasure::new(0.1, vec![(0.2, 0.5), (1.0, 0.4)], None).unwrap();
        let r = coherence_check(&RiskFunctional::Spectral(m), 300, 1).unwrap();
        assert!(r.is_coherent());
    }

    #[test]
    fn reproducible() {
        let rf = RiskFunctional::Expectile { tau: 0.75 };
        let a = coherence_check(&rf, 200, 5).unwrap();
        let b = coherence_check(&rf, 200, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.count(Axiom::Subadditivity) > 0);
    }
}
