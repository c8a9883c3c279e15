//! Concrete risk measures.
//!
//! Sign convention: everything named after a risk measure returns `ρ`, the
//! risk of the position; the spectral layer returns `ν`, and `ρ = -ν`.

mod coherence;

pub use coherence::{coherence_check, Axiom, CoherenceReport, CoherenceViolation};

use crate::distributions::Distribution;
use crate::error::{check_range, Error, Result};
use crate::numeric::{bisect_decreasing, golden_section_min};
use crate::scalar::pos;
use crate::spectral::SpectralMeasure;
use crate::Real;

/// A law-invariant risk functional.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskFunctional<F> {
    VaR {
        alpha: F,
    },
    Es {
        alpha: F,
    },
    Spectral(SpectralMeasure<F>),
    /// `ρ = -min_m ν_m` over a finite, nonempty family.
    InfOverFamily(Vec<SpectralMeasure<F>>),
    /// `ρ = -μ_τ`.
    Expectile {
        tau: F,
    },
    NegMean,
}

impl<F: Real> RiskFunctional<F> {
    pub fn validate(&self) -> Result<()> {
        let open = |name, x: F| check_range(name, x, x > F::zero() && x < F::one(), "(0, 1)");
        match self {
            RiskFunctional::VaR { alpha } | RiskFunctional::Es { alpha } => open("alpha", *alpha),
            RiskFunctional::Expectile { tau } => open("tau", *tau),
            RiskFunctional::InfOverFamily(ms) if ms.is_empty() => {
                Err(Error::Empty("measure family"))
            }
            _ => Ok(()),
        }
    }

    /// Spectral measures that represent this functional as `-inf ν_m`, when it
    /// has a finite representation.
    pub fn measures(&self) -> Option<Vec<SpectralMeasure<F>>> {
        match self {
            RiskFunctional::Es { alpha } => SpectralMeasure::dirac(*alpha).ok().map(|m| vec![m]),
            RiskFunctional::Spectral(m) => Some(vec![m.clone()]),
            RiskFunctional::InfOverFamily(ms) => Some(ms.clone()),
            RiskFunctional::NegMean => SpectralMeasure::dirac(F::one()).ok().map(|m| vec![m]),
            RiskFunctional::VaR { .. } | RiskFunctional::Expectile { .. } => None,
        }
    }
}

/// Outcome of the expectile root finder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectileSolution<F> {
    pub mu: F,
    pub tau: F,
    /// `F(μ)`, the level at which the `m_p` family attains `ν = μ`.
    pub p_star: F,
}

fn open_level<F: Real>(name: &'static str, x: F) -> Result<()> {
    check_range(name, x, x > F::zero() && x < F::one(), "(0, 1)")
}

fn unit_c<F: Real>(c: F) -> Result<()> {
    check_range("C", c, c > F::zero() && c <= F::one(), "(0, 1]")
}

/// `VaR_α(Y) = -F⁻¹(α)`.
pub fn var<F: Real>(d: &Distribution<F>, alpha: F) -> Result<F> {
    open_level("alpha", alpha)?;
    Ok(-d.quantile_unchecked(alpha))
}

/// `ES_α(Y) = -α⁻¹ ∫_0^α F⁻¹(v) dv`, evaluated as `-ν_{δ_α}` so that the
/// two spellings of the same functional agree bit for bit.
pub fn es<F: Real>(d: &Distribution<F>, alpha: F) -> Result<F> {
    open_level("alpha", alpha)?;
    Ok(-SpectralMeasure::dirac(alpha)?.nu(d))
}

/// `E(Y-x)⁺` and `E(x-Y)⁺`.
fn partial_moments<F: Real>(d: &Distribution<F>, x: F) -> (F, F) {
    match d.atoms() {
        Some(atoms) => atoms.iter().fold((F::zero(), F::zero()), |(up, down), a| {
            (
                up + a.weight * pos(a.value - x),
                down + a.weight * pos(x - a.value),
            )
        }),
        None => {
            let (a, b) = d.uniform_bounds().expect("uniform");
            let width = b - a;
            let two = F::lit(2.0);
            let c = x.max(a).min(b);
            // upper: ∫_max(x,a)^b (y-x)/w dy, lower: ∫_a^min(x,b) (x-y)/w dy
            let up = ((b - x) * (b - x) - (c - x) * (c - x)) / (two * width);
            let down = ((x - a) * (x - a) - (x - c) * (x - c)) / (two * width);
            (up, down)
        }
    }
}

/// First-order condition of the expectile, `τE(Y-x)⁺ - (1-τ)E(x-Y)⁺`.
/// Continuous and strictly decreasing in `x`.
pub fn expectile_identification<F: Real>(d: &Distribution<F>, tau: F, x: F) -> F {
    let (up, down) = partial_moments(d, x);
    tau * up - (F::one() - tau) * down
}

/// The τ-expectile by bisection on the support.
pub fn expectile<F: Real>(d: &Distribution<F>, tau: F) -> Result<ExpectileSolution<F>> {
    open_level("tau", tau)?;
    let (lo, hi) = (d.ess_inf(), d.ess_sup());
    let psi = |x: F| expectile_identification(d, tau, x);
    let mu = if lo == hi {
        lo
    } else {
        // runs to float resolution, which is well inside 1e-12 of the bracket
        bisect_decreasing(lo, hi, F::zero(), psi)
    };
    let residual = psi(mu);
    if residual.abs() > F::tol(1e-10) * (F::one() + mu.abs()) {
        return Err(Error::Invalid(format!(
            "expectile root finder stalled: |psi(mu)| = {residual}"
        )));
    }
    Ok(ExpectileSolution {
        mu,
        tau,
        p_star: d.cdf(mu),
    })
}

/// Upper bound risk measure `u_C(Y) = -∫_0^1 C/(v + C(1-v))² F⁻¹(v) dv`.
pub fn u_c<F: Real>(d: &Distribution<F>, c: F) -> Result<F> {
    Ok(-SpectralMeasure::uc(c)?.nu(d))
}

/// Lower bound risk measure `l_C(Y) = -inf_p ν_{m_p}(Y)`, equal to minus the
/// `C/(C+1)`-expectile.
pub fn l_c<F: Real>(d: &Distribution<F>, c: F) -> Result<F> {
    unit_c(c)?;
    Ok(-expectile(d, c / (c + F::one()))?.mu)
}

/// Minimum of `p ↦ ν_{m_p}(Y)` over the `m_p` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpMinimum<F> {
    pub p: F,
    pub nu: F,
}

/// Golden-section minimization of `p ↦ ν_{m_p}(Y)` on `(0, 1)`. The map is
/// unimodal with its minimum at `p* = F(μ_τ)`, so this is an independent
/// route to `-l_C`.
pub fn l_c_by_minimization<F: Real>(d: &Distribution<F>, c: F) -> Result<MpMinimum<F>> {
    unit_c(c)?;
    let edge = F::tol(1e-12);
    let objective = |p: F| SpectralMeasure::mp(p, c).expect("p inside (0, 1)").nu(d);
    let (p, nu) = golden_section_min(edge, F::one() - edge, F::tol(1e-13), objective);
    Ok(MpMinimum { p, nu })
}

/// Evaluates `ρ(d)`.
pub fn evaluate<F: Real>(rf: &RiskFunctional<F>, d: &Distribution<F>) -> Result<F> {
    match rf {
        RiskFunctional::VaR { alpha } => var(d, *alpha),
        RiskFunctional::Es { alpha } => es(d, *alpha),
        RiskFunctional::Spectral(m) => Ok(-m.nu(d)),
        RiskFunctional::InfOverFamily(ms) => {
            if ms.is_empty() {
                return Err(Error::Empty("measure family"));
            }
            let min = ms
                .iter()
                .map(|m| m.nu(d))
                .fold(F::infinity(), |a, b| a.min(b));
            Ok(-min)
        }
        RiskFunctional::Expectile { tau } => Ok(-expectile(d, *tau)?.mu),
        RiskFunctional::NegMean => Ok(-d.mean()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(x1: f64, x2: f64, p: f64) -> Distribution<f64> {
        Distribution::two_point(x1, x2, p).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn var_examples() {
        assert_eq!(var(&tp(0.0, 1.0, 0.5), 0.5).unwrap(), 0.0);
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(var(&u, 0.05).unwrap(), -0.05, 1e-15));
        let e = Distribution::empirical(&[-3.0, -1.0, 2.0]).unwrap();
        assert_eq!(var(&e, 1.0 / 3.0).unwrap(), 3.0);
        assert!(var(&e, 1.0).is_err());
        assert!(var(&e, 0.0).is_err());
    }

    #[test]
    fn es_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(es(&u, 0.5).unwrap(), -0.25, 1e-15));
        for (alpha, p) in [(0.2, 0.3), (0.3, 0.3), (0.05, 0.9)] {
            assert_eq!(es(&tp(0.0, 1.0, p), alpha).unwrap(), 0.0);
        }
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.0, 0.4), (5.0, 0.5)]).unwrap();
        for alpha in [0.05, 0.1, 0.3, 0.7, 0.95] {
            assert!(es(&d, alpha).unwrap() >= var(&d, alpha).unwrap());
        }
    }

    #[test]
    fn es_tends_to_negative_mean() {
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.0, 0.4), (5.0, 0.5)]).unwrap();
        assert!(close(es(&d, 1.0 - 1e-6).unwrap(), -d.mean(), 1e-5));
    }

    #[test]
    fn expectile_examples() {
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.0, 0.4), (5.0, 0.5)]).unwrap();
        assert!(close(expectile(&d, 0.5).unwrap().mu, d.mean(), 1e-13));
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(expectile(&u, 0.5).unwrap().mu, 0.5, 1e-13));
        for (p, tau) in [(0.5, 0.25), (0.2, 0.1), (0.9, 0.75)] {
            let closed = tau * (1.0 - p) / (tau * (1.0 - p) + (1.0 - tau) * p);
            // substituting back into the first-order condition
            let lhs = tau * (1.0 - p) * (1.0 - closed);
            let rhs = (1.0 - tau) * p * closed;
            assert!(close(lhs, rhs, 1e-15));
            let sol = expectile(&tp(0.0, 1.0, p), tau).unwrap();
            assert!(close(sol.mu, closed, 1e-14));
            assert_eq!(sol.p_star, p);
        }
        assert!(expectile(&d, 1.0).is_err());
        assert_eq!(
            expectile(&Distribution::dirac(4.0).unwrap(), 0.3)
                .unwrap()
                .mu,
            4.0
        );
    }

    #[test]
    fn uniform_expectile_matches_closed_form() {
        // on U(0,1): τ(1-x)² = (1-τ)x²  →  x = √τ / (√τ + √(1-τ))
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        for tau in [0.1f64, 0.3, 0.8] {
            let closed = tau.sqrt() / (tau.sqrt() + (1.0 - tau).sqrt());
            assert!(close(expectile(&u, tau).unwrap().mu, closed, 1e-13));
        }
    }

    #[test]
    fn u_c_examples() {
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.0, 0.4), (5.0, 0.5)]).unwrap();
        assert!(close(u_c(&d, 1.0).unwrap(), -d.mean(), 1e-14));
        assert!(close(
            u_c(&Distribution::dirac(1.5).unwrap(), 0.3).unwrap(),
            -1.5,
            1e-14
        ));
        // P(0, 0.5) from the antiderivative -C/((1-C)(v + C(1-v)))
        let c: f64 = 0.5;
        let anti = |v: f64| -c / ((1.0 - c) * (v + c * (1.0 - v)));
        let p_low = anti(0.5) - anti(0.0);
        assert!(close(p_low, 2.0 / 3.0, 1e-15));
        assert!(close(
            u_c(&tp(0.0, 1.0, 0.5), c).unwrap(),
            -(1.0 - p_low),
            1e-14
        ));
        assert!(u_c(&d, 0.0).is_err());
        assert!(u_c(&d, 1.1).is_err());
    }

    #[test]
    fn l_c_examples() {
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.0, 0.4), (5.0, 0.5)]).unwrap();
        assert!(close(l_c(&d, 1.0).unwrap(), -d.mean(), 1e-13));
        for (p, c) in [(0.5, 0.5), (0.1, 0.2), (0.8, 0.9)] {
            let closed = -c * (1.0 - p) / (c * (1.0 - p) + p);
            assert!(close(l_c(&tp(0.0, 1.0, p), c).unwrap(), closed, 1e-14));
        }
        assert!(close(
            l_c(&tp(0.0, 1.0, 0.5), 0.5).unwrap(),
            -1.0 / 3.0,
            1e-14
        ));
    }

    #[test]
    fn l_c_minimization_matches_expectile() {
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.3, 0.4), (5.0, 0.5)]).unwrap();
        for c in [0.1, 0.5, 0.9] {
            let min = l_c_by_minimization(&d, c).unwrap();
            let sol = expectile(&d, c / (c + 1.0)).unwrap();
            assert!(
                close(min.nu, sol.mu, 1e-10),
                "C = {c}: {} vs {}",
                min.nu,
                sol.mu
            );
            assert!(close(min.p, sol.p_star, 1e-6));
        }
    }

    #[test]
    fn evaluate_dispatch() {
        let d = Distribution::finite_atomic(vec![(-2.0, 0.1), (0.3, 0.4), (5.0, 0.5)]).unwrap();
        let a = Distribution::dirac(2.0).unwrap();
        assert_eq!(evaluate(&RiskFunctional::NegMean, &a).unwrap(), -2.0);
        for alpha in [0.05, 0.1, 0.45, 0.9] {
            let spectral = RiskFunctional::Spectral(SpectralMeasure::dirac(alpha).unwrap());
            assert!(close(
                evaluate(&spectral, &d).unwrap(),
                evaluate(&RiskFunctional::Es { alpha }, &d).unwrap(),
                1e-15
            ));
        }
        let fam = RiskFunctional::InfOverFamily(vec![SpectralMeasure::dirac(1.0).unwrap()]);
        assert!(close(evaluate(&fam, &d).unwrap(), -d.mean(), 1e-15));
        assert!(evaluate(&RiskFunctional::InfOverFamily(vec![]), &d).is_err());
    }

    #[test]
    fn uc_integrated_function_is_the_envelope() {
        // ∫_p^1 C/(v + C(1-v))² dv = C(1-p)/(C(1-p)+p): the u_C measure sits
        // exactly on the lower envelope of the integrated spectral functions.
        for c in [0.2, 0.5, 0.8] {
            let m = SpectralMeasure::uc(c).unwrap();
            for k in 1..1000 {
                let p = k as f64 / 1000.0;
                let env = c * (1.0 - p) / (c * (1.0 - p) + p);
                assert!(m.integrated_spectral(p).unwrap() >= env - 1e-12);
                assert!(close(m.integrated_spectral(p).unwrap(), env, 1e-12));
            }
        }
    }
}
