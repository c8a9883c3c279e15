//! Probability measures on `[0, 1]` and the spectral functionals they induce.
//!
//! A [`SpectralMeasure`] is an atom at zero, finitely many atoms in `(0, 1]`,
//! and optionally the absolutely continuous part of the measure behind the
//! upper bound risk measure `u_C`. Everything the crate does with a measure
//! reduces to its spectral function `g_m(u) = ∫_[u,1] α⁻¹ m(dα)` and the
//! interval integrals of `g_m`, which are available in closed form.

use crate::distributions::Distribution;
use crate::error::{check_range, Error, Result};
use crate::numeric::adaptive_simpson;
use crate::scalar::pos;
use crate::Real;

/// Absolute tolerance of the adaptive quadrature used for a parametric law
/// against a measure with a density.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Recursion limit of that quadrature.
pub const QUADRATURE_MAX_DEPTH: u32 = 60;

/// Continuous part of a spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParametricDensity<F> {
    /// Density `2C(1-C)v / (v + C(1-v))³` on `(0, 1)`, total mass `1 - C`.
    /// Always paired with an atom of weight `C` at level one.
    Uc { c: F },
}

impl<F: Real> ParametricDensity<F> {
    fn c(&self) -> F {
        match *self {
            ParametricDensity::Uc { c } => c,
        }
    }

    #[inline]
    fn s(&self, v: F) -> F {
        let c = self.c();
        c + (F::one() - c) * v
    }

    pub fn density(&self, v: F) -> F {
        let c = self.c();
        let s = self.s(v);
        F::lit(2.0) * c * (F::one() - c) * v / (s * s * s)
    }

    pub fn total_mass(&self) -> F {
        F::one() - self.c()
    }

    /// Contribution `∫_[u,1) α⁻¹ density(α) dα = C/s(u)² - C` to the spectral function.
    fn spectral(&self, u: F) -> F {
        let c = self.c();
        let s = self.s(u);
        c / (s * s) - c
    }

    /// `∫_{p1}^{p2}` of the spectral contribution, `C(p2-p1)(1/(s1 s2) - 1)`.
    fn integrated(&self, p1: F, p2: F) -> F {
        let c = self.c();
        c * (p2 - p1) * (F::one() / (self.s(p1) * self.s(p2)) - F::one())
    }
}

/// A probability measure `m` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure<F> {
    atom_at_zero: F,
    /// Sorted by level, levels distinct and in `(0, 1]`, weights positive.
    atoms: Vec<(F, F)>,
    density: Option<ParametricDensity<F>>,
}

impl<F: Real> SpectralMeasure<F> {
    /// Validating constructor; total mass must be one within 1e-10.
    pub fn new(
        atom_at_zero: F,
        atoms: Vec<(F, F)>,
        density: Option<ParametricDensity<F>>,
    ) -> Result<Self> {
        Self::with_tolerance(atom_at_zero, atoms, density, F::tol(1e-10))
    }

    pub(crate) fn with_tolerance(
        atom_at_zero: F,
        atoms: Vec<(F, F)>,
        density: Option<ParametricDensity<F>>,
        tol: F,
    ) -> Result<Self> {
        if !atom_at_zero.is_finite() || atom_at_zero < F::zero() {
            return Err(Error::Invalid(format!(
                "atom at zero must be >= 0, got {atom_at_zero}"
            )));
        }
        let mut atoms = atoms;
        for &(alpha, w) in &atoms {
            if !(alpha.is_finite() && w.is_finite()) {
                return Err(Error::NonFinite);
            }
            check_range(
                "alpha",
                alpha,
                alpha > F::zero() && alpha <= F::one(),
                "(0, 1]",
            )?;
            if w < F::zero() {
                return Err(Error::Invalid(format!("negative atom weight {w}")));
            }
        }
        atoms.retain(|&(_, w)| w > F::zero());
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut merged: Vec<(F, F)> = Vec::with_capacity(atoms.len());
        for (alpha, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == alpha => last.1 = last.1 + w,
                _ => merged.push((alpha, w)),
            }
        }
        if let Some(dens) = &density {
            let c = dens.c();
            check_range("C", c, c > F::zero() && c <= F::one(), "(0, 1]")?;
            let at_one = merged
                .last()
                .filter(|a| a.0 == F::one())
                .map_or(F::zero(), |a| a.1);
            if at_one < c - tol {
                return Err(Error::Invalid(format!(
                    "uc density with C = {c} needs an atom of weight >= C at level 1"
                )));
            }
        }
        let total = atom_at_zero
            + merged.iter().map(|a| a.1).sum::<F>()
            + density.map_or(F::zero(), |d| d.total_mass());
        if (total - F::one()).abs() > tol {
            return Err(Error::Normalization {
                sum: total.to_f64_lossy(),
            });
        }
        Ok(Self {
            atom_at_zero,
            atoms: merged,
            density,
        })
    }

    /// Point mass at `alpha ∈ [0, 1]`; `δ_α` with `α > 0` is the measure of `ES_α`.
    pub fn dirac(alpha: F) -> Result<Self> {
        check_range(
            "alpha",
            alpha,
            alpha >= F::zero() && alpha <= F::one(),
            "[0, 1]",
        )?;
        if alpha == F::zero() {
            Self::new(F::one(), vec![], None)
        } else {
            Self::new(F::zero(), vec![(alpha, F::one())], None)
        }
    }

    /// The two-atom measure
    /// `m_p = p(1-C)/(p(1-C)+C)·δ_p + C/(p(1-C)+C)·δ_1`.
    pub fn mp(p: F, c: F) -> Result<Self> {
        check_range("p", p, p > F::zero() && p < F::one(), "(0, 1)")?;
        check_range("C", c, c > F::zero() && c <= F::one(), "(0, 1]")?;
        let lower = p * (F::one() - c);
        let denom = lower + c;
        Self::new(
            F::zero(),
            vec![(p, lower / denom), (F::one(), c / denom)],
            None,
        )
    }

    /// Measure of the spectral risk measure `u_C`: density part plus atom `C` at one.
    pub fn uc(c: F) -> Result<Self> {
        check_range("C", c, c > F::zero() && c <= F::one(), "(0, 1]")?;
        Self::new(
            F::zero(),
            vec![(F::one(), c)],
            Some(ParametricDensity::Uc { c }),
        )
    }

    pub fn atom_at_zero(&self) -> F {
        self.atom_at_zero
    }

    pub fn atoms(&self) -> &[(F, F)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&ParametricDensity<F>> {
        self.density.as_ref()
    }

    /// `m({1}) = 1`, the measure whose functional is the mean.
    pub fn is_dirac_one(&self) -> bool {
        self.atom_at_zero == F::zero()
            && self.density.is_none_or(|d| d.total_mass() == F::zero())
            && self.atoms.len() == 1
            && self.atoms[0].0 == F::one()
    }

    /// Spectral function `g_m(u) = ∫_[u,1] α⁻¹ m(dα)` for `u ∈ (0, 1]`.
    pub fn spectral_fn(&self, u: F) -> Result<F> {
        check_range("u", u, u > F::zero() && u <= F::one(), "(0, 1]")?;
        Ok(self.spectral_unchecked(u))
    }

    pub(crate) fn spectral_unchecked(&self, u: F) -> F {
        let atoms: F = self
            .atoms
            .iter()
            .filter(|a| a.0 >= u)
            .map(|a| a.1 / a.0)
            .sum();
        atoms + self.density.map_or(F::zero(), |d| d.spectral(u))
    }

    /// `∫_{p1}^{p2} g_m(v) dv` without the atom at zero.
    pub(crate) fn integrated_unchecked(&self, p1: F, p2: F) -> F {
        if p2 <= p1 {
            return F::zero();
        }
        let atoms: F = self
            .atoms
            .iter()
            .map(|&(alpha, w)| w * pos(alpha.min(p2) - p1) / alpha)
            .sum();
        atoms + self.density.map_or(F::zero(), |d| d.integrated(p1, p2))
    }

    /// Integrated spectral function `p ↦ ∫_p^1 g_m(v) dv`.
    pub fn integrated_spectral(&self, p: F) -> Result<F> {
        check_range("p", p, p >= F::zero() && p <= F::one(), "[0, 1]")?;
        Ok(self.integrated_unchecked(p, F::one()))
    }

    /// `P_m(p1, p2) = ∫_{p1}^{p2} g_m`, plus `m({0})` when `p1 = 0`.
    pub fn interval_mass(&self, p1: F, p2: F) -> Result<F> {
        check_range("p1", p1, p1 >= F::zero() && p1 <= F::one(), "[0, 1]")?;
        check_range("p2", p2, p2 >= F::zero() && p2 <= F::one(), "[0, 1]")?;
        if p1 > p2 {
            return Err(Error::Invalid(format!("interval [{p1}, {p2}] is reversed")));
        }
        let zero = if p1 == F::zero() {
            self.atom_at_zero
        } else {
            F::zero()
        };
        Ok(zero + self.integrated_unchecked(p1, p2))
    }

    /// `ν_m(Y) = E[g_m(U) F⁻¹(U)] + m({0})·ess inf Y`.
    pub fn nu(&self, d: &Distribution<F>) -> F {
        self.nu_report(d).value
    }

    /// [`Self::nu`] together with the quadrature error bound, when quadrature was used.
    pub fn nu_report(&self, d: &Distribution<F>) -> NuEvaluation<F> {
        let floor = self.atom_at_zero * d.ess_inf();
        if let (Some(atoms), Some(cum)) = (d.atoms(), d.cumulative_weights()) {
            let mut prev = F::zero();
            let mut total = floor;
            for (a, &c) in atoms.iter().zip(cum) {
                total = total + a.value * self.integrated_unchecked(prev, c);
                prev = c;
            }
            return NuEvaluation {
                value: total,
                quadrature_error: None,
            };
        }
        let (lo, hi) = d.uniform_bounds().expect("non-atomic laws are uniform");
        let width = hi - lo;
        let half = F::lit(0.5);
        let atoms: F = self
            .atoms
            .iter()
            .map(|&(alpha, w)| w * (lo + width * alpha * half))
            .sum();
        let (dens, err) = match self.density {
            Some(dens) if dens.total_mass() > F::zero() => {
                let q = adaptive_simpson(
                    |v| dens.spectral(v) * (lo + width * v),
                    F::zero(),
                    F::one(),
                    F::tol(QUADRATURE_TOL),
                    QUADRATURE_MAX_DEPTH,
                );
                (q.value, Some(q.error_estimate))
            }
            _ => (F::zero(), None),
        };
        NuEvaluation {
            value: floor + atoms + dens,
            quadrature_error: err,
        }
    }

    /// `ν_m(Y) = ∫_[0,1] U_α(Y) m(dα)` with `U_α = α⁻¹∫_0^α F⁻¹` and `U_0 = ess inf`.
    /// Independent of [`Self::nu`]: integrates the measure against `U_α` rather than
    /// the spectral function against the quantile function.
    pub fn nu_via_u(&self, d: &Distribution<F>) -> F {
        let u_alpha = |alpha: F| -> F {
            if alpha == F::zero() {
                d.ess_inf()
            } else {
                d.partial_quantile_integral(alpha)
                    .expect("alpha within [0, 1]")
                    / alpha
            }
        };
        let mut total = self.atom_at_zero * d.ess_inf();
        for &(alpha, w) in &self.atoms {
            total = total + w * u_alpha(alpha);
        }
        if let Some(dens) = self.density.filter(|d| d.total_mass() > F::zero()) {
            // U_α has kinks at the cumulative weights of an atomic law; integrate piecewise
            let mut breaks = vec![F::zero()];
            if let Some(cum) = d.cumulative_weights() {
                breaks.extend(cum.iter().copied().filter(|&c| c > F::zero()));
            } else {
                breaks.push(F::one());
            }
            let tol = F::tol(1e-13);
            for w in breaks.windows(2) {
                let q = adaptive_simpson(
                    |a| dens.density(a) * u_alpha(a),
                    w[0],
                    w[1],
                    tol,
                    QUADRATURE_MAX_DEPTH,
                );
                total = total + q.value;
            }
        }
        total
    }
}

/// Value of `ν_m` with the error bound of the quadrature path, if it ran.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuEvaluation<F> {
    pub value: F,
    pub quadrature_error: Option<F>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spectral_fn_of_dirac_one_is_one() {
        let m = SpectralMeasure::dirac(1.0).unwrap();
        for u in [1e-6, 0.3, 1.0] {
            assert_eq!(m.spectral_fn(u).unwrap(), 1.0);
        }
        assert!(m.spectral_fn(0.0).is_err());
        assert!(m.is_dirac_one());
    }

    #[test]
    fn spectral_fn_of_mq_is_two_step() {
        let (q, c) = (0.3, 0.5);
        let m = SpectralMeasure::mp(q, c).unwrap();
        let alpha_q = q / (c * (1.0 - q) + q);
        for k in 1..=100 {
            let u = k as f64 / 100.0;
            let expected = if u <= q {
                alpha_q / q
            } else {
                (1.0 - alpha_q) / (1.0 - q)
            };
            assert!(close(m.spectral_fn(u).unwrap(), expected, 1e-14), "u = {u}");
        }
    }

    #[test]
    fn spectral_fn_of_uc() {
        let c: f64 = 0.4;
        let m = SpectralMeasure::uc(c).unwrap();
        for u in [0.01, 0.2, 0.5, 0.99, 1.0] {
            let expected = c / (u + c * (1.0 - u)).powi(2);
            assert!(close(m.spectral_fn(u).unwrap(), expected, 1e-13));
        }
    }

    #[test]
    fn interval_mass_examples() {
        let alpha = 0.6;
        let m = SpectralMeasure::dirac(alpha).unwrap();
        assert!(close(
            m.interval_mass(0.1, 0.4).unwrap(),
            0.3 / alpha,
            1e-15
        ));
        assert!(close(m.interval_mass(0.0, 1.0).unwrap(), 1.0, 1e-15));
        let (p, c) = (0.35, 0.7);
        let mp = SpectralMeasure::mp(p, c).unwrap();
        let expected = c * (1.0 - p) / (c * (1.0 - p) + p);
        assert!(close(mp.interval_mass(p, 1.0).unwrap(), expected, 1e-15));
        assert!(mp.interval_mass(0.5, 0.4).is_err());
        let with_zero = SpectralMeasure::new(0.25, vec![(0.5, 0.75)], None).unwrap();
        assert!(close(
            with_zero.interval_mass(0.0, 1.0).unwrap(),
            1.0,
            1e-15
        ));
        assert!(close(
            with_zero.interval_mass(0.0, 0.25).unwrap(),
            0.25 + 0.75 * 0.5,
            1e-15
        ));
    }

    #[test]
    fn uc_total_mass_is_one() {
        for c in [0.01, 0.2, 0.5, 0.9, 1.0] {
            let m = SpectralMeasure::uc(c).unwrap();
            assert!(
                close(m.interval_mass(0.0, 1.0).unwrap(), 1.0, 1e-12),
                "C = {c}"
            );
            // density integrates to 1 - C
            let q = adaptive_simpson(|v| m.density().unwrap().density(v), 0.0, 1.0, 1e-13, 60);
            assert!(close(q.value, 1.0 - c, 1e-10));
        }
    }

    #[test]
    fn normalization_is_enforced() {
        assert!(SpectralMeasure::new(0.0, vec![(0.5, 0.5)], None).is_err());
        assert!(SpectralMeasure::new(0.0, vec![(1.5, 1.0)], None).is_err());
        assert!(SpectralMeasure::new(0.0, vec![(0.0, 1.0)], None).is_err());
        assert!(SpectralMeasure::new(
            0.0,
            vec![(0.5, 0.5)],
            Some(ParametricDensity::Uc { c: 0.5 })
        )
        .is_err());
        let merged = SpectralMeasure::new(0.0, vec![(0.5, 0.5), (0.5, 0.5)], None).unwrap();
        assert_eq!(merged.atoms(), &[(0.5, 1.0)]);
    }

    #[test]
    fn nu_examples() {
        let d = Distribution::dirac(2.5).unwrap();
        for m in [
            SpectralMeasure::dirac(0.3).unwrap(),
            SpectralMeasure::uc(0.2).unwrap(),
            SpectralMeasure::new(0.5, vec![(0.7, 0.5)], None).unwrap(),
        ] {
            assert!(close(m.nu(&d), 2.5, 1e-14));
        }
        let alpha = 0.4;
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(
            SpectralMeasure::dirac(alpha).unwrap().nu(&u),
            alpha / 2.0,
            1e-15
        ));
    }

    #[test]
    fn nu_two_point_display() {
        let (x1, x2, p) = (-1.0, 2.0, 0.3);
        let d = Distribution::two_point(x1, x2, p).unwrap();
        for m in [
            SpectralMeasure::mp(0.6, 0.3).unwrap(),
            SpectralMeasure::uc(0.5).unwrap(),
            SpectralMeasure::new(0.2, vec![(0.1, 0.3), (0.9, 0.5)], None).unwrap(),
        ] {
            let expected =
                m.interval_mass(0.0, p).unwrap() * x1 + m.interval_mass(p, 1.0).unwrap() * x2;
            assert!(close(m.nu(&d), expected, 1e-14));
        }
    }

    #[test]
    fn nu_via_u_examples() {
        let d = Distribution::finite_atomic(vec![(-1.0, 0.2), (0.5, 0.5), (3.0, 0.3)]).unwrap();
        assert!(close(
            SpectralMeasure::dirac(1.0).unwrap().nu_via_u(&d),
            d.mean(),
            1e-15
        ));
        let m = SpectralMeasure::dirac(0.45).unwrap();
        assert!(close(m.nu_via_u(&d), m.nu(&d), 1e-15));
        let z = SpectralMeasure::dirac(0.0).unwrap();
        assert_eq!(z.nu_via_u(&d), -1.0);
        assert_eq!(z.nu(&d), -1.0);
    }

    #[test]
    fn uniform_against_uc_matches_closed_form() {
        // g = C/s² with s = C + (1-C)v, so ν = a + w·∫_0^1 C v / s² dv
        //   = a + w·C/(1-C)²·(C - ln C - 1)
        let (a, b, c) = (-1.0_f64, 3.0, 0.3);
        let w = b - a;
        let k = 1.0 - c;
        let expected = a + w * c / (k * k) * (c - c.ln() - 1.0);
        let m = SpectralMeasure::uc(c).unwrap();
        let u = Distribution::uniform(a, b).unwrap();
        let r = m.nu_report(&u);
        assert!(
            close(r.value, expected, 1e-9),
            "{} vs {}",
            r.value,
            expected
        );
        assert!(r.quadrature_error.unwrap() < 1e-9);
        assert!(close(m.nu_via_u(&u), expected, 1e-9));
    }
}
