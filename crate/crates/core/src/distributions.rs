//! Probability laws on the real line with exact CDFs and generalized inverses.
//!
//! Atomic laws (two-point, finite atomic, empirical) are stored in canonical
//! form: strictly increasing atom values, positive weights, and precomputed
//! cumulative weights `c_1 < ... < c_n = 1`. The quantile function of an atomic
//! law is the step function equal to `x_i` on `(c_{i-1}, c_i]`, so every
//! integral of it is an exact finite sum.

use std::cmp::Ordering;

use crate::error::{check_range, Error, Result};
use crate::scalar::pos;
use crate::Real;

/// Which constructor an atomic law came from. Informational only: equality of
/// distributions compares the laws, not the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomicKind {
    TwoPoint,
    FiniteAtomic,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<F> {
    pub value: F,
    pub weight: F,
}

#[derive(Debug, Clone)]
enum Law<F> {
    Atomic {
        kind: AtomicKind,
        atoms: Vec<Atom<F>>,
        cumulative: Vec<F>,
    },
    Uniform {
        a: F,
        b: F,
    },
}

/// A probability law on ℝ.
#[derive(Debug, Clone)]
pub struct Distribution<F> {
    law: Law<F>,
}

impl<F: Real> PartialEq for Distribution<F> {
    fn eq(&self, other: &Self) -> bool {
        match (&self.law, &other.law) {
            (Law::Atomic { atoms: a, .. }, Law::Atomic { atoms: b, .. }) => a == b,
            (Law::Uniform { a, b }, Law::Uniform { a: c, b: d }) => a == c && b == d,
            _ => false,
        }
    }
}

impl<F: Real> Distribution<F> {
    /// `p·δ_{x1} + (1-p)·δ_{x2}` with `x1 <= x2`.
    pub fn two_point(x1: F, x2: F, p: F) -> Result<Self> {
        if !(x1.is_finite() && x2.is_finite()) {
            return Err(Error::NonFinite);
        }
        check_range("p", p, p >= F::zero() && p <= F::one(), "[0, 1]")?;
        if x1 > x2 {
            return Err(Error::Invalid(format!(
                "two-point law needs x1 <= x2, got {x1} > {x2}"
            )));
        }
        let atoms = if x1 == x2 || p == F::one() {
            vec![Atom {
                value: x1,
                weight: F::one(),
            }]
        } else if p == F::zero() {
            vec![Atom {
                value: x2,
                weight: F::one(),
            }]
        } else {
            vec![
                Atom {
                    value: x1,
                    weight: p,
                },
                Atom {
                    value: x2,
                    weight: F::one() - p,
                },
            ]
        };
        let cumulative = if atoms.len() == 2 {
            vec![p, F::one()]
        } else {
            vec![F::one()]
        };
        Ok(Self {
            law: Law::Atomic {
                kind: AtomicKind::TwoPoint,
                atoms,
                cumulative,
            },
        })
    }

    /// Point mass at `x`.
    pub fn dirac(x: F) -> Result<Self> {
        Self::finite_atomic(vec![(x, F::one())])
    }

    /// Finite atomic law from `(value, weight)` pairs in any order. Equal values
    /// are merged and zero weights dropped. Weights must sum to one within 1e-12.
    pub fn finite_atomic(pairs: Vec<(F, F)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("atomic distribution"));
        }
        let mut sum = F::zero();
        for &(x, w) in &pairs {
            if !(x.is_finite() && w.is_finite()) {
                return Err(Error::NonFinite);
            }
            if w < F::zero() {
                return Err(Error::Normalization {
                    sum: w.to_f64_lossy(),
                });
            }
            sum = sum + w;
        }
        if (sum - F::one()).abs() > F::tol(1e-12) {
            return Err(Error::Normalization {
                sum: sum.to_f64_lossy(),
            });
        }
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut atoms: Vec<Atom<F>> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if w == F::zero() {
                continue;
            }
            match atoms.last_mut() {
                Some(last) if last.value == x => last.weight = last.weight + w,
                _ => atoms.push(Atom {
                    value: x,
                    weight: w,
                }),
            }
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = F::zero();
        for a in &atoms {
            acc = acc + a.weight;
            cumulative.push(acc.min(F::one()));
        }
        if let Some(last) = cumulative.last_mut() {
            *last = F::one();
        }
        Ok(Self {
            law: Law::Atomic {
                kind: AtomicKind::FiniteAtomic,
                atoms,
                cumulative,
            },
        })
    }

    /// Uniform law on a sample (plug-in estimator), each observation weight `1/n`.
    pub fn empirical(samples: &[F]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("sample"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let n = F::from_usize_lossy(sorted.len());
        let mut atoms = Vec::new();
        let mut cumulative = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            atoms.push(Atom {
                value: sorted[i],
                weight: F::from_usize_lossy(j - i) / n,
            });
            cumulative.push(F::from_usize_lossy(j) / n);
            i = j;
        }
        Ok(Self {
            law: Law::Atomic {
                kind: AtomicKind::Empirical,
                atoms,
                cumulative,
            },
        })
    }

    /// Uniform law on `[a, b]`, `a < b`.
    pub fn uniform(a: F, b: F) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite);
        }
        if a >= b {
            return Err(Error::Invalid(format!(
                "uniform law needs a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self {
            law: Law::Uniform { a, b },
        })
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.law, Law::Atomic { .. })
    }

    pub fn kind(&self) -> Option<AtomicKind> {
        match &self.law {
            Law::Atomic { kind, .. } => Some(*kind),
            Law::Uniform { .. } => None,
        }
    }

    /// Canonical atoms, `None` for parametric laws.
    pub fn atoms(&self) -> Option<&[Atom<F>]> {
        match &self.law {
            Law::Atomic { atoms, .. } => Some(atoms),
            Law::Uniform { .. } => None,
        }
    }

    /// Cumulative weights `c_1, ..., c_n` of the canonical atoms.
    pub fn cumulative_weights(&self) -> Option<&[F]> {
        match &self.law {
            Law::Atomic { cumulative, .. } => Some(cumulative),
            Law::Uniform { .. } => None,
        }
    }

    /// Bounds `[a, b]` of the uniform variant.
    pub fn uniform_bounds(&self) -> Option<(F, F)> {
        match self.law {
            Law::Uniform { a, b } => Some((a, b)),
            Law::Atomic { .. } => None,
        }
    }

    /// Essential infimum: smallest atom, or `a` for `Uniform(a, b)`.
    pub fn ess_inf(&self) -> F {
        match &self.law {
            Law::Atomic { atoms, .. } => atoms[0].value,
            Law::Uniform { a, .. } => *a,
        }
    }

    pub fn ess_sup(&self) -> F {
        match &self.law {
            Law::Atomic { atoms, .. } => atoms[atoms.len() - 1].value,
            Law::Uniform { b, .. } => *b,
        }
    }

    pub fn mean(&self) -> F {
        match &self.law {
            Law::Atomic { atoms, .. } => atoms.iter().map(|a| a.value * a.weight).sum(),
            Law::Uniform { a, b } => (*a + *b) * F::lit(0.5),
        }
    }

    /// Right-continuous CDF `F(x) = P(Y <= x)`.
    pub fn cdf(&self, x: F) -> F {
        match &self.law {
            Law::Atomic {
                atoms, cumulative, ..
            } => {
                let k = atoms.partition_point(|a| a.value <= x);
                if k == 0 {
                    F::zero()
                } else {
                    cumulative[k - 1]
                }
            }
            Law::Uniform { a, b } => ((x - *a) / (*b - *a)).max(F::zero()).min(F::one()),
        }
    }

    /// Left limit `F(x-) = P(Y < x)`.
    pub fn cdf_left(&self, x: F) -> F {
        match &self.law {
            Law::Atomic {
                atoms, cumulative, ..
            } => {
                let k = atoms.partition_point(|a| a.value < x);
                if k == 0 {
                    F::zero()
                } else {
                    cumulative[k - 1]
                }
            }
            Law::Uniform { .. } => self.cdf(x),
        }
    }

    /// Generalized inverse `inf{x : F(x) >= v}` for `v` in `(0, 1]`.
    pub fn quantile(&self, v: F) -> Result<F> {
        check_range("v", v, v > F::zero() && v <= F::one(), "(0, 1]")?;
        Ok(self.quantile_unchecked(v))
    }

    pub(crate) fn quantile_unchecked(&self, v: F) -> F {
        match &self.law {
            Law::Atomic {
                atoms, cumulative, ..
            } => {
                let i = cumulative.partition_point(|&c| c < v).min(atoms.len() - 1);
                atoms[i].value
            }
            Law::Uniform { a, b } => *a + (*b - *a) * v,
        }
    }

    /// `∫_0^p F⁻¹(v) dv`, exact for atomic laws and closed form for `Uniform`.
    pub fn partial_quantile_integral(&self, p: F) -> Result<F> {
        check_range("p", p, p >= F::zero() && p <= F::one(), "[0, 1]")?;
        Ok(match &self.law {
            Law::Atomic {
                atoms, cumulative, ..
            } => {
                let mut prev = F::zero();
                let mut total = F::zero();
                for (a, &c) in atoms.iter().zip(cumulative) {
                    if prev >= p {
                        break;
                    }
                    total = total + a.value * pos(c.min(p) - prev);
                    prev = c;
                }
                total
            }
            Law::Uniform { a, b } => *a * p + (*b - *a) * p * p * F::lit(0.5),
        })
    }

    /// Right-hand side of the Acerbi–Tasche identity,
    /// `∫_{(-∞, q]} y dF(y) + q·(p - F(q))` with `q = F⁻¹(p)`. It agrees with
    /// [`Self::partial_quantile_integral`] but is computed from the law side.
    pub fn partial_quantile_integral_by_law(&self, p: F) -> Result<F> {
        check_range("p", p, p >= F::zero() && p <= F::one(), "[0, 1]")?;
        if p == F::zero() {
            return Ok(F::zero());
        }
        let q = self.quantile_unchecked(p);
        let fq = self.cdf(q);
        let head = match &self.law {
            Law::Atomic { atoms, .. } => atoms
                .iter()
                .take_while(|a| a.value <= q)
                .map(|a| a.value * a.weight)
                .sum(),
            Law::Uniform { a, b } => (q * q - *a * *a) / ((*b - *a) * F::lit(2.0)),
        };
        Ok(head + q * (p - fq))
    }

    /// Mixture `p·d0 + (1-p)·d1` of two atomic laws.
    pub fn mix(d0: &Self, d1: &Self, p: F) -> Result<Self> {
        check_range("p", p, p >= F::zero() && p <= F::one(), "[0, 1]")?;
        let (a0, a1) = match (d0.atoms(), d1.atoms()) {
            (Some(a0), Some(a1)) => (a0, a1),
            _ => {
                return Err(Error::Unsupported(
                    "mixtures of parametric distributions".into(),
                ))
            }
        };
        let q = F::one() - p;
        let pairs = a0
            .iter()
            .map(|a| (a.value, p * a.weight))
            .chain(a1.iter().map(|a| (a.value, q * a.weight)))
            .collect();
        Self::finite_atomic(pairs)
    }

    /// Law of `Y + c`.
    pub fn shifted(&self, c: F) -> Self {
        self.map_increasing(|x| x + c, |a, b| (a + c, b + c))
    }

    /// Law of `λ·Y` for `λ >= 0`.
    pub fn scaled(&self, lambda: F) -> Result<Self> {
        check_range("lambda", lambda, lambda >= F::zero(), "[0, ∞)")?;
        if lambda == F::zero() {
            return Self::dirac(F::zero());
        }
        Ok(self.map_increasing(|x| x * lambda, |a, b| (a * lambda, b * lambda)))
    }

    fn map_increasing(&self, f: impl Fn(F) -> F, g: impl Fn(F, F) -> (F, F)) -> Self {
        match &self.law {
            Law::Atomic {
                kind,
                atoms,
                cumulative,
            } => {
                let mapped: Vec<_> = atoms
                    .iter()
                    .map(|a| Atom {
                        value: f(a.value),
                        weight: a.weight,
                    })
                    .collect();
                // rounding can collapse neighbouring atoms; re-canonicalize then
                if mapped.windows(2).all(|w| w[0].value < w[1].value) {
                    Self {
                        law: Law::Atomic {
                            kind: *kind,
                            atoms: mapped,
                            cumulative: cumulative.clone(),
                        },
                    }
                } else {
                    Self::finite_atomic(mapped.iter().map(|a| (a.value, a.weight)).collect())
                        .expect("weights unchanged")
                }
            }
            Law::Uniform { a, b } => {
                let (a, b) = g(*a, *b);
                Self {
                    law: Law::Uniform { a, b },
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(x1: f64, x2: f64, p: f64) -> Distribution<f64> {
        Distribution::two_point(x1, x2, p).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let d = tp(0.0, 1.0, 0.5);
        assert_eq!(d.cdf(0.0), 0.5);
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(1.0), 1.0);
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.cdf(0.3), 0.3);
    }

    #[test]
    fn quantile_examples() {
        let d = tp(0.0, 1.0, 0.5);
        assert_eq!(d.quantile(0.5).unwrap(), 0.0);
        assert_eq!(d.quantile(0.6).unwrap(), 1.0);
        let e = Distribution::empirical(&[3.0, 1.0, 2.0]).unwrap();
        // brute force: smallest sample x with #{y <= x}/3 >= 1/3
        let v = 1.0 / 3.0;
        let brute = [1.0, 2.0, 3.0]
            .into_iter()
            .filter(|&x| [1.0, 2.0, 3.0].iter().filter(|&&y| y <= x).count() as f64 / 3.0 >= v)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(e.quantile(v).unwrap(), brute);
        assert_eq!(brute, 1.0);
    }

    #[test]
    fn quantile_rejects_bad_levels() {
        let d = tp(0.0, 1.0, 0.5);
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.5).is_err());
        assert!(d.quantile(-0.1).is_err());
        assert_eq!(d.quantile(1.0).unwrap(), 1.0);
    }

    #[test]
    fn partial_integral_examples() {
        let d = tp(0.0, 1.0, 0.5);
        assert_eq!(d.partial_quantile_integral(0.0).unwrap(), 0.0);
        // midpoint Riemann sum of the step quantile function
        let n = 300_000;
        let riemann: f64 = (0..n)
            .map(|i| {
                let v = 0.75 * (i as f64 + 0.5) / n as f64;
                if v <= 0.5 {
                    0.0
                } else {
                    1.0
                }
            })
            .sum::<f64>()
            * 0.75
            / n as f64;
        assert!((riemann - 0.25).abs() < 1e-5);
        assert!((d.partial_quantile_integral(0.75).unwrap() - 0.25).abs() < 1e-15);
        let u = Distribution::<f64>::uniform(0.0, 1.0).unwrap();
        assert!((u.partial_quantile_integral(0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!((u.partial_quantile_integral_by_law(0.5).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn two_point_canonicalization() {
        let d = tp(2.0, 2.0, 0.3);
        assert_eq!(d.atoms().unwrap().len(), 1);
        assert_eq!(d, Distribution::dirac(2.0).unwrap());
        assert!(Distribution::two_point(1.0, 0.0, 0.5).is_err());
        assert_eq!(tp(0.0, 1.0, 0.0), Distribution::dirac(1.0).unwrap());
    }

    #[test]
    fn duplicate_atoms_merge() {
        let d = Distribution::finite_atomic(vec![(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        let atoms = d.atoms().unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(
            atoms[1],
            Atom {
                value: 1.0,
                weight: 0.5
            }
        );
        assert!(Distribution::finite_atomic(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(Distribution::finite_atomic(vec![(0.0, 1.2), (1.0, -0.2)]).is_err());
    }

    #[test]
    fn mixture_examples() {
        let d0 = Distribution::dirac(0.0).unwrap();
        let d1 = Distribution::dirac(1.0).unwrap();
        assert_eq!(Distribution::mix(&d0, &d1, 0.5).unwrap(), tp(0.0, 1.0, 0.5));
        let d = tp(0.0, 1.0, 0.5);
        let m = Distribution::mix(&d, &d1, 0.5).unwrap();
        assert_eq!(
            m.atoms().unwrap(),
            &[
                Atom {
                    value: 0.0,
                    weight: 0.25
                },
                Atom {
                    value: 1.0,
                    weight: 0.75
                }
            ]
        );
        assert_eq!(Distribution::mix(&d, &d, 0.3).unwrap(), d);
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(Distribution::mix(&u, &d, 0.5).is_err());
    }

    #[test]
    fn empirical_weights_are_exact() {
        let e = Distribution::empirical(&[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.cumulative_weights().unwrap(), &[0.25, 0.75, 1.0]);
        assert_eq!(e.mean(), 2.0);
        assert_eq!(e.partial_quantile_integral(1.0).unwrap(), 2.0);
    }

    #[test]
    fn works_in_f32() {
        let d = Distribution::<f32>::two_point(0.0, 1.0, 0.25).unwrap();
        assert_eq!(d.quantile(0.5).unwrap(), 1.0);
        assert!((d.partial_quantile_integral(1.0).unwrap() - 0.75).abs() < 1e-6);
    }
}
