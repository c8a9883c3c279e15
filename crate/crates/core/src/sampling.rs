//! Random laws and spectral measures for randomized checks.

use rand::Rng;

use crate::distributions::Distribution;
use crate::spectral::SpectralMeasure;
use crate::Real;

fn weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Finite atomic law with `1..=max_atoms` distinct atoms in `[lo, hi]`.
pub fn random_atomic<F: Real, R: Rng + ?Sized>(
    rng: &mut R,
    max_atoms: usize,
    lo: f64,
    hi: f64,
) -> Distribution<F> {
    let n = rng.gen_range(1..=max_atoms.max(1));
    let mut pairs: Vec<(F, F)> = weights(rng, n)
        .into_iter()
        .map(|w| (F::lit(rng.gen_range(lo..=hi)), F::lit(w)))
        .collect();
    let head: F = pairs[..n - 1].iter().map(|p| p.1).sum();
    pairs[n - 1].1 = F::one() - head;
    Distribution::finite_atomic(pairs).expect("weights sum to one")
}

/// Spectral measure with a random atom at zero and up to four atoms in
/// `(0, 1]`, or, a quarter of the time, the measure of `u_C` for random `C`.
pub fn random_measure<F: Real, R: Rng + ?Sized>(rng: &mut R) -> SpectralMeasure<F> {
    if rng.gen_bool(0.25) {
        return SpectralMeasure::uc(F::lit(rng.gen_range(0.05..=0.95))).expect("C in (0, 1)");
    }
    let n = rng.gen_range(1..=4);
    let w = weights(rng, n + 1);
    let atom0 = if rng.gen_bool(0.3) { w[0] } else { 0.0 };
    let used = atom0 + w[1..].iter().sum::<f64>();
    let mut atoms: Vec<(F, F)> = w[1..]
        .iter()
        .map(|&wi| (F::lit(rng.gen_range(0.01..=1.0)), F::lit(wi / used)))
        .collect();
    let head: F = atoms[..n - 1].iter().map(|a| a.1).sum();
    let atom0 = F::lit(atom0 / used);
    atoms[n - 1].1 = F::one() - atom0 - head;
    SpectralMeasure::new(atom0, atoms, None).expect("normalized by construction")
}
