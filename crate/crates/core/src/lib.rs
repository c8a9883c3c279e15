//! Law-invariant coherent risk measures and elicitability diagnostics.
//!
//! The crate evaluates value at risk, expected shortfall, spectral risk
//! measures, infima over finite families of spectral measures and expectiles
//! on exactly integrable laws, and provides the tooling to decide whether such
//! a functional can admit a strictly consistent scoring function:
//!
//! * [`distributions`]: two-point, finite atomic, empirical and uniform laws
//!   with exact quantile integrals.
//! * [`spectral`]: measures on `[0, 1]`, spectral functions and `ν_m`.
//! * [`risk`]: the risk functionals, the bound measures `u_C`/`l_C`, and a
//!   randomized coherence-axiom checker.
//! * [`elicit`]: identification of the constant `C`, the convex-level-set
//!   search, and bound checks.
//! * [`scoring`]: quantile and expectile scoring functions and forecast ranking.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`, which is what the CLI uses.

pub mod cli;
pub mod distributions;
pub mod elicit;
pub mod error;
pub mod io;
pub mod numeric;
pub mod risk;
pub mod sampling;
pub mod scalar;
pub mod scoring;
pub mod spectral;

pub use distributions::{Atom, AtomicKind, Distribution};
pub use error::{Error, Result};
pub use risk::{ExpectileSolution, RiskFunctional};
pub use scalar::Real;
pub use scoring::{ForecastSeries, Generator, ScoringFunction};
pub use spectral::{ParametricDensity, SpectralMeasure};

pub type Distribution64 = Distribution<f64>;
pub type Distribution32 = Distribution<f32>;
pub type SpectralMeasure64 = SpectralMeasure<f64>;
pub type SpectralMeasure32 = SpectralMeasure<f32>;
pub type RiskFunctional64 = RiskFunctional<f64>;
pub type RiskFunctional32 = RiskFunctional<f32>;
pub type ScoringFunction64 = ScoringFunction<f64>;
pub type ForecastSeries64 = ForecastSeries<f64>;
