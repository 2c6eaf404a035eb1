//! Sum-of-digits parity workbench.
//!
//! Builds prime populations, measures digit-sum parity bias with seeded
//! Monte Carlo trials, and runs the full battery of comparison experiments
//! (random baselines, a prime/random distinguisher, prime products, biased
//! random products, tainted mixes, Chebyshev-balanced samples, modular
//! residues, base sweeps), emitting machine-readable CSV.
//!
//! Everything seeded is bit-identical across runs, platforms, and thread
//! counts; see [`rng`] for the pinned generators.

pub mod digits;
pub mod experiments;
pub mod prime_store;
pub mod report;
pub mod rng;
pub mod sources;
pub mod stats;

pub use digits::{digit_parity, digit_sum, Base, DigitSumTable, Parity};
pub use experiments::{
    count_even, distinguish, full_census, run_parity_sweep, CensusResult, DistinguisherConfig,
    DistinguisherRun, SweepResult, Verdict,
};
pub use prime_store::{build_primes, PrimeStore};
pub use rng::Xoshiro256StarStar;
pub use sources::{SourceKind, SourceSpec};
pub use stats::{
    binomial_cdf, binomial_sf, chebyshev_bound, linear_fit, quadratic_fit_lnx, summarize_trials,
    FitKind, FitResult, TrialSummary,
};
