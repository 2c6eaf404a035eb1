//! The experiment battery: exact parity census, seeded trial sweeps, the
//! prime/random distinguisher, product and bias tests, tainting sweeps,
//! residue balancing, the p mod r experiment, and base sweeps.
//!
//! Trials within a point run in parallel; every trial's generator derives
//! from `trial_rng(point_master, trial_index)` and the per-point masters
//! derive from the experiment seed, so results are identical in any order,
//! at any thread count. Aggregation is a fold over trial counts sorted by
//! trial index.

use rayon::prelude::*;
use thiserror::Error;

use crate::digits::{Base, DigitSumTable};
use crate::prime_store::PrimeStore;
use crate::rng::{stream_seed, trial_rng, Xoshiro256StarStar};
use crate::sources::{
    draw_mod_pairs, for_each_value, ChebyshevSplit, SourceError, SourceKind, SourceSpec,
};
use crate::stats::{
    linear_fit, quadratic_fit_lnx, summarize_trials, FitResult, StatsError, TrialSummary,
};

/// The sample-size grid of the reference results (1e5 … 5e6).
pub const DEFAULT_SWEEP_GRID: [u64; 14] = [
    100_000, 200_000, 300_000, 400_000, 500_000, 600_000, 700_000, 800_000, 900_000, 1_000_000,
    2_000_000, 3_000_000, 4_000_000, 5_000_000,
];

/// Bias rates 0.5 … 1.0 for the biased-product sweep.
pub const DEFAULT_BIAS_RATES: [f64; 11] =
    [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];

/// Prime fractions 10% … 90% for the tainting sweep.
pub const DEFAULT_PRIME_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Even bases exercised by the base sweep (odd bases are degenerate).
pub const DEFAULT_EVEN_BASES: [u64; 6] = [2, 4, 6, 8, 10, 16];

pub const DEFAULT_MOD_PRIME_POOL: usize = 1000;
pub const DEFAULT_MOD_PRIME_SUBSET: usize = 100;
pub const DEFAULT_MOD_RANDOM_COUNT: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("base {0} is odd: every odd number has an odd digit sum there")]
    DegenerateBase(u64),
    #[error("axis values must be nonempty, positive, and strictly increasing")]
    BadGrid,
    #[error("z-score curve fitting needs a sample-size sweep with ≥ 4 points")]
    WrongAxis,
    #[error("population is empty")]
    EmptyPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SampleSize,
    BiasRate,
    PrimeFraction,
    Base,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SampleSize => "sample_size",
            Axis::BiasRate => "bias_rate",
            Axis::PrimeFraction => "prime_fraction",
            Axis::Base => "base",
        }
    }
}

/// Exact parity counts over an entire prime store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusResult {
    pub prime_count: u64,
    pub base: Base,
    pub odd_count: u64,
    pub even_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub summary: TrialSummary,
}

/// One experiment sweep: one [`TrialSummary`] per axis value, with a fit
/// attached where the experiment defines one.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "Yes",
            Verdict::No => "No",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinguisherConfig {
    pub sample_size: u64,
    pub trials: u64,
    pub threshold: f64,
    pub base: Base,
}

impl Default for DistinguisherConfig {
    fn default() -> Self {
        DistinguisherConfig {
            sample_size: 100_000,
            trials: 1000,
            threshold: 5.0,
            base: Base::TEN,
        }
    }
}

/// Full record of one distinguisher run.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguisherRun {
    pub sample_size: u64,
    pub trials: u64,
    pub threshold: f64,
    pub per_trial_even: Vec<u64>,
    pub p_avg: f64,
    pub exp_avg: f64,
    pub std_avg: f64,
    pub z_avg: f64,
    pub verdict: Verdict,
}

/// How one trial obtains its values.
enum Drawer<'a> {
    /// Dispatch through a [`SourceSpec`].
    Spec(&'a SourceSpec),
    /// Residue-balanced prime draws from a prebuilt split.
    Balanced(&'a ChebyshevSplit),
    /// Uniform with replacement from a fixed population (file-backed runs).
    Population(&'a [u64]),
}

impl Drawer<'_> {
    fn trial_even_count(
        &self,
        store: &PrimeStore,
        s: usize,
        rng: &mut Xoshiro256StarStar,
        table: &DigitSumTable,
    ) -> Result<u64, SourceError> {
        match self {
            Drawer::Spec(spec) => {
                let mut even = 0u64;
                for_each_value(spec, store, s, rng, |v| even += 1 - table.parity_bit_of(v))?;
                Ok(even)
            }
            Drawer::Balanced(split) => {
                let vals = split.draw(store, s, rng)?;
                Ok(vals.iter().map(|&v| 1 - table.parity_bit_of(v)).sum())
            }
            Drawer::Population(vals) => {
                let len = vals.len() as u64;
                Ok((0..s)
                    .map(|_| 1 - table.parity_bit_of(vals[rng.below(len) as usize]))
                    .sum())
            }
        }
    }
}

/// Per-trial even counts for one experiment point, trials in parallel.
fn point_trial_counts(
    store: &PrimeStore,
    drawer: &Drawer<'_>,
    s: u64,
    trials: u64,
    table: &DigitSumTable,
    point_master: u64,
) -> Result<Vec<u64>, SourceError> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(point_master, t);
            drawer.trial_even_count(store, s as usize, &mut rng, table)
        })
        .collect()
}

fn run_point(
    store: &PrimeStore,
    drawer: &Drawer<'_>,
    s: u64,
    trials: u64,
    table: &DigitSumTable,
    point_master: u64,
) -> Result<TrialSummary, ExperimentError> {
    let counts = point_trial_counts(store, drawer, s, trials, table, point_master)?;
    Ok(summarize_trials(&counts, s)?)
}

fn check_grid(values: &[f64]) -> Result<(), ExperimentError> {
    if values.is_empty()
        || values.iter().any(|&v| v <= 0.0)
        || values.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(ExperimentError::BadGrid);
    }
    Ok(())
}

/// Count of elements whose digit sum is even in the given base.
pub fn count_even(numbers: &[u64], base: Base) -> u64 {
    let table = DigitSumTable::new(base);
    numbers.iter().map(|&n| 1 - table.parity_bit_of(n)).sum()
}

/// Exact digit-sum parity counts over the whole store. Deterministic at any
/// thread count: chunk counts are integers and addition commutes.
pub fn full_census(store: &PrimeStore, base: Base) -> CensusResult {
    let table = DigitSumTable::new(base);
    let even_count: u64 = store
        .primes()
        .par_chunks(1 << 16)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&p| 1 - table.parity_bit_of(p))
                .sum::<u64>()
        })
        .sum();
    CensusResult {
        prime_count: store.count(),
        base,
        odd_count: store.count() - even_count,
        even_count,
    }
}

/// One [`TrialSummary`] per sample size: each of `trials` trials draws `s`
/// values from the source and counts even digit-sum parities.
///
/// Residue-balanced sweeps should go through [`run_chebyshev_experiment`],
/// which reuses one classification of the store across all trials.
pub fn run_parity_sweep(
    store: &PrimeStore,
    sample_sizes: &[u64],
    trials: u64,
    spec: &SourceSpec,
    base: Base,
) -> Result<SweepResult, ExperimentError> {
    let axis_values: Vec<f64> = sample_sizes.iter().map(|&s| s as f64).collect();
    check_grid(&axis_values)?;
    spec.validate()?;
    let table = DigitSumTable::new(base);
    let drawer = Drawer::Spec(spec);
    let mut points = Vec::with_capacity(sample_sizes.len());
    for (i, &s) in sample_sizes.iter().enumerate() {
        let summary = run_point(
            store,
            &drawer,
            s,
            trials,
            &table,
            stream_seed(spec.seed, i as u64),
        )?;
        points.push(SweepPoint {
            axis_value: s as f64,
            summary,
        });
    }
    Ok(SweepResult {
        axis: Axis::SampleSize,
        points,
        fit: None,
    })
}

/// Quadratic-in-ln(x) fit of z-score against sample size.
pub fn fit_zscore_curve(sweep: &SweepResult) -> Result<FitResult, ExperimentError> {
    if sweep.axis != Axis::SampleSize || sweep.points.len() < 4 {
        return Err(ExperimentError::WrongAxis);
    }
    let pts: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .map(|p| (p.axis_value, p.summary.z_score))
        .collect();
    Ok(quadratic_fit_lnx(&pts)?)
}

fn distinguisher_from_counts(
    counts: Vec<u64>,
    config: &DistinguisherConfig,
) -> Result<DistinguisherRun, ExperimentError> {
    let summary = summarize_trials(&counts, config.sample_size)?;
    let verdict = if summary.z_score > config.threshold {
        Verdict::Yes
    } else {
        Verdict::No
    };
    Ok(DistinguisherRun {
        sample_size: config.sample_size,
        trials: config.trials,
        threshold: config.threshold,
        per_trial_even: counts,
        p_avg: summary.avg_even,
        exp_avg: summary.expectation,
        std_avg: summary.std_dev,
        z_avg: summary.z_score,
        verdict,
    })
}

/// The testing algorithm: run `trials` samples of `sample_size` draws from
/// the source, average the even counts, and answer Yes iff the averaged
/// z-score clears the threshold. Per-trial generators derive directly as
/// `trial_rng(spec.seed, trial_index)`.
pub fn distinguish(
    store: &PrimeStore,
    spec: &SourceSpec,
    config: &DistinguisherConfig,
) -> Result<DistinguisherRun, ExperimentError> {
    spec.validate()?;
    let table = DigitSumTable::new(config.base);
    let counts = point_trial_counts(
        store,
        &Drawer::Spec(spec),
        config.sample_size,
        config.trials,
        &table,
        spec.seed,
    )?;
    distinguisher_from_counts(counts, config)
}

/// Distinguisher over a fixed population (e.g. numbers read from a file),
/// sampled uniformly with replacement.
pub fn distinguish_population(
    values: &[u64],
    config: &DistinguisherConfig,
    seed: u64,
) -> Result<DistinguisherRun, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptyPopulation);
    }
    let table = DigitSumTable::new(config.base);
    // never consulted by a population drawer
    let store = PrimeStore::from_primes(vec![2]).expect("static");
    let counts = point_trial_counts(
        &store,
        &Drawer::Population(values),
        config.sample_size,
        config.trials,
        &table,
        seed,
    )?;
    distinguisher_from_counts(counts, config)
}

/// Sweep over products of two uniform prime draws. Products skew Even; the
/// signed z-scores in the result keep that direction visible.
pub fn run_product_experiment(
    store: &PrimeStore,
    sample_sizes: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let spec = SourceSpec::new(SourceKind::PrimeProducts, seed);
    run_parity_sweep(store, sample_sizes, trials, &spec, Base::TEN)
}

/// Sweep over parity-biased random products for each bias rate.
pub fn run_bias_sweep(
    rates: &[f64],
    sample_size: u64,
    trials: u64,
    range_max: u64,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    check_grid(rates)?;
    if rates.iter().any(|r| !(0.5..=1.0).contains(r)) {
        return Err(ExperimentError::Source(SourceError::InvalidBiasRate(
            rates
                .iter()
                .copied()
                .find(|r| !(0.5..=1.0).contains(r))
                .unwrap(),
        )));
    }
    let table = DigitSumTable::new(Base::TEN);
    // the biased pool is built from scratch per trial; no store is sampled
    let store = PrimeStore::from_primes(vec![2]).expect("static");
    let mut points = Vec::with_capacity(rates.len());
    for (i, &rate) in rates.iter().enumerate() {
        let spec = SourceSpec::new(SourceKind::BiasedRandomProducts { bias_rate: rate }, seed)
            .with_range_max(range_max);
        let summary = run_point(
            &store,
            &Drawer::Spec(&spec),
            sample_size,
            trials,
            &table,
            stream_seed(seed, i as u64),
        )?;
        points.push(SweepPoint {
            axis_value: rate,
            summary,
        });
    }
    Ok(SweepResult {
        axis: Axis::BiasRate,
        points,
        fit: None,
    })
}

/// Tainting sweep: for each prime fraction x, samples replace their trailing
/// x share with prime draws. Axis values are percentages (the regression of
/// z against percent-primes is the slope the sweep exists to measure); a
/// linear fit attaches whenever enough points exist for one.
pub fn run_mixed_sweep(
    store: &PrimeStore,
    sample_size: u64,
    fractions: &[f64],
    trials: u64,
    range_max: u64,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    check_grid(fractions)?;
    if fractions.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(ExperimentError::Source(SourceError::InvalidPrimeFraction(
            fractions
                .iter()
                .copied()
                .find(|x| !(0.0..=1.0).contains(x))
                .unwrap(),
        )));
    }
    let table = DigitSumTable::new(Base::TEN);
    let mut points = Vec::with_capacity(fractions.len());
    for (i, &x) in fractions.iter().enumerate() {
        let spec = SourceSpec::new(SourceKind::Mixed { prime_fraction: x }, seed)
            .with_range_max(range_max);
        let summary = run_point(
            store,
            &Drawer::Spec(&spec),
            sample_size,
            trials,
            &table,
            stream_seed(seed, i as u64),
        )?;
        points.push(SweepPoint {
            axis_value: 100.0 * x,
            summary,
        });
    }
    let fit_points: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.axis_value, p.summary.z_score))
        .collect();
    let fit = linear_fit(&fit_points).ok();
    Ok(SweepResult {
        axis: Axis::PrimeFraction,
        points,
        fit,
    })
}

/// Residue-balanced sweep: every sample holds s/2 primes ≡ 1 and s/2 ≡ 3
/// (mod 4). The store is classified once and shared across all trials.
pub fn run_chebyshev_experiment(
    store: &PrimeStore,
    sample_sizes: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let axis_values: Vec<f64> = sample_sizes.iter().map(|&s| s as f64).collect();
    check_grid(&axis_values)?;
    if let Some(&odd) = sample_sizes.iter().find(|&&s| s % 2 != 0) {
        return Err(ExperimentError::Source(SourceError::OddSampleSize(
            odd as usize,
        )));
    }
    let split = ChebyshevSplit::new(store);
    let table = DigitSumTable::new(Base::TEN);
    let drawer = Drawer::Balanced(&split);
    let mut points = Vec::with_capacity(sample_sizes.len());
    for (i, &s) in sample_sizes.iter().enumerate() {
        let summary = run_point(
            store,
            &drawer,
            s,
            trials,
            &table,
            stream_seed(seed, i as u64),
        )?;
        points.push(SweepPoint {
            axis_value: s as f64,
            summary,
        });
    }
    Ok(SweepResult {
        axis: Axis::SampleSize,
        points,
        fit: None,
    })
}

/// The p mod r experiment at explicit scale: all residues of the chosen
/// primes × divisors cross product, censused as one binomial sample (t = 1).
pub fn run_mod_experiment_with(
    store: &PrimeStore,
    prime_pool_size: usize,
    prime_subset: usize,
    random_count: usize,
    range_max: u64,
    seed: u64,
) -> Result<TrialSummary, ExperimentError> {
    let mut rng = trial_rng(seed, 0);
    let pairs = draw_mod_pairs(
        store,
        prime_pool_size,
        prime_subset,
        random_count,
        range_max,
        &mut rng,
    )?;
    let table = DigitSumTable::new(Base::TEN);
    let even: u64 = pairs
        .primes()
        .par_iter()
        .map(|&p| {
            pairs
                .divisors()
                .iter()
                .map(|&r| 1 - table.parity_bit_of(p % r))
                .sum::<u64>()
        })
        .sum();
    Ok(summarize_trials(&[even], pairs.len() as u64)?)
}

/// The p mod r experiment at reference scale: 100 primes from the first
/// 1000, crossed with 10^6 divisors drawn from [2, max_prime].
pub fn run_mod_experiment(store: &PrimeStore, seed: u64) -> Result<TrialSummary, ExperimentError> {
    run_mod_experiment_with(
        store,
        DEFAULT_MOD_PRIME_POOL,
        DEFAULT_MOD_PRIME_SUBSET,
        DEFAULT_MOD_RANDOM_COUNT,
        store.max_prime(),
        seed,
    )
}

/// Prime parity trials across even bases. Odd bases are rejected: digit sum
/// parity there equals the number's own parity, so every odd prime lands Odd.
pub fn run_base_sweep(
    store: &PrimeStore,
    bases: &[Base],
    sample_size: u64,
    trials: u64,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let axis_values: Vec<f64> = bases.iter().map(|b| b.value() as f64).collect();
    check_grid(&axis_values)?;
    if let Some(odd) = bases.iter().find(|b| b.is_odd()) {
        return Err(ExperimentError::DegenerateBase(odd.value()));
    }
    let spec = SourceSpec::new(SourceKind::Primes, seed);
    let mut points = Vec::with_capacity(bases.len());
    for (i, &base) in bases.iter().enumerate() {
        let table = DigitSumTable::new(base);
        let summary = run_point(
            store,
            &Drawer::Spec(&spec),
            sample_size,
            trials,
            &table,
            stream_seed(seed, i as u64),
        )?;
        points.push(SweepPoint {
            axis_value: base.value() as f64,
            summary,
        });
    }
    Ok(SweepResult {
        axis: Axis::Base,
        points,
        fit: None,
    })
}
