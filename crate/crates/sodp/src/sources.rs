//! Seeded generators for every population the experiments compare: primes,
//! random odd numbers, random integers, prime products, parity-biased random
//! products, prime/random mixes, residue-balanced primes, and p mod r pairs.
//!
//! Every draw is reproducible: identical (spec, size, seed) triples yield
//! identical sequences across runs, platforms, and thread counts. Collected
//! draws ([`draw`]) and streamed draws ([`for_each_value`]) share one value
//! path, so they are identical by construction.

use thiserror::Error;

use crate::digits::{Base, DigitSumTable};
use crate::prime_store::PrimeStore;
use crate::rng::Xoshiro256StarStar;

/// Attempts before giving up on assembling a parity-biased pool.
const MAX_POOL_RETRIES: u32 = 8;

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("range max {m} is too small to draw {what}")]
    RangeTooSmall { m: u64, what: &'static str },
    #[error("bias rate {0} outside [0.5, 1.0]")]
    InvalidBiasRate(f64),
    #[error("prime fraction {0} outside [0, 1]")]
    InvalidPrimeFraction(f64),
    #[error("prime products would overflow 64 bits (max prime {0})")]
    ProductOverflow(u64),
    #[error("could not assemble a parity-biased pool after {0} attempts")]
    PoolConstruction(u32),
    #[error("sample size {0} must be even for a residue-balanced draw")]
    OddSampleSize(usize),
    #[error("residue class {residue} (mod 4) holds {have} primes, need {need}")]
    InsufficientClass {
        residue: u8,
        have: usize,
        need: usize,
    },
    #[error("mod-pairs config invalid: subset {subset} ≤ pool {pool} ≤ store {count} violated")]
    BadModPairsConfig {
        subset: usize,
        pool: usize,
        count: usize,
    },
}

/// Which population a draw samples from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    /// Uniform with replacement from the prime store.
    Primes,
    /// Uniform odd integers in [3, m].
    RandomOdd,
    /// Uniform integers in [2, m].
    RandomAll,
    /// p·q with p, q independent uniform draws from the store (p = q allowed).
    PrimeProducts,
    /// Pairwise products from a pool of size s whose digit-sum parities are
    /// biased Even at the given rate.
    BiasedRandomProducts { bias_rate: f64 },
    /// floor((1−x)·s) uniform integers from [2, m] followed by prime draws.
    Mixed { prime_fraction: f64 },
    /// Half the draws from primes ≡ 1 (mod 4), half from ≡ 3 (mod 4),
    /// shuffled; counteracts Chebyshev's bias.
    ChebyshevBalanced,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Primes => "primes",
            SourceKind::RandomOdd => "random_odd",
            SourceKind::RandomAll => "random_all",
            SourceKind::PrimeProducts => "prime_products",
            SourceKind::BiasedRandomProducts { .. } => "biased_random_products",
            SourceKind::Mixed { .. } => "mixed",
            SourceKind::ChebyshevBalanced => "chebyshev_balanced",
        }
    }
}

/// A number source: kind plus the knobs shared by all kinds. The prime
/// population itself (the first N primes) is the store passed at
/// draw time; `range_max` defaults to that store's largest prime so random
/// baselines cover the same range as the primes they are compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub range_max: Option<u64>,
    pub seed: u64,
}

impl SourceSpec {
    pub fn new(kind: SourceKind, seed: u64) -> SourceSpec {
        SourceSpec {
            kind,
            range_max: None,
            seed,
        }
    }

    pub fn with_range_max(mut self, m: u64) -> SourceSpec {
        self.range_max = Some(m);
        self
    }

    pub fn resolve_range_max(&self, store: &PrimeStore) -> u64 {
        self.range_max.unwrap_or_else(|| store.max_prime())
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        match self.kind {
            SourceKind::BiasedRandomProducts { bias_rate } => {
                if !(0.5..=1.0).contains(&bias_rate) {
                    return Err(SourceError::InvalidBiasRate(bias_rate));
                }
            }
            SourceKind::Mixed { prime_fraction } if !(0.0..=1.0).contains(&prime_fraction) => {
                return Err(SourceError::InvalidPrimeFraction(prime_fraction));
            }
            _ => {}
        }
        Ok(())
    }
}

#[inline]
fn random_odd(m: u64, rng: &mut Xoshiro256StarStar) -> u64 {
    // odd integers in [3, m]; count = (m-1)/2
    3 + 2 * rng.below((m - 1) / 2)
}

#[inline]
fn random_all(m: u64, rng: &mut Xoshiro256StarStar) -> u64 {
    2 + rng.below(m - 1)
}

/// Stream `s` draws from `spec` into `f`. [`draw`] collects exactly this.
pub fn for_each_value<F: FnMut(u64)>(
    spec: &SourceSpec,
    store: &PrimeStore,
    s: usize,
    rng: &mut Xoshiro256StarStar,
    mut f: F,
) -> Result<(), SourceError> {
    spec.validate()?;
    match spec.kind {
        SourceKind::Primes => {
            for _ in 0..s {
                f(store.draw_one(rng));
            }
        }
        SourceKind::RandomOdd => {
            let m = spec.resolve_range_max(store);
            if m < 3 {
                return Err(SourceError::RangeTooSmall {
                    m,
                    what: "odd integers from [3, m]",
                });
            }
            for _ in 0..s {
                f(random_odd(m, rng));
            }
        }
        SourceKind::RandomAll => {
            let m = spec.resolve_range_max(store);
            if m < 2 {
                return Err(SourceError::RangeTooSmall {
                    m,
                    what: "integers from [2, m]",
                });
            }
            for _ in 0..s {
                f(random_all(m, rng));
            }
        }
        SourceKind::PrimeProducts => {
            let max = store.max_prime();
            if max.checked_mul(max).is_none() {
                return Err(SourceError::ProductOverflow(max));
            }
            for _ in 0..s {
                f(store.draw_one(rng) * store.draw_one(rng));
            }
        }
        SourceKind::BiasedRandomProducts { bias_rate } => {
            let m = spec.resolve_range_max(store);
            let pool = biased_pool(bias_rate, s, m, rng)?;
            let len = pool.len() as u64;
            for _ in 0..s {
                f(pool[rng.below(len) as usize] * pool[rng.below(len) as usize]);
            }
        }
        SourceKind::Mixed { prime_fraction } => {
            let m = spec.resolve_range_max(store);
            if m < 2 {
                return Err(SourceError::RangeTooSmall {
                    m,
                    what: "integers from [2, m]",
                });
            }
            let n_random = ((1.0 - prime_fraction) * s as f64).floor() as usize;
            for _ in 0..n_random {
                f(random_all(m, rng));
            }
            for _ in n_random..s {
                f(store.draw_one(rng));
            }
        }
        SourceKind::ChebyshevBalanced => {
            let split = ChebyshevSplit::new(store);
            for v in split.draw(store, s, rng)? {
                f(v);
            }
        }
    }
    Ok(())
}

/// Length-`s` sequence of draws from `spec`, deterministic given the rng.
pub fn draw(
    spec: &SourceSpec,
    store: &PrimeStore,
    s: usize,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<u64>, SourceError> {
    let mut out = Vec::with_capacity(s);
    for_each_value(spec, store, s, rng, |v| out.push(v))?;
    Ok(out)
}

/// Products of two independent uniform prime draws (p = q allowed).
pub fn draw_prime_products(
    store: &PrimeStore,
    s: usize,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<u64>, SourceError> {
    let spec = SourceSpec::new(SourceKind::PrimeProducts, 0);
    draw(&spec, store, s, rng)
}

/// Assemble the parity-biased pool of size `s`: generate 3s random odd
/// numbers in [3, m], split them by base-10 digit-sum parity, and take
/// round(r·s) even-parity members plus the rest odd-parity. Retries with a
/// fresh batch of randoms if a split comes up short.
pub fn biased_pool(
    bias_rate: f64,
    s: usize,
    m: u64,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<u64>, SourceError> {
    if !(0.5..=1.0).contains(&bias_rate) {
        return Err(SourceError::InvalidBiasRate(bias_rate));
    }
    if m < 3 {
        return Err(SourceError::RangeTooSmall {
            m,
            what: "odd integers from [3, m]",
        });
    }
    let n_even = (bias_rate * s as f64).round() as usize;
    let n_odd = s - n_even.min(s);
    let table = DigitSumTable::new(Base::TEN);
    for _ in 0..MAX_POOL_RETRIES {
        let mut evens = Vec::with_capacity(n_even);
        let mut odds = Vec::with_capacity(3 * s / 2);
        for _ in 0..3 * s {
            let v = random_odd(m, rng);
            if table.is_even(v) {
                evens.push(v);
            } else {
                odds.push(v);
            }
        }
        if evens.len() >= n_even && odds.len() >= n_odd {
            let mut pool = evens;
            pool.truncate(n_even);
            pool.extend_from_slice(&odds[..n_odd]);
            return Ok(pool);
        }
    }
    Err(SourceError::PoolConstruction(MAX_POOL_RETRIES))
}

/// Pairwise products from a parity-biased pool (see [`biased_pool`]).
pub fn draw_biased_random_products(
    bias_rate: f64,
    s: usize,
    m: u64,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<u64>, SourceError> {
    let spec = SourceSpec::new(SourceKind::BiasedRandomProducts { bias_rate }, 0).with_range_max(m);
    // store is unused by this kind; a minimal one keeps the signature uniform
    let store = PrimeStore::from_primes(vec![2]).expect("static");
    draw(&spec, &store, s, rng)
}

/// A tainted sample: floor((1−x)·s) uniform integers from [2, m] followed by
/// the remaining draws uniform from the store.
pub fn draw_mixed(
    store: &PrimeStore,
    s: usize,
    prime_fraction: f64,
    m: u64,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<u64>, SourceError> {
    let spec = SourceSpec::new(SourceKind::Mixed { prime_fraction }, 0).with_range_max(m);
    draw(&spec, store, s, rng)
}

/// Store indices split by residue mod 4 (the prime 2 belongs to neither
/// class and is excluded). Build once per store: classification walks the
/// whole population.
pub struct ChebyshevSplit {
    mod1: Vec<u32>,
    mod3: Vec<u32>,
}

impl ChebyshevSplit {
    pub fn new(store: &PrimeStore) -> ChebyshevSplit {
        assert!(
            store.len() < u32::MAX as usize,
            "residue index space is u32"
        );
        let mut mod1 = Vec::new();
        let mut mod3 = Vec::new();
        for (i, &p) in store.primes().iter().enumerate() {
            match p % 4 {
                1 => mod1.push(i as u32),
                3 => mod3.push(i as u32),
                _ => {} // 2
            }
        }
        ChebyshevSplit { mod1, mod3 }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        (self.mod1.len(), self.mod3.len())
    }

    /// s/2 uniform draws from each residue class, concatenated then shuffled.
    pub fn draw(
        &self,
        store: &PrimeStore,
        s: usize,
        rng: &mut Xoshiro256StarStar,
    ) -> Result<Vec<u64>, SourceError> {
        if !s.is_multiple_of(2) {
            return Err(SourceError::OddSampleSize(s));
        }
        let half = s / 2;
        for (residue, class) in [(1u8, &self.mod1), (3u8, &self.mod3)] {
            if class.len() < half {
                return Err(SourceError::InsufficientClass {
                    residue,
                    have: class.len(),
                    need: half,
                });
            }
        }
        let primes = store.primes();
        let mut out = Vec::with_capacity(s);
        for class in [&self.mod1, &self.mod3] {
            let len = class.len() as u64;
            for _ in 0..half {
                out.push(primes[class[rng.below(len) as usize] as usize]);
            }
        }
        rng.shuffle(&mut out);
        Ok(out)
    }
}

/// Residue-balanced prime draw; builds the split each call. Experiments that
/// draw repeatedly hold a [`ChebyshevSplit`] instead.
pub fn draw_chebyshev_balanced(
    store: &PrimeStore,
    s: usize,
    rng: &mut Xoshiro256StarStar,
) -> Result<Vec<u64>, SourceError> {
    ChebyshevSplit::new(store).draw(store, s, rng)
}

/// The p mod r experiment's cross product: a subset of small primes against
/// a batch of random divisors. Residues stream rather than materialize —
/// full scale is 10^8 values.
#[derive(Debug, Clone)]
pub struct ModPairs {
    primes: Vec<u64>,
    divisors: Vec<u64>,
}

impl ModPairs {
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn len(&self) -> usize {
        self.primes.len() * self.divisors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All p mod r in pinned order: primes outer, divisors inner.
    pub fn residues(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes
            .iter()
            .flat_map(move |&p| self.divisors.iter().map(move |&r| p % r))
    }
}

/// Choose `prime_subset` distinct primes uniformly from the first
/// `prime_pool_size` in the store, then `random_count` divisors uniform in
/// [2, m]; rng order is pinned (primes first, then divisors).
pub fn draw_mod_pairs(
    store: &PrimeStore,
    prime_pool_size: usize,
    prime_subset: usize,
    random_count: usize,
    m: u64,
    rng: &mut Xoshiro256StarStar,
) -> Result<ModPairs, SourceError> {
    if prime_subset > prime_pool_size || prime_pool_size > store.len() {
        return Err(SourceError::BadModPairsConfig {
            subset: prime_subset,
            pool: prime_pool_size,
            count: store.len(),
        });
    }
    if m < 2 {
        return Err(SourceError::RangeTooSmall {
            m,
            what: "divisors from [2, m]",
        });
    }
    let primes: Vec<u64> = rng
        .distinct_indices(prime_subset, prime_pool_size)
        .into_iter()
        .map(|i| store.primes()[i])
        .collect();
    let divisors: Vec<u64> = (0..random_count).map(|_| 2 + rng.below(m - 1)).collect();
    Ok(ModPairs { primes, divisors })
}
