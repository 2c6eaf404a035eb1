//! Generation, persistence, and uniform sampling of the first N primes.
//!
//! `build_primes` runs a segmented sieve of Eratosthenes over odd numbers.
//! The sieve limit comes from the Rosser bound `p_n < n(ln n + ln ln n)`
//! (valid for n ≥ 6); if a limit ever proves too small the sieve extends it
//! and keeps going rather than returning a short list.
//!
//! The on-disk cache is little-endian and fully pinned: magic `SODP`,
//! format version (u32), count (u64), the primes (u64 each), and a trailing
//! checksum (sum of all primes mod 2^64).

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::rng::Xoshiro256StarStar;

const MAGIC: [u8; 4] = *b"SODP";
const FORMAT_VERSION: u32 = 1;

/// Odds per sieve segment; 128 KiB of mark bits keeps the segment in L2.
const SEGMENT_ODDS: usize = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("prime count must be at least 1")]
    ZeroCount,
    #[error("cannot allocate storage for {requested} primes")]
    OutOfMemory { requested: u64 },
    #[error("prime list must be nonempty and strictly increasing")]
    NotIncreasing,
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("bad magic bytes (not a prime cache)")]
    BadMagic,
    #[error("unsupported cache format version {0}")]
    BadVersion(u32),
    #[error("cache file truncated mid-payload")]
    Truncated,
    #[error("cache checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("cache payload invalid: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable ordered list of primes with uniform random access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeStore {
    primes: Vec<u64>,
}

impl PrimeStore {
    /// Wrap a caller-supplied population. The list must be nonempty and
    /// strictly increasing; primality is not re-checked, so this is mainly
    /// for degenerate experiment fixtures and file-backed populations.
    pub fn from_primes(primes: Vec<u64>) -> Result<PrimeStore, BuildError> {
        if primes.is_empty() || primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BuildError::NotIncreasing);
        }
        Ok(PrimeStore { primes })
    }

    pub fn count(&self) -> u64 {
        self.primes.len() as u64
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn max_prime(&self) -> u64 {
        *self.primes.last().expect("store is never empty")
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// One uniform draw (with replacement).
    #[inline]
    pub fn draw_one(&self, rng: &mut Xoshiro256StarStar) -> u64 {
        self.primes[rng.below(self.primes.len() as u64) as usize]
    }

    /// `s` independent uniform draws with replacement.
    pub fn sample(&self, s: usize, rng: &mut Xoshiro256StarStar) -> Vec<u64> {
        (0..s).map(|_| self.draw_one(rng)).collect()
    }

    pub fn save_cache(&self, path: &Path) -> Result<(), CacheError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.primes.len() as u64).to_le_bytes())?;
        let mut checksum = 0u64;
        let mut buf = Vec::with_capacity(8 * 8192);
        for chunk in self.primes.chunks(8192) {
            buf.clear();
            for &p in chunk {
                checksum = checksum.wrapping_add(p);
                buf.extend_from_slice(&p.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.write_all(&checksum.to_le_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn load_cache(path: &Path) -> Result<PrimeStore, CacheError> {
        let mut r = BufReader::new(File::open(path)?);

        let mut magic = [0u8; 4];
        read_exact_or_truncated(&mut r, &mut magic)?;
        if magic != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let mut version = [0u8; 4];
        read_exact_or_truncated(&mut r, &mut version)?;
        let version = u32::from_le_bytes(version);
        if version != FORMAT_VERSION {
            return Err(CacheError::BadVersion(version));
        }
        let mut count = [0u8; 8];
        read_exact_or_truncated(&mut r, &mut count)?;
        let count = u64::from_le_bytes(count);
        if count == 0 {
            return Err(CacheError::Corrupt("zero prime count"));
        }
        let count = usize::try_from(count).map_err(|_| CacheError::Corrupt("count overflow"))?;

        let mut primes: Vec<u64> = Vec::new();
        primes
            .try_reserve_exact(count)
            .map_err(|_| CacheError::Corrupt("count exceeds available memory"))?;
        let mut checksum = 0u64;
        let mut buf = vec![0u8; 8 * 8192];
        let mut remaining = count;
        while remaining > 0 {
            let take = remaining.min(8192);
            let bytes = &mut buf[..8 * take];
            read_exact_or_truncated(&mut r, bytes)?;
            for v in bytes.chunks_exact(8) {
                let p = u64::from_le_bytes(v.try_into().unwrap());
                checksum = checksum.wrapping_add(p);
                primes.push(p);
            }
            remaining -= take;
        }

        let mut stored = [0u8; 8];
        read_exact_or_truncated(&mut r, &mut stored)?;
        let stored = u64::from_le_bytes(stored);
        if stored != checksum {
            return Err(CacheError::ChecksumMismatch {
                stored,
                computed: checksum,
            });
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CacheError::Corrupt("primes not strictly increasing"));
        }
        Ok(PrimeStore { primes })
    }
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), CacheError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            CacheError::Truncated
        } else {
            CacheError::Io(e)
        }
    })
}

/// Rosser-style upper bound on the n-th prime: n(ln n + ln ln n) for n ≥ 6.
fn nth_prime_bound(n: u64) -> u64 {
    if n < 6 {
        return 13; // p_5 = 11
    }
    let nf = n as f64;
    let ln = nf.ln();
    (nf * (ln + ln.ln())).ceil() as u64
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    while r > 0 && r * r > n {
        r -= 1;
    }
    r
}

/// Plain sieve for the base primes; `limit` stays near sqrt of the main bound.
fn simple_sieve(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for n in 2..=limit {
        if !composite[n] {
            primes.push(n as u64);
            let mut m = n * n;
            while m <= limit {
                composite[m] = true;
                m += n;
            }
        }
    }
    primes
}

/// Build the first `count` primes. Deterministic; single pass; memory-bounded
/// by the output vector plus one 128 KiB segment.
pub fn build_primes(count: u64) -> Result<PrimeStore, BuildError> {
    if count == 0 {
        return Err(BuildError::ZeroCount);
    }
    let target =
        usize::try_from(count).map_err(|_| BuildError::OutOfMemory { requested: count })?;
    let mut primes: Vec<u64> = Vec::new();
    primes
        .try_reserve_exact(target)
        .map_err(|_| BuildError::OutOfMemory { requested: count })?;
    primes.push(2);

    let mut bound = nth_prime_bound(count);
    let mut base = simple_sieve(isqrt(bound) + 1);
    let mut marks = vec![0u64; SEGMENT_ODDS / 64];
    let mut low: u64 = 3; // first odd covered by the current segment

    while primes.len() < target {
        if low > bound {
            // Unreachable under the Rosser bound, but extend instead of
            // returning a short list if it ever happens.
            bound += bound / 8 + 16;
            base = simple_sieve(isqrt(bound) + 1);
        }
        let high = low + 2 * SEGMENT_ODDS as u64; // exclusive

        marks.fill(0);
        for &p in &base {
            if p == 2 {
                continue;
            }
            if p * p >= high {
                break;
            }
            let mut start = p * p;
            if start < low {
                let k = low.div_ceil(p);
                start = k * p;
                if start % 2 == 0 {
                    start += p;
                }
            }
            let mut idx = ((start - low) / 2) as usize;
            while idx < SEGMENT_ODDS {
                marks[idx >> 6] |= 1 << (idx & 63);
                idx += p as usize;
            }
        }

        'collect: for (w, &word) in marks.iter().enumerate() {
            let mut unmarked = !word;
            while unmarked != 0 {
                let bit = unmarked.trailing_zeros() as u64;
                primes.push(low + 2 * (w as u64 * 64 + bit));
                if primes.len() == target {
                    break 'collect;
                }
                unmarked &= unmarked - 1;
            }
        }
        low = high;
    }

    Ok(PrimeStore { primes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    /// Independent oracle: primes by trial division.
    fn trial_division_primes(count: usize) -> Vec<u64> {
        let mut primes: Vec<u64> = Vec::with_capacity(count);
        let mut n = 2u64;
        while primes.len() < count {
            if primes
                .iter()
                .take_while(|&&p| p * p <= n)
                .all(|&p| !n.is_multiple_of(p))
            {
                primes.push(n);
            }
            n += 1;
        }
        primes
    }

    /// Independent oracle: deterministic Miller–Rabin, valid for all u64.
    fn miller_rabin_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            if n == p {
                return true;
            }
            if n.is_multiple_of(p) {
                return false;
            }
        }
        let mut d = n - 1;
        let mut r = 0;
        while d.is_multiple_of(2) {
            d /= 2;
            r += 1;
        }
        let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
        let pow = |mut b: u64, mut e: u64| {
            let mut acc = 1u64;
            b %= n;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul(acc, b);
                }
                b = mul(b, b);
                e >>= 1;
            }
            acc
        };
        'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            let mut x = pow(a, d);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 0..r - 1 {
                x = mul(x, x);
                if x == n - 1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }

    #[test]
    fn first_five_primes() {
        let store = build_primes(5).unwrap();
        assert_eq!(store.primes(), &[2, 3, 5, 7, 11]);
        assert_eq!(store.count(), 5);
        assert_eq!(store.max_prime(), 11);
    }

    #[test]
    fn count_one_is_just_two() {
        let store = build_primes(1).unwrap();
        assert_eq!(store.primes(), &[2]);
    }

    #[test]
    fn zero_count_rejected() {
        assert_eq!(build_primes(0).unwrap_err(), BuildError::ZeroCount);
    }

    #[test]
    fn thousandth_prime_matches_trial_division() {
        let store = build_primes(1000).unwrap();
        assert_eq!(store.max_prime(), 7919);
        assert_eq!(store.primes(), trial_division_primes(1000).as_slice());
    }

    #[test]
    fn twenty_five_primes_below_one_hundred() {
        assert_eq!(build_primes(25).unwrap().max_prime(), 97);
    }

    #[test]
    fn millionth_prime() {
        assert_eq!(build_primes(1_000_000).unwrap().max_prime(), 15_485_863);
    }

    #[test]
    fn strictly_increasing_across_segment_boundaries() {
        // spans several 2^21-wide segments
        let store = build_primes(500_000).unwrap();
        assert!(store.primes().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(store.primes()[0], 2);
        assert_eq!(store.max_prime(), 7_368_787); // p_500000, cross-checked below
        assert!(miller_rabin_is_prime(store.max_prime()));
    }

    #[test]
    fn random_sample_of_stored_values_passes_miller_rabin() {
        let store = build_primes(100_000).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(17);
        for _ in 0..1000 {
            let p = store.draw_one(&mut rng);
            assert!(
                miller_rabin_is_prime(p),
                "{p} failed an independent primality check"
            );
        }
    }

    #[test]
    fn singleton_store_sampling() {
        let store = PrimeStore::from_primes(vec![2]).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(0);
        assert_eq!(store.sample(3, &mut rng), vec![2, 2, 2]);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let store = build_primes(1000).unwrap();
        let a = store.sample(10, &mut Xoshiro256StarStar::seed_from_u64(42));
        let b = store.sample(10, &mut Xoshiro256StarStar::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_frequency_is_binomial_concentrated() {
        // fixed prime frequency within 5 sigma of s/count
        let store = build_primes(10_000).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(8);
        let s = 1_000_000usize;
        let target = store.primes()[0];
        let hits = (0..s)
            .filter(|_| store.draw_one(&mut rng) == target)
            .count() as f64;
        let p = 1.0 / store.count() as f64;
        let mean = s as f64 * p;
        let sigma = (s as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits - mean).abs() < 5.0 * sigma,
            "hits {hits} vs mean {mean}"
        );
    }

    #[test]
    fn from_primes_validates_order() {
        assert_eq!(
            PrimeStore::from_primes(vec![]).unwrap_err(),
            BuildError::NotIncreasing
        );
        assert_eq!(
            PrimeStore::from_primes(vec![5, 3]).unwrap_err(),
            BuildError::NotIncreasing
        );
        assert_eq!(
            PrimeStore::from_primes(vec![3, 3]).unwrap_err(),
            BuildError::NotIncreasing
        );
        assert!(PrimeStore::from_primes(vec![3, 5]).is_ok());
    }

    #[test]
    fn cache_round_trip_identity() {
        let dir = tempdir().unwrap();
        for count in [1u64, 2, 10_000] {
            let store = build_primes(count).unwrap();
            let path = dir.path().join(format!("primes-{count}.bin"));
            store.save_cache(&path).unwrap();
            let loaded = PrimeStore::load_cache(&path).unwrap();
            assert_eq!(store, loaded, "round trip failed for count {count}");
        }
    }

    #[test]
    fn load_rejects_wrong_magic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        let store = build_primes(5).unwrap();
        store.save_cache(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            PrimeStore::load_cache(&path).unwrap_err(),
            CacheError::BadMagic
        ));
    }

    #[test]
    fn load_rejects_bad_version() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("badver.bin");
        build_primes(5).unwrap().save_cache(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            PrimeStore::load_cache(&path).unwrap_err(),
            CacheError::BadVersion(9)
        ));
    }

    #[test]
    fn load_rejects_truncated_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trunc.bin");
        build_primes(100).unwrap().save_cache(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            PrimeStore::load_cache(&path).unwrap_err(),
            CacheError::Truncated
        ));
    }

    #[test]
    fn load_rejects_flipped_payload_byte() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("flip.bin");
        build_primes(100).unwrap().save_cache(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = 16 + 8 * 50;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            PrimeStore::load_cache(&path).unwrap_err(),
            CacheError::ChecksumMismatch { .. }
        ));
    }

    #[test]
    fn cache_layout_is_pinned() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("layout.bin");
        PrimeStore::from_primes(vec![2, 3])
            .unwrap()
            .save_cache(&path)
            .unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let mut expect = Vec::new();
        expect.extend_from_slice(b"SODP");
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        expect.extend_from_slice(&3u64.to_le_bytes());
        expect.extend_from_slice(&5u64.to_le_bytes());
        assert_eq!(bytes, expect);
    }

    #[test]
    fn nth_prime_bound_is_an_upper_bound() {
        for (n, p) in [(1u64, 2u64), (5, 11), (6, 13), (25, 97), (1000, 7919)] {
            assert!(nth_prime_bound(n) >= p, "bound({n}) < p_{n}");
        }
    }
}
