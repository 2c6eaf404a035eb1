//! Digit sums and digit-sum parities in arbitrary bases.
//!
//! The reference implementation is the plain repeated-division loop
//! ([`digit_sum`]). The experiment hot paths go through [`DigitSumTable`],
//! which processes several digits per step with a precomputed chunk table
//! and a reciprocal multiply instead of a hardware divide; it must agree
//! with the reference bit-for-bit (see the tests).

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaseError {
    #[error("base must be at least 2, got {0}")]
    TooSmall(u64),
}

/// A positional radix, at least 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Base(u64);

impl Base {
    pub const TEN: Base = Base(10);

    pub fn new(value: u64) -> Result<Base, BaseError> {
        if value < 2 {
            Err(BaseError::TooSmall(value))
        } else {
            Ok(Base(value))
        }
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// In odd bases digit-sum parity degenerates: digit_sum(n) ≡ n (mod 2),
    /// so every odd number — in particular every prime but 2 — sums odd.
    #[inline]
    pub fn is_odd(self) -> bool {
        self.0 % 2 == 1
    }
}

impl std::fmt::Display for Base {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    #[inline]
    pub fn of_u64(n: u64) -> Parity {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    #[inline]
    pub fn is_even(self) -> bool {
        self == Parity::Even
    }

    #[inline]
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Sum of the base-`base` digits of `n`. Reference implementation.
pub fn digit_sum(n: u64, base: Base) -> u64 {
    let b = base.value();
    let mut n = n;
    let mut sum = 0;
    loop {
        sum += n % b;
        n /= b;
        if n == 0 {
            return sum;
        }
    }
}

/// Parity of the base-`base` digit sum of `n`.
#[inline]
pub fn digit_parity(n: u64, base: Base) -> Parity {
    Parity::of_u64(digit_sum(n, base))
}

/// Largest table the chunked fast path will build (index space of one chunk).
const MAX_CHUNK: u64 = 1 << 16;

/// Chunked digit-sum evaluator.
///
/// For bases up to 256 a chunk of `k ≥ 2` digits (`chunk = base^k ≤ 2^16`) is
/// resolved by one table lookup. Inputs below 2^32 split into their three
/// chunk digits with two independent multiply-shift reciprocals instead of
/// hardware divides (exact: see `quotients32`; chunk³ > 2^32 for every table,
/// so three chunks always cover the range). Larger bases fall back to the
/// reference loop — their digit counts are tiny.
pub struct DigitSumTable {
    base: Base,
    chunk: u64,
    /// ceil(2^48 / chunk); exact n/chunk for n < 2^32.
    recip1: u64,
    /// ceil(2^64 / chunk²); exact n/chunk² for n < 2^32.
    recip2: u64,
    /// digit sum of each value in [0, chunk); empty => fall back to reference.
    sums: Vec<u16>,
    /// bit i = digit-sum parity of i, packed; hot path for parity counting.
    parity_bits: Vec<u8>,
}

impl DigitSumTable {
    pub fn new(base: Base) -> DigitSumTable {
        let b = base.value();
        if b > 256 {
            return DigitSumTable {
                base,
                chunk: b,
                recip1: 0,
                recip2: 0,
                sums: Vec::new(),
                parity_bits: Vec::new(),
            };
        }
        let mut chunk = b * b; // b <= 256 so b^2 <= 2^16
        while chunk <= MAX_CHUNK / b {
            chunk *= b;
        }
        let mut sums = vec![0u16; chunk as usize];
        for i in 1..chunk as usize {
            sums[i] = sums[i / b as usize] + (i as u64 % b) as u16;
        }
        let mut parity_bits = vec![0u8; (chunk as usize).div_ceil(8)];
        for (i, &s) in sums.iter().enumerate() {
            parity_bits[i / 8] |= ((s & 1) as u8) << (i % 8);
        }
        let recip1 = (1u128 << 48).div_ceil(u128::from(chunk)) as u64;
        let c2 = u128::from(chunk) * u128::from(chunk);
        let recip2 = (1u128 << 64).div_ceil(c2) as u64;
        DigitSumTable {
            base,
            chunk,
            recip1,
            recip2,
            sums,
            parity_bits,
        }
    }

    #[inline]
    pub fn base(&self) -> Base {
        self.base
    }

    /// Exact (x/chunk, x/chunk²) for `x < 2^32` via multiply-shift.
    ///
    /// With M = ceil(2^N/d), the quotient error term is x·(M·d − 2^N)/(d·2^N)
    /// < 2^32/2^N · 1, i.e. < 2^-16 ≤ 1/chunk for N = 48, d = chunk ≤ 2^16,
    /// and < 2^-32 ≤ 1/chunk² for N = 64, d = chunk² ≤ 2^32 — in both cases
    /// too small to push the floor across an integer boundary. The two
    /// multiplies are independent, which keeps the parity loop unchained.
    #[inline(always)]
    fn quotients32(&self, x: u64) -> (u64, u64) {
        debug_assert!(x < 1 << 32);
        let q1 = ((u128::from(x) * u128::from(self.recip1)) >> 48) as u64;
        let q2 = ((u128::from(x) * u128::from(self.recip2)) >> 64) as u64;
        (q1, q2)
    }

    #[inline(always)]
    fn parity_bit(&self, idx: u64) -> u64 {
        u64::from((self.parity_bits[(idx >> 3) as usize] >> (idx & 7)) & 1)
    }

    pub fn digit_sum(&self, n: u64) -> u64 {
        if self.sums.is_empty() {
            return digit_sum(n, self.base);
        }
        let mut x = n;
        let mut sum = 0u64;
        while x >= 1 << 32 {
            sum += u64::from(self.sums[(x % self.chunk) as usize]);
            x /= self.chunk;
        }
        let (q1, q2) = self.quotients32(x);
        let r0 = x - q1 * self.chunk;
        let r1 = q1 - q2 * self.chunk;
        sum + u64::from(self.sums[r0 as usize])
            + u64::from(self.sums[r1 as usize])
            + u64::from(self.sums[q2 as usize])
    }

    /// Digit-sum-parity bit of `n` (1 = odd). The hot path of every sweep.
    #[inline(always)]
    pub fn parity_bit_of(&self, n: u64) -> u64 {
        if self.sums.is_empty() {
            return digit_sum(n, self.base) & 1;
        }
        let mut x = n;
        let mut acc = 0u64;
        while x >= 1 << 32 {
            acc ^= u64::from(self.sums[(x % self.chunk) as usize]) & 1;
            x /= self.chunk;
        }
        let (q1, q2) = self.quotients32(x);
        let r0 = x - q1 * self.chunk;
        let r1 = q1 - q2 * self.chunk;
        acc ^ self.parity_bit(r0) ^ self.parity_bit(r1) ^ self.parity_bit(q2)
    }

    #[inline]
    pub fn parity(&self, n: u64) -> Parity {
        if self.parity_bit_of(n) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    #[inline]
    pub fn is_even(&self, n: u64) -> bool {
        self.parity_bit_of(n) == 0
    }
}
