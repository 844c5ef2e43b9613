//! Scalar modular arithmetic over word-sized primes.
//!
//! Everything in here is a pure function of its arguments. [`Modulus`] carries
//! the Barrett constant `k = floor(2^L / q)` with `L = 63 + bits`, which keeps
//! `k` inside one 64-bit word and makes the final Barrett shift exactly 64.

use crate::error::{Error, Result};

/// Exclusive upper bound on supported moduli.
pub const MAX_MODULUS: u64 = 1 << 62;

const MASK_52: u64 = (1 << 52) - 1;

/// Accumulator width of the multiply primitives: `beta = 2^52` (IFMA-style)
/// or `beta = 2^64` (full word).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitShift {
    Bits52,
    Bits64,
}

impl BitShift {
    #[inline]
    pub const fn bits(self) -> u32 {
        match self {
            BitShift::Bits52 => 52,
            BitShift::Bits64 => 64,
        }
    }

    /// Mask selecting the low `bits()` bits of a word.
    #[inline]
    pub const fn mask(self) -> u64 {
        match self {
            BitShift::Bits52 => MASK_52,
            BitShift::Bits64 => u64::MAX,
        }
    }

    /// True when `value < beta`.
    #[inline]
    pub const fn fits(self, value: u128) -> bool {
        value < (1u128 << self.bits())
    }

    /// Widest legal width for a Harvey butterfly on `q` (needs `4q < beta`),
    /// preferring the 52-bit path when it applies.
    pub fn for_butterfly(q: u64) -> BitShift {
        if BitShift::Bits52.fits(4 * q as u128) {
            BitShift::Bits52
        } else {
            BitShift::Bits64
        }
    }
}

/// A prime modulus with precomputed Barrett data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulus {
    q: u64,
    bits: u32,
    barrett_k: u64,
}

impl Modulus {
    /// Validates `q` (prime, `3 <= q < 2^62`) and precomputes its Barrett factor.
    ///
    /// `q = 2` is rejected: with `bits = 2` the factor `floor(2^65 / 2)` does
    /// not fit in a word.
    pub fn new(q: u64) -> Result<Self> {
        if !(3..MAX_MODULUS).contains(&q) || !is_prime(q) {
            return Err(Error::InvalidModulus(q));
        }
        let bits = 64 - q.leading_zeros();
        let k = (1u128 << (63 + bits)) / q as u128;
        let barrett_k = u64::try_from(k).map_err(|_| Error::InvalidModulus(q))?;
        Ok(Modulus { q, bits, barrett_k })
    }

    #[inline]
    pub const fn value(&self) -> u64 {
        self.q
    }

    /// `floor(log2 q) + 1`.
    #[inline]
    pub const fn bits(&self) -> u32 {
        self.bits
    }

    /// `floor(2^L / q)`.
    #[inline]
    pub const fn barrett_k(&self) -> u64 {
        self.barrett_k
    }

    /// The Barrett shift `L = 63 + bits`.
    #[inline]
    pub const fn barrett_shift(&self) -> u32 {
        63 + self.bits
    }
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.q)
    }
}

/// Barrett reduction of `d < 2^(63 + bits)` modulo `m`.
///
/// The quotient estimate `c3` is at most two below `floor(d / q)` over the
/// whole input envelope, so the remainder is corrected with two
/// branchless conditional subtractions rather than one.
#[inline]
pub fn barrett_reduce(d: u128, m: &Modulus) -> u64 {
    debug_assert!(d >> m.barrett_shift() == 0, "barrett input out of range");
    let c1 = (d >> (m.bits - 1)) as u64;
    let c3 = ((c1 as u128 * m.barrett_k as u128) >> 64) as u64;
    let c4 = (d as u64).wrapping_sub(c3.wrapping_mul(m.q));
    small_mod(c4, m.q, 4)
}

/// `(a * b) mod q` for `a, b < q`, via Barrett reduction.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: &Modulus) -> u64 {
    debug_assert!(a < m.q && b < m.q);
    barrett_reduce(a as u128 * b as u128, m)
}

/// `(a * b) mod q` by full-width product and hardware division.
#[inline]
pub fn naive_mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

#[inline(always)]
fn sub_if_ge(x: u64, bound: u64) -> u64 {
    // Wraps to a huge value when x < bound, so `min` picks x.
    x.min(x.wrapping_sub(bound))
}

/// `x mod q` for `x < factor * q`, `factor` in {1, 2, 4, 8}, using
/// `log2(factor)` conditional-subtract stages.
///
/// Requires `factor * q < 2^63` so the wrapped differences stay above `x`.
#[inline(always)]
pub fn small_mod(x: u64, q: u64, factor: u64) -> u64 {
    debug_assert!(
        (x as u128) < factor as u128 * q as u128,
        "small_mod input {x} not below {factor}*{q}"
    );
    match factor {
        1 => x,
        2 => sub_if_ge(x, q),
        4 => sub_if_ge(sub_if_ge(x, 2 * q), q),
        8 => sub_if_ge(sub_if_ge(sub_if_ge(x, 4 * q), 2 * q), q),
        _ => panic!("small_mod factor must be 1, 2, 4 or 8, got {factor}"),
    }
}

/// High `bits` bits of the `2*bits`-bit product: `floor(a * b / beta)`.
///
/// The 52-bit variant looks only at the low 52 bits of each operand.
#[inline(always)]
pub fn mul_hi(a: u64, b: u64, shift: BitShift) -> u64 {
    match shift {
        BitShift::Bits64 => ((a as u128 * b as u128) >> 64) as u64,
        BitShift::Bits52 => (((a & MASK_52) as u128 * (b & MASK_52) as u128) >> 52) as u64,
    }
}

/// Low `bits` bits of `a * b`.
#[inline(always)]
pub fn mul_lo(a: u64, b: u64, shift: BitShift) -> u64 {
    match shift {
        BitShift::Bits64 => a.wrapping_mul(b),
        BitShift::Bits52 => (a & MASK_52).wrapping_mul(b & MASK_52) & MASK_52,
    }
}

/// `acc + mul_lo(a, b)`, wrapped to the accumulator width.
#[inline(always)]
pub fn mul_lo_add(acc: u64, a: u64, b: u64, shift: BitShift) -> u64 {
    acc.wrapping_add(mul_lo(a, b, shift)) & shift.mask()
}

/// An operand `W` together with its Harvey precon `floor(W * beta / q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiplyFactor {
    operand: u64,
    precon: u64,
    shift: BitShift,
}

impl MultiplyFactor {
    #[inline]
    pub const fn operand(&self) -> u64 {
        self.operand
    }

    #[inline]
    pub const fn precon(&self) -> u64 {
        self.precon
    }

    #[inline]
    pub const fn shift(&self) -> BitShift {
        self.shift
    }

    /// `operand * x mod q`, left in `[0, 2q)`. Valid for any `x < beta`.
    #[inline(always)]
    pub fn mul_lazy(&self, x: u64, q: u64) -> u64 {
        let quot = mul_hi(self.precon, x, self.shift);
        mul_lo(self.operand, x, self.shift).wrapping_sub(quot.wrapping_mul(q)) & self.shift.mask()
    }

    /// `operand * x mod q` in `[0, q)`.
    #[inline(always)]
    pub fn mul(&self, x: u64, q: u64) -> u64 {
        small_mod(self.mul_lazy(x, q), q, 2)
    }
}

/// Pairs `w < q` with `floor(w * beta / q)`.
pub fn precompute_factor(w: u64, q: u64, shift: BitShift) -> MultiplyFactor {
    assert!(w < q, "multiply factor operand {w} must be below {q}");
    assert!(
        shift.fits(4 * q as u128),
        "modulus {q} too large for {}-bit factor",
        shift.bits()
    );
    let precon = (((w as u128) << shift.bits()) / q as u128) as u64;
    MultiplyFactor {
        operand: w,
        precon,
        shift,
    }
}

/// `base^exp mod q` by square-and-multiply.
pub fn pow_mod(base: u64, mut exp: u64, q: u64) -> u64 {
    let mut result = 1 % q;
    let mut b = base % q;
    while exp > 0 {
        if exp & 1 == 1 {
            result = naive_mul_mod(result, b, q);
        }
        b = naive_mul_mod(b, b, q);
        exp >>= 1;
    }
    result
}

/// Inverse of `x` modulo the prime `q`, as `x^(q-2)`.
pub fn inv_mod(x: u64, q: u64) -> Result<u64> {
    if q < 2 || x.is_multiple_of(q) {
        return Err(Error::NotInvertible { x, q });
    }
    Ok(pow_mod(x, q - 2, q))
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = naive_mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Up to `count` primes with exactly `bits` bits and `q = 1 mod 2n`, largest
/// first. Only primes accepted by [`Modulus::new`] are returned.
pub fn ntt_primes(bits: u32, n: usize, count: usize) -> Vec<u64> {
    assert!((2..=62).contains(&bits), "bit size {bits} out of range");
    let step = 2 * n as u64;
    let lo = 1u64 << (bits - 1);
    let hi = if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    let mut out = Vec::with_capacity(count);
    // Largest candidate = 1 mod step that is <= hi.
    let mut cand = hi - (hi - 1) % step;
    while cand >= lo && out.len() < count {
        if (3..MAX_MODULUS).contains(&cand) && is_prime(cand) {
            out.push(cand);
        }
        match cand.checked_sub(step) {
            Some(c) => cand = c,
            None => break,
        }
    }
    out
}
