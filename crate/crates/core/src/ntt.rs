//! Negacyclic number-theoretic transform over `Z_q`.
//!
//! The forward transform is a radix-2 Cooley-Tukey loop producing bit-reversed
//! output; the inverse is the matching Gentleman-Sande loop followed by a
//! separate `N^-1` scaling pass. Both use Harvey butterflies, so values are
//! kept in `[0, 4q)` (forward) or `[0, 2q)` (inverse) between stages. The
//! powers of `psi` are merged into the twiddles, so no pre/post scaling pass
//! is needed for the negacyclic wrap.

use crate::error::{Error, Result};
use crate::modarith::{
    inv_mod, mul_hi, mul_lo, mul_lo_add, naive_mul_mod, pow_mod, precompute_factor, small_mod,
    BitShift, Modulus, MultiplyFactor,
};

/// Largest supported transform length.
pub const MAX_LEN: usize = 1 << 20;

/// Coefficient vector with a known bound: every element is `< bound_factor * q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffVec {
    data: Vec<u64>,
    bound_factor: u64,
}

impl CoeffVec {
    pub fn new(data: Vec<u64>, bound_factor: u64) -> Self {
        CoeffVec { data, bound_factor }
    }

    /// Elements already in `[0, q)`.
    pub fn reduced(data: Vec<u64>) -> Self {
        Self::new(data, 1)
    }

    pub fn zeros(n: usize) -> Self {
        Self::reduced(vec![0; n])
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn bound_factor(&self) -> u64 {
        self.bound_factor
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.data
    }

    /// Checks every element against `bound_factor * q`.
    pub fn check(&self, q: u64) -> Result<()> {
        check_bound(&self.data, self.bound_factor as u128 * q as u128)
    }
}

impl From<Vec<u64>> for CoeffVec {
    fn from(data: Vec<u64>) -> Self {
        Self::reduced(data)
    }
}

pub(crate) fn check_bound(data: &[u64], bound: u128) -> Result<()> {
    match data.iter().position(|&x| x as u128 >= bound) {
        Some(index) => Err(Error::OutOfRange {
            index,
            value: data[index],
            bound: u64::try_from(bound).unwrap_or(u64::MAX),
        }),
        None => Ok(()),
    }
}

/// Element range checks only run in builds with debug assertions.
#[inline]
pub(crate) fn debug_check_bound(data: &[u64], bound: u128) -> Result<()> {
    if cfg!(debug_assertions) {
        check_bound(data, bound)
    } else {
        Ok(())
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn check_factor(factor: u64, allowed: &'static [u64]) -> Result<()> {
    if allowed.contains(&factor) {
        Ok(())
    } else {
        Err(Error::InvalidModFactor { factor, allowed })
    }
}

/// Reverses the low `log2n` bits of `i`.
#[inline]
pub fn bit_reverse(i: usize, log2n: u32) -> usize {
    debug_assert!(log2n == usize::BITS || i >> log2n == 0);
    if log2n == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - log2n)
}

/// Returns `v` permuted into bit-reversed index order. `v.len()` must be a
/// power of two.
pub fn bit_reverse_permute<T: Copy>(v: &[T]) -> Vec<T> {
    assert!(
        v.is_empty() || v.len().is_power_of_two(),
        "length must be a power of two"
    );
    let log2n = v.len().max(1).trailing_zeros();
    (0..v.len()).map(|i| v[bit_reverse(i, log2n)]).collect()
}

/// Harvey forward butterfly:
/// `(X0, X1) -> (X0 + W*X1, X0 - W*X1) mod q` with inputs and outputs in `[0, 4q)`.
#[inline]
pub fn harvey_forward_butterfly(x0: u64, x1: u64, w: &MultiplyFactor, q: u64) -> (u64, u64) {
    fwd_butterfly(x0, x1, w.operand(), w.precon(), q, w.shift(), false)
}

/// Harvey inverse butterfly:
/// `(X0, X1) -> (X0 + X1, W*(X0 - X1)) mod q` with inputs and outputs in `[0, 2q)`.
#[inline]
pub fn harvey_inverse_butterfly(x0: u64, x1: u64, w: &MultiplyFactor, q: u64) -> (u64, u64) {
    inv_butterfly(x0, x1, w.operand(), w.precon(), q, w.shift(), false)
}

#[inline(always)]
fn fwd_butterfly(
    x: u64,
    y: u64,
    w_op: u64,
    w_precon: u64,
    q: u64,
    shift: BitShift,
    input_lt_mod: bool,
) -> (u64, u64) {
    let twice_q = 2 * q;
    debug_assert!(
        x < 4 * q && y < 4 * q,
        "forward butterfly input out of [0, 4q)"
    );
    let x = if input_lt_mod {
        x
    } else {
        x.min(x.wrapping_sub(twice_q))
    };
    let quot = mul_hi(w_precon, y, shift);
    let w_y = mul_lo(w_op, y, shift);
    let mut t = mul_lo_add(w_y, quot, q.wrapping_neg(), shift);
    if shift == BitShift::Bits52 {
        t &= BitShift::Bits52.mask();
    }
    debug_assert!(t < twice_q);
    let y_out = x + (twice_q - t);
    let x_out = x + t;
    debug_assert!(
        x_out < 4 * q && y_out < 4 * q,
        "forward butterfly output out of [0, 4q)"
    );
    (x_out, y_out)
}

#[inline(always)]
fn inv_butterfly(
    x: u64,
    y: u64,
    w_op: u64,
    w_precon: u64,
    q: u64,
    shift: BitShift,
    input_lt_mod: bool,
) -> (u64, u64) {
    let twice_q = 2 * q;
    debug_assert!(
        x < twice_q && y < twice_q,
        "inverse butterfly input out of [0, 2q)"
    );
    let y_minus_2q = y.wrapping_sub(twice_q);
    let mut t = x.wrapping_sub(y_minus_2q);
    let x_out = if input_lt_mod {
        x + y
    } else {
        let s = x.wrapping_add(y_minus_2q);
        // Negative as a signed word: add 2q back.
        s.wrapping_add(twice_q & 0u64.wrapping_sub(s >> 63))
    };
    if shift == BitShift::Bits52 {
        t &= BitShift::Bits52.mask();
    }
    let quot = mul_hi(w_precon, t, shift);
    let quot_q = mul_lo(quot, q.wrapping_neg(), shift);
    let y_out = mul_lo_add(quot_q, w_op, t, shift);
    debug_assert!(
        x_out < twice_q && y_out < twice_q,
        "inverse butterfly output out of [0, 2q)"
    );
    (x_out, y_out)
}

/// Precomputed twiddles for one `(n, q)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NttTables {
    n: usize,
    log_n: u32,
    modulus: Modulus,
    psi: u64,
    shift: BitShift,
    psi_rev: Vec<u64>,
    psi_precon_rev: Vec<u64>,
    psi_inv_rev: Vec<u64>,
    psi_inv_precon_rev: Vec<u64>,
    n_inv: MultiplyFactor,
}

impl NttTables {
    /// Tables for length `n` modulo `q`, with the smallest primitive `2n`-th
    /// root and the accumulator width chosen automatically.
    pub fn new(n: usize, q: u64) -> Result<Self> {
        Self::with_options(n, q, None, None)
    }

    pub fn with_root(n: usize, q: u64, root: u64) -> Result<Self> {
        Self::with_options(n, q, Some(root), None)
    }

    /// Full constructor. `shift = None` picks `Bits52` when `4q < 2^52`.
    pub fn with_options(
        n: usize,
        q: u64,
        root: Option<u64>,
        shift: Option<BitShift>,
    ) -> Result<Self> {
        if !(2..=MAX_LEN).contains(&n) || !n.is_power_of_two() {
            return Err(Error::InvalidLength(n));
        }
        let modulus = Modulus::new(q)?;
        let order = 2 * n as u64;
        if q % order != 1 {
            return Err(Error::NotNttFriendly { q, n });
        }
        let psi = match root {
            Some(r) if is_primitive_root(r, n, q) => r,
            Some(r) => return Err(Error::NotPrimitiveRoot { root: r, order, q }),
            None => minimal_primitive_root(n, q),
        };
        let shift = match shift {
            None => BitShift::for_butterfly(q),
            Some(s) if s.fits(4 * q as u128) => s,
            Some(s) => {
                return Err(Error::ModulusTooLarge {
                    q,
                    factor: 4,
                    bits: s.bits(),
                })
            }
        };

        let log_n = n.trailing_zeros();
        let psi_inv = inv_mod(psi, q)?;
        let powers = |base: u64| {
            let mut natural = Vec::with_capacity(n);
            let mut cur = 1u64;
            for _ in 0..n {
                natural.push(cur);
                cur = naive_mul_mod(cur, base, q);
            }
            bit_reverse_permute(&natural)
        };
        let psi_rev = powers(psi);
        let psi_inv_rev = powers(psi_inv);
        let precon = |v: &[u64]| -> Vec<u64> {
            v.iter()
                .map(|&w| precompute_factor(w, q, shift).precon())
                .collect()
        };
        let psi_precon_rev = precon(&psi_rev);
        let psi_inv_precon_rev = precon(&psi_inv_rev);
        let n_inv = precompute_factor(inv_mod(n as u64, q)?, q, shift);

        Ok(NttTables {
            n,
            log_n,
            modulus,
            psi,
            shift,
            psi_rev,
            psi_precon_rev,
            psi_inv_rev,
            psi_inv_precon_rev,
            n_inv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_n(&self) -> u32 {
        self.log_n
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn q(&self) -> u64 {
        self.modulus.value()
    }

    pub fn psi(&self) -> u64 {
        self.psi
    }

    pub fn shift(&self) -> BitShift {
        self.shift
    }

    /// `psi_rev[bit_reverse(i)] == psi^i`.
    pub fn psi_rev(&self) -> &[u64] {
        &self.psi_rev
    }

    pub fn psi_precon_rev(&self) -> &[u64] {
        &self.psi_precon_rev
    }

    pub fn psi_inv_rev(&self) -> &[u64] {
        &self.psi_inv_rev
    }

    pub fn psi_inv_precon_rev(&self) -> &[u64] {
        &self.psi_inv_precon_rev
    }

    pub fn n_inv(&self) -> &MultiplyFactor {
        &self.n_inv
    }

    /// Forward transform of `operand` into `result` (bit-reversed order).
    ///
    /// `input_mod_factor` must be 1, 2 or 4 and `output_mod_factor` 1 or 4.
    pub fn compute_forward(
        &self,
        result: &mut [u64],
        operand: &[u64],
        input_mod_factor: u64,
        output_mod_factor: u64,
    ) -> Result<()> {
        check_len(self.n, operand.len())?;
        check_len(self.n, result.len())?;
        self.validate_forward(operand, input_mod_factor, output_mod_factor)?;
        result.copy_from_slice(operand);
        self.forward_unchecked(result, input_mod_factor, output_mod_factor);
        Ok(())
    }

    pub fn compute_forward_in_place(
        &self,
        data: &mut [u64],
        input_mod_factor: u64,
        output_mod_factor: u64,
    ) -> Result<()> {
        check_len(self.n, data.len())?;
        self.validate_forward(data, input_mod_factor, output_mod_factor)?;
        self.forward_unchecked(data, input_mod_factor, output_mod_factor);
        Ok(())
    }

    /// Inverse transform of bit-reversed `operand` into `result` (standard order).
    ///
    /// Both mod factors must be 1 or 2.
    pub fn compute_inverse(
        &self,
        result: &mut [u64],
        operand: &[u64],
        input_mod_factor: u64,
        output_mod_factor: u64,
    ) -> Result<()> {
        check_len(self.n, operand.len())?;
        check_len(self.n, result.len())?;
        self.validate_inverse(operand, input_mod_factor, output_mod_factor)?;
        result.copy_from_slice(operand);
        self.inverse_unchecked(result, input_mod_factor, output_mod_factor);
        Ok(())
    }

    pub fn compute_inverse_in_place(
        &self,
        data: &mut [u64],
        input_mod_factor: u64,
        output_mod_factor: u64,
    ) -> Result<()> {
        check_len(self.n, data.len())?;
        self.validate_inverse(data, input_mod_factor, output_mod_factor)?;
        self.inverse_unchecked(data, input_mod_factor, output_mod_factor);
        Ok(())
    }

    /// Forward transform of `input`, whose `bound_factor` is taken as the
    /// input mod factor.
    pub fn forward(&self, input: &CoeffVec, output_mod_factor: u64) -> Result<CoeffVec> {
        let mut out = input.data().to_vec();
        self.compute_forward_in_place(&mut out, input.bound_factor(), output_mod_factor)?;
        Ok(CoeffVec::new(out, output_mod_factor))
    }

    pub fn inverse(&self, input: &CoeffVec, output_mod_factor: u64) -> Result<CoeffVec> {
        let mut out = input.data().to_vec();
        self.compute_inverse_in_place(&mut out, input.bound_factor(), output_mod_factor)?;
        Ok(CoeffVec::new(out, output_mod_factor))
    }

    fn validate_forward(&self, data: &[u64], fin: u64, fout: u64) -> Result<()> {
        check_factor(fin, &[1, 2, 4])?;
        check_factor(fout, &[1, 4])?;
        debug_check_bound(data, fin as u128 * self.q() as u128)
    }

    fn validate_inverse(&self, data: &[u64], fin: u64, fout: u64) -> Result<()> {
        check_factor(fin, &[1, 2])?;
        check_factor(fout, &[1, 2])?;
        debug_check_bound(data, fin as u128 * self.q() as u128)
    }

    fn forward_unchecked(&self, a: &mut [u64], fin: u64, fout: u64) {
        match self.shift {
            BitShift::Bits52 => self.forward_stages(a, fin == 1, BitShift::Bits52),
            BitShift::Bits64 => self.forward_stages(a, fin == 1, BitShift::Bits64),
        }
        if fout == 1 {
            let q = self.q();
            for x in a.iter_mut() {
                *x = small_mod(*x, q, 4);
            }
        }
    }

    #[inline(always)]
    fn forward_stages(&self, a: &mut [u64], input_lt_mod: bool, shift: BitShift) {
        let q = self.q();
        let n = self.n;
        let mut t = n;
        let mut m = 1;
        while m < n {
            t >>= 1;
            let first = m == 1 && input_lt_mod;
            for i in 0..m {
                let w_op = self.psi_rev[m + i];
                let w_precon = self.psi_precon_rev[m + i];
                let j1 = 2 * i * t;
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x_out, y_out) = fwd_butterfly(*x, *y, w_op, w_precon, q, shift, first);
                    *x = x_out;
                    *y = y_out;
                }
            }
            m <<= 1;
        }
    }

    fn inverse_unchecked(&self, a: &mut [u64], fin: u64, fout: u64) {
        match self.shift {
            BitShift::Bits52 => self.inverse_stages(a, fin == 1, BitShift::Bits52),
            BitShift::Bits64 => self.inverse_stages(a, fin == 1, BitShift::Bits64),
        }
        let q = self.q();
        let n_inv = self.n_inv;
        for x in a.iter_mut() {
            let v = n_inv.mul_lazy(*x, q);
            *x = if fout == 1 { small_mod(v, q, 2) } else { v };
        }
    }

    #[inline(always)]
    fn inverse_stages(&self, a: &mut [u64], input_lt_mod: bool, shift: BitShift) {
        let q = self.q();
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            let first = m == self.n && input_lt_mod;
            let mut j1 = 0;
            for i in 0..h {
                let w_op = self.psi_inv_rev[h + i];
                let w_precon = self.psi_inv_precon_rev[h + i];
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x_out, y_out) = inv_butterfly(*x, *y, w_op, w_precon, q, shift, first);
                    *x = x_out;
                    *y = y_out;
                }
                j1 += 2 * t;
            }
            t <<= 1;
            m = h;
        }
    }

    /// Forward transform with the same loop structure but eager `%`
    /// reduction in every butterfly. Input elements must be `< q`.
    pub fn forward_naive(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let q = self.q();
        let n = self.n;
        let mut t = n;
        let mut m = 1;
        while m < n {
            t >>= 1;
            for i in 0..m {
                let w = self.psi_rev[m + i];
                let j1 = 2 * i * t;
                for j in j1..j1 + t {
                    let x0 = a[j];
                    let wx1 = naive_mul_mod(w, a[j + t], q);
                    a[j] = (x0 + wx1) % q;
                    a[j + t] = (x0 + q - wx1) % q;
                }
            }
            m <<= 1;
        }
    }

    /// Inverse transform with eager `%` reduction; input elements `< q`.
    pub fn inverse_naive(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let q = self.q();
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            let mut j1 = 0;
            for i in 0..h {
                let w = self.psi_inv_rev[h + i];
                for j in j1..j1 + t {
                    let x0 = a[j];
                    let x1 = a[j + t];
                    a[j] = (x0 + x1) % q;
                    a[j + t] = naive_mul_mod(x0 + q - x1, w, q);
                }
                j1 += 2 * t;
            }
            t <<= 1;
            m = h;
        }
        let n_inv = self.n_inv.operand();
        for x in a.iter_mut() {
            *x = naive_mul_mod(*x, n_inv, q);
        }
    }
}

/// `root^n == -1 (mod q)`, which for power-of-two `n` makes `root` a
/// primitive `2n`-th root of unity.
pub fn is_primitive_root(root: u64, n: usize, q: u64) -> bool {
    root > 0 && root < q && pow_mod(root, n as u64, q) == q - 1
}

/// Smallest primitive `2n`-th root of unity modulo the prime `q`
/// (requires `q = 1 mod 2n`).
pub fn minimal_primitive_root(n: usize, q: u64) -> u64 {
    let order = 2 * n as u64;
    debug_assert_eq!(q % order, 1);
    let cofactor = (q - 1) / order;
    let root = (2..q)
        .map(|g| pow_mod(g, cofactor, q))
        .find(|&w| is_primitive_root(w, n, q))
        .expect("a prime q = 1 mod 2n always has a primitive 2n-th root");
    // Every primitive 2n-th root is an odd power of any other.
    let step = naive_mul_mod(root, root, q);
    let mut best = root;
    let mut cur = root;
    for _ in 1..n {
        cur = naive_mul_mod(cur, step, q);
        best = best.min(cur);
    }
    best
}

/// Direction of [`reference_ntt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `O(n^2)` negacyclic transform evaluated straight from the definition.
///
/// Forward: `out[k] = sum_j a_j * psi^j * omega^(rev(k) * j)` with
/// `omega = psi^2`, i.e. the cyclic transform of `(a_j psi^j)` stored in
/// bit-reversed order. Inverse takes bit-reversed input and returns
/// `psi^-i * n^-1 * sum_j ã_j omega^(-ij)` in standard order.
pub fn reference_ntt(a: &[u64], q: u64, psi: u64, direction: Direction) -> Vec<u64> {
    let n = a.len();
    assert!(n.is_power_of_two() && n >= 2);
    let log_n = n.trailing_zeros();
    let order = 2 * n;
    let base = match direction {
        Direction::Forward => psi,
        Direction::Inverse => inv_mod(psi, q).expect("psi must be invertible"),
    };
    let pow: Vec<u64> = (0..order as u64).map(|e| pow_mod(base, e, q)).collect();
    match direction {
        Direction::Forward => (0..n)
            .map(|k| {
                let i = bit_reverse(k, log_n);
                (0..n).fold(0u64, |acc, j| {
                    // psi^j * omega^(ij) = psi^(j(2i+1))
                    let e = (j * (2 * i + 1)) % order;
                    (acc + naive_mul_mod(a[j] % q, pow[e], q)) % q
                })
            })
            .collect(),
        Direction::Inverse => {
            let natural: Vec<u64> = (0..n).map(|i| a[bit_reverse(i, log_n)] % q).collect();
            let n_inv = inv_mod(n as u64, q).expect("n must be invertible mod q");
            (0..n)
                .map(|i| {
                    let s = (0..n).fold(0u64, |acc, j| {
                        let e = (2 * i * j) % order;
                        (acc + naive_mul_mod(natural[j], pow[e], q)) % q
                    });
                    naive_mul_mod(naive_mul_mod(s, pow[i], q), n_inv, q)
                })
                .collect()
        }
    }
}
