//! Element-wise modular kernels over `Z_q` with lazy input bounds.
//!
//! Each kernel accepts inputs in `[0, f*q)` for its documented `f` values and
//! always returns canonical residues in `[0, q)`.

use crate::error::{Error, Result};
use crate::modarith::{mul_hi, mul_lo, small_mod, BitShift, Modulus};
use crate::ntt::{check_factor, check_len, debug_check_bound, CoeffVec};

/// Block width of the unrolled main loops; any tail is handled element by element.
const BLOCK: usize = 8;

/// Moduli below this bound use the floating-point multiply path.
pub const FLOAT_PATH_MAX_MODULUS: u64 = 1 << 50;

/// Largest modulus accepted by [`eltwise_fma_mod`].
pub const FMA_MAX_MODULUS: u64 = 1 << 61;

#[inline(always)]
fn for_each_blocked<F: FnMut(usize)>(len: usize, mut f: F) {
    let main = len - len % BLOCK;
    let mut i = 0;
    while i < main {
        for k in 0..BLOCK {
            f(i + k);
        }
        i += BLOCK;
    }
    for j in main..len {
        f(j);
    }
}

/// `result[i] = (a[i] + b[i]) mod q` for `a[i], b[i] < q`.
pub fn add_mod_into(result: &mut [u64], a: &[u64], b: &[u64], m: &Modulus) -> Result<()> {
    check_len(a.len(), b.len())?;
    check_len(a.len(), result.len())?;
    let q = m.value();
    debug_check_bound(a, q as u128)?;
    debug_check_bound(b, q as u128)?;
    for_each_blocked(a.len(), |i| {
        let s = a[i] + b[i];
        result[i] = s.min(s.wrapping_sub(q));
    });
    Ok(())
}

pub fn eltwise_add_mod(a: &CoeffVec, b: &CoeffVec, m: &Modulus) -> Result<CoeffVec> {
    let mut out = vec![0; a.len()];
    add_mod_into(&mut out, a.data(), b.data(), m)?;
    Ok(CoeffVec::reduced(out))
}

/// `result[i] = (q - a[i]) mod q`; zero stays zero.
pub fn neg_mod_into(result: &mut [u64], a: &[u64], m: &Modulus) -> Result<()> {
    check_len(a.len(), result.len())?;
    let q = m.value();
    debug_check_bound(a, q as u128)?;
    for_each_blocked(a.len(), |i| {
        let x = a[i];
        let nonzero = 0u64.wrapping_sub((x != 0) as u64);
        result[i] = (q - x) & nonzero;
    });
    Ok(())
}

pub fn eltwise_neg_mod(a: &CoeffVec, m: &Modulus) -> Result<CoeffVec> {
    let mut out = vec![0; a.len()];
    neg_mod_into(&mut out, a.data(), m)?;
    Ok(CoeffVec::reduced(out))
}

/// Which implementation [`mult_mod_into`] dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultPath {
    Integer,
    Float,
}

impl MultPath {
    /// Float when `q < 2^50`, integer Barrett otherwise.
    pub fn select(m: &Modulus) -> MultPath {
        if m.value() < FLOAT_PATH_MAX_MODULUS {
            MultPath::Float
        } else {
            MultPath::Integer
        }
    }
}

fn check_mult_args(
    result: &[u64],
    a: &[u64],
    b: &[u64],
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<()> {
    check_len(a.len(), b.len())?;
    check_len(a.len(), result.len())?;
    check_factor(input_mod_factor, &[1, 2, 4])?;
    let bound = input_mod_factor as u128 * m.value() as u128;
    debug_check_bound(a, bound)?;
    debug_check_bound(b, bound)
}

/// `result[i] = a[i] * b[i] mod q` for inputs in `[0, f*q)`, `f` in {1, 2, 4}.
pub fn mult_mod_into(
    result: &mut [u64],
    a: &[u64],
    b: &[u64],
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<()> {
    match MultPath::select(m) {
        MultPath::Float => mult_mod_float_into(result, a, b, m, input_mod_factor),
        MultPath::Integer => mult_mod_int_into(result, a, b, m, input_mod_factor),
    }
}

pub fn eltwise_mult_mod(
    a: &CoeffVec,
    b: &CoeffVec,
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<CoeffVec> {
    let mut out = vec![0; a.len()];
    mult_mod_into(&mut out, a.data(), b.data(), m, input_mod_factor)?;
    Ok(CoeffVec::reduced(out))
}

/// Integer Barrett multiply. Requires `input_mod_factor * q < 2^63`.
pub fn mult_mod_int_into(
    result: &mut [u64],
    a: &[u64],
    b: &[u64],
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<()> {
    check_mult_args(result, a, b, m, input_mod_factor)?;
    let q = m.value();
    if input_mod_factor as u128 * q as u128 >= 1 << 63 {
        return Err(Error::ModulusTooLarge {
            q,
            factor: input_mod_factor,
            bits: 63,
        });
    }
    let shift = m.bits() - 1;
    let k = m.barrett_k();
    match input_mod_factor {
        1 => mult_int_kernel::<1>(result, a, b, q, shift, k),
        2 => mult_int_kernel::<2>(result, a, b, q, shift, k),
        _ => mult_int_kernel::<4>(result, a, b, q, shift, k),
    }
    Ok(())
}

fn mult_int_kernel<const F: u64>(
    result: &mut [u64],
    a: &[u64],
    b: &[u64],
    q: u64,
    shift: u32,
    k: u64,
) {
    let (result, b) = (&mut result[..a.len()], &b[..a.len()]);
    for_each_blocked(a.len(), |i| {
        let x = small_mod(a[i], q, F);
        let y = small_mod(b[i], q, F);
        let prod = x as u128 * y as u128;
        let prod_lo = prod as u64;
        // x, y < q so the product is below 2^(2*bits) and c1 fits a word.
        let c1 = (prod >> shift) as u64;
        let c3 = mul_hi(c1, k, BitShift::Bits64);
        let c4 = prod_lo.wrapping_sub(c3.wrapping_mul(q));
        result[i] = small_mod(c4, q, 4);
    });
}

/// `1/q` rounded toward +infinity.
pub fn reciprocal_round_up(q: u64) -> f64 {
    let qf = q as f64;
    let u = 1.0 / qf;
    // fma gives the exact sign of u*q - 1.
    if u.mul_add(qf, -1.0) < 0.0 {
        f64::from_bits(u.to_bits() + 1)
    } else {
        u
    }
}

/// Floating-point multiply. Requires `q < 2^50`.
pub fn mult_mod_float_into(
    result: &mut [u64],
    a: &[u64],
    b: &[u64],
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<()> {
    check_mult_args(result, a, b, m, input_mod_factor)?;
    let q = m.value();
    if q >= FLOAT_PATH_MAX_MODULUS {
        return Err(Error::ModulusTooLarge {
            q,
            factor: input_mod_factor,
            bits: 50,
        });
    }
    let u = reciprocal_round_up(q);
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("fma") && std::arch::is_x86_feature_detected!("sse4.1") {
        // SAFETY: both features were just detected.
        unsafe { mult_float_fma(result, a, b, q, u, input_mod_factor) };
        return Ok(());
    }
    mult_float_dispatch(result, a, b, q, u, input_mod_factor);
    Ok(())
}

// Without these features `mul_add` and `floor` become libm calls.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "fma,sse4.1")]
unsafe fn mult_float_fma(result: &mut [u64], a: &[u64], b: &[u64], q: u64, u: f64, f: u64) {
    mult_float_dispatch(result, a, b, q, u, f)
}

#[inline(always)]
fn mult_float_dispatch(result: &mut [u64], a: &[u64], b: &[u64], q: u64, u: f64, f: u64) {
    match f {
        1 => mult_float_kernel::<1>(result, a, b, q, u),
        2 => mult_float_kernel::<2>(result, a, b, q, u),
        _ => mult_float_kernel::<4>(result, a, b, q, u),
    }
}

#[inline(always)]
fn mult_float_kernel<const F: u64>(result: &mut [u64], a: &[u64], b: &[u64], q: u64, u: f64) {
    let (result, b) = (&mut result[..a.len()], &b[..a.len()]);
    let qf = q as f64;
    for_each_blocked(a.len(), |i| {
        let x = small_mod(a[i], q, F) as f64;
        let y = small_mod(b[i], q, F) as f64;
        let h = x * y;
        // Exact rounding error of h: h + l == x * y.
        let l = x.mul_add(y, -h);
        let c = (h * u).floor();
        let d = (-c).mul_add(qf, h);
        let mut g = d + l;
        if g < 0.0 {
            g += qf;
        }
        let r = g as u64;
        result[i] = r.min(r.wrapping_sub(q));
    });
}

/// `result[i] = (a[i] * y + z[i]) mod q`, with `z` treated as zero when absent.
///
/// `a` and `z` elements must be below `input_mod_factor * q`, `f` in
/// {1, 2, 4, 8}; `y < q < 2^61`. Uses the 52-bit multiply when
/// `f * q < 2^52`, else the 64-bit one.
pub fn fma_mod_into(
    result: &mut [u64],
    a: &[u64],
    y: u64,
    z: Option<&[u64]>,
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<()> {
    let shift = if BitShift::Bits52.fits(input_mod_factor as u128 * m.value() as u128) {
        BitShift::Bits52
    } else {
        BitShift::Bits64
    };
    fma_mod_with_shift_into(result, a, y, z, m, input_mod_factor, shift)
}

/// [`fma_mod_into`] with an explicit multiply width.
pub fn fma_mod_with_shift_into(
    result: &mut [u64],
    a: &[u64],
    y: u64,
    z: Option<&[u64]>,
    m: &Modulus,
    input_mod_factor: u64,
    shift: BitShift,
) -> Result<()> {
    check_len(a.len(), result.len())?;
    if let Some(z) = z {
        check_len(a.len(), z.len())?;
    }
    check_factor(input_mod_factor, &[1, 2, 4, 8])?;
    let q = m.value();
    if q >= FMA_MAX_MODULUS || !shift.fits(input_mod_factor as u128 * q as u128) {
        return Err(Error::ModulusTooLarge {
            q,
            factor: input_mod_factor,
            bits: shift.bits(),
        });
    }
    if y >= q {
        return Err(Error::OutOfRange {
            index: 0,
            value: y,
            bound: q,
        });
    }
    let bound = input_mod_factor as u128 * q as u128;
    debug_check_bound(a, bound)?;
    if let Some(z) = z {
        debug_check_bound(z, bound)?;
    }

    let y_barr = (((y as u128) << shift.bits()) / q as u128) as u64;
    let args = FmaArgs {
        y,
        y_barr,
        q,
        shift,
    };
    match input_mod_factor {
        1 => fma_kernel::<1>(result, a, z, args),
        2 => fma_kernel::<2>(result, a, z, args),
        4 => fma_kernel::<4>(result, a, z, args),
        _ => fma_kernel::<8>(result, a, z, args),
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct FmaArgs {
    y: u64,
    y_barr: u64,
    q: u64,
    shift: BitShift,
}

fn fma_kernel<const F: u64>(result: &mut [u64], a: &[u64], z: Option<&[u64]>, args: FmaArgs) {
    let FmaArgs {
        y,
        y_barr,
        q,
        shift,
    } = args;
    let result = &mut result[..a.len()];
    let z = z.map(|z| &z[..a.len()]);
    let mul = |x: u64| {
        let x = small_mod(x, q, F);
        let xy = x.wrapping_mul(y);
        let r = mul_hi(x, y_barr, shift);
        small_mod(xy.wrapping_sub(mul_lo(r, q, BitShift::Bits64)), q, 2)
    };
    match z {
        Some(z) => for_each_blocked(a.len(), |i| {
            let r = mul(a[i]) + small_mod(z[i], q, F);
            result[i] = small_mod(r, q, 2);
        }),
        None => for_each_blocked(a.len(), |i| result[i] = mul(a[i])),
    }
}

pub fn eltwise_fma_mod(
    a: &CoeffVec,
    y: u64,
    z: Option<&CoeffVec>,
    m: &Modulus,
    input_mod_factor: u64,
) -> Result<CoeffVec> {
    let mut out = vec![0; a.len()];
    fma_mod_into(
        &mut out,
        a.data(),
        y,
        z.map(|v| v.data()),
        m,
        input_mod_factor,
    )?;
    Ok(CoeffVec::reduced(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::naive_mul_mod;
    use proptest::prelude::*;

    fn m(q: u64) -> Modulus {
        Modulus::new(q).unwrap()
    }

    const Q50: u64 = 1_125_899_906_842_597;
    const Q61: u64 = 2_305_843_009_213_693_951;
    const Q49: u64 = 562_949_953_421_231;
    const Q51: u64 = 2_251_799_813_685_119;

    #[test]
    fn add_examples() {
        let md = m(Q61);
        let a = CoeffVec::reduced(vec![0, 5, Q61 - 1, 17]);
        let zero = CoeffVec::zeros(4);
        assert_eq!(eltwise_add_mod(&a, &zero, &md).unwrap(), a);
        let one = CoeffVec::reduced(vec![1; 4]);
        assert_eq!(eltwise_add_mod(&a, &one, &md).unwrap().data()[2], 0);
        assert!(matches!(
            eltwise_add_mod(&a, &CoeffVec::zeros(3), &md),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            eltwise_add_mod(&CoeffVec::reduced(vec![Q61]), &CoeffVec::zeros(1), &md),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn neg_examples() {
        let md = m(17);
        let a = CoeffVec::reduced((0..17).collect());
        let n = eltwise_neg_mod(&a, &md).unwrap();
        assert_eq!(n.data()[0], 0);
        for (i, &x) in n.data().iter().enumerate() {
            assert_eq!(x, (17 - i as u64) % 17);
        }
        assert_eq!(eltwise_neg_mod(&n, &md).unwrap(), a);
    }

    #[test]
    fn mult_identities() {
        for q in [17u64, Q49, Q50, Q51, Q61] {
            let md = m(q);
            for f in [1u64, 2, 4] {
                if f as u128 * q as u128 >= 1 << 63 {
                    continue;
                }
                let a = CoeffVec::new(vec![0, 1, q - 1, f * q - 1, q % (f * q), 12345 % q], f);
                let ones = CoeffVec::new(vec![1; 6], f);
                let r = eltwise_mult_mod(&a, &ones, &md, f).unwrap();
                let want: Vec<u64> = a.data().iter().map(|x| x % q).collect();
                assert_eq!(r.data(), &want[..]);
                let qm1 = CoeffVec::new(vec![q - 1; 3], f);
                assert_eq!(
                    eltwise_mult_mod(&qm1, &qm1, &md, f).unwrap().data(),
                    &[1, 1, 1]
                );
            }
        }
    }

    #[test]
    fn float_path_limits() {
        let md = m(Q51);
        let mut out = [0u64; 1];
        assert!(matches!(
            mult_mod_float_into(&mut out, &[1], &[1], &md, 1),
            Err(Error::ModulusTooLarge { bits: 50, .. })
        ));
        assert_eq!(MultPath::select(&md), MultPath::Integer);
        assert_eq!(MultPath::select(&m(Q50)), MultPath::Float);
        assert!(reciprocal_round_up(Q49) >= 1.0 / Q49 as f64);
        let u = reciprocal_round_up(Q49);
        assert!(u.mul_add(Q49 as f64, -1.0) >= 0.0);
    }

    #[test]
    fn int_path_overflow_guard() {
        let q = 4_611_686_018_427_387_847u64;
        let md = m(q);
        let mut out = [0u64; 1];
        assert!(mult_mod_int_into(&mut out, &[1], &[1], &md, 4).is_err());
        assert!(mult_mod_int_into(&mut out, &[1], &[1], &md, 2).is_ok());
        assert!(mult_mod_int_into(&mut out, &[q - 1], &[q - 1], &md, 1).is_ok());
        assert_eq!(out[0], 1);
    }

    #[test]
    fn fma_examples() {
        let md = m(17);
        let a = CoeffVec::reduced(vec![2]);
        let z = CoeffVec::reduced(vec![4]);
        assert_eq!(
            eltwise_fma_mod(&a, 3, Some(&z), &md, 1).unwrap().data(),
            &[10]
        );
        let a = CoeffVec::new((0..136).collect(), 8);
        let r = eltwise_fma_mod(&a, 1, None, &md, 8).unwrap();
        assert!(r
            .data()
            .iter()
            .enumerate()
            .all(|(i, &x)| x == i as u64 % 17));

        for q in [17u64, Q50, Q61] {
            let md = m(q);
            let a = CoeffVec::new(vec![8 * q - 1], 8);
            let z = CoeffVec::new(vec![8 * q - 1], 8);
            let r = eltwise_fma_mod(&a, q - 1, Some(&z), &md, 8);
            let want = ((8 * q as u128 - 1) * (q as u128 - 1) + 8 * q as u128 - 1) % q as u128;
            assert_eq!(r.unwrap().data(), &[want as u64]);
        }
        assert!(matches!(
            eltwise_fma_mod(&CoeffVec::zeros(1), 17, None, &md, 1),
            Err(Error::OutOfRange { value: 17, .. })
        ));
        assert!(matches!(
            eltwise_fma_mod(&CoeffVec::zeros(1), 1, None, &md, 3),
            Err(Error::InvalidModFactor { .. })
        ));
    }

    #[test]
    fn tail_lengths() {
        let md = m(Q49);
        for len in 0..20 {
            let a: Vec<u64> = (0..len as u64).map(|i| Q49 - 1 - i).collect();
            let mut out = vec![0; len];
            mult_mod_into(&mut out, &a, &a, &md, 1).unwrap();
            for i in 0..len {
                assert_eq!(out[i], naive_mul_mod(a[i], a[i], Q49));
            }
        }
    }

    proptest! {
        #[test]
        fn paths_agree(x in any::<u64>(), y in any::<u64>(), f in prop::sample::select(vec![1u64, 2, 4]),
                       q in prop::sample::select(vec![17u64, 97, 1_073_741_789, Q49])) {
            let md = m(q);
            let (x, y) = (x % (f * q), y % (f * q));
            let mut i = [0u64];
            let mut fl = [0u64];
            mult_mod_int_into(&mut i, &[x], &[y], &md, f).unwrap();
            mult_mod_float_into(&mut fl, &[x], &[y], &md, f).unwrap();
            prop_assert_eq!(i[0], fl[0]);
            prop_assert_eq!(i[0], ((x as u128 * y as u128) % q as u128) as u64);
        }

        #[test]
        fn fma_distributes(x in any::<u64>(), z in any::<u64>(), y in any::<u64>()) {
            let md = m(Q50);
            let (x, z, y) = (x % Q50, z % Q50, y % Q50);
            let a = CoeffVec::reduced(vec![x]);
            let zv = CoeffVec::reduced(vec![z]);
            let fused = eltwise_fma_mod(&a, y, Some(&zv), &md, 1).unwrap();
            let split = eltwise_add_mod(&eltwise_fma_mod(&a, y, None, &md, 1).unwrap(), &zv, &md).unwrap();
            prop_assert_eq!(fused, split);
        }

        #[test]
        fn fma_widths_agree(x in any::<u64>(), z in any::<u64>(), y in any::<u64>(), f in prop::sample::select(vec![1u64, 2, 4, 8])) {
            let q = 1_099_511_627_689u64; // 40-bit, 8q < 2^52
            let md = m(q);
            let (x, z, y) = (x % (f * q), z % (f * q), y % q);
            let mut r52 = [0u64];
            let mut r64 = [0u64];
            fma_mod_with_shift_into(&mut r52, &[x], y, Some(&[z]), &md, f, BitShift::Bits52).unwrap();
            fma_mod_with_shift_into(&mut r64, &[x], y, Some(&[z]), &md, f, BitShift::Bits64).unwrap();
            prop_assert_eq!(r52, r64);
            prop_assert_eq!(r64[0] as u128, (x as u128 * y as u128 + z as u128) % q as u128);
        }
    }
}
