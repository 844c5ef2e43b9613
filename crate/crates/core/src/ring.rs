//! Multiplication in `R_q = Z_q[X] / (X^N + 1)`.

use crate::eltwise::mult_mod_into;
use crate::error::Result;
use crate::modarith::naive_mul_mod;
use crate::ntt::{check_len, debug_check_bound, CoeffVec, NttTables};

/// Negacyclic product `f * g` through the lazy NTT pipeline: both forward
/// transforms leave outputs in `[0, 4q)`, the pointwise multiply consumes
/// them with input factor 4, and the inverse returns canonical residues.
/// Moduli with `4q >= 2^63` reduce the forward outputs fully instead.
pub fn poly_mult_mod(f: &CoeffVec, g: &CoeffVec, tables: &NttTables) -> Result<CoeffVec> {
    let n = tables.n();
    check_len(n, f.len())?;
    check_len(n, g.len())?;
    let q = tables.q();
    debug_check_bound(f.data(), q as u128)?;
    debug_check_bound(g.data(), q as u128)?;

    let lazy = if (4 * q as u128) < 1 << 63 { 4 } else { 1 };
    let mut f_hat = vec![0; n];
    let mut g_hat = vec![0; n];
    tables.compute_forward(&mut f_hat, f.data(), 1, lazy)?;
    tables.compute_forward(&mut g_hat, g.data(), 1, lazy)?;
    let mut out = vec![0; n];
    mult_mod_into(&mut out, &f_hat, &g_hat, tables.modulus(), lazy)?;
    tables.compute_inverse_in_place(&mut out, 1, 1)?;
    Ok(CoeffVec::reduced(out))
}

/// Schoolbook negacyclic convolution:
/// `c_i = sum_{j<=i} f_j g_{i-j} - sum_{j>i} f_j g_{n+i-j} (mod q)`.
pub fn naive_negacyclic(f: &[u64], g: &[u64], q: u64) -> Vec<u64> {
    assert_eq!(f.len(), g.len(), "operands must have equal length");
    let n = f.len();
    (0..n)
        .map(|i| {
            let plus = (0..=i).fold(0u64, |acc, j| (acc + naive_mul_mod(f[j], g[i - j], q)) % q);
            let minus = (i + 1..n).fold(0u64, |acc, j| {
                (acc + naive_mul_mod(f[j], g[n + i - j], q)) % q
            });
            (plus + q - minus) % q
        })
        .collect()
}
