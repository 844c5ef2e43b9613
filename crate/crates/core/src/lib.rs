//! Word-sized prime field arithmetic: Barrett reduction, a negacyclic NTT
//! built on Harvey lazy-reduction butterflies, element-wise modular kernels
//! with lazy input bounds, and negacyclic polynomial multiplication.

pub mod bench;
pub mod eltwise;
pub mod error;
pub mod modarith;
pub mod ntt;
pub mod ring;

pub use eltwise::{eltwise_add_mod, eltwise_fma_mod, eltwise_mult_mod, eltwise_neg_mod, MultPath};
pub use error::{Error, Result};
pub use modarith::{
    barrett_reduce, inv_mod, mul_hi, mul_lo, mul_lo_add, mul_mod, naive_mul_mod, pow_mod,
    precompute_factor, small_mod, BitShift, Modulus, MultiplyFactor,
};
pub use ntt::{
    bit_reverse, bit_reverse_permute, harvey_forward_butterfly, harvey_inverse_butterfly,
    reference_ntt, CoeffVec, Direction, NttTables,
};
pub use ring::{naive_negacyclic, poly_mult_mod};
