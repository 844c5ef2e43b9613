use thiserror::Error;

/// Errors raised while constructing moduli and tables or validating kernel
/// arguments.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid modulus {0}: must be a prime in [3, 2^62)")]
    InvalidModulus(u64),

    #[error("invalid transform length {0}: must be a power of two in [2, 2^20]")]
    InvalidLength(usize),

    #[error("modulus {q} does not satisfy q = 1 mod 2n for n = {n}")]
    NotNttFriendly { q: u64, n: usize },

    #[error("{root} is not a primitive {order}-th root of unity mod {q}")]
    NotPrimitiveRoot { root: u64, order: u64, q: u64 },

    #[error("{x} is not invertible mod {q}")]
    NotInvertible { x: u64, q: u64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid mod factor {factor}; allowed: {allowed:?}")]
    InvalidModFactor {
        factor: u64,
        allowed: &'static [u64],
    },

    #[error("element {value} at index {index} is not below {bound}")]
    OutOfRange {
        index: usize,
        value: u64,
        bound: u64,
    },

    #[error("modulus {q} with mod factor {factor} exceeds the {bits}-bit limit of this path")]
    ModulusTooLarge { q: u64, factor: u64, bits: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
