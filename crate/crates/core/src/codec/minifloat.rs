//! Program-wide reduced-width floats: 1 sign bit, `exp_bits` exponent bits
//! with bias `2^(exp_bits-1) - 1`, `mant_bits` mantissa bits with an implicit
//! leading one for normal numbers. Exponent field zero holds zero and the
//! subnormals. The all-ones exponent is reserved and never produced.

use serde::Serialize;
use thiserror::Error;

use crate::model::FloatFormat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RoundingMode {
    /// Reject any value that does not decode back to itself.
    Exact,
    /// Nearest representable value, ties to even mantissa.
    RoundNearest,
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum MinifloatError {
    #[error("{value} is not representable with {exp} exponent / {mant} mantissa bits (nearest is {nearest})", exp = .format.exp_bits, mant = .format.mant_bits)]
    NotRepresentable {
        value: f64,
        nearest: f64,
        format: FloatFormat,
    },
    #[error("{value} exceeds the largest finite value {max}")]
    Overflow { value: f64, max: f64 },
    #[error("{0} is not finite")]
    NotFinite(f64),
    #[error("unsupported float format {0:?}")]
    InvalidFormat(FloatFormat),
    #[error("bit pattern {0:#x} uses the reserved exponent")]
    ReservedExponent(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiniFloat {
    pub bits: u32,
    /// What `bits` decodes to.
    pub value: f64,
}

impl MiniFloat {
    pub fn sign(self, format: FloatFormat) -> u32 {
        self.bits >> (format.exp_bits + format.mant_bits)
    }

    pub fn exponent_field(self, format: FloatFormat) -> u32 {
        (self.bits >> format.mant_bits) & ((1 << format.exp_bits) - 1)
    }

    pub fn mantissa_field(self, format: FloatFormat) -> u32 {
        self.bits & ((1 << format.mant_bits) - 1)
    }
}

/// `2^k` for any `k` an `f64` can hold exactly, subnormals included.
fn pow2(k: i32) -> f64 {
    debug_assert!((-1074..=1023).contains(&k));
    if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (k + 1074))
    }
}

/// `floor(log2(a))` for finite positive `a`.
fn ilog2(a: f64) -> i32 {
    let bits = a.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let frac = bits & ((1 << 52) - 1);
        -1011 - frac.leading_zeros() as i32
    } else {
        biased - 1023
    }
}

struct Params {
    mant: i32,
    bias: i32,
    min_exp: i32,
    max_field: u32,
}

fn params(format: FloatFormat) -> Result<Params, MinifloatError> {
    if !format.is_valid() {
        return Err(MinifloatError::InvalidFormat(format));
    }
    let bias = (1 << (format.exp_bits - 1)) - 1;
    Ok(Params {
        mant: i32::from(format.mant_bits),
        bias,
        min_exp: 1 - bias,
        max_field: (1 << format.exp_bits) - 2,
    })
}

pub fn max_finite(format: FloatFormat) -> Result<f64, MinifloatError> {
    let p = params(format)?;
    let top = p.max_field as i32 - p.bias;
    Ok(((1u64 << (p.mant + 1)) - 1) as f64 * pow2(top - p.mant))
}

pub fn decode_minifloat(bits: u32, format: FloatFormat) -> Result<f64, MinifloatError> {
    let p = params(format)?;
    let m = format.mant_bits;
    let field = (bits >> m) & ((1 << format.exp_bits) - 1);
    let mant = bits & ((1 << m) - 1);
    let negative = (bits >> (m + format.exp_bits)) & 1 == 1;
    if field > p.max_field {
        return Err(MinifloatError::ReservedExponent(bits));
    }
    let magnitude = if field == 0 {
        f64::from(mant) * pow2(p.min_exp - p.mant)
    } else {
        f64::from((1 << m) | mant) * pow2(field as i32 - p.bias - p.mant)
    };
    Ok(if negative { -magnitude } else { magnitude })
}

pub fn encode_minifloat(
    x: f64,
    format: FloatFormat,
    mode: RoundingMode,
) -> Result<MiniFloat, MinifloatError> {
    let p = params(format)?;
    if !x.is_finite() {
        return Err(MinifloatError::NotFinite(x));
    }
    let max = max_finite(format)?;
    let a = x.abs();
    if a > max {
        return Err(MinifloatError::Overflow { value: x, max });
    }

    let (field, mant) = if a == 0.0 {
        (0u32, 0u32)
    } else {
        let mut exp = ilog2(a).max(p.min_exp);
        // a / 2^(exp - mant) is exact: scaling by a power of two.
        let mut n = (a / pow2(exp - p.mant)).round_ties_even() as u64;
        let implicit = 1u64 << p.mant;
        if n >= implicit << 1 {
            exp += 1;
            n >>= 1;
        }
        if n < implicit {
            (0, n as u32)
        } else {
            ((exp + p.bias) as u32, (n - implicit) as u32)
        }
    };
    debug_assert!(field <= p.max_field);

    let sign = u32::from(x.is_sign_negative());
    let bits = (sign << (format.exp_bits + format.mant_bits)) | (field << format.mant_bits) | mant;
    let value = decode_minifloat(bits, format)?;
    if mode == RoundingMode::Exact && value != x {
        return Err(MinifloatError::NotRepresentable {
            value: x,
            nearest: value,
            format,
        });
    }
    Ok(MiniFloat { bits, value })
}
