//! Compact binary encoding of programs. See `docs/binary-format.md` for the
//! field-by-field layout.

mod bits;
mod minifloat;
mod program;
mod stats;

use thiserror::Error;

use crate::model::{LabelError, ValidationReport};

pub use bits::{ref_width, BitReader, BitStream};
pub use minifloat::{
    decode_minifloat, encode_minifloat, max_finite, MiniFloat, MinifloatError, RoundingMode,
};
pub use program::{
    decode_bytes, decode_program, decode_with_sections, encode_program, encode_program_with,
    EncodeOptions, Encoded, Quantization, SectionSizes, DIALECT_QRMAP, FORMAT_VERSION,
    FRAMING_BITS, MAGIC,
};
pub use stats::{
    program_stats, stats, CapacityHeadroom, SizeReport, QR_CAPACITY_BITS, QR_CAPACITY_BYTES,
};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("program is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("float {value} is not exactly representable (nearest is {nearest}); enable lossy floats to round it")]
    FloatNotRepresentable { value: f64, nearest: f64 },
    #[error(transparent)]
    Float(MinifloatError),
    #[error("string {0:?} is not 7-bit ASCII")]
    StringNotAscii7(String),
    #[error("too many {what}: {count}")]
    TableTooLarge { what: &'static str, count: usize },
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("bad magic number {0:#06x}")]
    BadMagic(u16),
    #[error("unsupported dialect {0}")]
    UnsupportedDialect(u8),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("stream ends early at bit {at_bit}")]
    TruncatedStream { at_bit: usize },
    #[error("varint at bit {at_bit} is too long")]
    VarintOverflow { at_bit: usize },
    #[error("unknown section tag")]
    UnknownSectionTag,
    #[error("unknown header command {0}")]
    UnknownHeaderCommand(u8),
    #[error("header command {0} appears twice")]
    DuplicateHeaderCommand(u8),
    #[error("unknown opcode {0}")]
    UnknownOpcode(u8),
    #[error("unknown search strategy {0}")]
    UnknownStrategy(u8),
    #[error("unknown value kind {0}")]
    UnknownValueKind(u8),
    #[error("unsupported text encoding {0}")]
    UnsupportedTextEncoding(u8),
    #[error("{what} reference {value} out of range (count {count})")]
    InvalidReference {
        what: &'static str,
        value: u64,
        count: usize,
    },
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Minifloat(#[from] MinifloatError),
    #[error("{bits} bits of trailing data")]
    TrailingData { bits: usize },
    #[error("decoded program is invalid:\n{0}")]
    Invalid(ValidationReport),
}
