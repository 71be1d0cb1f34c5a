use std::fmt;

use serde::Serialize;

use super::bits::BitStream;
use super::program::{
    decode_with_sections, encode_program_with, EncodeOptions, SectionSizes, FRAMING_BITS,
};
use super::{DecodeError, EncodeError};
use crate::model::Program;

/// Byte-mode capacity of a version 40 symbol at error correction level L.
pub const QR_CAPACITY_BYTES: usize = 2953;
pub const QR_CAPACITY_BITS: usize = QR_CAPACITY_BYTES * 8;

/// Version 40 byte-mode capacities, levels L, M, Q, H.
const CAPACITY_BY_LEVEL: [(&str, usize); 4] = [("L", 2953), ("M", 2331), ("Q", 1663), ("H", 1273)];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityHeadroom {
    pub level: &'static str,
    pub capacity_bytes: usize,
    /// Negative when the program does not fit.
    pub free_bytes: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeReport {
    pub bits: usize,
    pub bytes: usize,
    pub framing_bits: usize,
    pub padding_bits: usize,
    pub sections: SectionSizes,
    pub percent_of_capacity: f64,
    pub headroom: Vec<CapacityHeadroom>,
    pub quantized_floats: usize,
}

impl SizeReport {
    pub fn fits(&self) -> bool {
        self.bytes <= QR_CAPACITY_BYTES
    }

    /// Name of the section with the most bits.
    pub fn largest_section(&self) -> &'static str {
        self.sections
            .named()
            .into_iter()
            .max_by_key(|&(_, bits)| bits)
            .map_or("", |(name, _)| name)
    }
}

/// Size report of an encoded stream. Sections are measured by decoding it.
pub fn stats(stream: &BitStream) -> Result<SizeReport, DecodeError> {
    let (_, sections) = decode_with_sections(stream)?;
    let bits = FRAMING_BITS + sections.total();
    Ok(report(bits, sections, 0))
}

/// Encodes `program` and reports the result, including how many floats had
/// to be rounded.
pub fn program_stats(program: &Program, options: EncodeOptions) -> Result<SizeReport, EncodeError> {
    let encoded = encode_program_with(program, options)?;
    Ok(report(
        encoded.stream.len(),
        encoded.sections,
        encoded.quantized.len(),
    ))
}

fn report(bits: usize, sections: SectionSizes, quantized_floats: usize) -> SizeReport {
    let bytes = bits.div_ceil(8);
    SizeReport {
        bits,
        bytes,
        framing_bits: FRAMING_BITS,
        padding_bits: bytes * 8 - bits,
        sections,
        percent_of_capacity: 100.0 * bits as f64 / QR_CAPACITY_BITS as f64,
        headroom: CAPACITY_BY_LEVEL
            .iter()
            .map(|&(level, capacity_bytes)| CapacityHeadroom {
                level,
                capacity_bytes,
                free_bytes: capacity_bytes as i64 - bytes as i64,
            })
            .collect(),
        quantized_floats,
    }
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} bits ({} bytes), {:.2}% of {} bits",
            self.bits, self.bytes, self.percent_of_capacity, QR_CAPACITY_BITS
        )?;
        writeln!(f, "  framing        {:>7} bits", self.framing_bits)?;
        for (name, bits) in self.sections.named() {
            writeln!(f, "  {name:<14} {bits:>7} bits")?;
        }
        writeln!(f, "  padding        {:>7} bits", self.padding_bits)?;
        for h in &self.headroom {
            writeln!(
                f,
                "  EC {}: {} of {} bytes free",
                h.level, h.free_bytes, h.capacity_bytes
            )?;
        }
        if self.quantized_floats > 0 {
            writeln!(f, "  {} float(s) rounded", self.quantized_floats)?;
        }
        Ok(())
    }
}
