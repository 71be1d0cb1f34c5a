//! Putting payloads into QR symbols and getting them back out. Always byte
//! mode, so any binary payload survives unchanged.

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use image::{GrayImage, ImageFormat as RasterFormat, Luma};
use qrcode::bits::Bits;
use qrcode::{EcLevel as QrEcLevel, QrCode, Version};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_VERSION: u8 = 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcLevel {
    #[default]
    L,
    M,
    Q,
    H,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H];

    fn to_qr(self) -> QrEcLevel {
        match self {
            EcLevel::L => QrEcLevel::L,
            EcLevel::M => QrEcLevel::M,
            EcLevel::Q => QrEcLevel::Q,
            EcLevel::H => QrEcLevel::H,
        }
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for EcLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "L" => Ok(EcLevel::L),
            "M" => Ok(EcLevel::M),
            "Q" => Ok(EcLevel::Q),
            "H" => Ok(EcLevel::H),
            _ => Err(format!(
                "unknown error correction level {s:?} (expected L, M, Q or H)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageFormat {
    #[default]
    Png,
    Svg,
}

impl FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "png" => Ok(ImageFormat::Png),
            "svg" => Ok(ImageFormat::Svg),
            _ => Err(format!("unknown image format {s:?} (expected png or svg)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrParams {
    /// Smallest version that fits when unset.
    pub version: Option<u8>,
    pub ec: EcLevel,
    /// Pixels per module.
    pub scale: u32,
    pub format: ImageFormat,
}

impl Default for QrParams {
    fn default() -> Self {
        QrParams {
            version: None,
            ec: EcLevel::L,
            scale: 4,
            format: ImageFormat::Png,
        }
    }
}

#[derive(Debug, Error)]
pub enum QrError {
    #[error(
        "payload of {len} bytes exceeds the {capacity}-byte capacity of version 40 at level {ec}"
    )]
    PayloadTooLarge {
        len: usize,
        capacity: usize,
        ec: EcLevel,
    },
    #[error(
        "payload of {len} bytes does not fit version {version} at level {ec} ({capacity} bytes)"
    )]
    CapacityExceeded {
        len: usize,
        version: u8,
        ec: EcLevel,
        capacity: usize,
    },
    #[error("version {0} is outside 1..=40")]
    InvalidVersion(u8),
    #[error("module scale must be at least 1")]
    InvalidScale,
    #[error("no QR code found in the image")]
    NoQrFound,
    #[error("found {0} QR codes; expected exactly one")]
    MultipleQrFound(usize),
    #[error("QR code is damaged beyond error correction")]
    ChecksumFailure,
    #[error("QR code could not be read: {0}")]
    Unreadable(String),
    #[error("cannot read image: {0}")]
    Image(#[from] image::ImageError),
    #[error("QR encoder: {0}")]
    Encoder(String),
}

/// Byte-mode payload capacity of one symbol.
pub fn byte_capacity(version: u8, ec: EcLevel) -> Option<usize> {
    if !(1..=MAX_VERSION).contains(&version) {
        return None;
    }
    let bits = Bits::new(Version::Normal(i16::from(version)));
    let data_bits = bits.max_len(ec.to_qr()).ok()?;
    let length_bits = if version < 10 { 8 } else { 16 };
    Some((data_bits - 4 - length_bits) / 8)
}

/// The largest payload a single QR code can carry at `ec`.
pub fn max_payload(ec: EcLevel) -> usize {
    byte_capacity(MAX_VERSION, ec).expect("version 40 exists")
}

fn bits_for(payload: &[u8], version: u8, ec: EcLevel) -> Option<Bits> {
    let mut bits = Bits::new(Version::Normal(i16::from(version)));
    bits.push_byte_data(payload).ok()?;
    bits.push_terminator(ec.to_qr()).ok()?;
    Some(bits)
}

/// Builds the QR symbol for `payload`.
pub fn encode_symbol(payload: &[u8], version: Option<u8>, ec: EcLevel) -> Result<QrCode, QrError> {
    let bits = match version {
        Some(v) => {
            let capacity = byte_capacity(v, ec).ok_or(QrError::InvalidVersion(v))?;
            bits_for(payload, v, ec).ok_or(QrError::CapacityExceeded {
                len: payload.len(),
                version: v,
                ec,
                capacity,
            })?
        }
        None => (1..=MAX_VERSION)
            .find_map(|v| bits_for(payload, v, ec))
            .ok_or(QrError::PayloadTooLarge {
                len: payload.len(),
                capacity: max_payload(ec),
                ec,
            })?,
    };
    QrCode::with_bits(bits, ec.to_qr()).map_err(|e| QrError::Encoder(e.to_string()))
}

pub fn symbol_version(code: &QrCode) -> u8 {
    match code.version() {
        Version::Normal(v) | Version::Micro(v) => v as u8,
    }
}

/// Renders `payload` as a grayscale raster with a quiet zone.
pub fn embed_image(payload: &[u8], params: &QrParams) -> Result<GrayImage, QrError> {
    if params.scale == 0 {
        return Err(QrError::InvalidScale);
    }
    let code = encode_symbol(payload, params.version, params.ec)?;
    Ok(code
        .render::<Luma<u8>>()
        .module_dimensions(params.scale, params.scale)
        .build())
}

/// Encoded image file (PNG or SVG) holding `payload`.
pub fn embed(payload: &[u8], params: &QrParams) -> Result<Vec<u8>, QrError> {
    match params.format {
        ImageFormat::Png => {
            let img = embed_image(payload, params)?;
            let mut out = Cursor::new(Vec::new());
            img.write_to(&mut out, RasterFormat::Png)?;
            Ok(out.into_inner())
        }
        ImageFormat::Svg => {
            if params.scale == 0 {
                return Err(QrError::InvalidScale);
            }
            let code = encode_symbol(payload, params.version, params.ec)?;
            Ok(code
                .render::<qrcode::render::svg::Color<'_>>()
                .module_dimensions(params.scale, params.scale)
                .build()
                .into_bytes())
        }
    }
}

pub fn extract_image(image: &GrayImage) -> Result<Vec<u8>, QrError> {
    let mut prepared = rqrr::PreparedImage::prepare(image.clone());
    let grids = prepared.detect_grids();
    match grids.len() {
        0 => return Err(QrError::NoQrFound),
        1 => {}
        n => return Err(QrError::MultipleQrFound(n)),
    }
    let mut payload = Vec::new();
    grids[0].decode_to(&mut payload).map_err(|e| match e {
        rqrr::DeQRError::DataEcc | rqrr::DeQRError::FormatEcc => QrError::ChecksumFailure,
        other => QrError::Unreadable(other.to_string()),
    })?;
    Ok(payload)
}

/// Reads the payload of the single QR code in a PNG or JPEG file.
pub fn extract(image_bytes: &[u8]) -> Result<Vec<u8>, QrError> {
    let img = image::load_from_memory(image_bytes)?.to_luma8();
    extract_image(&img)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelCapacity {
    pub ec: EcLevel,
    pub capacity_bytes: usize,
    /// Smallest version that holds the payload, if any does.
    pub min_version: Option<u8>,
}

/// For each error correction level, whether and how a payload fits.
pub fn capacity_report(payload_len: usize) -> Vec<LevelCapacity> {
    EcLevel::ALL
        .iter()
        .map(|&ec| LevelCapacity {
            ec,
            capacity_bytes: max_payload(ec),
            min_version: (1..=MAX_VERSION)
                .find(|&v| byte_capacity(v, ec).is_some_and(|c| c >= payload_len)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_capacities() {
        assert_eq!(byte_capacity(40, EcLevel::L), Some(2953));
        assert_eq!(byte_capacity(40, EcLevel::M), Some(2331));
        assert_eq!(byte_capacity(40, EcLevel::Q), Some(1663));
        assert_eq!(byte_capacity(40, EcLevel::H), Some(1273));
        assert_eq!(byte_capacity(1, EcLevel::L), Some(17));
        assert_eq!(byte_capacity(10, EcLevel::L), Some(271));
        assert_eq!(byte_capacity(0, EcLevel::L), None);
    }

    #[test]
    fn auto_version_is_smallest() {
        let code = encode_symbol(&[], None, EcLevel::L).unwrap();
        assert_eq!(symbol_version(&code), 1);
        let code = encode_symbol(&[7; 18], None, EcLevel::L).unwrap();
        assert_eq!(symbol_version(&code), 2);
    }

    #[test]
    fn forced_version_too_small() {
        let err = encode_symbol(&[0; 100], Some(1), EcLevel::L).err();
        assert!(matches!(
            err,
            Some(QrError::CapacityExceeded { capacity: 17, .. })
        ));
    }

    #[test]
    fn round_trip_small() {
        let payload = b"QRmap\x00\xff";
        let png = embed(payload, &QrParams::default()).unwrap();
        assert_eq!(extract(&png).unwrap(), payload);
    }

    #[test]
    fn blank_image_has_no_code() {
        let img = GrayImage::from_pixel(200, 200, Luma([255]));
        assert!(matches!(extract_image(&img), Err(QrError::NoQrFound)));
    }

    #[test]
    fn svg_output() {
        let params = QrParams {
            format: ImageFormat::Svg,
            ..QrParams::default()
        };
        let svg = String::from_utf8(embed(b"x", &params).unwrap()).unwrap();
        assert!(svg.contains("<svg"));
    }
}
