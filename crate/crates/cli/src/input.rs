//! Reading programs from IR text, binary payloads or QR images.

use std::path::{Path, PathBuf};

use qrmap::codec::{decode_bytes, DecodeError, MAGIC};
use qrmap::ir::{parse_program, ParseError};
use qrmap::qrio::{extract, QrError};
use qrmap::Program;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Ir,
    Binary,
    Image,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("not a QRmap payload: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Qr(#[from] QrError),
    #[error("input is not UTF-8 text, a QRmap binary or a PNG/JPEG image")]
    Unrecognized,
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub kind: PayloadKind,
    pub program: Program,
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";
const JPEG_SIGNATURE: &[u8] = &[0xff, 0xd8, 0xff];

pub fn sniff(bytes: &[u8]) -> PayloadKind {
    if bytes.starts_with(&MAGIC.to_be_bytes()) {
        PayloadKind::Binary
    } else if bytes.starts_with(PNG_SIGNATURE) || bytes.starts_with(JPEG_SIGNATURE) {
        PayloadKind::Image
    } else {
        PayloadKind::Ir
    }
}

pub fn load_bytes(bytes: &[u8]) -> Result<Loaded, LoadError> {
    let kind = sniff(bytes);
    let program = match kind {
        PayloadKind::Binary => decode_bytes(bytes)?,
        PayloadKind::Image => decode_bytes(&extract(bytes)?)?,
        PayloadKind::Ir => {
            let text = std::str::from_utf8(bytes).map_err(|_| LoadError::Unrecognized)?;
            parse_program(text)?
        }
    };
    Ok(Loaded { kind, program })
}

pub fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_path(path: &Path) -> Result<Loaded, LoadError> {
    load_bytes(&read(path)?)
}
