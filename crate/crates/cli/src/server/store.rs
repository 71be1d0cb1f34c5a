//! Programs on disk, one `<sha256>.qrmap-bin` file each.

use std::collections::HashMap;
use std::io;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use qrmap::codec::{decode_bytes, encode_program};
use qrmap::Program;
use sha2::{Digest, Sha256};

use super::error::ApiError;

pub struct ProgramStore {
    dir: PathBuf,
    cache: RwLock<HashMap<String, Arc<Program>>>,
}

pub fn content_id(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn valid_id(id: &str) -> bool {
    id.len() == 64
        && id
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl ProgramStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(ProgramStore {
            dir,
            cache: RwLock::new(HashMap::new()),
        })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.qrmap-bin"))
    }

    /// Stores the canonical encoding of `program`. Returns its id and whether
    /// it was new.
    pub fn put(&self, program: Program) -> Result<(String, bool), ApiError> {
        let bytes = encode_program(&program)?.into_bytes();
        let id = content_id(&bytes);
        let path = self.path(&id);
        let new = !path.exists();
        if new {
            std::fs::write(&path, &bytes)
                .map_err(|e| ApiError::internal(format!("storing program: {e}")))?;
        }
        self.cache
            .write()
            .expect("store lock")
            .insert(id.clone(), Arc::new(program));
        Ok((id, new))
    }

    pub fn get(&self, id: &str) -> Result<Arc<Program>, ApiError> {
        let missing =
            || ApiError::not_found("program_not_found", format!("no program with id {id:?}"));
        if !valid_id(id) {
            return Err(missing());
        }
        if let Some(p) = self.cache.read().expect("store lock").get(id) {
            return Ok(p.clone());
        }
        let bytes = match std::fs::read(self.path(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(missing()),
            Err(e) => return Err(ApiError::internal(format!("reading program: {e}"))),
        };
        let program = Arc::new(
            decode_bytes(&bytes)
                .map_err(|e| ApiError::internal(format!("stored program {id} is corrupt: {e}")))?,
        );
        self.cache
            .write()
            .expect("store lock")
            .insert(id.to_string(), program.clone());
        Ok(program)
    }

    pub fn ids(&self) -> io::Result<Vec<String>> {
        let mut ids: Vec<String> = std::fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(".qrmap-bin")?;
                valid_id(id).then(|| id.to_string())
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}
