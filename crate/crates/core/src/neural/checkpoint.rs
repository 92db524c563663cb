//! Checkpoint format: magic `MLFW`, a version word, the JSON architecture
//! descriptor, then the named arrays in their documented order as
//! little-endian 32-bit floats with explicit shapes.

use super::arch::ArchDescriptor;
use super::params::ParamSet;
use super::ModelError;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MLFW";
const VERSION: u32 = 1;

impl ParamSet<f32> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let arch_json = serde_json::to_vec(&self.arch).expect("arch serializes");
        out.extend_from_slice(&(arch_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&arch_json);
        let arrays = self.named_arrays();
        out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
        for (name, arr) in arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(arr.ndim() as u32).to_le_bytes());
            for &d in arr.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in arr.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ParamSet<f32>, ModelError> {
        let mut cur = std::io::Cursor::new(bytes);
        let bad = |msg: &str| ModelError::BadCheckpoint(msg.to_string());

        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = read_u32(&mut cur)?;
        if version != VERSION {
            return Err(ModelError::BadCheckpoint(format!(
                "unsupported version {version}"
            )));
        }
        let json_len = read_u32(&mut cur)? as usize;
        let mut json = vec![0u8; json_len];
        cur.read_exact(&mut json)?;
        let arch: ArchDescriptor =
            serde_json::from_slice(&json).map_err(|e| ModelError::BadCheckpoint(e.to_string()))?;
        arch.validate().map_err(ModelError::BadCheckpoint)?;

        // read into a zeroed model of the right shape, enforcing the
        // documented order as we go
        let mut params: ParamSet<f32> = zeroed(arch);
        let expected: Vec<(String, Vec<usize>)> = params
            .named_arrays()
            .into_iter()
            .map(|(n, a)| (n, a.shape().to_vec()))
            .collect();
        let n_arrays = read_u32(&mut cur)? as usize;
        if n_arrays != expected.len() {
            return Err(bad("array count mismatch"));
        }
        let mut views = params.arrays_mut();
        for ((exp_name, exp_shape), view) in expected.iter().zip(views.iter_mut()) {
            let name_len = read_u32(&mut cur)? as usize;
            let mut name = vec![0u8; name_len];
            cur.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| bad("bad array name"))?;
            if &name != exp_name {
                return Err(ModelError::BadCheckpoint(format!(
                    "expected array '{exp_name}', found '{name}'"
                )));
            }
            let ndim = read_u32(&mut cur)? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                let mut b = [0u8; 8];
                cur.read_exact(&mut b)?;
                shape.push(u64::from_le_bytes(b) as usize);
            }
            if &shape != exp_shape {
                return Err(ModelError::BadCheckpoint(format!(
                    "array '{name}': shape {shape:?}, expected {exp_shape:?}"
                )));
            }
            for v in view.iter_mut() {
                let mut b = [0u8; 4];
                cur.read_exact(&mut b)?;
                *v = f32::from_le_bytes(b);
            }
        }
        drop(views);
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<ParamSet<f32>, ModelError> {
        let bytes = std::fs::read(path)?;
        ParamSet::from_bytes(&bytes)
    }

    /// Hex SHA-256 of the serialized checkpoint; used as cache key and run
    /// provenance.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.to_bytes());
        hex_string(&hasher.finalize())
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn zeroed(arch: ArchDescriptor) -> ParamSet<f32> {
    // shape-only init; values are overwritten by the reader
    let mut rng = crate::rngs::substream(0, crate::rngs::Stream::ParamInit, u64::MAX);
    let p: ParamSet<f32> = ParamSet::init(arch, &mut rng);
    p.zeros_like()
}

fn read_u32(cur: &mut std::io::Cursor<&[u8]>) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    cur.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
