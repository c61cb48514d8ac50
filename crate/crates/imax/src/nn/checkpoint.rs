//! Versioned net checkpoints.
//!
//! Binary layout (`<path>`):
//!   bytes 0..4   magic `b"PNET"`
//!   bytes 4..8   format version, little-endian u32 (currently 1)
//!   bytes 8..16  parameter count, little-endian u64
//!   bytes 16..   parameters as little-endian 64-bit floats, in layer order
//!                (weights row-major, then biases, layer by layer)
//!
//! A JSON sidecar (`<path>.json`) records the shapes and a role tag so a
//! checkpoint is self-describing. Save/load round-trips bit-exactly.

use super::{Activation, NnError, ParamNet};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"PNET";
const VERSION: u32 = 1;

/// Sidecar contents describing a saved net.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct NetCheckpointHeader {
    pub version: u32,
    /// What the net is, e.g. "theta", "theta_v", "psi_Q", "psi_pi".
    pub role: String,
    pub widths: Vec<usize>,
    pub layer_norm: Vec<bool>,
    pub activation: Activation,
    pub param_count: usize,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

pub fn save_net(net: &ParamNet, role: &str, path: &Path) -> Result<(), NnError> {
    let header = NetCheckpointHeader {
        version: VERSION,
        role: role.to_string(),
        widths: net.widths().to_vec(),
        layer_norm: net.layer_norm_flags().to_vec(),
        activation: net.activation(),
        param_count: net.num_params(),
    };
    let mut file = fs::File::create(path)?;
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(net.num_params() as u64).to_le_bytes())?;
    for p in net.params() {
        file.write_all(&p.to_le_bytes())?;
    }
    file.flush()?;
    let json = serde_json::to_string_pretty(&header)
        .map_err(|e| NnError::Format(format!("sidecar encode: {e}")))?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn load_net(path: &Path) -> Result<(ParamNet, NetCheckpointHeader), NnError> {
    let json = fs::read_to_string(sidecar_path(path))?;
    let header: NetCheckpointHeader =
        serde_json::from_str(&json).map_err(|e| NnError::Format(format!("sidecar decode: {e}")))?;
    if header.version != VERSION {
        return Err(NnError::Format(format!("unsupported checkpoint version {}", header.version)));
    }

    let mut file = fs::File::open(path)?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Format("bad magic bytes".into()));
    }
    let mut buf4 = [0u8; 4];
    file.read_exact(&mut buf4)?;
    if u32::from_le_bytes(buf4) != VERSION {
        return Err(NnError::Format("binary/sidecar version mismatch".into()));
    }
    let mut buf8 = [0u8; 8];
    file.read_exact(&mut buf8)?;
    let count = u64::from_le_bytes(buf8) as usize;
    if count != header.param_count {
        return Err(NnError::Format(format!(
            "parameter count mismatch: binary {count}, sidecar {}",
            header.param_count
        )));
    }

    let mut net = ParamNet::new(&header.widths, false, header.activation);
    if net.layer_norm_flags() != header.layer_norm.as_slice() {
        net = ParamNet::new(&header.widths, true, header.activation);
        if net.layer_norm_flags() != header.layer_norm.as_slice() {
            return Err(NnError::Format("unsupported layer-norm flag pattern".into()));
        }
    }
    if net.num_params() != count {
        return Err(NnError::Format("shape/parameter count mismatch".into()));
    }
    let mut bytes = vec![0u8; count * 8];
    file.read_exact(&mut bytes)?;
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        net.params_mut()[i] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok((net, header))
}
