//! Binary checkpoint format.
//!
//! ```text
//! "DJF" 0x01                      magic and version
//! u32 little-endian  L            length of the config
//! L bytes                         NetworkConfig as UTF-8 JSON
//! f32 little-endian  × P          parameters: target, guidance, fusion branch;
//!                                 layers ascending; weights (out, in, row, col)
//!                                 then biases
//! ```

use super::{Model, NetworkConfig, SubNets, SubNetwork};
use crate::error::{Error, Result};
use crate::tensor::{ConvLayer, Real};

pub const CHECKPOINT_MAGIC: &[u8; 3] = b"DJF";
pub const CHECKPOINT_VERSION: u8 = 1;

const HEADER_LEN: usize = 4 + 4;

pub fn serialize<T: Real>(model: &Model<T>) -> Vec<u8> {
    let config = serde_json::to_vec(model.config()).expect("config serialises");
    let mut out = Vec::with_capacity(HEADER_LEN + config.len() + 4 * model.param_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    for p in model.layers.layers().flat_map(|l| l.params()) {
        out.extend_from_slice(&(p.as_f64() as f32).to_le_bytes());
    }
    out
}

/// Parses a checkpoint and returns the model together with the size in bytes
/// of its parameter payload.
pub fn deserialize<T: Real>(bytes: &[u8]) -> Result<Model<T>> {
    if bytes.len() < 3 || &bytes[..3] != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = *bytes
        .get(3)
        .ok_or_else(|| Error::Truncated("missing version byte".into()))?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let len_bytes: [u8; 4] = bytes
        .get(4..8)
        .ok_or_else(|| Error::Truncated("missing config length".into()))?
        .try_into()
        .unwrap();
    let config_len = u32::from_le_bytes(len_bytes) as usize;
    let config_bytes = bytes
        .get(HEADER_LEN..HEADER_LEN + config_len)
        .ok_or_else(|| Error::Truncated(format!("config needs {config_len} bytes")))?;
    let config: NetworkConfig = serde_json::from_slice(config_bytes)
        .map_err(|e| Error::Checkpoint(format!("config JSON: {e}")))?;
    config.validate()?;

    let payload = &bytes[HEADER_LEN + config_len..];
    let expected = super::param_count(&config) * 4;
    if payload.len() < expected {
        return Err(Error::Truncated(format!(
            "payload has {} bytes, config needs {expected}",
            payload.len()
        )));
    }
    if payload.len() != expected {
        return Err(Error::Checkpoint(format!(
            "payload has {} bytes, config needs {expected}",
            payload.len()
        )));
    }

    let mut values = payload
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64));
    let mut read_branch = |which| -> Result<Vec<ConvLayer<T>>> {
        config
            .plan(which)
            .into_iter()
            .map(|s| {
                let nw = s.out_channels * s.in_channels * s.kernel_size * s.kernel_size;
                let weights = values.by_ref().take(nw).collect();
                let biases = values.by_ref().take(s.out_channels).collect();
                ConvLayer::new(s.out_channels, s.in_channels, s.kernel_size, weights, biases)
            })
            .collect()
    };
    let layers = SubNets {
        target: read_branch(SubNetwork::Target)?,
        guidance: read_branch(SubNetwork::Guidance)?,
        fusion: read_branch(SubNetwork::Fusion)?,
    };
    Model::from_parts(config, layers)
}

/// Byte offset of the parameter payload within a checkpoint.
pub fn payload_offset(bytes: &[u8]) -> Option<usize> {
    let len = u32::from_le_bytes(bytes.get(4..8)?.try_into().ok()?) as usize;
    Some(HEADER_LEN + len)
}
