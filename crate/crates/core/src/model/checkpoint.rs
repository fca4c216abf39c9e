//! Checkpoint format: magic "FSTC", u32 version, u32 tensor count, then
//! per tensor (u16 name length, UTF-8 name, u8 rank, u32 extents...,
//! float32 data), all little-endian.

use super::FastModel;
use crate::error::{Error, Result};
use crate::mobilevit::BlockVariant;
use crate::model::{build_variant, ModelConfig};
use crate::tensor::Scalar;
use std::io::Read;
use std::path::Path;

const MAGIC: &[u8; 4] = b"FSTC";
const VERSION: u32 = 1;

/// Raw checkpoint contents: named tensors with shapes and f32 data.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub version: u32,
    pub tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
}

/// Serialize every parameter of the model.
pub fn save<T: Scalar>(model: &FastModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let params = model.named_params();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, tensor) in &params {
        let name_bytes = name.as_bytes();
        assert!(name_bytes.len() <= u16::MAX as usize);
        out.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(name_bytes);
        let shape = tensor.shape();
        assert!(shape.len() <= u8::MAX as usize);
        out.push(shape.len() as u8);
        for &extent in shape {
            out.extend_from_slice(&(extent as u32).to_le_bytes());
        }
        for &v in tensor.data().iter() {
            out.extend_from_slice(&v.to_f32().to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a checkpoint file without interpreting it against a config.
pub fn read(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    parse(&bytes)
}

fn parse(bytes: &[u8]) -> Result<Checkpoint> {
    let mut pos = 0usize;
    let fail = |pos: usize, what: &str, field: &'static str| Error::Parse {
        what: what.to_string(),
        offset: Some(pos as u64),
        field: Some(field),
    };
    let take = |pos: &mut usize, n: usize, field: &'static str| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(fail(*pos, "checkpoint truncated", field));
        }
        let slice = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(slice)
    };

    if take(&mut pos, 4, "magic")? != MAGIC {
        return Err(fail(0, "bad checkpoint magic", "magic"));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(fail(4, "unsupported checkpoint version", "version"));
    }
    let count = u32::from_le_bytes(take(&mut pos, 4, "tensor_count")?.try_into().unwrap());

    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len =
            u16::from_le_bytes(take(&mut pos, 2, "name_length")?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len, "name")?.to_vec())
            .map_err(|_| fail(pos, "tensor name is not UTF-8", "name"))?;
        let rank = take(&mut pos, 1, "rank")?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(
                u32::from_le_bytes(take(&mut pos, 4, "extent")?.try_into().unwrap()) as usize,
            );
        }
        let numel: usize = shape.iter().product();
        let raw = take(&mut pos, numel * 4, "data")?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        tensors.push((name, shape, data));
    }
    if pos != bytes.len() {
        return Err(fail(pos, "trailing bytes after last tensor", "data"));
    }
    Ok(Checkpoint { version, tensors })
}

/// Rebuild a model from a config and restore every parameter from the
/// checkpoint. Fails naming the offending tensor when anything is
/// missing, extra, or shaped differently.
pub fn load<T: Scalar>(config: &ModelConfig, path: impl AsRef<Path>) -> Result<FastModel<T>> {
    load_variant(config, path, BlockVariant::Lipschitz)
}

pub fn load_variant<T: Scalar>(
    config: &ModelConfig,
    path: impl AsRef<Path>,
    variant: BlockVariant,
) -> Result<FastModel<T>> {
    let ckpt = read(path)?;
    let model = build_variant::<T>(config, 0, variant)?;
    let params = model.named_params();
    if ckpt.tensors.len() != params.len() {
        return Err(Error::Parse {
            what: format!(
                "checkpoint has {} tensors, model needs {}",
                ckpt.tensors.len(),
                params.len()
            ),
            offset: None,
            field: Some("tensor_count"),
        });
    }
    let stored: std::collections::HashMap<&str, &(String, Vec<usize>, Vec<f32>)> = ckpt
        .tensors
        .iter()
        .map(|entry| (entry.0.as_str(), entry))
        .collect();
    for (name, tensor) in &params {
        let Some((_, shape, data)) = stored.get(name.as_str()) else {
            return Err(Error::Parse {
                what: format!("checkpoint is missing tensor `{name}`"),
                offset: None,
                field: Some("name"),
            });
        };
        if shape != tensor.shape() {
            return Err(Error::Parse {
                what: format!(
                    "tensor `{name}` has shape {shape:?}, model expects {:?}",
                    tensor.shape()
                ),
                offset: None,
                field: Some("extent"),
            });
        }
        tensor.update_data(|dst| {
            for (d, &s) in dst.iter_mut().zip(data.iter()) {
                *d = T::from_f32(s);
            }
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build;

    #[test]
    fn save_load_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fstc");
        let cfg = ModelConfig::tiny(2);
        let model = build::<f32>(&cfg, 123).unwrap();
        save(&model, &path).unwrap();
        let restored = load::<f32>(&cfg, &path).unwrap();
        for ((na, ta), (nb, tb)) in model
            .named_params()
            .iter()
            .zip(restored.named_params().iter())
        {
            assert_eq!(na, nb);
            let (va, vb) = (ta.to_vec(), tb.to_vec());
            assert_eq!(
                va.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                vb.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                "tensor {na} not bit-identical"
            );
        }
    }

    #[test]
    fn corrupt_magic_names_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fstc");
        std::fs::write(&path, b"XXXX123412341234").unwrap();
        match read(&path) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, Some("magic")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_checkpoint_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.fstc");
        let cfg = ModelConfig::tiny(2);
        let model = build::<f32>(&cfg, 1).unwrap();
        save(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(read(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn config_mismatch_names_tensor() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fstc");
        let model = build::<f32>(&ModelConfig::tiny(2), 1).unwrap();
        save(&model, &path).unwrap();
        let other = ModelConfig::tiny(5); // different head width
        match load::<f32>(&other, &path) {
            Err(Error::Parse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
