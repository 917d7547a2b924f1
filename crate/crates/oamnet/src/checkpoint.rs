//! Checkpoint container.
//!
//! Layout (little-endian): magic "OAMC" | u32 version | u32 header length |
//! header JSON | per parameter: data, adam-m, adam-v as f32 blobs in slot
//! order | trailing u32 CRC32 over everything before it.

use crate::{
    LossWeights, ModelConfig, OamNet, OamnetError, Result, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
use serde::{Deserialize, Serialize};
use spdc_dataset::{GenConfig, StandardizationStats};
use spdc_nn::ParamStore;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    shape: Vec<usize>,
    step: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointHeader {
    version: u32,
    model: ModelConfig,
    stats: StandardizationStats,
    weights: LossWeights,
    seed: u64,
    gen: GenConfig,
    provenance: String,
    params: Vec<ParamMeta>,
}

/// Everything needed to resume or serve a trained model.
pub struct Checkpoint {
    pub model: OamNet,
    pub stats: StandardizationStats,
    pub weights: LossWeights,
    pub seed: u64,
    pub gen: GenConfig,
    pub provenance: String,
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        model: ckpt.model.cfg.clone(),
        stats: ckpt.stats.clone(),
        weights: ckpt.weights,
        seed: ckpt.seed,
        gen: ckpt.gen,
        provenance: ckpt.provenance.clone(),
        params: ckpt
            .model
            .store
            .params
            .iter()
            .map(|p| ParamMeta {
                name: p.name.clone(),
                shape: p.shape.clone(),
                step: p.step,
            })
            .collect(),
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| OamnetError::Header(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for p in &ckpt.model.store.params {
        for blob in [&p.data, &p.m, &p.v] {
            for &v in blob.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    let mut file = std::fs::File::create(path.as_ref())?;
    file.write_all(&buf)?;
    file.sync_all()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let bytes = std::fs::read(path.as_ref())?;
    if bytes.len() < 16 {
        return Err(OamnetError::Truncated);
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(OamnetError::Checksum);
    }
    if &body[0..4] != CHECKPOINT_MAGIC {
        return Err(OamnetError::BadMagic);
    }
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(OamnetError::BadVersion(version));
    }
    let header_len = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    if body.len() < 12 + header_len {
        return Err(OamnetError::Truncated);
    }
    let header: CheckpointHeader = serde_json::from_slice(&body[12..12 + header_len])
        .map_err(|e| OamnetError::Header(e.to_string()))?;

    // rebuild the model skeleton, then overwrite every parameter blob
    let mut model = OamNet::new(header.model.clone(), header.seed);
    if model.store.params.len() != header.params.len() {
        return Err(OamnetError::LayoutMismatch(format!(
            "{} parameters in file, model has {}",
            header.params.len(),
            model.store.params.len()
        )));
    }
    let mut offset = 12 + header_len;
    let read_blob = |offset: &mut usize, len: usize| -> Result<Vec<f32>> {
        let need = len * 4;
        if body.len() < *offset + need {
            return Err(OamnetError::Truncated);
        }
        let out = body[*offset..*offset + need]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        *offset += need;
        Ok(out)
    };
    for (param, meta) in model.store.params.iter_mut().zip(&header.params) {
        if param.name != meta.name || param.shape != meta.shape {
            return Err(OamnetError::LayoutMismatch(format!(
                "parameter `{}` {:?} vs file `{}` {:?}",
                param.name, param.shape, meta.name, meta.shape
            )));
        }
        let n = param.data.len();
        param.data = read_blob(&mut offset, n)?;
        param.m = read_blob(&mut offset, n)?;
        param.v = read_blob(&mut offset, n)?;
        param.step = meta.step;
    }
    if offset != body.len() {
        return Err(OamnetError::LayoutMismatch(format!(
            "{} trailing payload bytes",
            body.len() - offset
        )));
    }
    Ok(Checkpoint {
        model,
        stats: header.stats,
        weights: header.weights,
        seed: header.seed,
        gen: header.gen,
        provenance: header.provenance,
    })
}

/// Byte-identity helper for determinism tests.
pub fn store_equal(a: &ParamStore, b: &ParamStore) -> bool {
    a.params.len() == b.params.len()
        && a.params.iter().zip(&b.params).all(|(x, y)| {
            x.name == y.name
                && x.shape == y.shape
                && x.step == y.step
                && x.data.iter().zip(&y.data).all(|(u, v)| u.to_bits() == v.to_bits())
                && x.m.iter().zip(&y.m).all(|(u, v)| u.to_bits() == v.to_bits())
                && x.v.iter().zip(&y.v).all(|(u, v)| u.to_bits() == v.to_bits())
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use spdc_nn::Graph;

    fn tiny_checkpoint() -> Checkpoint {
        let cfg = ModelConfig {
            channels: 16,
            dilations: vec![1, 2],
            cond_hidden: 16,
            embed_dim: 4,
            m_modes: 4,
            ell_max: 3,
            ..Default::default()
        };
        Checkpoint {
            model: OamNet::new(cfg, 42),
            stats: StandardizationStats {
                mean: [1.0, 32.95, 2000.0, 300.0],
                std: [0.5, 0.05, 700.0, 150.0],
            },
            weights: LossWeights::default(),
            seed: 42,
            gen: GenConfig::default(),
            provenance: "test".into(),
        }
    }

    #[test]
    fn round_trip_preserves_forward_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.oamc");
        let mut ckpt = tiny_checkpoint();
        // dirty the optimizer state so the round trip is non-trivial
        ckpt.model.store.params[0].m[0] = 0.25;
        ckpt.model.store.params[0].step = 7;
        save_checkpoint(&ckpt, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert!(store_equal(&ckpt.model.store, &loaded.model.store));
        assert_eq!(loaded.stats, ckpt.stats);
        assert_eq!(loaded.weights, ckpt.weights);

        let batch = ckpt
            .model
            .cond_batch(vec![0.3; 8], &[1, -2], &[0, 3])
            .unwrap();
        let mut ga = Graph::new(true);
        let (_, pa) = ckpt.model.forward(&mut ga, &batch).unwrap();
        let mut gb = Graph::new(true);
        let (_, pb) = loaded.model.forward(&mut gb, &batch).unwrap();
        let bits_a: Vec<u32> = ga.data(pa).iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u32> = gb.data(pb).iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn corrupted_files_rejected_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.oamc");
        save_checkpoint(&tiny_checkpoint(), &path).unwrap();

        let good = std::fs::read(&path).unwrap();

        // truncation
        std::fs::write(&path, &good[..good.len() - 9]).unwrap();
        assert!(load_checkpoint(&path).is_err());

        // bit flip
        let mut bad = good.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 0x80;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(OamnetError::Checksum)));

        // bad magic (fix the CRC so the magic check is what trips)
        let mut bad = good.clone();
        bad[0] = b'X';
        let n = bad.len();
        let crc = crc32fast::hash(&bad[..n - 4]);
        bad[n - 4..].copy_from_slice(&crc.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(OamnetError::BadMagic)));
    }
}
