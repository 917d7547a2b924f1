//! Versioned binary dataset container.
//!
//! Layout (little-endian):
//!   magic "OAMD" | u32 version | u32 header-JSON length | header JSON
//!   per record: 6 x f32 continuous params (g, theta_deg, L_um, w_p_um,
//!   lambda_p_um, lambda_s_um) | 2 x i32 (ell_p, p_p) |
//!   M*(2 ell_max + 1) x f32 weights | u32 CRC32 of the record bytes.
//!
//! A sidecar `<stem>.manifest.json` duplicates the header for humans.

use crate::{
    CrystalConfig, DatasetError, GenConfig, ParamRanges, Result, StandardizationStats,
    DATASET_MAGIC, DATASET_VERSION,
};
use serde::{Deserialize, Serialize};
use spdc_optics::PhysicalParams;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub ranges: ParamRanges,
    pub gen: GenConfig,
    pub crystal: CrystalConfig,
    pub seed: u64,
    pub count: usize,
    pub stratified: bool,
    pub resampled: usize,
    /// Hash of the simulator configuration that produced the records.
    pub provenance: String,
    #[serde(default)]
    pub stats: Option<StandardizationStats>,
}

/// One labeled sample: physical parameters and the flattened (m, ell) target.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub params: PhysicalParams,
    pub weights: Vec<f32>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Target weights of record `i` promoted to f64 and renormalized.
    pub fn target_f64(&self, i: usize) -> Vec<f64> {
        let raw: Vec<f64> = self.records[i].weights.iter().map(|&w| w as f64).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / sum).collect()
    }
}

fn record_byte_len(target_len: usize) -> usize {
    6 * 4 + 2 * 4 + target_len * 4 + 4
}

fn encode_record(rec: &DatasetRecord, buf: &mut Vec<u8>) {
    let start = buf.len();
    for v in [
        rec.params.g,
        rec.params.theta_deg,
        rec.params.l_um,
        rec.params.w_p_um,
        rec.params.lambda_p_um,
        rec.params.lambda_s_um,
    ] {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    buf.extend_from_slice(&rec.params.ell_p.to_le_bytes());
    buf.extend_from_slice(&(rec.params.p_p as i32).to_le_bytes());
    for &w in &rec.weights {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf[start..]);
    buf.extend_from_slice(&crc.to_le_bytes());
}

fn decode_record(
    bytes: &[u8],
    target_len: usize,
    index: usize,
    provenance: &str,
) -> Result<DatasetRecord> {
    let body_len = record_byte_len(target_len) - 4;
    let body = &bytes[..body_len];
    let stored_crc = u32::from_le_bytes(bytes[body_len..body_len + 4].try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(DatasetError::Checksum { index });
    }
    let f32_at = |i: usize| -> f64 {
        f32::from_le_bytes(body[i * 4..i * 4 + 4].try_into().unwrap()) as f64
    };
    let i32_at =
        |i: usize| -> i32 { i32::from_le_bytes(body[i * 4..i * 4 + 4].try_into().unwrap()) };
    let params = PhysicalParams {
        g: f32_at(0),
        theta_deg: f32_at(1),
        l_um: f32_at(2),
        w_p_um: f32_at(3),
        lambda_p_um: f32_at(4),
        lambda_s_um: f32_at(5),
        ell_p: i32_at(6),
        p_p: i32_at(7) as u32,
    };
    let mut weights = Vec::with_capacity(target_len);
    for k in 0..target_len {
        weights.push(f32::from_le_bytes(
            body[(8 + k) * 4..(8 + k) * 4 + 4].try_into().unwrap(),
        ));
    }
    // targets are validated, not trusted
    let mut sum = 0.0f64;
    for &w in &weights {
        if !w.is_finite() || w < 0.0 {
            return Err(DatasetError::InvalidTarget {
                index,
                reason: format!("weight {w} negative or non-finite"),
            });
        }
        sum += w as f64;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(DatasetError::InvalidTarget {
            index,
            reason: format!("target sum {sum} not within 1e-6 of 1"),
        });
    }
    Ok(DatasetRecord {
        params,
        weights,
        provenance: provenance.to_string(),
    })
}

/// Writes the dataset container plus the human-readable manifest sidecar.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    let header_json = serde_json::to_vec(&dataset.header)
        .map_err(|e| DatasetError::Header(e.to_string()))?;
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for rec in &dataset.records {
        encode_record(rec, &mut buf);
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    file.sync_all()?;

    let manifest = serde_json::to_string_pretty(&dataset.header)
        .map_err(|e| DatasetError::Header(e.to_string()))?;
    std::fs::write(path.with_extension("manifest.json"), manifest)?;
    Ok(())
}

/// Loads and validates a dataset container.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let bytes = std::fs::read(path.as_ref())?;
    if bytes.len() < 12 {
        return Err(DatasetError::Truncated { index: 0 });
    }
    if &bytes[0..4] != DATASET_MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(DatasetError::BadVersion { got: version });
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() < 12 + header_len {
        return Err(DatasetError::Truncated { index: 0 });
    }
    let header: DatasetHeader = serde_json::from_slice(&bytes[12..12 + header_len])
        .map_err(|e| DatasetError::Header(e.to_string()))?;
    let target_len = header.gen.target_len();
    let rec_len = record_byte_len(target_len);
    let mut records = Vec::with_capacity(header.count);
    let mut offset = 12 + header_len;
    for index in 0..header.count {
        if bytes.len() < offset + rec_len {
            return Err(DatasetError::Truncated { index });
        }
        records.push(decode_record(
            &bytes[offset..offset + rec_len],
            target_len,
            index,
            &header.provenance,
        )?);
        offset += rec_len;
    }
    Ok(Dataset { header, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_dataset(n: usize) -> Dataset {
        let gen = GenConfig {
            n_radial: 16,
            n_angular: 64,
            q_max_factor: 10.0,
            m_modes: 2,
            ell_max: 1,
        };
        let records: Vec<DatasetRecord> = (0..n)
            .map(|i| {
                let mut weights = vec![0.0f32; gen.target_len()];
                let len = weights.len();
                let k = i % len;
                weights[k] = 0.75;
                weights[(k + 1) % len] = 0.25;
                // continuous params go through f32 like sampled ones do
                let f = |v: f64| v as f32 as f64;
                DatasetRecord {
                    params: PhysicalParams::new(
                        f(0.5 + i as f64 * 0.01),
                        f(32.95),
                        f(1000.0 + i as f64),
                        f(300.0),
                        (i % 3) as i32 - 1,
                        (i % 2) as u32,
                    ),
                    weights,
                    provenance: "test".into(),
                }
            })
            .collect();
        Dataset {
            header: DatasetHeader {
                version: DATASET_VERSION,
                ranges: ParamRanges::default(),
                gen,
                crystal: CrystalConfig::default(),
                seed: 1,
                count: n,
                stratified: false,
                resampled: 0,
                provenance: "test".into(),
                stats: None,
            },
            records,
        }
    }

    #[test]
    fn save_load_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.oamd");
        let ds = tiny_dataset(9);
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(ds.header, back.header);
        assert_eq!(ds.records.len(), back.records.len());
        for (a, b) in ds.records.iter().zip(&back.records) {
            assert_eq!(a.weights, b.weights);
            // continuous params round-trip exactly because they are
            // f32-representable by construction
            assert_eq!(a.params.ell_p, b.params.ell_p);
            assert_eq!(a.params.p_p, b.params.p_p);
            assert_eq!(a.params.theta_deg, b.params.theta_deg);
        }
        assert!(path.with_extension("manifest.json").exists());
    }

    #[test]
    fn corrupted_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.oamd");
        save_dataset(&tiny_dataset(4), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();

        // flip one payload byte -> checksum failure
        let n = bytes.len();
        bytes[n - 10] ^= 0xFF;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(DatasetError::Checksum { .. })
        ));

        // truncate -> truncated error
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(n - 7);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(DatasetError::Truncated { .. })
        ));

        // wrong magic
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_dataset(&path), Err(DatasetError::BadMagic)));

        // wrong version
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'O';
        bytes[4] = 99;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(DatasetError::BadVersion { got: 99 })
        ));
    }

    #[test]
    fn unnormalized_target_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.oamd");
        let mut ds = tiny_dataset(2);
        ds.records[1].weights[0] = 0.9; // breaks the sum
        save_dataset(&ds, &path).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(DatasetError::InvalidTarget { index: 1, .. })
        ));
    }
}
