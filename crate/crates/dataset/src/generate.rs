//! Simulator-driven dataset generation with schedule-independent RNG.

use crate::format::{Dataset, DatasetHeader, DatasetRecord};
use crate::sample::sample_one;
use crate::{DatasetError, GenConfig, ParamRanges, Result, DATASET_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spdc_optics::{CrystalSpec, Sellmeier, SimGrid};
use spdc_schmidt::simulate;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Serializable crystal dispersion: Sellmeier coefficients only (the length
/// and angle vary per record through the sampled parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalConfig {
    pub sellmeier_o: [f64; 4],
    pub sellmeier_e: [f64; 4],
}

impl Default for CrystalConfig {
    fn default() -> Self {
        CrystalConfig::from(&CrystalSpec::bbo())
    }
}

impl From<&CrystalSpec> for CrystalConfig {
    fn from(spec: &CrystalSpec) -> Self {
        let s = |x: Sellmeier| [x.a, x.b, x.c, x.d];
        CrystalConfig {
            sellmeier_o: s(spec.sellmeier_o),
            sellmeier_e: s(spec.sellmeier_e),
        }
    }
}

impl CrystalConfig {
    pub fn to_spec(self) -> CrystalSpec {
        let mut spec = CrystalSpec::bbo();
        spec.sellmeier_o = Sellmeier {
            a: self.sellmeier_o[0],
            b: self.sellmeier_o[1],
            c: self.sellmeier_o[2],
            d: self.sellmeier_o[3],
        };
        spec.sellmeier_e = Sellmeier {
            a: self.sellmeier_e[0],
            b: self.sellmeier_e[1],
            c: self.sellmeier_e[2],
            d: self.sellmeier_e[3],
        };
        spec
    }
}

/// Hash identifying the simulator configuration that produced a dataset.
pub fn provenance_hash(gen: &GenConfig, crystal: &CrystalConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(
        serde_json::to_vec(&(gen, crystal)).expect("config serialization cannot fail"),
    );
    let digest = hasher.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

/// Maximum tolerated fraction of resampled records.
const MAX_RESAMPLE_RATE: f64 = 0.01;
const MAX_ATTEMPTS_PER_SAMPLE: u64 = 8;

/// Generates `n` labeled records by running the simulator on sampled
/// parameters. Record order is by sample index regardless of worker
/// scheduling; per-sample RNG streams are derived from (seed, index,
/// attempt), so worker counts never change the output. Samples whose
/// configuration fails to simulate are resampled; more than 1% resamples
/// aborts with diagnostics.
pub fn generate_dataset(
    ranges: &ParamRanges,
    n: usize,
    gen: &GenConfig,
    crystal: &CrystalSpec,
    seed: u64,
    stratified: bool,
) -> Result<Dataset> {
    ranges.validate()?;
    crystal.validate()?;
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let crystal_cfg = CrystalConfig::from(crystal);
    let provenance = provenance_hash(gen, &crystal_cfg);

    let run_one = |index: u64| -> std::result::Result<(DatasetRecord, u64), DatasetError> {
        let mut last_err: Option<DatasetError> = None;
        for attempt in 0..MAX_ATTEMPTS_PER_SAMPLE {
            let params = sample_one(ranges, seed, index, attempt, stratified);
            let grid = match SimGrid::for_params(&params, gen.n_radial, gen.n_angular, gen.q_max_factor)
            {
                Ok(g) => g,
                Err(e) => {
                    last_err = Some(e.into());
                    continue;
                }
            };
            match simulate(&params, crystal, &grid, gen.m_modes, gen.ell_max) {
                Ok(dist) => {
                    let weights: Vec<f32> = dist.flat().iter().map(|&w| w as f32).collect();
                    return Ok((
                        DatasetRecord {
                            params,
                            weights,
                            provenance: provenance.clone(),
                        },
                        attempt,
                    ));
                }
                Err(e) => last_err = Some(e.into()),
            }
        }
        Err(last_err.expect("at least one attempt ran"))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<std::result::Result<(DatasetRecord, u64), DatasetError>> =
        (0..n as u64).into_par_iter().map(run_one).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<std::result::Result<(DatasetRecord, u64), DatasetError>> =
        (0..n as u64).map(run_one).collect();

    let mut records = Vec::with_capacity(n);
    let mut resampled = 0usize;
    for res in results {
        match res {
            Ok((rec, attempts)) => {
                resampled += attempts as usize;
                records.push(rec);
            }
            Err(e) => {
                return Err(DatasetError::ResampleRate {
                    resampled: resampled + MAX_ATTEMPTS_PER_SAMPLE as usize,
                    n,
                    last_error: e.to_string(),
                })
            }
        }
    }
    if resampled as f64 > MAX_RESAMPLE_RATE * n as f64 {
        return Err(DatasetError::ResampleRate {
            resampled,
            n,
            last_error: "per-sample failures exceeded the tolerated rate".into(),
        });
    }

    Ok(Dataset {
        header: DatasetHeader {
            version: DATASET_VERSION,
            ranges: ranges.clone(),
            gen: *gen,
            crystal: crystal_cfg,
            seed,
            count: records.len(),
            stratified,
            resampled,
            provenance,
            stats: None,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_gen() -> GenConfig {
        GenConfig {
            n_radial: 16,
            n_angular: 64,
            q_max_factor: 10.0,
            m_modes: 4,
            ell_max: 6,
        }
    }

    #[test]
    fn desk_run_produces_normalized_targets() {
        let ds = generate_dataset(
            &ParamRanges::default(),
            16,
            &small_gen(),
            &CrystalSpec::bbo(),
            3,
            false,
        )
        .unwrap();
        assert_eq!(ds.len(), 16);
        for rec in &ds.records {
            let sum: f64 = rec.weights.iter().map(|&w| w as f64).sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(!rec.provenance.is_empty());
        }
        assert_eq!(ds.header.resampled, 0);
    }

    #[test]
    fn record_regenerates_from_stored_params() {
        let gen = small_gen();
        let crystal = CrystalSpec::bbo();
        let ds = generate_dataset(&ParamRanges::default(), 4, &gen, &crystal, 9, false).unwrap();
        for rec in &ds.records {
            let grid =
                SimGrid::for_params(&rec.params, gen.n_radial, gen.n_angular, gen.q_max_factor)
                    .unwrap();
            let dist = simulate(&rec.params, &crystal, &grid, gen.m_modes, gen.ell_max).unwrap();
            for (stored, fresh) in rec.weights.iter().zip(dist.flat()) {
                // regeneration is deterministic, so the stored f32 equals the
                // freshly cast value exactly
                assert_eq!(*stored, *fresh as f32);
            }
        }
    }

    #[test]
    fn unsimulatable_config_aborts_with_resample_diagnostics() {
        let gen = GenConfig {
            q_max_factor: 1e9, // every node beyond the light cone
            ..small_gen()
        };
        let err = generate_dataset(
            &ParamRanges::default(),
            4,
            &gen,
            &CrystalSpec::bbo(),
            0,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::ResampleRate { .. }), "{err}");
    }
}
