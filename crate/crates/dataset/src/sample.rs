//! Deterministic parameter sampling.

use crate::{derive_stream, ParamRanges, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdc_optics::PhysicalParams;

/// Rounds through f32 so a sampled value survives dataset storage exactly.
fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

pub(crate) fn sample_one(
    ranges: &ParamRanges,
    seed: u64,
    index: u64,
    attempt: u64,
    stratified: bool,
) -> PhysicalParams {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_stream(seed, index, attempt));
    let uniform = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| -> f64 {
        if lo == hi {
            lo
        } else {
            f32_exact(lo + (hi - lo) * rng.gen::<f64>())
        }
    };
    let g = uniform(&mut rng, ranges.g);
    let theta = uniform(&mut rng, ranges.theta_deg);
    let l = uniform(&mut rng, ranges.l_um);
    let wp = uniform(&mut rng, ranges.w_p_um);
    // stratification pins the first |ell_p| x |p_p| samples to distinct cells
    let cells = ranges.discrete_cells() as u64;
    let (ell_p, p_p) = if stratified && attempt == 0 && index < cells {
        let cell = index as usize;
        (
            ranges.ell_p[cell / ranges.p_p.len()],
            ranges.p_p[cell % ranges.p_p.len()],
        )
    } else {
        (
            ranges.ell_p[rng.gen_range(0..ranges.ell_p.len())],
            ranges.p_p[rng.gen_range(0..ranges.p_p.len())],
        )
    };
    let mut params = PhysicalParams::new(g, theta, l, wp, ell_p, p_p);
    // wavelengths ride along in the f32 record format too
    params.lambda_p_um = f32_exact(params.lambda_p_um);
    params.lambda_s_um = f32_exact(params.lambda_s_um);
    params
}

/// Draws `n` i.i.d. parameter sets, uniform per field. Deterministic for a
/// fixed seed; with `stratified` the first |ell_p| x |p_p| draws cover every
/// discrete cell.
pub fn sample_params(
    ranges: &ParamRanges,
    seed: u64,
    n: usize,
    stratified: bool,
) -> Result<Vec<PhysicalParams>> {
    ranges.validate()?;
    Ok((0..n as u64)
        .map(|i| sample_one(ranges, seed, i, 0, stratified))
        .collect())
}
