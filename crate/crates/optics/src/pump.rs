//! Laguerre-Gaussian pump modes in the transverse-momentum representation.

use crate::PhysicalParams;
use num_complex::Complex64;

/// Generalized Laguerre polynomial L_p^a(x) by the three-term recurrence.
fn laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    match p {
        0 => 1.0,
        _ => {
            let mut lm1 = 1.0;
            let mut l = 1.0 + alpha - x;
            for k in 1..p {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 + alpha - x) * l - (kf + alpha) * lm1) / (kf + 1.0);
                lm1 = l;
                l = next;
            }
            l
        }
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

/// Radial amplitude of LG_{p,ell} at |q| = `q_mag`, in the momentum
/// representation with waist parameter 2/w_p:
///
///   A(q) = N (q w / sqrt2)^|ell| L_p^|ell|(q^2 w^2 / 2) exp(-q^2 w^2 / 4)
///
/// with N chosen so that `int |A|^2 d^2q = 2pi int |A|^2 q dq = 1`.
pub fn pump_radial_amplitude(q_mag: f64, params: &PhysicalParams) -> f64 {
    let w = params.w_p_um;
    let ell = params.ell_p.unsigned_abs();
    let p = params.p_p;
    // N^2 = w^2 p! / (2 pi (p + |ell|)!)
    let ln_norm = 0.5 * (ln_factorial(p) - ln_factorial(p + ell)) - 0.5 * std::f64::consts::TAU.ln();
    let norm = w * ln_norm.exp();
    let t = 0.5 * (q_mag * w) * (q_mag * w);
    let radial = (q_mag * w / std::f64::consts::SQRT_2).powi(ell as i32);
    norm * radial * laguerre(p, ell as f64, t) * (-0.5 * t).exp()
}

/// Full complex pump profile at transverse momentum `q = (qx, qy)`,
/// including the vortex phase exp(i ell_p phi_q).
pub fn pump_momentum_profile(q: [f64; 2], params: &PhysicalParams) -> Complex64 {
    let q_mag = (q[0] * q[0] + q[1] * q[1]).sqrt();
    let amp = pump_radial_amplitude(q_mag, params);
    if params.ell_p == 0 || q_mag == 0.0 {
        // |q|^|ell| kills the amplitude at the origin for ell != 0
        Complex64::new(amp, 0.0)
    } else {
        let phi = q[1].atan2(q[0]);
        amp * Complex64::from_polar(1.0, params.ell_p as f64 * phi)
    }
}
