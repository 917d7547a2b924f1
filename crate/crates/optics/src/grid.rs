//! Cylindrical simulation grid with radial quadrature weights.

use crate::{OpticsError, PhysicalParams, Result};

/// Default radial cutoff in units of 1/w_p. Chosen so the highest supported
/// pump mode (|ell_p| = p_p = 4) keeps its momentum-space tail below 1e-9 of
/// its norm inside the grid.
pub const DEFAULT_Q_MAX_FACTOR: f64 = 10.0;

/// Discretization of the (q_s, q_i, angle) domain.
///
/// Radial samples are q_j = j * dq for j = 1..=N (zero excluded); the weights
/// implement the trapezoid rule for integrals of the form `int f(q) q dq`
/// on [0, q_max], where the q = 0 node is dropped because the measure
/// vanishes there. Azimuthal samples are uniform on [0, 2pi).
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    n_radial: usize,
    n_angular: usize,
    q_max_per_um: f64,
    radial: Vec<f64>,
    radial_weights: Vec<f64>,
}

impl SimGrid {
    pub fn new(n_radial: usize, n_angular: usize, q_max_per_um: f64) -> Result<Self> {
        if n_radial < 16 {
            return Err(OpticsError::InvalidGrid(format!(
                "n_radial must be >= 16, got {n_radial}"
            )));
        }
        if n_angular < 64 || !n_angular.is_power_of_two() {
            return Err(OpticsError::InvalidGrid(format!(
                "n_angular must be a power of two >= 64, got {n_angular}"
            )));
        }
        if !(q_max_per_um > 0.0 && q_max_per_um.is_finite()) {
            return Err(OpticsError::InvalidGrid(format!(
                "q_max_per_um must be > 0, got {q_max_per_um}"
            )));
        }
        let dq = q_max_per_um / n_radial as f64;
        let radial: Vec<f64> = (1..=n_radial).map(|j| j as f64 * dq).collect();
        let mut radial_weights: Vec<f64> = radial.iter().map(|&q| q * dq).collect();
        radial_weights[n_radial - 1] *= 0.5;
        Ok(SimGrid {
            n_radial,
            n_angular,
            q_max_per_um,
            radial,
            radial_weights,
        })
    }

    /// Grid sized for one configuration: q_max = factor / w_p.
    pub fn for_params(
        params: &PhysicalParams,
        n_radial: usize,
        n_angular: usize,
        q_max_factor: f64,
    ) -> Result<Self> {
        if !(q_max_factor > 0.0) {
            return Err(OpticsError::InvalidGrid(format!(
                "q_max_factor must be > 0, got {q_max_factor}"
            )));
        }
        Self::new(n_radial, n_angular, q_max_factor / params.w_p_um)
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn q_max(&self) -> f64 {
        self.q_max_per_um
    }

    /// Strictly increasing radial samples, zero excluded.
    pub fn radial_points(&self) -> &[f64] {
        &self.radial
    }

    /// Quadrature weights for `int f(q) q dq` matching `radial_points`.
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// Azimuthal step 2pi / n_angular.
    pub fn delta_phi(&self) -> f64 {
        std::f64::consts::TAU / self.n_angular as f64
    }

    /// Azimuthal sample k * delta_phi.
    pub fn phi(&self, k: usize) -> f64 {
        k as f64 * self.delta_phi()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = SimGrid::new(32, 128, 0.05).unwrap();
        assert_eq!(g.radial_points().len(), 32);
        assert!(g.radial_points()[0] > 0.0);
        assert!(g
            .radial_points()
            .windows(2)
            .all(|w| w[1] > w[0]));
        assert!((g.radial_points()[31] - 0.05).abs() < 1e-15);
        // weights integrate q dq over [0, q_max]: sum w = q_max^2 / 2 exactly
        // for this rule applied to f = 1 (up to the half-panel at the end)
        let s: f64 = g.radial_weights().iter().sum();
        let exact = 0.5 * 0.05f64.powi(2);
        assert!((s - exact).abs() < 1e-6, "sum {s} vs {exact}");
    }

    #[test]
    fn grid_rejects_bad_dims() {
        assert!(SimGrid::new(8, 128, 0.05).is_err());
        assert!(SimGrid::new(32, 100, 0.05).is_err());
        assert!(SimGrid::new(32, 32, 0.05).is_err());
        assert!(SimGrid::new(32, 128, 0.0).is_err());
    }
}
