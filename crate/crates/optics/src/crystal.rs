//! Sellmeier dispersion and the uniaxial crystal specification.

use crate::{OpticsError, Result, LAMBDA_BAND_UM};
use std::path::Path;

/// Four-coefficient Sellmeier form n^2(lambda) = A + B/(lambda^2 - C) - D lambda^2,
/// lambda in micrometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sellmeier {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sellmeier {
    /// Squared index at `lambda_um` (no band check).
    fn n_squared(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }
}

/// A uniaxial crystal: ordinary and principal extraordinary dispersion plus
/// the cut geometry. Shipped defaults are beta-barium borate from published
/// dispersion data.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub sellmeier_o: Sellmeier,
    pub sellmeier_e: Sellmeier,
    pub length_um: f64,
    pub theta_deg: f64,
}

impl CrystalSpec {
    /// Beta-barium borate, 3 mm length, cut near the degenerate collinear
    /// type-I angle for a 355 nm pump.
    pub fn bbo() -> Self {
        CrystalSpec {
            sellmeier_o: Sellmeier {
                a: 2.7405,
                b: 0.0184,
                c: 0.0179,
                d: 0.0155,
            },
            sellmeier_e: Sellmeier {
                a: 2.3730,
                b: 0.0128,
                c: 0.0156,
                d: 0.0044,
            },
            length_um: 3000.0,
            theta_deg: 32.9,
        }
    }

    /// Validates length, angle, and that both indices are real and > 1 over
    /// the trusted wavelength band.
    pub fn validate(&self) -> Result<()> {
        if !(self.length_um > 0.0 && self.length_um.is_finite()) {
            return Err(OpticsError::InvalidCrystal(format!(
                "length_um must be positive, got {}",
                self.length_um
            )));
        }
        if !(self.theta_deg > 0.0 && self.theta_deg < 90.0) {
            return Err(OpticsError::InvalidCrystal(format!(
                "theta_deg must lie in (0, 90), got {}",
                self.theta_deg
            )));
        }
        let (lo, hi) = LAMBDA_BAND_UM;
        let samples = 64;
        for i in 0..=samples {
            let lam = lo + (hi - lo) * i as f64 / samples as f64;
            for (name, s) in [("ordinary", &self.sellmeier_o), ("extraordinary", &self.sellmeier_e)] {
                let n2 = s.n_squared(lam);
                if !(n2.is_finite() && n2 > 1.0) {
                    return Err(OpticsError::InvalidCrystal(format!(
                        "{name} index invalid at {lam:.3} um: n^2 = {n2}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loads a crystal from a UTF-8 `key = value` file. Blank lines and lines
    /// starting with `#` are ignored. Required keys: sellmeier_o_A..D,
    /// sellmeier_e_A..D, length_um, theta_deg.
    pub fn from_key_value_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_key_value_str(&text).map_err(|e| OpticsError::CrystalFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn from_key_value_str(text: &str) -> Result<Self> {
        let mut spec = Self::bbo();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                OpticsError::InvalidCrystal(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                OpticsError::InvalidCrystal(format!("line {}: bad number for {key}", lineno + 1))
            })?;
            seen.insert(key.to_string());
            match key {
                "sellmeier_o_A" => spec.sellmeier_o.a = value,
                "sellmeier_o_B" => spec.sellmeier_o.b = value,
                "sellmeier_o_C" => spec.sellmeier_o.c = value,
                "sellmeier_o_D" => spec.sellmeier_o.d = value,
                "sellmeier_e_A" => spec.sellmeier_e.a = value,
                "sellmeier_e_B" => spec.sellmeier_e.b = value,
                "sellmeier_e_C" => spec.sellmeier_e.c = value,
                "sellmeier_e_D" => spec.sellmeier_e.d = value,
                "length_um" => spec.length_um = value,
                "theta_deg" => spec.theta_deg = value,
                other => {
                    return Err(OpticsError::InvalidCrystal(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        if seen.is_empty() {
            return Err(OpticsError::InvalidCrystal("file defines no keys".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn check_band(lambda_um: f64) -> Result<()> {
    let (lo, hi) = LAMBDA_BAND_UM;
    if !(lambda_um >= lo && lambda_um <= hi) {
        return Err(OpticsError::WavelengthOutOfRange { lambda_um });
    }
    Ok(())
}

/// Ordinary refractive index n_o(lambda).
pub fn refractive_index_o(lambda_um: f64, crystal: &CrystalSpec) -> Result<f64> {
    check_band(lambda_um)?;
    Ok(crystal.sellmeier_o.n_squared(lambda_um).sqrt())
}

/// Principal extraordinary index n_e(lambda) (propagation at 90 degrees to
/// the optic axis).
pub fn refractive_index_e_principal(lambda_um: f64, crystal: &CrystalSpec) -> Result<f64> {
    check_band(lambda_um)?;
    Ok(crystal.sellmeier_e.n_squared(lambda_um).sqrt())
}

/// Extraordinary index at propagation angle `theta_deg` from the optic axis:
/// 1/n^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2.
pub fn refractive_index_e_theta(
    lambda_um: f64,
    theta_deg: f64,
    crystal: &CrystalSpec,
) -> Result<f64> {
    check_band(lambda_um)?;
    let t = theta_deg.to_radians();
    let no2 = crystal.sellmeier_o.n_squared(lambda_um);
    let ne2 = crystal.sellmeier_e.n_squared(lambda_um);
    let inv = t.cos().powi(2) / no2 + t.sin().powi(2) / ne2;
    Ok((1.0 / inv).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbo_indices_match_published_dispersion() {
        let c = CrystalSpec::bbo();
        // oracle: published BBO Sellmeier data evaluated independently
        assert!((refractive_index_o(0.355, &c).unwrap() - 1.705).abs() < 0.005);
        assert!((refractive_index_o(0.710, &c).unwrap() - 1.665).abs() < 0.005);
    }

    #[test]
    fn constant_index_case() {
        let mut c = CrystalSpec::bbo();
        c.sellmeier_o = Sellmeier {
            a: 4.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        };
        for lam in [0.3, 0.5, 1.0] {
            assert_eq!(refractive_index_o(lam, &c).unwrap(), 2.0);
        }
    }

    #[test]
    fn out_of_band_wavelength_rejected() {
        let c = CrystalSpec::bbo();
        let err = refractive_index_o(1.5, &c).unwrap_err();
        assert!(err.to_string().contains("[0.3, 1]"), "{err}");
        assert!(refractive_index_o(0.2, &c).is_err());
    }

    #[test]
    fn e_theta_limits() {
        let c = CrystalSpec::bbo();
        for lam in [0.355, 0.710] {
            let no = refractive_index_o(lam, &c).unwrap();
            let ne = refractive_index_e_principal(lam, &c).unwrap();
            // theta -> 0 and 90 recover the principal indices
            assert!((refractive_index_e_theta(lam, 1e-9, &c).unwrap() - no).abs() < 1e-12);
            assert!((refractive_index_e_theta(lam, 90.0 - 1e-9, &c).unwrap() - ne).abs() < 1e-9);
        }
        let mid = refractive_index_e_theta(0.355, 33.0, &c).unwrap();
        let no = refractive_index_o(0.355, &c).unwrap();
        let ne = refractive_index_e_principal(0.355, &c).unwrap();
        assert!(mid < no && mid > ne);
    }

    #[test]
    fn key_value_round_trip_and_unknown_key() {
        let text = "\
# test crystal
sellmeier_o_A = 2.7405
sellmeier_o_B = 0.0184
sellmeier_o_C = 0.0179
sellmeier_o_D = 0.0155
sellmeier_e_A = 2.3730
sellmeier_e_B = 0.0128
sellmeier_e_C = 0.0156
sellmeier_e_D = 0.0044
length_um = 3196.603
theta_deg = 32.929
";
        let spec = CrystalSpec::from_key_value_str(text).unwrap();
        assert_eq!(spec.length_um, 3196.603);
        assert_eq!(spec.theta_deg, 32.929);
        assert_eq!(spec.sellmeier_o, CrystalSpec::bbo().sellmeier_o);

        assert!(CrystalSpec::from_key_value_str("bogus_key = 1.0").is_err());
        assert!(CrystalSpec::from_key_value_str("length_um 3000").is_err());
    }

    #[test]
    fn validate_rejects_nonphysical_dispersion() {
        let mut c = CrystalSpec::bbo();
        c.sellmeier_o.a = 0.5; // n^2 < 1
        assert!(c.validate().is_err());
        let mut c = CrystalSpec::bbo();
        c.length_um = -1.0;
        assert!(c.validate().is_err());
    }
}
