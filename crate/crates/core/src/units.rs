//! Physical constants and unit conversions.
//!
//! Everything inside the crate is SI with angular frequencies: rad/s, s, T.
//! Interfaces (CLI, Python) speak MHz, μs and mT; convert at the boundary
//! with the helpers here.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz * 1e6
}

pub fn angular_to_mhz(w: f64) -> f64 {
    w / (TWO_PI * 1e6)
}

pub fn us_to_s(t_us: f64) -> f64 {
    t_us * 1e-6
}

pub fn s_to_us(t: f64) -> f64 {
    t * 1e6
}

pub fn mt_to_tesla(b_mt: f64) -> f64 {
    b_mt * 1e-3
}

pub fn tesla_to_mt(b: f64) -> f64 {
    b * 1e3
}

/// NV-centre constants used by the signal models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Gyromagnetic ratio, rad/s per tesla.
    pub gamma: f64,
    /// Zero-field splitting, rad/s. Informational only.
    pub zero_field_splitting: f64,
    /// Spacing of the 14N hyperfine triplet, rad/s.
    pub hyperfine_splitting: f64,
    /// Bias field, tesla. Informational only.
    pub bias_field: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gamma: TWO_PI * 28e9,
            zero_field_splitting: TWO_PI * 2.87e9,
            hyperfine_splitting: TWO_PI * 2.16e6,
            bias_field: 96e-4,
        }
    }
}

impl PhysicalConstants {
    pub fn new(gamma: f64, hyperfine_splitting: f64) -> Result<Self> {
        let c = Self {
            gamma,
            hyperfine_splitting,
            ..Self::default()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.hyperfine_splitting.is_finite() && self.hyperfine_splitting > 0.0) {
            return Err(invalid(format!(
                "hyperfine splitting must be positive, got {}",
                self.hyperfine_splitting
            )));
        }
        Ok(())
    }

    /// Detuning γB in rad/s produced by a field in tesla.
    pub fn detuning(&self, b: f64) -> f64 {
        self.gamma * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert!((angular_to_mhz(mhz_to_angular(5.0)) - 5.0).abs() < 1e-12);
        assert!((s_to_us(us_to_s(8.0)) - 8.0).abs() < 1e-12);
        assert!((tesla_to_mt(mt_to_tesla(0.41)) - 0.41).abs() < 1e-12);
    }

    #[test]
    fn constants_validate() {
        assert!(PhysicalConstants::default().validate().is_ok());
        assert!(PhysicalConstants::new(-1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 0.0).is_err());
    }
}
