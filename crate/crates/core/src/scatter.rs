//! Rotating diffuse scattering surface.
//!
//! Collected fraction is a Gaussian specular lobe centred on the alignment
//! angle plus a diffuse floor. Loss here is phase blind: nothing in this
//! module sees the time-bin phase, which is why visibility survives rotation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    /// Incidence angle at zero rotation, degrees.
    pub base_incidence_deg: f64,
    /// Surface rotation, degrees in `[-90, 90]`. Positive rotation increases
    /// the incidence angle.
    pub rotation_phi_deg: f64,
    pub specular_strength: f64,
    /// Standard deviation of the specular lobe in rotation angle, degrees.
    pub specular_width_deg: f64,
    pub diffuse_albedo: f64,
    /// Fraction of the diffuse lobe intercepted by the receiver aperture.
    pub aperture_factor: f64,
    /// Sharpness of the diffuse lobe; 1 is Lambertian in each direction.
    pub diffuse_exponent: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            base_incidence_deg: 25.0,
            rotation_phi_deg: 0.0,
            specular_strength: 0.9,
            specular_width_deg: 8.0,
            diffuse_albedo: 0.05,
            aperture_factor: 3.0,
            diffuse_exponent: 4.0,
        }
    }
}

impl SurfaceConfig {
    pub fn at_rotation(mut self, phi_deg: f64) -> Self {
        self.rotation_phi_deg = phi_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.rotation_phi_deg) {
            return Err(Error::Config(format!(
                "rotation {}° outside [-90, 90]",
                self.rotation_phi_deg
            )));
        }
        if !(0.0..=1.0).contains(&self.diffuse_albedo) {
            return Err(Error::Config(format!(
                "diffuse albedo {} outside [0, 1]",
                self.diffuse_albedo
            )));
        }
        if !(self.specular_width_deg > 0.0) {
            return Err(Error::Config("specular width must be > 0°".into()));
        }
        if self.specular_strength < 0.0 || self.aperture_factor < 0.0 {
            return Err(Error::Config(
                "specular strength and aperture factor must be >= 0".into(),
            ));
        }
        if !(self.diffuse_exponent > 0.0) {
            return Err(Error::Config("diffuse exponent must be > 0".into()));
        }
        Ok(())
    }
}

/// Incidence angle θ = θ₀ + φ, degrees.
pub fn incidence_angle(cfg: &SurfaceConfig) -> f64 {
    cfg.base_incidence_deg + cfg.rotation_phi_deg
}

/// Viewing angle from the surface normal towards the fixed receiver, degrees.
pub fn viewing_angle(cfg: &SurfaceConfig) -> f64 {
    cfg.base_incidence_deg - cfg.rotation_phi_deg
}

/// Fraction of photons reaching the surface that enter the Analyzer.
pub fn collection_efficiency(cfg: &SurfaceConfig) -> f64 {
    let phi = cfg.rotation_phi_deg;
    let w = cfg.specular_width_deg;
    let specular = cfg.specular_strength * (-phi * phi / (2.0 * w * w)).exp();

    let cos_in = incidence_angle(cfg).to_radians().cos().max(0.0);
    let cos_out = viewing_angle(cfg).to_radians().cos().max(0.0);
    let diffuse = cfg.diffuse_albedo
        * cfg.aperture_factor
        * (cos_in * cos_out).powf(cfg.diffuse_exponent);

    (specular + diffuse).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn incidence_follows_rotation() {
        let c = SurfaceConfig::default();
        assert_eq!(incidence_angle(&c), 25.0);
        assert_eq!(incidence_angle(&c.at_rotation(-25.0)), 0.0);
        assert_eq!(incidence_angle(&c.at_rotation(20.0)), 45.0);
    }

    #[test]
    fn black_surface_collects_nothing() {
        let c = SurfaceConfig {
            specular_strength: 0.0,
            diffuse_albedo: 0.0,
            ..SurfaceConfig::default()
        };
        for phi in [-60.0, 0.0, 33.0] {
            assert_eq!(collection_efficiency(&c.at_rotation(phi)), 0.0);
        }
    }

    #[test]
    fn specular_peak_and_tails() {
        let c = SurfaceConfig::default();
        let e0 = collection_efficiency(&c);
        for phi in [-45.0, -20.0, 5.0, 20.0, 45.0, 60.0] {
            assert!(collection_efficiency(&c.at_rotation(phi)) < e0);
        }
        // at least a decade between the specular peak and the ±45° tails
        for phi in [-45.0, 45.0] {
            assert!(e0 / collection_efficiency(&c.at_rotation(phi)) >= 10.0);
        }
        // beyond ±45° the diffuse floor collapses by well over an order of magnitude
        for phi in [-60.0f64, 60.0] {
            let e60 = collection_efficiency(&c.at_rotation(phi));
            let e45 = collection_efficiency(&c.at_rotation(45.0f64.copysign(phi)));
            assert!(e45 / e60 > 50.0, "{phi}: {e45} / {e60}");
        }
        // symmetric geometry: receiver and source mirror each other
        let a = collection_efficiency(&c.at_rotation(-30.0));
        let b = collection_efficiency(&c.at_rotation(30.0));
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn flat_diffuse_lobe_is_monotone() {
        let c = SurfaceConfig { diffuse_exponent: 1e-9, ..SurfaceConfig::default() };
        let e0 = collection_efficiency(&c);
        for i in 1..60 {
            assert!(collection_efficiency(&c.at_rotation(i as f64)) <= e0);
        }
    }

    #[test]
    fn validation() {
        assert!(SurfaceConfig::default().validate().is_ok());
        assert!(SurfaceConfig::default().at_rotation(95.0).validate().is_err());
        assert!(SurfaceConfig { diffuse_albedo: 1.5, ..SurfaceConfig::default() }.validate().is_err());
        assert!(SurfaceConfig { specular_width_deg: 0.0, ..SurfaceConfig::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn efficiency_in_unit_interval(phi in -90.0..=90.0f64, s in 0.0..5.0f64, a in 0.0..=1.0f64, k in 0.0..10.0f64) {
            let c = SurfaceConfig {
                rotation_phi_deg: phi,
                specular_strength: s,
                diffuse_albedo: a,
                aperture_factor: k,
                ..SurfaceConfig::default()
            };
            let e = collection_efficiency(&c);
            prop_assert!((0.0..=1.0).contains(&e));
        }
    }
}
