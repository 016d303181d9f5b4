//! Experiment configuration file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::CorrelationMode;
use crate::error::{Error, Result};
use crate::optics::{Port, UmiConfig};
use crate::qkd::QkdConfig;
use crate::scatter::SurfaceConfig;
use crate::sensor::{OpticalChannel, RampTarget, SensorConfig};

/// Inclusive rectangle of pixels, `rows = [first, last]`, `cols = [first, last]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelBlock {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl PixelBlock {
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        (self.rows.0..=self.rows.1)
            .flat_map(|r| (self.cols.0..=self.cols.1).map(move |c| (r, c)))
            .collect()
    }

    fn validate(&self, sensor: &SensorConfig) -> Result<()> {
        let ok = |(a, b): (usize, usize), n: usize| a >= 1 && a <= b && b <= n;
        if !ok(self.rows, sensor.rows) || !ok(self.cols, sensor.cols) {
            return Err(Error::Config(format!("pixel block {self:?} outside the array")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub v_mode: f64,
    pub merge_tolerance_ps: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let c = OpticalChannel::default();
        Self {
            v_mode: c.v_mode,
            merge_tolerance_ps: c.merge_tolerance_ps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub pulse_rate_hz: f64,
    pub pulse_width_sigma_ps: f64,
    pub ss_delay_ps: f64,
    pub port: Port,
    pub gate_half_width_ps: u64,
    pub count_floor: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            pulse_rate_hz: 5e6,
            pulse_width_sigma_ps: 0.0,
            ss_delay_ps: 2000.0,
            port: Port::Monitored,
            gate_half_width_ps: 285,
            count_floor: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseScanConfig {
    pub duration_s: f64,
    pub steps_per_period: usize,
    pub periods: usize,
    pub ramp: RampTarget,
    pub photons_per_pulse: f64,
    pub illuminated: PixelBlock,
    pub histogram_bin_ps: u64,
    pub histogram_span_ps: u64,
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        Self {
            duration_s: 0.8,
            steps_per_period: 32,
            periods: 1,
            ramp: RampTarget::Analyzer,
            photons_per_pulse: 1.0,
            illuminated: PixelBlock { rows: (3, 6), cols: (3, 6) },
            histogram_bin_ps: 10,
            histogram_span_ps: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngleScanConfig {
    pub angles_deg: Vec<f64>,
    pub duration_s: f64,
    pub steps_per_period: usize,
    pub ramp: RampTarget,
    pub photons_per_pulse: f64,
    pub illuminated: PixelBlock,
}

impl Default for AngleScanConfig {
    fn default() -> Self {
        let mut angles_deg = vec![-60.0];
        angles_deg.extend((-9..=9).map(|k| 5.0 * k as f64));
        angles_deg.push(60.0);
        Self {
            angles_deg,
            duration_s: 0.8,
            steps_per_period: 16,
            ramp: RampTarget::Analyzer,
            photons_per_pulse: 1.0,
            illuminated: PixelBlock { rows: (3, 6), cols: (3, 6) },
        }
    }
}

/// Signal and lamp levels of one imaging run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrProfile {
    pub duration_s: f64,
    pub photons_per_pulse: f64,
    /// Lamp rate at the far corner; falls linearly to zero at pixel (1,1).
    pub lamp_max_cps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageConfig {
    pub rotation_phi_deg: f64,
    pub steps_per_period: usize,
    pub periods: usize,
    pub ramp: RampTarget,
    pub relative_threshold: f64,
    pub correlation_mode: CorrelationMode,
    pub calibration_pixel: (usize, usize),
    pub calibration: SnrProfile,
    pub high: SnrProfile,
    pub lamp: SnrProfile,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self {
            rotation_phi_deg: 40.0,
            steps_per_period: 32,
            periods: 4,
            ramp: RampTarget::Converter,
            relative_threshold: crate::analysis::DEFAULT_RELATIVE_THRESHOLD,
            correlation_mode: CorrelationMode::MeanSubtracted,
            calibration_pixel: (4, 4),
            calibration: SnrProfile { duration_s: 0.4, photons_per_pulse: 1.0, lamp_max_cps: 0.0 },
            high: SnrProfile { duration_s: 0.4, photons_per_pulse: 1.0, lamp_max_cps: 0.0 },
            lamp: SnrProfile { duration_s: 2.0, photons_per_pulse: 0.2, lamp_max_cps: 3.7e5 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QkdSection {
    pub n_pulses: u64,
    pub rotation_phi_deg: f64,
    pub mean_photons: f64,
    pub window_half_width_ps: f64,
    pub background_cps_per_port: f64,
    pub min_sifted: u64,
    pub qber_threshold: f64,
}

impl Default for QkdSection {
    fn default() -> Self {
        let p = QkdConfig::default();
        Self {
            n_pulses: 10_000_000,
            rotation_phi_deg: 20.0,
            mean_photons: p.mean_photons,
            window_half_width_ps: p.window_half_width_ps,
            background_cps_per_port: p.background_cps_per_port,
            min_sifted: p.min_sifted,
            qber_threshold: p.qber_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub converter: UmiConfig,
    pub analyzer: UmiConfig,
    pub channel: ChannelConfig,
    pub surface: SurfaceConfig,
    pub sensor: SensorConfig,
    pub acquisition: AcquisitionConfig,
    pub phase_scan: PhaseScanConfig,
    pub angle_scan: AngleScanConfig,
    pub image: ImageConfig,
    pub qkd: QkdSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            converter: UmiConfig::default(),
            analyzer: UmiConfig::default(),
            channel: ChannelConfig::default(),
            surface: SurfaceConfig::default(),
            sensor: SensorConfig::default(),
            acquisition: AcquisitionConfig::default(),
            phase_scan: PhaseScanConfig::default(),
            angle_scan: AngleScanConfig::default(),
            image: ImageConfig::default(),
            qkd: QkdSection::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be > 0, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be >= 0, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn optical_channel(&self) -> OpticalChannel {
        OpticalChannel {
            converter: self.converter,
            analyzer: self.analyzer,
            v_mode: self.channel.v_mode,
            merge_tolerance_ps: self.channel.merge_tolerance_ps,
            surface: self.surface,
        }
    }

    pub fn qkd_protocol(&self) -> QkdConfig {
        QkdConfig {
            mean_photons: self.qkd.mean_photons,
            window_half_width_ps: self.qkd.window_half_width_ps,
            pulse_width_sigma_ps: self.acquisition.pulse_width_sigma_ps,
            background_cps_per_port: self.qkd.background_cps_per_port,
            min_sifted: self.qkd.min_sifted,
            qber_threshold: self.qkd.qber_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optical_channel().validate()?;
        self.sensor.validate()?;
        self.qkd_protocol().validate()?;

        let a = &self.acquisition;
        positive("acquisition.pulse_rate_hz", a.pulse_rate_hz)?;
        non_negative("acquisition.pulse_width_sigma_ps", a.pulse_width_sigma_ps)?;
        non_negative("acquisition.ss_delay_ps", a.ss_delay_ps)?;
        if a.gate_half_width_ps == 0 {
            return Err(Error::Config("acquisition.gate_half_width_ps must be > 0".into()));
        }

        let p = &self.phase_scan;
        positive("phase_scan.duration_s", p.duration_s)?;
        non_negative("phase_scan.photons_per_pulse", p.photons_per_pulse)?;
        if p.steps_per_period < 8 || p.periods == 0 {
            return Err(Error::Config("phase_scan needs >= 8 steps and >= 1 period".into()));
        }
        p.illuminated.validate(&self.sensor)?;
        if p.histogram_bin_ps == 0 || p.histogram_span_ps < p.histogram_bin_ps {
            return Err(Error::Config("phase_scan histogram bin/span invalid".into()));
        }

        let s = &self.angle_scan;
        positive("angle_scan.duration_s", s.duration_s)?;
        non_negative("angle_scan.photons_per_pulse", s.photons_per_pulse)?;
        if s.steps_per_period < 8 {
            return Err(Error::Config("angle_scan needs >= 8 steps".into()));
        }
        if s.angles_deg.iter().any(|x| !(-90.0..=90.0).contains(x)) {
            return Err(Error::Config("angle_scan angles must lie in [-90, 90]".into()));
        }
        s.illuminated.validate(&self.sensor)?;

        let i = &self.image;
        if !(-90.0..=90.0).contains(&i.rotation_phi_deg) {
            return Err(Error::Config("image.rotation_phi_deg outside [-90, 90]".into()));
        }
        if i.steps_per_period < crate::analysis::MIN_PATTERN_LEN || i.periods == 0 {
            return Err(Error::Config(format!(
                "image needs >= {} steps and >= 1 period",
                crate::analysis::MIN_PATTERN_LEN
            )));
        }
        non_negative("image.relative_threshold", i.relative_threshold)?;
        PixelBlock { rows: (i.calibration_pixel.0, i.calibration_pixel.0), cols: (i.calibration_pixel.1, i.calibration_pixel.1) }
            .validate(&self.sensor)?;
        for (name, prof) in [("calibration", i.calibration), ("high", i.high), ("lamp", i.lamp)] {
            positive(&format!("image.{name}.duration_s"), prof.duration_s)?;
            non_negative(&format!("image.{name}.photons_per_pulse"), prof.photons_per_pulse)?;
            non_negative(&format!("image.{name}.lamp_max_cps"), prof.lamp_max_cps)?;
        }

        if self.qkd.n_pulses == 0 {
            return Err(Error::Config("qkd.n_pulses must be >= 1".into()));
        }
        if !(-90.0..=90.0).contains(&self.qkd.rotation_phi_deg) {
            return Err(Error::Config("qkd.rotation_phi_deg outside [-90, 90]".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// TOML with a comment above each documented key naming where its default
    /// comes from.
    pub fn to_commented_toml(&self) -> String {
        let mut out = String::new();
        let mut section = String::new();
        for line in self.to_toml().lines() {
            let t = line.trim_start();
            if t.starts_with('[') {
                section = t.trim_matches(|c| c == '[' || c == ']').to_string();
            } else if let Some((key, _)) = t.split_once(" = ") {
                if let Some(note) = key_note(&section, key.trim()) {
                    out.push_str("# ");
                    out.push_str(note);
                    out.push('\n');
                }
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

fn key_note(section: &str, key: &str) -> Option<&'static str> {
    Some(match (section, key) {
        ("", "seed") => "design: master RNG seed",
        ("converter" | "analyzer", "path_delay_ps") => "reported: peaks separated by 0.57 ns",
        ("converter" | "analyzer", "splitter_ratio") => "reported: 50/50 beam splitters",
        ("converter" | "analyzer", "long_arm_mm") => "design: 100 mm + glass image shift",
        ("converter" | "analyzer", "short_arm_mm") => "design: nominal arm length",
        ("converter" | "analyzer", "glass_length_mm") => "reported: 118 mm glass in the long arm",
        ("converter" | "analyzer", "glass_index") => "reported: n = 1.4525",
        ("channel", "v_mode") => "reported: visibility about 0.95",
        ("channel", "merge_tolerance_ps") => "design: below half the timing FWHM",
        ("surface", "base_incidence_deg") => "reported: 25 degrees at zero rotation",
        ("surface", "specular_strength") => "design: calibrated lobe height",
        ("surface", "specular_width_deg") => "design: calibrated lobe width",
        ("surface", "diffuse_albedo") => "design: calibrated diffuse floor",
        ("surface", "aperture_factor") => "design: calibrated receiver aperture",
        ("surface", "diffuse_exponent") => "design: collection collapses beyond 45 degrees",
        ("sensor", "rows") | ("sensor", "cols") => "reported: 8x8 array",
        ("sensor", "pitch_um") => "reported: 75 um pitch",
        ("sensor", "active_diameter_um") => "reported: 30 um active area",
        ("sensor", "dark_rate_cps") => "reported: average dark count rate",
        ("sensor", "dead_time_ns") => "reported: dead time",
        ("sensor", "jitter_sigma_ps") => "reported: 120 ps FWHM system timing",
        ("sensor", "efficiency") => "design: detection efficiency",
        ("sensor", "trigger_pixel") => "reported: pixel (1,1) carries the trigger",
        ("sensor", "defective_pixels") => "reported: three high-dark-count pixels",
        ("sensor", "defective_dark_factor") => "design: defective dark-rate multiplier",
        ("acquisition", "pulse_rate_hz") => "reported: 5 MHz pulsed laser",
        ("acquisition", "pulse_width_sigma_ps") => "design: folded into the system jitter",
        ("acquisition", "ss_delay_ps") => "design: trigger to first peak latency",
        ("acquisition", "port") => "reported: one Analyzer output monitored",
        ("acquisition", "gate_half_width_ps") => "design: half the peak spacing",
        ("acquisition", "count_floor") => "design: detectability floor",
        ("phase_scan", "ramp") => "reported: phase ramp on the Analyzer",
        ("phase_scan", "steps_per_period") => "design: one full period",
        ("angle_scan", "angles_deg") => "reported: rotation range up to 45 degrees and beyond",
        ("image", "rotation_phi_deg") => "reported: surface kept at 40 degrees",
        ("image", "relative_threshold") => "design: 30% of reference self-correlation",
        ("image", "correlation_mode") => "design: mean subtraction",
        ("image", "calibration_pixel") => "reported: reference from pixel (4,4)",
        ("qkd", "rotation_phi_deg") => "reported: surface rotated by 20 degrees",
        ("qkd", "window_half_width_ps") => "design: middle-peak window",
        ("qkd", "qber_threshold") => "design: BB84 security bound",
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn load_dump_load_is_identity() {
        let a = ExperimentConfig::default();
        let text = a.to_commented_toml();
        let b = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(ExperimentConfig::from_toml(&b.to_toml()).unwrap(), b);
        assert!(text.contains("# reported: n = 1.4525"));
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = ExperimentConfig::from_toml("seed = 9\n[channel]\nv_mode = 0.8\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.channel.v_mode, 0.8);
        assert_eq!(c.sensor, SensorConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("sed = 1\n"), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("[sensor]\ndark = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[image.lamp]\nduration_s = 1\n").is_err());
    }

    #[test]
    fn ranges_checked() {
        assert!(ExperimentConfig::from_toml("[channel]\nv_mode = 1.5\n").is_err());
        assert!(ExperimentConfig::from_toml("[surface]\nrotation_phi_deg = 120.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[phase_scan]\nduration_s = -1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[phase_scan.illuminated]\nrows = [0, 9]\ncols = [1, 2]\n").is_err());
        assert!(ExperimentConfig::from_toml("[converter]\nglass_index = 0.9\n").is_err());
    }
}
