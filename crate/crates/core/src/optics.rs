//! Time-bin preparation and four-path propagation through the Converter and
//! Analyzer interferometers.
//!
//! A photon leaving the Analyzer took one of four paths: short-short (SS),
//! short-long (SL), long-short (LS) or long-long (LL). SL and LS arrive in the
//! same time bin and interfere when the two path delays match; SS and LL are
//! which-path distinguishable and never interfere.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce a phase to `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Early/late superposition `|e⟩ + e^{iθ}|l⟩` leaving the Converter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinState {
    /// Relative phase of the late bin, in `[0, 2π)`.
    pub phase_theta_a: f64,
    /// Probability weight of the early bin, in `[0, 1]`.
    pub amplitude_split: f64,
}

impl TimeBinState {
    pub fn new(phase_theta_a: f64, amplitude_split: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude_split) {
            return Err(Error::Config(format!(
                "amplitude split {amplitude_split} outside [0, 1]"
            )));
        }
        Ok(Self {
            phase_theta_a: wrap_phase(phase_theta_a),
            amplitude_split,
        })
    }

    pub fn early_probability(&self) -> f64 {
        self.amplitude_split
    }

    pub fn late_probability(&self) -> f64 {
        1.0 - self.amplitude_split
    }
}

/// One unbalanced Michelson interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UmiConfig {
    /// Long-minus-short arm delay, picoseconds.
    pub path_delay_ps: f64,
    /// Piezo-set phase, radians.
    pub phase: f64,
    /// Fraction of the input routed to the short arm.
    pub splitter_ratio: f64,
    pub long_arm_mm: f64,
    pub short_arm_mm: f64,
    pub glass_length_mm: f64,
    pub glass_index: f64,
}

impl Default for UmiConfig {
    fn default() -> Self {
        Self {
            path_delay_ps: 570.0,
            phase: 0.0,
            splitter_ratio: 0.5,
            long_arm_mm: 136.76,
            short_arm_mm: 100.0,
            glass_length_mm: 118.0,
            glass_index: 1.4525,
        }
    }
}

impl UmiConfig {
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.path_delay_ps > 0.0) || !self.path_delay_ps.is_finite() {
            return Err(Error::Config(format!(
                "path delay must be > 0 ps, got {}",
                self.path_delay_ps
            )));
        }
        if !(self.splitter_ratio > 0.0 && self.splitter_ratio < 1.0) {
            return Err(Error::Config(format!(
                "splitter ratio must lie in (0, 1), got {}",
                self.splitter_ratio
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::Config("interferometer phase is not finite".into()));
        }
        if self.long_arm_mm < 0.0 || self.short_arm_mm < 0.0 || self.glass_length_mm < 0.0 {
            return Err(Error::Config("arm and glass lengths must be >= 0".into()));
        }
        if !(self.glass_index >= 1.0) {
            return Err(Error::Config(format!(
                "glass index must be >= 1, got {}",
                self.glass_index
            )));
        }
        Ok(())
    }
}

/// Intrinsic interference visibility of the channel and alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeOverlap(f64);

impl ModeOverlap {
    pub fn new(v_mode: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v_mode) {
            return Err(Error::Config(format!("mode overlap {v_mode} outside [0, 1]")));
        }
        Ok(Self(v_mode))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Output port of the Analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    /// Constructive for `θ_A = θ_B`; the port imaged onto the detector array.
    Monitored,
    /// Complementary output.
    Complementary,
}

/// Detection probabilities of the three arrival peaks, summed over both
/// Analyzer outputs except for the middle peak, which is split by port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakProbabilities {
    pub p_ss: f64,
    pub p_mid_monitored: f64,
    pub p_mid_other: f64,
    pub p_ll: f64,
}

impl PeakProbabilities {
    pub fn total(&self) -> f64 {
        self.p_ss + self.p_mid_monitored + self.p_mid_other + self.p_ll
    }

    /// `[SS, middle, LL]` probabilities at a single output port. The
    /// recombining splitter sends the non-interfering peaks to either port
    /// with equal weight.
    pub fn at_port(&self, port: Port) -> [f64; 3] {
        let mid = match port {
            Port::Monitored => self.p_mid_monitored,
            Port::Complementary => self.p_mid_other,
        };
        [self.p_ss / 2.0, mid, self.p_ll / 2.0]
    }
}

/// Prepare the time-bin state for a total Converter phase `theta_a`.
pub fn prepare_timebin(theta_a: f64, converter: &UmiConfig) -> TimeBinState {
    TimeBinState {
        phase_theta_a: wrap_phase(theta_a),
        amplitude_split: converter.splitter_ratio,
    }
}

/// Peak probabilities for `state` analysed at phase `analyzer.phase`.
///
/// The middle peak carries `A₁² + A₂² ± 2·A₁·A₂·V·cos(θ_A − θ_B)` split over
/// the two ports, with `A₁² = p(early)·p(long)` and `A₂² = p(late)·p(short)`.
pub fn peak_probabilities(
    state: &TimeBinState,
    analyzer: &UmiConfig,
    overlap: ModeOverlap,
) -> PeakProbabilities {
    let early = state.early_probability();
    let late = state.late_probability();
    let short = analyzer.splitter_ratio;
    let long = 1.0 - short;

    let sl = early * long;
    let ls = late * short;
    let cross = 2.0 * (sl * ls).sqrt() * overlap.value() * (state.phase_theta_a - analyzer.phase).cos();
    let mid = sl + ls;

    PeakProbabilities {
        p_ss: early * short,
        p_mid_monitored: (mid + cross) / 2.0,
        p_mid_other: (mid - cross) / 2.0,
        p_ll: late * long,
    }
}

/// Relative arrival times of the detected peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalOffsets {
    /// Offsets in picoseconds relative to the SS peak, ascending.
    pub offsets_ps: Vec<f64>,
    /// `false` when SL and LS no longer overlap and cannot interfere.
    pub interferes: bool,
}

/// Peak arrival offsets for a Converter/Analyzer pair.
///
/// Within `merge_tolerance_ps` the SL and LS peaks merge into one middle peak
/// at the mean of the two delays.
pub fn arrival_offsets(
    converter: &UmiConfig,
    analyzer: &UmiConfig,
    merge_tolerance_ps: f64,
) -> Result<ArrivalOffsets> {
    converter.validate()?;
    analyzer.validate()?;
    let dc = converter.path_delay_ps;
    let da = analyzer.path_delay_ps;
    if (dc - da).abs() < merge_tolerance_ps {
        Ok(ArrivalOffsets {
            offsets_ps: vec![0.0, (dc + da) / 2.0, dc + da],
            interferes: true,
        })
    } else {
        let (a, b) = if da < dc { (da, dc) } else { (dc, da) };
        Ok(ArrivalOffsets {
            offsets_ps: vec![0.0, a, b, dc + da],
            interferes: false,
        })
    }
}

/// Longitudinal shift of the long-arm mirror image produced by the glass.
pub fn glass_image_displacement(glass_length_mm: f64, glass_index: f64) -> Result<f64> {
    if !(glass_index > 1.0) {
        return Err(Error::Config(format!(
            "glass index must exceed 1, got {glass_index}"
        )));
    }
    Ok(glass_length_mm * (1.0 - 1.0 / glass_index))
}

/// Spatial-domain arm imbalance left after the glass compensation, mm.
/// Zero means the long-arm virtual mirror sits at the short-arm distance.
pub fn virtual_mirror_residual(umi: &UmiConfig) -> Result<f64> {
    let shift = glass_image_displacement(umi.glass_length_mm, umi.glass_index)?;
    Ok((umi.short_arm_mm - (umi.long_arm_mm - shift)).abs())
}
