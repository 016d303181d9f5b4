//! Two-port difference measurement.
//!
//! With signal `S±(Θ)` at the two Analyzer outputs and an unmodulated
//! background `N` shared equally, `P± = S± + N/2`. The difference
//! `P₊ − P₋ = S₊ − S₋` carries the fringe with the background removed in
//! expectation.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::fit::{fit_sinusoid, period_coverage, PhaseScan, MIN_SCAN_SAMPLES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialMeasurement {
    pub theta: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

/// Pair two scans taken under the same phase program.
pub fn pair_ports(plus: &PhaseScan, minus: &PhaseScan) -> Result<Vec<DifferentialMeasurement>> {
    if plus.samples.len() != minus.samples.len() {
        return Err(Error::Input(format!(
            "port scans have {} and {} samples",
            plus.samples.len(),
            minus.samples.len()
        )));
    }
    if plus.axis != minus.axis {
        return Err(Error::Input("port scans use different phase axes".into()));
    }
    plus.samples
        .iter()
        .zip(&minus.samples)
        .enumerate()
        .map(|(i, (a, b))| {
            if (a.phase - b.phase).abs() > 1e-9 || (a.exposure - b.exposure).abs() > 1e-12 {
                return Err(Error::Input(format!("phase grids differ at sample {i}")));
            }
            Ok(DifferentialMeasurement {
                theta: a.phase,
                p_plus: a.count,
                p_minus: b.count,
            })
        })
        .collect()
}

/// `(Θ, P₊ − P₋)` for every measurement.
pub fn differential_signal(measurements: &[DifferentialMeasurement]) -> Result<Vec<(f64, f64)>> {
    measurements
        .iter()
        .map(|m| {
            if !(m.p_plus >= 0.0 && m.p_minus >= 0.0) {
                return Err(Error::Input(format!("negative counts at Θ = {}", m.theta)));
            }
            Ok((m.theta, m.p_plus - m.p_minus))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialFit {
    pub v: f64,
    pub phase0: f64,
    /// Fringe amplitude of `P₊ − P₋`, counts per sample.
    pub amplitude: f64,
    /// Mean of `P₊ + P₋` with the background removed, counts per sample.
    pub signal: f64,
    pub residual_rms: f64,
}

/// Visibility of the differenced fringe relative to the background-free
/// signal level. `background_per_port` is the expected unmodulated count per
/// sample at each port, usually measured away from the interference peak.
pub fn differential_visibility(
    measurements: &[DifferentialMeasurement],
    background_per_port: f64,
) -> Result<DifferentialFit> {
    if measurements.len() < MIN_SCAN_SAMPLES {
        return Err(Error::Input(format!(
            "differential fit needs at least {MIN_SCAN_SAMPLES} samples, got {}",
            measurements.len()
        )));
    }
    if !(background_per_port >= 0.0) {
        return Err(Error::Input("background estimate must be >= 0".into()));
    }
    let signal = differential_signal(measurements)?;
    let (theta, diff): (Vec<f64>, Vec<f64>) = signal.into_iter().unzip();
    let covered = period_coverage(&theta);
    if covered < TAU * (1.0 - 1e-9) {
        return Err(Error::Input(format!("Θ grid spans {covered:.4} rad, less than one period")));
    }
    let (beta, residual_rms) = fit_sinusoid(&theta, &diff)?;
    let amplitude = beta[1].hypot(beta[2]);
    let total = measurements.iter().map(|m| m.p_plus + m.p_minus).sum::<f64>()
        / measurements.len() as f64;
    let signal = total - 2.0 * background_per_port;
    let v = if signal > 0.0 { (amplitude / signal).clamp(0.0, 1.0) } else { 0.0 };
    Ok(DifferentialFit {
        v,
        phase0: beta[2].atan2(beta[1]).rem_euclid(TAU),
        amplitude,
        signal,
        residual_rms,
    })
}
