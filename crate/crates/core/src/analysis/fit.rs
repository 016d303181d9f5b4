use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of a counts-versus-phase scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    /// Phase in radians, or actuator voltage when the scan axis is volts.
    pub phase: f64,
    pub count: f64,
    /// Dwell time of this sample, seconds.
    pub exposure: f64,
}

/// Unit of the phase axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhaseAxis {
    Radians,
    Volts { rad_per_volt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScan {
    pub samples: Vec<ScanSample>,
    pub axis: PhaseAxis,
}

impl PhaseScan {
    pub fn radians(samples: Vec<ScanSample>) -> Self {
        Self {
            samples,
            axis: PhaseAxis::Radians,
        }
    }

    /// Build from evenly spaced counts over one period, unit exposure each.
    pub fn from_counts(counts: &[f64], exposure: f64) -> Self {
        let n = counts.len() as f64;
        Self::radians(
            counts
                .iter()
                .enumerate()
                .map(|(i, &c)| ScanSample {
                    phase: TAU * i as f64 / n,
                    count: c,
                    exposure,
                })
                .collect(),
        )
    }

    fn phases_rad(&self) -> Vec<f64> {
        let k = match self.axis {
            PhaseAxis::Radians => 1.0,
            PhaseAxis::Volts { rad_per_volt } => rad_per_volt,
        };
        self.samples.iter().map(|s| s.phase * k).collect()
    }

    /// CSV with header `phase_rad,count,exposure_s`; volts are converted.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phase_rad,count,exposure_s\n");
        for (p, x) in self.phases_rad().iter().zip(&self.samples) {
            s.push_str(&format!("{p},{},{}\n", x.count, x.exposure));
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("phase_rad,count,exposure_s") => {}
            other => return Err(Error::Input(format!("unexpected scan header {other:?}"))),
        }
        let samples = lines
            .enumerate()
            .map(|(i, l)| {
                let f: Vec<f64> = l
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Input(format!("scan line {}: {e}", i + 2)))?;
                match f.as_slice() {
                    &[phase, count, exposure] => Ok(ScanSample { phase, count, exposure }),
                    _ => Err(Error::Input(format!("scan line {} needs 3 fields", i + 2))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self::radians(samples))
    }
}

/// Result of fitting `rate(θ) = offset + amplitude·cos(θ − phase0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    pub v: f64,
    pub phase0: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub residual_rms: f64,
    /// Set when noise pushed the fringe minimum below zero.
    pub offset_below_amplitude: bool,
}

pub const MIN_SCAN_SAMPLES: usize = 8;

/// Linear least squares on the `(1, cos θ, sin θ)` regressors; counts are
/// divided by their exposure first. Units of amplitude and offset are counts
/// per second of exposure.
pub fn fit_visibility(scan: &PhaseScan) -> Result<VisibilityFit> {
    let n = scan.samples.len();
    if n < MIN_SCAN_SAMPLES {
        return Err(Error::Input(format!(
            "phase scan needs at least {MIN_SCAN_SAMPLES} samples, got {n}"
        )));
    }
    if scan.samples.iter().any(|s| !(s.exposure > 0.0) || !(s.count >= 0.0)) {
        return Err(Error::Input("scan samples need exposure > 0 and count >= 0".into()));
    }
    let phases = scan.phases_rad();
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::Input("non-finite phase in scan".into()));
    }
    let covered = period_coverage(&phases);
    if covered < TAU * (1.0 - 1e-9) {
        return Err(Error::Input(format!(
            "scan spans {covered:.4} rad, less than one period"
        )));
    }

    let rates: Vec<f64> = scan.samples.iter().map(|s| s.count / s.exposure).collect();
    let (beta, residual_rms) = fit_sinusoid(&phases, &rates)?;
    let (offset, c, s) = (beta[0], beta[1], beta[2]);
    let amplitude = c.hypot(s);
    let v = if offset > 0.0 {
        (amplitude / offset).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(VisibilityFit {
        v,
        phase0: s.atan2(c).rem_euclid(TAU),
        amplitude,
        offset,
        residual_rms,
        offset_below_amplitude: amplitude > offset,
    })
}

/// Phase range covered when each distinct sample stands for one step of an
/// evenly stepped scan.
pub(crate) fn period_coverage(phases: &[f64]) -> f64 {
    let mut distinct: Vec<f64> = phases.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 2 {
        return 0.0;
    }
    let span = distinct[distinct.len() - 1] - distinct[0];
    span * distinct.len() as f64 / (distinct.len() - 1) as f64
}

/// Least-squares `(offset, cos, sin)` coefficients and rms residual.
pub(crate) fn fit_sinusoid(phases: &[f64], values: &[f64]) -> Result<(Vector3<f64>, f64)> {
    let n = values.len();
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let rows: Vec<(Vector3<f64>, f64)> = phases
        .iter()
        .zip(values)
        .map(|(&p, &y)| (Vector3::new(1.0, p.cos(), p.sin()), y))
        .collect();
    for (x, y) in &rows {
        ata += x * x.transpose();
        atb += x * *y;
    }
    let residual_of = |beta: &Vector3<f64>| {
        (rows.iter().map(|(x, y)| (y - x.dot(beta)).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let beta = ata.lu().solve(&atb).ok_or_else(|| Error::Fit {
        reason: "singular normal equations".into(),
        residual_rms: residual_of(&Vector3::new(values.iter().sum::<f64>() / n as f64, 0.0, 0.0)),
    })?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Fit {
            reason: "non-finite solution".into(),
            residual_rms: f64::NAN,
        });
    }
    let residual = residual_of(&beta);
    Ok((beta, residual))
}

/// `(I_max − I_min)/(I_max + I_min)`.
pub fn visibility_from_extrema(i_max: f64, i_min: f64) -> Result<f64> {
    if !(i_min >= 0.0) || i_max < i_min {
        return Err(Error::Input(format!(
            "need i_max >= i_min >= 0, got ({i_max}, {i_min})"
        )));
    }
    if i_max == 0.0 {
        return Err(Error::Input("visibility undefined for zero counts".into()));
    }
    Ok((i_max - i_min) / (i_max + i_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    fn synthetic(v: f64, offset: f64, phase0: f64, n: usize) -> PhaseScan {
        let counts: Vec<f64> = (0..n)
            .map(|i| offset * (1.0 + v * (TAU * i as f64 / n as f64 - phase0).cos()))
            .collect();
        PhaseScan::from_counts(&counts, 1.0)
    }

    #[test]
    fn noiseless_recovery() {
        let f = fit_visibility(&synthetic(0.95, 1000.0, 0.7, 32)).unwrap();
        assert!((f.v - 0.95).abs() < 1e-6);
        assert!((f.phase0 - 0.7).abs() < 1e-9);
        assert!((f.offset - 1000.0).abs() < 1e-6);
        assert!(f.residual_rms < 1e-6);
    }

    #[test]
    fn flat_and_perfect() {
        let f = fit_visibility(&PhaseScan::from_counts(&[50.0; 16], 1.0)).unwrap();
        assert!(f.v.abs() < 1e-12 && f.amplitude.abs() < 1e-9);
        let f = fit_visibility(&synthetic(1.0, 200.0, 0.0, 16)).unwrap();
        assert!((f.v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exposure_normalised() {
        // doubling both dwell and counts on half the points changes nothing
        let mut scan = synthetic(0.6, 300.0, 1.0, 20);
        for s in scan.samples.iter_mut().step_by(2) {
            s.count *= 2.0;
            s.exposure *= 2.0;
        }
        let f = fit_visibility(&scan).unwrap();
        assert!((f.v - 0.6).abs() < 1e-9);
    }

    #[test]
    fn volts_axis() {
        let k = 0.5;
        let mut scan = synthetic(0.8, 100.0, 0.0, 16);
        for s in scan.samples.iter_mut() {
            s.phase /= k;
        }
        scan.axis = PhaseAxis::Volts { rad_per_volt: k };
        assert!((fit_visibility(&scan).unwrap().v - 0.8).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_or_partial_scans() {
        assert!(fit_visibility(&PhaseScan::from_counts(&[1.0; 7], 1.0)).is_err());
        let mut half = synthetic(0.5, 10.0, 0.0, 16);
        for s in half.samples.iter_mut() {
            s.phase /= 2.0;
        }
        assert!(matches!(fit_visibility(&half), Err(Error::Input(_))));
        let same = PhaseScan::radians(vec![ScanSample { phase: 1.0, count: 1.0, exposure: 1.0 }; 10]);
        assert!(fit_visibility(&same).is_err());
    }

    #[test]
    fn extrema() {
        assert_eq!(visibility_from_extrema(100.0, 0.0).unwrap(), 1.0);
        assert!((visibility_from_extrema(39.0, 1.0).unwrap() - 0.95).abs() < 1e-15);
        assert_eq!(visibility_from_extrema(50.0, 50.0).unwrap(), 0.0);
        assert!(visibility_from_extrema(0.0, 0.0).is_err());
        assert!(visibility_from_extrema(1.0, 2.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = synthetic(0.5, 10.0, 0.0, 8);
        let back = PhaseScan::parse_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        assert!(PhaseScan::parse_csv("a,b,c\n").is_err());
    }

    #[test]
    fn poisson_recovery_200_trials() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let v = 0.5 + 0.5 * (trial as f64 / 199.0);
            let mean = 2e4;
            let counts: Vec<f64> = (0..24)
                .map(|i| {
                    let lam = mean * (1.0 + v * (TAU * i as f64 / 24.0 - 0.3 * trial as f64).cos());
                    if lam > 0.0 { Poisson::new(lam).unwrap().sample(&mut rng) } else { 0.0 }
                })
                .collect();
            let f = fit_visibility(&PhaseScan::from_counts(&counts, 1.0)).unwrap();
            assert!((f.v - v).abs() <= 0.01, "trial {trial}: {} vs {v}", f.v);
        }
    }
}
