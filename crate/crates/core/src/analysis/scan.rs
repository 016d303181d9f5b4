//! Building phase scans from gated counts, and per-angle summaries.

use serde::{Deserialize, Serialize};

use super::fit::{fit_visibility, PhaseScan, ScanSample, VisibilityFit};
use crate::sensor::{PhaseProgram, RampTarget};
use crate::tagstream::GatedCounts;

/// Default detectability floor, gated counts per angle.
pub const DEFAULT_COUNT_FLOOR: u64 = 100;

/// One scan sample per program segment, summing the listed channels.
pub fn scan_from_gated(
    gated: &GatedCounts,
    channels: &[u16],
    program: &PhaseProgram,
    target: RampTarget,
) -> PhaseScan {
    let samples = program
        .segments()
        .iter()
        .zip(&gated.counts)
        .map(|(seg, row)| ScanSample {
            phase: match target {
                RampTarget::Converter => seg.theta_a,
                RampTarget::Analyzer => seg.theta_b,
            },
            count: channels.iter().map(|&c| row[c as usize] as f64).sum(),
            exposure: seg.end_s - seg.start_s,
        })
        .collect();
    PhaseScan::radians(samples)
}

/// Counts of one channel folded onto `steps` phase steps, summing repeated
/// periods.
pub fn folded_counts(gated: &GatedCounts, channel: u16, steps: usize) -> Vec<f64> {
    let mut out = vec![0.0; steps];
    for (i, n) in gated.channel_series(channel).into_iter().enumerate() {
        out[i % steps] += n as f64;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleAcquisition {
    pub phi_deg: f64,
    pub scan: PhaseScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSummary {
    pub phi_deg: f64,
    pub total_counts: f64,
    /// Gated counts per second of exposure.
    pub mean_intensity: f64,
    pub fit: Option<VisibilityFit>,
    pub insufficient: bool,
    /// Fit failure, kept so one bad angle does not abort the scan.
    pub error: Option<String>,
}

/// Fit every angle; angles below `floor` counts are flagged and not fitted.
pub fn angle_scan_summary(acqs: &[AngleAcquisition], floor: u64) -> Vec<AngleSummary> {
    acqs.iter()
        .map(|a| {
            let total: f64 = a.scan.samples.iter().map(|s| s.count).sum();
            let exposure: f64 = a.scan.samples.iter().map(|s| s.exposure).sum();
            let insufficient = total < floor as f64;
            let (fit, error) = if insufficient {
                (None, None)
            } else {
                match fit_visibility(&a.scan) {
                    Ok(f) => (Some(f), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            AngleSummary {
                phi_deg: a.phi_deg,
                total_counts: total,
                mean_intensity: if exposure > 0.0 { total / exposure } else { 0.0 },
                fit,
                insufficient,
                error,
            }
        })
        .collect()
}

/// CSV with header `phi_deg,total_counts,mean_intensity,v,phase0,flag`.
pub fn summary_to_csv(rows: &[AngleSummary]) -> String {
    let mut s = String::from("phi_deg,total_counts,mean_intensity,v,phase0,flag\n");
    for r in rows {
        let (v, p) = r
            .fit
            .map(|f| (f.v.to_string(), f.phase0.to_string()))
            .unwrap_or_default();
        let flag = if r.insufficient {
            "insufficient"
        } else if r.error.is_some() {
            "fit-failed"
        } else {
            "ok"
        };
        s.push_str(&format!(
            "{},{},{},{v},{p},{flag}\n",
            r.phi_deg, r.total_counts, r.mean_intensity
        ));
    }
    s
}
