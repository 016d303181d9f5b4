//! Pattern-correlation imaging.
//!
//! Each pixel's post-selected counts over one phase-signature period form a
//! pattern. Patterns are normalised by their own maximum and correlated with a
//! high-SNR reference; pixels scoring above a threshold form the image. Mean
//! subtraction makes the score blind to any constant offset of the
//! normalised pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Mask, PixelGrid};

pub const MIN_PATTERN_LEN: usize = 16;

/// Default threshold as a fraction of the reference self-correlation.
pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 0.3;

fn normalise(counts: &[f64]) -> Vec<f64> {
    let max = counts.iter().cloned().fold(0.0f64, f64::max);
    if max > 0.0 {
        counts.iter().map(|c| c / max).collect()
    } else {
        vec![0.0; counts.len()]
    }
}

/// Observed response of one pixel, normalised to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelPattern {
    pub pixel: (usize, usize),
    pub values: Vec<f64>,
}

impl PixelPattern {
    pub fn from_counts(pixel: (usize, usize), counts: &[f64]) -> Self {
        Self {
            pixel,
            values: normalise(counts),
        }
    }
}

/// Expected response from a high-SNR calibration, normalised to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePattern {
    pub values: Vec<f64>,
}

impl ReferencePattern {
    pub fn from_counts(counts: &[f64]) -> Self {
        Self {
            values: normalise(counts),
        }
    }

    /// Score of the reference against itself.
    pub fn self_score(&self, mode: CorrelationMode) -> f64 {
        correlate(&self.values, &self.values, mode).expect("equal lengths")
    }

    /// Threshold at a fraction of the self score.
    pub fn relative_threshold(&self, fraction: f64, mode: CorrelationMode) -> f64 {
        fraction * self.self_score(mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMode {
    /// Subtract each pattern's own mean before the dot product.
    #[default]
    MeanSubtracted,
    /// Subtract a fixed 0.5 from both patterns (legacy behaviour).
    FixedShift,
}

fn correlate(obs: &[f64], reference: &[f64], mode: CorrelationMode) -> Result<f64> {
    if obs.len() != reference.len() {
        return Err(Error::Input(format!(
            "pattern length {} differs from reference length {}",
            obs.len(),
            reference.len()
        )));
    }
    let (mo, mr) = match mode {
        CorrelationMode::MeanSubtracted => (mean(obs), mean(reference)),
        CorrelationMode::FixedShift => (0.5, 0.5),
    };
    Ok(obs.iter().zip(reference).map(|(o, r)| (o - mo) * (r - mr)).sum())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `Σ (obs − mean obs)(ref − mean ref)` in the default mode.
pub fn correlate_pattern(
    observed: &PixelPattern,
    reference: &ReferencePattern,
    mode: CorrelationMode,
) -> Result<f64> {
    if reference.values.len() < MIN_PATTERN_LEN {
        return Err(Error::Input(format!(
            "patterns need at least {MIN_PATTERN_LEN} samples, got {}",
            reference.values.len()
        )));
    }
    correlate(&observed.values, &reference.values, mode)
}

/// Correlation score for every pattern, `NaN` where no pattern was given.
pub fn correlation_map(
    patterns: &[PixelPattern],
    reference: &ReferencePattern,
    rows: usize,
    cols: usize,
    mode: CorrelationMode,
) -> Result<PixelGrid<f64>> {
    let mut grid = PixelGrid::filled(rows, cols, f64::NAN);
    for p in patterns {
        grid.set(p.pixel.0, p.pixel.1, correlate_pattern(p, reference, mode)?);
    }
    Ok(grid)
}

/// Binary image of pixels whose score exceeds `threshold`; excluded pixels
/// and pixels without a pattern are 0.
pub fn reconstruct_image(
    patterns: &[PixelPattern],
    reference: &ReferencePattern,
    threshold: f64,
    excluded: &[(usize, usize)],
    rows: usize,
    cols: usize,
    mode: CorrelationMode,
) -> Result<Mask> {
    let scores = correlation_map(patterns, reference, rows, cols, mode)?;
    Ok(PixelGrid::from_fn(rows, cols, |r, c| {
        !excluded.contains(&(r, c)) && *scores.get(r, c) > threshold
    }))
}

/// Patterns and reference serialised as CSV: a header row, then one line per
/// pixel `row,col,v0,v1,...`, with the reference as row 0, col 0.
pub fn patterns_to_csv(patterns: &[PixelPattern], reference: &ReferencePattern) -> String {
    let n = reference.values.len();
    let mut s = String::from("row,col");
    for k in 0..n {
        s.push_str(&format!(",s{k}"));
    }
    s.push('\n');
    let line = |r: usize, c: usize, v: &[f64]| {
        let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        format!("{r},{c},{}\n", vals.join(","))
    };
    s.push_str(&line(0, 0, &reference.values));
    for p in patterns {
        s.push_str(&line(p.pixel.0, p.pixel.1, &p.values));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn reference(n: usize) -> ReferencePattern {
        let c: Vec<f64> = (0..n).map(|i| 1.0 + 0.95 * (TAU * i as f64 / n as f64).cos()).collect();
        ReferencePattern::from_counts(&c)
    }

    fn mode() -> CorrelationMode {
        CorrelationMode::MeanSubtracted
    }

    #[test]
    fn self_correlation_is_maximal() {
        let r = reference(32);
        let obs = PixelPattern { pixel: (1, 1), values: r.values.clone() };
        let m = mean(&r.values);
        let expect: f64 = r.values.iter().map(|v| (v - m).powi(2)).sum();
        assert!((correlate_pattern(&obs, &r, mode()).unwrap() - expect).abs() < 1e-12);
        assert_eq!(r.self_score(mode()), expect);
    }

    #[test]
    fn constant_pattern_scores_zero() {
        let r = reference(32);
        let obs = PixelPattern::from_counts((2, 2), &[7.0; 32]);
        assert!(correlate_pattern(&obs, &r, mode()).unwrap().abs() < 1e-12);
        let zero = PixelPattern::from_counts((2, 2), &[0.0; 32]);
        assert_eq!(correlate_pattern(&zero, &r, mode()).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let r = reference(32);
        let short = PixelPattern { pixel: (1, 1), values: vec![0.0; 31] };
        assert!(correlate_pattern(&short, &r, mode()).is_err());
        let r8 = reference(8);
        let p8 = PixelPattern { pixel: (1, 1), values: r8.values.clone() };
        assert!(correlate_pattern(&p8, &r8, mode()).is_err());
    }

    #[test]
    fn fixed_shift_mode() {
        let r = reference(16);
        let obs = PixelPattern { pixel: (1, 1), values: r.values.clone() };
        let expect: f64 = r.values.iter().map(|v| (v - 0.5).powi(2)).sum();
        assert!((correlate_pattern(&obs, &r, CorrelationMode::FixedShift).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_thresholds_and_excludes() {
        let r = reference(32);
        let noise: Vec<f64> = (0..32).map(|i| ((i * 7919) % 13) as f64).collect();
        let patterns = vec![
            PixelPattern { pixel: (1, 1), values: r.values.clone() },
            PixelPattern { pixel: (1, 2), values: r.values.clone() },
            PixelPattern::from_counts((2, 1), &noise),
            PixelPattern { pixel: (2, 2), values: r.values.clone() },
        ];
        let thr = r.relative_threshold(DEFAULT_RELATIVE_THRESHOLD, mode());
        let m = reconstruct_image(&patterns, &r, thr, &[(1, 1)], 2, 2, mode()).unwrap();
        assert_eq!(m.to_bit_csv(), "0,1\n0,1\n");
    }

    #[test]
    fn all_dark_reconstructs_empty() {
        let r = reference(32);
        let patterns: Vec<_> = (1..=2)
            .flat_map(|row| (1..=2).map(move |col| PixelPattern::from_counts((row, col), &[0.0; 32])))
            .collect();
        let thr = r.relative_threshold(DEFAULT_RELATIVE_THRESHOLD, mode());
        let m = reconstruct_image(&patterns, &r, thr, &[], 2, 2, mode()).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn ranking_invariant_under_exposure_scaling() {
        let r = reference(32);
        let make = |scale: f64| -> Vec<PixelPattern> {
            (0..6)
                .map(|k| {
                    let v = 0.15 * k as f64;
                    let c: Vec<f64> = (0..32)
                        .map(|i| scale * (10.0 + k as f64) * (1.0 + v * (TAU * i as f64 / 32.0).cos()))
                        .collect();
                    PixelPattern::from_counts((1, k + 1), &c)
                })
                .collect()
        };
        let thr = r.relative_threshold(DEFAULT_RELATIVE_THRESHOLD, mode());
        let a = reconstruct_image(&make(1.0), &r, thr, &[], 1, 6, mode()).unwrap();
        let b = reconstruct_image(&make(37.5), &r, thr, &[], 1, 6, mode()).unwrap();
        assert_eq!(a, b);
        assert!(a.count() > 0 && a.count() < 6);
    }

    #[test]
    fn score_degrades_with_background() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Poisson};
        let r = reference(32);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut last = f64::INFINITY;
        for bg in [0.0, 20.0, 80.0, 300.0, 1000.0] {
            let mut total = 0.0;
            for _ in 0..200 {
                let c: Vec<f64> = (0..32)
                    .map(|i| {
                        let lam = 50.0 * (1.0 + 0.95 * (TAU * i as f64 / 32.0).cos()) + bg;
                        Poisson::new(lam).unwrap().sample(&mut rng)
                    })
                    .collect();
                total += correlate_pattern(&PixelPattern::from_counts((1, 1), &c), &r, mode()).unwrap();
            }
            let mean = total / 200.0;
            assert!(mean <= last, "background {bg}: {mean} > {last}");
            last = mean;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn dc_invariance(values in prop::collection::vec(0.0..1.0f64, 32), c in -10.0..10.0f64) {
            let r = reference(32);
            let obs = PixelPattern { pixel: (1, 1), values: values.clone() };
            let shifted = PixelPattern { pixel: (1, 1), values: values.iter().map(|v| v + c).collect() };
            let a = correlate_pattern(&obs, &r, mode()).unwrap();
            let b = correlate_pattern(&shifted, &r, mode()).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
