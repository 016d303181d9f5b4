//! Experiment drivers: one function per figure-style run, plus writers for
//! their output directories.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    angle_scan_summary, correlation_map, differential_visibility, fit_visibility, folded_counts,
    pair_ports, patterns_to_csv, reconstruct_image, scan_from_gated, summary_to_csv,
    AngleAcquisition, AngleSummary, PhaseScan, PixelPattern, ReferencePattern, VisibilityFit,
};
use crate::config::{ExperimentConfig, SnrProfile};
use crate::error::{Error, Result};
use crate::grid::{to_pgm, CountGrid, Mask, PixelGrid};
use crate::optics::Port;
use crate::qkd::{run_session, QkdReport};
use crate::rng::mix_seed;
use crate::sensor::{
    intensity_image, simulate_acquisition, AcquisitionPlan, Background, IlluminationMap,
    OpticalChannel, PhaseProgram, RampTarget,
};
use crate::tagstream::{
    gated_counts, GateWindow, GatedCounts, Histogram, SyncHistogrammer, TagStream,
};

const PHASE_SCAN_STREAM: u64 = 1;
const ANGLE_STREAM: u64 = 2;
const IMAGE_CALIBRATION: u64 = 3;
const IMAGE_OBJECT: u64 = 4;
const QKD_STREAM: u64 = 5;
const DIFFERENTIAL_STREAM: u64 = 6;

fn plan(cfg: &ExperimentConfig, duration_s: f64, program: PhaseProgram) -> AcquisitionPlan {
    let a = &cfg.acquisition;
    AcquisitionPlan {
        pulse_rate_hz: a.pulse_rate_hz,
        pulse_width_sigma_ps: a.pulse_width_sigma_ps,
        ss_delay_ps: a.ss_delay_ps,
        port: a.port,
        ..AcquisitionPlan::new(duration_s, program)
    }
}

/// Trigger-relative delays of the SS, middle and LL peaks.
pub fn peak_delays_ps(cfg: &ExperimentConfig) -> [u64; 3] {
    let d0 = cfg.acquisition.ss_delay_ps;
    let (dc, da) = (cfg.converter.path_delay_ps, cfg.analyzer.path_delay_ps);
    [d0, d0 + (dc + da) / 2.0, d0 + dc + da].map(|d| d.round() as u64)
}

/// Middle-peak post-selection window.
pub fn middle_gate(cfg: &ExperimentConfig) -> Result<GateWindow> {
    GateWindow::centered(peak_delays_ps(cfg)[1], cfg.acquisition.gate_half_width_ps)
}

fn illumination(cfg: &ExperimentConfig, pixels: &[(usize, usize)], photons_per_pulse: f64) -> Result<IlluminationMap> {
    let rate = photons_per_pulse * cfg.acquisition.pulse_rate_hz;
    let s = &cfg.sensor;
    IlluminationMap::new(PixelGrid::from_fn(s.rows, s.cols, |r, c| {
        if pixels.contains(&(r, c)) { rate } else { 0.0 }
    }))
}

fn max_channel(cfg: &ExperimentConfig) -> u16 {
    (cfg.sensor.rows * cfg.sensor.cols) as u16
}

fn usable_pixels(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    let excluded = cfg.sensor.excluded_pixels();
    (1..=cfg.sensor.rows)
        .flat_map(|r| (1..=cfg.sensor.cols).map(move |c| (r, c)))
        .filter(|p| !excluded.contains(p))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PhaseScanResult {
    /// Delay histogram of all photon channels, `histogram_bin_ps` bins.
    pub histogram: Histogram,
    /// Counts within the gate half-width of the SS, middle and LL peaks.
    pub peak_areas: [u64; 3],
    pub illuminated: Vec<(usize, usize)>,
    /// Middle-peak scans of every usable pixel.
    pub scans: Vec<((usize, usize), PhaseScan)>,
    /// Fits of usable pixels above the count floor.
    pub fits: PixelGrid<Option<VisibilityFit>>,
    pub pulses: u64,
    pub stream: TagStream,
}

impl PhaseScanResult {
    /// Set when an illuminated usable pixel could not be fitted.
    pub fn insufficient(&self, cfg: &ExperimentConfig) -> bool {
        let usable = usable_pixels(cfg);
        self.illuminated
            .iter()
            .filter(|p| usable.contains(p))
            .any(|&(r, c)| self.fits.get(r, c).is_none())
    }
}

pub fn run_phase_scan(cfg: &ExperimentConfig) -> Result<PhaseScanResult> {
    cfg.validate()?;
    let p = &cfg.phase_scan;
    let program = PhaseProgram::ramp(p.duration_s, p.steps_per_period, p.periods, p.ramp, 0.0);
    let acq = plan(cfg, p.duration_s, program.clone());
    let illuminated = p.illuminated.pixels();
    let illum = illumination(cfg, &illuminated, p.photons_per_pulse)?;
    let stream = simulate_acquisition(
        &acq,
        &illum,
        &cfg.optical_channel(),
        &cfg.sensor,
        mix_seed(cfg.seed, PHASE_SCAN_STREAM),
    )?;

    let mut fine = SyncHistogrammer::all_channels(1, 0, p.histogram_span_ps)?;
    let mut coarse = SyncHistogrammer::all_channels(p.histogram_bin_ps, 0, p.histogram_span_ps)?;
    for r in stream.iter() {
        fine.push(r)?;
        coarse.push(r)?;
    }
    let (fine, _) = fine.finish();
    let (histogram, _) = coarse.finish();
    let hw = cfg.acquisition.gate_half_width_ps;
    let peak_areas = peak_delays_ps(cfg).map(|c| fine.sum_between(c.saturating_sub(hw), c + hw + 1));

    let gated = gated_counts(stream.iter(), middle_gate(cfg)?, &program.edges_ps(), max_channel(cfg))?;
    let mut fits = PixelGrid::filled(cfg.sensor.rows, cfg.sensor.cols, None);
    let mut scans = Vec::new();
    for (r, c) in usable_pixels(cfg) {
        let scan = scan_from_gated(&gated, &[cfg.sensor.channel(r, c)], &program, p.ramp);
        let total: f64 = scan.samples.iter().map(|s| s.count).sum();
        if total >= cfg.acquisition.count_floor as f64 {
            fits.set(r, c, fit_visibility(&scan).ok());
        }
        scans.push(((r, c), scan));
    }
    Ok(PhaseScanResult {
        histogram,
        peak_areas,
        illuminated,
        scans,
        fits,
        pulses: acq.pulse_count(),
        stream,
    })
}

/// Seed of one angle, independent of its position in the list.
fn angle_seed(seed: u64, phi_deg: f64) -> u64 {
    mix_seed(mix_seed(seed, ANGLE_STREAM), phi_deg.to_bits())
}

pub fn run_angle_scan(cfg: &ExperimentConfig, angles_deg: &[f64]) -> Result<Vec<AngleSummary>> {
    run_angle_scan_with(cfg, angles_deg, |_| {})
}

/// As [`run_angle_scan`], handing every simulated stream to `inspect`.
pub fn run_angle_scan_with(
    cfg: &ExperimentConfig,
    angles_deg: &[f64],
    mut inspect: impl FnMut(&TagStream),
) -> Result<Vec<AngleSummary>> {
    cfg.validate()?;
    let a = &cfg.angle_scan;
    let program = PhaseProgram::ramp(a.duration_s, a.steps_per_period, 1, a.ramp, 0.0);
    let acq = plan(cfg, a.duration_s, program.clone());
    let pixels = a.illuminated.pixels();
    let illum = illumination(cfg, &pixels, a.photons_per_pulse)?;
    let usable = usable_pixels(cfg);
    let channels: Vec<u16> = pixels
        .iter()
        .filter(|p| usable.contains(p))
        .map(|&(r, c)| cfg.sensor.channel(r, c))
        .collect();
    let gate = middle_gate(cfg)?;
    let mut acqs = Vec::with_capacity(angles_deg.len());
    for &phi in angles_deg {
        let mut channel = cfg.optical_channel();
        channel.surface = channel.surface.at_rotation(phi);
        let stream = simulate_acquisition(&acq, &illum, &channel, &cfg.sensor, angle_seed(cfg.seed, phi))?;
        inspect(&stream);
        let gated = gated_counts(stream.iter(), gate, &program.edges_ps(), max_channel(cfg))?;
        acqs.push(AngleAcquisition {
            phi_deg: phi,
            scan: scan_from_gated(&gated, &channels, &program, a.ramp),
        });
    }
    Ok(angle_scan_summary(&acqs, cfg.acquisition.count_floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrKind {
    High,
    Lamp,
}

impl SnrKind {
    fn profile(self, cfg: &ExperimentConfig) -> SnrProfile {
        match self {
            SnrKind::High => cfg.image.high,
            SnrKind::Lamp => cfg.image.lamp,
        }
    }
}

/// Lamp background rising linearly from zero at pixel (1,1) to `max_cps` at
/// the opposite corner.
pub fn lamp_gradient(cfg: &ExperimentConfig, max_cps: f64) -> PixelGrid<f64> {
    let (rows, cols) = (cfg.sensor.rows, cfg.sensor.cols);
    let span = (rows + cols - 2).max(1) as f64;
    PixelGrid::from_fn(rows, cols, |r, c| max_cps * (r + c - 2) as f64 / span)
}

#[derive(Debug, Clone)]
pub struct ImageResult {
    /// Ungated counts per pixel.
    pub intensity: CountGrid,
    pub reference: ReferencePattern,
    pub patterns: Vec<PixelPattern>,
    pub scores: PixelGrid<f64>,
    pub reference_self_score: f64,
    pub threshold: f64,
    pub reconstruction: Mask,
    pub excluded: Vec<(usize, usize)>,
}

fn signature_program(cfg: &ExperimentConfig, duration_s: f64) -> PhaseProgram {
    let i = &cfg.image;
    PhaseProgram::ramp(duration_s, i.steps_per_period, i.periods, i.ramp, 0.0)
}

fn folded_acquisition(
    cfg: &ExperimentConfig,
    profile: SnrProfile,
    object: &[(usize, usize)],
    seed: u64,
    inspect: &mut impl FnMut(&TagStream),
) -> Result<(TagStream, GatedCounts)> {
    let program = signature_program(cfg, profile.duration_s);
    let mut acq = plan(cfg, profile.duration_s, program.clone());
    if profile.lamp_max_cps > 0.0 {
        acq.background = Background::PerPixel(lamp_gradient(cfg, profile.lamp_max_cps));
    }
    let mut channel = cfg.optical_channel();
    channel.surface = channel.surface.at_rotation(cfg.image.rotation_phi_deg);
    let illum = illumination(cfg, object, profile.photons_per_pulse)?;
    let stream = simulate_acquisition(&acq, &illum, &channel, &cfg.sensor, seed)?;
    inspect(&stream);
    let gated = gated_counts(stream.iter(), middle_gate(cfg)?, &program.edges_ps(), max_channel(cfg))?;
    Ok((stream, gated))
}

/// High-SNR reference pattern from the calibration pixel.
pub fn calibrate_reference(cfg: &ExperimentConfig) -> Result<ReferencePattern> {
    calibrate_reference_with(cfg, &mut |_| {})
}

fn calibrate_reference_with(
    cfg: &ExperimentConfig,
    inspect: &mut impl FnMut(&TagStream),
) -> Result<ReferencePattern> {
    let px = cfg.image.calibration_pixel;
    let seed = mix_seed(cfg.seed, IMAGE_CALIBRATION);
    let (_, gated) = folded_acquisition(cfg, cfg.image.calibration, &[px], seed, inspect)?;
    let counts = folded_counts(&gated, cfg.sensor.channel(px.0, px.1), cfg.image.steps_per_period);
    if counts.iter().all(|&c| c == 0.0) {
        return Err(Error::Insufficient("calibration pixel recorded no middle-peak counts".into()));
    }
    Ok(ReferencePattern::from_counts(&counts))
}

pub fn run_image(cfg: &ExperimentConfig, object: &Mask, snr: SnrKind) -> Result<ImageResult> {
    run_image_with(cfg, object, snr, |_| {})
}

/// As [`run_image`], handing every simulated stream to `inspect`.
pub fn run_image_with(
    cfg: &ExperimentConfig,
    object: &Mask,
    snr: SnrKind,
    mut inspect: impl FnMut(&TagStream),
) -> Result<ImageResult> {
    cfg.validate()?;
    let s = &cfg.sensor;
    if object.rows() != s.rows || object.cols() != s.cols {
        return Err(Error::Input(format!(
            "object mask is {}x{}, array is {}x{}",
            object.rows(),
            object.cols(),
            s.rows,
            s.cols
        )));
    }
    let reference = calibrate_reference_with(cfg, &mut inspect)?;
    let lit: Vec<(usize, usize)> = object.iter().filter(|(_, &on)| on).map(|(p, _)| p).collect();
    let seed = mix_seed(cfg.seed, IMAGE_OBJECT + 16 * snr as u64);
    let (stream, gated) = folded_acquisition(cfg, snr.profile(cfg), &lit, seed, &mut inspect)?;

    let intensity = intensity_image(&stream, (0, u64::MAX), s);
    let excluded = s.excluded_pixels();
    let patterns: Vec<PixelPattern> = usable_pixels(cfg)
        .into_iter()
        .map(|(r, c)| {
            let counts = folded_counts(&gated, s.channel(r, c), cfg.image.steps_per_period);
            PixelPattern::from_counts((r, c), &counts)
        })
        .collect();
    let mode = cfg.image.correlation_mode;
    let reference_self_score = reference.self_score(mode);
    let threshold = cfg.image.relative_threshold * reference_self_score;
    let scores = correlation_map(&patterns, &reference, s.rows, s.cols, mode)?;
    let reconstruction = reconstruct_image(&patterns, &reference, threshold, &excluded, s.rows, s.cols, mode)?;
    Ok(ImageResult {
        intensity,
        reference,
        patterns,
        scores,
        reference_self_score,
        threshold,
        reconstruction,
        excluded,
    })
}

/// Fraction of non-excluded pixels where `predicted` differs from `truth`.
pub fn misclassification(predicted: &Mask, truth: &Mask, excluded: &[(usize, usize)]) -> f64 {
    let mut n = 0usize;
    let mut wrong = 0usize;
    for ((r, c), &t) in truth.iter() {
        if excluded.contains(&(r, c)) {
            continue;
        }
        n += 1;
        wrong += (*predicted.get(r, c) != t) as usize;
    }
    if n == 0 { 0.0 } else { wrong as f64 / n as f64 }
}

/// Intensity threshold with the fewest errors against the truth, as a
/// best case for plain intensity imaging.
pub fn best_intensity_mask(intensity: &CountGrid, truth: &Mask, excluded: &[(usize, usize)]) -> (u64, Mask, f64) {
    let mut levels: Vec<u64> = intensity.values().to_vec();
    levels.push(0);
    levels.sort_unstable();
    levels.dedup();
    let mut best: Option<(u64, Mask, f64)> = None;
    for t in levels {
        let mask = intensity.map(|&v| v > t);
        let err = misclassification(&mask, truth, excluded);
        if best.as_ref().is_none_or(|b| err < b.2) {
            best = Some((t, mask, err));
        }
    }
    best.expect("at least one level")
}

/// A block-letter object filling about half of an 8×8 array.
pub fn default_object_mask(rows: usize, cols: usize) -> Mask {
    const A: [&str; 8] = [
        "00111100", "01100110", "01100110", "01111110", "01111110", "01100110", "01100110",
        "01100110",
    ];
    PixelGrid::from_fn(rows, cols, |r, c| {
        A.get(r - 1).and_then(|l| l.as_bytes().get(c - 1)) == Some(&b'1')
    })
}

pub fn run_qkd(cfg: &ExperimentConfig, n_pulses: u64) -> Result<QkdReport> {
    cfg.validate()?;
    let mut channel: OpticalChannel = cfg.optical_channel();
    channel.surface = channel.surface.at_rotation(cfg.qkd.rotation_phi_deg);
    let proto = cfg.qkd_protocol();
    let session = run_session(n_pulses, &channel, &cfg.sensor, &proto, mix_seed(cfg.seed, QKD_STREAM))?;
    Ok(QkdReport::new(&session, &channel, &proto))
}

/// Single-pixel two-port run under a lamp, for comparing the differenced
/// fringe with a single-port fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentialScenario {
    pub pixel: (usize, usize),
    pub duration_s: f64,
    pub steps: usize,
    pub photons_per_pulse: f64,
    pub lamp_cps: f64,
    /// Off-peak delay window used to estimate the background, `[lo, hi)`.
    pub background_window_ps: (u64, u64),
}

impl Default for DifferentialScenario {
    fn default() -> Self {
        Self {
            pixel: (4, 4),
            duration_s: 0.2,
            steps: 16,
            photons_per_pulse: 0.025,
            lamp_cps: 1e6,
            background_window_ps: (200, 1700),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DifferentialComparison {
    pub v_single: f64,
    pub v_differential: f64,
    pub background_per_port: f64,
}

pub fn run_differential(
    cfg: &ExperimentConfig,
    scenario: &DifferentialScenario,
    seed: u64,
    mut inspect: impl FnMut(&TagStream),
) -> Result<DifferentialComparison> {
    cfg.validate()?;
    let program = PhaseProgram::ramp(scenario.duration_s, scenario.steps, 1, RampTarget::Analyzer, 0.0);
    let mut acq = plan(cfg, scenario.duration_s, program.clone());
    acq.background = Background::PerPixel(PixelGrid::from_fn(cfg.sensor.rows, cfg.sensor.cols, |r, c| {
        if (r, c) == scenario.pixel { scenario.lamp_cps } else { 0.0 }
    }));
    let illum = illumination(cfg, &[scenario.pixel], scenario.photons_per_pulse)?;
    let ch = cfg.sensor.channel(scenario.pixel.0, scenario.pixel.1);
    let mid = middle_gate(cfg)?;
    let (blo, bhi) = scenario.background_window_ps;
    if bhi <= blo {
        return Err(Error::Input("empty background window".into()));
    }
    let off = GateWindow { lo_ps: blo, hi_ps: bhi - 1 };
    let base = mix_seed(mix_seed(cfg.seed, DIFFERENTIAL_STREAM), seed);

    let mut scans = Vec::new();
    let mut background = 0.0;
    for (k, port) in [Port::Monitored, Port::Complementary].into_iter().enumerate() {
        acq.port = port;
        let stream = simulate_acquisition(&acq, &illum, &cfg.optical_channel(), &cfg.sensor, mix_seed(base, k as u64))?;
        inspect(&stream);
        let edges = program.edges_ps();
        let gated = gated_counts(stream.iter(), mid, &edges, ch)?;
        let bg = gated_counts(stream.iter(), off, &edges, ch)?;
        background += bg.channel_total(ch) as f64 * mid.width_ps() as f64 / off.width_ps() as f64;
        scans.push(scan_from_gated(&gated, &[ch], &program, RampTarget::Analyzer));
    }
    let background_per_port = background / 2.0 / scenario.steps as f64;
    let single = fit_visibility(&scans[0])?;
    let diff = differential_visibility(&pair_ports(&scans[0], &scans[1])?, background_per_port)?;
    Ok(DifferentialComparison {
        v_single: single.v,
        v_differential: diff.v,
        background_per_port,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub figure: String,
    pub seed: u64,
    pub config_sha256: String,
    pub outputs: Vec<String>,
    pub tool_version: String,
}

pub fn config_digest(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    figure: &str,
    cfg: &ExperimentConfig,
    mut outputs: Vec<String>,
) -> Result<()> {
    fs::write(dir.join("config.toml"), cfg.to_commented_toml())?;
    outputs.push("config.toml".into());
    let m = Manifest {
        command: command.into(),
        figure: figure.into(),
        seed: cfg.seed,
        config_sha256: config_digest(cfg),
        outputs,
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    let json = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

fn opt_csv(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("delay_ps,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        s.push_str(&format!("{},{c}\n", h.bin_start(i)));
    }
    s
}

pub fn write_phase_scan(dir: &Path, cfg: &ExperimentConfig, r: &PhaseScanResult) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("histogram.csv"), histogram_csv(&r.histogram))?;

    let mut scans = String::from("row,col,phase_rad,count,exposure_s\n");
    for ((row, col), scan) in &r.scans {
        for line in scan.to_csv().lines().skip(1) {
            scans.push_str(&format!("{row},{col},{line}\n"));
        }
    }
    fs::write(dir.join("scans.csv"), scans)?;

    let mut fits = String::from("row,col,v,phase0,amplitude,offset,residual_rms,offset_below_amplitude\n");
    for ((row, col), f) in r.fits.iter() {
        if let Some(f) = f {
            fits.push_str(&format!(
                "{row},{col},{},{},{},{},{},{}\n",
                f.v, f.phase0, f.amplitude, f.offset, f.residual_rms, f.offset_below_amplitude
            ));
        }
    }
    fs::write(dir.join("fits.csv"), fits)?;

    let vmap = r.fits.map(|f| f.map(|f| f.v));
    let mut grid = String::new();
    for row in 1..=vmap.rows() {
        let cells: Vec<String> = (1..=vmap.cols()).map(|c| opt_csv(*vmap.get(row, c))).collect();
        grid.push_str(&cells.join(","));
        grid.push('\n');
    }
    fs::write(dir.join("visibility_map.csv"), grid)?;
    fs::write(dir.join("visibility_map.pgm"), to_pgm(&vmap.map(|v| v.unwrap_or(0.0)), 255))?;

    let report = serde_json::json!({
        "pulses": r.pulses,
        "records": r.stream.len(),
        "peak_delays_ps": peak_delays_ps(cfg),
        "peak_areas": r.peak_areas,
        "insufficient": r.insufficient(cfg),
    });
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).expect("json") + "\n")?;
    Ok(["histogram.csv", "scans.csv", "fits.csv", "visibility_map.csv", "visibility_map.pgm", "report.json"]
        .map(String::from)
        .to_vec())
}

pub fn write_angle_scan(dir: &Path, rows: &[AngleSummary]) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("angle_scan.csv"), summary_to_csv(rows))?;
    Ok(vec!["angle_scan.csv".into()])
}

pub fn write_image(dir: &Path, object: &Mask, r: &ImageResult) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let max = r.intensity.values().iter().copied().max().unwrap_or(0).max(1) as f64;
    fs::write(dir.join("object_mask.csv"), object.to_bit_csv())?;
    fs::write(dir.join("intensity.csv"), r.intensity.to_csv())?;
    fs::write(dir.join("intensity.pgm"), to_pgm(&r.intensity.map(|&v| v as f64 / max), 255))?;
    fs::write(dir.join("patterns.csv"), patterns_to_csv(&r.patterns, &r.reference))?;
    fs::write(dir.join("scores.csv"), r.scores.map(|s| if s.is_nan() { String::new() } else { s.to_string() }).to_csv())?;
    fs::write(dir.join("reconstruction.csv"), r.reconstruction.to_bit_csv())?;
    fs::write(dir.join("reconstruction.pgm"), to_pgm(&r.reconstruction.map(|&b| b as u8 as f64), 1))?;
    let report = serde_json::json!({
        "threshold": r.threshold,
        "reference_self_score": r.reference_self_score,
        "reconstructed_pixels": r.reconstruction.count(),
        "misclassified_fraction": misclassification(&r.reconstruction, object, &r.excluded),
    });
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).expect("json") + "\n")?;
    Ok([
        "object_mask.csv", "intensity.csv", "intensity.pgm", "patterns.csv", "scores.csv",
        "reconstruction.csv", "reconstruction.pgm", "report.json",
    ]
    .map(String::from)
    .to_vec())
}

pub fn write_qkd(dir: &Path, report: &QkdReport) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("qkd_report.json"), report.to_json() + "\n")?;
    Ok(vec!["qkd_report.json".into()])
}
