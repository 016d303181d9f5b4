//! Monte-Carlo model of the 8×8 single-photon-detector array.
//!
//! Each pixel is simulated independently from its own random stream: signal
//! clicks drawn pulse by pulse from the interference probabilities, dark and
//! background clicks as homogeneous Poisson processes, then a non-paralysable
//! dead time. The per-pixel sequences are merged into one time-ordered
//! [`TagStream`] with a clean trigger tag for every pulse.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CountGrid, Mask, PixelGrid};
use crate::optics::{self, ModeOverlap, Port, UmiConfig};
use crate::rng::stream_rng;
use crate::scatter::{self, SurfaceConfig};
use crate::tagstream::{pixel_channel, TagRecord, TagStream, MAX_TIMESTAMP, TRIGGER_CHANNEL};

/// Converts a 120 ps FWHM into a Gaussian σ.
pub const FWHM_TO_SIGMA: f64 = 1.0 / 2.354_820_045_030_949;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub rows: usize,
    pub cols: usize,
    pub pitch_um: f64,
    pub active_diameter_um: f64,
    /// Dark count rate of a healthy pixel, counts per second.
    pub dark_rate_cps: f64,
    pub dead_time_ns: f64,
    /// System timing jitter σ, picoseconds.
    pub jitter_sigma_ps: f64,
    /// Photon detection efficiency.
    pub efficiency: f64,
    /// 1-based pixel wired as the trigger input; it produces no photon tags.
    pub trigger_pixel: (usize, usize),
    pub defective_pixels: Vec<(usize, usize)>,
    /// Dark-rate multiplier of the defective pixels.
    pub defective_dark_factor: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            pitch_um: 75.0,
            active_diameter_um: 30.0,
            dark_rate_cps: 35.0,
            dead_time_ns: 150.0,
            jitter_sigma_ps: 120.0 * FWHM_TO_SIGMA,
            efficiency: 0.5,
            trigger_pixel: (1, 1),
            defective_pixels: vec![(1, 2), (2, 2), (5, 8)],
            defective_dark_factor: 1000.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.rows * self.cols > 0xFFFE {
            return Err(Error::Config(format!("bad array size {}x{}", self.rows, self.cols)));
        }
        if !(self.dead_time_ns > 0.0) {
            return Err(Error::Config("dead time must be > 0".into()));
        }
        if !(self.jitter_sigma_ps >= 0.0) {
            return Err(Error::Config("jitter σ must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!("efficiency {} outside [0, 1]", self.efficiency)));
        }
        if !(self.dark_rate_cps >= 0.0) || !(self.defective_dark_factor >= 0.0) {
            return Err(Error::Config("dark rates must be >= 0".into()));
        }
        for &(r, c) in self.defective_pixels.iter().chain([&self.trigger_pixel]) {
            if !(1..=self.rows).contains(&r) || !(1..=self.cols).contains(&c) {
                return Err(Error::Config(format!("pixel ({r},{c}) outside the array")));
            }
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn dead_time_ps(&self) -> u64 {
        (self.dead_time_ns * 1e3).round() as u64
    }

    pub fn channel(&self, row: usize, col: usize) -> u16 {
        pixel_channel(row, col, self.cols)
    }

    pub fn is_defective(&self, row: usize, col: usize) -> bool {
        self.defective_pixels.contains(&(row, col))
    }

    pub fn is_trigger(&self, row: usize, col: usize) -> bool {
        self.trigger_pixel == (row, col)
    }

    /// Trigger plus defective pixels: never used for imaging statistics.
    pub fn excluded_pixels(&self) -> Vec<(usize, usize)> {
        let mut v = vec![self.trigger_pixel];
        v.extend(self.defective_pixels.iter().copied().filter(|p| *p != self.trigger_pixel));
        v
    }

    pub fn dark_rate_of(&self, row: usize, col: usize) -> f64 {
        if self.is_defective(row, col) {
            self.dark_rate_cps * self.defective_dark_factor
        } else {
            self.dark_rate_cps
        }
    }
}

/// Mean photon rate reaching the surface patch imaged onto each pixel,
/// photons per second, before collection and detection losses.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationMap(PixelGrid<f64>);

impl IlluminationMap {
    pub fn new(rates: PixelGrid<f64>) -> Result<Self> {
        if rates.values().iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::Input("illumination rates must be finite and >= 0".into()));
        }
        Ok(Self(rates))
    }

    pub fn dark(rows: usize, cols: usize) -> Self {
        Self(PixelGrid::filled(rows, cols, 0.0))
    }

    pub fn uniform(rows: usize, cols: usize, rate: f64) -> Result<Self> {
        Self::new(PixelGrid::filled(rows, cols, rate))
    }

    /// Object mask times source rate: `rate` on object pixels, else zero.
    pub fn from_mask(mask: &Mask, rate: f64) -> Result<Self> {
        Self::new(mask.map(|&m| if m { rate } else { 0.0 }))
    }

    pub fn rate(&self, row: usize, col: usize) -> f64 {
        *self.0.get(row, col)
    }

    pub fn grid(&self) -> &PixelGrid<f64> {
        &self.0
    }
}

/// Phases held over `[start_s, end_s)` of the acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSegment {
    pub start_s: f64,
    pub end_s: f64,
    /// Programmed Converter phase, added to the Converter's static phase.
    pub theta_a: f64,
    /// Programmed Analyzer phase, added to the Analyzer's static phase.
    pub theta_b: f64,
}

/// Which interferometer a phase ramp drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampTarget {
    Converter,
    Analyzer,
}

/// Piecewise-constant phase program covering the whole acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProgram {
    segments: Vec<PhaseSegment>,
}

impl PhaseProgram {
    pub fn new(segments: Vec<PhaseSegment>) -> Self {
        Self { segments }
    }

    pub fn constant(duration_s: f64, theta_a: f64, theta_b: f64) -> Self {
        Self::new(vec![PhaseSegment {
            start_s: 0.0,
            end_s: duration_s,
            theta_a,
            theta_b,
        }])
    }

    /// Staircase ramp of `steps_per_period` equal steps per 2π, repeated
    /// `periods` times over `duration_s`. `other` is the fixed phase of the
    /// interferometer not being ramped.
    pub fn ramp(
        duration_s: f64,
        steps_per_period: usize,
        periods: usize,
        target: RampTarget,
        other: f64,
    ) -> Self {
        let n = steps_per_period * periods;
        let segments = (0..n)
            .map(|i| {
                let phase = std::f64::consts::TAU * (i % steps_per_period) as f64
                    / steps_per_period as f64;
                let (theta_a, theta_b) = match target {
                    RampTarget::Converter => (phase, other),
                    RampTarget::Analyzer => (other, phase),
                };
                PhaseSegment {
                    start_s: duration_s * i as f64 / n as f64,
                    end_s: if i + 1 == n { duration_s } else { duration_s * (i + 1) as f64 / n as f64 },
                    theta_a,
                    theta_b,
                }
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[PhaseSegment] {
        &self.segments
    }

    /// Segment boundaries in picoseconds.
    pub fn edges_ps(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.segments.iter().map(|s| secs_to_ps(s.start_s)).collect();
        if let Some(last) = self.segments.last() {
            v.push(secs_to_ps(last.end_s));
        }
        v
    }

    fn validate(&self, duration_s: f64) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::Input("phase program is empty".into()))?;
        let tol = 1e-12 * duration_s.max(1.0);
        if first.start_s.abs() > tol {
            return Err(Error::Input(format!("phase program starts at {} s, not 0", first.start_s)));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.end_s > s.start_s) {
                return Err(Error::Input(format!("phase segment {i} is empty or reversed")));
            }
            if !s.theta_a.is_finite() || !s.theta_b.is_finite() {
                return Err(Error::Input(format!("phase segment {i} has a non-finite phase")));
            }
            if let Some(next) = self.segments.get(i + 1) {
                if (next.start_s - s.end_s).abs() > tol {
                    return Err(Error::Input(format!(
                        "phase program not contiguous between segments {i} and {}",
                        i + 1
                    )));
                }
            }
        }
        let last = self.segments.last().expect("non-empty");
        if (last.end_s - duration_s).abs() > tol {
            return Err(Error::Input(format!(
                "phase program ends at {} s, acquisition at {duration_s} s",
                last.end_s
            )));
        }
        Ok(())
    }
}

/// Ambient background reaching the detector (the lamp), counts per second.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Uniform(f64),
    PerPixel(PixelGrid<f64>),
}

impl Background {
    fn rate(&self, row: usize, col: usize) -> f64 {
        match self {
            Background::Uniform(r) => *r,
            Background::PerPixel(g) => *g.get(row, col),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionPlan {
    pub duration_s: f64,
    pub pulse_rate_hz: f64,
    /// Optical pulse σ added in quadrature to the detector jitter.
    pub pulse_width_sigma_ps: f64,
    pub phase_program: PhaseProgram,
    pub background: Background,
    /// Delay from a trigger to the SS peak.
    pub ss_delay_ps: f64,
    /// Analyzer output imaged onto the array.
    pub port: Port,
}

impl AcquisitionPlan {
    pub fn new(duration_s: f64, phase_program: PhaseProgram) -> Self {
        Self {
            duration_s,
            pulse_rate_hz: 5e6,
            pulse_width_sigma_ps: 0.0,
            phase_program,
            background: Background::Uniform(0.0),
            ss_delay_ps: 2000.0,
            port: Port::Monitored,
        }
    }

    pub fn pulse_period_ps(&self) -> f64 {
        1e12 / self.pulse_rate_hz
    }

    /// Pulses emitted at `k · period` strictly before the end.
    pub fn pulse_count(&self) -> u64 {
        (self.duration_s * self.pulse_rate_hz - 1e-9).ceil().max(0.0) as u64
    }

    pub fn pulse_time_ps(&self, k: u64) -> u64 {
        (k as f64 * self.pulse_period_ps()).round() as u64
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Input(format!("duration must be > 0 s, got {}", self.duration_s)));
        }
        if !(self.pulse_rate_hz > 0.0) {
            return Err(Error::Input("pulse rate must be > 0".into()));
        }
        if !(self.pulse_width_sigma_ps >= 0.0) || !(self.ss_delay_ps >= 0.0) {
            return Err(Error::Input("pulse width and SS delay must be >= 0".into()));
        }
        if secs_to_ps(self.duration_s) + 10 * secs_to_ps(1e-6) > MAX_TIMESTAMP {
            return Err(Error::Input("acquisition exceeds the 48-bit timestamp range".into()));
        }
        let bad_background = match &self.background {
            Background::Uniform(r) => !(*r >= 0.0),
            Background::PerPixel(g) => g.values().iter().any(|r| !(*r >= 0.0)),
        };
        if bad_background {
            return Err(Error::Input("background rates must be >= 0".into()));
        }
        self.phase_program.validate(self.duration_s)
    }
}

/// Optical path from the source to the detector plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalChannel {
    pub converter: UmiConfig,
    pub analyzer: UmiConfig,
    pub v_mode: f64,
    /// Largest delay mismatch for which SL and LS still merge.
    pub merge_tolerance_ps: f64,
    pub surface: SurfaceConfig,
}

impl Default for OpticalChannel {
    fn default() -> Self {
        Self {
            converter: UmiConfig::default(),
            analyzer: UmiConfig::default(),
            v_mode: 0.95,
            merge_tolerance_ps: 50.0,
            surface: SurfaceConfig::default(),
        }
    }
}

impl OpticalChannel {
    pub fn validate(&self) -> Result<()> {
        self.converter.validate()?;
        self.analyzer.validate()?;
        self.surface.validate()?;
        ModeOverlap::new(self.v_mode)?;
        if !(self.merge_tolerance_ps >= 0.0) {
            return Err(Error::Config("merge tolerance must be >= 0".into()));
        }
        Ok(())
    }

    pub fn overlap(&self) -> ModeOverlap {
        ModeOverlap::new(self.v_mode).expect("validated")
    }

    /// Possible arrivals at `port` as `(offset from SS in ps, probability)`,
    /// for programmed phases `theta_a`, `theta_b`.
    pub fn port_arrivals(&self, theta_a: f64, theta_b: f64, port: Port) -> Result<Vec<(f64, f64)>> {
        let offsets = optics::arrival_offsets(&self.converter, &self.analyzer, self.merge_tolerance_ps)?;
        let state = optics::prepare_timebin(self.converter.phase + theta_a, &self.converter);
        let analyzer = self.analyzer.with_phase(self.analyzer.phase + theta_b);
        if offsets.interferes {
            let p = optics::peak_probabilities(&state, &analyzer, self.overlap());
            let [ss, mid, ll] = p.at_port(port);
            let o = &offsets.offsets_ps;
            Ok(vec![(o[0], ss), (o[1], mid), (o[2], ll)])
        } else {
            // distinguishable SL and LS: no interference, each half to a port
            let p = optics::peak_probabilities(&state, &analyzer, ModeOverlap::new(0.0)?);
            let sl = state.early_probability() * (1.0 - analyzer.splitter_ratio) / 2.0;
            let ls = state.late_probability() * analyzer.splitter_ratio / 2.0;
            let (sl_t, ls_t) = (self.analyzer.path_delay_ps, self.converter.path_delay_ps);
            Ok(vec![
                (0.0, p.p_ss / 2.0),
                (sl_t, sl),
                (ls_t, ls),
                (offsets.offsets_ps[3], p.p_ll / 2.0),
            ])
        }
    }
}

pub(crate) fn secs_to_ps(s: f64) -> u64 {
    (s * 1e12).round() as u64
}

/// Run one acquisition and return its time-ordered tag stream.
pub fn simulate_acquisition(
    plan: &AcquisitionPlan,
    illumination: &IlluminationMap,
    channel: &OpticalChannel,
    sensor: &SensorConfig,
    seed: u64,
) -> Result<TagStream> {
    sensor.validate()?;
    channel.validate()?;
    plan.validate()?;
    let grid = illumination.grid();
    if grid.rows() != sensor.rows || grid.cols() != sensor.cols {
        return Err(Error::Input("illumination map does not match the array size".into()));
    }
    if let Background::PerPixel(g) = &plan.background {
        if g.rows() != sensor.rows || g.cols() != sensor.cols {
            return Err(Error::Input("background map does not match the array size".into()));
        }
    }

    let collection = scatter::collection_efficiency(&channel.surface);
    let segments = plan
        .phase_program
        .segments()
        .iter()
        .map(|s| {
            Ok(SegmentModel {
                first_pulse: first_pulse_at(plan, s.start_s),
                end_pulse: first_pulse_at(plan, s.end_s).min(plan.pulse_count()),
                arrivals: channel.port_arrivals(s.theta_a, s.theta_b, plan.port)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let timing_sigma = (sensor.jitter_sigma_ps.powi(2) + plan.pulse_width_sigma_ps.powi(2)).sqrt();
    let pixels: Vec<(usize, usize)> = (1..=sensor.rows)
        .flat_map(|r| (1..=sensor.cols).map(move |c| (r, c)))
        .filter(|&(r, c)| !sensor.is_trigger(r, c))
        .collect();

    let per_pixel: Vec<Vec<TagRecord>> = pixels
        .par_iter()
        .map(|&(row, col)| {
            let ch = sensor.channel(row, col);
            let mut rng = stream_rng(seed, ch as u64);
            let mean_photons = illumination.rate(row, col) / plan.pulse_rate_hz;
            let click = mean_photons.min(1.0) * collection * sensor.efficiency;
            let mut times = signal_clicks(plan, &segments, click, timing_sigma, &mut rng);
            let noise = sensor.dark_rate_of(row, col) + plan.background.rate(row, col);
            poisson_clicks(noise, plan.duration_s, &mut times, &mut rng);
            times.sort_unstable();
            apply_dead_time(&mut times, sensor.dead_time_ps());
            times
                .into_iter()
                .map(|t| TagRecord::new_unchecked(ch, t))
                .collect()
        })
        .collect();

    let n_pulses = plan.pulse_count();
    let total: usize = per_pixel.iter().map(Vec::len).sum::<usize>() + n_pulses as usize;
    let mut records = Vec::with_capacity(total);
    records.extend((0..n_pulses).map(|k| TagRecord::new_unchecked(TRIGGER_CHANNEL, plan.pulse_time_ps(k))));
    for v in per_pixel {
        records.extend(v);
    }
    records.par_sort_unstable();
    let stream = TagStream::from_records(records);

    let (unordered, dead) = stream.invariant_violations(sensor.dead_time_ps());
    if unordered > 0 || dead > 0 {
        return Err(Error::Invariant(format!(
            "{unordered} ordering and {dead} dead-time violations in simulated stream"
        )));
    }
    Ok(stream)
}

struct SegmentModel {
    first_pulse: u64,
    end_pulse: u64,
    arrivals: Vec<(f64, f64)>,
}

fn first_pulse_at(plan: &AcquisitionPlan, t_s: f64) -> u64 {
    (t_s * plan.pulse_rate_hz - 1e-9).ceil().max(0.0) as u64
}

/// Signal clicks at most one per pulse. Within a segment the click
/// probability is constant, so the gaps between clicking pulses are geometric.
fn signal_clicks<R: Rng>(
    plan: &AcquisitionPlan,
    segments: &[SegmentModel],
    click: f64,
    sigma_ps: f64,
    rng: &mut R,
) -> Vec<u64> {
    let mut out = Vec::new();
    if click <= 0.0 {
        return out;
    }
    let jitter = Normal::new(0.0, sigma_ps.max(0.0)).expect("σ >= 0");
    for seg in segments {
        let total: f64 = seg.arrivals.iter().map(|a| a.1).sum();
        let p = (click * total).min(1.0);
        if p <= 0.0 {
            continue;
        }
        let ln_q = (1.0 - p).ln();
        let mut k = seg.first_pulse;
        loop {
            if p < 1.0 {
                let u: f64 = 1.0 - rng.random::<f64>();
                let gap = (u.ln() / ln_q).floor();
                if gap >= (seg.end_pulse - k) as f64 {
                    break;
                }
                k += gap as u64;
            }
            if k >= seg.end_pulse {
                break;
            }
            let mut pick = rng.random::<f64>() * total;
            let mut offset = seg.arrivals[seg.arrivals.len() - 1].0;
            for &(o, w) in &seg.arrivals {
                if pick < w {
                    offset = o;
                    break;
                }
                pick -= w;
            }
            let t = plan.pulse_time_ps(k) as f64 + plan.ss_delay_ps + offset + jitter.sample(rng);
            out.push(t.round().max(0.0) as u64);
            k += 1;
        }
    }
    out
}

fn poisson_clicks<R: Rng>(rate: f64, duration_s: f64, out: &mut Vec<u64>, rng: &mut R) {
    if rate <= 0.0 {
        return;
    }
    let exp = Exp::new(rate).expect("rate > 0");
    let mut t = exp.sample(rng);
    while t < duration_s {
        out.push(secs_to_ps(t));
        t += exp.sample(rng);
    }
}

/// Drop every tag closer than `dead_ps` to the previous kept tag.
pub fn apply_dead_time(sorted: &mut Vec<u64>, dead_ps: u64) {
    let mut last: Option<u64> = None;
    sorted.retain(|&t| match last {
        Some(l) if t < l + dead_ps => false,
        _ => {
            last = Some(t);
            true
        }
    });
}

/// Per-pixel tag counts with trigger timestamps in `[from_ps, to_ps)`.
pub fn intensity_image(stream: &TagStream, interval: (u64, u64), sensor: &SensorConfig) -> CountGrid {
    let mut grid = CountGrid::filled(sensor.rows, sensor.cols, 0);
    let n = sensor.pixel_count() as u16;
    for r in stream.iter() {
        let ch = r.channel();
        if ch == TRIGGER_CHANNEL || ch > n || !(interval.0..interval.1).contains(&r.timestamp()) {
            continue;
        }
        let (row, col) = crate::tagstream::channel_pixel(ch, sensor.cols);
        *grid.get_mut(row, col) += 1;
    }
    grid
}
