//! Phase-encoded BB84 over the scattering channel.
//!
//! Alice sets the Converter phase θ_A ∈ {0, π} (basis 0) or {π/2, 3π/2}
//! (basis 1); Bob sets the Analyzer phase θ_B ∈ {0, π/2}. A click in the
//! middle-peak window at the monitored port reads as bit 0, at the
//! complementary port as bit 1.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::Port;
use crate::rng::{mix_seed, stream_rng};
use crate::scatter;
use crate::sensor::{OpticalChannel, SensorConfig};

const BLOCK: u64 = 1 << 16;
const QKD_DOMAIN: u64 = 0x514b_4400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QkdConfig {
    /// Mean photons per pulse entering the channel, clamped to 1 per pulse.
    pub mean_photons: f64,
    /// Half-width of the middle-peak acceptance window.
    pub window_half_width_ps: f64,
    pub pulse_width_sigma_ps: f64,
    /// Unmodulated background at each port, counts per second.
    pub background_cps_per_port: f64,
    /// Sessions with fewer sifted bits are flagged insufficient.
    pub min_sifted: u64,
    /// QBER above which the session is flagged insecure.
    pub qber_threshold: f64,
}

impl Default for QkdConfig {
    fn default() -> Self {
        Self {
            mean_photons: 1.0,
            window_half_width_ps: 285.0,
            pulse_width_sigma_ps: 0.0,
            background_cps_per_port: 0.0,
            min_sifted: 100,
            qber_threshold: 0.11,
        }
    }
}

impl QkdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photons >= 0.0) {
            return Err(Error::Config("mean photons per pulse must be >= 0".into()));
        }
        if !(self.window_half_width_ps > 0.0) {
            return Err(Error::Config("window half-width must be > 0".into()));
        }
        if !(self.pulse_width_sigma_ps >= 0.0) || !(self.background_cps_per_port >= 0.0) {
            return Err(Error::Config("pulse width and background must be >= 0".into()));
        }
        if !(0.0..=0.5).contains(&self.qber_threshold) {
            return Err(Error::Config("QBER threshold outside [0, 0.5]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detection {
    Plus,
    Minus,
    /// Clicks at both ports; carries the randomly assigned bit.
    Multi(u8),
    /// Click outside the middle-peak window only.
    Inconclusive,
    NoClick,
}

impl Detection {
    pub fn bit(self) -> Option<u8> {
        match self {
            Detection::Plus => Some(0),
            Detection::Minus => Some(1),
            Detection::Multi(b) => Some(b),
            _ => None,
        }
    }

    pub fn clicked(self) -> bool {
        !matches!(self, Detection::NoClick)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkdSession {
    pub n_pulses: u64,
    pub seed: u64,
    pub alice_bits: Vec<u8>,
    pub alice_bases: Vec<u8>,
    pub bob_bases: Vec<u8>,
    pub detections: Vec<Detection>,
}

pub fn alice_phase(basis: u8, bit: u8) -> f64 {
    basis as f64 * FRAC_PI_2 + bit as f64 * PI
}

pub fn bob_phase(basis: u8) -> f64 {
    basis as f64 * FRAC_PI_2
}

struct PulseModel {
    /// `arrivals[alice_basis*2 + bit][bob_basis]`: cumulative `(offset, port)`
    /// table over both ports.
    arrivals: [[Vec<(f64, f64, Port)>; 2]; 4],
    click: f64,
    center_ps: f64,
    half_width_ps: f64,
    sigma_ps: f64,
    p_noise: f64,
}

impl PulseModel {
    fn new(channel: &OpticalChannel, sensor: &SensorConfig, cfg: &QkdConfig) -> Result<Self> {
        let mut arrivals: [[Vec<(f64, f64, Port)>; 2]; 4] = Default::default();
        for (ab, row) in arrivals.iter_mut().enumerate() {
            let theta_a = alice_phase((ab / 2) as u8, (ab % 2) as u8);
            for (bb, slot) in row.iter_mut().enumerate() {
                let theta_b = bob_phase(bb as u8);
                let mut acc = 0.0;
                for port in [Port::Monitored, Port::Complementary] {
                    for (o, p) in channel.port_arrivals(theta_a, theta_b, port)? {
                        acc += p;
                        slot.push((acc, o, port));
                    }
                }
            }
        }
        let collection = scatter::collection_efficiency(&channel.surface);
        let dark_total: f64 = (1..=sensor.rows)
            .flat_map(|r| (1..=sensor.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| !sensor.is_trigger(r, c) && !sensor.is_defective(r, c))
            .map(|(r, c)| sensor.dark_rate_of(r, c))
            .sum();
        let window_s = (2.0 * cfg.window_half_width_ps + 1.0) * 1e-12;
        Ok(Self {
            arrivals,
            click: cfg.mean_photons.min(1.0) * collection * sensor.efficiency,
            center_ps: (channel.converter.path_delay_ps + channel.analyzer.path_delay_ps) / 2.0,
            half_width_ps: cfg.window_half_width_ps,
            sigma_ps: (sensor.jitter_sigma_ps.powi(2) + cfg.pulse_width_sigma_ps.powi(2)).sqrt(),
            p_noise: ((cfg.background_cps_per_port + dark_total / 2.0) * window_s).min(1.0),
        })
    }
}

/// Simulate `n_pulses` BB84 rounds. Deterministic in `seed`, independent of
/// the thread count.
pub fn run_session(
    n_pulses: u64,
    channel: &OpticalChannel,
    sensor: &SensorConfig,
    cfg: &QkdConfig,
    seed: u64,
) -> Result<QkdSession> {
    if n_pulses == 0 {
        return Err(Error::Input("a session needs at least one pulse".into()));
    }
    channel.validate()?;
    sensor.validate()?;
    cfg.validate()?;
    let model = PulseModel::new(channel, sensor, cfg)?;
    let jitter = Normal::new(0.0, model.sigma_ps).expect("σ >= 0");
    let base = mix_seed(seed, QKD_DOMAIN);

    let blocks: Vec<Vec<(u8, u8, u8, Detection)>> = (0..n_pulses.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(base, b);
            let len = BLOCK.min(n_pulses - b * BLOCK);
            (0..len)
                .map(|_| {
                    let (ab, bit, bb): (u8, u8, u8) = (
                        rng.random_range(0..2),
                        rng.random_range(0..2),
                        rng.random_range(0..2),
                    );
                    let mut plus = rng.random_bool(model.p_noise);
                    let mut minus = rng.random_bool(model.p_noise);
                    let mut outside = false;
                    if rng.random_bool(model.click) {
                        let table = &model.arrivals[(ab * 2 + bit) as usize][bb as usize];
                        let u = rng.random::<f64>() * table.last().map_or(1.0, |e| e.0);
                        let &(_, offset, port) =
                            table.iter().find(|e| u < e.0).unwrap_or(&table[table.len() - 1]);
                        let t = offset + jitter.sample(&mut rng);
                        if (t - model.center_ps).abs() <= model.half_width_ps {
                            match port {
                                Port::Monitored => plus = true,
                                Port::Complementary => minus = true,
                            }
                        } else {
                            outside = true;
                        }
                    }
                    let det = match (plus, minus) {
                        (true, true) => Detection::Multi(rng.random_range(0..2)),
                        (true, false) => Detection::Plus,
                        (false, true) => Detection::Minus,
                        _ if outside => Detection::Inconclusive,
                        _ => Detection::NoClick,
                    };
                    (ab, bit, bb, det)
                })
                .collect()
        })
        .collect();

    let n = n_pulses as usize;
    let mut s = QkdSession {
        n_pulses,
        seed,
        alice_bits: Vec::with_capacity(n),
        alice_bases: Vec::with_capacity(n),
        bob_bases: Vec::with_capacity(n),
        detections: Vec::with_capacity(n),
    };
    for (ab, bit, bb, det) in blocks.into_iter().flatten() {
        s.alice_bases.push(ab);
        s.alice_bits.push(bit);
        s.bob_bases.push(bb);
        s.detections.push(det);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTally {
    pub sifted: u64,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiftResult {
    #[serde(skip)]
    pub sifted_bits_alice: Vec<u8>,
    #[serde(skip)]
    pub sifted_bits_bob: Vec<u8>,
    pub sifted_count: u64,
    pub errors: u64,
    /// Absent when nothing survived sifting.
    pub qber: Option<f64>,
    pub qber_sigma: Option<f64>,
    pub clicks: u64,
    pub raw_click_rate: f64,
    /// Clicks inside the middle-peak window.
    pub conclusive: u64,
    pub multi: u64,
    /// Conclusive clicks with mismatched bases, and how many read as bit 0.
    pub mismatched: u64,
    pub mismatched_plus: u64,
    pub per_basis: [BasisTally; 2],
}

pub fn sift(session: &QkdSession) -> SiftResult {
    let mut r = SiftResult {
        sifted_bits_alice: Vec::new(),
        sifted_bits_bob: Vec::new(),
        sifted_count: 0,
        errors: 0,
        qber: None,
        qber_sigma: None,
        clicks: 0,
        raw_click_rate: 0.0,
        conclusive: 0,
        multi: 0,
        mismatched: 0,
        mismatched_plus: 0,
        per_basis: Default::default(),
    };
    for i in 0..session.detections.len() {
        let det = session.detections[i];
        if det.clicked() {
            r.clicks += 1;
        }
        let Some(bob_bit) = det.bit() else { continue };
        r.conclusive += 1;
        if matches!(det, Detection::Multi(_)) {
            r.multi += 1;
        }
        let basis = session.alice_bases[i];
        if basis != session.bob_bases[i] {
            r.mismatched += 1;
            r.mismatched_plus += (bob_bit == 0) as u64;
            continue;
        }
        let alice_bit = session.alice_bits[i];
        r.sifted_bits_alice.push(alice_bit);
        r.sifted_bits_bob.push(bob_bit);
        let tally = &mut r.per_basis[basis as usize];
        tally.sifted += 1;
        if alice_bit != bob_bit {
            tally.errors += 1;
            r.errors += 1;
        }
    }
    r.sifted_count = r.sifted_bits_alice.len() as u64;
    r.raw_click_rate = r.clicks as f64 / session.n_pulses as f64;
    if r.sifted_count > 0 {
        let n = r.sifted_count as f64;
        let q = r.errors as f64 / n;
        r.qber = Some(q);
        r.qber_sigma = Some((q * (1.0 - q) / n).sqrt());
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdReport {
    pub n_pulses: u64,
    pub seed: u64,
    pub rotation_phi_deg: f64,
    pub v_mode: f64,
    #[serde(flatten)]
    pub sift: SiftResult,
    /// Sifted bits per pulse.
    pub sifted_rate: f64,
    pub insufficient: bool,
    pub insecure: bool,
}

impl QkdReport {
    pub fn new(session: &QkdSession, channel: &OpticalChannel, cfg: &QkdConfig) -> Self {
        let sift = sift(session);
        let insufficient = sift.sifted_count < cfg.min_sifted;
        let insecure = sift.qber.is_none_or(|q| q > cfg.qber_threshold);
        Self {
            n_pulses: session.n_pulses,
            seed: session.seed,
            rotation_phi_deg: channel.surface.rotation_phi_deg,
            v_mode: channel.v_mode,
            sifted_rate: sift.sifted_count as f64 / session.n_pulses as f64,
            sift,
            insufficient,
            insecure,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// One session per angle, each with the same seed.
pub fn qber_vs_angle(
    angles_deg: &[f64],
    n_pulses: u64,
    channel: &OpticalChannel,
    sensor: &SensorConfig,
    cfg: &QkdConfig,
    seed: u64,
) -> Vec<(f64, Result<QkdReport>)> {
    angles_deg
        .iter()
        .map(|&phi| {
            let ch = OpticalChannel {
                surface: channel.surface.at_rotation(phi),
                ..*channel
            };
            let report = run_session(n_pulses, &ch, sensor, cfg, seed)
                .map(|s| QkdReport::new(&s, &ch, cfg));
            (phi, report)
        })
        .collect()
}

/// CSV with header `phi_deg,sifted,qber,qber_sigma,flag`.
pub fn angle_table_csv(rows: &[(f64, Result<QkdReport>)]) -> String {
    let mut s = String::from("phi_deg,sifted,qber,qber_sigma,flag\n");
    for (phi, r) in rows {
        match r {
            Ok(r) => {
                let flag = if r.insufficient {
                    "insufficient"
                } else if r.insecure {
                    "insecure"
                } else {
                    "ok"
                };
                let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!(
                    "{phi},{},{},{},{flag}\n",
                    r.sift.sifted_count,
                    opt(r.sift.qber),
                    opt(r.sift.qber_sigma)
                ));
            }
            Err(e) => s.push_str(&format!("{phi},,,,error: {}\n", e.to_string().replace(',', ";"))),
        }
    }
    s
}
