use timebin::scatter::collection_efficiency;
use timebin::sensor::simulate_acquisition;
use timebin::tagstream::sync_histogram;
use timebin::{AcquisitionPlan, IlluminationMap, OpticalChannel, PhaseProgram, Port, SensorConfig};

fn dark_run(duration_s: f64, pulse_rate_hz: f64, seed: u64) -> (SensorConfig, AcquisitionPlan, timebin::TagStream) {
    let sensor = SensorConfig::default();
    let mut plan = AcquisitionPlan::new(duration_s, PhaseProgram::constant(duration_s, 0.0, 0.0));
    plan.pulse_rate_hz = pulse_rate_hz;
    let stream = simulate_acquisition(&plan, &IlluminationMap::dark(8, 8), &OpticalChannel::default(), &sensor, seed)
        .unwrap();
    (sensor, plan, stream)
}

#[test]
fn dark_counts_are_poisson() {
    let duration = 10.0;
    let (sensor, _, stream) = dark_run(duration, 1e3, 11);
    let good: Vec<u16> = (1..=8)
        .flat_map(|r| (1..=8).map(move |c| (r, c)))
        .filter(|&(r, c)| !sensor.is_trigger(r, c) && !sensor.is_defective(r, c))
        .map(|(r, c)| sensor.channel(r, c))
        .collect();
    let lam = sensor.dark_rate_cps * duration;
    let counts: Vec<f64> = good.iter().map(|&ch| stream.channel_count(ch) as f64).collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - lam).abs() < 5.0 * (lam / n).sqrt(), "mean {mean} vs {lam}");
    // Poisson: variance equals the mean; sample variance has sd ≈ λ·sqrt(2/(n−1))
    assert!((var - lam).abs() < 5.0 * lam * (2.0 / (n - 1.0)).sqrt(), "var {var} vs {lam}");

    for &(r, c) in &sensor.defective_pixels {
        let k = stream.channel_count(sensor.channel(r, c)) as f64;
        assert!(k > 100.0 * lam, "defective ({r},{c}) only {k}");
    }
    assert_eq!(stream.channel_count(sensor.channel(1, 1)), 0);
}

#[test]
fn dark_histogram_is_flat() {
    let (sensor, plan, stream) = dark_run(10.0, 1e3, 12);
    let period = plan.pulse_period_ps() as u64;
    let bin = period / 50;
    let (r, c) = sensor.defective_pixels[0];
    let (h, _) = sync_histogram(stream.iter(), sensor.channel(r, c), bin, (0, period)).unwrap();
    let mean = h.total() as f64 / h.counts.len() as f64;
    assert!(mean > 1000.0);
    for (i, &k) in h.counts.iter().enumerate() {
        assert!((k as f64 - mean).abs() < 5.0 * mean.sqrt(), "bin {i}: {k} vs {mean}");
    }
}

#[test]
fn signal_rate_matches_click_model() {
    let duration = 10.0;
    let sensor = SensorConfig { dark_rate_cps: 0.0, defective_pixels: vec![], ..SensorConfig::default() };
    let channel = OpticalChannel::default();
    let mut plan = AcquisitionPlan::new(duration, PhaseProgram::constant(duration, 0.0, 0.0));
    plan.pulse_rate_hz = 1e4;
    let mu = 0.5;
    let illum = IlluminationMap::uniform(8, 8, mu * plan.pulse_rate_hz).unwrap();
    let stream = simulate_acquisition(&plan, &illum, &channel, &sensor, 13).unwrap();

    let port: f64 = channel.port_arrivals(0.0, 0.0, Port::Monitored).unwrap().iter().map(|a| a.1).sum();
    let p = mu * collection_efficiency(&channel.surface) * sensor.efficiency * port;
    let pixels = (sensor.pixel_count() - 1) as f64;
    let expected = plan.pulse_count() as f64 * pixels * p;
    let got = stream.iter().filter(|r| !r.is_trigger()).count() as f64;
    let sigma = (plan.pulse_count() as f64 * pixels * p * (1.0 - p)).sqrt();
    assert!((got - expected).abs() < 5.0 * sigma, "{got} vs {expected} ± {sigma}");
}
