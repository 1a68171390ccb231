//! Stimulus/response helpers used by component characterization: drive a
//! stage with a sine and read back the tone it produces.

use std::f64::consts::PI;

use crate::error::Result;
use crate::signal::{tone_phasor, Waveform};

/// Record length (samples) and leading samples to discard for a tone at
/// `freq`. The kept part spans an integer number of periods whenever
/// `freq / rate` is rational with a small denominator.
fn tone_record(rate: f64, freq: f64, min_periods: usize, settle: usize) -> (usize, usize) {
    let samples_per_period = rate / freq;
    let periods = min_periods.max((4096.0 / samples_per_period).ceil() as usize);
    let keep = (periods as f64 * samples_per_period).round() as usize;
    (settle + keep, settle)
}

pub fn sine(rate: f64, freq: f64, amplitude: f64, offset: f64, len: usize) -> Result<Waveform> {
    let v: Vec<f64> = (0..len)
        .map(|i| offset + amplitude * (2.0 * PI * freq * i as f64 / rate).sin())
        .collect();
    Waveform::from_real(&v, rate)
}

/// Magnitude of the response tone at each stimulus frequency, per unit of
/// stimulus amplitude. `system` maps the stimulus to a waveform at the same
/// rate; `observe` extracts the real quantity to analyse (e.g. power).
pub fn tone_gains(
    rate: f64,
    freqs: &[f64],
    amplitude: f64,
    offset: f64,
    system: impl Fn(&Waveform) -> Result<Waveform>,
    observe: impl Fn(&Waveform) -> Vec<f64>,
) -> Result<Vec<f64>> {
    freqs
        .iter()
        .map(|&f| {
            let (len, settle) = tone_record(rate, f, 40, 2000);
            let out = system(&sine(rate, f, amplitude, offset, len)?)?;
            let y: Vec<num_complex::Complex64> = observe(&out)[settle..]
                .iter()
                .map(|&v| num_complex::Complex64::new(v, 0.0))
                .collect();
            Ok(tone_phasor(&y, out.rate(), f).norm() / amplitude)
        })
        .collect()
}

/// Gains in dB relative to the first entry.
pub fn relative_db(gains: &[f64]) -> Vec<f64> {
    let g0 = gains.first().copied().unwrap_or(1.0);
    gains.iter().map(|g| 20.0 * (g / g0).log10()).collect()
}

/// First frequency where the response falls to -3 dB, by linear
/// interpolation between sweep points.
pub fn f3db_from_curve(freqs: &[f64], rel_db: &[f64]) -> Option<f64> {
    for i in 1..freqs.len().min(rel_db.len()) {
        let (a, b) = (rel_db[i - 1], rel_db[i]);
        if a > -3.0 && b <= -3.0 {
            let t = (-3.0 - a) / (b - a);
            return Some(freqs[i - 1] + t * (freqs[i] - freqs[i - 1]));
        }
    }
    None
}
