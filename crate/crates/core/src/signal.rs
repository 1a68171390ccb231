//! Sampled-signal primitives shared by every stage of the link model:
//! the [`Waveform`] container, bilinear low-pass filters, band-limited
//! resampling, seeded Gaussian noise and dB helpers.
//!
//! Electrical waveforms are real-valued by convention (imaginary parts are
//! zero up to rounding); optical envelopes are complex.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Rate at which all analog stages are simulated (4x the 65 GS/s AWG).
pub const SIM_RATE: f64 = 260e9;

/// Relative tolerance for the "real waveform" check.
const REAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    samples: Vec<Complex64>,
    rate: f64,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid(format!("sample rate must be > 0, got {rate}")));
        }
        if let Some(i) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, rate })
    }

    pub fn from_real(values: &[f64], rate: f64) -> Result<Self> {
        Self::new(
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            rate,
        )
    }

    pub fn zeros(len: usize, rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], rate)
    }

    /// Builds a waveform without validation. Callers guarantee finiteness.
    pub(crate) fn from_parts(samples: Vec<Complex64>, rate: f64) -> Self {
        debug_assert!(rate > 0.0);
        Self { samples, rate }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    /// Mean of |x|^2 over the record.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn mean(&self) -> Complex64 {
        if self.samples.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    pub fn real(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    /// True when max |Im| <= 1e-9 * max |Re|.
    pub fn is_real(&self) -> bool {
        let max_re = self.samples.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
        let max_im = self.samples.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        max_im <= REAL_TOL * max_re || max_im == 0.0
    }

    pub fn ensure_real(&self, what: &str) -> Result<()> {
        if self.is_real() {
            Ok(())
        } else {
            Err(invalid(format!("{what} must be a real-valued waveform")))
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Waveform {
        Waveform::from_parts(self.samples.iter().map(|&z| f(z)).collect(), self.rate)
    }

    pub fn scaled(&self, k: f64) -> Waveform {
        self.map(|z| z * k)
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Waveform> {
        if start + len > self.samples.len() {
            return Err(Error::TruncatedFrame {
                needed: len,
                available: self.samples.len().saturating_sub(start),
            });
        }
        Ok(Waveform::from_parts(
            self.samples[start..start + len].to_vec(),
            self.rate,
        ))
    }
}

/// Scenario seed. Every stochastic stage draws from its own labelled
/// substream, so adding or removing one noise stage never shifts the draws
/// of another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

pub type NoiseStream = ChaCha20Rng;

impl Seed {
    /// Counter-based substream keyed by (seed, label).
    pub fn stream(self, label: &str) -> NoiseStream {
        let mut rng = ChaCha20Rng::seed_from_u64(self.0);
        rng.set_stream(fnv1a(label));
        rng
    }

    /// Child seed for an independent sub-computation (e.g. one sweep point).
    pub fn derive(self, label: &str) -> Seed {
        Seed(splitmix64(self.0 ^ fnv1a(label)))
    }
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `len` Gaussian samples with total variance `sigma^2`. Real noise when
/// `complex` is false, circular complex noise otherwise.
pub fn gaussian_noise(
    len: usize,
    sigma: f64,
    complex: bool,
    rng: &mut NoiseStream,
) -> Vec<Complex64> {
    if complex {
        let s = sigma / 2f64.sqrt();
        (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(s * re, s * im)
            })
            .collect()
    } else {
        (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                Complex64::new(sigma * re, 0.0)
            })
            .collect()
    }
}

/// Adds Gaussian noise of standard deviation `sigma`, real or circular to
/// match the waveform.
pub fn add_noise(w: &Waveform, sigma: f64, rng: &mut NoiseStream) -> Waveform {
    if sigma == 0.0 {
        return w.clone();
    }
    let noise = gaussian_noise(w.len(), sigma, !w.is_real(), rng);
    Waveform::from_parts(
        w.samples.iter().zip(noise).map(|(&x, n)| x + n).collect(),
        w.rate,
    )
}

/// Real Gaussian noise with one-sided PSD `psd` (units^2/Hz) confined to
/// `[0, band]`: white noise over the full Nyquist band with every FFT bin
/// above `band` zeroed. Variance is `psd * band` up to bin granularity.
pub fn bandlimited_noise(
    len: usize,
    rate: f64,
    psd: f64,
    band: f64,
    rng: &mut NoiseStream,
) -> Result<Vec<f64>> {
    if !(psd >= 0.0 && band > 0.0) {
        return Err(invalid("noise PSD must be >= 0 and band > 0"));
    }
    if psd == 0.0 || len == 0 {
        return Ok(vec![0.0; len]);
    }
    let sigma = (psd * rate / 2.0).sqrt();
    let mut spec = gaussian_noise(len, sigma, false, rng);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut spec);
    for (k, z) in spec.iter_mut().enumerate() {
        let f = k.min(len - k) as f64 * rate / len as f64;
        if f > band {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut spec);
    Ok(spec.iter().map(|z| z.re / len as f64).collect())
}

/// Adds white Gaussian noise at `target_snr_db` relative to the record
/// power. `f64::INFINITY` returns the input unchanged.
pub fn add_awgn(w: &Waveform, target_snr_db: f64, seed: Seed) -> Result<Waveform> {
    if target_snr_db == f64::INFINITY {
        return Ok(w.clone());
    }
    if target_snr_db.is_nan() {
        return Err(invalid("target SNR is NaN"));
    }
    let p = w.power();
    if p <= 0.0 {
        return Err(invalid("add_awgn needs a waveform with nonzero power"));
    }
    let sigma = (p / lin(target_snr_db)).sqrt();
    Ok(add_noise(w, sigma, &mut seed.stream("awgn")))
}

/// Cascade of `order` identical bilinear single-pole sections, each prewarped
/// so the whole cascade is -3 dB at `f3db`. Zero initial state; the group
/// delay stays in the signal.
pub fn lowpass(w: &Waveform, f3db: f64, order: usize) -> Result<Waveform> {
    let nyq = w.rate / 2.0;
    if order == 0 {
        return Err(invalid("filter order must be positive"));
    }
    if !(f3db > 0.0 && f3db < nyq) {
        return Err(invalid(format!(
            "corner {f3db:e} Hz must lie in (0, Nyquist = {nyq:e} Hz)"
        )));
    }
    let k = (PI * f3db / w.rate).tan() / (2f64.powf(1.0 / order as f64) - 1.0).sqrt();
    let b0 = k / (1.0 + k);
    let a1 = (k - 1.0) / (1.0 + k);

    let mut out = w.samples.clone();
    for _ in 0..order {
        let mut x_prev = Complex64::new(0.0, 0.0);
        let mut y_prev = Complex64::new(0.0, 0.0);
        for s in out.iter_mut() {
            let x = *s;
            let y = b0 * (x + x_prev) - a1 * y_prev;
            x_prev = x;
            y_prev = y;
            *s = y;
        }
    }
    Ok(Waveform::from_parts(out, w.rate))
}

/// Delays `w` by `samples` (may be fractional or negative) with a linear
/// phase ramp over the record, treated as one period. The Nyquist bin of an
/// even-length record is left unrotated so real input stays real.
pub fn fractional_delay(w: &Waveform, samples: f64) -> Waveform {
    let n = w.samples.len();
    if n == 0 || samples == 0.0 {
        return w.clone();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = w.samples.clone();
    planner.plan_fft_forward(n).process(&mut spec);
    for (k, z) in spec.iter_mut().enumerate() {
        let kk = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        if 2 * k == n {
            continue;
        }
        *z *= Complex64::from_polar(1.0 / n as f64, -2.0 * PI * kk * samples / n as f64);
    }
    if n.is_multiple_of(2) {
        spec[n / 2] /= n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let real = w.is_real();
    Waveform::from_parts(
        spec.into_iter()
            .map(|z| if real { Complex64::new(z.re, 0.0) } else { z })
            .collect(),
        w.rate,
    )
}

/// Band-limited rate conversion. Output length is `floor(len * new/old)`.
///
/// When that length is exact (integer ratio of record lengths) the record is
/// treated as one period and converted in the frequency domain with an ideal
/// brick-wall at the lower Nyquist frequency. Otherwise a Kaiser-windowed
/// sinc interpolator is used.
pub fn resample(w: &Waveform, new_rate: f64) -> Result<Waveform> {
    if !(new_rate.is_finite() && new_rate > 0.0) {
        return Err(invalid(format!("new rate must be > 0, got {new_rate}")));
    }
    if new_rate == w.rate {
        return Ok(w.clone());
    }
    let exact = w.len() as f64 * new_rate / w.rate;
    let n_out = (exact + 1e-9).floor() as usize;
    let samples = if (exact - exact.round()).abs() < 1e-6 {
        resample_fft(&w.samples, n_out)
    } else {
        resample_sinc(&w.samples, w.rate, new_rate, n_out)
    };
    Ok(Waveform::from_parts(samples, new_rate))
}

fn resample_fft(x: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 || m == 0 {
        return vec![Complex64::new(0.0, 0.0); m];
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = x.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);

    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; m];
    let l = n.min(m);
    let half = l.div_ceil(2);
    out[0] = spec[0];
    for k in 1..half {
        out[k] = spec[k];
        out[m - k] = spec[n - k];
    }
    if l.is_multiple_of(2) {
        let nb = l / 2;
        if n < m {
            // Upsampling: split the old Nyquist bin between +/- frequencies.
            out[nb] = spec[nb] * 0.5;
            out[m - nb] += spec[nb] * 0.5;
        } else if n > m {
            // Downsampling: the new Nyquist bin collects both edges.
            out[nb] = spec[nb] + spec[n - nb];
        } else {
            out[nb] = spec[nb];
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|z| *z *= scale);
    out
}

const SINC_ZERO_CROSSINGS: f64 = 48.0;
const SINC_CUTOFF: f64 = 0.47;
const KAISER_BETA: f64 = 9.0;

fn resample_sinc(x: &[Complex64], old: f64, new: f64, n_out: usize) -> Vec<Complex64> {
    let ratio = new / old;
    // Cutoff in cycles per input sample.
    let fc = SINC_CUTOFF * ratio.min(1.0);
    let half_width = SINC_ZERO_CROSSINGS / (2.0 * fc);
    let i0_beta = bessel_i0(KAISER_BETA);
    let n = x.len() as isize;
    (0..n_out)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = ((t - half_width).ceil() as isize).max(0);
            let hi = ((t + half_width).floor() as isize).min(n - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..=hi {
                let d = t - i as f64;
                let u = d / half_width;
                let win = bessel_i0(KAISER_BETA * (1.0 - u * u).max(0.0).sqrt()) / i0_beta;
                acc += x[i as usize] * (2.0 * fc * sinc(2.0 * fc * d) * win);
            }
            acc
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Complex amplitude of the tone at `freq` (lock-in estimate over the whole
/// slice). For a real signal `A cos(2 pi f t + p)` this returns `A e^{ip}`
/// when the slice spans an integer number of periods.
pub fn tone_phasor(samples: &[Complex64], rate: f64, freq: f64) -> Complex64 {
    let n = samples.len();
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let w = -2.0 * PI * freq / rate;
    let acc: Complex64 = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| x.re * Complex64::from_polar(1.0, w * i as f64))
        .sum();
    acc * (2.0 / n as f64)
}

/// 10*log10 of a positive power ratio.
pub fn db(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(10.0 * x.log10())
    } else {
        Err(invalid(format!("db() needs a positive ratio, got {x}")))
    }
}

pub fn lin(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * lin(dbm)
}

pub fn watts_to_dbm(w: f64) -> Result<f64> {
    Ok(db(w)? + 30.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, rate: f64, n: usize, amp: f64) -> Waveform {
        let v: Vec<f64> = (0..n)
            .map(|i| amp * (2.0 * PI * f * i as f64 / rate).cos())
            .collect();
        Waveform::from_real(&v, rate).unwrap()
    }

    /// Independent oracle: analytic magnitude of an `order`-pole cascade
    /// evaluated on the warped frequency axis of the bilinear transform.
    fn cascade_mag_db(f: f64, f3db: f64, order: usize, rate: f64) -> f64 {
        let warp = |x: f64| (PI * x / rate).tan();
        let corner = warp(f3db) / (2f64.powf(1.0 / order as f64) - 1.0).sqrt();
        -10.0 * order as f64 * (1.0 + (warp(f) / corner).powi(2)).log10()
    }

    fn steady_amp(w: &Waveform, f: f64, skip: usize) -> f64 {
        let tail = &w.samples()[skip..];
        tone_phasor(tail, w.rate(), f).norm()
    }

    #[test]
    fn rejects_bad_waveforms() {
        assert!(Waveform::from_real(&[1.0], 0.0).is_err());
        assert!(Waveform::from_real(&[f64::NAN], 1.0).is_err());
        assert!(Waveform::from_real(&[f64::INFINITY], 1.0).is_err());
    }

    #[test]
    fn lowpass_dc_gain_is_unity() {
        for order in 1..=4 {
            let w = Waveform::from_real(&vec![1.0; 20_000], SIM_RATE).unwrap();
            let y = lowpass(&w, 15e9, order).unwrap();
            for z in &y.samples()[1000..] {
                assert!((z.re - 1.0).abs() < 1e-6, "order {order}: {}", z.re);
            }
        }
    }

    #[test]
    fn lowpass_minus_3db_at_corner() {
        // 2600 samples = integer number of periods for 15 GHz at 260 GS/s
        let f = 15e9;
        for order in [1, 2, 3] {
            let w = tone(f, SIM_RATE, 2600 * 4, 1.0);
            let y = lowpass(&w, f, order).unwrap();
            let a = steady_amp(&y, f, 2600);
            assert!(
                (a - 10f64.powf(-3.0 / 20.0)).abs() < 0.03,
                "order {order}: {a}"
            );
            let oracle = cascade_mag_db(f, f, order, SIM_RATE);
            assert!((20.0 * a.log10() - oracle).abs() < 0.01);
        }
    }

    #[test]
    fn lowpass_first_order_rolloff() {
        let rate = SIM_RATE;
        let w = tone(10e9, rate, 26_000, 1.0);
        let y = lowpass(&w, 1e9, 1).unwrap();
        let att = -20.0 * steady_amp(&y, 10e9, 5200).log10();
        let oracle = -cascade_mag_db(10e9, 1e9, 1, rate);
        assert!((att - 20.0).abs() < 1.0, "{att}");
        assert!((att - oracle).abs() < 0.01, "{att} vs {oracle}");
    }

    #[test]
    fn lowpass_rejects_corner_above_nyquist() {
        let w = Waveform::from_real(&[0.0; 8], 100.0).unwrap();
        assert!(lowpass(&w, 50.0, 1).is_err());
        assert!(lowpass(&w, 10.0, 0).is_err());
    }

    #[test]
    fn resample_identity() {
        let w = tone(1e9, 65e9, 650, 1.0);
        assert_eq!(resample(&w, 65e9).unwrap(), w);
    }

    #[test]
    fn resample_preserves_in_band_tone() {
        let w = tone(1e9, 65e9, 6500, 1.0);
        let up = resample(&w, 260e9).unwrap();
        assert_eq!(up.len(), 26_000);
        let a = steady_amp(&up, 1e9, 0);
        assert!((20.0 * a.log10()).abs() < 0.1, "{a}");
        assert!(up.is_real());
    }

    #[test]
    fn resample_length_rounds_down() {
        let w = Waveform::from_real(&vec![0.0; 1001], 80e9).unwrap();
        assert_eq!(resample(&w, 65e9).unwrap().len(), 813);
    }

    /// Power of the output that is not explained by a tone at `f`.
    fn residual_db(w: &Waveform, f: f64, amp_ref: f64) -> f64 {
        let p = tone_phasor(w.samples(), w.rate(), f);
        let fit: Vec<f64> = (0..w.len())
            .map(|i| (p * Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / w.rate())).re)
            .collect();
        let err: f64 = w
            .samples()
            .iter()
            .zip(&fit)
            .map(|(z, y)| (z.re - y).powi(2))
            .sum::<f64>()
            / w.len() as f64;
        10.0 * (err / (amp_ref * amp_ref / 2.0)).log10()
    }

    #[test]
    fn resample_anti_alias_fft_path() {
        // 30 GHz stays below the new Nyquist frequency and survives; 40 GHz
        // lies above it and must not alias back in-band.
        let keep = resample(&tone(30e9, 260e9, 26_000, 1.0), 65e9).unwrap();
        let a = tone_phasor(keep.samples(), 65e9, 30e9).norm();
        assert!((20.0 * a.log10()).abs() < 0.1);
        let drop = resample(&tone(40e9, 260e9, 26_000, 1.0), 65e9).unwrap();
        assert!(drop.power() < lin(-40.0) * 0.5, "{}", drop.power());
    }

    #[test]
    fn resample_anti_alias_sinc_path() {
        // 26_001 samples: length ratio is not integral, forces the sinc path
        let drop = resample(&tone(40e9, 260e9, 26_001, 1.0), 65e9).unwrap();
        let inner = drop.slice(200, drop.len() - 400).unwrap();
        let alias = tone_phasor(inner.samples(), 65e9, 25e9).norm();
        assert!(
            20.0 * alias.log10() < -40.0,
            "alias at {}",
            20.0 * alias.log10()
        );
        let keep = resample(&tone(1e9, 65e9, 6501, 1.0), 260e9).unwrap();
        let inner = keep.slice(2000, 20_000).unwrap();
        assert!(residual_db(&inner, 1e9, 1.0) < -40.0);
        let a = tone_phasor(inner.samples(), 260e9, 1e9).norm();
        assert!((20.0 * a.log10()).abs() < 0.1);
    }

    #[test]
    fn resample_round_trip_band_limited() {
        let rate = 65e9;
        let v: Vec<f64> = (0..6500)
            .map(|i| {
                let t = i as f64 / rate;
                (2.0 * PI * 3e9 * t).sin() + 0.5 * (2.0 * PI * 11e9 * t + 0.3).cos()
            })
            .collect();
        let w = Waveform::from_real(&v, rate).unwrap();
        let back = resample(&resample(&w, 4.0 * rate).unwrap(), rate).unwrap();
        let err: f64 = back
            .samples()
            .iter()
            .zip(w.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
        let sig: f64 = w.samples().iter().map(|z| z.norm_sqr()).sum();
        assert!(10.0 * (err / sig).log10() < -40.0);
    }

    #[test]
    fn awgn_infinite_snr_is_noop() {
        let w = tone(1e9, 65e9, 1000, 1.0);
        assert_eq!(add_awgn(&w, f64::INFINITY, Seed(1)).unwrap(), w);
    }

    #[test]
    fn awgn_realized_snr() {
        let w = tone(1e9, 65e9, 100_000, 1.0);
        let y = add_awgn(&w, 20.0, Seed(7)).unwrap();
        assert!(y.is_real());
        let noise: f64 = y
            .samples()
            .iter()
            .zip(w.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / w.len() as f64;
        let snr = 10.0 * (w.power() / noise).log10();
        assert!((snr - 20.0).abs() < 0.2, "{snr}");
    }

    #[test]
    fn awgn_complex_is_circular() {
        let w = Waveform::new(vec![Complex64::new(1.0, 1.0); 100_000], 1e9).unwrap();
        let y = add_awgn(&w, 10.0, Seed(3)).unwrap();
        let (mut pr, mut pi) = (0.0, 0.0);
        for (a, b) in y.samples().iter().zip(w.samples()) {
            pr += (a.re - b.re).powi(2);
            pi += (a.im - b.im).powi(2);
        }
        assert!((pr / pi - 1.0).abs() < 0.03);
    }

    #[test]
    fn awgn_deterministic_per_seed() {
        let w = tone(1e9, 65e9, 1000, 1.0);
        let a = add_awgn(&w, 5.0, Seed(99)).unwrap();
        let b = add_awgn(&w, 5.0, Seed(99)).unwrap();
        let c = add_awgn(&w, 5.0, Seed(100)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn awgn_rejects_zero_power() {
        let w = Waveform::zeros(10, 1.0).unwrap();
        assert!(add_awgn(&w, 10.0, Seed(0)).is_err());
    }

    #[test]
    fn substreams_are_independent_of_each_other() {
        let s = Seed(5);
        let mut a = s.stream("pd.shot");
        let mut b = s.stream("amp.thermal");
        let na = gaussian_noise(4, 1.0, false, &mut a);
        let nb = gaussian_noise(4, 1.0, false, &mut b);
        assert_ne!(na, nb);
        let na2 = gaussian_noise(4, 1.0, false, &mut s.stream("pd.shot"));
        assert_eq!(na, na2);
        assert_ne!(s.derive("a"), s.derive("b"));
    }

    #[test]
    fn db_and_lin() {
        assert_eq!(db(1.0).unwrap(), 0.0);
        assert!((db(0.5).unwrap() + 3.0103).abs() < 1e-4);
        assert!((db(0.5).unwrap() - 10.0 * 0.5f64.log10()).abs() < 1e-12);
        assert!((db(lin(7.3)).unwrap() - 7.3).abs() < 1e-9);
        assert!(db(0.0).is_err());
        assert!(db(-1.0).is_err());
    }

    #[test]
    fn fractional_delay_matches_shifted_tone() {
        let (rate, n) = (100.0, 1000);
        let f = 7.0; // whole number of periods in the record
        let w = tone(f, rate, n, 1.0);
        let d = 0.37;
        let y = fractional_delay(&w, d);
        for i in [0, 13, 999] {
            let expect = (2.0 * PI * f * (i as f64 - d) / rate).cos();
            assert!((y.samples()[i].re - expect).abs() < 1e-9);
        }
        let back = fractional_delay(&fractional_delay(&w, 2.0), -2.0);
        for (a, b) in back.samples().iter().zip(w.samples()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn bandlimited_noise_variance_and_band() {
        let (rate, band, psd, n) = (260e9, 45e9, 2e-16, 1 << 18);
        let x = bandlimited_noise(n, rate, psd, band, &mut Seed(3).stream("t")).unwrap();
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var / (psd * band) - 1.0).abs() < 0.02, "{var}");
        // nothing left above the band
        let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::<f64>::new()
            .plan_fft_forward(n)
            .process(&mut spec);
        let k_band = (band / rate * n as f64).ceil() as usize + 1;
        let leak: f64 = spec[k_band..n / 2].iter().map(|z| z.norm_sqr()).sum();
        assert!(leak < 1e-20, "{leak}");
        assert!(
            bandlimited_noise(8, rate, 0.0, band, &mut Seed(3).stream("t"))
                .unwrap()
                .iter()
                .all(|&v| v == 0.0)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn db_lin_round_trip(x in -200.0f64..200.0) {
                prop_assert!((db(lin(x)).unwrap() - x).abs() < 1e-9);
            }

            #[test]
            fn lowpass_is_deterministic_and_dc_preserving(
                level in -5.0f64..5.0, order in 1usize..5, frac in 0.01f64..0.45
            ) {
                let w = Waveform::from_real(&vec![level; 4000], 100.0).unwrap();
                let y = lowpass(&w, frac * 100.0, order).unwrap();
                prop_assert!((y.samples()[3999].re - level).abs() < 1e-6 * level.abs().max(1.0));
                prop_assert_eq!(y, lowpass(&w, frac * 100.0, order).unwrap());
            }
        }
    }
}
