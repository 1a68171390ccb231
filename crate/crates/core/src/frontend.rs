//! Electrical boundary of the link: AWG and driver at the transmitter,
//! photodiode, RF amplifier and real-time digitizer at the receiver.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{
    add_noise, bandlimited_noise, dbm_to_watts, lin, lowpass, resample, Seed, Waveform, SIM_RATE,
};
use crate::units::{ext_float, ext_float_opt};

pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Noise reference temperature, K.
pub const T0: f64 = 290.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DacParams {
    pub rate: f64,
    pub analog_f3db: f64,
    /// Drive swing after the driver amplifier, V peak-to-peak.
    pub vpp: f64,
    pub bias_v: f64,
}

impl Default for DacParams {
    fn default() -> Self {
        Self {
            rate: 65e9,
            analog_f3db: 25e9,
            vpp: 3.5,
            bias_v: -1.8,
        }
    }
}

impl DacParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.vpp > 0.0) {
            return Err(invalid(format!("vpp must be positive, got {}", self.vpp)));
        }
        if !(self.analog_f3db > 0.0 && self.analog_f3db < self.rate / 2.0) {
            return Err(invalid(
                "DAC analog bandwidth must lie below half the DAC rate",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdParams {
    /// A/W
    pub responsivity: f64,
    /// Dark current, A.
    pub dark: f64,
    pub f3db: f64,
}

impl Default for PdParams {
    fn default() -> Self {
        Self {
            responsivity: 0.8,
            dark: 2.9e-6,
            f3db: 28e9,
        }
    }
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity > 0.0 && self.dark >= 0.0 && self.f3db > 0.0) {
            return Err(invalid(
                "photodiode needs responsivity > 0, dark >= 0, f3db > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmpParams {
    pub gain_db: f64,
    pub nf_db: f64,
    pub band: f64,
    pub z0: f64,
    /// When set, the gain is chosen so the output AC power is this many dBm
    /// into `z0`, and `gain_db` is ignored.
    #[serde(with = "ext_float_opt")]
    pub auto_trim_dbm: Option<f64>,
}

impl Default for AmpParams {
    fn default() -> Self {
        Self {
            gain_db: 30.0,
            nf_db: 6.0,
            band: 45e9,
            z0: 50.0,
            auto_trim_dbm: None,
        }
    }
}

impl AmpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.band > 0.0 && self.nf_db >= 0.0 && self.z0 > 0.0 && self.gain_db.is_finite()) {
            return Err(invalid(
                "amplifier needs band > 0, nf_db >= 0, z0 > 0, finite gain",
            ));
        }
        if matches!(self.auto_trim_dbm, Some(x) if !x.is_finite()) {
            return Err(invalid("auto-trim target must be finite"));
        }
        Ok(())
    }

    /// One-sided output noise voltage PSD, V^2/Hz, at power gain `g`.
    pub fn output_noise_psd(&self, g: f64) -> f64 {
        (lin(self.nf_db) - 1.0) * BOLTZMANN * T0 * self.z0 * g
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerModel {
    /// Additive Gaussian noise with the SNDR implied by the ENOB.
    #[default]
    Gaussian,
    /// Literal mid-rise quantizer with step `full_scale / 2^enob`.
    MidRise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdcParams {
    pub rate: f64,
    /// Effective bits; `inf` disables the digitizer noise.
    #[serde(with = "ext_float")]
    pub enob: f64,
    /// Peak-to-peak input range, V. `None` auto-ranges to the signal peak.
    #[serde(with = "ext_float_opt")]
    pub full_scale_v: Option<f64>,
    pub quantizer: QuantizerModel,
}

impl Default for AdcParams {
    fn default() -> Self {
        Self {
            rate: 80e9,
            enob: 4.7,
            full_scale_v: None,
            quantizer: QuantizerModel::Gaussian,
        }
    }
}

impl AdcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.enob > 0.0) {
            return Err(invalid(format!("enob must be positive, got {}", self.enob)));
        }
        if !(self.rate > 0.0) {
            return Err(invalid("digitizer rate must be positive"));
        }
        if matches!(self.full_scale_v, Some(fs) if !(fs > 0.0 && fs.is_finite())) {
            return Err(invalid("full_scale_v must be positive"));
        }
        Ok(())
    }

    /// SNDR of a full-scale sine, dB.
    pub fn ideal_sndr_db(&self) -> f64 {
        6.02 * self.enob + 1.76
    }
}

/// AWG output through the driver: resample to the simulation rate, analog
/// low-pass, scale the swing to `vpp` and add the bias.
pub fn dac_drive(digital: &Waveform, p: &DacParams) -> Result<Waveform> {
    p.validate()?;
    digital.ensure_real("DAC input")?;
    if (digital.rate() - p.rate).abs() > 1e-6 * p.rate {
        return Err(invalid(format!(
            "DAC input at {:e} S/s, expected {:e}",
            digital.rate(),
            p.rate
        )));
    }
    let span_of = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        hi - lo
    };
    if !(span_of(&digital.real()) > 0.0) {
        return Err(invalid("DAC input has no swing"));
    }
    let up = resample(digital, SIM_RATE)?;
    let v = lowpass(&up, p.analog_f3db, 2)?.real();
    let span = span_of(&v);
    let k = p.vpp / span;
    Waveform::from_real(
        &v.iter().map(|x| k * x + p.bias_v).collect::<Vec<_>>(),
        SIM_RATE,
    )
}

/// Shot-noise standard deviation for mean current `mean_i` sampled at `rate`
/// (white over the full Nyquist band).
pub fn shot_noise_sigma(mean_i: f64, rate: f64) -> f64 {
    (2.0 * ELECTRON_CHARGE * mean_i.max(0.0) * rate / 2.0).sqrt()
}

/// Square-law detection of a complex envelope (sqrt(W)) into current (A).
pub fn photodetect(env: &Waveform, p: &PdParams, noise: bool, seed: Seed) -> Result<Waveform> {
    photodetect_scaled(env, p, if noise { 1.0 } else { 0.0 }, seed)
}

/// [`photodetect`] with the shot-noise amplitude multiplied by `noise_scale`.
pub fn photodetect_scaled(
    env: &Waveform,
    p: &PdParams,
    noise_scale: f64,
    seed: Seed,
) -> Result<Waveform> {
    p.validate()?;
    let current: Vec<f64> = env
        .samples()
        .iter()
        .map(|z| p.responsivity * z.norm_sqr() + p.dark)
        .collect();
    let mut i = Waveform::from_real(&current, env.rate())?;
    if noise_scale > 0.0 {
        let sigma = noise_scale * shot_noise_sigma(i.mean().re, i.rate());
        i = add_noise(&i, sigma, &mut seed.stream("pd.shot"));
    }
    lowpass(&i, p.f3db, 2)
}

/// Power gain actually applied for input current `i`.
pub fn amp_power_gain(i: &Waveform, p: &AmpParams) -> Result<f64> {
    match p.auto_trim_dbm {
        None => Ok(lin(p.gain_db)),
        Some(target) => {
            let m = i.mean().re;
            let ac: f64 =
                i.samples().iter().map(|z| (z.re - m).powi(2)).sum::<f64>() / i.len().max(1) as f64;
            let p_in = ac * p.z0;
            if !(p_in > 0.0) {
                return Err(invalid("auto-trim needs an input with AC content"));
            }
            Ok(dbm_to_watts(target) / p_in)
        }
    }
}

/// Current into the amplifier's `z0` input, voltage out. Thermal noise
/// enters flat over the amplifier band and is shaped by the same single
/// pole as the signal.
pub fn rf_amplify(i: &Waveform, p: &AmpParams, noise: bool, seed: Seed) -> Result<Waveform> {
    rf_amplify_scaled(i, p, if noise { 1.0 } else { 0.0 }, seed)
}

/// [`rf_amplify`] with the noise amplitude multiplied by `noise_scale`.
pub fn rf_amplify_scaled(
    i: &Waveform,
    p: &AmpParams,
    noise_scale: f64,
    seed: Seed,
) -> Result<Waveform> {
    p.validate()?;
    i.ensure_real("amplifier input")?;
    let g = amp_power_gain(i, p)?;
    let v = i.scaled(p.z0 * g.sqrt());
    let psd = p.output_noise_psd(g) * noise_scale * noise_scale;
    if psd == 0.0 {
        return lowpass(&v, p.band, 1);
    }
    let n = bandlimited_noise(
        v.len(),
        v.rate(),
        psd,
        p.band,
        &mut seed.stream("amp.thermal"),
    )?;
    let noisy: Vec<f64> = v.samples().iter().zip(&n).map(|(z, e)| z.re + e).collect();
    lowpass(&Waveform::from_real(&noisy, v.rate())?, p.band, 1)
}

/// Peak-to-peak range the digitizer uses for `v` (already at its rate).
pub fn full_scale_for(v: &Waveform, p: &AdcParams) -> f64 {
    p.full_scale_v
        .unwrap_or_else(|| 2.0 * v.samples().iter().fold(0.0f64, |m, z| m.max(z.re.abs())))
}

/// Real-time digitizer: resample to its rate, clip to the input range, then
/// either add ENOB-equivalent Gaussian noise or quantize.
pub fn adc_capture(v: &Waveform, p: &AdcParams, noise: bool, seed: Seed) -> Result<Waveform> {
    adc_capture_scaled(v, p, if noise { 1.0 } else { 0.0 }, seed)
}

/// [`adc_capture`] with the Gaussian ENOB noise amplitude multiplied by
/// `noise_scale`. The literal quantizer ignores the scale (any positive
/// value enables it).
pub fn adc_capture_scaled(
    v: &Waveform,
    p: &AdcParams,
    noise_scale: f64,
    seed: Seed,
) -> Result<Waveform> {
    p.validate()?;
    v.ensure_real("digitizer input")?;
    let r = resample(v, p.rate)?;
    let fs = full_scale_for(&r, p);
    let half = fs / 2.0;
    let clipped: Vec<f64> = if half > 0.0 {
        r.samples()
            .iter()
            .map(|z| z.re.clamp(-half, half))
            .collect()
    } else {
        r.real()
    };
    if !(noise_scale > 0.0) || p.enob.is_infinite() || half == 0.0 {
        return Waveform::from_real(&clipped, p.rate);
    }
    match p.quantizer {
        QuantizerModel::Gaussian => {
            let sine_power = half * half / 2.0;
            let sigma = noise_scale * (sine_power / lin(p.ideal_sndr_db())).sqrt();
            let w = Waveform::from_real(&clipped, p.rate)?;
            Ok(add_noise(&w, sigma, &mut seed.stream("adc.enob")))
        }
        QuantizerModel::MidRise => {
            let step = fs / 2f64.powf(p.enob);
            let top = half - step / 2.0;
            let q: Vec<f64> = clipped
                .iter()
                .map(|x| ((x / step).floor() + 0.5) * step)
                .map(|x| x.clamp(-top, top))
                .collect();
            Waveform::from_real(&q, p.rate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{relative_db, sine, tone_gains};
    use crate::signal::{gaussian_noise, tone_phasor};
    use num_complex::Complex64;
    use rustfft::FftPlanner;

    #[test]
    fn dac_square_swings_around_bias() {
        let p = DacParams::default();
        let sq: Vec<f64> = (0..4000)
            .map(|i| if (i / 200) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let out = dac_drive(&Waveform::from_real(&sq, p.rate).unwrap(), &p).unwrap();
        let v = out.real();
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min - 3.5).abs() < 1e-9);
        // settled plateaus sit at bias +- vpp/2 (the filter overshoot is small)
        assert!((max - (-1.8 + 1.75)).abs() < 0.05, "{max}");
        assert!((min - (-1.8 - 1.75)).abs() < 0.05, "{min}");
    }

    #[test]
    fn dac_bias_is_dc_for_zero_mean_input() {
        let p = DacParams::default();
        let n = 6500;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 1e9 * i as f64 / p.rate).sin())
            .collect();
        let out = dac_drive(&Waveform::from_real(&x, p.rate).unwrap(), &p).unwrap();
        assert!((out.mean().re + 1.8).abs() < 1e-3);
    }

    #[test]
    fn dac_rejects_constant_and_wrong_rate() {
        let p = DacParams::default();
        assert!(dac_drive(&Waveform::from_real(&[0.4; 100], p.rate).unwrap(), &p).is_err());
        assert!(dac_drive(&Waveform::from_real(&[0.4, 0.1], 80e9).unwrap(), &p).is_err());
    }

    #[test]
    fn dac_response_at_analog_corner() {
        let p = DacParams::default();
        // a tone on the DAC grid; compare 25 GHz to 1 GHz after the full path
        let gain_at = |f: f64| {
            let n = 6500;
            let x: Vec<f64> = (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / p.rate).cos())
                .collect();
            let pre = resample(&Waveform::from_real(&x, p.rate).unwrap(), SIM_RATE).unwrap();
            let post = lowpass(&pre, p.analog_f3db, 2).unwrap();
            let tail = &post.samples()[2600..];
            tone_phasor(tail, SIM_RATE, f).norm()
        };
        let rel = 20.0 * (gain_at(25e9) / gain_at(1e9)).log10();
        assert!((rel + 3.0).abs() < 0.3, "{rel}");
    }

    #[test]
    fn cw_detection_is_linear() {
        let env = Waveform::new(vec![Complex64::new(1e-3f64.sqrt(), 0.0); 3000], SIM_RATE).unwrap();
        let i = photodetect(&env, &PdParams::default(), false, Seed(1)).unwrap();
        assert!((i.samples()[2999].re - (0.8e-3 + 2.9e-6)).abs() < 1e-12);
        assert!(i.mean().re >= 2.9e-6);
    }

    /// Sum of squares of the filter impulse response: the variance gain of
    /// white noise through the detector's low-pass.
    fn noise_gain(f3db: f64, order: usize) -> f64 {
        let mut imp = vec![0.0; 20000];
        imp[0] = 1.0;
        let h = lowpass(&Waveform::from_real(&imp, SIM_RATE).unwrap(), f3db, order).unwrap();
        h.samples().iter().map(|z| z.re * z.re).sum()
    }

    #[test]
    fn shot_noise_variance() {
        let p = PdParams::default();
        let n = 1_000_000;
        let env = Waveform::new(vec![Complex64::new(1e-3f64.sqrt(), 0.0); n], SIM_RATE).unwrap();
        let clean = photodetect(&env, &p, false, Seed(5)).unwrap();
        let noisy = photodetect(&env, &p, true, Seed(5)).unwrap();
        let i_mean = 0.8e-3 + 2.9e-6;
        let diff: Vec<f64> = noisy.samples()[1000..]
            .iter()
            .zip(&clean.samples()[1000..])
            .map(|(a, b)| a.re - b.re)
            .collect();
        let var = diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64;
        let expect = 2.0 * ELECTRON_CHARGE * i_mean * SIM_RATE / 2.0 * noise_gain(p.f3db, 2);
        assert!((var / expect - 1.0).abs() < 0.1, "{var:e} vs {expect:e}");

        // additive: the difference is exactly the filtered noise record
        let sigma = (2.0 * ELECTRON_CHARGE * i_mean * SIM_RATE / 2.0).sqrt();
        let rec = gaussian_noise(n, sigma, false, &mut Seed(5).stream("pd.shot"));
        let filt = lowpass(&Waveform::new(rec, SIM_RATE).unwrap(), p.f3db, 2).unwrap();
        for k in [0, 17, 999_999] {
            assert!(
                (noisy.samples()[k].re - clean.samples()[k].re - filt.samples()[k].re).abs()
                    < 1e-15
            );
        }
    }

    #[test]
    fn pd_bandwidth_28ghz() {
        let p = PdParams::default();
        let bias = 1e-3;
        let freqs = [1e9, 28e9];
        let g = tone_gains(
            SIM_RATE,
            &freqs,
            0.2,
            1.0,
            // drive the optical power: env = sqrt(bias * s(t))
            |w| {
                let env = w.map(|z| Complex64::new((bias * z.re).sqrt(), 0.0));
                photodetect(&env, &p, false, Seed(0))
            },
            |w| w.real(),
        )
        .unwrap();
        let rel = relative_db(&g)[1];
        assert!((rel + 3.0).abs() < 0.3, "{rel}");
    }

    #[test]
    fn amp_noiseless_unity_gain() {
        let p = AmpParams {
            gain_db: 0.0,
            band: 100e9,
            ..Default::default()
        };
        let i = Waveform::from_real(&vec![1e-3; 3000], SIM_RATE).unwrap();
        let v = rf_amplify(&i, &p, false, Seed(0)).unwrap();
        assert!((v.samples()[2999].re - 0.05).abs() < 1e-9);
        let q = AmpParams { nf_db: 0.0, ..p };
        assert_eq!(rf_amplify(&i, &q, true, Seed(0)).unwrap(), v);
    }

    #[test]
    fn amp_thermal_noise_power_in_band() {
        let p = AmpParams::default();
        let n = 1 << 19;
        let i = Waveform::zeros(n, SIM_RATE).unwrap();
        let v = rf_amplify(&i, &p, true, Seed(9)).unwrap();
        // integrate the periodogram from 0 to 45 GHz, as power into z0
        let mut spec: Vec<Complex64> = v.samples().to_vec();
        FftPlanner::<f64>::new()
            .plan_fft_forward(n)
            .process(&mut spec);
        let k_max = (p.band / SIM_RATE * n as f64).floor() as usize;
        let two_sided: f64 = (1..=k_max)
            .map(|k| spec[k].norm_sqr() + spec[n - k].norm_sqr())
            .sum::<f64>()
            + spec[0].norm_sqr();
        let v2 = two_sided / (n as f64 * n as f64);
        let watts = v2 / p.z0;
        let g = lin(p.gain_db);
        // flat density through a single pole: integral of 1/(1+x^2) over [0, 1]
        let expect =
            (lin(p.nf_db) - 1.0) * BOLTZMANN * T0 * g * p.band * std::f64::consts::FRAC_PI_4;
        assert!(
            (watts / expect - 1.0).abs() < 0.1,
            "{watts:e} vs {expect:e}"
        );
    }

    #[test]
    fn amp_auto_trim_hits_target() {
        let p = AmpParams {
            auto_trim_dbm: Some(10.0),
            ..Default::default()
        };
        let i = sine(SIM_RATE, 1e9, 1e-4, 5e-4, 26000).unwrap();
        let v = rf_amplify(&i, &p, false, Seed(0)).unwrap();
        let tail = &v.real()[2600..];
        let m = tail.iter().sum::<f64>() / tail.len() as f64;
        let ac = tail.iter().map(|x| (x - m).powi(2)).sum::<f64>() / tail.len() as f64 / p.z0;
        assert!((10.0 * (ac / 1e-3).log10() - 10.0).abs() < 0.1);
    }

    fn sndr_of(amp_frac: f64, p: &AdcParams) -> f64 {
        let fs = p.full_scale_v.unwrap();
        let n = 100_000;
        let f = 1.234e9;
        let v = sine(p.rate, f, amp_frac * fs / 2.0, 0.0, n).unwrap();
        // input is already at the digitizer rate: resampling is the identity
        let out = adc_capture(&v, p, true, Seed(11)).unwrap();
        // least-squares sine fit at the known frequency, then residual
        let ph = tone_phasor(out.samples(), p.rate, f);
        let fit: Vec<f64> = (0..n)
            .map(|i| {
                (ph * Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * f * i as f64 / p.rate,
                ))
                .re
            })
            .collect();
        let sig: f64 = fit.iter().map(|x| x * x).sum();
        let res: f64 = out
            .real()
            .iter()
            .zip(&fit)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        10.0 * (sig / res).log10()
    }

    #[test]
    fn digitizer_sndr() {
        let p = AdcParams {
            full_scale_v: Some(1.0),
            ..Default::default()
        };
        let full = sndr_of(0.999, &p);
        assert!((full - 30.05).abs() < 0.5, "{full}");
        let small = sndr_of(0.01, &p);
        assert!((full - small - 40.0).abs() < 0.6, "{}", full - small);
    }

    #[test]
    fn digitizer_infinite_enob_is_resample_only() {
        let p = AdcParams {
            enob: f64::INFINITY,
            ..Default::default()
        };
        let v = sine(SIM_RATE, 1e9, 0.3, 0.0, 26000).unwrap();
        assert_eq!(
            adc_capture(&v, &p, true, Seed(1)).unwrap().real(),
            resample(&v, 80e9).unwrap().real()
        );
    }

    #[test]
    fn digitizer_clips_and_quantizes() {
        let p = AdcParams {
            full_scale_v: Some(1.0),
            quantizer: QuantizerModel::MidRise,
            enob: 3.0,
            ..Default::default()
        };
        let v = Waveform::from_real(&[2.0, -2.0, 0.01, -0.01, 0.3], 80e9).unwrap();
        let out = adc_capture(&v, &p, true, Seed(0)).unwrap().real();
        let step = 1.0 / 8.0;
        assert_eq!(
            out,
            vec![
                0.5 - step / 2.0,
                -0.5 + step / 2.0,
                step / 2.0,
                -step / 2.0,
                0.3125
            ]
        );
        // mid-rise SNDR of a full-scale sine is close to the ENOB rule
        let q = AdcParams { enob: 6.0, ..p };
        assert!((sndr_of(0.999, &q) - q.ideal_sndr_db()).abs() < 1.0);
    }

    #[test]
    fn noiseless_stages_superpose() {
        let a = sine(SIM_RATE, 2e9, 1e-4, 0.0, 13000).unwrap();
        let b = sine(SIM_RATE, 7e9, 5e-5, 0.0, 13000).unwrap();
        let sum = Waveform::from_real(
            &a.real()
                .iter()
                .zip(b.real())
                .map(|(x, y)| x + y)
                .collect::<Vec<_>>(),
            SIM_RATE,
        )
        .unwrap();
        let amp = AmpParams::default();
        let f = |w: &Waveform| rf_amplify(w, &amp, false, Seed(0)).unwrap().real();
        let (ya, yb, ys) = (f(&a), f(&b), f(&sum));
        for k in 0..ys.len() {
            assert!((ys[k] - ya[k] - yb[k]).abs() < 1e-9);
        }
        let adc = AdcParams {
            full_scale_v: Some(10.0),
            ..Default::default()
        };
        let g = |w: &Waveform| adc_capture(w, &adc, false, Seed(0)).unwrap().real();
        let (ya, yb, ys) = (g(&a), g(&b), g(&sum));
        for k in 0..ys.len() {
            assert!((ys[k] - ya[k] - yb[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn params_round_trip_with_sentinels() {
        let p = AdcParams {
            enob: f64::INFINITY,
            full_scale_v: Some(0.5),
            ..Default::default()
        };
        let s = toml::to_string(&p).unwrap();
        assert_eq!(toml::from_str::<AdcParams>(&s).unwrap(), p);
        assert!(toml::from_str::<AdcParams>("bogus = 1").is_err());
    }
}
