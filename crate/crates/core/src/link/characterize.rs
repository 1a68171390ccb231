//! Component response curves, as data and as CSV files.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frontend::{adc_capture, photodetect, AdcParams};
use crate::measure::{relative_db, sine, tone_gains};
use crate::photonic::{mux_transfer, ring_modulate, ring_power_transmission, Mode};
use crate::signal::{lowpass, resample, tone_phasor, Seed, SIM_RATE};

use super::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Ring,
    Pd,
    Dac,
    Adc,
    Mux,
}

impl std::str::FromStr for Component {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Component::Ring),
            "pd" => Ok(Component::Pd),
            "dac" => Ok(Component::Dac),
            "adc" => Ok(Component::Adc),
            "mux" => Ok(Component::Mux),
            other => Err(invalid(format!("unknown component {other:?}"))),
        }
    }
}

/// Biases of the ring spectra, V.
pub const SPECTRUM_BIASES: [f64; 4] = [0.0, -1.0, -3.0, -5.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub bias_v: f64,
    pub wavelength_nm: f64,
    pub transmission_db: f64,
}

/// Static ring transmission around the 0 V resonance at 0.1 pm steps.
pub fn ring_spectra(s: &Scenario) -> Vec<SpectrumPoint> {
    let step = 0.1e-12;
    let span = 0.6e-9;
    let start = s.ring.lambda_res0 - span / 3.0;
    let n = (span / step).round() as usize;
    SPECTRUM_BIASES
        .iter()
        .flat_map(|&v| {
            (0..=n).map(move |k| {
                let lam = start + k as f64 * step;
                SpectrumPoint {
                    bias_v: v,
                    wavelength_nm: lam * 1e9,
                    transmission_db: 10.0 * ring_power_transmission(lam, v, &s.ring).log10(),
                }
            })
        })
        .collect()
}

/// Wavelength of minimum transmission for each bias in the spectra, nm.
pub fn spectrum_minima(points: &[SpectrumPoint]) -> Vec<(f64, f64)> {
    SPECTRUM_BIASES
        .iter()
        .map(|&v| {
            let best = points
                .iter()
                .filter(|p| p.bias_v == v)
                .min_by(|a, b| a.transmission_db.total_cmp(&b.transmission_db))
                .expect("spectrum for every bias");
            (v, best.wavelength_nm)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResponsePoint {
    pub freq_ghz: f64,
    pub response_db: f64,
}

fn freq_grid(max_ghz: f64) -> Vec<f64> {
    (1..=(max_ghz * 2.0) as usize)
        .map(|k| k as f64 * 0.5e9)
        .collect()
}

fn to_points(freqs: &[f64], gains: &[f64]) -> Vec<ResponsePoint> {
    freqs
        .iter()
        .zip(relative_db(gains))
        .map(|(f, g)| ResponsePoint {
            freq_ghz: f * 1e-9,
            response_db: g,
        })
        .collect()
}

/// Small-signal electro-optic response of the ring at `bias_v`, relative to
/// 0.5 GHz. The laser sits half a linewidth red of the biased resonance so
/// the slope is steep and the response linear.
pub fn ring_eo_response(s: &Scenario, bias_v: f64) -> Result<Vec<ResponsePoint>> {
    let lam = s.ring.resonance(bias_v) + s.ring.fwhm(s.ring.resonance(bias_v)) / 2.0;
    let freqs = freq_grid(40.0);
    let p_in = s.source.on_chip_watts();
    let g = tone_gains(
        SIM_RATE,
        &freqs,
        0.005,
        bias_v,
        |w| ring_modulate(p_in, w, lam, &s.ring),
        |w| w.samples().iter().map(|z| z.norm_sqr()).collect(),
    )?;
    Ok(to_points(&freqs, &g))
}

/// Photodiode response to an intensity tone, relative to 0.5 GHz.
pub fn pd_response(s: &Scenario) -> Result<Vec<ResponsePoint>> {
    let freqs = freq_grid(50.0);
    let p0 = 1e-3;
    let g = tone_gains(
        SIM_RATE,
        &freqs,
        0.2,
        1.0,
        |w| {
            let env = w.map(|z| Complex64::new((p0 * z.re.max(0.0)).sqrt(), 0.0));
            photodetect(&env, &s.pd, false, Seed(0))
        },
        |w| w.real(),
    )?;
    Ok(to_points(&freqs, &g))
}

/// AWG path (interpolation to the simulation rate and analog band) for a
/// tone on the AWG sample grid, relative to 0.5 GHz.
pub fn dac_response(s: &Scenario) -> Result<Vec<ResponsePoint>> {
    let rate = s.dac.rate;
    let freqs: Vec<f64> = freq_grid(rate / 2e9 - 1.0);
    let n = (rate / 10e6).round() as usize;
    let settle = (SIM_RATE / 100e6).round() as usize;
    let gains = freqs
        .iter()
        .map(|&f| {
            let w = sine(rate, f, 1.0, 0.0, n)?;
            let up = lowpass(&resample(&w, SIM_RATE)?, s.dac.analog_f3db, 2)?;
            // 10 MHz record period: the kept tail spans whole tone periods
            Ok(tone_phasor(&up.samples()[settle..], SIM_RATE, f).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(to_points(&freqs, &gains))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SndrPoint {
    pub amplitude_dbfs: f64,
    pub sndr_db: f64,
}

/// SNDR of a sine fit to the digitized output of a tone at each amplitude.
pub fn adc_sndr_curve(s: &Scenario) -> Result<Vec<SndrPoint>> {
    let p = AdcParams {
        full_scale_v: Some(s.adc.full_scale_v.unwrap_or(1.0)),
        ..s.adc.clone()
    };
    let fs = p.full_scale_v.unwrap_or(1.0);
    (0..=20)
        .map(|k| {
            let dbfs = -2.0 * k as f64;
            let amp = 0.999 * fs / 2.0 * 10f64.powf(dbfs / 20.0);
            Ok(SndrPoint {
                amplitude_dbfs: dbfs,
                sndr_db: sine_fit_sndr(&p, amp, Seed(17))?,
            })
        })
        .collect()
}

/// Digitizes a 1.234 GHz sine of amplitude `amp` generated at the digitizer
/// rate and returns the SNDR of the sine fit at that frequency.
pub fn sine_fit_sndr(p: &AdcParams, amp: f64, seed: Seed) -> Result<f64> {
    let n = 100_000;
    let f = 1.234e9;
    let v = sine(p.rate, f, amp, 0.0, n)?;
    let out = adc_capture(&v, p, true, seed)?;
    let ph = tone_phasor(out.samples(), p.rate, f);
    let w = 2.0 * std::f64::consts::PI * f / p.rate;
    let (mut sig, mut res) = (0.0, 0.0);
    for (i, z) in out.samples().iter().enumerate() {
        let fit = (ph * Complex64::from_polar(1.0, w * i as f64)).re;
        sig += fit * fit;
        res += (z.re - fit).powi(2);
    }
    if res == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (sig / res).log10())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixEntry {
    pub output: Mode,
    pub input: Mode,
    pub re: f64,
    pub im: f64,
    pub power_db: f64,
}

pub fn mux_matrix(s: &Scenario) -> Result<Vec<MatrixEntry>> {
    let m = mux_transfer(&s.mux)?;
    let mut out = Vec::new();
    for o in Mode::ALL {
        for i in Mode::ALL {
            let z = m[o.index()][i.index()];
            out.push(MatrixEntry {
                output: o,
                input: i,
                re: z.re,
                im: z.im,
                power_db: 10.0 * z.norm_sqr().log10(),
            });
        }
    }
    Ok(out)
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes the response curves of `which` into `out_dir` and returns the
/// files written.
pub fn characterize(s: &Scenario, which: Component, out_dir: &Path) -> Result<Vec<PathBuf>> {
    s.validate()?;
    Ok(match which {
        Component::Ring => vec![
            write_csv(out_dir, "ring_spectra.csv", &ring_spectra(s))?,
            write_csv(out_dir, "ring_eo_response.csv", &ring_eo_response(s, -3.0)?)?,
        ],
        Component::Pd => vec![write_csv(out_dir, "pd_response.csv", &pd_response(s)?)?],
        Component::Dac => vec![write_csv(out_dir, "dac_response.csv", &dac_response(s)?)?],
        Component::Adc => vec![write_csv(out_dir, "adc_sndr.csv", &adc_sndr_curve(s)?)?],
        Component::Mux => vec![write_csv(out_dir, "mux_matrix.csv", &mux_matrix(s)?)?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::f3db_from_curve;

    fn corner(points: &[ResponsePoint]) -> f64 {
        let f: Vec<f64> = points.iter().map(|p| p.freq_ghz).collect();
        let g: Vec<f64> = points.iter().map(|p| p.response_db).collect();
        f3db_from_curve(&f, &g).unwrap()
    }

    #[test]
    fn ring_spectra_shift_33pm_per_volt() {
        let s = Scenario::default();
        let minima = spectrum_minima(&ring_spectra(&s));
        for w in minima.windows(2) {
            let ((v0, l0), (v1, l1)) = (w[0], w[1]);
            let pm_per_v = (l1 - l0) * 1e3 / (v0 - v1);
            assert!((pm_per_v - 33.0).abs() < 1.0, "{pm_per_v}");
        }
    }

    #[test]
    fn responses_have_their_corners() {
        let s = Scenario::default();
        assert!((corner(&pd_response(&s).unwrap()) - 28.0).abs() < 1.0);
        assert!((corner(&dac_response(&s).unwrap()) - 25.0).abs() < 1.0);
        assert!((corner(&ring_eo_response(&s, -3.0).unwrap()) - 15.0).abs() < 1.0);
    }

    #[test]
    fn mux_csv_has_crosstalk() {
        let s = Scenario::default();
        let dir = tempfile::tempdir().unwrap();
        let files = characterize(&s, Component::Mux, dir.path()).unwrap();
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.starts_with("output,input,re,im,power_db"));
        let m = mux_matrix(&s).unwrap();
        let diag = m
            .iter()
            .find(|e| e.output == Mode::Te0 && e.input == Mode::Te0)
            .unwrap()
            .power_db;
        let off = m
            .iter()
            .find(|e| e.output == Mode::Te1 && e.input == Mode::Te0)
            .unwrap()
            .power_db;
        assert!((off - diag + 22.2).abs() < 1e-9);
    }

    #[test]
    fn sndr_curve_slope() {
        let s = Scenario::default();
        let c = adc_sndr_curve(&s).unwrap();
        assert!((c[0].sndr_db - 30.05).abs() < 0.5);
        // noise is referred to full scale: 1 dB less signal, 1 dB less SNDR
        assert!((c[0].sndr_db - c[10].sndr_db - 20.0).abs() < 0.5);
    }
}
