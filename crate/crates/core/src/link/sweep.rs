//! Parameter sweeps over the full link.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::{count_ber, xt_penalty_analytic, xt_penalty_montecarlo, InterfererModel};
use crate::ofdm::line_rate;
use crate::photonic::Mode;
use crate::units::{ext_float, ext_float_opt};

use super::{simulate, Channels, NoiseConfig, Scenario};

/// Loaded-subcarrier counts of the default rate sweep (255 is full load).
pub const DEFAULT_RATE_POINTS: [usize; 5] = [128, 160, 204, 230, 255];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub mode: Mode,
    pub n_data_sc: usize,
    pub line_rate: f64,
    pub ber: Option<f64>,
    pub errors: Option<u64>,
    pub bits: Option<u64>,
    /// Why the point produced no BER (sync loss, ...).
    pub failure: Option<String>,
}

/// One link run per subcarrier count. Failed points are recorded and the
/// sweep continues. Output is sorted by (count, mode).
pub fn sweep_rate(s: &Scenario, counts: &[usize]) -> Result<Vec<RatePoint>> {
    for &n in counts {
        s.with_subcarriers(n).validate()?;
    }
    let mut counts = counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    let points: Vec<Vec<RatePoint>> = counts
        .par_iter()
        .map(|&n| {
            let mut p = s.with_subcarriers(n);
            p.seed = s.seed.derive(&format!("rate.{n}"));
            let rate = line_rate(&p.ofdm);
            match simulate(&p) {
                Ok(out) => out
                    .iter()
                    .map(|(m, o)| {
                        let b = count_ber(&o.tx_bits, &o.rx_bits)?;
                        Ok(RatePoint {
                            mode: *m,
                            n_data_sc: n,
                            line_rate: rate,
                            ber: Some(b.ber),
                            errors: Some(b.errors),
                            bits: Some(b.bits),
                            failure: None,
                        })
                    })
                    .collect::<Result<Vec<_>>>(),
                Err(e) if e.is_link_failure() || matches!(e, Error::TruncatedFrame { .. }) => Ok(p
                    .channels
                    .modes()
                    .into_iter()
                    .map(|m| RatePoint {
                        mode: m,
                        n_data_sc: n,
                        line_rate: rate,
                        ber: None,
                        errors: None,
                        bits: None,
                        failure: Some(e.to_string()),
                    })
                    .collect()),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(points.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XtPoint {
    #[serde(with = "ext_float")]
    pub xt_db: f64,
    /// Extra SNR (noise backoff) that restores the single-channel TE0 BER;
    /// `inf` when no backoff up to the search limit does.
    #[serde(with = "ext_float")]
    pub measured_penalty_db: f64,
    #[serde(with = "ext_float")]
    pub analytic_penalty_db: f64,
    /// Monte-Carlo penalty for a Gaussian interferer at the measured
    /// effective crosstalk and the baseline BER; `None` when the baseline has
    /// no errors to restore.
    #[serde(with = "ext_float_opt")]
    pub montecarlo_penalty_db: Option<f64>,
    /// Interference-to-signal power on the equalized TE0 subcarriers.
    #[serde(with = "ext_float")]
    pub effective_xt_db: f64,
    pub baseline_ber: f64,
}

/// Largest noise backoff tried when restoring the baseline BER, dB.
pub const MAX_BACKOFF_DB: f64 = 20.0;

fn te0_ber(s: &Scenario) -> Result<f64> {
    let out = simulate(s)?;
    let o = &out[&Mode::Te0];
    Ok(count_ber(&o.tx_bits, &o.rx_bits)?.ber)
}

/// Interference-to-signal ratio seen by TE0, from noiseless runs with and
/// without the leakage.
fn effective_xt(s: &Scenario) -> Result<f64> {
    let mut quiet = s.clone();
    quiet.noise = NoiseConfig::off();
    let with = simulate(&quiet)?;
    quiet.mux.xt_db = f64::NEG_INFINITY;
    let without = simulate(&quiet)?;
    let (a, b) = (&with[&Mode::Te0].equalized, &without[&Mode::Te0].equalized);
    let reference = &without[&Mode::Te0].reference;
    let err: f64 = a
        .symbols()
        .iter()
        .zip(b.symbols())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let sig: f64 = reference.symbols().iter().map(|z| z.norm_sqr()).sum();
    Ok(if err == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (err / sig).log10()
    })
}

/// Measured crosstalk penalty on TE0 for each `xt` in `xt_list`, next to the
/// analytic and Monte-Carlo predictions. `s` must be a dual-channel
/// scenario. Output is sorted by crosstalk.
pub fn sweep_crosstalk(s: &Scenario, xt_list: &[f64]) -> Result<Vec<XtPoint>> {
    if s.channels != Channels::Both {
        return Err(invalid("crosstalk sweep needs channels = \"both\""));
    }
    s.validate()?;
    let mut single = s.clone();
    single.channels = Channels::Te0;
    let baseline = te0_ber(&single)?;
    let order = s.ofdm.qam_order;
    let mut xts = xt_list.to_vec();
    xts.sort_by(|a, b| a.total_cmp(b));

    xts.par_iter()
        .map(|&xt| {
            let mut p = s.clone();
            p.mux.xt_db = xt;
            p.validate()?;
            let ber_at = |backoff: f64| {
                let mut q = p.clone();
                q.noise.backoff_db = s.noise.backoff_db + backoff;
                te0_ber(&q)
            };
            let measured = if ber_at(0.0)? <= baseline {
                0.0
            } else if ber_at(MAX_BACKOFF_DB)? > baseline {
                f64::INFINITY
            } else {
                let (mut lo, mut hi) = (0.0, MAX_BACKOFF_DB);
                while hi - lo > 0.005 {
                    let mid = 0.5 * (lo + hi);
                    if ber_at(mid)? > baseline {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            };
            let analytic = match xt_penalty_analytic(xt, order, baseline.clamp(1e-9, 0.49)) {
                Ok(v) => v,
                Err(Error::BerFloor { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let eff = effective_xt(&p)?;
            let mc = if baseline > 0.0 && eff < 0.0 {
                match xt_penalty_montecarlo(
                    eff,
                    order,
                    baseline,
                    InterfererModel::Gaussian,
                    s.seed.derive("xt.mc"),
                ) {
                    Ok(v) => Some(v),
                    Err(Error::BerFloor { .. }) => Some(f64::INFINITY),
                    Err(Error::InvalidParameter(_)) | Err(Error::NoSolution(_)) => None,
                    Err(e) => return Err(e),
                }
            } else if eff == f64::NEG_INFINITY {
                Some(0.0)
            } else {
                None
            };
            Ok(XtPoint {
                xt_db: xt,
                measured_penalty_db: measured,
                analytic_penalty_db: analytic,
                montecarlo_penalty_db: mc,
                effective_xt_db: eff,
                baseline_ber: baseline,
            })
        })
        .collect()
}
