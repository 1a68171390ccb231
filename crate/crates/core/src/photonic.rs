//! Optical path: CW source, depletion microring modulator, the mode
//! multiplexer/demultiplexer transfer matrix and the static loss budget.
//!
//! Bias convention: reverse bias is a negative voltage. The resonance moves
//! by `shift` metres per volt, and with the default negative `shift` a deeper
//! reverse bias red-shifts the resonance.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{dbm_to_watts, lowpass, Waveform};
use crate::units::ext_float;

/// CW laser wavelength used throughout the experiment.
pub const LASER_WAVELENGTH: f64 = 1550.23e-9;

/// Modulator bias range accepted by the bias-point solver, volts.
pub const BIAS_RANGE: (f64, f64) = (-5.0, 0.0);

/// Resonance at 0 V such that -1.8 V sits 4 dB below the ring's maximum
/// transmission at [`LASER_WAVELENGTH`] (laser on the red side). Calibration
/// output, reproduced by `calibration::solve_resonance`.
pub const CALIBRATED_RESONANCE_0V: f64 = 1550.08172923e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingParams {
    /// Ring radius, m.
    pub radius: f64,
    pub group_index: f64,
    /// Power coupling bus -> ring.
    pub kappa_sq: f64,
    /// Round-trip field transmission; `None` means critical coupling
    /// (a = sqrt(1 - kappa_sq)).
    pub a: Option<f64>,
    /// Resonance wavelength at 0 V, m.
    pub lambda_res0: f64,
    /// Resonance shift per volt, m/V.
    pub shift: f64,
    /// Lumped electro-optic 3 dB bandwidth, Hz.
    pub eo_f3db: f64,
}

impl Default for RingParams {
    fn default() -> Self {
        Self {
            radius: 7.5e-6,
            group_index: 4.2,
            kappa_sq: 0.055,
            a: None,
            lambda_res0: CALIBRATED_RESONANCE_0V,
            shift: -33e-12,
            eo_f3db: 15e9,
        }
    }
}

impl RingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_sq > 0.0 && self.kappa_sq < 1.0) {
            return Err(invalid(format!(
                "kappa_sq must be in (0, 1), got {}",
                self.kappa_sq
            )));
        }
        let a = self.round_trip();
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid(format!(
                "round-trip transmission must be in (0, 1], got {a}"
            )));
        }
        if !(self.radius > 0.0 && self.group_index > 0.0) {
            return Err(invalid("radius and group index must be positive"));
        }
        if !(self.eo_f3db > 0.0 && self.lambda_res0 > 0.0) {
            return Err(invalid("eo_f3db and lambda_res0 must be positive"));
        }
        Ok(())
    }

    /// Bus self-coupling r = sqrt(1 - kappa^2).
    pub fn self_coupling(&self) -> f64 {
        (1.0 - self.kappa_sq).sqrt()
    }

    pub fn round_trip(&self) -> f64 {
        self.a.unwrap_or_else(|| self.self_coupling())
    }

    pub fn circumference(&self) -> f64 {
        2.0 * PI * self.radius
    }

    pub fn fsr(&self, lambda: f64) -> f64 {
        lambda * lambda / (self.group_index * self.circumference())
    }

    pub fn resonance(&self, v_bias: f64) -> f64 {
        self.lambda_res0 + self.shift * v_bias
    }

    /// Analytic full width at half depth of the notch.
    pub fn fwhm(&self, lambda: f64) -> f64 {
        let ra = self.self_coupling() * self.round_trip();
        (1.0 - ra) * lambda * lambda / (PI * self.group_index * self.circumference() * ra.sqrt())
    }

    pub fn loaded_q(&self, lambda: f64) -> f64 {
        lambda / self.fwhm(lambda)
    }

    /// Off-resonance (half-FSR detuned) power transmission, the spectrum's
    /// maximum.
    pub fn max_transmission(&self) -> f64 {
        let (r, a) = (self.self_coupling(), self.round_trip());
        ((r + a) / (1.0 + r * a)).powi(2)
    }
}

/// All-pass ring field response `(r - a e^{i phi}) / (1 - r a e^{i phi})`
/// with the round-trip phase measured from the biased resonance.
pub fn ring_static_transmission(lambda: f64, v_bias: f64, p: &RingParams) -> Complex64 {
    let (r, a) = (p.self_coupling(), p.round_trip());
    let phi = 2.0 * PI * (lambda - p.resonance(v_bias)) / p.fsr(lambda);
    let e = Complex64::from_polar(1.0, phi);
    (r - a * e) / (1.0 - r * a * e)
}

pub fn ring_power_transmission(lambda: f64, v_bias: f64, p: &RingParams) -> f64 {
    ring_static_transmission(lambda, v_bias, p).norm_sqr()
}

/// Insertion loss of the biased ring in dB (positive = loss).
pub fn ring_insertion_db(lambda: f64, v_bias: f64, p: &RingParams) -> f64 {
    -10.0 * ring_power_transmission(lambda, v_bias, p).log10()
}

/// Drive (volts, real) through the single-pole EO response, then the
/// quasi-static ring: `out(t) = sqrt(p_in) * t(lambda, v(t))`.
pub fn ring_modulate(p_in: f64, drive: &Waveform, lambda: f64, p: &RingParams) -> Result<Waveform> {
    drive.ensure_real("ring drive")?;
    p.validate()?;
    if p_in < 0.0 {
        return Err(invalid("optical input power must be >= 0"));
    }
    let v = lowpass(drive, p.eo_f3db, 1)?;
    let amp = p_in.sqrt();
    Ok(v.map(|z| amp * ring_static_transmission(lambda, z.re, p)))
}

/// Bias in [`BIAS_RANGE`] where the ring transmits `target_db` below its
/// maximum, with the laser on the red side of the resonance.
///
/// A target of 0 dB or less asks for the maximum reachable transmission and
/// returns the in-range bias that pushes the resonance farthest from the
/// laser.
pub fn ring_bias_point(target_db: f64, lambda: f64, p: &RingParams) -> Result<f64> {
    p.validate()?;
    let (lo, hi) = BIAS_RANGE;
    let power = |v: f64| ring_power_transmission(lambda, v, p);
    if target_db <= 0.0 {
        // Transmission grows with |detuning| up to half an FSR; the detuning is
        // linear in bias, so the in-range maximum sits at an end point unless
        // the half-FSR point falls inside the range.
        let half_fsr_bias = (lambda - p.fsr(lambda) / 2.0 - p.lambda_res0) / p.shift;
        let mut cands = vec![lo, hi];
        if half_fsr_bias > lo && half_fsr_bias < hi {
            cands.push(half_fsr_bias);
        }
        return Ok(cands
            .into_iter()
            .fold((hi, f64::NEG_INFINITY), |best, v| {
                let t = power(v);
                if t > best.1 {
                    (v, t)
                } else {
                    best
                }
            })
            .0);
    }
    let level = p.max_transmission() * 10f64.powf(-target_db / 10.0);

    // Red side: 0 <= lambda - res(v) <= FSR/2, an interval in v.
    let fsr = p.fsr(lambda);
    let v_at = |detuning: f64| (lambda - detuning - p.lambda_res0) / p.shift;
    let (a, b) = (v_at(0.0), v_at(fsr / 2.0));
    let seg_lo = a.min(b).max(lo);
    let seg_hi = a.max(b).min(hi);
    if seg_lo > seg_hi {
        return Err(Error::NoSolution(format!(
            "laser is not on the red side of the resonance anywhere in {lo}..{hi} V"
        )));
    }
    // Transmission rises with detuning on the red side.
    let detuning = |v: f64| lambda - p.resonance(v);
    let (mut near, mut far) = if detuning(seg_lo) < detuning(seg_hi) {
        (seg_lo, seg_hi)
    } else {
        (seg_hi, seg_lo)
    };
    if !(power(near) <= level && level <= power(far)) {
        return Err(Error::NoSolution(format!(
            "{target_db} dB below maximum is outside the reachable range \
             [{:.2}, {:.2}] dB",
            -10.0 * (power(far) / p.max_transmission()).log10(),
            -10.0 * (power(near) / p.max_transmission()).log10(),
        )));
    }
    while (far - near).abs() > 1e-9 {
        let mid = 0.5 * (near + far);
        if power(mid) < level {
            near = mid;
        } else {
            far = mid;
        }
    }
    Ok(0.5 * (near + far))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceParams {
    pub fiber_power_dbm: f64,
    /// Grating-coupler loss per pass, dB.
    pub gc_loss_db: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            fiber_power_dbm: 5.0,
            gc_loss_db: 3.0,
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gc_loss_db >= 0.0) || !self.fiber_power_dbm.is_finite() {
            return Err(invalid("gc_loss_db must be >= 0 and fiber power finite"));
        }
        Ok(())
    }

    /// CW power launched on chip (after the input grating coupler), W.
    pub fn on_chip_watts(&self) -> f64 {
        dbm_to_watts(self.fiber_power_dbm - self.gc_loss_db)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Te0,
    Te1,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Te0, Mode::Te1];

    pub fn index(self) -> usize {
        match self {
            Mode::Te0 => 0,
            Mode::Te1 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Te0 => "te0",
            Mode::Te1 => "te1",
        }
    }
}

/// On-chip mode path (mode mux -> multimode bus -> mode demux), treated as
/// one 2x2 transfer. Insertion loss and crosstalk are the end-to-end values
/// measured on the test structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MuxParams {
    /// Per-mode insertion loss [TE0, TE1], dB.
    pub il_db: [f64; 2],
    /// Inter-mode power crosstalk, dB; `-inf` disables it.
    #[serde(with = "ext_float")]
    pub xt_db: f64,
    /// Lumped per-channel calibration loss [TE0, TE1], dB.
    pub excess_loss_db: [f64; 2],
}

impl Default for MuxParams {
    fn default() -> Self {
        Self {
            il_db: [0.5, 1.2],
            xt_db: -22.2,
            excess_loss_db: [0.0, 0.0],
        }
    }
}

/// Field transfer matrix, `m[out][in]`.
pub type ModeMatrix = [[Complex64; 2]; 2];

pub fn identity_matrix() -> ModeMatrix {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

pub fn mat_mul(a: &ModeMatrix, b: &ModeMatrix) -> ModeMatrix {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Largest singular value of a 2x2 complex matrix.
pub fn largest_singular_value(m: &ModeMatrix) -> f64 {
    let fro: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm_sqr();
    let disc = (fro * fro - 4.0 * det).max(0.0).sqrt();
    ((fro + disc) / 2.0).sqrt()
}

pub fn is_passive(m: &ModeMatrix) -> bool {
    largest_singular_value(m) <= 1.0 + 1e-12
}

/// Diagonal `10^(-(il + excess)/20)`; each off-diagonal entry is the
/// diagonal of its input column times `10^(xt/20)`, phase 0.
pub fn mux_transfer(p: &MuxParams) -> Result<ModeMatrix> {
    if p.il_db.iter().any(|&il| !(il >= 0.0 && il.is_finite())) {
        return Err(invalid(format!(
            "insertion losses must be finite and >= 0: {:?}",
            p.il_db
        )));
    }
    if p.excess_loss_db.iter().any(|x| !x.is_finite()) {
        return Err(invalid("excess loss must be finite"));
    }
    if !(p.xt_db < 0.0) {
        return Err(invalid(format!(
            "crosstalk must be negative dB, got {}",
            p.xt_db
        )));
    }
    let diag: Vec<f64> = (0..2)
        .map(|i| 10f64.powf(-(p.il_db[i] + p.excess_loss_db[i]) / 20.0))
        .collect();
    let x = if p.xt_db == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(p.xt_db / 20.0)
    };
    let c = |v: f64| Complex64::new(v, 0.0);
    let m = [[c(diag[0]), c(diag[1] * x)], [c(diag[0] * x), c(diag[1])]];
    if !is_passive(&m) {
        return Err(invalid(format!(
            "mode transfer matrix is not passive (largest singular value {:.6})",
            largest_singular_value(&m)
        )));
    }
    Ok(m)
}

/// Complex envelopes (sqrt(W)) of the TE0 and TE1 channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeField {
    pub te0: Waveform,
    pub te1: Waveform,
    pub carrier_lambda: f64,
}

impl ModeField {
    pub fn new(te0: Waveform, te1: Waveform, carrier_lambda: f64) -> Result<Self> {
        if te0.rate() != te1.rate() || te0.len() != te1.len() {
            return Err(invalid("mode envelopes must share rate and length"));
        }
        Ok(Self {
            te0,
            te1,
            carrier_lambda,
        })
    }

    pub fn channel(&self, m: Mode) -> &Waveform {
        match m {
            Mode::Te0 => &self.te0,
            Mode::Te1 => &self.te1,
        }
    }

    /// Total mean optical power over both modes, W.
    pub fn power(&self) -> f64 {
        self.te0.power() + self.te1.power()
    }
}

/// Per-sample 2-vector product `m * [te0, te1]`.
pub fn apply_mux(f: &ModeField, m: &ModeMatrix) -> Result<ModeField> {
    let (a, b) = (f.te0.samples(), f.te1.samples());
    let mut o0 = Vec::with_capacity(a.len());
    let mut o1 = Vec::with_capacity(a.len());
    for (&x0, &x1) in a.iter().zip(b) {
        o0.push(m[0][0] * x0 + m[0][1] * x1);
        o1.push(m[1][0] * x0 + m[1][1] * x1);
    }
    let rate = f.te0.rate();
    ModeField::new(
        Waveform::new(o0, rate)?,
        Waveform::new(o1, rate)?,
        f.carrier_lambda,
    )
}

/// Static received optical power at the photodiode of `channel`, dBm:
/// fiber power minus coupler, ring and mode-path losses.
pub fn received_power(
    s: &SourceParams,
    m: &MuxParams,
    ring_insertion_db: f64,
    channel: Mode,
) -> f64 {
    let i = channel.index();
    s.fiber_power_dbm - s.gc_loss_db - ring_insertion_db - m.il_db[i] - m.excess_loss_db[i]
}
