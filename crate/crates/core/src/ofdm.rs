//! OFDM/16-QAM transmitter and receiver DSP.
//!
//! The transmitter is DMT-style: data sits on bins `1..=n_data_sc` and the
//! conjugate mirror on `n_fft - k`, so the time-domain frame is real. A
//! frame is `n_train` known training symbols (also the sync preamble)
//! followed by `n_payload` payload symbols, each with a cyclic prefix.
//!
//! Gray mapping convention for square M-QAM (`b = log2 M` bits per symbol,
//! MSB first): the first `b/2` bits label the I axis, the last `b/2` the Q
//! axis. On each axis the label is a Gray code whose binary index `i` maps to
//! the level `(L-1) - 2i` with `L = sqrt(M)`, so label `0...0` is the most
//! positive level. For 16-QAM the axis labels `00, 01, 11, 10` map to
//! `+3, +1, -1, -3`. Points are scaled to unit average energy, which puts
//! 4-QAM bits `00` at `(1+1i)/sqrt(2)`.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{NoiseStream, Seed, Waveform};

/// Minimum peak-to-median ratio of the normalized sync correlation.
pub const SYNC_CONFIDENCE: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmConfig {
    pub n_fft: usize,
    pub n_cp: usize,
    pub n_data_sc: usize,
    pub qam_order: usize,
    pub n_train: usize,
    pub n_payload: usize,
    pub dac_rate: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_fft: 512,
            n_cp: 16,
            n_data_sc: 255,
            qam_order: 16,
            n_train: 8,
            n_payload: 100,
            dac_rate: 65e9,
        }
    }
}

impl OfdmConfig {
    /// Largest loadable subcarrier count: DC and Nyquist stay empty.
    pub fn max_data_sc(&self) -> usize {
        (self.n_fft / 2).saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 4 || !self.n_fft.is_multiple_of(2) {
            return Err(invalid(format!(
                "n_fft must be even and >= 4, got {}",
                self.n_fft
            )));
        }
        if self.n_data_sc == 0 || self.n_data_sc > self.max_data_sc() {
            return Err(invalid(format!(
                "n_data_sc must be in 1..={}, got {}",
                self.max_data_sc(),
                self.n_data_sc
            )));
        }
        if self.n_cp >= self.n_fft {
            return Err(invalid("n_cp must be shorter than n_fft"));
        }
        bits_per_symbol(self.qam_order)?;
        if self.n_train == 0 {
            return Err(invalid("at least one training symbol is required"));
        }
        if !(self.dac_rate.is_finite() && self.dac_rate > 0.0) {
            return Err(invalid("dac_rate must be > 0"));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.n_cp
    }

    pub fn n_symbols(&self) -> usize {
        self.n_train + self.n_payload
    }

    pub fn frame_len(&self) -> usize {
        self.n_symbols() * self.symbol_len()
    }

    pub fn training_len(&self) -> usize {
        self.n_train * self.symbol_len()
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.dac_rate / self.n_fft as f64
    }

    /// Baseband frequency of data column `col` (bin `col + 1`).
    pub fn subcarrier_freq(&self, col: usize) -> f64 {
        (col + 1) as f64 * self.subcarrier_spacing()
    }

    pub fn bits_per_ofdm_symbol(&self) -> usize {
        self.n_data_sc * bits_per_symbol(self.qam_order).unwrap_or(0)
    }
}

/// Raw modulated bit rate: `n_data_sc * log2(M) * dac_rate / (n_fft + n_cp)`.
/// Pure arithmetic; the config is not validated.
pub fn line_rate(cfg: &OfdmConfig) -> f64 {
    if cfg.n_data_sc == 0 {
        return 0.0;
    }
    let bits = (cfg.qam_order as f64).log2();
    cfg.n_data_sc as f64 * bits * cfg.dac_rate / (cfg.n_fft + cfg.n_cp) as f64
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitStream(pub Vec<u8>);

impl BitStream {
    pub fn random(len: usize, rng: &mut NoiseStream) -> Self {
        BitStream((0..len).map(|_| rng.random_range(0..=1u8)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn bits_per_symbol(order: usize) -> Result<usize> {
    let b = order.trailing_zeros() as usize;
    if order < 4 || !order.is_power_of_two() || !b.is_multiple_of(2) {
        return Err(invalid(format!(
            "QAM order must be a power of 4 (>= 4), got {order}"
        )));
    }
    Ok(b)
}

/// Scale that gives a square constellation unit average energy.
fn qam_norm(order: usize) -> f64 {
    (2.0 * (order as f64 - 1.0) / 3.0).sqrt()
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

#[cfg(test)]
fn binary_to_gray(b: usize) -> usize {
    b ^ (b >> 1)
}

fn axis_level(label: usize, side: usize) -> f64 {
    (side as f64 - 1.0) - 2.0 * gray_to_binary(label) as f64
}

/// Hard decision on one axis; ties go to the lower Gray label.
fn axis_decide(x: f64, side: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for label in 0..side {
        let d = (x - axis_level(label, side)).abs();
        if d < best_d {
            best_d = d;
            best = label;
        }
    }
    best
}

/// Gray-coded square QAM mapping with unit average energy.
pub fn qam_map(bits: &BitStream, order: usize) -> Result<Vec<Complex64>> {
    let b = bits_per_symbol(order)?;
    if !bits.len().is_multiple_of(b) {
        return Err(invalid(format!(
            "bit count {} is not a multiple of {b}",
            bits.len()
        )));
    }
    let half = b / 2;
    let side = 1usize << half;
    let norm = qam_norm(order);
    Ok(bits
        .0
        .chunks(b)
        .map(|c| {
            let word = |s: &[u8]| {
                s.iter()
                    .fold(0usize, |acc, &x| (acc << 1) | (x & 1) as usize)
            };
            let i = axis_level(word(&c[..half]), side);
            let q = axis_level(word(&c[half..]), side);
            Complex64::new(i, q) / norm
        })
        .collect())
}

/// Minimum-distance hard decision followed by the inverse Gray label.
pub fn qam_demap(points: &[Complex64], order: usize) -> Result<BitStream> {
    let b = bits_per_symbol(order)?;
    let half = b / 2;
    let side = 1usize << half;
    let norm = qam_norm(order);
    let mut out = Vec::with_capacity(points.len() * b);
    for p in points {
        let li = axis_decide(p.re * norm, side);
        let lq = axis_decide(p.im * norm, side);
        for label in [li, lq] {
            for k in (0..half).rev() {
                out.push(((label >> k) & 1) as u8);
            }
        }
    }
    Ok(BitStream(out))
}

/// Every constellation point of `order`, indexed by its bit label.
pub fn constellation(order: usize) -> Result<Vec<Complex64>> {
    let b = bits_per_symbol(order)?;
    let bits: Vec<u8> = (0..order)
        .flat_map(|label| (0..b).rev().map(move |k| ((label >> k) & 1) as u8))
        .collect();
    qam_map(&BitStream(bits), order)
}

/// Matrix of QAM symbols, one row per OFDM symbol and one column per loaded
/// subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct QamGrid {
    rows: usize,
    width: usize,
    order: usize,
    symbols: Vec<Complex64>,
}

impl QamGrid {
    pub fn new(rows: usize, width: usize, order: usize, symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.len() != rows * width {
            return Err(invalid(format!(
                "grid data has {} entries, expected {rows}x{width}",
                symbols.len()
            )));
        }
        Ok(Self {
            rows,
            width,
            order,
            symbols,
        })
    }

    /// Maps `bits` row by row onto a `width`-wide grid.
    pub fn from_bits(bits: &BitStream, width: usize, order: usize) -> Result<Self> {
        let pts = qam_map(bits, order)?;
        if width == 0 || pts.len() % width != 0 {
            return Err(invalid("bit count does not fill whole OFDM symbols"));
        }
        Self::new(pts.len() / width, width, order, pts)
    }

    pub fn random(
        rows: usize,
        width: usize,
        order: usize,
        rng: &mut NoiseStream,
    ) -> Result<(BitStream, Self)> {
        let bits = BitStream::random(rows * width * bits_per_symbol(order)?, rng);
        let grid = Self::from_bits(&bits, width, order)?;
        Ok((bits, grid))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.symbols[r * self.width..(r + 1) * self.width]
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.symbols[r * self.width + c]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    /// Rows `start..start + count` as a new grid.
    pub fn rows_range(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.rows {
            return Err(invalid("row range outside grid"));
        }
        Self::new(
            count,
            self.width,
            self.order,
            self.symbols[start * self.width..(start + count) * self.width].to_vec(),
        )
    }

    /// Stacks `self` on top of `below`.
    pub fn stack(&self, below: &QamGrid) -> Result<Self> {
        if self.width != below.width || self.order != below.order {
            return Err(invalid("cannot stack grids of different shape"));
        }
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&below.symbols);
        Self::new(self.rows + below.rows, self.width, self.order, symbols)
    }

    pub fn map(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let symbols = self
            .symbols
            .iter()
            .enumerate()
            .map(|(i, &z)| f(i / self.width, i % self.width, z))
            .collect();
        Self {
            symbols,
            ..self.clone()
        }
    }

    pub fn demap(&self) -> Result<BitStream> {
        qam_demap(&self.symbols, self.order)
    }
}

/// Known pseudo-random training grid shared by transmitter and receiver.
pub fn training_grid(cfg: &OfdmConfig, seed: Seed) -> Result<QamGrid> {
    let (_, grid) = QamGrid::random(
        cfg.n_train,
        cfg.n_data_sc,
        cfg.qam_order,
        &mut seed.stream("ofdm.training"),
    )?;
    Ok(grid)
}

/// Time-domain scale applied after the unnormalized inverse FFT; gives unit
/// mean power for unit-energy constellations.
fn tx_scale(cfg: &OfdmConfig) -> f64 {
    1.0 / (2.0 * cfg.n_data_sc as f64).sqrt()
}

/// Real OFDM frame at `dac_rate`: every grid row becomes one symbol with
/// Hermitian-symmetric bins and a cyclic prefix.
pub fn ofdm_modulate(grid: &QamGrid, cfg: &OfdmConfig) -> Result<Waveform> {
    cfg.validate()?;
    if grid.width() != cfg.n_data_sc {
        return Err(invalid(format!(
            "grid width {} != n_data_sc {}",
            grid.width(),
            cfg.n_data_sc
        )));
    }
    if grid.rows() != cfg.n_symbols() {
        return Err(invalid(format!(
            "grid has {} rows, frame needs {}",
            grid.rows(),
            cfg.n_symbols()
        )));
    }
    let n = cfg.n_fft;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let scale = tx_scale(cfg);
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(cfg.frame_len());
    let mut bins = vec![zero; n];
    for r in 0..grid.rows() {
        bins.iter_mut().for_each(|b| *b = zero);
        for (c, &s) in grid.row(r).iter().enumerate() {
            bins[c + 1] = s;
            bins[n - c - 1] = s.conj();
        }
        ifft.process(&mut bins);
        // Hermitian symmetry: the imaginary part is rounding noise.
        let sym: Vec<Complex64> = bins
            .iter()
            .map(|z| Complex64::new(z.re * scale, 0.0))
            .collect();
        out.extend_from_slice(&sym[n - cfg.n_cp..]);
        out.extend_from_slice(&sym);
    }
    Waveform::new(out, cfg.dac_rate)
}

/// Sample offset in `rx` where `known_training` correlates best, by
/// normalized cross-correlation. Fails when the peak is less than
/// [`SYNC_CONFIDENCE`] times the median correlation of all other offsets.
pub fn synchronize(rx: &Waveform, cfg: &OfdmConfig, known_training: &Waveform) -> Result<usize> {
    let t = known_training.len();
    let r = rx.len();
    if t == 0 {
        return Err(invalid("empty training waveform"));
    }
    if cfg.training_len() != t {
        return Err(invalid(format!(
            "training waveform has {t} samples, config implies {}",
            cfg.training_len()
        )));
    }
    if r < t {
        return Err(Error::TruncatedFrame {
            needed: t,
            available: r,
        });
    }
    let corr = normalized_xcorr(rx.samples(), known_training.samples());
    let (peak_at, peak) =
        corr.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, c)| {
                if c > best.1 {
                    (i, c)
                } else {
                    best
                }
            });
    let mut others: Vec<f64> = corr
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != peak_at)
        .map(|(_, &c)| c)
        .collect();
    if !others.is_empty() {
        others.sort_by(|a, b| a.total_cmp(b));
        let median = others[others.len() / 2];
        let ratio = if median > 0.0 {
            peak / median
        } else {
            f64::INFINITY
        };
        if !(ratio >= SYNC_CONFIDENCE) {
            return Err(Error::SyncFailure {
                ratio,
                required: SYNC_CONFIDENCE,
            });
        }
    }
    Ok(peak_at)
}

/// |sum rx[d+n] conj(t[n])| / sqrt(E_rx(d) E_t) for d in 0..=rx.len()-t.len().
fn normalized_xcorr(rx: &[Complex64], train: &[Complex64]) -> Vec<f64> {
    let (r, t) = (rx.len(), train.len());
    let size = (r + t).next_power_of_two();
    let zero = Complex64::new(0.0, 0.0);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut a = vec![zero; size];
    a[..r].copy_from_slice(rx);
    let mut b = vec![zero; size];
    b[..t].copy_from_slice(train);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    inv.process(&mut a);

    let e_t: f64 = train.iter().map(|z| z.norm_sqr()).sum();
    let mut prefix = Vec::with_capacity(r + 1);
    prefix.push(0.0);
    for z in rx {
        prefix.push(prefix.last().unwrap() + z.norm_sqr());
    }
    (0..=r - t)
        .map(|d| {
            let e_rx = (prefix[d + t] - prefix[d]).max(0.0);
            let denom = (e_rx * e_t).sqrt();
            if denom > 0.0 {
                a[d].norm() / size as f64 / denom
            } else {
                0.0
            }
        })
        .collect()
}

/// Sub-sample delay, within half a sample, that makes the channel phase at
/// Nyquist a multiple of pi. The phase at Nyquist is extrapolated from the
/// slope over the last few taps (taps are bins `1..=taps.len()`).
///
/// A real channel whose response at Nyquist is not real has a phase jump
/// there once sampled, and that jump rings far past the cyclic prefix.
pub fn nyquist_alignment(taps: &[Complex64], n_fft: usize) -> f64 {
    let n = taps.len();
    if n < 2 {
        return 0.0;
    }
    let tail = &taps[n.saturating_sub(8)..];
    let slope = tail
        .windows(2)
        .map(|w| w[1] * w[0].conj())
        .sum::<Complex64>()
        .arg();
    let phase = taps[n - 1].arg() + slope * (n_fft as f64 / 2.0 - n as f64);
    let d = phase / std::f64::consts::PI;
    d - d.round()
}

/// Drops the cyclic prefixes from `offset` on and returns the raw bins
/// `1..=n_data_sc` of every frame symbol. No equalization.
pub fn ofdm_demodulate(rx: &Waveform, cfg: &OfdmConfig, offset: usize) -> Result<QamGrid> {
    cfg.validate()?;
    let needed = cfg.frame_len();
    let available = rx.len().saturating_sub(offset);
    if available < needed {
        return Err(Error::TruncatedFrame { needed, available });
    }
    let n = cfg.n_fft;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let scale = 1.0 / (n as f64 * tx_scale(cfg));
    let mut symbols = Vec::with_capacity(cfg.n_symbols() * cfg.n_data_sc);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for s in 0..cfg.n_symbols() {
        let start = offset + s * cfg.symbol_len() + cfg.n_cp;
        buf.copy_from_slice(&rx.samples()[start..start + n]);
        fft.process(&mut buf);
        symbols.extend(buf[1..=cfg.n_data_sc].iter().map(|z| z * scale));
    }
    QamGrid::new(cfg.n_symbols(), cfg.n_data_sc, cfg.qam_order, symbols)
}

/// One complex tap per subcarrier: mean over training symbols of raw/ref.
pub fn estimate_channel(raw_train: &QamGrid, ref_train: &QamGrid) -> Result<Vec<Complex64>> {
    if raw_train.rows() != ref_train.rows() || raw_train.width() != ref_train.width() {
        return Err(invalid("training grid shapes differ"));
    }
    if raw_train.rows() == 0 {
        return Err(invalid("no training symbols"));
    }
    if ref_train.symbols().iter().any(|z| z.norm_sqr() == 0.0) {
        return Err(invalid("reference training grid contains zero entries"));
    }
    let n = raw_train.rows() as f64;
    Ok((0..raw_train.width())
        .map(|c| {
            raw_train
                .column(c)
                .zip(ref_train.column(c))
                .map(|(r, x)| r / x)
                .sum::<Complex64>()
                / n
        })
        .collect())
}

/// Divides every column by its channel tap.
pub fn equalize(raw: &QamGrid, taps: &[Complex64]) -> Result<QamGrid> {
    if taps.len() != raw.width() {
        return Err(invalid(format!(
            "{} taps for a {}-wide grid",
            taps.len(),
            raw.width()
        )));
    }
    let dead: Vec<usize> = taps
        .iter()
        .enumerate()
        .filter(|(_, t)| t.norm() < 1e-12)
        .map(|(i, _)| i + 1)
        .collect();
    if !dead.is_empty() {
        return Err(Error::DeadSubcarriers(dead));
    }
    Ok(raw.map(|_, c, z| z / taps[c]))
}

#[derive(Serialize, Deserialize)]
struct BitRow {
    index: usize,
    bit: u8,
}

#[derive(Serialize, Deserialize)]
struct GridRow {
    symbol: usize,
    subcarrier: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    index: usize,
    time_s: f64,
    value: f64,
}

/// One reference frame for conformance testing.
#[derive(Clone, Debug, PartialEq)]
pub struct TestVector {
    pub config: OfdmConfig,
    pub bits: BitStream,
    pub grid: QamGrid,
    pub waveform: Waveform,
}

impl TestVector {
    /// Frame built from the shared training grid plus random payload bits.
    /// `bits` covers the payload rows only.
    pub fn generate(cfg: &OfdmConfig, seed: Seed) -> Result<Self> {
        cfg.validate()?;
        let train = training_grid(cfg, seed)?;
        let (bits, payload) = QamGrid::random(
            cfg.n_payload,
            cfg.n_data_sc,
            cfg.qam_order,
            &mut seed.stream("testvector.bits"),
        )?;
        let grid = train.stack(&payload)?;
        let waveform = ofdm_modulate(&grid, cfg)?;
        Ok(Self {
            config: cfg.clone(),
            bits,
            grid,
            waveform,
        })
    }

    /// Writes `frame_config.toml`, `frame_bits.csv` (index,bit),
    /// `frame_grid.csv` (symbol,subcarrier,re,im; subcarrier = FFT bin) and
    /// `frame_waveform.csv` (index,time_s,value).
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let cfg = toml::to_string(&self.config).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(dir.join("frame_config.toml"), cfg)?;

        let mut w = csv::Writer::from_path(dir.join("frame_bits.csv"))?;
        for (index, &bit) in self.bits.0.iter().enumerate() {
            w.serialize(BitRow { index, bit })?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("frame_grid.csv"))?;
        for symbol in 0..self.grid.rows() {
            for c in 0..self.grid.width() {
                let z = self.grid.get(symbol, c);
                w.serialize(GridRow {
                    symbol,
                    subcarrier: c + 1,
                    re: z.re,
                    im: z.im,
                })?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("frame_waveform.csv"))?;
        let rate = self.waveform.rate();
        for (index, z) in self.waveform.samples().iter().enumerate() {
            w.serialize(SampleRow {
                index,
                time_s: index as f64 / rate,
                value: z.re,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("frame_config.toml"))?;
        let config: OfdmConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;

        let mut bits = Vec::new();
        for row in csv::Reader::from_path(dir.join("frame_bits.csv"))?.deserialize() {
            let row: BitRow = row?;
            bits.push(row.bit);
        }
        let mut symbols = Vec::new();
        for row in csv::Reader::from_path(dir.join("frame_grid.csv"))?.deserialize() {
            let row: GridRow = row?;
            symbols.push(Complex64::new(row.re, row.im));
        }
        let grid = QamGrid::new(
            config.n_symbols(),
            config.n_data_sc,
            config.qam_order,
            symbols,
        )?;
        let mut samples = Vec::new();
        for row in csv::Reader::from_path(dir.join("frame_waveform.csv"))?.deserialize() {
            let row: SampleRow = row?;
            samples.push(row.value);
        }
        let waveform = Waveform::from_real(&samples, config.dac_rate)?;
        Ok(Self {
            config,
            bits: BitStream(bits),
            grid,
            waveform,
        })
    }
}
