//! STFT front end, subband bookkeeping and active-frame selection.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::array::CapsuleSpectra;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate_hz: f64,
    pub frame_len: usize,
    pub hop: usize,
    #[serde(default)]
    pub window: Window,
}

impl StftConfig {
    /// 1024-sample Hann frames with 50% overlap.
    pub fn default_for(sample_rate_hz: f64) -> Self {
        Self {
            sample_rate_hz,
            frame_len: 1024,
            hop: 512,
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::config("stft.sample_rate_hz", "must be positive"));
        }
        if self.frame_len < 16 || !self.frame_len.is_power_of_two() {
            return Err(Error::config(
                "stft.frame_len",
                format!("must be a power of two >= 16, got {}", self.frame_len),
            ));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::config(
                "stft.hop",
                format!("must lie in 1..={}, got {}", self.frame_len, self.hop),
            ));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.frame_len as f64
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz()
    }

    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            1 + (len - self.frame_len) / self.hop
        }
    }
}

/// One-sided spectra of a single channel, `[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn frame(&self, f: usize) -> &[Complex64] {
        &self.data[f * self.bins..(f + 1) * self.bins]
    }
}

/// Windowed STFT keeping bins `0..bins` (`bins <= frame_len / 2 + 1`).
pub fn stft_bins(signal: &[f64], cfg: &StftConfig, bins: usize) -> Result<Spectrogram> {
    cfg.validate()?;
    if signal.len() < cfg.frame_len {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            frame_len: cfg.frame_len,
        });
    }
    let bins = bins.min(cfg.num_bins());
    let frames = cfg.num_frames(signal.len());
    let window = cfg.window.coefficients(cfg.frame_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.frame_len);
    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.frame_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for f in 0..frames {
        let start = f * cfg.hop;
        for (b, (x, w)) in buf
            .iter_mut()
            .zip(signal[start..start + cfg.frame_len].iter().zip(&window))
        {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(Spectrogram { frames, bins, data })
}

pub fn stft(signal: &[f64], cfg: &StftConfig) -> Result<Spectrogram> {
    stft_bins(signal, cfg, cfg.num_bins())
}

/// STFT of every channel, interleaved as `[frame][bin][capsule]`.
pub fn stft_multichannel(channels: &[Vec<f64>], cfg: &StftConfig, bins: usize) -> Result<CapsuleSpectra> {
    if channels.is_empty() {
        return Err(Error::EmptyInput("stft_multichannel"));
    }
    let len = channels[0].len();
    if let Some(ch) = channels.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            got: ch.len(),
        });
    }
    let per_channel: Vec<Spectrogram> = channels
        .par_iter()
        .map(|c| stft_bins(c, cfg, bins))
        .collect::<Result<_>>()?;
    let nq = channels.len();
    let (frames, bins) = (per_channel[0].frames, per_channel[0].bins);
    let mut data = vec![Complex64::new(0.0, 0.0); frames * bins * nq];
    for (q, s) in per_channel.iter().enumerate() {
        for (cell, v) in s.data.iter().enumerate() {
            data[cell * nq + q] = *v;
        }
    }
    CapsuleSpectra::new(frames, bins, nq, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandGrid {
    pub centers_hz: Vec<f64>,
    pub edges_hz: Vec<(f64, f64)>,
}

impl SubbandGrid {
    /// Bands around the given centers with edges at the geometric
    /// midpoints; the outer edges mirror the neighbouring ratio.
    pub fn from_centers(centers_hz: Vec<f64>) -> Result<Self> {
        if centers_hz.is_empty() {
            return Err(Error::config("bands.centers_hz", "no band centers"));
        }
        if centers_hz.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::config("bands.centers_hz", "centers must be positive"));
        }
        if centers_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("bands.centers_hz", "centers must be strictly increasing"));
        }
        let n = centers_hz.len();
        let ratio = |i: usize| -> f64 {
            if n == 1 {
                10f64.powf(0.1)
            } else if i + 1 < n {
                centers_hz[i + 1] / centers_hz[i]
            } else {
                centers_hz[i] / centers_hz[i - 1]
            }
        };
        let mut edges = Vec::with_capacity(n);
        for i in 0..n {
            let lo = if i == 0 {
                centers_hz[0] / ratio(0).sqrt()
            } else {
                (centers_hz[i - 1] * centers_hz[i]).sqrt()
            };
            let hi = if i + 1 == n {
                centers_hz[i] * ratio(i).sqrt()
            } else {
                (centers_hz[i] * centers_hz[i + 1]).sqrt()
            };
            edges.push((lo, hi));
        }
        Ok(Self {
            centers_hz,
            edges_hz: edges,
        })
    }

    pub fn len(&self) -> usize {
        self.centers_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers_hz.is_empty()
    }

    pub fn low_hz(&self) -> f64 {
        self.edges_hz[0].0
    }

    pub fn high_hz(&self) -> f64 {
        self.edges_hz[self.len() - 1].1
    }

    /// STFT bins whose center frequency lies in `[low, high)` of band `i`.
    /// A band narrower than one bin falls back to the bin nearest its
    /// center.
    pub fn band_bins(&self, i: usize, cfg: &StftConfig) -> Range<usize> {
        let (lo, hi) = self.edges_hz[i];
        hz_range_bins(lo, hi, cfg).unwrap_or_else(|| {
            let b = (self.centers_hz[i] / cfg.bin_hz()).round() as usize;
            b..b + 1
        })
    }
}

/// Bins with center frequency in `[lo, hi)`, `None` when there are none.
pub fn hz_range_bins(lo: f64, hi: f64, cfg: &StftConfig) -> Option<Range<usize>> {
    let df = cfg.bin_hz();
    let first = (lo / df).ceil().max(1.0) as usize;
    let mut last = (hi / df).ceil() as usize;
    last = last.min(cfg.num_bins());
    (first < last).then_some(first..last)
}

/// Twelve tenth-decade bands centered on `10^(2.3 + 0.1 i)` Hz.
pub fn default_subband_grid() -> SubbandGrid {
    let centers = (0..12).map(|i| 10f64.powf(2.3 + 0.1 * i as f64)).collect();
    SubbandGrid::from_centers(centers).expect("default grid is valid")
}

/// Per-frame energy summed over capsules and the given bins.
pub fn frame_band_energy(spectra: &CapsuleSpectra, bins: Range<usize>) -> Vec<f64> {
    (0..spectra.frames)
        .map(|f| {
            bins.clone()
                .map(|b| spectra.cell(f, b).iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum()
        })
        .collect()
}

/// Indices of frames whose energy is within `threshold_db` of the loudest
/// one. Empty when every frame is silent.
pub fn active_frames_from_energy(energy: &[f64], threshold_db: f64) -> Result<Vec<usize>> {
    if !(threshold_db < 0.0) {
        return Err(Error::config(
            "vad.threshold_db",
            format!("must be negative, got {threshold_db}"),
        ));
    }
    let peak = energy.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Ok(Vec::new());
    }
    let floor = peak * 10f64.powf(threshold_db / 10.0);
    Ok(energy
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= floor)
        .map(|(i, _)| i)
        .collect())
}

pub fn active_frames(spectra: &CapsuleSpectra, bins: Range<usize>, threshold_db: f64) -> Result<Vec<usize>> {
    active_frames_from_energy(&frame_band_energy(spectra, bins), threshold_db)
}
