//! Log-mel spectrogram extraction.
//!
//! Hann-windowed magnitude STFT, HTK-scale triangular filterbank, natural
//! log with a floor, per-spectrogram standardization, then right-padding
//! (with the standardized floor value) or center truncation to the fixed
//! frame count the model expects.

use super::fft::real_magnitude_spectrum;
use super::{AudioClip, SpectrogramConfig};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Fixed-size log-mel image, shape (n_mels, target_frames, 1).
#[derive(Debug, Clone)]
pub struct Spectrogram<T: Scalar> {
    pub values: Tensor<T>,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn n_mels(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.values.shape()[1]
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank rows, flattened `[n_mels x (n_fft/2 + 1)]`.
pub fn mel_filterbank(cfg: &SpectrogramConfig) -> Vec<f64> {
    let n_bins = cfg.n_fft / 2 + 1;
    let fmax = cfg.sample_rate as f64 / 2.0;
    let edges = mel_edge_frequencies(cfg);
    let mut bank = vec![0.0; cfg.n_mels * n_bins];
    for m in 0..cfg.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_bins {
            let f = k as f64 * cfg.sample_rate as f64 / cfg.n_fft as f64;
            if f > fmax {
                break;
            }
            let w = if f >= left && f <= center && center > left {
                (f - left) / (center - left)
            } else if f > center && f <= right && right > center {
                (right - f) / (right - center)
            } else {
                0.0
            };
            bank[m * n_bins + k] = w;
        }
    }
    bank
}

/// The n_mels + 2 filter edge frequencies, equally spaced on the mel scale
/// from 0 to Nyquist. Filter `m` spans edges `m..m+2` peaking at `m+1`.
pub fn mel_edge_frequencies(cfg: &SpectrogramConfig) -> Vec<f64> {
    let fmax = cfg.sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(fmax);
    (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (cfg.n_mels + 1) as f64))
        .collect()
}

/// Center (peak) frequency of each triangular filter.
pub fn mel_center_frequencies(cfg: &SpectrogramConfig) -> Vec<f64> {
    let edges = mel_edge_frequencies(cfg);
    edges[1..cfg.n_mels + 1].to_vec()
}

fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Log-mel frames before standardization, `[n_mels x frames]` row-major.
fn log_mel_frames(clip: &AudioClip, cfg: &SpectrogramConfig) -> Result<(Vec<f64>, usize)> {
    let win = cfg.window_samples();
    let hop = cfg.hop_samples();
    if clip.samples.len() < win {
        return Err(Error::TooShort {
            samples: clip.samples.len(),
            needed: win,
        });
    }
    let frames = 1 + (clip.samples.len() - win) / hop;
    let window = hann_window(win);
    let bank = mel_filterbank(cfg);
    let n_bins = cfg.n_fft / 2 + 1;
    let mut out = vec![0.0; cfg.n_mels * frames];
    let mut buf = vec![0.0; win];
    for t in 0..frames {
        let start = t * hop;
        for i in 0..win {
            buf[i] = clip.samples[start + i] * window[i];
        }
        let mag = real_magnitude_spectrum(&buf, cfg.n_fft);
        for m in 0..cfg.n_mels {
            let row = &bank[m * n_bins..(m + 1) * n_bins];
            let energy: f64 = row.iter().zip(mag.iter()).map(|(w, v)| w * v).sum();
            out[m * frames + t] = energy.max(cfg.log_floor).ln();
        }
    }
    Ok((out, frames))
}

/// Full pipeline: STFT, filterbank, log, standardize, pad/truncate.
pub fn mel_spectrogram<T: Scalar>(
    clip: &AudioClip,
    cfg: &SpectrogramConfig,
) -> Result<Spectrogram<T>> {
    cfg.validate()?;
    if clip.sample_rate != cfg.sample_rate {
        return Err(Error::Usage(format!(
            "clip sample rate {} does not match config {} (resampling unsupported)",
            clip.sample_rate, cfg.sample_rate
        )));
    }
    let (mut values, frames) = log_mel_frames(clip, cfg)?;

    // standardize over the actual (pre-padding) spectrogram
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var > 1e-24 { var.sqrt() } else { 1.0 };
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
    let pad_value = (cfg.log_floor.ln() - mean) / std;

    // pad right or truncate centered to target_frames
    let target = cfg.target_frames;
    let mut image = vec![T::ZERO; cfg.n_mels * target];
    if frames >= target {
        let start = (frames - target) / 2;
        for m in 0..cfg.n_mels {
            for t in 0..target {
                image[m * target + t] = T::from_f64(values[m * frames + start + t]);
            }
        }
    } else {
        let pad = T::from_f64(pad_value);
        for m in 0..cfg.n_mels {
            for t in 0..target {
                image[m * target + t] = if t < frames {
                    T::from_f64(values[m * frames + t])
                } else {
                    pad
                };
            }
        }
    }

    Ok(Spectrogram {
        values: Tensor::new(image, &[cfg.n_mels, target, 1]),
    })
}

/// Raw standardized log-mel values without the pad/truncate step,
/// `[n_mels x frames]`; used by shape-independent tests.
pub fn mel_frames_standardized(clip: &AudioClip, cfg: &SpectrogramConfig) -> Result<(Vec<f64>, usize)> {
    let (mut values, frames) = log_mel_frames(clip, cfg)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var > 1e-24 { var.sqrt() } else { 1.0 };
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
    Ok((values, frames))
}

/// Pre-standardization log-mel values, `[n_mels x frames]`.
pub fn mel_frames_raw(clip: &AudioClip, cfg: &SpectrogramConfig) -> Result<(Vec<f64>, usize)> {
    log_mel_frames(clip, cfg)
}
