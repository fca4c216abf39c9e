//! Audio frontend: WAV decoding and fixed-size log-mel spectrograms.

mod fft;
pub mod mel;
pub mod wav;

pub use mel::{mel_spectrogram, Spectrogram};
pub use wav::{load_wav, write_wav_pcm16};

use crate::error::{Error, Result};
use crate::tensor::Scalar;
use std::io::{Read, Write};
use std::path::Path;

/// Mono audio in [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Usage("empty audio clip".into()));
        }
        if !samples.iter().all(|s| s.is_finite()) {
            return Err(Error::Usage("non-finite audio sample".into()));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// STFT and filterbank parameters plus the fixed output geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramConfig {
    pub sample_rate: u32,
    pub window_ms: u32,
    pub hop_ms: u32,
    pub n_fft: usize,
    pub n_mels: usize,
    pub target_frames: usize,
    pub log_floor: f64,
}

impl SpectrogramConfig {
    /// 16 kHz, 25 ms Hann window, 10 ms hop, 512-point FFT — the standard
    /// spectrogram-transformer pipeline — shaped to (n_mels, target_frames).
    pub fn with_geometry(n_mels: usize, target_frames: usize) -> Self {
        SpectrogramConfig {
            sample_rate: 16_000,
            window_ms: 25,
            hop_ms: 10,
            n_fft: 512,
            n_mels,
            target_frames,
            log_floor: 1e-10,
        }
    }

    pub fn window_samples(&self) -> usize {
        (self.sample_rate as usize * self.window_ms as usize) / 1000
    }

    pub fn hop_samples(&self) -> usize {
        (self.sample_rate as usize * self.hop_ms as usize) / 1000
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.hop_ms > self.window_ms {
            return Err(Error::Config(format!(
                "hop_ms ({}) must not exceed window_ms ({})",
                self.hop_ms, self.window_ms
            )));
        }
        if self.hop_ms == 0 {
            return Err(Error::Config("hop_ms must be positive".into()));
        }
        if !self.n_fft.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_fft ({}) must be a power of two",
                self.n_fft
            )));
        }
        if self.n_fft < self.window_samples() {
            return Err(Error::Config(format!(
                "n_fft ({}) smaller than the window ({} samples)",
                self.n_fft,
                self.window_samples()
            )));
        }
        if self.n_mels == 0 {
            return Err(Error::Config("n_mels must be positive".into()));
        }
        if self.target_frames == 0 {
            return Err(Error::Config("target_frames must be positive".into()));
        }
        if self.log_floor <= 0.0 {
            return Err(Error::Config("log_floor must be positive".into()));
        }
        Ok(())
    }
}

const FSTS_MAGIC: &[u8; 4] = b"FSTS";

/// Dump a spectrogram: 16-byte header (magic "FSTS", u32 n_mels,
/// u32 frames, u32 reserved, little-endian) then float32 row-major values.
pub fn write_fsts<T: Scalar>(spec: &Spectrogram<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(FSTS_MAGIC)?;
    file.write_all(&(spec.n_mels() as u32).to_le_bytes())?;
    file.write_all(&(spec.frames() as u32).to_le_bytes())?;
    file.write_all(&0u32.to_le_bytes())?;
    let data = spec.values.data();
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for &v in data.iter() {
        bytes.extend_from_slice(&v.to_f32().to_le_bytes());
    }
    file.write_all(&bytes)?;
    Ok(())
}

/// Read a spectrogram dump back as (n_mels, frames, row-major values).
pub fn read_fsts(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f32>)> {
    let mut file = std::fs::File::open(path)?;
    let mut header = [0u8; 16];
    file.read_exact(&mut header).map_err(|_| Error::Parse {
        what: "spectrogram header truncated".into(),
        offset: Some(0),
        field: Some("header"),
    })?;
    if &header[0..4] != FSTS_MAGIC {
        return Err(Error::Parse {
            what: "bad spectrogram magic".into(),
            offset: Some(0),
            field: Some("magic"),
        });
    }
    let n_mels = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let frames = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw)?;
    let expected = n_mels * frames * 4;
    if raw.len() != expected {
        return Err(Error::Parse {
            what: format!("expected {expected} value bytes, found {}", raw.len()),
            offset: Some(16),
            field: Some("values"),
        });
    }
    let values = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((n_mels, frames, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_rejects_empty_and_nonfinite() {
        assert!(AudioClip::new(vec![], 16000).is_err());
        assert!(AudioClip::new(vec![f64::NAN], 16000).is_err());
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut cfg = SpectrogramConfig::with_geometry(128, 64);
        assert!(cfg.validate().is_ok());
        cfg.n_fft = 300;
        assert!(cfg.validate().is_err());
        cfg = SpectrogramConfig::with_geometry(128, 64);
        cfg.hop_ms = 50;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fsts_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.fsts");
        let spec = Spectrogram {
            values: crate::tensor::Tensor::<f32>::from_fn(&[3, 4, 1], |i| i as f32 * 0.25),
        };
        write_fsts(&spec, &path).unwrap();
        let (m, f, values) = read_fsts(&path).unwrap();
        assert_eq!((m, f), (3, 4));
        assert_eq!(values, spec.values.to_vec());
    }

    #[test]
    fn fsts_rejects_corrupt_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fsts");
        std::fs::write(&path, b"JUNKJUNKJUNKJUNK").unwrap();
        assert!(matches!(read_fsts(&path), Err(Error::Parse { .. })));
    }
}
