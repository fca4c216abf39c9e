//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads PCM 16-bit and IEEE float32, mono or stereo (stereo is
//! mean-downmixed). Parse failures report the byte offset.

use super::AudioClip;
use crate::error::{Error, Result};
use std::path::Path;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, what: impl Into<String>) -> Error {
        Error::Parse {
            what: what.into(),
            offset: Some(self.pos as u64),
            field: None,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(format!(
                "truncated file: wanted {n} bytes, {} remain",
                self.bytes.len() - self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn tag(&mut self) -> Result<[u8; 4]> {
        let b = self.take(4)?;
        Ok([b[0], b[1], b[2], b[3]])
    }

    fn u32le(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u16le(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
}

struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Decode a WAV file into a mono clip in [-1, 1].
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let bytes = std::fs::read(path.as_ref())?;
    decode_wav(&bytes)
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.tag()? != b"RIFF" {
        r.pos = 0;
        return Err(r.err("missing RIFF magic"));
    }
    let _riff_size = r.u32le()?;
    if &r.tag()? != b"WAVE" {
        r.pos -= 4;
        return Err(r.err("missing WAVE form type"));
    }

    let mut format: Option<Format> = None;
    let mut data: Option<(usize, usize)> = None; // offset, len
    while r.pos + 8 <= bytes.len() {
        let id = r.tag()?;
        let size = r.u32le()? as usize;
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(r.err(format!("fmt chunk too small ({size} bytes)")));
                }
                let chunk_start = r.pos;
                let code = r.u16le()?;
                let channels = r.u16le()?;
                let sample_rate = r.u32le()?;
                let _byte_rate = r.u32le()?;
                let _block_align = r.u16le()?;
                let bits = r.u16le()?;
                format = Some(Format {
                    code,
                    channels,
                    sample_rate,
                    bits,
                });
                r.pos = chunk_start + size + (size & 1);
            }
            b"data" => {
                if r.pos + size > bytes.len() {
                    return Err(r.err(format!(
                        "data chunk claims {size} bytes but file ends early"
                    )));
                }
                data = Some((r.pos, size));
                r.pos += size + (size & 1);
            }
            _ => {
                // skip unknown chunk, honoring the RIFF pad byte
                if r.pos + size > bytes.len() {
                    return Err(r.err("chunk overruns file"));
                }
                r.pos += size + (size & 1);
            }
        }
    }

    let format = format.ok_or_else(|| Error::Parse {
        what: "no fmt chunk".into(),
        offset: Some(12),
        field: Some("fmt"),
    })?;
    let (data_off, data_len) = data.ok_or_else(|| Error::Parse {
        what: "no data chunk".into(),
        offset: Some(12),
        field: Some("data"),
    })?;

    if format.channels == 0 || format.channels > 2 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels (mono or stereo only)",
            format.channels
        )));
    }
    if format.sample_rate == 0 {
        return Err(Error::Parse {
            what: "zero sample rate".into(),
            offset: None,
            field: Some("sample_rate"),
        });
    }

    let raw = &bytes[data_off..data_off + data_len];
    let ch = format.channels as usize;
    let samples: Vec<f64> = match (format.code, format.bits) {
        (1, 16) => {
            let per = 2 * ch;
            raw.chunks_exact(per)
                .map(|frame| {
                    let mut acc = 0.0;
                    for c in 0..ch {
                        let v = i16::from_le_bytes([frame[2 * c], frame[2 * c + 1]]);
                        acc += v as f64 / 32768.0;
                    }
                    acc / ch as f64
                })
                .collect()
        }
        (3, 32) => {
            let per = 4 * ch;
            raw.chunks_exact(per)
                .map(|frame| {
                    let mut acc = 0.0;
                    for c in 0..ch {
                        let v = f32::from_le_bytes([
                            frame[4 * c],
                            frame[4 * c + 1],
                            frame[4 * c + 2],
                            frame[4 * c + 3],
                        ]);
                        acc += v as f64;
                    }
                    acc / ch as f64
                })
                .collect()
        }
        (code, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "wav format code {code} at {bits} bits (PCM16 or float32 only)"
            )))
        }
    };

    if samples.is_empty() {
        return Err(Error::Parse {
            what: "empty data chunk".into(),
            offset: Some(data_off as u64),
            field: Some("data"),
        });
    }

    AudioClip::new(samples, format.sample_rate)
}

/// Write a mono PCM16 WAV (values clamped to [-1, 1]).
pub fn write_wav_pcm16(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}
