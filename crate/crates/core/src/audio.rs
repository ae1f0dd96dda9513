//! WAV reading and writing.
//!
//! Integer PCM (16/24/32-bit) and 32-bit float files are accepted and
//! normalized to full-scale ±1.0. Output is always written as 32-bit float
//! so that augmented mixes keep their headroom.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::acoustics::{AcousticsError, Waveform};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported sample format ({bits}-bit {kind})")]
    UnsupportedFormat {
        path: PathBuf,
        bits: u16,
        kind: &'static str,
    },
    #[error("{path}: file contains no samples")]
    Empty { path: PathBuf },
    #[error("{path}: expected a mono file, found {channels} channels")]
    NotMono { path: PathBuf, channels: usize },
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Decoded audio file: one sample vector per channel.
#[derive(Debug, Clone)]
pub struct AudioFile {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

impl AudioFile {
    pub fn duration(&self) -> f64 {
        self.channels
            .first()
            .map(|c| c.len() as f64 / f64::from(self.sample_rate))
            .unwrap_or(0.0)
    }
}

pub fn read_audio(path: &Path) -> Result<AudioFile, AudioError> {
    let fmt = |source| AudioError::Format {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(fmt)?;
    let spec = reader.spec();
    let channel_count = spec.channels as usize;

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(fmt)?,
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<Result<_, _>>()
                .map_err(fmt)?
        }
        (format, bits) => {
            return Err(AudioError::UnsupportedFormat {
                path: path.to_path_buf(),
                bits,
                kind: match format {
                    hound::SampleFormat::Float => "float",
                    hound::SampleFormat::Int => "int",
                },
            })
        }
    };

    if interleaved.is_empty() || channel_count == 0 {
        return Err(AudioError::Empty {
            path: path.to_path_buf(),
        });
    }

    let frames = interleaved.len() / channel_count;
    let mut channels = vec![Vec::with_capacity(frames); channel_count];
    for (i, sample) in interleaved.into_iter().enumerate() {
        channels[i % channel_count].push(sample);
    }
    Ok(AudioFile {
        channels,
        sample_rate: spec.sample_rate,
    })
}

/// Reads a mono file as a calibrated waveform.
pub fn read_mono_waveform(path: &Path, calibration_db: f64) -> Result<Waveform, AudioError> {
    let file = read_audio(path)?;
    if file.channels.len() != 1 {
        return Err(AudioError::NotMono {
            path: path.to_path_buf(),
            channels: file.channels.len(),
        });
    }
    let samples = file.channels.into_iter().next().expect("one channel");
    Ok(Waveform::new(
        samples,
        f64::from(file.sample_rate),
        calibration_db,
    )?)
}

/// Writes a waveform as a mono 32-bit float WAV.
pub fn write_waveform(path: &Path, w: &Waveform) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate().round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let fmt = |source| AudioError::Format {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(fmt)?;
    for &s in w.samples() {
        writer.write_sample(s as f32).map_err(fmt)?;
    }
    writer.finalize().map_err(fmt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_wav(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("amss-audio-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn float_round_trip_preserves_samples() {
        let path = temp_wav("roundtrip.wav");
        let samples: Vec<f64> = (0..480).map(|i| (i as f64 / 480.0) * 0.5 - 0.25).collect();
        let w = Waveform::new(samples.clone(), 48_000.0, 94.0).unwrap();
        write_waveform(&path, &w).unwrap();
        let back = read_mono_waveform(&path, 94.0).unwrap();
        assert_eq!(back.sample_rate(), 48_000.0);
        assert_eq!(back.samples().len(), samples.len());
        for (a, b) in back.samples().iter().zip(samples.iter()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn decodes_16_bit_stereo() {
        let path = temp_wav("stereo16.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 32_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..100i32 {
            writer.write_sample((i * 100) as i16).unwrap();
            writer.write_sample(-(i * 100) as i16).unwrap();
        }
        writer.finalize().unwrap();

        let file = read_audio(&path).unwrap();
        assert_eq!(file.channels.len(), 2);
        assert_eq!(file.channels[0].len(), 100);
        assert!((file.channels[0][1] - 100.0 / 32768.0).abs() < 1e-9);
        assert!((file.channels[1][1] + 100.0 / 32768.0).abs() < 1e-9);
        assert!(read_mono_waveform(&path, 94.0).is_err());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_audio(Path::new("/nonexistent/nope.wav")).unwrap_err();
        assert!(err.to_string().contains("nope.wav"));
    }
}
