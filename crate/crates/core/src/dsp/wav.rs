use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const SUPPORTED_RATES: [u32; 2] = [8000, 16000];

fn check_rate(rate: u32) -> Result<()> {
    if SUPPORTED_RATES.contains(&rate) {
        Ok(())
    } else {
        Err(Error::UnsupportedAudio(format!("sample rate {rate} Hz; expected 8000 or 16000")))
    }
}

fn audio_err(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(e) => Error::Io(e.to_string()),
        other => Error::UnsupportedAudio(other.to_string()),
    }
}

/// Reads a mono 16-bit PCM file as samples in [-1, 1) and its sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let reader = WavReader::open(path).map_err(audio_err)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedAudio(format!(
            "{} bit {:?} samples; only 16-bit integer PCM is supported",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    if spec.channels != 1 {
        return Err(Error::UnsupportedAudio(format!("{} channels; only mono is supported", spec.channels)));
    }
    check_rate(spec.sample_rate)?;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(audio_err)?;
    Ok((samples, spec.sample_rate))
}

/// Writes samples as mono 16-bit PCM, clipping to the representable range.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    check_rate(sample_rate)?;
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(audio_err)?;
    for &s in samples {
        let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(v).map_err(audio_err)?;
    }
    writer.finalize().map_err(audio_err)
}
