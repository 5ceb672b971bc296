use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn snr_db(reference: &[f64], other: &[f64]) -> Result<f64> {
    if reference.len() != other.len() {
        return Err(Error::DimensionMismatch(format!(
            "signals have {} and {} samples",
            reference.len(),
            other.len()
        )));
    }
    let err: f64 = reference.iter().zip(other).map(|(x, y)| (y - x) * (y - x)).sum();
    if err == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    Ok(10.0 * (energy(reference) / err).log10())
}

/// SNR of a noisy observation against the clean signal, in dB.
pub fn input_snr(clean: &[f64], noisy: &[f64]) -> Result<f64> {
    snr_db(clean, noisy)
}

/// SNR of a source estimate against its reference, in dB.
pub fn output_snr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    snr_db(reference, estimate)
}

/// Adds `noise` scaled so the result has input SNR `target_db` against `signal`.
pub fn mix_at_snr(signal: &[f64], noise: &[f64], target_db: f64) -> Result<Vec<f64>> {
    if signal.len() != noise.len() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} samples, noise has {}",
            signal.len(),
            noise.len()
        )));
    }
    if !target_db.is_finite() {
        return Err(Error::InvalidArgument(format!("target SNR {target_db} dB must be finite")));
    }
    let (es, en) = (energy(signal), energy(noise));
    if es == 0.0 || en == 0.0 {
        return Err(Error::InvalidArgument("signal and noise must both have nonzero energy".into()));
    }
    let gain = (es / (en * 10f64.powf(target_db / 10.0))).sqrt();
    Ok(signal.iter().zip(noise).map(|(s, n)| s + gain * n).collect())
}

/// Standard Gaussian samples.
pub fn white_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Adds white Gaussian noise at the given input SNR.
pub fn add_white_noise<R: Rng + ?Sized>(signal: &[f64], target_db: f64, rng: &mut R) -> Result<Vec<f64>> {
    mix_at_snr(signal, &white_noise(signal.len(), rng), target_db)
}
