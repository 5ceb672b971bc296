//! Train speech-like and noise-like models from WAV files and denoise a mixture.
//!
//! Writes its files to a fresh directory under the system temp dir.

use std::f64::consts::PI;

use dnmf::dsp::{output_snr, read_wav, stft, write_wav};
use dnmf::dynamic::{train, FilterConfig, TrainConfig};
use dnmf::experiments::separate;

fn glide(rate: u32, seconds: f64, f0: f64, f1: f64) -> Vec<f64> {
    let n = (rate as f64 * seconds) as usize;
    let mut phase = 0.0f64;
    (0..n)
        .map(|i| {
            let f = f0 + (f1 - f0) * (2.0 * PI * i as f64 / n as f64).sin().abs();
            phase += 2.0 * PI * f / rate as f64;
            0.3 * phase.sin()
        })
        .collect()
}

fn main() -> dnmf::Result<()> {
    let rate = 16000;
    let dir = std::env::temp_dir().join("dnmf-denoise-example");
    std::fs::create_dir_all(&dir)?;
    let speech = glide(rate, 2.0, 200.0, 900.0);
    let noise = glide(rate, 2.0, 700.0, 2500.0);
    write_wav(dir.join("speech.wav"), &speech, rate)?;
    write_wav(dir.join("noise.wav"), &noise, rate)?;

    let cfg = TrainConfig { iters: 40, prior_start: 20, ..Default::default() };
    let model_of = |name: &str| -> dnmf::Result<_> {
        let (x, r) = read_wav(dir.join(name))?;
        Ok(train(&stft(&x, 1024, 256, r)?.magnitude(), 12, 1, &cfg)?.model)
    };
    let speech_model = model_of("speech.wav")?;
    let noise_model = model_of("noise.wav")?;

    let noisy: Vec<f64> = speech.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let spec = stft(&noisy, 1024, 256, rate)?;
    let (estimate, _) = separate(&spec, &speech_model, &noise_model, &FilterConfig { q: 0.3, ..Default::default() })?;
    write_wav(dir.join("denoised.wav"), &estimate, rate)?;

    let interior = 1024..estimate.len() - 1024;
    println!("input SNR  {:.2} dB", output_snr(&speech[interior.clone()], &noisy[interior.clone()])?);
    println!("output SNR {:.2} dB", output_snr(&speech[interior.clone()], &estimate[interior])?);
    println!("wrote {}", dir.join("denoised.wav").display());
    Ok(())
}
