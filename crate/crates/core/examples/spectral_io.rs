//! STFT analysis and resynthesis, Wiener masking and SNR bookkeeping.

use dnmf::dsp::{add_white_noise, input_snr, istft, output_snr, stft, wiener_reconstruct};
use dnmf::plca::seeded_rng;
use dnmf::NonnegMatrix;

fn main() -> dnmf::Result<()> {
    let rate = 16000;
    let tone: Vec<f64> = (0..rate).map(|n| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * n as f64 / rate as f64).sin()).collect();
    let mut rng = seeded_rng(0);
    let noisy = add_white_noise(&tone, 0.0, &mut rng)?;
    println!("input SNR {:.3} dB", input_snr(&tone, &noisy)?);

    let mix = stft(&noisy, 1024, 256, rate as u32)?;
    let resynth = istft(&mix);
    let interior = 1024..resynth.len() - 1024;
    println!(
        "round trip SNR {:.1} dB",
        output_snr(&noisy[interior.clone()], &resynth[interior.clone()])?
    );

    // Oracle masks from the clean and noise spectra.
    let clean = stft(&tone, 1024, 256, rate as u32)?.magnitude();
    let noise: Vec<f64> = noisy.iter().zip(&tone).map(|(a, b)| a - b).collect();
    let noise = stft(&noise, 1024, 256, rate as u32)?.magnitude();
    let mag = mix.magnitude();
    let cols: Vec<Vec<f64>> = (0..mag.cols())
        .map(|t| wiener_reconstruct(&mag.column(t), &clean.column(t), &noise.column(t)).map(|(a, _)| a))
        .collect::<dnmf::Result<_>>()?;
    let estimate = istft(&mix.with_magnitude(&NonnegMatrix::from_columns(mag.rows(), &cols)?)?);
    println!(
        "oracle Wiener output SNR {:.2} dB",
        output_snr(&tone[interior.clone()], &estimate[interior])?
    );
    Ok(())
}
