use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::matrix::NonnegMatrix;

/// Samples whose summed squared window falls below this are zeroed on synthesis.
pub const WINDOW_SUM_FLOOR: f64 = 1e-8;

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Half-spectrum STFT frames plus the framing metadata needed to invert them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: Vec<Vec<Complex64>>,
    fft_size: usize,
    hop: usize,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn new(frames: Vec<Vec<Complex64>>, fft_size: usize, hop: usize, sample_rate: u32) -> Result<Self> {
        check_sizes(fft_size, hop)?;
        let bins = fft_size / 2 + 1;
        if let Some(t) = frames.iter().position(|f| f.len() != bins) {
            return Err(Error::DimensionMismatch(format!(
                "frame {t} has {} bins, expected {bins}",
                frames[t].len()
            )));
        }
        Ok(Self { frames, fft_size, hop, sample_rate })
    }

    pub fn frames(&self) -> &[Vec<Complex64>] {
        &self.frames
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Number of samples covered by the frames.
    pub fn signal_len(&self) -> usize {
        match self.frames.len() {
            0 => 0,
            t => (t - 1) * self.hop + self.fft_size,
        }
    }

    /// Magnitudes as a `bins × frames` matrix.
    pub fn magnitude(&self) -> NonnegMatrix {
        NonnegMatrix::from_fn(self.bins(), self.frames.len(), |k, t| self.frames[t][k].norm())
    }

    /// Replaces magnitudes while keeping this spectrogram's phase.
    ///
    /// Bins with zero magnitude have no phase and are given phase zero.
    pub fn with_magnitude(&self, mag: &NonnegMatrix) -> Result<Self> {
        if mag.shape() != (self.bins(), self.frames.len()) {
            return Err(Error::DimensionMismatch(format!(
                "magnitude is {:?}, spectrogram is {:?}",
                mag.shape(),
                (self.bins(), self.frames.len())
            )));
        }
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(t, f)| {
                f.iter()
                    .enumerate()
                    .map(|(k, z)| {
                        let m = mag.get(k, t);
                        let r = z.norm();
                        if r > 0.0 {
                            z * (m / r)
                        } else {
                            Complex64::new(m, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { frames, ..*self })
    }
}

fn check_sizes(fft_size: usize, hop: usize) -> Result<()> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("fft size {fft_size} must be a power of two >= 2")));
    }
    if hop == 0 || hop > fft_size {
        return Err(Error::InvalidArgument(format!("hop {hop} must be in 1..={fft_size}")));
    }
    Ok(())
}

/// Hann-windowed STFT without padding; trailing samples that do not fill a frame are dropped.
pub fn stft(signal: &[f64], fft_size: usize, hop: usize, sample_rate: u32) -> Result<Spectrogram> {
    check_sizes(fft_size, hop)?;
    if signal.len() < fft_size {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is shorter than one frame ({fft_size})",
            signal.len()
        )));
    }
    let window = hann(fft_size);
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    let count = (signal.len() - fft_size) / hop + 1;
    let bins = fft_size / 2 + 1;
    let mut buf = vec![Complex64::default(); fft_size];
    let frames = (0..count)
        .map(|t| {
            let seg = &signal[t * hop..t * hop + fft_size];
            for ((b, &s), &w) in buf.iter_mut().zip(seg).zip(&window) {
                *b = Complex64::new(s * w, 0.0);
            }
            fft.process(&mut buf);
            buf[..bins].to_vec()
        })
        .collect();
    Ok(Spectrogram { frames, fft_size, hop, sample_rate })
}

/// Weighted overlap-add inverse of [`stft`].
pub fn istft(spec: &Spectrogram) -> Vec<f64> {
    let n = spec.fft_size;
    let window = hann(n);
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut out = vec![0.0; spec.signal_len()];
    let mut norm = vec![0.0; out.len()];
    let mut buf = vec![Complex64::default(); n];
    for (t, frame) in spec.frames.iter().enumerate() {
        buf[..frame.len()].copy_from_slice(frame);
        for k in 1..n - frame.len() + 1 {
            buf[n - k] = frame[k].conj();
        }
        ifft.process(&mut buf);
        let start = t * spec.hop;
        for i in 0..n {
            out[start + i] += buf[i].re / n as f64 * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for (o, &s) in out.iter_mut().zip(&norm) {
        if s < WINDOW_SUM_FLOOR {
            *o = 0.0;
        } else {
            *o /= s;
        }
    }
    out
}

/// Splits a mixture magnitude with Wiener masks built from two source estimates.
///
/// Bins where both estimates vanish are split evenly.
pub fn wiener_reconstruct(mix: &[f64], est1: &[f64], est2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if est1.len() != mix.len() || est2.len() != mix.len() {
        return Err(Error::DimensionMismatch(format!(
            "mixture has {} bins, estimates have {} and {}",
            mix.len(),
            est1.len(),
            est2.len()
        )));
    }
    let (x1, x2) = mix
        .iter()
        .zip(est1.iter().zip(est2))
        .map(|(&m, (&a, &b))| {
            let mask = if a + b > 0.0 { a / (a + b) } else { 0.5 };
            let x1 = mask * m;
            (x1, m - x1)
        })
        .unzip();
    Ok((x1, x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn naive_dft_magnitude(frame: &[f64], k: usize) -> f64 {
        let n = frame.len() as f64;
        let (re, im) = frame.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, &x)| {
            let a = -2.0 * PI * k as f64 * i as f64 / n;
            (re + x * a.cos(), im + x * a.sin())
        });
        re.hypot(im)
    }

    #[test]
    fn bin_centred_sinusoid_peaks_at_its_bin() {
        let omega = 2.0 * PI * 16.0 / 128.0;
        let x: Vec<f64> = (0..128).map(|n| (omega * n as f64).sin()).collect();
        let mag = stft(&x, 128, 128, 8000).unwrap().magnitude();
        assert_eq!(mag.rows(), 65);
        let col = mag.column(0);
        let peak = (0..65).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
        assert_eq!(peak + 1, 17);
    }

    #[test]
    fn magnitudes_match_naive_dft() {
        let mut rng = crate::plca::seeded_rng(3);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = hann(64);
        let windowed: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        let mag = stft(&x, 64, 64, 8000).unwrap().magnitude();
        for k in 0..33 {
            assert!((mag.get(k, 0) - naive_dft_magnitude(&windowed, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_signal_gives_zero_magnitudes() {
        let mag = stft(&[0.0; 512], 128, 64, 8000).unwrap().magnitude();
        assert!(mag.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_count_truncates() {
        let s = stft(&vec![1.0; 1000], 256, 100, 16000).unwrap();
        assert_eq!(s.num_frames(), (1000 - 256) / 100 + 1);
        assert_eq!(s.signal_len(), 7 * 100 + 256);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(stft(&[0.0; 100], 100, 50, 8000).is_err());
        assert!(stft(&[0.0; 100], 128, 64, 8000).is_err());
        assert!(stft(&[0.0; 256], 128, 0, 8000).is_err());
    }

    #[test]
    fn sign_flip_leaves_magnitude_unchanged() {
        let mut rng = crate::plca::seeded_rng(5);
        let x: Vec<f64> = (0..600).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(stft(&x, 128, 32, 8000).unwrap().magnitude(), stft(&neg, 128, 32, 8000).unwrap().magnitude());
    }

    #[test]
    fn white_noise_round_trip_interior() {
        let mut rng = crate::plca::seeded_rng(11);
        let x: Vec<f64> = (0..16384).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = istft(&stft(&x, 1024, 256, 16000).unwrap());
        let interior = 1024..y.len() - 1024;
        let err: f64 = interior.clone().map(|i| (y[i] - x[i]).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = interior.map(|i| x[i].powi(2)).sum::<f64>().sqrt();
        assert!(err / norm < 1e-6, "relative error {}", err / norm);
    }

    #[test]
    fn single_frame_is_unwindowed_away_from_edges() {
        let x: Vec<f64> = (0..128).map(|n| (n as f64 * 0.1).cos()).collect();
        let y = istft(&stft(&x, 128, 128, 8000).unwrap());
        assert_eq!(y[0], 0.0);
        for i in 1..128 {
            assert!((y[i] - x[i]).abs() < 1e-9, "sample {i}");
        }
    }

    #[test]
    fn zero_spectrogram_inverts_to_silence() {
        let spec = Spectrogram::new(vec![vec![Complex64::default(); 65]; 4], 128, 32, 8000).unwrap();
        assert!(istft(&spec).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn with_magnitude_keeps_phase() {
        let x: Vec<f64> = (0..256).map(|n| (n as f64 * 0.3).sin()).collect();
        let s = stft(&x, 128, 64, 8000).unwrap();
        let doubled = s.magnitude().scaled(2.0).unwrap();
        let t = s.with_magnitude(&doubled).unwrap();
        for (a, b) in s.frames().iter().flatten().zip(t.frames().iter().flatten()) {
            assert!((b - a * 2.0).norm() < 1e-9);
        }
    }

    #[test]
    fn wiener_examples() {
        let (a, b) = wiener_reconstruct(&[8.0, 8.0], &[3.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!((a, b), (vec![6.0, 2.0], vec![2.0, 6.0]));
        let (a, b) = wiener_reconstruct(&[5.0, 2.0], &[1.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!((a, b), (vec![5.0, 2.0], vec![0.0, 0.0]));
        let (a, b) = wiener_reconstruct(&[5.0, 2.0], &[0.7, 0.0], &[0.7, 0.0]).unwrap();
        assert_eq!((a, b), (vec![2.5, 1.0], vec![2.5, 1.0]));
    }

    #[test]
    fn wiener_masks_sum_to_mixture() {
        let mut rng = crate::plca::seeded_rng(2);
        let m: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..100.0)).collect();
        let e1: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..1.0)).collect();
        let e2: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (a, b) = wiener_reconstruct(&m, &e1, &e2).unwrap();
        for i in 0..500 {
            assert!(a[i] >= 0.0 && b[i] >= 0.0);
            assert!((a[i] + b[i] - m[i]).abs() <= 1e-12 * m[i].max(1.0));
        }
    }
}
